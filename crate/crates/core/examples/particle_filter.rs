// Bootstrap particle filter against the exact Kalman answer on a linear
// measurement, then systematic resampling on its own.

use ast_orbit::filters::{systematic_resample, update_pf_with, update_with, FilterKind, GaussianState, LinearModel, UpdateConfig};
use nalgebra::{Matrix2, Matrix2x6, Matrix6, Vector2, Vector6};

pub fn run_example() -> ast_orbit::Result<()> {
    let prior = GaussianState::new(
        Vector6::new(0.0, 0.0, 1.0, 0.2, 0.1, 1.0),
        Matrix6::from_diagonal(&Vector6::new(1e-2, 1e-2, 0.25, 1e-2, 1e-2, 4e-2)),
        0.0,
    )?;
    let mut h = Matrix2x6::zeros();
    h[(0, 2)] = 1.0;
    h[(1, 5)] = 1.0;
    let model = LinearModel::new(h);
    let z = Vector2::new(1.3, 0.9);
    let r = Matrix2::from_diagonal(&Vector2::new(0.01, 0.01));

    let kalman = update_with(&model, &prior, &z, &r, &UpdateConfig::with_kind(FilterKind::Ekf))?;
    let cfg = UpdateConfig {
        pf_particles: 200_000,
        rng_seed: 7,
        ..UpdateConfig::with_kind(FilterKind::Pf)
    };
    let pf = update_pf_with(&model, &prior, &z, &r, &cfg)?;
    for k in [2, 5] {
        println!(
            "x{}: kalman {:.5} ± {:.5}   particles {:.5} ± {:.5} (se {:.1e}, ess {:.0})",
            k + 1,
            kalman.state.mean[k],
            kalman.state.covariance[(k, k)].sqrt(),
            pf.mean[k],
            pf.sd(k),
            pf.standard_error(k),
            pf.ess
        );
    }

    let picks = systematic_resample(&[0.1, 0.0, 0.6, 0.3], 0.05);
    println!("systematic resampling of [0.1, 0, 0.6, 0.3]: {picks:?}");
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
