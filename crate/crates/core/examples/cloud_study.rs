// Propagate a Gaussian cloud of states for half a period and test its
// normality in Cartesian, equinoctial and AST coordinates.

use ast_orbit::harness::{run_cloud_study, Scenario};
use ast_orbit::stats::CoordinateSystem;

pub fn run_example() -> ast_orbit::Result<()> {
    let s = Scenario::from_json(
        r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "inclination_deg": 158, "p_sigma": 2.5, "p_tau": 20,
            "n_points": 2000, "propagation": {"periods": 0.5}, "seed": 2, "unbound_policy": "discard"}"#,
    )?;
    let study = run_cloud_study(&s)?;
    println!("{} of {} sampled states were unbound and dropped", study.n_rejected, study.n_requested);
    for sys in [CoordinateSystem::Eci, CoordinateSystem::Equinoctial, CoordinateSystem::Ast] {
        let r = study.system(sys).expect("propagated system");
        println!(
            "{:>12}: skewness p = {:.3e}, kurtosis p = {:.3e}",
            sys.name(),
            r.normality.p_skewness,
            r.normality.p_kurtosis
        );
    }
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
