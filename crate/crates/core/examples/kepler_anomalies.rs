// Mean, eccentric and true anomalies on the unwrapped real line.

use ast_orbit::kepler::{mean_to_true, solve_kepler, true_to_mean, true_to_mean_derivative, Eccentricity};

pub fn run_example() -> ast_orbit::Result<()> {
    let e = Eccentricity::new(0.7)?;

    // the observation used in the single-update example
    let phi = true_to_mean(225.5f64.to_radians(), e)?;
    println!("F_T-to-M(225.5°, 0.7) = {:.4}°", phi.to_degrees());

    for m_deg in [0.0, 45.0, 180.0, 310.0, 720.0 + 10.0] {
        let m = f64::to_radians(m_deg);
        let ecc = solve_kepler(m, e)?;
        let t = mean_to_true(m, e)?;
        println!(
            "M = {m_deg:6.1}°  E = {:9.4}°  T = {:9.4}°  residual {:.1e}",
            ecc.to_degrees(),
            t.to_degrees(),
            (ecc - e.value() * ecc.sin() - m).abs()
        );
    }

    // dM/dT is small near perigee and large near apogee
    for t_deg in [0.0, 90.0, 180.0] {
        println!("dM/dT at T = {t_deg:5.1}°: {:.4}", true_to_mean_derivative(f64::to_radians(t_deg), e));
    }
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
