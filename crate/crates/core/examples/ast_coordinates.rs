// AST coordinates of deviated states and their exactly linear propagation.

use ast_orbit::coords::{ast_to_eci, eci_to_ast};
use ast_orbit::harness::Scenario;
use nalgebra::Vector6;

pub fn run_example() -> ast_orbit::Result<()> {
    let s = Scenario::from_json(r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "p_sigma": 2.5, "p_tau": 20, "seed": 0}"#)?;
    let setup = s.setup()?;
    let c = setup.central;
    println!("central AST: {:.6?}", c.ast().to_vector().as_slice());

    let dev = Vector6::new(0.5 * setup.sigma, -0.3 * setup.sigma, 0.2 * setup.sigma, 0.1 * setup.tau, -0.4 * setup.tau, 0.3 * setup.tau);
    let x0 = c.from_deviation(&dev, 0.0);
    let a0 = eci_to_ast(&x0, &c)?;
    println!("deviated AST: {:.6?}", a0.to_vector().as_slice());

    // propagation only moves a3, at rate a6
    for periods in [0.25, 1.0, 10.0] {
        let t = periods * setup.period;
        let exact = eci_to_ast(&x0.propagate(setup.mu, t)?, &c)?;
        let linear = a0.propagated(t);
        let back = ast_to_eci(&linear, &c, t)?;
        println!(
            "t = {periods:5.2} periods: |ΔA| = {:.2e}, |Δr| = {:.2e}, winding {}",
            (exact.to_vector() - linear.to_vector()).amax(),
            (back.position - x0.propagate(setup.mu, t)?.position).norm(),
            (linear.a3 / std::f64::consts::TAU).floor()
        );
    }
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
