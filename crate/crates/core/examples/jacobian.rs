// Closed-form first-order map from CRTN deviations to AST deviations,
// checked against central differences of the exact conversion.

use ast_orbit::coords::{ast_jacobian, eci_to_ast};
use ast_orbit::harness::Scenario;
use nalgebra::{Matrix6, Vector6};

pub fn run_example() -> ast_orbit::Result<()> {
    let s = Scenario::from_json(r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "p_sigma": 2.5, "p_tau": 20, "seed": 0}"#)?;
    let c = s.setup()?.central;
    let jac = ast_jacobian(&c);
    println!("J = {:.5}", jac.j);
    println!("D = {:.6}, P1 = {:.6}, P2 = {:.6}", jac.d, jac.p1, jac.p2);

    let mut fd = Matrix6::zeros();
    let h = 1e-6;
    for k in 0..6 {
        let step = Vector6::ith(k, h);
        let up = eci_to_ast(&c.from_deviation(&step, 0.0), &c)?.to_vector();
        let down = eci_to_ast(&c.from_deviation(&-step, 0.0), &c)?.to_vector();
        fd.set_column(k, &((up - down) / (2.0 * h)));
    }
    println!("max |J - J_fd| = {:.2e}", (jac.j - fd).amax());
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
