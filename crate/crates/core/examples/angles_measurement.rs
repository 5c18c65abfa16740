// Angles-only observations on the CRTN sphere: prediction from AST
// coordinates and simulated noisy observations.

use ast_orbit::coords::eci_to_ast;
use ast_orbit::harness::Scenario;
use ast_orbit::measurement::{predict_angles, simulate_measurement, true_angles};

pub fn run_example() -> ast_orbit::Result<()> {
    let s = Scenario::from_json(r#"{"eccentricity": 0.7, "true_anomaly_deg": 0, "inclination_deg": 30, "p_sigma": 2.5, "p_tau": 20, "seed": 0}"#)?;
    let setup = s.setup()?;
    let c = setup.central;
    let sigma = 0.1f64.to_radians();
    for k in 1..=4 {
        let t = 0.2 * k as f64 * setup.period;
        let truth = c.propagate(t)?;
        let (lon, lat) = predict_angles(&eci_to_ast(&truth, &c)?)?;
        let (tl, tp) = true_angles(&truth, &c)?;
        let m = simulate_measurement(&truth, &c, sigma, sigma, k)?;
        println!(
            "t = {:.2} periods  predicted ({:8.3}°, {:6.3}°)  geometric ({:8.3}°, {:6.3}°)  observed ({:8.3}°, {:6.3}°)",
            t / setup.period,
            lon.to_degrees(),
            lat.to_degrees(),
            tl.to_degrees(),
            tp.to_degrees(),
            m.longitude.to_degrees(),
            m.latitude.to_degrees()
        );
    }
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
