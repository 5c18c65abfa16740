// One hard update: broad prior on a3, a 2 arc-second observation far in
// the prior tail. Linearizing at the prior mean goes badly wrong.

use ast_orbit::filters::FilterKind;
use ast_orbit::harness::{run_one_step, OneStepSpec, Scenario};

pub fn run_example() -> ast_orbit::Result<()> {
    let s = Scenario::from_json(r#"{"eccentricity": 0.7, "true_anomaly_deg": 0, "p_sigma": 2.5, "p_tau": 20, "seed": 3}"#)?;
    let spec = OneStepSpec::default();
    // the particle filter needs millions of draws here; see the `update` command
    let filters = [FilterKind::Ukf, FilterKind::Ekf, FilterKind::Iekf, FilterKind::Ocekf, FilterKind::Iukf, FilterKind::Ocukf];
    let report = run_one_step(&s, &spec, &filters, s.seed)?;
    println!("observation on the mean-anomaly scale: {:.4}°", report.observation_center_a3_deg);
    println!("{:>6} {:>12} {:>12} {:>5}", "filter", "mean a3 (°)", "sd a3 (°)", "iter");
    for row in &report.rows {
        match (row.mean_a3_deg, row.sd_a3_deg) {
            (Some(m), Some(sd)) => println!("{:>6} {m:12.4} {sd:12.3e} {:>5}", row.filter, row.iterations.unwrap_or(0)),
            _ => println!("{:>6} failed: {}", row.filter, row.error.as_deref().unwrap_or("?")),
        }
    }
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
