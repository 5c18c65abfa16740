// How close to linear is the map from CRTN deviations to AST coordinates
// over ±2 standard deviations?

use ast_orbit::harness::{run_linearity, Scenario};

pub fn run_example() -> ast_orbit::Result<()> {
    let s = Scenario::from_json(r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "p_sigma": 2.5, "p_tau": 20, "seed": 0}"#)?;
    let report = run_linearity(&s)?;
    println!("σ = {:.5}, τ = {:.3}", report.sigma, report.tau);
    println!("R² by AST row and deviation column (· = flat to first order):");
    for i in 1..=6 {
        let cells: Vec<String> = (1..=6)
            .map(|j| {
                let p = report.panel(i, j).expect("36 panels");
                match (p.flat, p.r_squared) {
                    (true, _) => "     ·".to_string(),
                    (false, Some(r)) => format!("{r:6.4}"),
                    (false, None) => "     -".to_string(),
                }
            })
            .collect();
        println!("  A{i}: {}", cells.join(" "));
    }
    if let Some(p) = report.minimum() {
        println!("minimum R² {:.4} at (A{}, dev {})", p.r_squared.unwrap_or(f64::NAN), p.ast_index, p.deviation_index);
    }
    for p in report.incomplete() {
        let missing = p.values.iter().filter(|v| v.is_none()).count();
        println!("panel (A{}, dev {}) has {missing} unbound grid point(s)", p.ast_index, p.deviation_index);
    }
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
