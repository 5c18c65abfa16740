// 200 hourly angles-only observations of a 12 hour HEO with the iterated
// unscented filter in AST coordinates.

use ast_orbit::filters::UpdateConfig;
use ast_orbit::harness::{run_tracking, Scenario};

pub fn run_example() -> ast_orbit::Result<()> {
    let s = Scenario::from_json(
        r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "inclination_deg": 158, "p_sigma": 2.5, "p_tau": 20,
            "seed": 1, "units": {"mode": "physical", "period_hours": 12}, "tracking": {}}"#,
    )?;
    let spec = s.tracking.unwrap_or_default();
    let report = run_tracking(&s, &spec, &UpdateConfig::default())?;
    for (k, step) in report.record.steps.iter().enumerate() {
        if [0, 9, 49, 199].contains(&k) {
            let sd = step.posterior.std_devs();
            println!("step {:3}: sd(a3) = {:.3e} rad, sd(a6) = {:.3e} rad/s", k + 1, sd[2], sd[5]);
        }
    }
    if let Some(sl) = report.slopes {
        println!("log-log variance slopes:  {:.2?}", sl.variance);
        println!("log-log |error| slopes:   {:.2?}", sl.abs_error);
    }
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
