// Cartesian state to orbital features, Keplerian and equinoctial elements
// for the 12 hour retrograde HEO.

use ast_orbit::coords::{eci_to_equinoctial, eci_to_keplerian};
use ast_orbit::elements::RtnBasis;
use ast_orbit::harness::Scenario;

pub fn run_example() -> ast_orbit::Result<()> {
    let s = Scenario::from_json(
        r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "inclination_deg": 158,
            "p_sigma": 2.5, "p_tau": 20, "seed": 0,
            "units": {"mode": "physical", "period_hours": 12}}"#,
    )?;
    let setup = s.setup()?;
    let c = &setup.central;
    let f = &c.features;
    let (a, b, cc) = c.abc();
    println!("A = {a:.1} km, B = {b:.3} km/s, C = {cc:.3} km/s");
    println!("a = {:.1} km, period = {:.3} h", f.a, f.p / 3600.0);
    println!("r_a = {:.0} km, r_p = {:.0} km", f.apogee_radius(), f.perigee_radius());
    println!("v_a = {:.3} km/s, v_p = {:.3} km/s", f.apogee_speed(), f.perigee_speed());

    let k = eci_to_keplerian(&c.state, &RtnBasis::standard(), setup.mu)?;
    println!(
        "i = {:.3}°, Ω = {:.3}°, ω = {:.3}°, T = {:.3}°",
        k.i.to_degrees(),
        k.raan.to_degrees(),
        k.argp.to_degrees(),
        k.true_anomaly.to_degrees()
    );
    let eq = eci_to_equinoctial(&c.state, &RtnBasis::standard(), setup.mu)?;
    println!("equinoctial (standard basis): {:.6?}", eq.to_vector().as_slice());
    // the same state seen from its own RTN basis has zero inclination
    let own = eci_to_equinoctial(&c.state, &f.basis, setup.mu)?;
    println!("equinoctial (own basis):      {:.6?}", own.to_vector().as_slice());
    Ok(())
}

fn main() -> ast_orbit::Result<()> {
    run_example()
}
