//! Angles-only observations from an ideal observer at the centre of the earth.
//!
//! Angles live on the CRTN sphere: longitude is measured in the central
//! orbital plane from the central radial direction, latitude out of it.

use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coords::{AstCoordinates, CentralState};
use crate::elements::StateVector;
use crate::error::{Error, Result};
use crate::kepler::wrap_pi;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglesOnlyMeasurement {
    /// `θ_obs` in `[-π, π)`.
    pub longitude: f64,
    /// `ψ_obs` in `[-π/2, π/2]`.
    pub latitude: f64,
    pub sigma_long: f64,
    pub sigma_lat: f64,
    /// Seconds since the central epoch.
    pub time: f64,
}

impl AnglesOnlyMeasurement {
    pub fn new(longitude: f64, latitude: f64, sigma_long: f64, sigma_lat: f64, time: f64) -> Result<Self> {
        if !(longitude.is_finite() && latitude.abs() <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "angles ({longitude}, {latitude}) out of range"
            )));
        }
        if !(sigma_long >= 0.0 && sigma_lat >= 0.0) {
            return Err(Error::Domain("measurement sigmas must be non-negative".into()));
        }
        Ok(Self {
            longitude: wrap_pi(longitude),
            latitude,
            sigma_long,
            sigma_lat,
            time,
        })
    }

    pub fn angles(&self) -> Vector2<f64> {
        Vector2::new(self.longitude, self.latitude)
    }

    pub fn direction(&self) -> UnitDirection {
        angles_to_unit(self.longitude, self.latitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitDirection {
    pub z: Vector3<f64>,
}

impl UnitDirection {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateState("direction has zero length"));
        }
        Ok(Self { z: v / n })
    }
}

pub fn angles_to_unit(longitude: f64, latitude: f64) -> UnitDirection {
    let (sl, cl) = longitude.sin_cos();
    let (sp, cp) = latitude.sin_cos();
    UnitDirection {
        z: Vector3::new(cp * cl, cp * sl, sp),
    }
}

/// `(longitude in [-π, π), latitude)` of a unit direction.
pub fn unit_to_angles(u: &UnitDirection) -> (f64, f64) {
    (wrap_pi(u.z.y.atan2(u.z.x)), u.z.z.clamp(-1.0, 1.0).asin())
}

/// Predicted `(longitude, latitude)` for AST coordinates at the epoch of `a3`.
///
/// The longitude is continuous in the state: it stays on the same winding as
/// the remapped true longitude `θ_p + T`, so it can exceed `[-π, π)`.
/// Callers comparing against an observation align branches themselves.
pub fn predict_angles(a: &AstCoordinates) -> Result<(f64, f64)> {
    let theta = a.true_longitude()?;
    let (f, g, _) = a.frame();
    let (st, ct) = theta.sin_cos();
    let z = f * ct + g * st;
    let geometric = z.y.atan2(z.x);
    Ok((theta + wrap_pi(geometric - theta), z.z.clamp(-1.0, 1.0).asin()))
}

/// Latitude from the spherical-triangle form `asin(sin i · sin(ω + T))`,
/// with `i`, `Ω`, `ω`, `T` taken from the AST coordinates.
pub fn latitude_from_elements(a: &AstCoordinates) -> Result<f64> {
    let i = a.inclination();
    let raan = a.a2.atan2(a.a1);
    let argp = a.theta_p() - raan;
    let t = a.true_anomaly()?;
    Ok((i.sin() * (argp + t).sin()).clamp(-1.0, 1.0).asin())
}

/// Rotates an ECI line of sight into CRTN longitude and latitude.
pub fn eci_direction_to_crtn(d: &Vector3<f64>, c: &CentralState) -> Result<(f64, f64)> {
    let u = UnitDirection::new(c.rotation.transpose() * d)?;
    Ok(unit_to_angles(&u))
}

/// A line of sight reported in the inertial frame, before conversion to CRTN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EciObservation {
    pub direction: Vector3<f64>,
    /// Absolute epoch, same clock as [`StateVector::epoch`].
    pub epoch: f64,
    pub sigma_long: f64,
    pub sigma_lat: f64,
}

impl EciObservation {
    pub fn to_crtn(&self, c: &CentralState) -> Result<AnglesOnlyMeasurement> {
        let (lon, lat) = eci_direction_to_crtn(&self.direction, c)?;
        AnglesOnlyMeasurement::new(lon, lat, self.sigma_long, self.sigma_lat, self.epoch - c.epoch())
    }

    pub fn from_crtn(m: &AnglesOnlyMeasurement, c: &CentralState) -> Self {
        Self {
            direction: c.rotation * m.direction().z,
            epoch: c.epoch() + m.time,
            sigma_long: m.sigma_long,
            sigma_lat: m.sigma_lat,
        }
    }
}

/// Noise-free CRTN angles of a Cartesian state.
pub fn true_angles(truth: &StateVector, c: &CentralState) -> Result<(f64, f64)> {
    eci_direction_to_crtn(&truth.position, c)
}

/// Draws one observation of `truth` with independent Gaussian angle noise
/// from the supplied generator.
pub fn simulate_measurement_with<R: rand::Rng + ?Sized>(
    truth: &StateVector,
    c: &CentralState,
    sigma_long: f64,
    sigma_lat: f64,
    rng: &mut R,
) -> Result<AnglesOnlyMeasurement> {
    let (lon, lat) = true_angles(truth, c)?;
    let nl = Normal::new(0.0, sigma_long).map_err(|e| Error::Domain(e.to_string()))?;
    let np = Normal::new(0.0, sigma_lat).map_err(|e| Error::Domain(e.to_string()))?;
    let mut lon = lon + nl.sample(rng);
    // reflect through the pole rather than clamp so the noise stays symmetric
    let mut lat = lat + np.sample(rng);
    if lat > std::f64::consts::FRAC_PI_2 {
        lat = std::f64::consts::PI - lat;
        lon += std::f64::consts::PI;
    } else if lat < -std::f64::consts::FRAC_PI_2 {
        lat = -std::f64::consts::PI - lat;
        lon += std::f64::consts::PI;
    }
    AnglesOnlyMeasurement::new(lon, lat, sigma_long, sigma_lat, truth.epoch - c.epoch())
}

/// Seeded single observation; identical seeds give identical output.
pub fn simulate_measurement(
    truth: &StateVector,
    c: &CentralState,
    sigma_long: f64,
    sigma_lat: f64,
    rng_seed: u64,
) -> Result<AnglesOnlyMeasurement> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    simulate_measurement_with(truth, c, sigma_long, sigma_lat, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::eci_to_ast;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;
    use std::f64::consts::FRAC_PI_2;

    fn example3_central() -> CentralState {
        // e = 0.7 with the central state at perigee, so θ_p = 0
        let e: f64 = 0.7;
        let h = (1.0 - e * e).sqrt();
        let a = h * h / (1.0 + e);
        CentralState::from_crtn(a, 0.0, h / a, &Matrix3::identity(), 1.0, 0.0).unwrap()
    }

    #[test]
    fn unit_vectors() {
        assert_relative_eq!(angles_to_unit(0.0, 0.0).z, Vector3::x(), epsilon = 1e-15);
        assert_relative_eq!(angles_to_unit(FRAC_PI_2, 0.0).z, Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn equatorial_latitude_is_zero() {
        let c = example3_central();
        for k in 0..20 {
            let a = c.ast().propagated(k as f64 * 0.37);
            assert_eq!(predict_angles(&a).unwrap().1, 0.0);
        }
    }

    #[test]
    fn example_three_longitude() {
        let c = example3_central();
        let a = AstCoordinates { a3: 310f64.to_radians(), ..c.ast() };
        let (lon, lat) = predict_angles(&a).unwrap();
        assert!((wrap_pi(lon).to_degrees() - (225.5 - 360.0)).abs() < 0.05);
        assert_eq!(lat, 0.0);
    }

    #[test]
    fn prediction_matches_geometry_of_state() {
        let c = example3_central();
        let dev = nalgebra::Vector6::new(0.01, 0.02, -0.03, 0.01, -0.02, 0.04);
        let s = c.from_deviation(&dev, 0.0).propagate(1.0, 3.1).unwrap();
        let a = eci_to_ast(&s, &c).unwrap();
        let (lon, lat) = predict_angles(&a).unwrap();
        let (tl, tp) = true_angles(&s, &c).unwrap();
        assert_relative_eq!(wrap_pi(lon), tl, epsilon = 1e-10);
        assert_relative_eq!(lat, tp, epsilon = 1e-10);
        assert_relative_eq!(latitude_from_elements(&a).unwrap(), lat, epsilon = 1e-10);
    }

    #[test]
    fn zero_noise_is_exact_and_seed_is_deterministic() {
        let c = example3_central();
        let s = c.propagate(2.0).unwrap();
        let m = simulate_measurement(&s, &c, 0.0, 0.0, 3).unwrap();
        let (lon, lat) = true_angles(&s, &c).unwrap();
        assert_eq!((m.longitude, m.latitude), (lon, lat));
        let a = simulate_measurement(&s, &c, 1e-3, 1e-3, 11).unwrap();
        let b = simulate_measurement(&s, &c, 1e-3, 1e-3, 11).unwrap();
        assert_eq!(a, b);
    }
}
