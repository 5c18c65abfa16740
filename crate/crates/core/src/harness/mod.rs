//! Scenario files and the four experiments: linearity of the initial AST
//! map, propagated point clouds, a single hard update and sequential
//! tracking.

mod cloud;
mod linearity;
mod one_step;
mod tracking;

use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::coords::CentralState;
use crate::elements::{rotation_x, MU_EARTH};
use crate::error::{Error, Result};

pub use cloud::{run_cloud_study, run_cloud_study_with_seed, CloudStudy, SystemResult};
pub use linearity::{run_linearity, LinearityPanel, LinearityReport, FLAT_TOLERANCE, GRID_POINTS};
pub use one_step::{example3_prior, run_one_step, FilterRow, OneStepReport, OneStepSpec, PriorCovariance};
pub use tracking::{log_log_slope, run_tracking, DecaySlopes, TrackingReport, TrackingSpec, TruthSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum UnitMode {
    /// `μ = 1`, `a = 1`, period `2π`.
    Standardized,
    /// Kilometres and seconds; `a` follows from `μ` and the period.
    Physical {
        #[serde(default = "default_mu")]
        mu: f64,
        period_hours: f64,
    },
}

fn default_mu() -> f64 {
    MU_EARTH
}

impl Default for UnitMode {
    fn default() -> Self {
        UnitMode::Standardized
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TimeSpan {
    Periods(f64),
    Seconds(f64),
    Hours(f64),
}

impl Default for TimeSpan {
    fn default() -> Self {
        TimeSpan::Periods(0.0)
    }
}

impl TimeSpan {
    /// Length in model time units, given the central period.
    pub fn resolve(self, period: f64) -> f64 {
        match self {
            TimeSpan::Periods(p) => p * period,
            TimeSpan::Seconds(s) => s,
            TimeSpan::Hours(h) => h * 3600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnboundPolicy {
    /// Any unbound sample aborts the run.
    #[default]
    Error,
    /// Unbound samples are dropped and counted.
    Discard,
}

/// Experiment description as read from a scenario file. Angles are degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub eccentricity: f64,
    pub true_anomaly_deg: f64,
    #[serde(default)]
    pub inclination_deg: f64,
    pub p_sigma: f64,
    pub p_tau: f64,
    #[serde(default = "default_points")]
    pub n_points: usize,
    #[serde(default)]
    pub propagation: TimeSpan,
    pub seed: u64,
    #[serde(default)]
    pub units: UnitMode,
    #[serde(default)]
    pub unbound_policy: UnboundPolicy,
    #[serde(default)]
    pub update: Option<OneStepSpec>,
    #[serde(default)]
    pub tracking: Option<TrackingSpec>,
}

fn default_points() -> usize {
    2000
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if !(0.0..1.0).contains(&self.eccentricity) {
            return bad(format!("field `eccentricity`: {} is outside [0, 1)", self.eccentricity));
        }
        if !(self.p_sigma > 0.0 && self.p_sigma.is_finite()) {
            return bad(format!("field `p_sigma`: {} must be positive", self.p_sigma));
        }
        if !(self.p_tau > 0.0 && self.p_tau.is_finite()) {
            return bad(format!("field `p_tau`: {} must be positive", self.p_tau));
        }
        if !(0.0..180.0).contains(&self.inclination_deg) {
            return bad(format!("field `inclination_deg`: {} is outside [0, 180)", self.inclination_deg));
        }
        if !self.true_anomaly_deg.is_finite() {
            return bad("field `true_anomaly_deg` must be finite".into());
        }
        if self.n_points < 8 {
            return bad(format!("field `n_points`: {} is too small (need at least 8)", self.n_points));
        }
        if let UnitMode::Physical { mu, period_hours } = self.units {
            if !(mu > 0.0 && period_hours > 0.0) {
                return bad("physical units need positive `mu` and `period_hours`".into());
            }
        }
        Ok(())
    }

    /// Central state, noise scales and derived constants.
    pub fn setup(&self) -> Result<Setup> {
        self.validate()?;
        let (mu, sma) = match self.units {
            UnitMode::Standardized => (1.0, 1.0),
            UnitMode::Physical { mu, period_hours } => {
                let p = period_hours * 3600.0;
                (mu, (mu * (p / TAU).powi(2)).cbrt())
            }
        };
        let e = self.eccentricity;
        let t0 = self.true_anomaly_deg.to_radians();
        let h = (mu * sma * (1.0 - e * e)).sqrt();
        let radius = h * h / mu / (1.0 + e * t0.cos());
        let transverse = h / radius;
        let radial = mu / h * e * t0.sin();
        let rotation = rotation_x(self.inclination_deg.to_radians());
        let central = CentralState::from_crtn(radius, radial, transverse, &rotation, mu, 0.0)?;
        let (sigma, tau) = physical_sigmas(e, self.p_sigma, self.p_tau, mu, sma);
        let period = central.features.p;
        Ok(Setup {
            mu,
            semi_major_axis: sma,
            central,
            sigma,
            tau,
            period,
            propagation_time: self.propagation.resolve(period),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub mu: f64,
    pub semi_major_axis: f64,
    pub central: CentralState,
    /// Position standard deviation per axis.
    pub sigma: f64,
    /// Velocity standard deviation per axis.
    pub tau: f64,
    pub period: f64,
    pub propagation_time: f64,
}

impl Setup {
    /// `diag(σ², σ², σ², τ², τ², τ²)` on CRTN deviations. Isotropic, so the
    /// same matrix in any rotated frame.
    pub fn deviation_covariance(&self) -> Matrix6<f64> {
        deviation_covariance(self.sigma, self.tau)
    }
}

pub fn deviation_covariance(sigma: f64, tau: f64) -> Matrix6<f64> {
    let (s2, t2) = (sigma * sigma, tau * tau);
    Matrix6::from_diagonal(&Vector6::new(s2, s2, s2, t2, t2, t2))
}

/// Position and velocity standard deviations in standardized units, relative
/// to the geometric means `√(r_a r_p) = √(1-e²)` and `√(v_a v_p) = 1`.
pub fn standardized_sigmas(e: f64, p_sigma: f64, p_tau: f64) -> Result<(f64, f64)> {
    crate::kepler::Eccentricity::new(e)?;
    Ok((p_sigma / 100.0 * (1.0 - e * e).sqrt(), p_tau / 100.0))
}

fn physical_sigmas(e: f64, p_sigma: f64, p_tau: f64, mu: f64, sma: f64) -> (f64, f64) {
    (
        p_sigma / 100.0 * sma * (1.0 - e * e).sqrt(),
        p_tau / 100.0 * (mu / sma).sqrt(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EXAMPLE1: &str = r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "p_sigma": 2.5, "p_tau": 20, "seed": 1}"#;

    #[test]
    fn sigmas() {
        assert_relative_eq!(standardized_sigmas(0.0, 10.0, 5.0).unwrap().0, 0.1);
        let (s, t) = standardized_sigmas(0.7, 2.5, 20.0).unwrap();
        assert_relative_eq!(s, 0.025 * 0.51f64.sqrt());
        assert_relative_eq!(t, 0.2);
        assert!(standardized_sigmas(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn apsides_product() {
        let e = 0.7;
        assert_relative_eq!((1.0 + e) * (1.0 - e), 0.51, epsilon = 1e-15);
    }

    #[test]
    fn example_one_setup() {
        let s = Scenario::from_json(EXAMPLE1).unwrap();
        let setup = s.setup().unwrap();
        let f = &setup.central.features;
        assert_relative_eq!(f.e.value(), 0.7, epsilon = 1e-12);
        assert_relative_eq!(f.a, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.n, 1.0, epsilon = 1e-12);
        assert_relative_eq!(setup.central.true_anomaly(), 45f64.to_radians(), epsilon = 1e-12);
    }

    #[test]
    fn physical_setup_matches_heo() {
        let s = Scenario::from_json(
            r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "p_sigma": 2.5, "p_tau": 20, "seed": 1,
                "units": {"mode": "physical", "period_hours": 12}}"#,
        )
        .unwrap();
        let setup = s.setup().unwrap();
        let (a, b, c) = setup.central.abc();
        assert!((a - 9078.0).abs() < 5.0, "A = {a}");
        // printed truncated to one decimal
        assert!((b - 2.6).abs() < 0.1, "B = {b}");
        assert!((c - 8.1).abs() < 0.05, "C = {c}");
    }

    #[test]
    fn validation_messages() {
        let missing_e = r#"{"true_anomaly_deg": 45, "p_sigma": 2.5, "p_tau": 20, "seed": 1}"#;
        let err = Scenario::from_json(missing_e).unwrap_err().to_string();
        assert!(err.contains("eccentricity"), "{err}");
        let missing_seed = r#"{"eccentricity": 0.7, "true_anomaly_deg": 45, "p_sigma": 2.5, "p_tau": 20}"#;
        let err = Scenario::from_json(missing_seed).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
        let unbound = r#"{"eccentricity": 1.0, "true_anomaly_deg": 45, "p_sigma": 2.5, "p_tau": 20, "seed": 1}"#;
        let err = Scenario::from_json(unbound).unwrap_err().to_string();
        assert!(err.contains("eccentricity") && err.contains("[0, 1)"), "{err}");
    }
}
