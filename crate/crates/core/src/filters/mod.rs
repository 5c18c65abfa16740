//! Gaussian uncertainty in AST coordinates: exact Keplerian prediction,
//! nonlinear Kalman measurement updates, a particle-filter reference and the
//! sequential tracking loop.

mod kalman;
mod model;
mod particle;
mod track;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kalman::{update, update_with, UpdateOutcome};
pub use model::{AnglesModel, LinearModel, MeasurementModel};
pub use particle::{systematic_resample, update_pf, update_pf_with, ParticleEstimate, ParticleFilter};
pub use track::{run_track, run_track_with, TrackRecord, TrackStep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    /// Seconds since the central epoch.
    pub time: f64,
}

impl GaussianState {
    /// Validates symmetry and positive definiteness.
    pub fn new(mean: Vector6<f64>, covariance: Matrix6<f64>, time: f64) -> Result<Self> {
        if !mean.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("mean has non-finite entries".into()));
        }
        let scale = covariance.abs().max().max(f64::MIN_POSITIVE);
        if (covariance - covariance.transpose()).abs().max() > 1e-12 * scale {
            return Err(Error::NotPositiveDefinite("covariance is not symmetric".into()));
        }
        if covariance.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("Cholesky factorization failed".into()));
        }
        Ok(Self { mean, covariance, time })
    }

    pub fn std_devs(&self) -> Vector6<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Ekf,
    Ukf,
    Iekf,
    Iukf,
    Ocekf,
    Ocukf,
    Pf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 7] = [
        FilterKind::Ukf,
        FilterKind::Pf,
        FilterKind::Ekf,
        FilterKind::Iekf,
        FilterKind::Ocekf,
        FilterKind::Iukf,
        FilterKind::Ocukf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Ekf => "ekf",
            FilterKind::Ukf => "ukf",
            FilterKind::Iekf => "iekf",
            FilterKind::Iukf => "iukf",
            FilterKind::Ocekf => "ocekf",
            FilterKind::Ocukf => "ocukf",
            FilterKind::Pf => "pf",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown filter kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpdateConfig {
    pub filter_kind: FilterKind,
    pub ukf_alpha: f64,
    pub ukf_beta: f64,
    pub ukf_kappa: f64,
    pub max_iterations: usize,
    /// Stopping threshold on the norm of the mean shift between iterations.
    pub convergence_tol: f64,
    pub pf_particles: usize,
    pub rng_seed: u64,
    /// White noise intensity added to every diagonal entry per second of
    /// prediction. Keplerian motion is exact, so this is zero by default.
    pub process_noise: f64,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        Self {
            filter_kind: FilterKind::Iukf,
            ukf_alpha: 0.1,
            ukf_beta: 2.0,
            ukf_kappa: 0.0,
            max_iterations: 50,
            convergence_tol: 1e-10,
            pf_particles: 1_000_000,
            rng_seed: 0,
            process_noise: 0.0,
        }
    }
}

impl UpdateConfig {
    pub fn with_kind(kind: FilterKind) -> Self {
        Self {
            filter_kind: kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pf_particles < 1 {
            return Err(Error::Domain("pf_particles must be at least 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Domain("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Domain("convergence_tol must be positive".into()));
        }
        if !(self.ukf_alpha > 0.0) {
            return Err(Error::Domain("ukf_alpha must be positive".into()));
        }
        if !(self.process_noise >= 0.0) {
            return Err(Error::Domain("process_noise must be non-negative".into()));
        }
        Ok(())
    }
}

/// State transition for a Keplerian step of `dt`: identity with `F[2][5] = dt`.
pub fn transition(dt: f64) -> Matrix6<f64> {
    let mut f = Matrix6::identity();
    f[(2, 5)] = dt;
    f
}

/// Exact propagation: `a3 += a6·dt`, `P ← F P Fᵀ`.
pub fn predict(g: &GaussianState, dt: f64) -> GaussianState {
    let f = transition(dt);
    let mut mean = g.mean;
    mean[2] += mean[5] * dt;
    let p = f * g.covariance * f.transpose();
    GaussianState {
        mean,
        covariance: 0.5 * (p + p.transpose()),
        time: g.time + dt,
    }
}

/// [`predict`] plus `q·|dt|` on the diagonal.
pub fn predict_with_noise(g: &GaussianState, dt: f64, q: f64) -> GaussianState {
    let mut out = predict(g, dt);
    if q > 0.0 {
        for k in 0..6 {
            out.covariance[(k, k)] += q * dt.abs();
        }
    }
    out
}

/// Symmetrizes, then checks positive definiteness; one bounded jitter retry.
pub(crate) fn covariance_hygiene(p: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    let sym = 0.5 * (p + p.transpose());
    if !sym.iter().all(|x| x.is_finite()) {
        return Err(Error::NotPositiveDefinite("non-finite covariance".into()));
    }
    if sym.cholesky().is_some() {
        return Ok(sym);
    }
    let jitter = 1e-12 * sym.trace().abs() / 6.0;
    let fixed = sym + Matrix6::identity() * jitter;
    if fixed.cholesky().is_some() {
        return Ok(fixed);
    }
    Err(Error::NotPositiveDefinite(format!(
        "after jitter {jitter:e}, diagonal {:?}",
        sym.diagonal().as_slice()
    )))
}
