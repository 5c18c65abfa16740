use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::coords::ast_jacobian;
use crate::error::{Error, Result};
use crate::filters::{transition, update, AnglesModel, FilterKind, GaussianState, MeasurementModel, UpdateConfig};
use crate::measurement::AnglesOnlyMeasurement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorCovariance {
    /// Only `a3` is uncertain; the other five variances sit at a tiny floor.
    #[default]
    Marginal,
    /// `J Σ₀ Jᵀ` propagated until `sd(a3)` reaches the requested value.
    Propagated,
}

/// Single hard update: broad prior on `a3`, one very precise observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OneStepSpec {
    pub prior_mean_a3_deg: f64,
    pub prior_sd_a3_deg: f64,
    pub observed_longitude_deg: f64,
    pub observed_latitude_deg: f64,
    pub sigma_deg: f64,
    pub prior_covariance: PriorCovariance,
    /// Variance floor for the five fixed components of a marginal prior.
    pub marginal_variance: f64,
    pub particles: usize,
    pub ukf_alpha: f64,
    pub ukf_beta: f64,
    pub ukf_kappa: f64,
}

impl Default for OneStepSpec {
    fn default() -> Self {
        let cfg = UpdateConfig::default();
        Self {
            prior_mean_a3_deg: 260.0,
            prior_sd_a3_deg: 25.0,
            observed_longitude_deg: 225.5,
            observed_latitude_deg: 0.0,
            sigma_deg: 5.5e-4,
            prior_covariance: PriorCovariance::Marginal,
            marginal_variance: 1e-20,
            particles: cfg.pf_particles,
            ukf_alpha: cfg.ukf_alpha,
            ukf_beta: cfg.ukf_beta,
            ukf_kappa: cfg.ukf_kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRow {
    pub filter: FilterKind,
    pub mean_a3_deg: Option<f64>,
    pub sd_a3_deg: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

impl FilterRow {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStepReport {
    pub prior: GaussianState,
    pub measurement: AnglesOnlyMeasurement,
    /// `F_T-to-M` image of the observed longitude, in degrees.
    pub observation_center_a3_deg: f64,
    /// Time from the central epoch to the prior, when it was propagated.
    pub propagation_time: Option<f64>,
    pub rows: Vec<FilterRow>,
}

impl OneStepReport {
    pub fn row(&self, kind: FilterKind) -> Option<&FilterRow> {
        self.rows.iter().find(|r| r.filter == kind)
    }
}

/// Prior for the single-update experiment and, when propagated, the time
/// at which `sd(a3)` reaches the target.
pub fn example3_prior(s: &Scenario, spec: &OneStepSpec) -> Result<(GaussianState, Option<f64>)> {
    let setup = s.setup()?;
    let mut mean: Vector6<f64> = setup.central.ast().to_vector();
    mean[2] = spec.prior_mean_a3_deg.to_radians();
    let target = spec.prior_sd_a3_deg.to_radians().powi(2);
    match spec.prior_covariance {
        PriorCovariance::Marginal => {
            let v = spec.marginal_variance;
            let cov = Matrix6::from_diagonal(&Vector6::new(v, v, target, v, v, v));
            Ok((GaussianState::new(mean, cov, 0.0)?, None))
        }
        PriorCovariance::Propagated => {
            let j = ast_jacobian(&setup.central).j;
            let p0 = j * setup.deviation_covariance() * j.transpose();
            // var(a3)(t) = P33 + 2t P36 + t² P66
            let (a, b, c) = (p0[(5, 5)], 2.0 * p0[(2, 5)], p0[(2, 2)] - target);
            let disc = b * b - 4.0 * a * c;
            if !(a > 0.0) || disc < 0.0 {
                return Err(Error::Scenario("prior sd(a3) is not reachable by propagation".into()));
            }
            let t = (-b + disc.sqrt()) / (2.0 * a);
            if t < 0.0 {
                return Err(Error::Scenario("prior sd(a3) is below its initial value".into()));
            }
            let f = transition(t);
            let cov = f * p0 * f.transpose();
            let g = GaussianState::new(mean, 0.5 * (cov + cov.transpose()), 0.0)?;
            Ok((g, Some(t)))
        }
    }
}

/// Runs each requested filter on the same prior and observation.
pub fn run_one_step(s: &Scenario, spec: &OneStepSpec, filters: &[FilterKind], seed: u64) -> Result<OneStepReport> {
    let (prior, propagation_time) = example3_prior(s, spec)?;
    let sigma = spec.sigma_deg.to_radians();
    let m = AnglesOnlyMeasurement::new(
        spec.observed_longitude_deg.to_radians(),
        spec.observed_latitude_deg.to_radians(),
        sigma,
        sigma,
        prior.time,
    )?;
    let center = AnglesModel.observation_center(&prior.mean, &m.angles())?;
    let mut rows = Vec::with_capacity(filters.len());
    for &kind in filters {
        let cfg = UpdateConfig {
            filter_kind: kind,
            ukf_alpha: spec.ukf_alpha,
            ukf_beta: spec.ukf_beta,
            ukf_kappa: spec.ukf_kappa,
            pf_particles: spec.particles,
            rng_seed: seed,
            ..UpdateConfig::default()
        };
        let row = match update(&prior, &m, &cfg) {
            Ok(out) => FilterRow {
                filter: kind,
                mean_a3_deg: Some(out.state.mean[2].to_degrees()),
                sd_a3_deg: Some(out.state.covariance[(2, 2)].sqrt().to_degrees()),
                iterations: Some(out.iterations),
                converged: Some(out.converged),
                error: None,
            },
            Err(e) => FilterRow {
                filter: kind,
                mean_a3_deg: None,
                sd_a3_deg: None,
                iterations: None,
                converged: None,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(OneStepReport {
        prior,
        measurement: m,
        observation_center_a3_deg: center[2].to_degrees(),
        propagation_time,
        rows,
    })
}
