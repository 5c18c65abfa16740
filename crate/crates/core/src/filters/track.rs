use nalgebra::{Vector2, Vector6};
use serde::{Deserialize, Serialize};

use super::model::{AnglesModel, MeasurementModel};
use super::particle::ParticleFilter;
use super::{predict_with_noise, update, FilterKind, GaussianState, UpdateConfig};
use crate::coords::CentralState;
use crate::error::{Error, Result};
use crate::measurement::{AnglesOnlyMeasurement, EciObservation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackStep {
    pub time: f64,
    pub measurement: AnglesOnlyMeasurement,
    pub prior: GaussianState,
    pub posterior: GaussianState,
    /// Observation minus prediction at the prior mean.
    pub innovation: Vector2<f64>,
    /// Observation minus prediction at the posterior mean.
    pub residual: Vector2<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `|truth - posterior mean|` per component, once truth is attached.
    pub abs_error: Option<Vector6<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub filter_kind: FilterKind,
    pub steps: Vec<TrackStep>,
}

impl TrackRecord {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.time).collect()
    }

    /// Posterior variance of component `k` per step.
    pub fn variances(&self, k: usize) -> Vec<f64> {
        self.steps.iter().map(|s| s.posterior.covariance[(k, k)]).collect()
    }

    /// `D_k` per step; `None` until [`TrackRecord::attach_truth`] is called.
    pub fn abs_errors(&self, k: usize) -> Option<Vec<f64>> {
        self.steps.iter().map(|s| s.abs_error.map(|d| d[k])).collect()
    }

    /// Fills in `abs_error` from the true AST coordinates at each step.
    pub fn attach_truth(&mut self, truth: &[Vector6<f64>]) -> Result<()> {
        if truth.len() != self.steps.len() {
            return Err(Error::Domain(format!(
                "{} truth states for {} steps",
                truth.len(),
                self.steps.len()
            )));
        }
        for (s, t) in self.steps.iter_mut().zip(truth) {
            s.abs_error = Some((t - s.posterior.mean).abs());
        }
        Ok(())
    }
}

fn angle_diff(z: &Vector2<f64>, x: &Vector6<f64>) -> Result<Vector2<f64>> {
    let pred = AnglesModel.predict(x)?;
    Ok(AnglesModel.align(z, &pred) - pred)
}

/// Runs the sequential tracker on inertial observations.
///
/// The CRTN frame is that of `c` and is never re-centred; each observation is
/// rotated into it, the state is propagated exactly to the observation time
/// and updated with the configured filter.
pub fn run_track(
    initial: &GaussianState,
    c: &CentralState,
    observations: &[EciObservation],
    cfg: &UpdateConfig,
) -> Result<TrackRecord> {
    let mut measurements = Vec::with_capacity(observations.len());
    for (step, o) in observations.iter().enumerate() {
        let m = o.to_crtn(c).map_err(|e| Error::TrackAborted {
            step: step + 1,
            source: Box::new(e),
        })?;
        measurements.push(m);
    }
    run_track_with(initial, &measurements, cfg)
}

/// [`run_track`] for observations already expressed on the CRTN sphere.
pub fn run_track_with(
    initial: &GaussianState,
    measurements: &[AnglesOnlyMeasurement],
    cfg: &UpdateConfig,
) -> Result<TrackRecord> {
    cfg.validate()?;
    let abort = |step: usize| move |e: Error| Error::TrackAborted {
        step: step + 1,
        source: Box::new(e),
    };
    let mut steps = Vec::with_capacity(measurements.len());
    let mut current = *initial;
    let mut pf = if cfg.filter_kind == FilterKind::Pf {
        Some(ParticleFilter::new(initial, cfg.pf_particles, cfg.rng_seed)?)
    } else {
        None
    };
    for (step, m) in measurements.iter().enumerate() {
        let dt = m.time - current.time;
        if !(dt >= 0.0) {
            return Err(abort(step)(Error::Domain(format!(
                "measurement at {} precedes state at {}",
                m.time, current.time
            ))));
        }
        let prior = predict_with_noise(&current, dt, cfg.process_noise);
        let z = m.angles();
        let innovation = angle_diff(&z, &prior.mean).map_err(abort(step))?;
        let (posterior, iterations, converged) = match pf.as_mut() {
            Some(pf) => {
                pf.predict(dt);
                pf.update(m).map_err(abort(step))?;
                (pf.gaussian().map_err(abort(step))?, 1, true)
            }
            None => {
                let out = update(&prior, m, cfg).map_err(abort(step))?;
                (out.state, out.iterations, out.converged)
            }
        };
        let residual = angle_diff(&z, &posterior.mean).map_err(abort(step))?;
        steps.push(TrackStep {
            time: m.time,
            measurement: *m,
            prior,
            posterior,
            innovation,
            residual,
            iterations,
            converged,
            abs_error: None,
        });
        current = posterior;
    }
    Ok(TrackRecord {
        filter_kind: cfg.filter_kind,
        steps,
    })
}
