use nalgebra::{Matrix2, Matrix6, Vector2, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{AnglesModel, MeasurementModel};
use super::{covariance_hygiene, GaussianState, UpdateConfig};
use crate::error::{Error, Result};
use crate::measurement::AnglesOnlyMeasurement;

/// Below this effective sample size the weighted moments are meaningless.
pub const MIN_EFFECTIVE_SAMPLE_SIZE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleEstimate {
    pub mean: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    pub ess: f64,
    pub particles: usize,
}

impl ParticleEstimate {
    pub fn sd(&self, k: usize) -> f64 {
        self.covariance[(k, k)].max(0.0).sqrt()
    }

    /// Monte Carlo standard error of the weighted mean of component `k`.
    pub fn standard_error(&self, k: usize) -> f64 {
        self.sd(k) / self.ess.sqrt()
    }
}

/// Importance-sampling posterior for a single angles-only observation.
pub fn update_pf(g: &GaussianState, m: &AnglesOnlyMeasurement, cfg: &UpdateConfig) -> Result<ParticleEstimate> {
    if !(m.sigma_long > 0.0 && m.sigma_lat > 0.0) {
        return Err(Error::Domain("measurement sigmas must be positive for an update".into()));
    }
    let r = Matrix2::new(m.sigma_long.powi(2), 0.0, 0.0, m.sigma_lat.powi(2));
    update_pf_with(&AnglesModel, g, &m.angles(), &r, cfg)
}

/// Samples the prior, weights by the Gaussian likelihood and reports
/// weighted moments. Deterministic for a fixed `cfg.rng_seed`.
pub fn update_pf_with<M: MeasurementModel>(
    model: &M,
    g: &GaussianState,
    z: &Vector2<f64>,
    r: &Matrix2<f64>,
    cfg: &UpdateConfig,
) -> Result<ParticleEstimate> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let particles = sample_gaussian(g, cfg.pf_particles, &mut rng)?;
    let mut weights = vec![1.0 / particles.len() as f64; particles.len()];
    let ess = reweight(model, &particles, &mut weights, z, r)?;
    Ok(weighted_moments(&particles, &weights, ess))
}

fn sample_gaussian(g: &GaussianState, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vector6<f64>>> {
    let l = covariance_hygiene(&g.covariance)?
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("prior covariance".into()))?
        .l();
    Ok((0..n)
        .map(|_| {
            let xi = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            g.mean + l * xi
        })
        .collect())
}

fn log_likelihood<M: MeasurementModel>(model: &M, x: &Vector6<f64>, z: &Vector2<f64>, r_inv: &Matrix2<f64>) -> f64 {
    match model.predict(x) {
        Ok(pred) => {
            let d = model.align(z, &pred) - pred;
            -0.5 * (d.transpose() * r_inv * d)[(0, 0)]
        }
        // particles outside the model's domain (unbound orbits) carry no weight
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Multiplies `weights` by the likelihood and renormalizes; returns the ESS.
/// Per-particle work runs in parallel, the reduction is sequential, so the
/// result does not depend on thread count.
fn reweight<M: MeasurementModel>(
    model: &M,
    particles: &[Vector6<f64>],
    weights: &mut [f64],
    z: &Vector2<f64>,
    r: &Matrix2<f64>,
) -> Result<f64> {
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("measurement covariance".into()))?;
    let log_w: Vec<f64> = particles
        .par_iter()
        .zip(weights.par_iter())
        .map(|(x, w)| w.ln() + log_likelihood(model, x, z, &r_inv))
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Degeneracy {
            ess: 0.0,
            threshold: MIN_EFFECTIVE_SAMPLE_SIZE,
        });
    }
    let mut total = 0.0;
    for (w, lw) in weights.iter_mut().zip(&log_w) {
        *w = (lw - max).exp();
        total += *w;
    }
    let mut sum_sq = 0.0;
    for w in weights.iter_mut() {
        *w /= total;
        sum_sq += *w * *w;
    }
    let ess = 1.0 / sum_sq;
    if ess < MIN_EFFECTIVE_SAMPLE_SIZE {
        return Err(Error::Degeneracy {
            ess,
            threshold: MIN_EFFECTIVE_SAMPLE_SIZE,
        });
    }
    Ok(ess)
}

fn weighted_moments(particles: &[Vector6<f64>], weights: &[f64], ess: f64) -> ParticleEstimate {
    let mean = particles
        .iter()
        .zip(weights)
        .fold(Vector6::zeros(), |acc, (x, w)| acc + x * *w);
    let covariance = particles.iter().zip(weights).fold(Matrix6::zeros(), |acc, (x, w)| {
        let d = x - mean;
        acc + d * d.transpose() * *w
    });
    ParticleEstimate {
        mean,
        covariance,
        ess,
        particles: particles.len(),
    }
}

/// Systematic resampling: one uniform offset `u0 ∈ [0, 1)`, `n` evenly
/// spaced pointers into the cumulative weights.
pub fn systematic_resample(weights: &[f64], u0: f64) -> Vec<usize> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights.first().copied().unwrap_or(0.0);
    let mut j = 0;
    for k in 0..n {
        let u = (u0 + k as f64) / n as f64;
        while u >= cumulative && j + 1 < n {
            j += 1;
            cumulative += weights[j];
        }
        out.push(j);
    }
    out
}

/// Sequential bootstrap filter in AST coordinates.
#[derive(Debug, Clone)]
pub struct ParticleFilter {
    particles: Vec<Vector6<f64>>,
    weights: Vec<f64>,
    time: f64,
    rng: ChaCha8Rng,
}

impl ParticleFilter {
    pub fn new(g: &GaussianState, n: usize, seed: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("need at least one particle".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let particles = sample_gaussian(g, n, &mut rng)?;
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
            particles,
            time: g.time,
            rng,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Exact Keplerian step for every particle.
    pub fn predict(&mut self, dt: f64) {
        for p in &mut self.particles {
            p[2] += p[5] * dt;
        }
        self.time += dt;
    }

    /// Reweights, then resamples systematically once ESS drops below `n/2`.
    pub fn update_with<M: MeasurementModel>(&mut self, model: &M, z: &Vector2<f64>, r: &Matrix2<f64>) -> Result<f64> {
        let ess = reweight(model, &self.particles, &mut self.weights, z, r)?;
        let n = self.particles.len();
        if ess < 0.5 * n as f64 {
            let idx = systematic_resample(&self.weights, self.rng.random::<f64>());
            self.particles = idx.into_iter().map(|k| self.particles[k]).collect();
            self.weights = vec![1.0 / n as f64; n];
        }
        Ok(ess)
    }

    pub fn update(&mut self, m: &AnglesOnlyMeasurement) -> Result<f64> {
        let r = Matrix2::new(m.sigma_long.powi(2), 0.0, 0.0, m.sigma_lat.powi(2));
        self.update_with(&AnglesModel, &m.angles(), &r)
    }

    pub fn estimate(&self) -> ParticleEstimate {
        let ess = 1.0 / self.weights.iter().map(|w| w * w).sum::<f64>();
        weighted_moments(&self.particles, &self.weights, ess)
    }

    /// Moment-matched Gaussian summary.
    pub fn gaussian(&self) -> Result<GaussianState> {
        let est = self.estimate();
        Ok(GaussianState {
            mean: est.mean,
            covariance: covariance_hygiene(&est.covariance)?,
            time: self.time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn systematic_resample_counts() {
        let w = [0.1, 0.2, 0.3, 0.4];
        let idx = systematic_resample(&w, 0.5);
        assert_eq!(idx.len(), 4);
        let count = |k| idx.iter().filter(|&&i| i == k).count();
        assert_eq!(count(3) + count(2) + count(1) + count(0), 4);
        assert!(idx.windows(2).all(|p| p[0] <= p[1]));
        let idx = systematic_resample(&[0.0, 0.0, 1.0], 0.0);
        assert_eq!(idx, vec![2, 2, 2]);
    }
}
