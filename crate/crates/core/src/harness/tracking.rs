use nalgebra::Vector6;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Scenario, TimeSpan};
use crate::coords::{ast_jacobian, ast_to_eci, eci_to_ast, AstCoordinates};
use crate::error::{Error, Result};
use crate::filters::{run_track, FilterKind, GaussianState, TrackRecord, UpdateConfig};
use crate::measurement::{simulate_measurement_with, EciObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthSource {
    /// Drawn from the initial Cartesian uncertainty (bound draws only).
    #[default]
    Sampled,
    /// The central state itself.
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingSpec {
    pub n_obs: usize,
    pub cadence: TimeSpan,
    pub sigma_long_deg: f64,
    pub sigma_lat_deg: f64,
    pub filter: FilterKind,
    pub truth: TruthSource,
    /// 1-based, inclusive step range used for the decay regressions.
    pub fit_from_step: usize,
    pub fit_to_step: usize,
}

impl Default for TrackingSpec {
    fn default() -> Self {
        Self {
            n_obs: 200,
            cadence: TimeSpan::Hours(1.0),
            sigma_long_deg: 0.1,
            sigma_lat_deg: 0.1,
            filter: FilterKind::Iukf,
            truth: TruthSource::Sampled,
            fit_from_step: 20,
            fit_to_step: 200,
        }
    }
}

/// Log-log regression slopes against time, one per AST component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySlopes {
    pub variance: [f64; 6],
    pub abs_error: [f64; 6],
    pub fit_from_step: usize,
    pub fit_to_step: usize,
}

impl DecaySlopes {
    /// Rates implied by information growing linearly in time for `A₁…A₅`
    /// and quadratically for the mean motion.
    pub const EXPECTED_VARIANCE: [f64; 6] = [-1.0, -1.0, -1.0, -1.0, -1.0, -2.0];
    pub const EXPECTED_ABS_ERROR: [f64; 6] = [-0.5, -0.5, -0.5, -0.5, -0.5, -1.0];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub initial: GaussianState,
    pub truth_initial: AstCoordinates,
    pub truth: Vec<Vector6<f64>>,
    pub record: TrackRecord,
    pub slopes: Option<DecaySlopes>,
}

impl TrackingReport {
    /// Per step: `ln(var_j t)` for j = 1..5, `ln(var_6 t²)`, `ln(D_j √t)` for
    /// j = 1..5 and `ln(D_6 t)`. Flat lines mean the expected decay rates.
    pub fn scaled_series(&self) -> Vec<[f64; 12]> {
        self.record
            .steps
            .iter()
            .map(|s| {
                let t = s.time;
                let mut row = [f64::NAN; 12];
                for j in 0..6 {
                    let p = if j == 5 { 2 } else { 1 };
                    row[j] = (s.posterior.covariance[(j, j)] * t.powi(p)).ln();
                    if let Some(d) = s.abs_error {
                        let q = if j == 5 { t } else { t.sqrt() };
                        row[6 + j] = (d[j] * q).ln();
                    }
                }
                row
            })
            .collect()
    }
}

/// Least-squares slope of `ln y` on `ln t`, skipping non-positive entries.
pub fn log_log_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

const MAX_TRUTH_DRAWS: usize = 1000;

/// Simulates a truth trajectory and noisy observations, then runs the
/// sequential tracker from the linearized initial uncertainty.
pub fn run_tracking(s: &Scenario, spec: &TrackingSpec, base: &UpdateConfig) -> Result<TrackingReport> {
    let setup = s.setup()?;
    let c = setup.central;
    let sigma0 = setup.deviation_covariance();
    let jac = ast_jacobian(&c).j;
    let initial = GaussianState::new(c.ast().to_vector(), jac * sigma0 * jac.transpose(), 0.0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let truth_initial = match spec.truth {
        TruthSource::Central => c.ast(),
        TruthSource::Sampled => {
            let l = sigma0.cholesky().expect("diagonal positive").l();
            let mut found = None;
            for _ in 0..MAX_TRUTH_DRAWS {
                let xi = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
                match eci_to_ast(&c.from_deviation(&(l * xi), 0.0), &c) {
                    Ok(a) => {
                        found = Some(a);
                        break;
                    }
                    Err(Error::Unbound(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            found.ok_or_else(|| Error::Scenario("no bound truth state drawn".into()))?
        }
    };

    let cadence = spec.cadence.resolve(setup.period);
    if !(cadence > 0.0) {
        return Err(Error::Scenario("tracking cadence must be positive".into()));
    }
    let (sl, sp) = (spec.sigma_long_deg.to_radians(), spec.sigma_lat_deg.to_radians());
    let mut truth = Vec::with_capacity(spec.n_obs);
    let mut observations = Vec::with_capacity(spec.n_obs);
    for k in 1..=spec.n_obs {
        let t = k as f64 * cadence;
        let a = truth_initial.propagated(t);
        let state = ast_to_eci(&a, &c, t)?;
        let m = simulate_measurement_with(&state, &c, sl, sp, &mut rng)?;
        observations.push(EciObservation::from_crtn(&m, &c));
        truth.push(a.to_vector());
    }

    let cfg = UpdateConfig {
        filter_kind: spec.filter,
        ..*base
    };
    let mut record = run_track(&initial, &c, &observations, &cfg)?;
    record.attach_truth(&truth)?;

    let lo = spec.fit_from_step.max(1);
    let hi = spec.fit_to_step.min(record.len());
    let slopes = if hi > lo {
        let times = &record.times()[lo - 1..hi];
        let mut variance = [f64::NAN; 6];
        let mut abs_error = [f64::NAN; 6];
        for j in 0..6 {
            variance[j] = log_log_slope(times, &record.variances(j)[lo - 1..hi]).unwrap_or(f64::NAN);
            let d = record.abs_errors(j).expect("truth attached");
            abs_error[j] = log_log_slope(times, &d[lo - 1..hi]).unwrap_or(f64::NAN);
        }
        Some(DecaySlopes {
            variance,
            abs_error,
            fit_from_step: lo,
            fit_to_step: hi,
        })
    } else {
        None
    };
    Ok(TrackingReport {
        initial,
        truth_initial,
        truth,
        record,
        slopes,
    })
}
