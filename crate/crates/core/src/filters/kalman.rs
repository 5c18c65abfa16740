use nalgebra::{Matrix2, Matrix2x6, Matrix6, Matrix6x2, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use super::model::{AnglesModel, MeasurementModel};
use super::{covariance_hygiene, particle, FilterKind, GaussianState, UpdateConfig};
use crate::error::{Error, Result};
use crate::measurement::AnglesOnlyMeasurement;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateOutcome {
    pub state: GaussianState,
    /// Linearizations performed; 1 for the single-shot variants.
    pub iterations: usize,
    /// False when an iterated variant hit `max_iterations` first; the last
    /// iterate is returned regardless.
    pub converged: bool,
}

/// Updates `g` with an angles-only observation taken at the same time.
pub fn update(g: &GaussianState, m: &AnglesOnlyMeasurement, cfg: &UpdateConfig) -> Result<UpdateOutcome> {
    let tol = 1e-9 * g.time.abs().max(1.0);
    if (g.time - m.time).abs() > tol {
        return Err(Error::Domain(format!(
            "state time {} differs from measurement time {}",
            g.time, m.time
        )));
    }
    if !(m.sigma_long > 0.0 && m.sigma_lat > 0.0) {
        return Err(Error::Domain("measurement sigmas must be positive for an update".into()));
    }
    let r = Matrix2::new(m.sigma_long.powi(2), 0.0, 0.0, m.sigma_lat.powi(2));
    update_with(&AnglesModel, g, &m.angles(), &r, cfg)
}

/// Same as [`update`] for any measurement model and noise covariance `r`.
pub fn update_with<M: MeasurementModel>(
    model: &M,
    g: &GaussianState,
    z: &Vector2<f64>,
    r: &Matrix2<f64>,
    cfg: &UpdateConfig,
) -> Result<UpdateOutcome> {
    cfg.validate()?;
    let single = |state| UpdateOutcome {
        state,
        iterations: 1,
        converged: true,
    };
    match cfg.filter_kind {
        FilterKind::Ekf => linearized(model, g, z, r, &g.mean).map(|(s, _)| single(s)),
        FilterKind::Iekf => iterated_ekf(model, g, z, r, cfg),
        FilterKind::Ocekf => {
            let center = model.observation_center(&g.mean, z)?;
            linearized(model, g, z, r, &center).map(|(s, _)| single(s))
        }
        FilterKind::Ukf => unscented(model, g, z, r, cfg).map(single),
        FilterKind::Iukf => iterated_ukf(model, g, z, r, cfg),
        FilterKind::Ocukf => {
            let center = model.observation_center(&g.mean, z)?;
            let (oc, _) = linearized(model, g, z, r, &center)?;
            let slr = statistical_linearization(model, &center, &oc.covariance, cfg)?;
            slr_update(model, g, z, r, &slr).map(single)
        }
        FilterKind::Pf => {
            let est = particle::update_pf_with(model, g, z, r, cfg)?;
            let state = GaussianState {
                mean: est.mean,
                covariance: covariance_hygiene(&est.covariance)?,
                time: g.time,
            };
            Ok(single(state))
        }
    }
}

/// Kalman update for `z ≈ ẑ + A (x - m) + noise(extra)`, Joseph form.
fn linear_update(
    g: &GaussianState,
    a: &Matrix2x6<f64>,
    zhat: &Vector2<f64>,
    extra: &Matrix2<f64>,
    z: &Vector2<f64>,
) -> Result<GaussianState> {
    let p = &g.covariance;
    let pat = p * a.transpose();
    let s = a * pat + extra;
    let s = 0.5 * (s + s.transpose());
    let s_chol = s
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("innovation covariance {s:?}")))?;
    let k: Matrix6x2<f64> = s_chol.solve(&pat.transpose()).transpose();
    let mean = g.mean + k * (z - zhat);
    let ika = Matrix6::identity() - k * a;
    let cov = ika * p * ika.transpose() + k * extra * k.transpose();
    Ok(GaussianState {
        mean,
        covariance: covariance_hygiene(&cov)?,
        time: g.time,
    })
}

/// EKF update with `h` linearized at `lin`. Also returns the aligned `z`.
fn linearized<M: MeasurementModel>(
    model: &M,
    g: &GaussianState,
    z: &Vector2<f64>,
    r: &Matrix2<f64>,
    lin: &Vector6<f64>,
) -> Result<(GaussianState, Vector2<f64>)> {
    let h_lin = model.predict(lin)?;
    let jac = model.jacobian(lin)?;
    let z = model.align(z, &h_lin);
    let zhat = h_lin + jac * (g.mean - lin);
    Ok((linear_update(g, &jac, &zhat, r, &z)?, z))
}

fn iterated_ekf<M: MeasurementModel>(
    model: &M,
    g: &GaussianState,
    z: &Vector2<f64>,
    r: &Matrix2<f64>,
    cfg: &UpdateConfig,
) -> Result<UpdateOutcome> {
    let mut lin = g.mean;
    let (mut post, _) = linearized(model, g, z, r, &lin)?;
    for it in 1..=cfg.max_iterations {
        let (next, next_post) = damped(&lin, &post.mean, |x| Ok((*x, linearized(model, g, z, r, x)?.0)))?;
        let shift = (next - lin).norm();
        lin = next;
        post = next_post;
        if shift < cfg.convergence_tol {
            return Ok(UpdateOutcome {
                state: post,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(UpdateOutcome {
        state: post,
        iterations: cfg.max_iterations,
        converged: false,
    })
}

/// Halvings tried before an undefined linearization point is reported.
const MAX_STEP_HALVINGS: usize = 40;

/// Error kinds that mark a trial point as outside the bound-orbit region.
fn outside_domain(e: &Error) -> bool {
    matches!(e, Error::Unbound(_) | Error::Eccentricity(_) | Error::DegenerateState(_))
}

/// Tries `from + λ (to - from)` for `λ = 1, 1/2, 1/4, …` and returns the
/// first point at which `eval` is defined, with its value.
fn damped<T>(
    from: &Vector6<f64>,
    to: &Vector6<f64>,
    mut eval: impl FnMut(&Vector6<f64>) -> Result<(Vector6<f64>, T)>,
) -> Result<(Vector6<f64>, T)> {
    let mut lambda = 1.0;
    for _ in 0..MAX_STEP_HALVINGS {
        let x = from + (to - from) * lambda;
        match eval(&x) {
            Ok(v) => return Ok(v),
            Err(e) if outside_domain(&e) => lambda *= 0.5,
            Err(e) => return Err(e),
        }
    }
    eval(from)
}

struct SigmaSet {
    points: Vec<Vector6<f64>>,
    wm: Vec<f64>,
}

/// Scaled symmetric sigma points for `N(center, cov)`.
fn sigma_points(center: &Vector6<f64>, cov: &Matrix6<f64>, cfg: &UpdateConfig) -> Result<SigmaSet> {
    let n = 6.0;
    let lambda = cfg.ukf_alpha.powi(2) * (n + cfg.ukf_kappa) - n;
    let c = n + lambda;
    if !(c > 0.0) {
        return Err(Error::Domain(format!("unscented scaling n + λ = {c} must be positive")));
    }
    let l = (covariance_hygiene(cov)? * c)
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("sigma-point covariance".into()))?
        .l();
    let mut points = Vec::with_capacity(13);
    points.push(*center);
    for k in 0..6 {
        points.push(center + l.column(k));
    }
    for k in 0..6 {
        points.push(center - l.column(k));
    }
    let w = 0.5 / c;
    let wm0 = lambda / c;
    let mut wm = vec![w; 13];
    wm[0] = wm0;
    Ok(SigmaSet { points, wm })
}

struct Moments {
    zbar: Vector2<f64>,
    pzz: Matrix2<f64>,
    pxz: Matrix6x2<f64>,
}

fn unscented_moments<M: MeasurementModel>(
    model: &M,
    center: &Vector6<f64>,
    cov: &Matrix6<f64>,
    cfg: &UpdateConfig,
) -> Result<Moments> {
    let set = sigma_points(center, cov, cfg)?;
    let z0 = model.predict(&set.points[0])?;
    // moments about z0: algebraically the usual sums, but without the
    // O(1/α²) central weight cancelling against the others
    let mut dzs = Vec::with_capacity(set.points.len() - 1);
    for p in &set.points[1..] {
        let zi = model.predict(p)?;
        dzs.push(model.align(&zi, &z0) - z0);
    }
    let w = &set.wm[1..];
    let m = dzs.iter().zip(w).fold(Vector2::zeros(), |acc, (d, w)| acc + d * *w);
    let mut pzz = m * m.transpose() * (cfg.ukf_beta - cfg.ukf_alpha.powi(2));
    let mut pxz = Matrix6x2::zeros();
    for ((p, d), w) in set.points[1..].iter().zip(&dzs).zip(w) {
        pzz += d * d.transpose() * *w;
        pxz += (p - center) * d.transpose() * *w;
    }
    Ok(Moments { zbar: z0 + m, pzz, pxz })
}

fn unscented<M: MeasurementModel>(
    model: &M,
    g: &GaussianState,
    z: &Vector2<f64>,
    r: &Matrix2<f64>,
    cfg: &UpdateConfig,
) -> Result<GaussianState> {
    let mo = unscented_moments(model, &g.mean, &g.covariance, cfg)?;
    let z = model.align(z, &mo.zbar);
    let s = mo.pzz + r;
    let s = 0.5 * (s + s.transpose());
    let s_chol = s
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("innovation covariance {s:?}")))?;
    let k: Matrix6x2<f64> = s_chol.solve(&mo.pxz.transpose()).transpose();
    let mean = g.mean + k * (z - mo.zbar);
    let cov = g.covariance - k * s * k.transpose();
    Ok(GaussianState {
        mean,
        covariance: covariance_hygiene(&cov)?,
        time: g.time,
    })
}

/// Statistical linear regression of `h` under `N(center, cov)`:
/// `h(x) ≈ zbar + A (x - center)` with residual covariance `omega`.
struct Slr {
    center: Vector6<f64>,
    a: Matrix2x6<f64>,
    zbar: Vector2<f64>,
    omega: Matrix2<f64>,
}

fn statistical_linearization<M: MeasurementModel>(
    model: &M,
    center: &Vector6<f64>,
    cov: &Matrix6<f64>,
    cfg: &UpdateConfig,
) -> Result<Slr> {
    let mo = unscented_moments(model, center, cov, cfg)?;
    // Jacobi-equilibrated solve: variances here can span twenty decades
    let d = cov.diagonal().map(|v| v.max(f64::MIN_POSITIVE).sqrt());
    let dinv = d.map(|v| 1.0 / v);
    let scaled = Matrix6::from_diagonal(&dinv) * cov * Matrix6::from_diagonal(&dinv);
    let chol = covariance_hygiene(&scaled)?
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("regression covariance".into()))?;
    let rhs = Matrix6::from_diagonal(&dinv) * mo.pxz;
    let at = Matrix6::from_diagonal(&dinv) * chol.solve(&rhs);
    let a = at.transpose();
    let omega = mo.pzz - a * cov * a.transpose();
    Ok(Slr {
        center: *center,
        a,
        zbar: mo.zbar,
        omega: 0.5 * (omega + omega.transpose()),
    })
}

fn slr_update<M: MeasurementModel>(
    model: &M,
    g: &GaussianState,
    z: &Vector2<f64>,
    r: &Matrix2<f64>,
    slr: &Slr,
) -> Result<GaussianState> {
    let z = model.align(z, &slr.zbar);
    let zhat = slr.zbar + slr.a * (g.mean - slr.center);
    linear_update(g, &slr.a, &zhat, &(slr.omega + r), &z)
}

/// Iterated posterior linearization: regress `h` under the current posterior,
/// then update the prior with that linear model. When the regression is
/// undefined at the new posterior (sigma points past `e = 1`) the step is
/// halved, blending mean and covariance with the previous iterate.
fn iterated_ukf<M: MeasurementModel>(
    model: &M,
    g: &GaussianState,
    z: &Vector2<f64>,
    r: &Matrix2<f64>,
    cfg: &UpdateConfig,
) -> Result<UpdateOutcome> {
    let mut current = *g;
    let mut slr = statistical_linearization(model, &g.mean, &g.covariance, cfg)?;
    let mut post = slr_update(model, g, z, r, &slr)?;
    for it in 1..=cfg.max_iterations {
        let mut lambda = 1.0;
        let (next, next_slr) = loop {
            let trial = GaussianState {
                mean: current.mean + (post.mean - current.mean) * lambda,
                covariance: current.covariance + (post.covariance - current.covariance) * lambda,
                time: g.time,
            };
            match statistical_linearization(model, &trial.mean, &trial.covariance, cfg) {
                Ok(s) => break (trial, s),
                Err(e) if outside_domain(&e) && lambda > 0.5f64.powi(MAX_STEP_HALVINGS as i32) => lambda *= 0.5,
                Err(e) => return Err(e),
            }
        };
        let shift = (next.mean - current.mean).norm();
        current = next;
        slr = next_slr;
        post = slr_update(model, g, z, r, &slr)?;
        if shift < cfg.convergence_tol {
            return Ok(UpdateOutcome {
                state: post,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(UpdateOutcome {
        state: post,
        iterations: cfg.max_iterations,
        converged: false,
    })
}
