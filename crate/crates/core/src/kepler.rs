//! Mean, eccentric and true anomaly conversions for elliptic orbits.
//!
//! Anomalies are plain real numbers rather than wrapped angles. Each
//! conversion identifies the `2π` window `[-π + 2πk, π + 2πk)` holding its
//! argument, converts the reduced value and adds `2πk` back, so the winding
//! count survives every round trip.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Newton iterations attempted before switching to bisection.
const NEWTON_MAX_ITER: usize = 50;
const BISECTION_MAX_ITER: usize = 200;

/// Eccentricity of a bound orbit, `0 <= e < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Eccentricity(f64);

impl Eccentricity {
    pub fn new(e: f64) -> Result<Self> {
        if e.is_finite() && (0.0..1.0).contains(&e) {
            Ok(Self(e))
        } else {
            Err(Error::Eccentricity(e))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Eccentricity {
    type Error = Error;
    fn try_from(e: f64) -> Result<Self> {
        Self::new(e)
    }
}

impl From<Eccentricity> for f64 {
    fn from(e: Eccentricity) -> f64 {
        e.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyScale {
    Mean,
    Eccentric,
    True,
}

/// An angular position along an orbit measured from perigee, tagged with
/// the scale it is expressed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub value: f64,
    pub scale: AnomalyScale,
}

impl Anomaly {
    pub fn new(value: f64, scale: AnomalyScale) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Domain(format!("anomaly {value} is not finite")));
        }
        Ok(Self { value, scale })
    }

    pub fn mean(value: f64) -> Result<Self> {
        Self::new(value, AnomalyScale::Mean)
    }

    pub fn eccentric(value: f64) -> Result<Self> {
        Self::new(value, AnomalyScale::Eccentric)
    }

    pub fn true_anomaly(value: f64) -> Result<Self> {
        Self::new(value, AnomalyScale::True)
    }

    /// Re-express this anomaly on `target` (the `F_X-to-Y` family).
    pub fn to_scale(self, e: Eccentricity, target: AnomalyScale) -> Result<Anomaly> {
        convert(self, e, target)
    }
}

/// Splits `x` into `(r, k)` with `x = r + 2πk` and `r ∈ [-π, π)`.
#[inline]
pub fn reduce_to_window(x: f64) -> (f64, f64) {
    let k = ((x + PI) / TAU).floor();
    let mut r = x - TAU * k;
    // guard the half-open interval against rounding at the edges
    if r >= PI {
        return (r - TAU, k + 1.0);
    }
    if r < -PI {
        r += TAU;
        return (r, k - 1.0);
    }
    (r, k)
}

/// Wraps an angle into `[-π, π)`.
#[inline]
pub fn wrap_pi(x: f64) -> f64 {
    reduce_to_window(x).0
}

/// Applies an odd map defined on `[0, π]` to `x` with window bookkeeping.
#[inline]
fn windowed<F>(x: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !x.is_finite() {
        return Err(Error::Domain(format!("anomaly {x} is not finite")));
    }
    let (r, k) = reduce_to_window(x);
    let y = if r < 0.0 { -f(-r)? } else { f(r)? };
    Ok(y + TAU * k)
}

/// Solves Kepler's equation `E - e sin E = M` for the eccentric anomaly.
///
/// The result lies in the same `2π` window as `M`. Newton iteration runs
/// inside a bracket that is shrunk at every step; if it has not converged
/// after 50 iterations the remaining bracket is bisected.
pub fn solve_kepler(mean_anomaly: f64, e: Eccentricity) -> Result<f64> {
    windowed(mean_anomaly, |m| solve_reduced(m, e.value()))
}

/// Root of `E - e sin E = m` for `m ∈ [0, π]`; the root lies in `[0, π]`.
fn solve_reduced(m: f64, e: f64) -> Result<f64> {
    if e == 0.0 || m == 0.0 || m == PI {
        return Ok(m);
    }
    let g = |x: f64| x - e * x.sin() - m;

    let (mut lo, mut hi) = (0.0_f64, PI);
    let mut x = if e < 0.8 { m } else { PI };

    for _ in 0..NEWTON_MAX_ITER {
        let gx = g(x);
        if gx == 0.0 {
            return Ok(x);
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = gx / (1.0 - e * x.cos());
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }

    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Numerical(format!(
        "Kepler equation did not converge for M = {m}, e = {e}"
    )))
}

fn eccentric_to_mean_reduced(ecc: f64, e: f64) -> f64 {
    ecc - e * ecc.sin()
}

fn eccentric_to_true_reduced(ecc: f64, e: f64) -> f64 {
    let half = 0.5 * ecc;
    2.0 * ((1.0 + e).sqrt() * half.sin()).atan2((1.0 - e).sqrt() * half.cos())
}

fn true_to_eccentric_reduced(t: f64, e: f64) -> f64 {
    let half = 0.5 * t;
    2.0 * ((1.0 - e).sqrt() * half.sin()).atan2((1.0 + e).sqrt() * half.cos())
}

pub fn mean_to_eccentric(m: f64, e: Eccentricity) -> Result<f64> {
    solve_kepler(m, e)
}

pub fn eccentric_to_mean(ecc: f64, e: Eccentricity) -> Result<f64> {
    windowed(ecc, |x| Ok(eccentric_to_mean_reduced(x, e.value())))
}

pub fn eccentric_to_true(ecc: f64, e: Eccentricity) -> Result<f64> {
    windowed(ecc, |x| Ok(eccentric_to_true_reduced(x, e.value())))
}

pub fn true_to_eccentric(t: f64, e: Eccentricity) -> Result<f64> {
    windowed(t, |x| Ok(true_to_eccentric_reduced(x, e.value())))
}

/// `F_M-to-T`.
pub fn mean_to_true(m: f64, e: Eccentricity) -> Result<f64> {
    windowed(m, |x| {
        let ecc = solve_reduced(x, e.value())?;
        Ok(eccentric_to_true_reduced(ecc, e.value()))
    })
}

/// `F_T-to-M`.
pub fn true_to_mean(t: f64, e: Eccentricity) -> Result<f64> {
    windowed(t, |x| {
        let ecc = true_to_eccentric_reduced(x, e.value());
        Ok(eccentric_to_mean_reduced(ecc, e.value()))
    })
}

/// Converts between any two anomaly scales, composing through the
/// eccentric anomaly.
pub fn convert(a: Anomaly, e: Eccentricity, target: AnomalyScale) -> Result<Anomaly> {
    use AnomalyScale::*;
    let value = match (a.scale, target) {
        (s, t) if s == t => a.value,
        (Mean, Eccentric) => mean_to_eccentric(a.value, e)?,
        (Mean, True) => mean_to_true(a.value, e)?,
        (Eccentric, Mean) => eccentric_to_mean(a.value, e)?,
        (Eccentric, True) => eccentric_to_true(a.value, e)?,
        (True, Eccentric) => true_to_eccentric(a.value, e)?,
        (True, Mean) => true_to_mean(a.value, e)?,
        _ => unreachable!(),
    };
    Anomaly::new(value, target)
}

/// Derivative of `F_T-to-M` with respect to the true anomaly,
/// `(1 - e²)^{3/2} / (1 + e cos T)²`.
pub fn true_to_mean_derivative(t: f64, e: Eccentricity) -> f64 {
    let e = e.value();
    (1.0 - e * e).powf(1.5) / (1.0 + e * t.cos()).powi(2)
}
