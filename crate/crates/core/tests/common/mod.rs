#![allow(dead_code)]

use ast_orbit::coords::CentralState;
use ast_orbit::elements::{rotation_x, rotation_z, StateVector};
use nalgebra::{Matrix3, Vector3};

/// Cartesian state from classical elements, written out independently of
/// the crate's own conversions: perifocal position and velocity rotated by
/// `Rz(Ω) Rx(i) Rz(ω)`.
pub fn state_from_elements(mu: f64, a: f64, e: f64, i: f64, raan: f64, argp: f64, nu: f64) -> StateVector {
    let p = a * (1.0 - e * e);
    let r = p / (1.0 + e * nu.cos());
    let pos = Vector3::new(r * nu.cos(), r * nu.sin(), 0.0);
    let k = (mu / p).sqrt();
    let vel = Vector3::new(-k * nu.sin(), k * (e + nu.cos()), 0.0);
    let q = rotation_z(raan) * rotation_x(i) * rotation_z(argp);
    StateVector::new(q * pos, q * vel, 0.0)
}

/// Central state in standardized units (`μ = 1`, `a = 1`) at true anomaly
/// `t0`, orbital plane tilted by `inc`.
pub fn central(e: f64, t0: f64, inc: f64) -> CentralState {
    CentralState::new(state_from_elements(1.0, 1.0, e, inc, 0.3, 1.1, t0), 1.0).unwrap()
}

/// Rotation from three Euler angles.
pub fn rotation(a: f64, b: f64, c: f64) -> Matrix3<f64> {
    rotation_z(a) * rotation_x(b) * rotation_z(c)
}

/// Two-body right-hand side.
fn accel(r: &Vector3<f64>, mu: f64) -> Vector3<f64> {
    -mu * r / r.norm().powi(3)
}

/// Classical fixed-step RK4 on the two-body problem.
pub fn rk4(s: &StateVector, mu: f64, t: f64, steps: usize) -> StateVector {
    let h = t / steps as f64;
    let (mut r, mut v) = (s.position, s.velocity);
    for _ in 0..steps {
        let (k1r, k1v) = (v, accel(&r, mu));
        let (k2r, k2v) = (v + k1v * (h / 2.0), accel(&(r + k1r * (h / 2.0)), mu));
        let (k3r, k3v) = (v + k2v * (h / 2.0), accel(&(r + k2r * (h / 2.0)), mu));
        let (k4r, k4v) = (v + k3v * h, accel(&(r + k3r * h), mu));
        r += (k1r + k2r * 2.0 + k3r * 2.0 + k4r) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
    }
    StateVector::new(r, v, s.epoch + t)
}

/// Largest entrywise difference relative to the larger of the two norms.
pub fn rel_diff(a: &StateVector, b: &StateVector) -> f64 {
    let dp = (a.position - b.position).norm() / a.position.norm().max(b.position.norm());
    let dv = (a.velocity - b.velocity).norm() / a.velocity.norm().max(b.velocity.norm());
    dp.max(dv)
}
