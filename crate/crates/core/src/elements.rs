//! Orbital features of a Cartesian state and exact two-body propagation.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kepler::{self, Eccentricity};

/// Earth gravitational parameter in km³/s².
pub const MU_EARTH: f64 = 398_600.441_8;

/// Gravitational parameter of standardized units (length and time scaled so
/// the central orbit has `a = 1` and period `2π`).
pub const MU_STANDARDIZED: f64 = 1.0;

/// Cartesian position/velocity pair at an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub epoch: f64,
}

impl StateVector {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>, epoch: f64) -> Self {
        Self {
            position,
            velocity,
            epoch,
        }
    }

    pub fn from_slice(pv: &[f64; 6], epoch: f64) -> Self {
        Self::new(
            Vector3::new(pv[0], pv[1], pv[2]),
            Vector3::new(pv[3], pv[4], pv[5]),
            epoch,
        )
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
        ]
    }

    /// Applies a rotation to both position and velocity.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Self {
        Self::new(rotation * self.position, rotation * self.velocity, self.epoch)
    }

    pub fn specific_energy(&self, mu: f64) -> f64 {
        0.5 * self.velocity.norm_squared() - mu / self.position.norm()
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.position.cross(&self.velocity)
    }

    pub fn eccentricity_vector(&self, mu: f64) -> Vector3<f64> {
        self.velocity.cross(&self.angular_momentum()) / mu - self.position.normalize()
    }

    /// Convenience wrapper around [`orbital_features`] + [`propagate`].
    pub fn propagate(&self, mu: f64, dt: f64) -> Result<StateVector> {
        let features = orbital_features(self, mu)?;
        propagate(self, &features, dt)
    }
}

/// Positively oriented radial/tangential/normal basis fixed at the state's epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtnBasis {
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
    pub w: Vector3<f64>,
}

impl RtnBasis {
    pub fn standard() -> Self {
        Self {
            u: Vector3::x(),
            v: Vector3::y(),
            w: Vector3::z(),
        }
    }

    /// Matrix with columns `[u v w]`; maps basis coordinates to the parent frame.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.u, self.v, self.w])
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self {
            u: m.column(0).into_owned(),
            v: m.column(1).into_owned(),
            w: m.column(2).into_owned(),
        }
    }
}

/// Invariant features of one bound two-body state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalFeatures {
    pub basis: RtnBasis,
    /// Angular momentum magnitude.
    pub h: f64,
    pub e_vec: Vector3<f64>,
    pub e: Eccentricity,
    /// Semi-major axis.
    pub a: f64,
    /// Period.
    pub p: f64,
    /// Mean motion.
    pub n: f64,
    /// Direction of perigee in the RTN plane, measured from `u`.
    pub theta_p: f64,
    pub f1: f64,
    pub f2: f64,
    pub mu: f64,
}

impl OrbitalFeatures {
    /// Semi-latus rectum `h²/μ`.
    pub fn semi_latus_rectum(&self) -> f64 {
        self.h * self.h / self.mu
    }

    /// Perigee direction on the mean-anomaly scale, `F_T-to-M(θ_p, e)`.
    pub fn phi_p(&self) -> f64 {
        kepler::true_to_mean(self.theta_p, self.e).expect("validated eccentricity")
    }

    pub fn apogee_radius(&self) -> f64 {
        self.a * (1.0 + self.e.value())
    }

    pub fn perigee_radius(&self) -> f64 {
        self.a * (1.0 - self.e.value())
    }

    pub fn apogee_speed(&self) -> f64 {
        let e = self.e.value();
        ((1.0 - e) / (1.0 + e) * self.mu / self.a).sqrt()
    }

    pub fn perigee_speed(&self) -> f64 {
        let e = self.e.value();
        ((1.0 + e) / (1.0 - e) * self.mu / self.a).sqrt()
    }

    /// Angles and radius after `t` seconds, with `θ(0) = φ(0) = 0`.
    pub fn propagated_angles(&self, t: f64) -> Result<PropagatedAngles> {
        let phi = self.n * t;
        let phi_p = self.phi_p();
        let theta = self.theta_p + kepler::mean_to_true(phi - phi_p, self.e)?;
        let r = self.semi_latus_rectum() / (1.0 + self.e.value() * (theta - self.theta_p).cos());
        Ok(PropagatedAngles { theta, phi, r })
    }
}

/// Angular position on the true (`theta`) and mean (`phi`) scales plus the
/// radius at a propagation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatedAngles {
    pub theta: f64,
    pub phi: f64,
    pub r: f64,
}

pub fn rtn_basis(s: &StateVector) -> Result<RtnBasis> {
    let r = s.position.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::DegenerateState("zero or non-finite position"));
    }
    let u = s.position / r;
    let tangential = s.velocity - u * s.velocity.dot(&u);
    let tn = tangential.norm();
    if !(tn > 1e-12 * s.velocity.norm().max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateState("position and velocity are parallel"));
    }
    let v = tangential / tn;
    let w = u.cross(&v);
    Ok(RtnBasis { u, v, w })
}

pub fn orbital_features(s: &StateVector, mu: f64) -> Result<OrbitalFeatures> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("gravitational parameter {mu} must be positive")));
    }
    let basis = rtn_basis(s)?;
    let h_vec = s.angular_momentum();
    let h = h_vec.norm();
    let e_vec = s.velocity.cross(&h_vec) / mu - basis.u;
    let e_raw = e_vec.norm();
    let e = Eccentricity::new(e_raw).map_err(|_| Error::Unbound(e_raw))?;
    let a = h * h / mu / (1.0 - e_raw * e_raw);
    let n = (mu / (a * a * a)).sqrt();
    let f1 = e_vec.dot(&basis.u);
    let f2 = e_vec.dot(&basis.v);
    Ok(OrbitalFeatures {
        basis,
        h,
        e_vec,
        e,
        a,
        p: TAU / n,
        n,
        theta_p: f2.atan2(f1),
        f1,
        f2,
        mu,
    })
}

/// Exact Keplerian state at `s.epoch + t`.
///
/// Velocity uses the closed form: radial speed `(μ/h) e sin(θ - θ_p)` and
/// transverse speed `h / r`.
pub fn propagate(s: &StateVector, features: &OrbitalFeatures, t: f64) -> Result<StateVector> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("propagation time {t} is not finite")));
    }
    if t == 0.0 {
        return Ok(*s);
    }
    let angles = features.propagated_angles(t)?;
    let RtnBasis { u, v, .. } = features.basis;
    let (sin_t, cos_t) = angles.theta.sin_cos();
    let radial = u * cos_t + v * sin_t;
    let transverse = v * cos_t - u * sin_t;
    let e = features.e.value();
    let r_dot = features.mu / features.h * e * (angles.theta - features.theta_p).sin();
    Ok(StateVector {
        position: radial * angles.r,
        velocity: radial * r_dot + transverse * (features.h / angles.r),
        epoch: s.epoch + t,
    })
}

/// Rotation by `angle` about the x axis.
pub fn rotation_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation by `angle` about the z axis.
pub fn rotation_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
