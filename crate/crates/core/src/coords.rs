//! Cartesian-ECI, Keplerian, equinoctial and AST coordinate systems.
//!
//! AST coordinates are equinoctial-style elements measured in the central
//! RTN (CRTN) basis of a fixed central state:
//!
//! | index | meaning                                             |
//! |-------|-----------------------------------------------------|
//! | `a1`  | `2 tan(i/2) cos Ω` (inclination vector)             |
//! | `a2`  | `2 tan(i/2) sin Ω`                                  |
//! | `a3`  | `φ(t)`, angular position on the mean-anomaly scale  |
//! | `a4`  | `e cos θ_p` (ellipticity vector)                    |
//! | `a5`  | `e sin θ_p`                                         |
//! | `a6`  | mean motion `n`                                     |
//!
//! `a3` is a real number, not an angle: the deviated initial angle is reduced
//! to `[-π, π)` once and windings accumulate from there, so Keplerian
//! propagation is `a3(t) = a3(0) + a6 t` with every other coordinate fixed.
//!
//! Angles inside the orbital plane are "remapped" onto the reference plane by
//! rotating about the node line; with `p = tan(i/2) sin Ω` and
//! `q = tan(i/2) cos Ω` the images of the reference axes are the usual
//! equinoctial `f`/`g` vectors, which never need `Ω` or `ω` individually.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::elements::{orbital_features, OrbitalFeatures, RtnBasis, StateVector};
use crate::error::{Error, Result};
use crate::kepler::{self, wrap_pi, Eccentricity};

/// Inclinations this close to `π` are treated as retrograde-singular.
pub const RETROGRADE_GUARD: f64 = 1e-8;
const DEGENERATE_ANGLE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerianElements {
    /// Inclination in `[0, π]`.
    pub i: f64,
    /// Right ascension of ascending node in `[0, 2π)`.
    pub raan: f64,
    pub e: Eccentricity,
    /// Argument of perigee in `[0, 2π)`.
    pub argp: f64,
    /// Semi-major axis.
    pub a: f64,
    pub true_anomaly: f64,
    pub reference_basis: RtnBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquinoctialElements {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub e6: f64,
    pub reference_basis: RtnBasis,
}

impl EquinoctialElements {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.e1, self.e2, self.e3, self.e4, self.e5, self.e6)
    }
}

#[inline]
fn positive_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Equinoctial `f`, `g`, `w` unit vectors for `p = tan(i/2) sin Ω`, `q = tan(i/2) cos Ω`.
pub fn equinoctial_frame(p: f64, q: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let s = 1.0 + p * p + q * q;
    let f = Vector3::new(1.0 - p * p + q * q, 2.0 * p * q, -2.0 * p) / s;
    let g = Vector3::new(2.0 * p * q, 1.0 + p * p - q * q, 2.0 * q) / s;
    let w = Vector3::new(2.0 * p, -2.0 * q, 1.0 - p * p - q * q) / s;
    (f, g, w)
}

/// Keplerian elements of `s` relative to `basis`.
///
/// When `i < 1e-12` the node is undefined and `Ω = 0`; when `e < 1e-12` the
/// perigee is undefined and `ω = 0`.
pub fn eci_to_keplerian(s: &StateVector, basis: &RtnBasis, mu: f64) -> Result<KeplerianElements> {
    let rt = basis.matrix().transpose();
    let y = rt * s.position;
    let yd = rt * s.velocity;
    let r = y.norm();
    let h_vec = y.cross(&yd);
    let h = h_vec.norm();
    if !(r > 0.0) || !(h > 0.0) {
        return Err(Error::DegenerateState("zero position or angular momentum"));
    }
    let w = h_vec / h;
    let i = w.z.clamp(-1.0, 1.0).acos();
    if i > PI - RETROGRADE_GUARD {
        return Err(Error::RetrogradeSingularity(i));
    }
    let node = Vector3::new(-w.y, w.x, 0.0);
    let sin_i = node.norm();
    let (raan, node_dir) = if sin_i < DEGENERATE_ANGLE {
        (0.0, Vector3::x())
    } else {
        (positive_angle(w.x.atan2(-w.y)), node / sin_i)
    };

    let e_vec = yd.cross(&h_vec) / mu - y / r;
    let e_raw = e_vec.norm();
    let e = Eccentricity::new(e_raw).map_err(|_| Error::Unbound(e_raw))?;
    let (argp, peri_dir) = if e_raw < DEGENERATE_ANGLE {
        (0.0, node_dir)
    } else {
        let ang = node_dir.cross(&e_vec).dot(&w).atan2(node_dir.dot(&e_vec));
        (positive_angle(ang), e_vec / e_raw)
    };
    let true_anomaly = peri_dir.cross(&y).dot(&w).atan2(peri_dir.dot(&y));
    Ok(KeplerianElements {
        i,
        raan,
        e,
        argp,
        a: h * h / mu / (1.0 - e_raw * e_raw),
        true_anomaly,
        reference_basis: *basis,
    })
}

pub fn keplerian_to_eci(k: &KeplerianElements, mu: f64, epoch: f64) -> Result<StateVector> {
    if !(k.a > 0.0) {
        return Err(Error::Domain(format!("semi-major axis {} must be positive", k.a)));
    }
    let e = k.e.value();
    let slr = k.a * (1.0 - e * e);
    let (st, ct) = k.true_anomaly.sin_cos();
    let r = slr / (1.0 + e * ct);
    let pos_pf = Vector3::new(r * ct, r * st, 0.0);
    let vel_pf = Vector3::new(-st, e + ct, 0.0) * (mu / slr).sqrt();
    let q = crate::elements::rotation_z(k.raan)
        * crate::elements::rotation_x(k.i)
        * crate::elements::rotation_z(k.argp);
    let to_parent = k.reference_basis.matrix() * q;
    Ok(StateVector::new(to_parent * pos_pf, to_parent * vel_pf, epoch))
}

pub fn keplerian_to_equinoctial(k: &KeplerianElements) -> Result<EquinoctialElements> {
    if k.i > PI - RETROGRADE_GUARD {
        return Err(Error::RetrogradeSingularity(k.i));
    }
    let t = 2.0 * (0.5 * k.i).tan();
    let lp = k.raan + k.argp;
    let e = k.e.value();
    Ok(EquinoctialElements {
        e1: t * k.raan.cos(),
        e2: t * k.raan.sin(),
        e3: k.raan + k.argp + k.true_anomaly,
        e4: e * lp.cos(),
        e5: e * lp.sin(),
        e6: k.a,
        reference_basis: k.reference_basis,
    })
}

pub fn eci_to_equinoctial(s: &StateVector, basis: &RtnBasis, mu: f64) -> Result<EquinoctialElements> {
    keplerian_to_equinoctial(&eci_to_keplerian(s, basis, mu)?)
}

/// Reference state at `t = 0` defining the CRTN basis.
///
/// In CRTN coordinates (`y = R^(c)ᵀ x`) the central state reads
/// position `(A, 0, 0)` and velocity `(B, C, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralState {
    pub state: StateVector,
    pub features: OrbitalFeatures,
    /// `R^(c) = [u v w]`.
    pub rotation: Matrix3<f64>,
    /// `A`, the central radius.
    pub radius: f64,
    /// `B`, the central radial speed.
    pub radial_speed: f64,
    /// `C`, the central transverse speed.
    pub transverse_speed: f64,
}

impl CentralState {
    pub fn new(state: StateVector, mu: f64) -> Result<Self> {
        let features = orbital_features(&state, mu)?;
        let rotation = features.basis.matrix();
        let radius = state.position.norm();
        let radial_speed = state.velocity.dot(&features.basis.u);
        let transverse_speed = state.velocity.dot(&features.basis.v);
        Ok(Self {
            state,
            features,
            rotation,
            radius,
            radial_speed,
            transverse_speed,
        })
    }

    /// Builds the central state from its CRTN parameters `(A, B, C)` and the
    /// rotation taking CRTN coordinates to ECI.
    pub fn from_crtn(
        radius: f64,
        radial_speed: f64,
        transverse_speed: f64,
        rotation: &Matrix3<f64>,
        mu: f64,
        epoch: f64,
    ) -> Result<Self> {
        if !(radius > 0.0 && transverse_speed > 0.0) {
            return Err(Error::DegenerateState("central state needs A > 0 and C > 0"));
        }
        let s = StateVector::new(
            Vector3::new(radius, 0.0, 0.0),
            Vector3::new(radial_speed, transverse_speed, 0.0),
            epoch,
        )
        .rotated(rotation);
        Self::new(s, mu)
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.features.mu
    }

    #[inline]
    pub fn epoch(&self) -> f64 {
        self.state.epoch
    }

    /// `(A, B, C)`.
    pub fn abc(&self) -> (f64, f64, f64) {
        (self.radius, self.radial_speed, self.transverse_speed)
    }

    /// Central true anomaly at `t = 0`; `θ(0) = 0` so `T(0) = -θ_p`.
    pub fn true_anomaly(&self) -> f64 {
        -self.features.theta_p
    }

    /// AST coordinates of the central state itself at `t = 0`.
    pub fn ast(&self) -> AstCoordinates {
        AstCoordinates {
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
            a4: self.features.f1,
            a5: self.features.f2,
            a6: self.features.n,
        }
    }

    /// Position and velocity expressed in CRTN coordinates.
    pub fn to_crtn(&self, s: &StateVector) -> (Vector3<f64>, Vector3<f64>) {
        let rt = self.rotation.transpose();
        (rt * s.position, rt * s.velocity)
    }

    /// Deviation `(ε, δ)` of `s` from the central state in CRTN coordinates.
    pub fn deviation(&self, s: &StateVector) -> Vector6<f64> {
        let (y, yd) = self.to_crtn(s);
        let (a, b, c) = self.abc();
        Vector6::new(y.x - a, y.y, y.z, yd.x - b, yd.y - c, yd.z)
    }

    /// Inverse of [`CentralState::deviation`].
    pub fn from_deviation(&self, dev: &Vector6<f64>, epoch: f64) -> StateVector {
        let (a, b, c) = self.abc();
        let y = Vector3::new(a + dev[0], dev[1], dev[2]);
        let yd = Vector3::new(b + dev[3], c + dev[4], dev[5]);
        StateVector::new(self.rotation * y, self.rotation * yd, epoch)
    }

    /// Central state propagated to `epoch + dt`.
    pub fn propagate(&self, dt: f64) -> Result<StateVector> {
        crate::elements::propagate(&self.state, &self.features, dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AstCoordinates {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
}

impl AstCoordinates {
    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            a1: v[0],
            a2: v[1],
            a3: v[2],
            a4: v[3],
            a5: v[4],
            a6: v[5],
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.a1, self.a2, self.a3, self.a4, self.a5, self.a6)
    }

    pub fn eccentricity(&self) -> Result<Eccentricity> {
        let e = self.a4.hypot(self.a5);
        Eccentricity::new(e).map_err(|_| Error::Unbound(e))
    }

    /// Perigee direction in the remapped CRTN plane.
    pub fn theta_p(&self) -> f64 {
        self.a5.atan2(self.a4)
    }

    pub fn inclination(&self) -> f64 {
        2.0 * (0.5 * self.a1.hypot(self.a2)).atan()
    }

    /// `f`, `g`, `w` of the orbital plane, in CRTN coordinates.
    pub fn frame(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        equinoctial_frame(0.5 * self.a2, 0.5 * self.a1)
    }

    /// True anomaly `F_M-to-T(a3 - φ_p, e)` at the epoch of `a3`.
    pub fn true_anomaly(&self) -> Result<f64> {
        let e = self.eccentricity()?;
        let theta_p = self.theta_p();
        let phi_p = kepler::true_to_mean(theta_p, e)?;
        kepler::mean_to_true(self.a3 - phi_p, e)
    }

    /// Remapped true longitude `θ = θ_p + T`, unwrapped alongside `a3`.
    pub fn true_longitude(&self) -> Result<f64> {
        Ok(self.theta_p() + self.true_anomaly()?)
    }

    /// Keplerian elements with respect to the CRTN basis.
    pub fn keplerian(&self, mu: f64) -> Result<KeplerianElements> {
        if !(self.a6 > 0.0) {
            return Err(Error::Domain(format!("mean motion {} must be positive", self.a6)));
        }
        let e = self.eccentricity()?;
        let theta_p = self.theta_p();
        let raan = self.a2.atan2(self.a1);
        Ok(KeplerianElements {
            i: self.inclination(),
            raan: positive_angle(raan),
            e,
            argp: positive_angle(theta_p - raan),
            a: (mu / (self.a6 * self.a6)).cbrt(),
            true_anomaly: self.true_anomaly()?,
            reference_basis: RtnBasis::standard(),
        })
    }

    /// Exact Keplerian propagation: only `a3` moves.
    pub fn propagated(&self, dt: f64) -> Self {
        Self {
            a3: self.a3 + self.a6 * dt,
            ..*self
        }
    }
}

/// AST coordinates of `s` relative to the central state `c`.
pub fn eci_to_ast(s: &StateVector, c: &CentralState) -> Result<AstCoordinates> {
    let mu = c.mu();
    let (y, yd) = c.to_crtn(s);
    let r = y.norm();
    let h_vec = y.cross(&yd);
    let h = h_vec.norm();
    if !(r > 0.0) || !(h > 0.0) {
        return Err(Error::DegenerateState("zero position or angular momentum"));
    }
    let w = h_vec / h;
    if 1.0 + w.z <= DEGENERATE_ANGLE {
        return Err(Error::RetrogradeSingularity(w.z.clamp(-1.0, 1.0).acos()));
    }
    let a1 = -2.0 * w.y / (1.0 + w.z);
    let a2 = 2.0 * w.x / (1.0 + w.z);
    let (f, g, _) = equinoctial_frame(0.5 * a2, 0.5 * a1);

    let e_vec = yd.cross(&h_vec) / mu - y / r;
    let e_raw = e_vec.norm();
    let e = Eccentricity::new(e_raw).map_err(|_| Error::Unbound(e_raw))?;
    let a4 = e_vec.dot(&f);
    let a5 = e_vec.dot(&g);

    let theta = y.dot(&g).atan2(y.dot(&f));
    let theta_p = a5.atan2(a4);
    let phi = kepler::true_to_mean(theta_p, e)? + kepler::true_to_mean(wrap_pi(theta - theta_p), e)?;

    let sma = h * h / mu / (1.0 - e_raw * e_raw);
    let n = (mu / (sma * sma * sma)).sqrt();
    let t = s.epoch - c.epoch();
    let phi0 = wrap_pi(phi - n * t);
    Ok(AstCoordinates {
        a1,
        a2,
        a3: phi0 + n * t,
        a4,
        a5,
        a6: n,
    })
}

/// Cartesian-ECI state for AST coordinates `a`, stamped at `c.epoch + t`.
pub fn ast_to_eci(a: &AstCoordinates, c: &CentralState, t: f64) -> Result<StateVector> {
    let mu = c.mu();
    if !(a.a6 > 0.0) || !a.a6.is_finite() {
        return Err(Error::Domain(format!("mean motion {} must be positive", a.a6)));
    }
    let e = a.eccentricity()?;
    let ev = e.value();
    let (f, g, _) = a.frame();
    let theta_p = a.theta_p();
    let true_anom = kepler::mean_to_true(a.a3 - kepler::true_to_mean(theta_p, e)?, e)?;
    let theta = theta_p + true_anom;
    let sma = (mu / (a.a6 * a.a6)).cbrt();
    let slr = sma * (1.0 - ev * ev);
    let r = slr / (1.0 + ev * true_anom.cos());
    let (st, ct) = theta.sin_cos();
    let y = (f * ct + g * st) * r;
    let yd = (g * (ct + a.a4) - f * (st + a.a5)) * (mu / slr).sqrt();
    Ok(StateVector::new(c.rotation * y, c.rotation * yd, c.epoch() + t))
}

/// First-order map from CRTN deviations `(ε₁, ε₂, ε₃, δ₁, δ₂, δ₃)` to AST
/// deviations at `t = 0`, together with its named intermediates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AstJacobian {
    /// Rows `A₁…A₆`, columns `ε₁, ε₂, ε₃, δ₁, δ₂, δ₃`.
    pub j: Matrix6<f64>,
    pub d: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

/// Closed-form Jacobian of [`eci_to_ast`] at the central state.
///
/// Row 6 follows from `Δn = -(3/2)(n/h²)(Δ_{h²} + μ a Δ_{e²})` with
/// `Δ_{h²} = 2AC(Aδ₂ + Cε₁ - Bε₂)` and `μ²Δ_{e²}` collected per deviation
/// component into `Q₁…Q₃`. A radial step leaves `r/|r|` unchanged, so
/// `ε₁` enters `f₁` only through `C²/μ`.
pub fn ast_jacobian(c: &CentralState) -> AstJacobian {
    let mu = c.mu();
    let (a, b, cc) = c.abc();
    let e = c.features.e.value();
    let t0 = c.true_anomaly();
    let h = a * cc;
    let sma = a * mu / (2.0 * mu - a * b * b - a * cc * cc);
    let n = (mu / (sma * sma * sma)).sqrt();

    let d = (1.0 - e * e).powf(1.5) / (1.0 + e * t0.cos()).powi(2);
    let scale = -1.5 * n / (h * h);
    let p1 = scale * 2.0 * a * cc;
    let p2 = scale * sma / mu;
    let k = a * cc * cc - mu;
    let q1 = 2.0 * cc * cc * k + 2.0 * a * b * b * cc * cc;
    let q2 = -2.0 * b * cc * k - 2.0 * a * b.powi(3) * cc + 2.0 * b * cc * mu;
    let q3 = 4.0 * a * cc * k + 2.0 * a * a * b * b * cc;

    #[rustfmt::skip]
    let j = Matrix6::new(
        0.0, 0.0, -b / (a * cc), 0.0, 0.0, 1.0 / cc,
        0.0, 0.0, -1.0 / a, 0.0, 0.0, 0.0,
        0.0, d / a, 0.0, 0.0, 0.0, 0.0,
        cc * cc / mu, -b * cc / mu, 0.0, 0.0, 2.0 * a * cc / mu, 0.0,
        -b * cc / mu, b * b / mu - 1.0 / a, 0.0, -a * cc / mu, -a * b / mu, 0.0,
        p1 * cc + p2 * q1, -p1 * b + p2 * q2, 0.0, 2.0 * p2 * a * a * b * cc * cc, p1 * a + p2 * q3, 0.0,
    );
    AstJacobian { j, d, p1, p2, q1, q2, q3 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{rotation_x, rotation_z};
    use approx::assert_relative_eq;

    fn standardized(e: f64, t0: f64) -> CentralState {
        let h2 = 1.0 - e * e;
        let h = h2.sqrt();
        let a = h2 / (1.0 + e * t0.cos());
        let c = h / a;
        let b = e / (a * c) * t0.sin();
        CentralState::from_crtn(a, b, c, &Matrix3::identity(), 1.0, 0.0).unwrap()
    }

    #[test]
    fn equatorial_circular_conventions() {
        let s = StateVector::new(Vector3::x(), Vector3::y(), 0.0);
        let k = eci_to_keplerian(&s, &RtnBasis::standard(), 1.0).unwrap();
        assert_eq!(k.i, 0.0);
        assert_eq!(k.raan, 0.0);
        assert_eq!(k.argp, 0.0);
        assert!(k.e.value() < 1e-15);
        let eq = keplerian_to_equinoctial(&k).unwrap();
        assert_eq!((eq.e1, eq.e2), (0.0, 0.0));
        assert!(eq.e4.abs() < 1e-15 && eq.e5.abs() < 1e-15);
    }

    #[test]
    fn polar_equinoctial() {
        let k = KeplerianElements {
            i: PI / 2.0,
            raan: 0.0,
            e: Eccentricity::new(0.1).unwrap(),
            argp: 0.3,
            a: 2.0,
            true_anomaly: 0.2,
            reference_basis: RtnBasis::standard(),
        };
        let eq = keplerian_to_equinoctial(&k).unwrap();
        assert_relative_eq!(eq.e1, 2.0, epsilon = 1e-15);
        assert_relative_eq!(eq.e2, 0.0, epsilon = 1e-15);
        assert_relative_eq!(eq.e3, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn retrograde_singularity() {
        let s = StateVector::new(Vector3::x(), -Vector3::y(), 0.0);
        assert!(matches!(
            eci_to_keplerian(&s, &RtnBasis::standard(), 1.0),
            Err(Error::RetrogradeSingularity(_))
        ));
    }

    #[test]
    fn inclination_158_recovered() {
        let c = standardized(0.7, 45f64.to_radians());
        let s = c.state.rotated(&rotation_x(158f64.to_radians()));
        let k = eci_to_keplerian(&s, &RtnBasis::standard(), 1.0).unwrap();
        assert!((k.i.to_degrees() - 158.0).abs() < 1e-6);
    }

    #[test]
    fn central_state_invariants() {
        let rot = rotation_z(1.0) * rotation_x(0.5);
        let c = CentralState::from_crtn(0.4, 0.2, 2.0, &rot, 1.0, 0.0).unwrap();
        assert_relative_eq!(c.rotation, rot, epsilon = 1e-12);
        let (y, yd) = c.to_crtn(&c.state);
        assert_relative_eq!(y, Vector3::new(0.4, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(yd, Vector3::new(0.2, 2.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(c.deviation(&c.state), Vector6::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn central_ast_is_canonical() {
        let c = standardized(0.7, 45f64.to_radians());
        let a = eci_to_ast(&c.state, &c).unwrap();
        assert_eq!((a.a1, a.a2), (0.0, 0.0));
        assert!(a.a3.abs() < 1e-15);
        assert_relative_eq!(a.to_vector(), c.ast().to_vector(), epsilon = 1e-14);
    }

    #[test]
    fn central_propagation_moves_only_a3() {
        let c = standardized(0.7, 45f64.to_radians());
        let dt = 7.3;
        let s = c.propagate(dt).unwrap();
        let a = eci_to_ast(&s, &c).unwrap();
        let expect = c.ast();
        assert_relative_eq!(a.a3, expect.a6 * dt, max_relative = 1e-12);
        assert!(a.a1.abs() < 1e-12 && a.a2.abs() < 1e-12);
        assert_relative_eq!(a.a4, expect.a4, epsilon = 1e-12);
        assert_relative_eq!(a.a5, expect.a5, epsilon = 1e-12);
        assert_relative_eq!(a.a6, expect.a6, max_relative = 1e-12);
    }

    #[test]
    fn ast_round_trip_single() {
        let c = standardized(0.7, 45f64.to_radians());
        let dev = Vector6::new(0.01, -0.005, 0.003, 0.02, -0.03, 0.01);
        let s = c.from_deviation(&dev, 0.0);
        let a = eci_to_ast(&s, &c).unwrap();
        let back = ast_to_eci(&a, &c, 0.0).unwrap();
        assert_relative_eq!(back.position, s.position, max_relative = 1e-10);
        assert_relative_eq!(back.velocity, s.velocity, max_relative = 1e-10);
    }

    #[test]
    fn ast_to_eci_matches_propagation() {
        let c = standardized(0.7, 45f64.to_radians());
        let half = 0.5 * c.features.p;
        let via_ast = ast_to_eci(&c.ast().propagated(half), &c, half).unwrap();
        let direct = c.propagate(half).unwrap();
        assert_relative_eq!(via_ast.position, direct.position, max_relative = 1e-10);
        assert_relative_eq!(via_ast.velocity, direct.velocity, max_relative = 1e-10);
    }

    #[test]
    fn circular_equatorial_from_ast() {
        let c = standardized(0.3, 0.0);
        let a = AstCoordinates { a1: 0.0, a2: 0.0, a3: 0.4, a4: 0.0, a5: 0.0, a6: 1.0 };
        let s = ast_to_eci(&a, &c, 0.0).unwrap();
        assert!(s.position.z.abs() < 1e-15 && s.velocity.z.abs() < 1e-15);
        assert_relative_eq!(s.position.norm(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.position.y.atan2(s.position.x), 0.4, epsilon = 1e-14);
    }

    #[test]
    fn ast_to_eci_rejects_invalid() {
        let c = standardized(0.3, 0.0);
        let bad_e = AstCoordinates { a1: 0.0, a2: 0.0, a3: 0.0, a4: 0.8, a5: 0.8, a6: 1.0 };
        assert!(matches!(ast_to_eci(&bad_e, &c, 0.0), Err(Error::Unbound(_))));
        let bad_n = AstCoordinates { a6: -1.0, ..c.ast() };
        assert!(ast_to_eci(&bad_n, &c, 0.0).is_err());
    }

    #[test]
    fn jacobian_named_entries() {
        let c = standardized(0.7, 45f64.to_radians());
        let jac = ast_jacobian(&c);
        let (a, _, _) = c.abc();
        assert_relative_eq!(jac.j[(1, 2)], -1.0 / a, epsilon = 1e-15);
        assert_relative_eq!(jac.j[(2, 1)], jac.d / a, epsilon = 1e-15);

        let circ = standardized(0.0, 0.0);
        let jc = ast_jacobian(&circ);
        assert_relative_eq!(jc.d, 1.0, epsilon = 1e-15);
        assert_relative_eq!(jc.j[(2, 1)], 1.0 / circ.radius, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_structural_zeros() {
        let c = standardized(0.7, 45f64.to_radians());
        let j = ast_jacobian(&c).j;
        let zeros = [
            (0, 0), (0, 1), (0, 3), (0, 4),
            (1, 0), (1, 1), (1, 3), (1, 4), (1, 5),
            (2, 0), (2, 2), (2, 3), (2, 4), (2, 5),
            (3, 2), (3, 3), (3, 5),
            (4, 2), (4, 5),
            (5, 2), (5, 5),
        ];
        for (r, k) in zeros {
            assert_eq!(j[(r, k)], 0.0, "entry ({r},{k})");
        }
    }
}
