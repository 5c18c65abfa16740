use std::f64::consts::TAU;

use nalgebra::{Matrix2x6, Vector2, Vector6};

use crate::coords::AstCoordinates;
use crate::error::Result;
use crate::kepler;
use crate::measurement::predict_angles;

/// Two-component measurement function of an AST state.
pub trait MeasurementModel: Sync {
    fn predict(&self, x: &Vector6<f64>) -> Result<Vector2<f64>>;

    /// Five-point central differences, step `1e-5·max(|x_j|, 1e-2)`.
    fn jacobian(&self, x: &Vector6<f64>) -> Result<Matrix2x6<f64>> {
        let mut h = Matrix2x6::zeros();
        for j in 0..6 {
            let step = 1e-5 * x[j].abs().max(1e-2);
            let at = |k: f64| -> Result<Vector2<f64>> {
                let mut p = *x;
                p[j] += k * step;
                self.predict(&p)
            };
            let d = (at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * step);
            h.set_column(j, &d);
        }
        Ok(h)
    }

    /// Moves `z` onto the branch closest to `predicted`.
    fn align(&self, z: &Vector2<f64>, _predicted: &Vector2<f64>) -> Vector2<f64> {
        *z
    }

    /// Linearization centre implied by the observation; the prior mean unless
    /// the model knows better.
    fn observation_center(&self, prior_mean: &Vector6<f64>, _z: &Vector2<f64>) -> Result<Vector6<f64>> {
        Ok(*prior_mean)
    }
}

/// Longitude and latitude on the CRTN sphere.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnglesModel;

impl MeasurementModel for AnglesModel {
    fn predict(&self, x: &Vector6<f64>) -> Result<Vector2<f64>> {
        let (lon, lat) = predict_angles(&AstCoordinates::from_vector(x))?;
        Ok(Vector2::new(lon, lat))
    }

    fn align(&self, z: &Vector2<f64>, predicted: &Vector2<f64>) -> Vector2<f64> {
        let k = ((predicted[0] - z[0]) / TAU).round();
        Vector2::new(z[0] + TAU * k, z[1])
    }

    /// Prior mean with `a3 = φ_p + F_T-to-M(θ_obs - θ_p, e)`, where `θ_obs`
    /// sits on the winding nearest the prior prediction.
    fn observation_center(&self, prior_mean: &Vector6<f64>, z: &Vector2<f64>) -> Result<Vector6<f64>> {
        let a = AstCoordinates::from_vector(prior_mean);
        let e = a.eccentricity()?;
        let theta_p = a.theta_p();
        let z = self.align(z, &self.predict(prior_mean)?);
        let mut center = *prior_mean;
        center[2] = kepler::true_to_mean(theta_p, e)? + kepler::true_to_mean(z[0] - theta_p, e)?;
        Ok(center)
    }
}

/// `z = H x + offset`; a test double for which every Kalman variant is exact.
#[derive(Debug, Clone, Copy)]
pub struct LinearModel {
    pub h: Matrix2x6<f64>,
    pub offset: Vector2<f64>,
}

impl LinearModel {
    pub fn new(h: Matrix2x6<f64>) -> Self {
        Self {
            h,
            offset: Vector2::zeros(),
        }
    }
}

impl MeasurementModel for LinearModel {
    fn predict(&self, x: &Vector6<f64>) -> Result<Vector2<f64>> {
        Ok(self.h * x + self.offset)
    }

    fn jacobian(&self, _x: &Vector6<f64>) -> Result<Matrix2x6<f64>> {
        Ok(self.h)
    }
}
