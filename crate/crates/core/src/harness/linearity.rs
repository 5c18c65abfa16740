use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::coords::{ast_jacobian, eci_to_ast};
use crate::error::Result;

/// Points per panel, evenly spaced over `±2` standard deviations.
pub const GRID_POINTS: usize = 7;

/// A panel counts as flat when its one-sigma effect is below this fraction
/// of the largest one-sigma effect in the same row.
pub const FLAT_TOLERANCE: f64 = 1e-12;

/// One AST coordinate against one CRTN deviation component, all other
/// deviations held at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityPanel {
    /// 1-based AST index.
    pub ast_index: usize,
    /// 1-based deviation index: 1–3 position, 4–6 velocity.
    pub deviation_index: usize,
    pub offsets: Vec<f64>,
    /// `A_i(deviated) - A_i(central)`; `None` where the deviated orbit is unbound.
    pub values: Vec<Option<f64>>,
    /// `J[i][j]`.
    pub slope: f64,
    /// Reported R²: squared Pearson correlation, or 1 on flat panels.
    pub r_squared: Option<f64>,
    /// Squared Pearson correlation of the exact values, before the flat-panel convention.
    pub pearson_r_squared: Option<f64>,
    /// `1 - SS_res/SS_tot` about the line through the central value with slope `J[i][j]`.
    pub line_r_squared: Option<f64>,
    /// The first-order map vanishes here (up to rounding), so the panel is flat to first order.
    pub flat: bool,
    /// Every grid point produced a bound orbit.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub sigma: f64,
    pub tau: f64,
    pub jacobian: Matrix6<f64>,
    pub panels: Vec<LinearityPanel>,
}

impl LinearityReport {
    pub fn panel(&self, ast_index: usize, deviation_index: usize) -> Option<&LinearityPanel> {
        self.panels
            .iter()
            .find(|p| p.ast_index == ast_index && p.deviation_index == deviation_index)
    }

    /// Complete, non-flat panel with the smallest R².
    pub fn minimum(&self) -> Option<&LinearityPanel> {
        self.panels
            .iter()
            .filter(|p| p.complete && !p.flat)
            .filter(|p| p.r_squared.is_some())
            .min_by(|a, b| a.r_squared.partial_cmp(&b.r_squared).expect("finite R²"))
    }

    pub fn incomplete(&self) -> Vec<&LinearityPanel> {
        self.panels.iter().filter(|p| !p.complete).collect()
    }
}

fn pearson_r2(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 3 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if syy == 0.0 {
        return Some(1.0);
    }
    Some(sxy * sxy / (sxx * syy))
}

fn line_r2(x: &[f64], y: &[f64], slope: f64) -> Option<f64> {
    if x.len() < 3 {
        return None;
    }
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if ss_tot == 0.0 {
        return Some(1.0);
    }
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    Some(1.0 - ss_res / ss_tot)
}

/// Exact AST response to one-at-a-time deviations of the central state over
/// a `±2σ` (position) or `±2τ` (velocity) grid, compared with the Jacobian.
pub fn run_linearity(s: &Scenario) -> Result<LinearityReport> {
    let setup = s.setup()?;
    let c = &setup.central;
    let jac = ast_jacobian(c).j;
    let base = c.ast().to_vector();
    let scales = |j: usize| if j < 3 { setup.sigma } else { setup.tau };
    // effect of a one-sigma step, so rows compare position and velocity columns fairly
    let effect = |i: usize, j: usize| (jac[(i, j)] * scales(j)).abs();
    let row_peak: Vec<f64> = (0..6).map(|i| (0..6).map(|j| effect(i, j)).fold(0.0, f64::max)).collect();
    let mut panels = Vec::with_capacity(36);
    for j in 0..6 {
        let scale = scales(j);
        let offsets: Vec<f64> = (0..GRID_POINTS)
            .map(|k| scale * (-2.0 + 4.0 * k as f64 / (GRID_POINTS - 1) as f64))
            .collect();
        let responses: Vec<Option<Vector6<f64>>> = offsets
            .iter()
            .map(|&d| {
                let mut dev = Vector6::zeros();
                dev[j] = d;
                eci_to_ast(&c.from_deviation(&dev, 0.0), c)
                    .ok()
                    .map(|a| a.to_vector() - base)
            })
            .collect();
        for i in 0..6 {
            let values: Vec<Option<f64>> = responses.iter().map(|r| r.map(|v| v[i])).collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) = offsets
                .iter()
                .zip(&values)
                .filter_map(|(x, y)| y.map(|y| (*x, y)))
                .unzip();
            let slope = jac[(i, j)];
            let flat = effect(i, j) <= FLAT_TOLERANCE * row_peak[i];
            let pearson = pearson_r2(&xs, &ys);
            panels.push(LinearityPanel {
                ast_index: i + 1,
                deviation_index: j + 1,
                complete: xs.len() == GRID_POINTS,
                r_squared: if flat { Some(1.0) } else { pearson },
                pearson_r_squared: pearson,
                line_r_squared: line_r2(&xs, &ys, slope),
                flat,
                slope,
                offsets: offsets.clone(),
                values,
            });
        }
    }
    panels.sort_by_key(|p| (p.ast_index, p.deviation_index));
    Ok(LinearityReport {
        sigma: setup.sigma,
        tau: setup.tau,
        jacobian: jac,
        panels,
    })
}
