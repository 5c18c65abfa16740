//! Seeded Gaussian point clouds and Mardia's multivariate normality tests.

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateSystem {
    Eci,
    Equinoctial,
    Ast,
    /// CRTN position/velocity deviations from the central state.
    Deviation,
}

impl CoordinateSystem {
    pub fn name(self) -> &'static str {
        match self {
            CoordinateSystem::Eci => "eci",
            CoordinateSystem::Equinoctial => "equinoctial",
            CoordinateSystem::Ast => "ast",
            CoordinateSystem::Deviation => "deviation",
        }
    }
}

/// `N × d` sample matrix, one point per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: DMatrix<f64>,
    pub system: CoordinateSystem,
}

impl PointCloud {
    pub fn new(points: DMatrix<f64>, system: CoordinateSystem) -> Result<Self> {
        if points.nrows() < 2 {
            return Err(Error::Domain("a point cloud needs at least two points".into()));
        }
        if !points.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("point cloud has non-finite entries".into()));
        }
        Ok(Self { points, system })
    }

    pub fn from_rows(rows: &[Vector6<f64>], system: CoordinateSystem) -> Result<Self> {
        let points = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
        Self::new(points, system)
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.points.row_mean().transpose()
    }

    /// Maximum-likelihood covariance (divisor `N`).
    pub fn covariance(&self) -> DMatrix<f64> {
        let centered = self.centered();
        centered.transpose() * &centered / self.n_points() as f64
    }

    /// Unbiased covariance (divisor `N - 1`).
    pub fn sample_covariance(&self) -> DMatrix<f64> {
        self.covariance() * (self.n_points() as f64 / (self.n_points() as f64 - 1.0))
    }

    fn centered(&self) -> DMatrix<f64> {
        let mean = self.points.row_mean();
        let mut c = self.points.clone();
        for mut row in c.row_iter_mut() {
            row -= &mean;
        }
        c
    }

    /// `x ↦ M x + b` applied to every point.
    pub fn affine(&self, m: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let mut points = &self.points * m.transpose();
        for mut row in points.row_iter_mut() {
            row += b.transpose();
        }
        Self {
            points,
            system: self.system,
        }
    }
}

/// `n` draws from `N(mean, cov)` with a ChaCha8 generator seeded by `seed`.
pub fn sample_cloud(mean: &Vector6<f64>, cov: &Matrix6<f64>, n: usize, seed: u64) -> Result<PointCloud> {
    let l = cov
        .cholesky()
        .ok_or_else(|| Error::Domain("cloud covariance is not positive definite".into()))?
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vector6<f64>> = (0..n)
        .map(|_| {
            let xi = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            mean + l * xi
        })
        .collect();
    PointCloud::from_rows(&rows, CoordinateSystem::Eci)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    /// `N·b₁/6`, asymptotically χ² with `d(d+1)(d+2)/6` degrees of freedom.
    pub skewness_stat: f64,
    /// `(b₂ - d(d+2)) / √(8d(d+2)/N)`, asymptotically standard normal.
    pub kurtosis_stat: f64,
    pub p_skewness: f64,
    pub p_kurtosis: f64,
    pub b1: f64,
    pub b2: f64,
    pub n: usize,
    pub dim: usize,
}

impl NormalityResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_skewness > alpha && self.p_kurtosis > alpha
    }
}

/// Relative pivot below which the sample covariance counts as singular.
const RANK_TOLERANCE: f64 = 1e-12;

/// Mardia's multivariate skewness and kurtosis tests.
pub fn mardia_tests(c: &PointCloud) -> Result<NormalityResult> {
    let n = c.n_points();
    let d = c.dim();
    if n <= d + 1 {
        return Err(Error::Domain(format!("need more than {} points, got {n}", d + 1)));
    }
    let centered = c.centered();
    let cov = centered.transpose() * &centered / n as f64;

    // equilibrate so the rank test is scale free
    let scale = DVector::from_fn(d, |k, _| cov[(k, k)].sqrt());
    if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::RankDeficient);
    }
    let corr = DMatrix::from_fn(d, d, |i, j| cov[(i, j)] / (scale[i] * scale[j]));
    let chol = corr.cholesky().ok_or(Error::RankDeficient)?;
    if chol.l().diagonal().iter().any(|v| v * v < RANK_TOLERANCE) {
        return Err(Error::RankDeficient);
    }
    let mut standardized = centered;
    for mut row in standardized.row_iter_mut() {
        for k in 0..d {
            row[k] /= scale[k];
        }
    }
    // rows of y are whitened points, so g_ij = y_i · y_j
    let y = chol
        .l()
        .solve_lower_triangular(&standardized.transpose())
        .ok_or(Error::RankDeficient)?;

    // Σᵢⱼ gᵢⱼ³ = Σ_abc T_abc² with T_abc = Σᵢ yᵢₐ yᵢ_b yᵢ_c, O(N d³) instead of O(N² d)
    let mut tensor = vec![0.0; d * d * d];
    let mut quad_sum = 0.0;
    for yi in y.column_iter() {
        for a in 0..d {
            for b in a..d {
                let ab = yi[a] * yi[b];
                for c in b..d {
                    tensor[(a * d + b) * d + c] += ab * yi[c];
                }
            }
        }
        quad_sum += yi.norm_squared().powi(2);
    }
    let mut cube_sum = 0.0;
    for a in 0..d {
        for b in a..d {
            for c in b..d {
                // number of distinct orderings of (a, b, c)
                let perms = match (a == b, b == c) {
                    (true, true) => 1.0,
                    (false, false) => 6.0,
                    _ => 3.0,
                };
                cube_sum += perms * tensor[(a * d + b) * d + c].powi(2);
            }
        }
    }
    let nf = n as f64;
    let df = d as f64;
    let b1 = cube_sum / (nf * nf);
    let b2 = quad_sum / nf;

    let skewness_stat = nf * b1 / 6.0;
    let chi = ChiSquared::new(df * (df + 1.0) * (df + 2.0) / 6.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let p_skewness = chi.sf(skewness_stat);

    let kurtosis_stat = (b2 - df * (df + 2.0)) / (8.0 * df * (df + 2.0) / nf).sqrt();
    let normal = Normal::standard();
    let p_kurtosis = (2.0 * normal.sf(kurtosis_stat.abs())).min(1.0);

    Ok(NormalityResult {
        skewness_stat,
        kurtosis_stat,
        p_skewness,
        p_kurtosis,
        b1,
        b2,
        n,
        dim: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_seed_identical_cloud() {
        let m = Vector6::zeros();
        let p = Matrix6::identity();
        assert_eq!(sample_cloud(&m, &p, 50, 9).unwrap(), sample_cloud(&m, &p, 50, 9).unwrap());
        assert_ne!(sample_cloud(&m, &p, 50, 9).unwrap(), sample_cloud(&m, &p, 50, 10).unwrap());
    }

    #[test]
    fn tiny_covariance_collapses_to_mean() {
        let m = Vector6::from_element(3.0);
        let c = sample_cloud(&m, &(Matrix6::identity() * 1e-30), 20, 1).unwrap();
        for x in c.points.iter() {
            assert_relative_eq!(*x, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_spd_rejected() {
        let mut p = Matrix6::identity();
        p[(2, 2)] = -1.0;
        assert!(matches!(sample_cloud(&Vector6::zeros(), &p, 10, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn singular_cloud_is_rank_deficient() {
        let base = sample_cloud(&Vector6::zeros(), &Matrix6::identity(), 100, 2).unwrap();
        let mut pts = base.points.clone();
        for i in 0..pts.nrows() {
            pts[(i, 5)] = 2.0 * pts[(i, 0)] - pts[(i, 1)];
        }
        let c = PointCloud::new(pts, CoordinateSystem::Eci).unwrap();
        assert!(matches!(mardia_tests(&c), Err(Error::RankDeficient)));
    }

    #[test]
    fn gaussian_cloud_is_not_rejected() {
        let c = sample_cloud(&Vector6::zeros(), &Matrix6::identity(), 2000, 4).unwrap();
        let r = mardia_tests(&c).unwrap();
        assert!(r.p_skewness > 1e-3 && r.p_kurtosis > 1e-3, "{r:?}");
        assert!((r.b2 - 48.0).abs() < 3.0);
    }

    #[test]
    fn skewed_cloud_is_rejected() {
        let c = sample_cloud(&Vector6::zeros(), &Matrix6::identity(), 2000, 4).unwrap();
        let pts = c.points.map(|x| x.exp());
        let r = mardia_tests(&PointCloud::new(pts, CoordinateSystem::Eci).unwrap()).unwrap();
        assert!(r.p_skewness < 1e-10 && r.p_kurtosis < 1e-10);
    }
}
