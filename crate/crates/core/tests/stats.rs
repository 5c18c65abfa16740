use ast_orbit::stats::{mardia_tests, sample_cloud, CoordinateSystem, PointCloud};
use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use proptest::prelude::*;
use rayon::prelude::*;

const REPLICATES: u64 = 500;

fn null_p_values(n: usize) -> Vec<(f64, f64)> {
    let cov = Matrix6::from_fn(|i, j| if i == j { 1.0 + i as f64 } else { 0.3 });
    (0..REPLICATES)
        .into_par_iter()
        .map(|seed| {
            let c = sample_cloud(&Vector6::zeros(), &cov, n, 1000 + seed).unwrap();
            let r = mardia_tests(&c).unwrap();
            (r.p_skewness, r.p_kurtosis)
        })
        .collect()
}

/// Two-sided Kolmogorov-Smirnov distance to U(0, 1).
fn ks_uniform(mut p: Vec<f64>) -> f64 {
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn null_rejection_rate_and_uniformity() {
    let p = null_p_values(2000);
    // 5% level critical value for n = 500
    let critical = 1.358 / (REPLICATES as f64).sqrt();
    for (name, ps) in [
        ("skewness", p.iter().map(|x| x.0).collect::<Vec<_>>()),
        ("kurtosis", p.iter().map(|x| x.1).collect()),
    ] {
        let rate = ps.iter().filter(|&&x| x < 0.05).count() as f64 / ps.len() as f64;
        assert!((rate - 0.05).abs() <= 0.02, "{name} rejection rate {rate}");
        let d = ks_uniform(ps);
        assert!(d < critical, "{name} KS distance {d} >= {critical}");
    }
}

fn cloud(seed: u64) -> PointCloud {
    let cov = Matrix6::from_diagonal(&Vector6::new(1.0, 2.0, 0.5, 1.0, 3.0, 0.2));
    sample_cloud(&Vector6::zeros(), &cov, 300, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistics_are_affine_invariant(
        seed in 0u64..1000,
        entries in prop::collection::vec(-1.0f64..1.0, 36),
        shift in prop::collection::vec(-100.0f64..100.0, 6),
        curve in 0.0f64..0.5,
    ) {
        // a mildly non-Gaussian cloud so the statistics are not all near zero
        let base = cloud(seed);
        let mut pts = base.points.clone();
        for i in 0..pts.nrows() {
            pts[(i, 0)] += curve * pts[(i, 1)].powi(2);
        }
        let c = PointCloud::new(pts, CoordinateSystem::Eci).unwrap();
        let m = DMatrix::from_row_slice(6, 6, &entries) + DMatrix::identity(6, 6) * 3.0;
        prop_assume!(m.determinant().abs() > 1e-3);
        let t = c.affine(&m, &DVector::from_vec(shift));
        let (a, b) = (mardia_tests(&c).unwrap(), mardia_tests(&t).unwrap());
        prop_assert!((a.b1 - b.b1).abs() < 1e-9 * a.b1.max(1.0), "b1 {} vs {}", a.b1, b.b1);
        prop_assert!((a.b2 - b.b2).abs() < 1e-9 * a.b2, "b2 {} vs {}", a.b2, b.b2);
    }
}

#[test]
fn heavy_tails_and_skew_are_detected() {
    let c = cloud(4);
    let mut cubed = c.points.clone();
    cubed.column_mut(2).apply(|x| *x = x.powi(3));
    let r = mardia_tests(&PointCloud::new(cubed, CoordinateSystem::Eci).unwrap()).unwrap();
    assert!(r.p_kurtosis < 1e-10);

    let mut skewed = c.points.clone();
    skewed.column_mut(0).apply(|x| *x = x.exp());
    let r = mardia_tests(&PointCloud::new(skewed, CoordinateSystem::Eci).unwrap()).unwrap();
    assert!(r.p_skewness < 1e-10);
}
