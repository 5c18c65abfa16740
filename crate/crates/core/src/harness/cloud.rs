use nalgebra::Vector6;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Scenario, UnboundPolicy};
use crate::coords::{eci_to_ast, eci_to_equinoctial};
use crate::elements::RtnBasis;
use crate::error::{Error, Result};
use crate::kepler::wrap_pi;
use crate::stats::{mardia_tests, sample_cloud, CoordinateSystem, NormalityResult, PointCloud};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemResult {
    pub cloud: PointCloud,
    pub normality: NormalityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudStudy {
    pub seed: u64,
    pub propagation_time: f64,
    pub n_requested: usize,
    pub n_rejected: usize,
    /// Initial CRTN deviations of the retained samples.
    pub initial: PointCloud,
    pub eci: SystemResult,
    pub equinoctial: SystemResult,
    pub ast: SystemResult,
}

impl CloudStudy {
    pub fn system(&self, s: CoordinateSystem) -> Option<&SystemResult> {
        match s {
            CoordinateSystem::Eci => Some(&self.eci),
            CoordinateSystem::Equinoctial => Some(&self.equinoctial),
            CoordinateSystem::Ast => Some(&self.ast),
            CoordinateSystem::Deviation => None,
        }
    }
}

pub fn run_cloud_study(s: &Scenario) -> Result<CloudStudy> {
    run_cloud_study_with_seed(s, s.seed)
}

struct Propagated {
    deviation: Vector6<f64>,
    eci: Vector6<f64>,
    equinoctial: Vector6<f64>,
    ast: Vector6<f64>,
}

/// Samples Gaussian CRTN deviations, propagates each state exactly and
/// describes the result in Cartesian, equinoctial (standard basis) and AST
/// coordinates, with Mardia tests on each.
pub fn run_cloud_study_with_seed(s: &Scenario, seed: u64) -> Result<CloudStudy> {
    let setup = s.setup()?;
    let c = setup.central;
    let t = setup.propagation_time;
    let initial = sample_cloud(&Vector6::zeros(), &setup.deviation_covariance(), s.n_points, seed)?;
    let central_e3 = eci_to_equinoctial(&c.propagate(t)?, &RtnBasis::standard(), setup.mu)?.e3;

    let converted: Vec<Result<Propagated>> = (0..initial.n_points())
        .into_par_iter()
        .map(|k| {
            let dev = Vector6::from_iterator(initial.points.row(k).iter().copied());
            let x = c.from_deviation(&dev, 0.0).propagate(setup.mu, t)?;
            let mut eq = eci_to_equinoctial(&x, &RtnBasis::standard(), setup.mu)?.to_vector();
            // keep E3 on the central state's winding so node wrap-around does not split the cloud
            eq[2] = central_e3 + wrap_pi(eq[2] - central_e3);
            let ast = eci_to_ast(&x, &c)?.to_vector();
            Ok(Propagated {
                deviation: dev,
                eci: Vector6::from_row_slice(&x.to_array()),
                equinoctial: eq,
                ast,
            })
        })
        .collect();

    let mut kept = Vec::with_capacity(converted.len());
    let mut rejected = 0;
    for r in converted {
        match r {
            Ok(p) => kept.push(p),
            Err(Error::Unbound(_)) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    if rejected > 0 && s.unbound_policy == UnboundPolicy::Error {
        return Err(Error::RejectedSamples {
            count: rejected,
            total: s.n_points,
        });
    }
    let build = |f: fn(&Propagated) -> Vector6<f64>, sys| -> Result<PointCloud> {
        let rows: Vec<Vector6<f64>> = kept.iter().map(f).collect();
        PointCloud::from_rows(&rows, sys)
    };
    let with_test = |cloud: PointCloud| -> Result<SystemResult> {
        let normality = mardia_tests(&cloud)?;
        Ok(SystemResult { cloud, normality })
    };
    Ok(CloudStudy {
        seed,
        propagation_time: t,
        n_requested: s.n_points,
        n_rejected: rejected,
        initial: build(|p| p.deviation, CoordinateSystem::Deviation)?,
        eci: with_test(build(|p| p.eci, CoordinateSystem::Eci)?)?,
        equinoctial: with_test(build(|p| p.equinoctial, CoordinateSystem::Equinoctial)?)?,
        ast: with_test(build(|p| p.ast, CoordinateSystem::Ast)?)?,
    })
}
