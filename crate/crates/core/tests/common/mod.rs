// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ppg::linops::LinearMap;
use ppg::problems::rng::{gaussian_matrix, gaussian_vector, instance_rng};
use ppg::problems::FusedLassoInstance;
use ppg::prox::WeightedL1;
use ppg::smooth::LeastSquares;
use ppg::solvers::{
    ppg_solve, Checkpoint, CompositeProblem, IterateView, PpgConfig, Reference, RunLimits, Start,
};

/// A 20 x 50 fused-lasso instance with unit-norm sample columns.
pub fn small_flasso(seed: u64) -> FusedLassoInstance<f64> {
    let mut rng = instance_rng(seed, 0);
    let (m, n) = (20, 50);
    let mut c = gaussian_matrix(&mut rng, m, n - 1);
    for mut col in c.column_iter_mut() {
        let s = col.norm();
        col /= s;
    }
    let mut xhat = DVector::zeros(n - 1);
    for i in 5..12 {
        xhat[i] = 2.0;
    }
    for i in 30..34 {
        xhat[i] = -3.0;
    }
    let noise = gaussian_vector(&mut rng, m);
    let labels = (&c * &xhat + noise * 0.5).map(|s| if s >= 0.0 { 1.0 } else { -1.0 });
    FusedLassoInstance::from_samples(&c, labels, 0.1, 1.0, seed).unwrap()
}

pub type Lasso = CompositeProblem<f64, LeastSquares<f64>, WeightedL1<f64>>;

/// `1/2 ||Az - c||^2 + lambda ||z||_1` with `A` of size `rows x dim`.
pub fn lasso(seed: u64, rows: usize, dim: usize, lambda: f64) -> Lasso {
    let mut rng = instance_rng(seed, 0);
    let a: DMatrix<f64> = gaussian_matrix(&mut rng, rows, dim) / (rows as f64).sqrt();
    let rhs = gaussian_vector(&mut rng, rows);
    CompositeProblem::new(
        LeastSquares::new(a, rhs).unwrap(),
        WeightedL1::uniform(dim, lambda).unwrap(),
        LinearMap::identity(dim),
        DVector::zeros(dim),
    )
    .unwrap()
}

/// Runs PPG from the origin until successive iterates stop moving, and
/// returns the limit as a reference point.
pub fn limit_of<H, P>(prob: &CompositeProblem<f64, H, P>, cfg: &PpgConfig<f64>) -> Reference<f64>
where
    H: ppg::smooth::Smooth<f64>,
    P: ppg::prox::Proximable<f64>,
{
    let mut cfg = *cfg;
    cfg.limits = RunLimits::new(1_000_000, 1);
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut mon = |it: &IterateView<'_, f64>| {
        let step = prev
            .as_ref()
            .map(|(z, y)| (it.z - z).norm() + (it.y - y).norm())
            .unwrap_or(f64::INFINITY);
        prev = Some((it.z.clone(), it.y.clone()));
        Ok(Some(Checkpoint {
            t: it.t,
            pobj: 0.0,
            dobj: 0.0,
            dfeas: step,
            stop: step <= 1e-15 * (1.0 + it.z.norm()),
        }))
    };
    let tr = ppg_solve(prob, &cfg, &Start::origin_for(prob), &mut mon).unwrap();
    assert!(tr.converged, "reference run did not settle");
    Reference {
        x: prob.h.gradient(&tr.z).unwrap(),
        y: tr.y,
        z: tr.z,
    }
}
