// SPDX-License-Identifier: Apache-2.0

mod common;

use nalgebra::DVector;
use proptest::prelude::*;

use ppg::linops::LinearMap;
use ppg::problems::rng::{gaussian_vector, instance_rng};
use ppg::problems::{gen_fusedlasso, gen_sysreal, ProblemInstance, SysRealParams};
use ppg::prox::{conjugate_prox, WeightedL1};
use ppg::smooth::{HalfSqDist, Smooth};
use ppg::solvers::{
    condat_solve, mfbs_solve, ppg_solve, CompositeProblem, CondatConfig, MfbsConfig, NoMonitor,
    PpgConfig, RunLimits, Start,
};
use ppg::{PpgConfig32, SolveTrace64};

fn small_problem() -> (common::Lasso, f64) {
    let prob = common::lasso(7, 30, 12, 0.2);
    let cfg = PpgConfig::unit_relaxation(prob.lipschitz(), prob.gram_bound(), RunLimits::default()).unwrap();
    let r = common::limit_of(&prob, &cfg);
    let opt = prob.objective(&r.z).unwrap();
    (prob, opt)
}

/// `x + M* y = 0` and `y = prox_{P*/tau}(y + (M z - b)/tau)` at a fixed point.
fn stationarity<H: Smooth<f64>, P: ppg::prox::Proximable<f64>>(
    prob: &CompositeProblem<f64, H, P>,
    z: &DVector<f64>,
    y: &DVector<f64>,
) -> f64 {
    let grad = prob.h.gradient(z).unwrap();
    let r1 = (&grad + prob.map.adjoint(y).unwrap()).norm();
    let arg = y + (prob.map.apply(z).unwrap() - &prob.offset);
    let r2 = (conjugate_prox(&prob.p, 1.0, &arg).unwrap() - y).norm();
    r1 + r2
}

#[test]
fn scalar_example_sequence() {
    // h(z) = (z - 1)^2 / 2, P = |.|, M = 2, b = 0 has the solution z = 0
    // with multiplier y = 1/2.
    let prob = CompositeProblem::new(
        HalfSqDist::new(DVector::from_vec(vec![1.0f64])),
        WeightedL1::uniform(1, 1.0).unwrap(),
        LinearMap::dense(nalgebra::DMatrix::from_element(1, 1, 2.0)).unwrap(),
        DVector::zeros(1),
    )
    .unwrap();
    let cfg = PpgConfig::with_beta(1.0, prob.gram_bound(), 0.5, RunLimits::new(400, 1)).unwrap();
    let tr = ppg_solve(&prob, &cfg, &Start::origin_for(&prob), &mut NoMonitor).unwrap();
    assert!(tr.z[0].abs() < 1e-10, "z = {}", tr.z[0]);
    assert!((tr.y[0] - 0.5).abs() < 1e-10, "y = {}", tr.y[0]);
}

#[test]
fn quadratic_h_decouples_dual_sequence() {
    // With h = ||z - zbar||^2 / 2 and beta = gamma = 1 the y-sequence obeys
    // y+ = prox_{P*/tau}(((tau I - M M*) y + M zbar - b) / tau) regardless of z.
    let mut rng = instance_rng(11, 0);
    let zbar = gaussian_vector(&mut rng, 6);
    let b = gaussian_vector(&mut rng, 4);
    let map = LinearMap::dense(ppg::problems::rng::gaussian_matrix(&mut rng, 4, 6)).unwrap();
    let prob = CompositeProblem::new(HalfSqDist::new(zbar.clone()), WeightedL1::uniform(4, 0.7).unwrap(), map, b.clone()).unwrap();
    let tau = 1.2 * prob.gram_bound();
    let cfg = PpgConfig::new(1.0, prob.gram_bound(), 1.0, 1.0, tau, RunLimits::new(20, 1).with_history()).unwrap();
    let start = Start { y: gaussian_vector(&mut rng, 4), z: gaussian_vector(&mut rng, 6) };
    let tr = ppg_solve(&prob, &cfg, &start, &mut NoMonitor).unwrap();
    let mzbar = prob.map.apply(&zbar).unwrap();
    let mut y = start.y.clone();
    for snap in &tr.history.unwrap()[1..] {
        let mmty = prob.map.apply(&prob.map.adjoint(&y).unwrap()).unwrap();
        let arg = (&y * tau - mmty + &mzbar - &b) / tau;
        y = conjugate_prox(&prob.p, tau, &arg).unwrap();
        assert!((&snap.y - &y).amax() < 1e-12);
    }
}

#[test]
fn solvers_reach_the_same_optimum() {
    let (prob, opt) = small_problem();
    let (l, g) = (prob.lipschitz(), prob.gram_bound());
    let lim = RunLimits::new(5000, 1000);
    let start = Start::origin_for(&prob);
    let p = ppg_solve(&prob, &PpgConfig::with_beta(l, g, 1.9 / l, lim).unwrap(), &start, &mut NoMonitor).unwrap();
    let m = mfbs_solve(&prob, &MfbsConfig::for_problem(l, g, lim).unwrap(), &start, &mut NoMonitor).unwrap();
    let c = condat_solve(&prob, &CondatConfig::for_problem(l, g, lim).unwrap(), &start, &mut NoMonitor).unwrap();
    for (name, tr) in [("ppg", &p), ("mfbs", &m), ("condat", &c)] {
        let val = prob.objective(&tr.z).unwrap();
        assert!((val - opt).abs() <= 1e-8 * opt.abs().max(1.0), "{name}: {val} vs {opt}");
        let res = stationarity(&prob, &tr.z, &tr.y);
        assert!(res < 1e-8, "{name}: stationarity residual {res:e}");
    }
}

#[test]
fn solvers_on_fused_lasso_agree() {
    let inst = common::small_flasso(3);
    let prob = inst.build_composite().unwrap();
    let (l, g) = (prob.lipschitz(), prob.gram_bound());
    let cfg = PpgConfig::with_beta(l, g, 1.95 / l, RunLimits::default()).unwrap();
    let r = common::limit_of(&prob, &cfg);
    let opt = prob.objective(&r.z).unwrap();
    assert!(stationarity(&prob, &r.z, &r.y) < 1e-10);
    let lim = RunLimits::new(20000, 1000);
    let start = Start::origin_for(&prob);
    let m = mfbs_solve(&prob, &MfbsConfig::for_problem(l, g, lim).unwrap(), &start, &mut NoMonitor).unwrap();
    let c = condat_solve(&prob, &CondatConfig::for_problem(l, g, lim).unwrap(), &start, &mut NoMonitor).unwrap();
    for tr in [&m, &c] {
        let val = prob.objective(&tr.z).unwrap();
        assert!((val - opt).abs() <= 1e-6 * opt, "{val} vs {opt}");
    }
}

#[test]
fn x_is_gradient_at_previous_z() {
    let inst = common::small_flasso(4);
    let prob = inst.build_composite().unwrap();
    let cfg = PpgConfig::with_beta(prob.lipschitz(), prob.gram_bound(), 1.0 / prob.lipschitz(), RunLimits::new(30, 1).with_history())
        .unwrap();
    let tr: SolveTrace64 = ppg_solve(&prob, &cfg, &Start::origin_for(&prob), &mut NoMonitor).unwrap();
    let h = tr.history.unwrap();
    for w in h.windows(2) {
        let g = prob.h.gradient(&w[0].z).unwrap();
        assert!((&w[1].x - g).amax() < 1e-14);
    }
}

#[test]
fn ergodic_averages_match_history() {
    let (prob, _) = small_problem();
    let cfg = PpgConfig::unit_relaxation(prob.lipschitz(), prob.gram_bound(), RunLimits::new(25, 5).with_history()).unwrap();
    let tr = ppg_solve(&prob, &cfg, &Start::origin_for(&prob), &mut NoMonitor).unwrap();
    let h = tr.history.as_ref().unwrap();
    let n = h.len() - 1;
    let xbar = h[1..].iter().fold(DVector::zeros(prob.primal_dim()), |acc, s| acc + &s.x) / n as f64;
    let ybar = h[1..].iter().fold(DVector::zeros(prob.dual_dim()), |acc, s| acc + &s.y) / n as f64;
    assert!((&tr.ergodic_x - xbar).amax() < 1e-12);
    assert!((&tr.ergodic_y - ybar).amax() < 1e-12);
}

#[test]
fn f32_runs_match_f64() {
    let params = SysRealParams {
        horizon: 80,
        m: 2,
        n: 2,
        r: 3,
        j: 4,
        k: 6,
        noise: 0.05,
        lambda: 0.5,
    };
    let i64_ = gen_sysreal::<f64>(&params, 5).unwrap();
    let i32_ = gen_sysreal::<f32>(&params, 5).unwrap();
    let (p64, p32) = (i64_.build_composite().unwrap(), i32_.build_composite().unwrap());
    let lim = RunLimits::new(300, 10);
    let c64 = PpgConfig::with_beta(1.0, p64.gram_bound(), 0.5, lim).unwrap();
    let c32 = PpgConfig32::with_beta(1.0, p32.gram_bound(), 0.5, lim).unwrap();
    let t64 = ppg_solve(&p64, &c64, &Start::origin_for(&p64), &mut NoMonitor).unwrap();
    let t32 = ppg_solve(&p32, &c32, &Start::origin_for(&p32), &mut NoMonitor).unwrap();
    let v64 = p64.objective(&t64.z).unwrap();
    let v32 = p32.objective(&t32.z).unwrap() as f64;
    assert!((v64 - v32).abs() <= 1e-4 * v64.max(1.0), "{v64} vs {v32}");

    let f32_inst = gen_fusedlasso::<f32>(20, 200, 0.05, 2).unwrap();
    let prob = f32_inst.build_composite().unwrap();
    let cfg = PpgConfig32::with_beta(prob.lipschitz(), prob.gram_bound(), 1.95 / prob.lipschitz(), RunLimits::new(50, 10)).unwrap();
    let tr = ppg_solve(&prob, &cfg, &Start::origin_for(&prob), &mut NoMonitor).unwrap();
    assert!(tr.z.iter().all(|v| v.is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fixed_point_is_preserved(seed in 0u64..1000, scale in 0.5f64..1.9) {
        let prob = common::lasso(seed, 15, 8, 0.3);
        let l = prob.lipschitz();
        let cfg = PpgConfig::with_beta(l, prob.gram_bound(), scale / l, RunLimits::new(1, 1)).unwrap();
        let r = common::limit_of(&prob, &cfg);
        let start = Start { y: r.y.clone(), z: r.z.clone() };
        let tr = ppg_solve(&prob, &cfg, &start, &mut NoMonitor).unwrap();
        prop_assert!((&tr.z - &r.z).amax() <= 1e-12 * (1.0 + r.z.amax()));
        prop_assert!((&tr.y - &r.y).amax() <= 1e-12 * (1.0 + r.y.amax()));
    }

    #[test]
    fn objective_decreases_with_unit_relaxation_on_identity_map(seed in 0u64..1000) {
        let prob = common::lasso(seed, 20, 10, 0.1);
        let cfg = PpgConfig::unit_relaxation(prob.lipschitz(), 1.0, RunLimits::new(40, 40).with_history()).unwrap();
        let mut rng = instance_rng(seed, 9);
        let start = Start { y: DVector::zeros(10), z: gaussian_vector(&mut rng, 10) };
        let tr = ppg_solve(&prob, &cfg, &start, &mut NoMonitor).unwrap();
        let values: Vec<f64> = tr.history.unwrap().iter().map(|s| prob.objective(&s.z).unwrap()).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }
}
