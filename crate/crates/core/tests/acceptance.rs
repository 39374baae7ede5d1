// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria, one line of output each.
//!
//! `cargo test -p ppg --test acceptance` runs all of them; extra arguments
//! select criteria by number, e.g. `-- 4 10`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use ppg::linops::{HankelShape, LinearMap};
use ppg::problems::rng::{gaussian_matrix, gaussian_vector, instance_rng};
use ppg::problems::{gen_fusedlasso, gen_sysreal, ProblemInstance, SysRealParams};
use ppg::prox::{conjugate_prox, nuclear_norm, project_spectral_ball, prox_nuclear, NuclearNorm, Proximable, SeparableSum, WeightedL1};
use ppg::smooth::{Logistic, MaskedQuadratic, Smooth};
use ppg::solvers::{
    fenchel_dual_instance, lyapunov_series, mfbs_solve, ppg_ergodic_bounds, ppg_solve,
    proximal_ama_solve, proximal_gradient_solve, AmaConfig, MfbsConfig, NoMonitor, PpgConfig,
    RunLimits, Start,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn moreau_identity() -> Outcome {
    let mut rng = instance_rng(101, 0);
    let kinds: Vec<(&str, Box<dyn Proximable<f64>>)> = vec![
        ("weighted_l1", Box::new(WeightedL1::new(DVector::from_fn(30, |i, _| 0.1 + 0.05 * i as f64)).unwrap())),
        ("two_level_l1", Box::new(WeightedL1::two_level(19, 0.3, 18, 4.0).unwrap())),
        ("nuclear", Box::new(NuclearNorm::new(0.8, 6, 5).unwrap())),
        (
            "separable",
            Box::new(SeparableSum::new(vec![
                Box::new(WeightedL1::uniform(4, 0.5).unwrap()),
                Box::new(NuclearNorm::new(1.1, 3, 4).unwrap()),
            ])),
        ),
    ];
    let mut worst = 0.0f64;
    for (name, p) in &kinds {
        for _ in 0..1000 {
            let tau: f64 = rng.random_range(0.05..5.0);
            let scale: f64 = rng.random_range(0.1..10.0);
            let z = gaussian_vector(&mut rng, p.dim()) * scale;
            let lhs = p.prox(tau, &z).unwrap() + conjugate_prox(p.as_ref(), tau, &(&z / tau)).unwrap() * tau;
            let err = (lhs - &z).norm() / z.norm().max(f64::MIN_POSITIVE);
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("{name}: relative error {err:e}"))?;
        }
    }
    // The conjugate prox must also agree with the direct projections onto
    // the dual-norm balls.
    let l1 = WeightedL1::uniform(30, 0.7).unwrap();
    let nuc = NuclearNorm::new(0.8, 6, 5).unwrap();
    for _ in 0..200 {
        let tau: f64 = rng.random_range(0.05..5.0);
        let u = gaussian_vector(&mut rng, 30) * 2.0;
        let clip = u.map(|v| v.clamp(-0.7, 0.7));
        let d = (conjugate_prox(&l1, tau, &u).unwrap() - clip).norm();
        ensure(d <= 1e-12 * (1.0 + u.norm()), || format!("l1 conjugate vs box projection: {d:e}"))?;
        let m = gaussian_matrix(&mut rng, 6, 5) * 2.0;
        let proj = project_spectral_ball(&m, 0.8).unwrap();
        let v = DVector::from_column_slice(m.as_slice());
        let d = (conjugate_prox(&nuc, tau, &v).unwrap() - DVector::from_column_slice(proj.as_slice())).norm();
        ensure(d <= 1e-12 * (1.0 + v.norm()), || format!("nuclear conjugate vs spectral projection: {d:e}"))?;
    }
    Ok(format!("4 kinds x 1000 points, worst relative error {worst:.1e}"))
}

fn adjoint_consistency() -> Outcome {
    let mut rng = instance_rng(102, 0);
    let dense = gaussian_matrix(&mut rng, 7, 11);
    let maps: Vec<(&str, LinearMap<f64>)> = vec![
        ("identity", LinearMap::identity(9)),
        ("dense", LinearMap::dense(dense).unwrap()),
        ("hankel", LinearMap::hankel(HankelShape::new(3, 2, 4, 5).unwrap())),
        ("fused_diff_stack", LinearMap::fused_diff_stack(17).unwrap()),
        ("replication", LinearMap::replication(6, 4).unwrap()),
    ];
    let mut worst = 0.0f64;
    for (name, map) in &maps {
        for _ in 0..100 {
            let z = gaussian_vector(&mut rng, map.in_dim());
            let y = gaussian_vector(&mut rng, map.out_dim());
            let mz = map.apply(&z).unwrap();
            let mty = map.adjoint(&y).unwrap();
            let lhs = mz.dot(&y);
            let rhs = z.dot(&mty);
            let scale = (mz.norm() * y.norm()).max(z.norm() * mty.norm()).max(f64::MIN_POSITIVE);
            let err = (lhs - rhs).abs() / scale;
            worst = worst.max(err);
            ensure(err <= 1e-10, || format!("{name}: relative mismatch {err:e}"))?;
        }
    }
    Ok(format!("5 kinds x 100 pairs, worst relative mismatch {worst:.1e}"))
}

fn central_difference<H: Smooth<f64>>(h: &H, z: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(z.len(), |i, _| {
        let step = 1e-5 * (1.0 + z[i].abs());
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[i] += step;
        zm[i] -= step;
        (h.value(&zp).unwrap() - h.value(&zm).unwrap()) / (2.0 * step)
    })
}

fn gradient_oracle() -> Outcome {
    let mut rng = instance_rng(103, 0);
    let logistic = Logistic::new(gaussian_matrix(&mut rng, 25, 40)).unwrap();
    let mask = DVector::from_fn(40, |i, _| if i % 3 == 0 { 0.0 } else { 1.0 });
    let masked = MaskedQuadratic::new(mask, gaussian_vector(&mut rng, 40)).unwrap();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let z = gaussian_vector(&mut rng, 40) * (0.2 + 0.1 * k as f64);
        for (name, g, fd) in [
            ("logistic", logistic.gradient(&z).unwrap(), central_difference(&logistic, &z)),
            ("masked_quadratic", masked.gradient(&z).unwrap(), central_difference(&masked, &z)),
        ] {
            let err = (&g - &fd).norm() / g.norm().max(1.0);
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("{name}: relative error {err:e}"))?;
        }
    }
    Ok(format!("2 functions x 50 points, worst relative error {worst:.1e}"))
}

fn identity_map_equivalence() -> Outcome {
    let prob = common::lasso(104, 60, 100, 0.1);
    let l = prob.lipschitz();
    let limits = RunLimits::new(200, 1).with_history();
    let cfg = PpgConfig::unit_relaxation(l, prob.gram_bound(), limits).unwrap();
    ensure(cfg.tau() == cfg.beta(), || "tau must equal beta".into())?;
    let start = Start::origin_for(&prob);
    let a = ppg_solve(&prob, &cfg, &start, &mut NoMonitor).unwrap();
    let b = proximal_gradient_solve(&prob, limits, &start, &mut NoMonitor).unwrap();
    let (ha, hb) = (a.history.unwrap(), b.history.unwrap());
    ensure(ha.len() == 201 && hb.len() == 201, || "expected 200 iterations".into())?;
    let dev = ha
        .iter()
        .zip(&hb)
        .map(|(p, q)| (&p.z - &q.z).amax())
        .fold(0.0, f64::max);
    ensure(dev <= 1e-10, || format!("max z deviation {dev:e}"))?;
    let moved = (&ha[200].z - &ha[0].z).amax();
    ensure(moved > 1e-3, || "iterates did not move".into())?;
    Ok(format!("200 iterations on 100-dim lasso, max z deviation {dev:.1e}"))
}

fn lyapunov_monotonicity() -> Outcome {
    let inst = common::small_flasso(105);
    let prob = inst.build_composite().unwrap();
    let l = prob.lipschitz();
    let cfg = PpgConfig::with_beta(l, prob.gram_bound(), 1.95 / l, RunLimits::new(2000, 1).with_history()).unwrap();
    let reference = common::limit_of(&prob, &cfg);
    let tr = ppg_solve(&prob, &cfg, &Start::origin_for(&prob), &mut NoMonitor).unwrap();
    let values = lyapunov_series(&prob.map, tr.history.as_deref().unwrap(), &reference, &cfg).unwrap();
    ensure(values.len() == 2001, || "expected 2000 iterations".into())?;
    let mut worst = f64::NEG_INFINITY;
    for (t, w) in values.windows(2).enumerate() {
        let excess = w[1] - w[0] - 1e-8 * (1.0 + w[0]);
        worst = worst.max(w[1] - w[0]);
        ensure(excess <= 0.0, || format!("increase at t = {}: {:e} -> {:e}", t + 1, w[0], w[1]))?;
    }
    Ok(format!(
        "2000 iterations, V0 = {:.3e}, V2000 = {:.1e}, largest step change {worst:.1e}",
        values[0], values[2000]
    ))
}

fn ergodic_constraint_bound() -> Outcome {
    let inst = common::small_flasso(105);
    let prob = inst.build_composite().unwrap();
    let cfg = PpgConfig::unit_relaxation(prob.lipschitz(), prob.gram_bound(), RunLimits::new(1000, 1).with_history()).unwrap();
    let reference = common::limit_of(&prob, &cfg);
    let tr = ppg_solve(&prob, &cfg, &Start::origin_for(&prob), &mut NoMonitor).unwrap();
    let bounds = ppg_ergodic_bounds(&prob, &cfg, &tr, Some(&reference), None).unwrap();
    ensure(bounds.len() == 1000, || "expected N = 1..1000".into())?;
    let mut tightest = f64::INFINITY;
    for b in &bounds {
        tightest = tightest.min(b.constraint_bound / b.constraint_residual.max(f64::MIN_POSITIVE));
        ensure(b.constraint_residual <= b.constraint_bound, || {
            format!("N = {}: residual {:e} > bound {:e}", b.n, b.constraint_residual, b.constraint_bound)
        })?;
    }
    Ok(format!("N = 1..1000 within bound, smallest bound/residual ratio {tightest:.2}"))
}

fn sysreal_desk() -> Outcome {
    let inst = gen_sysreal::<f64>(&SysRealParams::standard(100, 0.5), 1).unwrap();
    let prob = inst.build_composite().unwrap();
    let tol = 1e-4;
    let cfg = PpgConfig::with_beta(1.0, prob.gram_bound(), 0.05, RunLimits::new(600, 10)).unwrap();
    let mut mon = inst.monitor(&prob, tol);
    let tr = ppg_solve(&prob, &cfg, &Start::origin_for(&prob), &mut mon).unwrap();
    ensure(tr.converged, || format!("no termination within {} iterations", tr.iterations))?;
    let c = tr.last_checkpoint().unwrap();
    ensure((c.pobj + c.dobj).abs() <= tol * c.pobj.max(1.0), || {
        format!("gap |{:e} + {:e}| too large", c.pobj, c.dobj)
    })?;
    ensure(c.dfeas <= 2e-5, || format!("dfeas {:e}", c.dfeas))?;
    Ok(format!(
        "{} iterations, pobj {:.4e}, dobj {:.4e}, dfeas {:.1e}",
        tr.iterations, c.pobj, c.dobj, c.dfeas
    ))
}

fn flasso_desk() -> Outcome {
    let inst = gen_fusedlasso::<f64>(250, 10000, 5e-4, 1).unwrap();
    let prob = inst.build_composite().unwrap();
    let l = prob.lipschitz();
    let tol = 1e-4;
    let start = Start::origin_for(&prob);
    let cfg = PpgConfig::with_beta(l, prob.gram_bound(), 1.95 / l, RunLimits::new(15000, 500)).unwrap();
    let mut mon = inst.monitor(&prob, tol);
    let tr = ppg_solve(&prob, &cfg, &start, &mut mon).unwrap();
    ensure(tr.converged, || format!("PPG did not terminate within {} iterations", tr.iterations))?;
    let c = tr.last_checkpoint().unwrap().clone();

    let mcfg = MfbsConfig::for_problem(l, prob.gram_bound(), RunLimits::new(20000, 500)).unwrap();
    let mut mon = inst.monitor(&prob, tol);
    let mt = mfbs_solve(&prob, &mcfg, &start, &mut mon).unwrap();
    let mfbs = if mt.converged {
        format!("WARNING: MFBS terminated after {} iterations", mt.iterations)
    } else {
        "MFBS did not terminate within 20000 iterations, as expected".to_string()
    };
    Ok(format!(
        "PPG {} iterations ({:.1?}), pobj {:.4e}, dobj {:.4e}, dfeas {:.1e}; {mfbs}",
        tr.iterations, tr.wall_time, c.pobj, c.dobj, c.dfeas
    ))
}

/// Best value of `lambda ||V||_* + ||V - U||^2 / (2 tau)` found by
/// subgradient descent from zero with geometric steps `tau q^t`.
fn subgradient_oracle(u: &DMatrix<f64>, lambda: f64, tau: f64, iters: usize) -> f64 {
    let obj = |v: &DMatrix<f64>| lambda * nuclear_norm(v).unwrap() + (v - u).norm_squared() / (2.0 * tau);
    let mut v = DMatrix::zeros(u.nrows(), u.ncols());
    let mut best = obj(&v);
    for t in 0..iters {
        let svd = v.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let (uu, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut sub = DMatrix::zeros(u.nrows(), u.ncols());
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > 1e-12 * smax.max(1.0) {
                sub += uu.column(i) * vt.row(i);
            }
        }
        let g = sub * lambda + (&v - u) / tau;
        v -= g * (tau * 0.995f64.powi(t as i32));
        best = best.min(obj(&v));
    }
    best
}

fn nuclear_prox_oracle() -> Outcome {
    let mut rng = instance_rng(109, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let u = gaussian_matrix(&mut rng, 8, 6);
        let lambda: f64 = rng.random_range(0.2..2.0);
        let tau: f64 = rng.random_range(0.2..2.0);
        let v = prox_nuclear(lambda, tau, &u).unwrap();
        let value = lambda * nuclear_norm(&v).unwrap() + (&v - &u).norm_squared() / (2.0 * tau);
        let oracle = subgradient_oracle(&u, lambda, tau, 5000);
        let rel = (value - oracle).abs() / oracle.abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("relative gap {rel:e} (prox {value}, oracle {oracle})"))?;
        ensure(value <= oracle * (1.0 + 1e-12), || format!("oracle {oracle} beat the prox {value}"))?;
    }
    Ok(format!("20 matrices, worst relative gap {worst:.1e}"))
}

fn ppg_equals_ama() -> Outcome {
    let inst = common::small_flasso(110);
    let prob = inst.build_composite().unwrap();
    let l = prob.lipschitz();
    let limits = RunLimits::new(100, 1).with_history();
    let cfg = PpgConfig::with_beta(l, prob.gram_bound(), 1.95 / l, limits).unwrap();
    let mut rng = instance_rng(110, 1);
    let start = Start {
        y: gaussian_vector(&mut rng, prob.dual_dim()) * 0.1,
        z: gaussian_vector(&mut rng, prob.primal_dim()),
    };
    let a = ppg_solve(&prob, &cfg, &start, &mut NoMonitor).unwrap();
    let ama = fenchel_dual_instance(&prob, cfg.tau());
    let acfg = AmaConfig {
        beta: cfg.beta(),
        gamma: cfg.gamma(),
        limits,
    };
    acfg.check_convergence_conditions(&ama).map_err(|e| e.to_string())?;
    let b = proximal_ama_solve(&ama, &acfg, &start, &mut NoMonitor).unwrap();
    let (ha, hb) = (a.history.unwrap(), b.history.unwrap());
    ensure(ha.len() == 101 && hb.len() == 101, || "expected 100 iterations".into())?;
    let mut dev = 0.0f64;
    for (p, q) in ha.iter().zip(&hb) {
        dev = dev
            .max((&p.x - &q.x).amax())
            .max((&p.y - &q.y).amax())
            .max((&p.z - &q.z).amax());
    }
    ensure(dev <= 1e-12, || format!("max deviation {dev:e}"))?;
    Ok(format!("100 iterations, max (x, y, z) deviation {dev:.1e}"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "Moreau identity", limit: Duration::from_secs(5), run: moreau_identity },
        Criterion { id: 2, name: "adjoint consistency", limit: Duration::from_secs(5), run: adjoint_consistency },
        Criterion { id: 3, name: "gradient oracle", limit: Duration::from_secs(10), run: gradient_oracle },
        Criterion { id: 4, name: "identity map reduces to proximal gradient", limit: Duration::from_secs(5), run: identity_map_equivalence },
        Criterion { id: 5, name: "Lyapunov monotonicity", limit: Duration::from_secs(30), run: lyapunov_monotonicity },
        Criterion { id: 6, name: "ergodic constraint bound", limit: Duration::from_secs(30), run: ergodic_constraint_bound },
        Criterion { id: 7, name: "system realization desk run", limit: Duration::from_secs(120), run: sysreal_desk },
        Criterion { id: 8, name: "fused lasso desk run", limit: Duration::from_secs(600), run: flasso_desk },
        Criterion { id: 9, name: "nuclear prox vs subgradient oracle", limit: Duration::from_secs(60), run: nuclear_prox_oracle },
        Criterion { id: 10, name: "PPG equals proximal AMA on the dual", limit: Duration::from_secs(5), run: ppg_equals_ama },
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    std::panic::set_hook(Box::new(|_| {}));

    let mut failed = 0;
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > c.limit => Err(format!("took {elapsed:.1?}, limit {:?}", c.limit)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {}: {detail} [{elapsed:.2?}]", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {}: {why} [{elapsed:.2?}]", c.id, c.name);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
