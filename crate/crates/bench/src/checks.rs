// SPDX-License-Identifier: Apache-2.0

//! Quick invariant checks run by `bench check`.

use nalgebra::DVector;

use ppg::linops::{HankelShape, LinearMap};
use ppg::problems::rng::{gaussian_matrix, gaussian_vector, instance_rng};
use ppg::prox::{conjugate_prox, NuclearNorm, Proximable, WeightedL1};
use ppg::smooth::{LeastSquares, Logistic, Smooth};
use ppg::solvers::{
    fenchel_dual_instance, ppg_solve, proximal_ama_solve, proximal_gradient_solve, AmaConfig,
    CompositeProblem, NoMonitor, PpgConfig, RunLimits, Start,
};

use crate::config::parse_config_str;
use crate::report::to_csv;
use crate::suite::{cells, run_instance, run_suite};

pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<String, String>,
}

fn fail(msg: String) -> Result<String, String> {
    Err(msg)
}

fn moreau() -> Result<String, String> {
    let mut rng = instance_rng(1, 0);
    let kinds: Vec<Box<dyn Proximable<f64>>> = vec![
        Box::new(WeightedL1::two_level(5, 0.2, 7, 1.5).map_err(|e| e.to_string())?),
        Box::new(NuclearNorm::new(0.7, 4, 3).map_err(|e| e.to_string())?),
    ];
    let mut worst = 0.0f64;
    for p in &kinds {
        for i in 0..200 {
            let tau = 0.1 + 0.02 * i as f64;
            let z = gaussian_vector(&mut rng, p.dim()) * 3.0;
            let sum = p.prox(tau, &z).map_err(|e| e.to_string())?
                + conjugate_prox(p.as_ref(), tau, &(&z / tau)).map_err(|e| e.to_string())? * tau;
            worst = worst.max((sum - &z).norm() / z.norm());
        }
    }
    if worst > 1e-12 {
        return fail(format!("relative error {worst:e}"));
    }
    Ok(format!("worst relative error {worst:.1e}"))
}

fn adjoints() -> Result<String, String> {
    let mut rng = instance_rng(2, 0);
    let maps = [
        LinearMap::hankel(HankelShape::new(2, 3, 4, 6).map_err(|e| e.to_string())?),
        LinearMap::fused_diff_stack(20).map_err(|e| e.to_string())?,
        LinearMap::replication(5, 3).map_err(|e| e.to_string())?,
    ];
    let mut worst = 0.0f64;
    for map in &maps {
        for _ in 0..50 {
            let z = gaussian_vector(&mut rng, map.in_dim());
            let y = gaussian_vector(&mut rng, map.out_dim());
            let lhs = map.apply(&z).map_err(|e| e.to_string())?.dot(&y);
            let rhs = z.dot(&map.adjoint(&y).map_err(|e| e.to_string())?);
            worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    if worst > 1e-10 {
        return fail(format!("mismatch {worst:e}"));
    }
    Ok(format!("worst mismatch {worst:.1e}"))
}

fn gradients() -> Result<String, String> {
    let mut rng = instance_rng(3, 0);
    let h = Logistic::new(gaussian_matrix(&mut rng, 10, 15)).map_err(|e| e.to_string())?;
    let z = gaussian_vector(&mut rng, 15);
    let g = h.gradient(&z).map_err(|e| e.to_string())?;
    let fd = DVector::from_fn(15, |i, _| {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[i] += 1e-5;
        zm[i] -= 1e-5;
        (h.value(&zp).unwrap() - h.value(&zm).unwrap()) / 2e-5
    });
    let err = (&g - fd).norm() / g.norm().max(1.0);
    if err > 1e-6 {
        return fail(format!("relative error {err:e}"));
    }
    Ok(format!("relative error {err:.1e}"))
}

fn lasso() -> Result<CompositeProblem<f64, LeastSquares<f64>, WeightedL1<f64>>, String> {
    let mut rng = instance_rng(4, 0);
    let a = gaussian_matrix(&mut rng, 20, 30) / 20f64.sqrt();
    let rhs = gaussian_vector(&mut rng, 20);
    CompositeProblem::new(
        LeastSquares::new(a, rhs).map_err(|e| e.to_string())?,
        WeightedL1::uniform(30, 0.1).map_err(|e| e.to_string())?,
        LinearMap::identity(30),
        DVector::zeros(30),
    )
    .map_err(|e| e.to_string())
}

fn proximal_gradient_reduction() -> Result<String, String> {
    let prob = lasso()?;
    let limits = RunLimits::new(100, 1).with_history();
    let cfg = PpgConfig::unit_relaxation(prob.lipschitz(), 1.0, limits).map_err(|e| e.to_string())?;
    let start = Start::origin_for(&prob);
    let a = ppg_solve(&prob, &cfg, &start, &mut NoMonitor).map_err(|e| e.to_string())?;
    let b = proximal_gradient_solve(&prob, limits, &start, &mut NoMonitor).map_err(|e| e.to_string())?;
    let dev = a
        .history
        .unwrap_or_default()
        .iter()
        .zip(&b.history.unwrap_or_default())
        .map(|(p, q)| (&p.z - &q.z).amax())
        .fold(0.0, f64::max);
    if dev > 1e-10 {
        return fail(format!("deviation {dev:e}"));
    }
    Ok(format!("max deviation {dev:.1e}"))
}

fn dual_ama() -> Result<String, String> {
    let prob = lasso()?;
    let l = prob.lipschitz();
    let limits = RunLimits::new(100, 1).with_history();
    let cfg = PpgConfig::with_beta(l, 1.0, 1.9 / l, limits).map_err(|e| e.to_string())?;
    let start = Start::origin_for(&prob);
    let a = ppg_solve(&prob, &cfg, &start, &mut NoMonitor).map_err(|e| e.to_string())?;
    let ama = fenchel_dual_instance(&prob, cfg.tau());
    let acfg = AmaConfig { beta: cfg.beta(), gamma: cfg.gamma(), limits };
    let b = proximal_ama_solve(&ama, &acfg, &start, &mut NoMonitor).map_err(|e| e.to_string())?;
    let (ha, hb) = (a.history.unwrap_or_default(), b.history.unwrap_or_default());
    let dev = ha
        .iter()
        .zip(&hb)
        .map(|(p, q)| (&p.x - &q.x).amax().max((&p.y - &q.y).amax()).max((&p.z - &q.z).amax()))
        .fold(0.0, f64::max);
    if dev > 1e-12 || ha.len() != hb.len() {
        return fail(format!("deviation {dev:e}"));
    }
    Ok(format!("max deviation {dev:.1e}"))
}

const SMALL_SUITE: &str = "problem = sysreal\nT = 120\nm = 3\nr = 3\nj = 5\nk = 10\nlambda = 0.5\ninstances = 2\n";

fn suite_determinism() -> Result<String, String> {
    let cfg = parse_config_str(SMALL_SUITE).map_err(|e| e.to_string())?;
    let strip = |csv: String| -> Vec<String> {
        csv.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(5);
                f.join(",")
            })
            .collect()
    };
    let a = strip(to_csv(&run_suite(&cfg).map_err(|e| e.to_string())?));
    let b = strip(to_csv(&run_suite(&cfg).map_err(|e| e.to_string())?));
    if a != b {
        return fail("two runs with the same seeds differ".into());
    }
    Ok(format!("{} rows identical apart from cpu_s", a.len() - 1))
}

fn termination_gap() -> Result<String, String> {
    let cfg = parse_config_str(SMALL_SUITE).map_err(|e| e.to_string())?;
    let cell = cells(&cfg)[0];
    let mut n = 0;
    for i in 0..cfg.instances {
        for r in run_instance(&cfg, &cell, cfg.base_seed + i as u64).map_err(|e| e.to_string())? {
            if r.converged {
                n += 1;
                if (r.pobj + r.dobj).abs() > cfg.tol * r.pobj.max(1.0) {
                    return fail(format!("gap |{} + {}| above tolerance", r.pobj, r.dobj));
                }
            }
        }
    }
    if n == 0 {
        return fail("no run converged".into());
    }
    Ok(format!("{n} converged runs within the gap tolerance"))
}

pub fn run_checks() -> Vec<CheckResult> {
    let checks: [(&'static str, fn() -> Result<String, String>); 7] = [
        ("moreau identity", moreau),
        ("adjoint consistency", adjoints),
        ("logistic gradient", gradients),
        ("identity map reduces to proximal gradient", proximal_gradient_reduction),
        ("PPG equals proximal AMA on the dual", dual_ama),
        ("suite determinism", suite_determinism),
        ("termination gap", termination_gap),
    ];
    checks
        .into_iter()
        .map(|(name, f)| CheckResult { name, outcome: f() })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_checks() {
            assert!(c.outcome.is_ok(), "{}: {:?}", c.name, c.outcome);
        }
    }
}
