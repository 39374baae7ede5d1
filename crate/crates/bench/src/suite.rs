// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ppg::problems::{
    gen_fusedlasso, gen_sysreal, save_instance, FusedLassoInstance, ProblemInstance, StoredInstance,
    SysRealInstance, SysRealParams,
};
use ppg::solvers::{
    condat_solve, mfbs_solve, ppg_solve, CondatConfig, IterateView, MfbsConfig, Monitor, PpgConfig,
    RunLimits, SolveTrace, Start,
};
use ppg::{CondatConfig64, MfbsConfig64, PpgConfig64};

use crate::config::{ExperimentConfig, ProblemSpec, SolverKind};
use crate::BenchError;

/// One table cell: a problem setting and a solver, averaged over instances.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub problem: String,
    pub solver: SolverKind,
    /// `k` for system realization, `n` for fused lasso.
    pub param1: f64,
    /// `lambda` for system realization, `alpha` for fused lasso.
    pub param2: f64,
    pub iter: usize,
    pub cpu_s: f64,
    pub pobj: f64,
    pub dobj: f64,
    pub dfeas: f64,
    pub converged_count: usize,
    pub instances: usize,
}

/// Outcome of one solver on one instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub iterations: usize,
    pub converged: bool,
    pub cpu_s: f64,
    pub pobj: f64,
    pub dobj: f64,
    pub dfeas: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum SolverSetup {
    Ppg(PpgConfig64),
    Mfbs(MfbsConfig64),
    Condat(CondatConfig64),
}

/// A single `(param1, param2)` setting of the configured problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    SysReal { params: SysRealParams },
    FusedLasso { m: usize, n: usize, alpha: f64 },
}

impl Cell {
    pub fn params(&self) -> (f64, f64) {
        match *self {
            Cell::SysReal { params } => (params.k as f64, params.lambda),
            Cell::FusedLasso { n, alpha, .. } => (n as f64, alpha),
        }
    }

    fn lambda(&self) -> Option<f64> {
        match *self {
            Cell::SysReal { params } => Some(params.lambda),
            Cell::FusedLasso { .. } => None,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Generated, BenchError> {
        Ok(match *self {
            Cell::SysReal { params } => Generated::SysReal(gen_sysreal(&params, seed)?),
            Cell::FusedLasso { m, n, alpha } => Generated::FusedLasso(gen_fusedlasso(m, n, alpha, seed)?),
        })
    }

    fn file_stem(&self, seed: u64) -> String {
        match *self {
            Cell::SysReal { params } => format!("sysreal_k{}_lambda{}_seed{seed}", params.k, params.lambda),
            Cell::FusedLasso { m, n, alpha } => format!("flasso_m{m}_n{n}_alpha{alpha:e}_seed{seed}"),
        }
    }
}

pub enum Generated {
    SysReal(SysRealInstance<f64>),
    FusedLasso(FusedLassoInstance<f64>),
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    match &cfg.problem {
        ProblemSpec::SysReal { horizon, m, n, r, j, k, noise, lambda } => {
            for &kk in k {
                for &l in lambda {
                    out.push(Cell::SysReal {
                        params: SysRealParams {
                            horizon: *horizon,
                            m: *m,
                            n: *n,
                            r: *r,
                            j: *j,
                            k: kk,
                            noise: *noise,
                            lambda: l,
                        },
                    });
                }
            }
        }
        ProblemSpec::FusedLasso { m, n, alpha } => {
            for &nn in n {
                for &a in alpha {
                    out.push(Cell::FusedLasso { m: *m, n: nn, alpha: a });
                }
            }
        }
    }
    out
}

/// Step parameters for `solver` given `L` and `||M* M||`, with overrides
/// applied and validated.
pub fn solver_setup(
    cfg: &ExperimentConfig,
    solver: SolverKind,
    lipschitz: f64,
    gram_bound: f64,
    lambda: Option<f64>,
) -> Result<SolverSetup, BenchError> {
    let limits = RunLimits::new(cfg.max_iter, cfg.check_every);
    let o = &cfg.overrides;
    let setup = match solver {
        SolverKind::Ppg => {
            let beta = o.ppg_beta.unwrap_or_else(|| cfg.default_ppg_beta(lambda, lipschitz));
            let gamma = o.ppg_gamma.unwrap_or_else(|| PpgConfig::default_gamma(lipschitz, beta));
            let tau = o.ppg_tau.unwrap_or(beta * gram_bound);
            SolverSetup::Ppg(PpgConfig::new(lipschitz, gram_bound, beta, gamma, tau, limits)?)
        }
        SolverKind::Mfbs => {
            let sigma = o.mfbs_sigma.unwrap_or(0.95);
            let lm = o.mfbs_lm.unwrap_or_else(|| MfbsConfig::lipschitz_bound(lipschitz, gram_bound));
            SolverSetup::Mfbs(MfbsConfig::new(sigma, lm, limits)?)
        }
        SolverKind::Condat => {
            let beta = o.condat_beta.unwrap_or(1.0 / lipschitz);
            let tau = o.condat_tau.unwrap_or(4.0 * beta * gram_bound);
            let gamma = o.condat_gamma.unwrap_or(1.0);
            SolverSetup::Condat(CondatConfig::new(lipschitz, gram_bound, beta, tau, gamma, limits)?)
        }
        SolverKind::ProxGrad => {
            return Err(BenchError::Config("proxgrad is not applicable to the benchmark problems".into()))
        }
    };
    Ok(setup)
}

fn solve_one<I: ProblemInstance<f64>>(
    inst: &I,
    cfg: &ExperimentConfig,
    solver: SolverKind,
    lambda: Option<f64>,
) -> Result<RunRecord, BenchError> {
    let prob = inst.build_composite()?;
    let setup = solver_setup(cfg, solver, prob.lipschitz(), prob.gram_bound(), lambda)?;
    let start = Start::origin_for(&prob);
    let mut mon = inst.monitor(&prob, cfg.tol);
    let trace: SolveTrace<f64> = match &setup {
        SolverSetup::Ppg(c) => ppg_solve(&prob, c, &start, &mut mon)?,
        SolverSetup::Mfbs(c) => mfbs_solve(&prob, c, &start, &mut mon)?,
        SolverSetup::Condat(c) => condat_solve(&prob, c, &start, &mut mon)?,
    };
    let mut last = trace.last_checkpoint().cloned();
    if last.as_ref().is_none_or(|c| c.t < trace.iterations) {
        // The cap fell between checkpoints; evaluate the final iterate.
        let view = IterateView { t: trace.iterations, z: &trace.z, y: &trace.y, x: &trace.x };
        last = mon.check(&view)?.or(last);
    }
    let c = last.ok_or_else(|| BenchError::Config("monitor produced no checkpoint".into()))?;
    Ok(RunRecord {
        iterations: trace.iterations,
        converged: trace.converged,
        cpu_s: trace.wall_time.as_secs_f64(),
        pobj: c.pobj,
        dobj: c.dobj,
        dfeas: c.dfeas,
    })
}

/// Runs every configured solver on one generated instance.
pub fn run_instance(cfg: &ExperimentConfig, cell: &Cell, seed: u64) -> Result<Vec<RunRecord>, BenchError> {
    let lambda = cell.lambda();
    let generated = cell.generate(seed)?;
    cfg.solvers
        .iter()
        .map(|&s| match &generated {
            Generated::SysReal(inst) => solve_one(inst, cfg, s, lambda),
            Generated::FusedLasso(inst) => solve_one(inst, cfg, s, lambda),
        })
        .collect()
}

/// Builds the solver setups for the first instance of every cell so that
/// bad step parameters are reported before anything runs.
fn precheck(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<(), BenchError> {
    for cell in cells {
        let (l, g) = match cell.generate(cfg.base_seed)? {
            Generated::SysReal(inst) => {
                let p = inst.build_composite()?;
                (p.lipschitz(), p.gram_bound())
            }
            Generated::FusedLasso(inst) => {
                let p = inst.build_composite()?;
                (p.lipschitz(), p.gram_bound())
            }
        };
        for &s in &cfg.solvers {
            solver_setup(cfg, s, l, g, cell.lambda())
                .map_err(|e| BenchError::Config(format!("{s} at {:?}: {e}", cell.params())))?;
        }
    }
    Ok(())
}

fn aggregate(cfg: &ExperimentConfig, cell: &Cell, runs: &[Vec<RunRecord>]) -> Vec<ResultRow> {
    let (param1, param2) = cell.params();
    let count = runs.len() as f64;
    cfg.solvers
        .iter()
        .enumerate()
        .map(|(si, &solver)| {
            let mean = |f: &dyn Fn(&RunRecord) -> f64| runs.iter().map(|r| f(&r[si])).sum::<f64>() / count;
            ResultRow {
                problem: cfg.problem.name().to_string(),
                solver,
                param1,
                param2,
                iter: mean(&|r| r.iterations as f64).round() as usize,
                cpu_s: mean(&|r| r.cpu_s),
                pobj: mean(&|r| r.pobj),
                dobj: mean(&|r| r.dobj),
                dfeas: mean(&|r| r.dfeas),
                converged_count: runs.iter().filter(|r| r[si].converged).count(),
                instances: runs.len(),
            }
        })
        .collect()
}

/// Runs `f(i)` for `i in 0..count` on up to `threads` workers and returns
/// the results in index order.
fn parallel_map<R: Send>(
    count: usize,
    threads: usize,
    f: impl Fn(usize) -> Result<R, BenchError> + Sync,
) -> Result<Vec<R>, BenchError> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R, BenchError>>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.min(count).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let r = f(i);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every index is visited"))
        .collect()
}

/// Runs the configured experiment. Instance `i` of each cell uses seed
/// `base_seed + i` and every solver starts from the origin. Rows come back
/// sorted by problem parameters, then solver.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, BenchError> {
    cfg.validate()?;
    let cells = cells(cfg);
    precheck(cfg, &cells)?;
    let mut rows = Vec::new();
    for cell in &cells {
        let runs = parallel_map(cfg.instances, cfg.threads, |i| run_instance(cfg, cell, cfg.base_seed + i as u64))?;
        rows.extend(aggregate(cfg, cell, &runs));
    }
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.problem
            .cmp(&b.problem)
            .then(a.param1.total_cmp(&b.param1))
            .then(a.param2.total_cmp(&b.param2))
            .then(a.solver.cmp(&b.solver))
    });
}

/// Writes every configured instance to `cfg.instance_dir`.
pub fn generate_instances(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, BenchError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.instance_dir)
        .map_err(|e| BenchError::Io(format!("{}: {e}", cfg.instance_dir.display())))?;
    let mut paths = Vec::new();
    for cell in cells(cfg) {
        for i in 0..cfg.instances {
            let seed = cfg.base_seed + i as u64;
            let stored = match cell.generate(seed)? {
                Generated::SysReal(inst) => StoredInstance::SysReal(inst),
                Generated::FusedLasso(inst) => StoredInstance::FusedLasso(inst),
            };
            let path = cfg.instance_dir.join(format!("{}.txt", cell.file_stem(seed)));
            save_instance(&path, &stored)?;
            paths.push(path);
        }
    }
    Ok(paths)
}
