// SPDX-License-Identifier: Apache-2.0

//! Plain-text experiment configuration: one `key = value` per line, `#`
//! starts a comment. List-valued keys take comma-separated values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolverKind {
    Ppg,
    Mfbs,
    Condat,
    ProxGrad,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ppg => "ppg",
            SolverKind::Mfbs => "mfbs",
            SolverKind::Condat => "condat",
            SolverKind::ProxGrad => "proxgrad",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ppg" => Ok(SolverKind::Ppg),
            "mfbs" => Ok(SolverKind::Mfbs),
            "condat" => Ok(SolverKind::Condat),
            "proxgrad" => Ok(SolverKind::ProxGrad),
            other => Err(BenchError::Config(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    /// One cell per `(k, lambda)` pair.
    SysReal {
        horizon: usize,
        m: usize,
        n: usize,
        r: usize,
        j: usize,
        k: Vec<usize>,
        noise: f64,
        lambda: Vec<f64>,
    },
    /// One cell per `(n, alpha)` pair.
    FusedLasso { m: usize, n: Vec<usize>, alpha: Vec<f64> },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::SysReal { .. } => "sysreal",
            ProblemSpec::FusedLasso { .. } => "flasso",
        }
    }
}

/// Explicit step parameters. Anything left `None` falls back to the
/// per-problem defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub ppg_beta: Option<f64>,
    pub ppg_gamma: Option<f64>,
    pub ppg_tau: Option<f64>,
    pub mfbs_sigma: Option<f64>,
    pub mfbs_lm: Option<f64>,
    pub condat_beta: Option<f64>,
    pub condat_tau: Option<f64>,
    pub condat_gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverKind>,
    pub overrides: Overrides,
    pub tol: f64,
    pub max_iter: usize,
    pub check_every: usize,
    pub instances: usize,
    pub base_seed: u64,
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub instance_dir: PathBuf,
}

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 20000;
pub const DEFAULT_CHECK_EVERY: usize = 10;

const COMMON_KEYS: &[&str] = &[
    "problem",
    "solvers",
    "tol",
    "max_iter",
    "check_every",
    "instances",
    "base_seed",
    "threads",
    "output",
    "instance_dir",
    "ppg.beta",
    "ppg.gamma",
    "ppg.tau",
    "mfbs.sigma",
    "mfbs.lm",
    "condat.beta",
    "condat.tau",
    "condat.gamma",
];
const SYSREAL_KEYS: &[&str] = &["T", "m", "n", "r", "j", "k", "noise", "lambda"];
const FLASSO_KEYS: &[&str] = &["m", "n", "alpha"];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, BenchError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(BenchError::Config(format!("line {}: expected `key = value`", i + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(BenchError::Config(format!("line {}: empty key or value", i + 1)));
            }
            if map.insert(key.to_string(), (i + 1, value.to_string())).is_some() {
                return Err(BenchError::Config(format!("line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(Self { map })
    }

    fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>, BenchError> {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                BenchError::Config(format!("line {line}: cannot parse {key} = {v:?}"))
            }),
        }
    }

    fn get_or<V: FromStr>(&self, key: &str, default: V) -> Result<V, BenchError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<V: FromStr>(&self, key: &str) -> Result<V, BenchError> {
        self.get(key)?
            .ok_or_else(|| BenchError::Config(format!("missing required key {key:?}")))
    }

    fn list<V: FromStr>(&self, key: &str) -> Result<Option<Vec<V>>, BenchError> {
        let Some((line, v)) = self.map.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| {
                    BenchError::Config(format!("line {line}: cannot parse {key} entry {:?}", s.trim()))
                })
            })
            .collect::<Result<Vec<V>, _>>()
            .map(Some)
    }

    fn require_list<V: FromStr>(&self, key: &str) -> Result<Vec<V>, BenchError> {
        self.list(key)?
            .ok_or_else(|| BenchError::Config(format!("missing required key {key:?}")))
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, BenchError> {
    let e = Entries::parse(text)?;
    let problem_name: String = e.require("problem")?;
    let problem_keys = match problem_name.as_str() {
        "sysreal" => SYSREAL_KEYS,
        "flasso" => FLASSO_KEYS,
        other => {
            return Err(BenchError::Config(format!(
                "problem must be sysreal or flasso, got {other:?}"
            )))
        }
    };
    if let Some(key) = e
        .map
        .keys()
        .find(|k| !COMMON_KEYS.contains(&k.as_str()) && !problem_keys.contains(&k.as_str()))
    {
        return Err(BenchError::Config(format!("unknown key {key:?}")));
    }

    let problem = if problem_name == "sysreal" {
        let m = e.get_or("m", 10)?;
        ProblemSpec::SysReal {
            horizon: e.get_or("T", 1000)?,
            m,
            n: e.get_or("n", m)?,
            r: e.get_or("r", 10)?,
            j: e.get_or("j", 21)?,
            k: e.require_list("k")?,
            noise: e.get_or("noise", 0.05)?,
            lambda: e.require_list("lambda")?,
        }
    } else {
        ProblemSpec::FusedLasso {
            m: e.get_or("m", 250)?,
            n: e.require_list("n")?,
            alpha: e.require_list("alpha")?,
        }
    };

    let cfg = ExperimentConfig {
        problem,
        solvers: e.list("solvers")?.unwrap_or_else(|| vec![SolverKind::Ppg]),
        overrides: Overrides {
            ppg_beta: e.get("ppg.beta")?,
            ppg_gamma: e.get("ppg.gamma")?,
            ppg_tau: e.get("ppg.tau")?,
            mfbs_sigma: e.get("mfbs.sigma")?,
            mfbs_lm: e.get("mfbs.lm")?,
            condat_beta: e.get("condat.beta")?,
            condat_tau: e.get("condat.tau")?,
            condat_gamma: e.get("condat.gamma")?,
        },
        tol: e.get_or("tol", DEFAULT_TOL)?,
        max_iter: e.get_or("max_iter", DEFAULT_MAX_ITER)?,
        check_every: e.get_or("check_every", DEFAULT_CHECK_EVERY)?,
        instances: e.get_or("instances", 10)?,
        base_seed: e.get_or("base_seed", 1)?,
        threads: e.get_or("threads", 1)?,
        output: e.get::<String>("output")?.map(PathBuf::from),
        instance_dir: PathBuf::from(e.get_or("instance_dir", "instances".to_string())?),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn positive(name: &str, v: Option<f64>) -> Result<(), BenchError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(BenchError::Config(format!("{name} must be positive and finite, got {x}")))
        }
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    /// Checks everything that does not depend on a generated instance.
    /// Step parameters are validated again against each instance's
    /// constants before any solver runs.
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.solvers.is_empty() {
            return bad("at least one solver is required".into());
        }
        if let Some(s) = self.solvers.iter().enumerate().find_map(|(i, s)| self.solvers[..i].contains(s).then_some(s)) {
            return bad(format!("solver {s} listed twice"));
        }
        if self.solvers.contains(&SolverKind::ProxGrad) {
            return bad(format!(
                "proxgrad needs an identity linear map, which {} does not have",
                self.problem.name()
            ));
        }
        if self.instances == 0 {
            return bad("instances must be at least 1".into());
        }
        if self.max_iter == 0 || self.check_every == 0 {
            return bad("max_iter and check_every must be at least 1".into());
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        let o = &self.overrides;
        for (name, v) in [
            ("ppg.beta", o.ppg_beta),
            ("ppg.gamma", o.ppg_gamma),
            ("ppg.tau", o.ppg_tau),
            ("mfbs.lm", o.mfbs_lm),
            ("condat.beta", o.condat_beta),
            ("condat.tau", o.condat_tau),
            ("condat.gamma", o.condat_gamma),
        ] {
            positive(name, v)?;
        }
        if let Some(s) = o.mfbs_sigma {
            if !(s > 0.0 && s < 1.0) {
                return bad(format!("mfbs.sigma must lie in (0, 1), got {s}"));
            }
        }
        match &self.problem {
            ProblemSpec::SysReal { horizon, m, n, r, j, k, noise, lambda } => {
                if m != n {
                    return bad(format!("sysreal needs m == n, got m = {m}, n = {n}"));
                }
                if *m == 0 || *r == 0 || *j == 0 || k.is_empty() || k.contains(&0) {
                    return bad("sysreal dimensions must be positive".into());
                }
                if let Some(kk) = k.iter().find(|&&kk| *horizon <= j + kk) {
                    return bad(format!("T = {horizon} must exceed j + k = {}", j + kk));
                }
                if !(*noise >= 0.0) {
                    return bad(format!("noise must be nonnegative, got {noise}"));
                }
                if lambda.is_empty() || lambda.iter().any(|l| !(*l > 0.0)) {
                    return bad("lambda values must be positive".into());
                }
            }
            ProblemSpec::FusedLasso { m, n, alpha } => {
                if n.is_empty() || alpha.is_empty() {
                    return bad("n and alpha need at least one value".into());
                }
                if let Some(nn) = n.iter().find(|&&nn| nn <= 125 || nn <= *m) {
                    return bad(format!("flasso needs 125 < n and m < n, got m = {m}, n = {nn}"));
                }
                if *m == 0 {
                    return bad("m must be positive".into());
                }
                if alpha.iter().any(|a| !(*a > 0.0)) {
                    return bad("alpha values must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Default PPG step for a cell: `beta = 1` when `lambda = 0.05` and
    /// `0.05` otherwise for system realization, `1.95 / L` for fused lasso.
    pub fn default_ppg_beta(&self, lambda: Option<f64>, lipschitz: f64) -> f64 {
        match (&self.problem, lambda) {
            (ProblemSpec::SysReal { .. }, Some(l)) if l == 0.05 => 1.0,
            (ProblemSpec::SysReal { .. }, _) => 0.05,
            (ProblemSpec::FusedLasso { .. }, _) => 1.95 / lipschitz,
        }
    }
}
