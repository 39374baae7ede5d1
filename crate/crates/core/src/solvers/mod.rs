// SPDX-License-Identifier: Apache-2.0

//! Iterative solvers for `min_z h(z) + P(Mz - b)` and its Fenchel dual.
//!
//! All solvers share the same bookkeeping: a [`Monitor`] is consulted every
//! `check_every` iterations, ergodic averages of `(x^t, y^t)` are kept from
//! `t = 1`, and per-iteration snapshots can be recorded for analysis.

mod ama;
mod analysis;
mod condat;
mod mfbs;
mod ppg;
mod proxgrad;

use std::time::Duration;

use nalgebra::DVector;

use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::prox::Proximable;
use crate::scalar::Scalar;
use crate::smooth::Smooth;

pub use ama::{ama_gamma_limit, fenchel_dual_instance, proximal_ama_solve, AmaConfig, AmaProblem, YStep, YSubproblem};
pub use analysis::{
    lyapunov_series, lyapunov_value, ppg_ergodic_bounds, t_seminorm_sq, ergodic_bounds,
    ComplexityConstants, ErgodicBound, Reference,
};
pub use condat::{condat_solve, CondatConfig};
pub use mfbs::{mfbs_solve, MfbsConfig};
pub use ppg::{ppg_solve, PpgConfig};
pub use proxgrad::proximal_gradient_solve;

/// `min_z h(z) + P(Mz - b)` with a Lipschitz bound `L` for `grad h`.
#[derive(Clone, Debug)]
pub struct CompositeProblem<T: Scalar, H, P> {
    pub h: H,
    pub p: P,
    pub map: LinearMap<T>,
    pub offset: DVector<T>,
    lipschitz: T,
}

impl<T, H, P> CompositeProblem<T, H, P>
where
    T: Scalar,
    H: Smooth<T>,
    P: Proximable<T>,
{
    pub fn new(h: H, p: P, map: LinearMap<T>, offset: DVector<T>) -> Result<Self> {
        check_len("CompositeProblem: h vs M domain", map.in_dim(), h.dim())?;
        check_len("CompositeProblem: P vs M codomain", map.out_dim(), p.dim())?;
        check_len("CompositeProblem: b vs M codomain", map.out_dim(), offset.len())?;
        let lipschitz = h.lipschitz();
        Ok(Self {
            h,
            p,
            map,
            offset,
            lipschitz,
        })
    }

    /// Replaces `L` by a looser bound.
    pub fn with_lipschitz(mut self, lipschitz: T) -> Result<Self> {
        if !(lipschitz >= self.h.lipschitz()) {
            return Err(Error::Config(format!(
                "L = {lipschitz} is below the gradient's Lipschitz bound {}",
                self.h.lipschitz()
            )));
        }
        self.lipschitz = lipschitz;
        Ok(self)
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn gram_bound(&self) -> T {
        self.map.gram_norm_bound()
    }

    pub fn primal_dim(&self) -> usize {
        self.map.in_dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.map.out_dim()
    }

    /// `F(z) = h(z) + P(Mz - b)`.
    pub fn objective(&self, z: &DVector<T>) -> Result<T> {
        let u = self.map.apply(z)? - &self.offset;
        Ok(self.h.value(z)? + self.p.value(&u)?)
    }
}

/// Initial point `(y^0, z^0)`.
#[derive(Clone, Debug)]
pub struct Start<T: Scalar> {
    pub y: DVector<T>,
    pub z: DVector<T>,
}

impl<T: Scalar> Start<T> {
    pub fn origin(primal_dim: usize, dual_dim: usize) -> Self {
        Self {
            y: DVector::zeros(dual_dim),
            z: DVector::zeros(primal_dim),
        }
    }

    pub fn origin_for<H, P>(prob: &CompositeProblem<T, H, P>) -> Self
    where
        H: Smooth<T>,
        P: Proximable<T>,
    {
        Self::origin(prob.primal_dim(), prob.dual_dim())
    }

    fn check(&self, primal_dim: usize, dual_dim: usize) -> Result<()> {
        check_len("Start::z", primal_dim, self.z.len())?;
        check_len("Start::y", dual_dim, self.y.len())
    }
}

/// Iteration cap and bookkeeping switches shared by every solver.
#[derive(Clone, Copy, Debug)]
pub struct RunLimits {
    pub max_iter: usize,
    pub check_every: usize,
    /// Keep `(x^t, y^t, z^t)` for every `t`; only for small problems.
    pub record_history: bool,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            check_every: 10,
            record_history: false,
        }
    }
}

impl RunLimits {
    pub fn new(max_iter: usize, check_every: usize) -> Self {
        Self {
            max_iter,
            check_every,
            record_history: false,
        }
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.check_every == 0 {
            return Err(Error::Config("check_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// What a monitor sees at a checkpoint. For MFBS `z`/`y` are `u^t`/`v^t`.
#[derive(Debug)]
pub struct IterateView<'a, T: Scalar> {
    pub t: usize,
    pub z: &'a DVector<T>,
    pub y: &'a DVector<T>,
    /// The latest `x = grad h(.)`.
    pub x: &'a DVector<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T: Scalar> {
    pub t: usize,
    /// Best primal value over the checkpoints so far.
    pub pobj: T,
    pub dobj: T,
    pub dfeas: T,
    pub stop: bool,
}

/// Termination rule / progress callback, invoked every `check_every`
/// iterations. Returning a checkpoint with `stop` set halts the run.
pub trait Monitor<T: Scalar> {
    fn check(&mut self, it: &IterateView<'_, T>) -> Result<Option<Checkpoint<T>>>;
}

impl<T, F> Monitor<T> for F
where
    T: Scalar,
    F: FnMut(&IterateView<'_, T>) -> Result<Option<Checkpoint<T>>>,
{
    fn check(&mut self, it: &IterateView<'_, T>) -> Result<Option<Checkpoint<T>>> {
        self(it)
    }
}

/// Never stops; runs to `max_iter`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoMonitor;

impl<T: Scalar> Monitor<T> for NoMonitor {
    fn check(&mut self, _: &IterateView<'_, T>) -> Result<Option<Checkpoint<T>>> {
        Ok(None)
    }
}

/// Iterates after `t` steps. `x` at `t = 0` is zero by convention.
#[derive(Clone, Debug)]
pub struct Snapshot<T: Scalar> {
    pub x: DVector<T>,
    pub y: DVector<T>,
    pub z: DVector<T>,
}

#[derive(Clone, Debug)]
pub struct SolveTrace<T: Scalar> {
    pub iterations: usize,
    pub converged: bool,
    /// Wall-clock time of the iteration loop, checkpoints included.
    pub wall_time: Duration,
    pub z: DVector<T>,
    pub y: DVector<T>,
    pub x: DVector<T>,
    /// MFBS only: the `(z, y)` pair; `z` and `y` above hold `(u, v)`.
    pub aux: Option<(DVector<T>, DVector<T>)>,
    pub checkpoints: Vec<Checkpoint<T>>,
    /// `(1/N) sum_{t=1..N} x^t` and likewise for `y`.
    pub ergodic_x: DVector<T>,
    pub ergodic_y: DVector<T>,
    pub history: Option<Vec<Snapshot<T>>>,
    /// Proximal gradient only: `F(z^t)` for `t = 1..`.
    pub objective: Vec<T>,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn primal_values(&self) -> Vec<T> {
        self.checkpoints.iter().map(|c| c.pobj).collect()
    }

    pub fn dual_values(&self) -> Vec<T> {
        self.checkpoints.iter().map(|c| c.dobj).collect()
    }

    pub fn dfeas_values(&self) -> Vec<T> {
        self.checkpoints.iter().map(|c| c.dfeas).collect()
    }

    pub fn last_checkpoint(&self) -> Option<&Checkpoint<T>> {
        self.checkpoints.last()
    }
}

/// Shared per-iteration bookkeeping.
struct Recorder<T: Scalar> {
    limits: RunLimits,
    ergodic_x: DVector<T>,
    ergodic_y: DVector<T>,
    count: usize,
    history: Option<Vec<Snapshot<T>>>,
    checkpoints: Vec<Checkpoint<T>>,
    started: std::time::Instant,
}

impl<T: Scalar> Recorder<T> {
    fn new(limits: RunLimits, primal_dim: usize, dual_dim: usize, start: &Start<T>) -> Self {
        let history = limits.record_history.then(|| {
            vec![Snapshot {
                x: DVector::zeros(primal_dim),
                y: start.y.clone(),
                z: start.z.clone(),
            }]
        });
        Self {
            limits,
            ergodic_x: DVector::zeros(primal_dim),
            ergodic_y: DVector::zeros(dual_dim),
            count: 0,
            history,
            checkpoints: Vec::new(),
            started: std::time::Instant::now(),
        }
    }

    /// Records iterate `t = count + 1`.
    fn record(&mut self, x: &DVector<T>, y: &DVector<T>, z: &DVector<T>) {
        self.count += 1;
        let w = T::one() / T::lit(self.count as f64);
        self.ergodic_x.axpy(w, &(x - &self.ergodic_x), T::one());
        self.ergodic_y.axpy(w, &(y - &self.ergodic_y), T::one());
        if let Some(h) = self.history.as_mut() {
            h.push(Snapshot {
                x: x.clone(),
                y: y.clone(),
                z: z.clone(),
            });
        }
    }

    /// Runs the monitor if the current iteration is a checkpoint; returns
    /// whether the run should stop.
    fn checkpoint<M: Monitor<T>>(&mut self, monitor: &mut M, view: IterateView<'_, T>) -> Result<bool> {
        if view.t % self.limits.check_every != 0 {
            return Ok(false);
        }
        match monitor.check(&view)? {
            Some(c) => {
                let stop = c.stop;
                self.checkpoints.push(c);
                Ok(stop)
            }
            None => Ok(false),
        }
    }

    fn finish(
        self,
        converged: bool,
        x: DVector<T>,
        y: DVector<T>,
        z: DVector<T>,
    ) -> SolveTrace<T> {
        SolveTrace {
            iterations: self.count,
            converged,
            wall_time: self.started.elapsed(),
            z,
            y,
            x,
            aux: None,
            checkpoints: self.checkpoints,
            ergodic_x: self.ergodic_x,
            ergodic_y: self.ergodic_y,
            history: self.history,
            objective: Vec::new(),
        }
    }
}
