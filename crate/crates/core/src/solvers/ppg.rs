// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;

use super::{CompositeProblem, IterateView, Monitor, Recorder, RunLimits, SolveTrace, Start};
use crate::error::{Error, Result};
use crate::prox::{conjugate_prox, Proximable};
use crate::scalar::{min, Scalar};
use crate::smooth::Smooth;

/// Step parameters of the proximal-proximal-gradient method.
///
/// Valid when `0 < beta < 2/L`, `0 < gamma < 1 + min(1/2, 1/(beta L) - 1/2)`
/// and `tau >= beta ||M* M||` (the last makes `T = tau I - beta M M*` PSD).
#[derive(Clone, Copy, Debug)]
pub struct PpgConfig<T: Scalar> {
    beta: T,
    gamma: T,
    tau: T,
    pub limits: RunLimits,
}

impl<T: Scalar> PpgConfig<T> {
    pub fn new(lipschitz: T, gram_bound: T, beta: T, gamma: T, tau: T, limits: RunLimits) -> Result<Self> {
        let cfg = Self {
            beta,
            gamma,
            tau,
            limits,
        };
        cfg.validate(lipschitz, gram_bound)?;
        Ok(cfg)
    }

    /// `gamma = 1 + 0.95 min(1/2, 1/(beta L) - 1/2)`, `tau = beta ||M* M||`.
    pub fn with_beta(lipschitz: T, gram_bound: T, beta: T, limits: RunLimits) -> Result<Self> {
        let gamma = Self::default_gamma(lipschitz, beta);
        Self::new(lipschitz, gram_bound, beta, gamma, beta * gram_bound, limits)
    }

    /// `beta = 1/L`, `gamma = 1`, `tau = beta ||M* M||`.
    pub fn unit_relaxation(lipschitz: T, gram_bound: T, limits: RunLimits) -> Result<Self> {
        if !(lipschitz > T::zero()) {
            return Err(Error::Config(format!("L must be positive, got {lipschitz}")));
        }
        let beta = T::one() / lipschitz;
        Self::new(lipschitz, gram_bound, beta, T::one(), beta * gram_bound, limits)
    }

    /// Supremum of admissible `gamma` for the given `beta`.
    pub fn gamma_limit(lipschitz: T, beta: T) -> T {
        let half = T::lit(0.5);
        if lipschitz <= T::zero() {
            return T::one() + half;
        }
        T::one() + min(half, T::one() / (beta * lipschitz) - half)
    }

    pub fn default_gamma(lipschitz: T, beta: T) -> T {
        let half = T::lit(0.5);
        let slack = if lipschitz <= T::zero() {
            half
        } else {
            min(half, T::one() / (beta * lipschitz) - half)
        };
        T::one() + T::lit(0.95) * slack
    }

    pub fn validate(&self, lipschitz: T, gram_bound: T) -> Result<()> {
        self.limits.validate()?;
        let two = T::lit(2.0);
        if !(self.beta > T::zero()) || (lipschitz > T::zero() && !(self.beta * lipschitz < two)) {
            return Err(Error::Config(format!(
                "beta = {} must lie in (0, 2/L) with L = {lipschitz}",
                self.beta
            )));
        }
        let limit = Self::gamma_limit(lipschitz, self.beta);
        if !(self.gamma > T::zero() && self.gamma < limit) {
            return Err(Error::Config(format!(
                "gamma = {} must lie in (0, {limit})",
                self.gamma
            )));
        }
        if !(self.tau >= self.beta * gram_bound) || !(self.tau > T::zero()) {
            return Err(Error::Config(format!(
                "tau = {} must be positive and at least beta ||M* M|| = {}",
                self.tau,
                self.beta * gram_bound
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn tau(&self) -> T {
        self.tau
    }
}

/// Runs PPG from `start`. Each iteration:
///
/// ```text
/// x+ = grad h(z)
/// y+ = prox_{P*/tau}((T y - b + M z - beta M grad h(z)) / tau)
/// z+ = z - gamma beta (grad h(z) + M* y+)
/// ```
pub fn ppg_solve<T, H, P, Mon>(
    prob: &CompositeProblem<T, H, P>,
    cfg: &PpgConfig<T>,
    start: &Start<T>,
    monitor: &mut Mon,
) -> Result<SolveTrace<T>>
where
    T: Scalar,
    H: Smooth<T>,
    P: Proximable<T>,
    Mon: Monitor<T>,
{
    cfg.validate(prob.lipschitz(), prob.gram_bound())?;
    let (n, m) = (prob.primal_dim(), prob.dual_dim());
    start.check(n, m)?;
    let (beta, tau) = (cfg.beta, cfg.tau);
    let step = cfg.gamma * beta;

    let mut rec = Recorder::new(cfg.limits, n, m, start);
    let mut z = start.z.clone();
    let mut y = start.y.clone();
    let mut x = DVector::zeros(n);
    let mut mty = prob.map.adjoint(&y)?;
    let mut converged = false;

    for t in 1..=cfg.limits.max_iter {
        let grad = prob.h.gradient(&z)?;
        // T y + M (z - beta grad) - beta M M* y, folded into one map application.
        let w = &z - (&grad + &mty) * beta;
        let mut arg = prob.map.apply(&w)?;
        arg.axpy(tau, &y, T::one());
        arg -= &prob.offset;
        arg /= tau;
        y = conjugate_prox(&prob.p, tau, &arg)?;
        mty = prob.map.adjoint(&y)?;
        z.axpy(-step, &(&grad + &mty), T::one());
        x = grad;

        rec.record(&x, &y, &z);
        if rec.checkpoint(monitor, IterateView { t, z: &z, y: &y, x: &x })? {
            converged = true;
            break;
        }
    }
    Ok(rec.finish(converged, x, y, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::LinearMap;
    use crate::prox::WeightedL1;
    use crate::smooth::HalfSqDist;
    use crate::solvers::NoMonitor;

    fn scalar_problem() -> CompositeProblem<f64, HalfSqDist<f64>, WeightedL1<f64>> {
        // h(z) = z^2/2, P = 0, M = I, b = 0
        CompositeProblem::new(
            HalfSqDist::new(DVector::from_vec(vec![0.0])),
            WeightedL1::uniform(1, 0.0).unwrap(),
            LinearMap::identity(1),
            DVector::zeros(1),
        )
        .unwrap()
    }

    #[test]
    fn parameter_validation() {
        let lim = RunLimits::default();
        assert!(PpgConfig::new(1.0, 1.0, 1.0, 1.0, 1.0, lim).is_ok());
        assert!(PpgConfig::new(1.0, 1.0, 2.0, 1.0, 2.0, lim).is_err());
        assert!(PpgConfig::new(1.0, 1.0, 0.0, 1.0, 1.0, lim).is_err());
        // beta L = 1: gamma must stay below 1.5
        assert!(PpgConfig::new(1.0, 1.0, 1.0, 1.5, 1.0, lim).is_err());
        assert!(PpgConfig::new(1.0, 1.0, 1.0, 1.49, 1.0, lim).is_ok());
        // beta L = 1.5: gamma below 1 + (2/3 - 1/2)
        assert!(PpgConfig::new(1.0, 1.0, 1.5, 1.2, 1.5, lim).is_err());
        assert!(PpgConfig::new(1.0, 1.0, 1.5, 1.16, 1.5, lim).is_ok());
        assert!(PpgConfig::new(1.0, 4.0, 0.5, 1.0, 1.9, lim).is_err());
        assert!(PpgConfig::new(1.0, 4.0, 0.5, 1.0, 2.0, lim).is_ok());
        let bad = RunLimits::new(10, 0);
        assert!(PpgConfig::new(1.0, 1.0, 1.0, 1.0, 1.0, bad).is_err());
    }

    #[test]
    fn default_gamma_matches_formula() {
        let lmax: f64 = 123.0;
        let l = 0.25 * lmax;
        let beta = 1.95 / l;
        let cfg = PpgConfig::with_beta(l, 5.0, beta, RunLimits::default()).unwrap();
        let expect = 1.0 + 0.95 * (1.0 / 1.95 - 0.5);
        assert!((cfg.gamma() - expect).abs() < 1e-15);
        assert!((cfg.tau() - 5.0 * beta).abs() < 1e-15);
        assert!((cfg.gamma() - 1.01218).abs() < 1e-5);
    }

    #[test]
    fn scalar_quadratic_recursion() {
        // With h = z^2/2, P = 0, M = I, b = 0 and beta = tau = 1, gamma = 1:
        // y+ = 0, z+ = 0, x+ = z; two steps reach the solution.
        let prob = scalar_problem();
        let cfg = PpgConfig::new(1.0, 1.0, 1.0, 1.0, 1.0, RunLimits::new(3, 1).with_history()).unwrap();
        let start = Start {
            y: DVector::from_vec(vec![2.0]),
            z: DVector::from_vec(vec![3.0]),
        };
        let tr = ppg_solve(&prob, &cfg, &start, &mut NoMonitor).unwrap();
        let h = tr.history.unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h[1].x[0], 3.0);
        assert_eq!(h[1].y[0], 0.0);
        assert_eq!(h[1].z[0], 0.0);
        assert_eq!(h[2].x[0], 0.0);
        assert_eq!(tr.iterations, 3);
        assert!(!tr.converged);
    }

    #[test]
    fn monitor_stops_and_is_called_on_schedule() {
        let prob = scalar_problem();
        let cfg = PpgConfig::new(1.0, 1.0, 0.5, 1.0, 0.5, RunLimits::new(100, 7)).unwrap();
        let mut seen = Vec::new();
        let mut mon = |it: &IterateView<'_, f64>| {
            seen.push(it.t);
            Ok(Some(super::super::Checkpoint {
                t: it.t,
                pobj: 0.0,
                dobj: 0.0,
                dfeas: 0.0,
                stop: it.t >= 21,
            }))
        };
        let tr = ppg_solve(&prob, &cfg, &Start::origin(1, 1), &mut mon).unwrap();
        assert_eq!(seen, vec![7, 14, 21]);
        assert!(tr.converged);
        assert_eq!(tr.iterations, 21);
        assert_eq!(tr.checkpoints.len(), 3);
    }

    #[test]
    fn start_dimension_checked() {
        let prob = scalar_problem();
        let cfg = PpgConfig::new(1.0, 1.0, 1.0, 1.0, 1.0, RunLimits::default()).unwrap();
        assert!(ppg_solve(&prob, &cfg, &Start::origin(2, 1), &mut NoMonitor).is_err());
    }
}
