// SPDX-License-Identifier: Apache-2.0

use super::{CompositeProblem, IterateView, Monitor, Recorder, RunLimits, SolveTrace, Start};
use crate::error::{Error, Result};
use crate::prox::{conjugate_prox, Proximable};
use crate::scalar::Scalar;
use crate::smooth::Smooth;

/// Condat's primal-dual splitting with exact prox and a constant relaxation.
#[derive(Clone, Copy, Debug)]
pub struct CondatConfig<T: Scalar> {
    beta: T,
    tau: T,
    gamma: T,
    pub limits: RunLimits,
}

impl<T: Scalar> CondatConfig<T> {
    /// Requires `1/beta - ||M* M||/tau >= L/2` and
    /// `0 < gamma < 2 - (L/2) / (1/beta - ||M* M||/tau)`.
    pub fn new(lipschitz: T, gram_bound: T, beta: T, tau: T, gamma: T, limits: RunLimits) -> Result<Self> {
        limits.validate()?;
        if !(beta > T::zero() && tau > T::zero()) {
            return Err(Error::Config(format!(
                "beta = {beta} and tau = {tau} must be positive"
            )));
        }
        let half_l = lipschitz / T::lit(2.0);
        let lhs = T::one() / beta - gram_bound / tau;
        if !(lhs >= half_l) {
            return Err(Error::Config(format!(
                "1/beta - ||M* M||/tau >= L/2 violated: {lhs} < {half_l}"
            )));
        }
        let limit = T::lit(2.0) - half_l / lhs;
        if !(gamma > T::zero() && gamma < limit) {
            return Err(Error::Config(format!(
                "0 < gamma < 2 - (L/2)/(1/beta - ||M* M||/tau) violated: gamma = {gamma}, bound = {limit}"
            )));
        }
        Ok(Self {
            beta,
            tau,
            gamma,
            limits,
        })
    }

    /// `beta = 1/L`, `tau = 4 beta ||M* M||`, `gamma = 1`.
    pub fn for_problem(lipschitz: T, gram_bound: T, limits: RunLimits) -> Result<Self> {
        if !(lipschitz > T::zero()) {
            return Err(Error::Config(format!("L must be positive, got {lipschitz}")));
        }
        let beta = T::one() / lipschitz;
        Self::new(lipschitz, gram_bound, beta, T::lit(4.0) * beta * gram_bound, T::one(), limits)
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }
}

/// Each iteration:
///
/// ```text
/// z' = z - beta (grad h(z) + M* y)
/// y' = prox_{P*/tau}(y - (2 beta M M* y - M z + 2 beta M grad h(z) + b) / tau)
/// (z, y) <- gamma (z', y') + (1 - gamma) (z, y)
/// ```
pub fn condat_solve<T, H, P, Mon>(
    prob: &CompositeProblem<T, H, P>,
    cfg: &CondatConfig<T>,
    start: &Start<T>,
    monitor: &mut Mon,
) -> Result<SolveTrace<T>>
where
    T: Scalar,
    H: Smooth<T>,
    P: Proximable<T>,
    Mon: Monitor<T>,
{
    let (n, m) = (prob.primal_dim(), prob.dual_dim());
    start.check(n, m)?;
    let (beta, tau, gamma) = (cfg.beta, cfg.tau, cfg.gamma);
    let two = T::lit(2.0);
    let keep = T::one() - gamma;

    let mut rec = Recorder::new(cfg.limits, n, m, start);
    let mut z = start.z.clone();
    let mut y = start.y.clone();
    let mut x = nalgebra::DVector::zeros(n);
    let mut mty = prob.map.adjoint(&y)?;
    let mut converged = false;

    for t in 1..=cfg.limits.max_iter {
        let grad = prob.h.gradient(&z)?;
        let dir = &grad + &mty;
        let z_half = &z - &dir * beta;
        let w = &z - &dir * (two * beta);
        let mut arg = prob.map.apply(&w)?;
        arg.axpy(tau, &y, T::one());
        arg -= &prob.offset;
        arg /= tau;
        let y_half = conjugate_prox(&prob.p, tau, &arg)?;

        z = z_half * gamma + &z * keep;
        y = y_half * gamma + &y * keep;
        mty = prob.map.adjoint(&y)?;
        x = grad;

        rec.record(&x, &y, &z);
        if rec.checkpoint(monitor, IterateView { t, z: &z, y: &y, x: &x })? {
            converged = true;
            break;
        }
    }
    Ok(rec.finish(converged, x, y, z))
}
