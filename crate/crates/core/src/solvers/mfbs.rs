// SPDX-License-Identifier: Apache-2.0

use super::{CompositeProblem, IterateView, Monitor, Recorder, RunLimits, SolveTrace, Start};
use crate::error::{Error, Result};
use crate::prox::{conjugate_prox, Proximable};
use crate::scalar::Scalar;
use crate::smooth::Smooth;

/// Tseng's modified forward-backward splitting on the saddle-point form
/// `min_z max_y h(z) + <y, Mz - b> - P*(y)`.
#[derive(Clone, Copy, Debug)]
pub struct MfbsConfig<T: Scalar> {
    sigma: T,
    lm: T,
    pub limits: RunLimits,
}

impl<T: Scalar> MfbsConfig<T> {
    /// `sigma` in `(0, 1)`; `lm` bounds the Lipschitz modulus of
    /// `(z, y) -> (grad h(z) + M* y, b - M z)`.
    pub fn new(sigma: T, lm: T, limits: RunLimits) -> Result<Self> {
        limits.validate()?;
        if !(sigma > T::zero() && sigma < T::one()) {
            return Err(Error::Config(format!("sigma = {sigma} must lie in (0, 1)")));
        }
        if !(lm > T::zero()) {
            return Err(Error::Config(format!("L_M = {lm} must be positive")));
        }
        Ok(Self { sigma, lm, limits })
    }

    /// `(L + sqrt(L^2 + 4 ||M* M||)) / 2`.
    pub fn lipschitz_bound(lipschitz: T, gram_bound: T) -> T {
        let four = T::lit(4.0);
        (lipschitz + (lipschitz * lipschitz + four * gram_bound).sqrt()) / T::lit(2.0)
    }

    /// `sigma = 0.95` with [`Self::lipschitz_bound`].
    pub fn for_problem(lipschitz: T, gram_bound: T, limits: RunLimits) -> Result<Self> {
        Self::new(T::lit(0.95), Self::lipschitz_bound(lipschitz, gram_bound), limits)
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn lm(&self) -> T {
        self.lm
    }
}

/// Runs MFBS. The monitor, the recorded history and the final `(z, y, x)`
/// use `(u^t, v^t, grad h(u^t))`; `aux` holds the last `(z, y)` pair.
pub fn mfbs_solve<T, H, P, Mon>(
    prob: &CompositeProblem<T, H, P>,
    cfg: &MfbsConfig<T>,
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
    let s = cfg.sigma / cfg.lm;
    let tau = cfg.lm / cfg.sigma;

    let mut rec = Recorder::new(cfg.limits, n, m, start);
    let mut z = start.z.clone();
    let mut y = start.y.clone();
    let mut u = z.clone();
    let mut v = y.clone();
    let mut grad_z = prob.h.gradient(&z)?;
    let mut grad_u = grad_z.clone();
    let mut mz = prob.map.apply(&z)?;
    let mut mty = prob.map.adjoint(&y)?;
    let mut converged = false;

    for t in 1..=cfg.limits.max_iter {
        let arg = &y + (&mz - &prob.offset) * s;
        v = conjugate_prox(&prob.p, tau, &arg)?;
        u = &z - (&grad_z + &mty) * s;
        let mu = prob.map.apply(&u)?;
        grad_u = prob.h.gradient(&u)?;
        let mtv = prob.map.adjoint(&v)?;
        y = &v - (&mz - &mu) * s;
        z = &u - (&grad_u + &mtv - &grad_z - &mty) * s;

        grad_z = prob.h.gradient(&z)?;
        mz = prob.map.apply(&z)?;
        mty = prob.map.adjoint(&y)?;

        rec.record(&grad_u, &v, &u);
        if rec.checkpoint(monitor, IterateView { t, z: &u, y: &v, x: &grad_u })? {
            converged = true;
            break;
        }
    }
    let mut trace = rec.finish(converged, grad_u, v, u);
    trace.aux = Some((z, y));
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_checks() {
        let lim = RunLimits::default();
        assert!(MfbsConfig::new(1.0, 1.0, lim).is_err());
        assert!(MfbsConfig::new(0.0, 1.0, lim).is_err());
        assert!(MfbsConfig::new(0.5, 0.0, lim).is_err());
        assert!(MfbsConfig::new(0.5, 2.0, lim).is_ok());
    }

    #[test]
    fn lipschitz_bounds() {
        // system realization: L = 1, ||M* M|| = min(j, k)
        let lm = MfbsConfig::<f64>::lipschitz_bound(1.0, 21.0);
        assert!((lm - 0.5 * (1.0 + (1.0f64 + 84.0).sqrt())).abs() < 1e-14);
        // fused lasso: L = lambda_max / 4, ||M* M|| = 5
        let lmax = 37.5;
        let lm = MfbsConfig::<f64>::lipschitz_bound(0.25 * lmax, 5.0);
        let expect = 0.5 * (0.25 * lmax + ((0.25f64 * lmax).powi(2) + 20.0).sqrt());
        assert!((lm - expect).abs() < 1e-14);
    }
}
