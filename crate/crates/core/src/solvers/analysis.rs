// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;

use super::{CompositeProblem, PpgConfig, Snapshot, SolveTrace};
use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::prox::Proximable;
use crate::scalar::{abs, max, Scalar};
use crate::smooth::Smooth;

/// A primal-dual solution `(x, y, z)` used as the limit point.
#[derive(Clone, Debug)]
pub struct Reference<T: Scalar> {
    pub x: DVector<T>,
    pub y: DVector<T>,
    pub z: DVector<T>,
}

/// `||v||_T^2 = tau ||v||^2 - beta ||M* v||^2` for `T = tau I - beta M M*`.
pub fn t_seminorm_sq<T: Scalar>(map: &LinearMap<T>, v: &DVector<T>, beta: T, tau: T) -> Result<T> {
    let mtv = map.adjoint(v)?;
    Ok(tau * v.norm_squared() - beta * mtv.norm_squared())
}

/// `(1/(gamma beta)) ||z - z_ref||^2 + ||y - y_ref||_T^2`.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_value<T: Scalar>(
    map: &LinearMap<T>,
    z: &DVector<T>,
    y: &DVector<T>,
    reference: &Reference<T>,
    gamma: T,
    beta: T,
    tau: T,
) -> Result<T> {
    check_len("lyapunov_value: z", reference.z.len(), z.len())?;
    check_len("lyapunov_value: y", reference.y.len(), y.len())?;
    let dz = (z - &reference.z).norm_squared();
    let dy = y - &reference.y;
    Ok(dz / (gamma * beta) + t_seminorm_sq(map, &dy, beta, tau)?)
}

/// Lyapunov values along a recorded PPG history, starting at `t = 0`.
pub fn lyapunov_series<T: Scalar>(
    map: &LinearMap<T>,
    history: &[Snapshot<T>],
    reference: &Reference<T>,
    cfg: &PpgConfig<T>,
) -> Result<Vec<T>> {
    history
        .iter()
        .map(|s| lyapunov_value(map, &s.z, &s.y, reference, cfg.gamma(), cfg.beta(), cfg.tau()))
        .collect()
}

/// Constants entering the ergodic complexity bounds.
///
/// They must satisfy `2 Sigma_f - (beta + mu) A* A >= delta I` and
/// `gamma + sigma <= 1 + min(beta, mu) / (2 beta)` for some `mu > 0`.
#[derive(Clone, Copy, Debug)]
pub struct ComplexityConstants<T: Scalar> {
    pub beta: T,
    pub gamma: T,
    pub sigma: T,
    pub delta: T,
    /// `||A||^2`.
    pub a_norm_sq: T,
}

impl<T: Scalar> ComplexityConstants<T> {
    /// PPG with `beta = 1/L`, `gamma = 1`: `delta = mu = 1/(2L)`,
    /// `sigma = 1/4`, `A = I`.
    pub fn unit_relaxation(lipschitz: T) -> Self {
        let two = T::lit(2.0);
        Self {
            beta: T::one() / lipschitz,
            gamma: T::one(),
            sigma: T::lit(0.25),
            delta: T::one() / (two * lipschitz),
            a_norm_sq: T::one(),
        }
    }
}

/// Measured ergodic quantities and their bounds after `n` iterations.
#[derive(Clone, Debug)]
pub struct ErgodicBound<T: Scalar> {
    pub n: usize,
    /// `||A x^N + B y^N - c||` at the ergodic averages.
    pub constraint_residual: T,
    pub constraint_bound: T,
    /// `f(x^N) + g(y^N) - f(x_ref) - g(y_ref)` when a value oracle is given.
    pub gap: Option<T>,
    pub gap_lower: T,
    pub gap_upper: T,
}

type Residual<'a, T> = &'a dyn Fn(&DVector<T>, &DVector<T>) -> Result<DVector<T>>;
type Value<'a, T> = &'a dyn Fn(&DVector<T>, &DVector<T>) -> Result<T>;

/// Evaluates the ergodic bounds for every `N = 1..history.len()-1`.
///
/// `history[0]` must hold `(y^0, z^0)`. `residual(x, y)` returns
/// `A x + B y - c`, `t_norm_sq(v)` returns `||v||_T^2` and `value(x, y)`, if
/// present, returns `f(x) + g(y)`.
pub fn ergodic_bounds<T: Scalar>(
    history: Option<&[Snapshot<T>]>,
    reference: Option<&Reference<T>>,
    consts: &ComplexityConstants<T>,
    residual: Residual<'_, T>,
    t_norm_sq: &dyn Fn(&DVector<T>) -> Result<T>,
    value: Option<Value<'_, T>>,
) -> Result<Vec<ErgodicBound<T>>> {
    let history = history.ok_or_else(|| Error::Precondition("iterate history was not recorded".into()))?;
    let reference = reference.ok_or_else(|| Error::Precondition("reference solution missing".into()))?;
    let start = history
        .first()
        .ok_or_else(|| Error::Precondition("history is empty".into()))?;
    let ComplexityConstants {
        beta,
        gamma,
        sigma,
        delta,
        a_norm_sq,
    } = *consts;
    let two = T::lit(2.0);

    let ty0 = t_norm_sq(&(&start.y - &reference.y))?;
    let r0 = (&start.z - &reference.z).norm_squared() / (gamma * beta) + ty0;
    let upper_head = start.z.norm_squared() / (gamma * beta) + ty0;
    let upper_coef = beta * a_norm_sq / (two * delta) + max(gamma - T::one(), T::zero()) / (two * sigma);
    let ref_value = match value {
        Some(v) => Some(v(&reference.x, &reference.y)?),
        None => None,
    };
    let zbar_norm = reference.z.norm();

    let mut sum_x = DVector::zeros(start.x.len());
    let mut sum_y = DVector::zeros(start.y.len());
    let mut out = Vec::with_capacity(history.len().saturating_sub(1));
    for (i, s) in history.iter().enumerate().skip(1) {
        sum_x += &s.x;
        sum_y += &s.y;
        let nf = T::lit(i as f64);
        let xa = &sum_x / nf;
        let ya = &sum_y / nf;
        let constraint_bound = (r0 / (nf * sigma * beta)).sqrt();
        let gap = match (value, ref_value) {
            (Some(v), Some(r)) => Some(v(&xa, &ya)? - r),
            _ => None,
        };
        out.push(ErgodicBound {
            n: i,
            constraint_residual: residual(&xa, &ya)?.norm(),
            constraint_bound,
            gap,
            gap_lower: -zbar_norm * constraint_bound,
            gap_upper: upper_head / (two * nf) + upper_coef * r0 / nf,
        });
    }
    Ok(out)
}

/// Ergodic bounds for a PPG run with `beta = 1/L`, `tau = beta ||M* M||`,
/// `gamma = 1`. The residual is `x^N + M* y^N`; `value(x, y)`, if given,
/// should return `h*(x) + P*(y) + <b, y>`.
pub fn ppg_ergodic_bounds<T, H, P>(
    prob: &CompositeProblem<T, H, P>,
    cfg: &PpgConfig<T>,
    trace: &SolveTrace<T>,
    reference: Option<&Reference<T>>,
    value: Option<Value<'_, T>>,
) -> Result<Vec<ErgodicBound<T>>>
where
    T: Scalar,
    H: Smooth<T>,
    P: Proximable<T>,
{
    let l = prob.lipschitz();
    let tol = T::lit(1e-12);
    let beta_ok = abs(cfg.beta() * l - T::one()) <= tol;
    let tau_ok = abs(cfg.tau() - cfg.beta() * prob.gram_bound()) <= tol * cfg.tau();
    if !(beta_ok && tau_ok && cfg.gamma() == T::one()) {
        return Err(Error::Precondition(
            "bounds require beta = 1/L, tau = beta ||M* M|| and gamma = 1".into(),
        ));
    }
    let consts = ComplexityConstants::unit_relaxation(l);
    let map = &prob.map;
    let residual = |x: &DVector<T>, y: &DVector<T>| Ok(x + map.adjoint(y)?);
    let (beta, tau) = (cfg.beta(), cfg.tau());
    let tn = |v: &DVector<T>| t_seminorm_sq(map, v, beta, tau);
    ergodic_bounds(trace.history.as_deref(), reference, &consts, &residual, &tn, value)
}
