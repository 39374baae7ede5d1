// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;

use super::{CompositeProblem, IterateView, Monitor, Recorder, RunLimits, SolveTrace, Start};
use crate::error::{Error, Result};
use crate::prox::Proximable;
use crate::scalar::Scalar;
use crate::smooth::Smooth;

/// Proximal gradient with step `1/L`; only for `M = I`.
///
/// `z+ = b + prox_{P/L}(z - grad h(z)/L - b)`. The reported dual iterate is
/// `y+ = L (z - z+) - grad h(z)`, which makes `x+ + y+ = 0` at a fixed point.
/// `F(z^t)` is recorded in [`SolveTrace::objective`] after every step.
pub fn proximal_gradient_solve<T, H, P, Mon>(
    prob: &CompositeProblem<T, H, P>,
    limits: RunLimits,
    start: &Start<T>,
    monitor: &mut Mon,
) -> Result<SolveTrace<T>>
where
    T: Scalar,
    H: Smooth<T>,
    P: Proximable<T>,
    Mon: Monitor<T>,
{
    if !prob.map.is_identity() {
        return Err(Error::Unsupported(
            "proximal gradient requires the identity linear map".into(),
        ));
    }
    limits.validate()?;
    let l = prob.lipschitz();
    if !(l > T::zero()) {
        return Err(Error::Config(format!("L must be positive, got {l}")));
    }
    let n = prob.primal_dim();
    start.check(n, n)?;
    let step = T::one() / l;

    let mut rec = Recorder::new(limits, n, n, start);
    let mut z = start.z.clone();
    let mut y = start.y.clone();
    let mut x = DVector::zeros(n);
    let mut objective = Vec::new();
    let mut converged = false;

    for t in 1..=limits.max_iter {
        let grad = prob.h.gradient(&z)?;
        let arg = &z - &grad * step - &prob.offset;
        let z_next = prob.p.prox(step, &arg)? + &prob.offset;
        y = (&z - &z_next) * l - &grad;
        z = z_next;
        x = grad;
        objective.push(prob.objective(&z)?);

        rec.record(&x, &y, &z);
        if rec.checkpoint(monitor, IterateView { t, z: &z, y: &y, x: &x })? {
            converged = true;
            break;
        }
    }
    let mut trace = rec.finish(converged, x, y, z);
    trace.objective = objective;
    Ok(trace)
}
