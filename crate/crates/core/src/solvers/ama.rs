// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;

use super::{CompositeProblem, IterateView, Monitor, Recorder, RunLimits, SolveTrace, Start};
use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::prox::{conjugate_prox, Proximable};
use crate::scalar::{min, Scalar};
use crate::smooth::Smooth;

/// Data handed to an exact y-subproblem oracle.
#[derive(Debug)]
pub struct YSubproblem<'s, T: Scalar> {
    pub z: &'s DVector<T>,
    /// `A x^{t+1} - c`.
    pub ax_minus_c: &'s DVector<T>,
    pub y_prev: &'s DVector<T>,
    pub beta: T,
}

type ProxOracle<'a, T> = Box<dyn Fn(T, &DVector<T>) -> Result<DVector<T>> + 'a>;
type ExactOracle<'a, T> = Box<dyn Fn(&YSubproblem<'_, T>) -> Result<DVector<T>> + 'a>;
type XOracle<'a, T> = Box<dyn Fn(&DVector<T>) -> Result<DVector<T>> + 'a>;

pub enum YStep<'a, T: Scalar> {
    /// Proximal term `T = tau I - beta B* B`. `prox_g(s, v)` must return
    /// `prox_{g/s}(v)`; the update is
    /// `y+ = prox_{g/tau}(y - B*(beta (A x+ + B y - c) - z) / tau)`.
    Linearized { tau: T, prox_g: ProxOracle<'a, T> },
    /// `T = 0`: the oracle returns
    /// `argmin_y g(y) - <z, B y> + beta/2 ||A x+ + B y - c||^2`.
    Exact(ExactOracle<'a, T>),
}

/// `min f(x) + g(y)  s.t.  A x + B y = c` with `f` strongly convex.
pub struct AmaProblem<'a, T: Scalar> {
    pub a: LinearMap<T>,
    pub b: LinearMap<T>,
    pub c: DVector<T>,
    /// `a -> argmin_x f(x) - <a, x>`; called with `a = A* z`.
    pub x_step: XOracle<'a, T>,
    pub y_step: YStep<'a, T>,
    /// Lower bound on the strong-convexity modulus of `f`.
    pub strong_convexity: T,
}

impl<'a, T: Scalar> AmaProblem<'a, T> {
    fn check(&self) -> Result<()> {
        check_len("AmaProblem: A and B codomains", self.a.out_dim(), self.b.out_dim())?;
        check_len("AmaProblem: c", self.a.out_dim(), self.c.len())?;
        if !(self.strong_convexity > T::zero()) {
            return Err(Error::Config(format!(
                "strong convexity modulus must be positive, got {}",
                self.strong_convexity
            )));
        }
        if let YStep::Linearized { tau, .. } = &self.y_step {
            if !(*tau > T::zero()) {
                return Err(Error::Config(format!("tau must be positive, got {tau}")));
            }
        }
        Ok(())
    }
}

/// Supremum of `gamma` allowed by the convergence conditions for a scalar
/// strong-convexity bound `sigma_f` and `||A* A|| <= a_gram`, or `None` when
/// no admissible `mu` exists (`beta >= 2 sigma_f / a_gram`).
pub fn ama_gamma_limit<T: Scalar>(beta: T, sigma_f: T, a_gram: T) -> Option<T> {
    if !(beta > T::zero()) || !(sigma_f > T::zero()) {
        return None;
    }
    let two = T::lit(2.0);
    if a_gram <= T::zero() {
        return Some(T::lit(1.5));
    }
    let mu_bar = two * sigma_f / a_gram - beta;
    if mu_bar <= T::zero() {
        return None;
    }
    Some(T::one() + min(beta, mu_bar) / (two * beta))
}

#[derive(Clone, Copy, Debug)]
pub struct AmaConfig<T: Scalar> {
    pub beta: T,
    pub gamma: T,
    pub limits: RunLimits,
}

impl<T: Scalar> AmaConfig<T> {
    /// Checks the sufficient conditions for convergence that are decidable
    /// from scalar bounds: the gamma range and, for the linearized step,
    /// `tau >= beta ||B* B||` so the proximal term is positive semidefinite.
    pub fn check_convergence_conditions(&self, prob: &AmaProblem<'_, T>) -> Result<()> {
        let limit = ama_gamma_limit(self.beta, prob.strong_convexity, prob.a.gram_norm_bound())
            .ok_or_else(|| {
                Error::Config(format!(
                    "no mu > 0 with 2 sigma_f - (beta + mu) ||A* A|| > 0 for beta = {}",
                    self.beta
                ))
            })?;
        if !(self.gamma < limit) {
            return Err(Error::Config(format!(
                "gamma = {} must be below 1 + min(beta, mu)/(2 beta) = {limit}",
                self.gamma
            )));
        }
        if let YStep::Linearized { tau, .. } = &prob.y_step {
            let need = self.beta * prob.b.gram_norm_bound();
            if !(*tau >= need) {
                return Err(Error::Config(format!(
                    "tau = {tau} must be at least beta ||B* B|| = {need}"
                )));
            }
        }
        Ok(())
    }
}

/// Runs the proximal AMA. Only positivity of the parameters is enforced here;
/// see [`AmaConfig::check_convergence_conditions`].
pub fn proximal_ama_solve<T, Mon>(
    prob: &AmaProblem<'_, T>,
    cfg: &AmaConfig<T>,
    start: &Start<T>,
    monitor: &mut Mon,
) -> Result<SolveTrace<T>>
where
    T: Scalar,
    Mon: Monitor<T>,
{
    prob.check()?;
    cfg.limits.validate()?;
    if !(cfg.beta > T::zero() && cfg.gamma > T::zero()) {
        return Err(Error::Config(format!(
            "beta and gamma must be positive, got {} and {}",
            cfg.beta, cfg.gamma
        )));
    }
    let (x_dim, y_dim, z_dim) = (prob.a.in_dim(), prob.b.in_dim(), prob.a.out_dim());
    start.check(z_dim, y_dim)?;
    let beta = cfg.beta;
    let step = cfg.gamma * beta;

    let mut rec = Recorder::new(cfg.limits, x_dim, y_dim, start);
    let mut z = start.z.clone();
    let mut y = start.y.clone();
    let mut x = DVector::zeros(x_dim);
    let mut converged = false;

    for t in 1..=cfg.limits.max_iter {
        x = (prob.x_step)(&prob.a.adjoint(&z)?)?;
        check_len("AMA x-oracle output", x_dim, x.len())?;
        let ax_minus_c = prob.a.apply(&x)? - &prob.c;
        y = match &prob.y_step {
            YStep::Linearized { tau, prox_g } => {
                let r = &ax_minus_c + prob.b.apply(&y)?;
                let v = &y - prob.b.adjoint(&(r * beta - &z))? / *tau;
                prox_g(*tau, &v)?
            }
            YStep::Exact(oracle) => oracle(&YSubproblem {
                z: &z,
                ax_minus_c: &ax_minus_c,
                y_prev: &y,
                beta,
            })?,
        };
        check_len("AMA y-step output", y_dim, y.len())?;
        let residual = ax_minus_c + prob.b.apply(&y)?;
        z.axpy(-step, &residual, T::one());

        rec.record(&x, &y, &z);
        if rec.checkpoint(monitor, IterateView { t, z: &z, y: &y, x: &x })? {
            converged = true;
            break;
        }
    }
    Ok(rec.finish(converged, x, y, z))
}

/// The Fenchel dual of `h(z) + P(Mz - b)` cast as a proximal AMA instance:
/// `f = h*`, `g = P* + <b, .>`, `A = I`, `B = M*`, `c = 0`, with the
/// linearized proximal term `tau I - beta M M*`.
pub fn fenchel_dual_instance<'a, T, H, P>(prob: &'a CompositeProblem<T, H, P>, tau: T) -> AmaProblem<'a, T>
where
    T: Scalar,
    H: Smooth<T> + 'a,
    P: Proximable<T> + 'a,
{
    let n = prob.primal_dim();
    AmaProblem {
        a: LinearMap::identity(n),
        b: prob.map.clone().adjoint_map(),
        c: DVector::zeros(n),
        x_step: Box::new(move |a| prob.h.gradient(a)),
        y_step: YStep::Linearized {
            tau,
            prox_g: Box::new(move |s, v| conjugate_prox(&prob.p, s, &(v - &prob.offset / s))),
        },
        strong_convexity: T::one() / prob.lipschitz(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::NoMonitor;

    // f(x) = x1^2/2 + x2^2 - x1, g = 0, A = I, B = (1, 1)^T, c = (1, 2).
    // KKT by hand: y = 4/3, x = (-1/3, 2/3), z = grad f(x) = (-4/3, 4/3).
    fn quadratic_problem<'a>() -> AmaProblem<'a, f64> {
        let bmat = nalgebra::DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        AmaProblem {
            a: LinearMap::identity(2),
            b: LinearMap::dense(bmat).unwrap(),
            c: DVector::from_vec(vec![1.0, 2.0]),
            x_step: Box::new(|a: &DVector<f64>| Ok(DVector::from_vec(vec![1.0 + a[0], a[1] / 2.0]))),
            y_step: YStep::Exact(Box::new(|s: &YSubproblem<'_, f64>| {
                let num = s.z[0] + s.z[1] - s.beta * (s.ax_minus_c[0] + s.ax_minus_c[1]);
                Ok(DVector::from_vec(vec![num / (2.0 * s.beta)]))
            })),
            strong_convexity: 1.0,
        }
    }

    #[test]
    fn quadratic_kkt_solution() {
        let prob = quadratic_problem();
        let cfg = AmaConfig {
            beta: 1.0,
            gamma: 1.0,
            limits: RunLimits::new(500, 1),
        };
        cfg.check_convergence_conditions(&prob).unwrap();
        let tr = proximal_ama_solve(&prob, &cfg, &Start::origin(2, 1), &mut NoMonitor).unwrap();
        assert!((tr.y[0] - 4.0 / 3.0).abs() < 1e-10, "{}", tr.y);
        assert!((tr.x[0] + 1.0 / 3.0).abs() < 1e-10);
        assert!((tr.x[1] - 2.0 / 3.0).abs() < 1e-10);
        assert!((tr.z[0] + 4.0 / 3.0).abs() < 1e-10);
        assert!((tr.z[1] - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn stationary_at_kkt_point() {
        let prob = quadratic_problem();
        let cfg = AmaConfig {
            beta: 0.7,
            gamma: 1.2,
            limits: RunLimits::new(20, 1).with_history(),
        };
        let start = Start {
            y: DVector::from_vec(vec![4.0 / 3.0]),
            z: DVector::from_vec(vec![-4.0 / 3.0, 4.0 / 3.0]),
        };
        let tr = proximal_ama_solve(&prob, &cfg, &start, &mut NoMonitor).unwrap();
        for s in tr.history.unwrap().iter().skip(1) {
            assert!((&s.z - &start.z).norm() < 1e-12);
            assert!((&s.y - &start.y).norm() < 1e-12);
        }
    }

    #[test]
    fn gamma_limit() {
        assert_eq!(ama_gamma_limit(1.0, 1.0, 1.0), Some(1.5));
        assert_eq!(ama_gamma_limit(1.5, 1.0, 1.0), Some(1.0 + 0.5 / 3.0));
        assert_eq!(ama_gamma_limit(2.0, 1.0, 1.0), None);
        let prob = quadratic_problem();
        let cfg = AmaConfig {
            beta: 1.0,
            gamma: 1.5,
            limits: RunLimits::default(),
        };
        assert!(cfg.check_convergence_conditions(&prob).is_err());
    }
}
