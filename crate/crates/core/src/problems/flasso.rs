// SPDX-License-Identifier: Apache-2.0

//! Fused-lasso logistic regression:
//! `min l(Az) + lambda1 sum_{i<n} |z_i| + lambda2 sum_{i<n-1} |z_{i+1} - z_i|`.

use nalgebra::{DMatrix, DVector, SVD};
use rand::Rng;

use super::rng::{gaussian, gaussian_matrix, instance_rng};
use super::sysreal::termination_measure;
use super::ProblemInstance;
use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::prox::WeightedL1;
use crate::scalar::{max, Scalar};
use crate::smooth::{logistic_dual_value, Logistic};
use crate::solvers::{Checkpoint, CompositeProblem, IterateView, Monitor};

/// Singular values below this multiple of the largest are dropped in the
/// pseudoinverse.
pub const PINV_RTOL: f64 = 1e-12;

/// Rounding slack tolerated when the second-branch dual candidate leaves
/// `[0, 1]`; such entries are clipped.
pub const DUAL_BOX_SLACK: f64 = 1e-9;

/// Draws beyond this many label-degenerate retries are treated as a failure.
const MAX_REDRAWS: u64 = 1000;

#[derive(Clone, Debug)]
pub struct FusedLassoInstance<T: Scalar> {
    /// Rows `(-b_i a_i^T, -b_i)`.
    pub a: DMatrix<T>,
    pub labels: DVector<T>,
    pub lambda1: T,
    pub lambda2: T,
    /// `(A^T)^+`, `m x n`.
    pub pinv_at: DMatrix<T>,
    pub seed: u64,
}

/// `(A^T)^+ = U S^+ V^T` from the thin SVD `A = U S V^T`.
pub fn pinv_transpose<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let max_iter = 1000 * a.nrows().max(a.ncols());
    let svd = SVD::try_new(a.clone(), true, true, T::default_epsilon(), max_iter).ok_or_else(|| {
        Error::Numerical {
            message: "SVD did not converge while forming the pseudoinverse".into(),
            last_estimate: f64::NAN,
        }
    })?;
    let smax = svd.singular_values.iter().fold(T::zero(), |acc, s| max(acc, *s));
    let cut = T::lit(PINV_RTOL) * smax;
    let inv = svd.singular_values.map(|s| if s > cut { T::one() / s } else { T::zero() });
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        unreachable!("both singular bases were requested")
    };
    let mut scaled = u;
    for (j, w) in inv.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    Ok(scaled * v_t)
}

impl<T: Scalar> FusedLassoInstance<T> {
    /// Builds `A = [C', -b]` with `C'_{ij} = -b_i C_{ij}` from samples `C`
    /// (`m x (n-1)`) and labels in `{-1, 1}`.
    pub fn from_samples(samples: &DMatrix<T>, labels: DVector<T>, lambda1: T, lambda2: T, seed: u64) -> Result<Self> {
        check_len("FusedLassoInstance labels", samples.nrows(), labels.len())?;
        if samples.ncols() < 2 {
            return Err(Error::Config("fused lasso needs n >= 3".into()));
        }
        if labels.iter().any(|b| *b != T::one() && *b != -T::one()) {
            return Err(Error::Domain("labels must be +1 or -1".into()));
        }
        if labels.iter().all(|b| *b == labels[0]) {
            return Err(Error::Precondition("labels must not all be equal".into()));
        }
        if !(lambda1 > T::zero() && lambda2 > T::zero()) {
            return Err(Error::Domain(format!(
                "lambda1 = {lambda1} and lambda2 = {lambda2} must be positive"
            )));
        }
        let (m, nm1) = samples.shape();
        let a = DMatrix::from_fn(m, nm1 + 1, |i, j| {
            if j < nm1 {
                -labels[i] * samples[(i, j)]
            } else {
                -labels[i]
            }
        });
        Self::from_matrix(a, labels, lambda1, lambda2, seed)
    }

    /// Uses a prebuilt `A`; only the pseudoinverse is computed.
    pub fn from_matrix(a: DMatrix<T>, labels: DVector<T>, lambda1: T, lambda2: T, seed: u64) -> Result<Self> {
        check_len("FusedLassoInstance labels", a.nrows(), labels.len())?;
        let pinv_at = pinv_transpose(&a)?;
        Ok(Self {
            a,
            labels,
            lambda1,
            lambda2,
            pinv_at,
            seed,
        })
    }

    pub fn samples(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }
}

/// Draws a random instance with `lambda1 = alpha m`, `lambda2 = 100 lambda1`.
///
/// Order of draws: `C` (column-major), `xi_1..xi_4`, `xi_5`. If all labels
/// come out equal the draw is repeated on the next stream.
pub fn gen_fusedlasso<T: Scalar>(m: usize, n: usize, alpha: f64, seed: u64) -> Result<FusedLassoInstance<T>> {
    if n <= 125 {
        return Err(Error::Precondition(format!("n = {n} must exceed 125")));
    }
    if m == 0 || m >= n {
        return Err(Error::Precondition(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let lambda1 = alpha * m as f64;
    for stream in 0..MAX_REDRAWS {
        let mut rng = instance_rng(seed, stream);
        let mut c = gaussian_matrix(&mut rng, m, n - 1);
        for mut col in c.column_iter_mut() {
            let nrm = col.norm();
            if nrm > 0.0 {
                col /= nrm;
            }
        }
        let xi: [f64; 4] = std::array::from_fn(|_| gaussian(&mut rng));
        let xi5: f64 = rng.random_range(0.0..=1.0);
        let mut xhat = DVector::<f64>::zeros(n - 1);
        for i in 0..20 {
            xhat[i] = 20.0 * xi[0];
        }
        xhat[40] = 30.0 * xi[1];
        for i in 70..85 {
            xhat[i] = 10.0 * xi[2];
        }
        for i in 120..125 {
            xhat[i] = 20.0 * xi[3];
        }
        let score = &c * &xhat;
        let labels = score.map(|s| if s + xi5 >= 0.0 { 1.0 } else { -1.0 });
        if labels.iter().all(|b| *b == labels[0]) {
            continue;
        }
        let c_t = c.map(T::lit);
        return FusedLassoInstance::from_samples(
            &c_t,
            labels.map(T::lit),
            T::lit(lambda1),
            T::lit(100.0 * lambda1),
            seed,
        );
    }
    Err(Error::Numerical {
        message: format!("all labels equal in {MAX_REDRAWS} draws"),
        last_estimate: f64::NAN,
    })
}

pub type FusedLassoProblem<T> = CompositeProblem<T, Logistic<T>, WeightedL1<T>>;

impl<T: Scalar> ProblemInstance<T> for FusedLassoInstance<T> {
    type H = Logistic<T>;
    type P = WeightedL1<T>;
    type Mon<'a> = FlassoMonitor<'a, T>;

    /// `h = l(Az)`, `P` weighted l1 with weights `lambda1` (n-1 times) and
    /// `lambda2` (n-2 times), `M` the fused difference stack, `b = 0`,
    /// `L = lambda_max(A^T A)/4`.
    fn build_composite(&self) -> Result<FusedLassoProblem<T>> {
        let n = self.dim();
        CompositeProblem::new(
            Logistic::new(self.a.clone())?,
            WeightedL1::two_level(n - 1, self.lambda1, n - 2, self.lambda2)?,
            LinearMap::fused_diff_stack(n)?,
            DVector::zeros(2 * n - 3),
        )
    }

    fn monitor<'a>(&'a self, prob: &'a FusedLassoProblem<T>, tol: T) -> FlassoMonitor<'a, T> {
        FlassoMonitor::new(self, prob, tol)
    }
}

/// Dual candidate: `-(A^T)^+ M^T y` when that lies in `[0, 1]^m`, otherwise
/// `(A^T)^+ x`.
pub fn flasso_dual_candidate<T: Scalar>(
    inst: &FusedLassoInstance<T>,
    mty: &DVector<T>,
    x: &DVector<T>,
) -> Result<DVector<T>> {
    check_len("flasso_dual_candidate M^T y", inst.dim(), mty.len())?;
    check_len("flasso_dual_candidate x", inst.dim(), x.len())?;
    let first = -(&inst.pinv_at * mty);
    if first.iter().all(|v| *v >= T::zero() && *v <= T::one()) {
        return Ok(first);
    }
    Ok(&inst.pinv_at * x)
}

/// Clips entries within [`DUAL_BOX_SLACK`] of `[0, 1]`; anything farther out
/// is left for [`logistic_dual_value`] to reject.
fn clip_rounding<T: Scalar>(nu: DVector<T>) -> DVector<T> {
    let slack = T::lit(DUAL_BOX_SLACK);
    nu.map(|v| {
        if v < T::zero() && v >= -slack {
            T::zero()
        } else if v > T::one() && v <= T::one() + slack {
            T::one()
        } else {
            v
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlassoCheck<T: Scalar> {
    pub dobj: T,
    pub dfeas: T,
}

pub fn flasso_dual_check<T: Scalar>(
    inst: &FusedLassoInstance<T>,
    map: &LinearMap<T>,
    y: &DVector<T>,
    x: &DVector<T>,
) -> Result<FlassoCheck<T>> {
    let mty = map.adjoint(y)?;
    let nu = clip_rounding(flasso_dual_candidate(inst, &mty, x)?);
    let dobj = logistic_dual_value(&nu)?;
    let atnu = inst.a.tr_mul(&nu);
    let denom = max(max(atnu.norm(), mty.norm()), T::one());
    Ok(FlassoCheck {
        dobj,
        dfeas: (atnu + &mty).norm() / denom,
    })
}

/// Stopping rule for fused lasso with the best primal value over checkpoints.
pub struct FlassoMonitor<'a, T: Scalar> {
    inst: &'a FusedLassoInstance<T>,
    prob: &'a FusedLassoProblem<T>,
    tol: T,
    best: Option<T>,
}

impl<'a, T: Scalar> FlassoMonitor<'a, T> {
    pub fn new(inst: &'a FusedLassoInstance<T>, prob: &'a FusedLassoProblem<T>, tol: T) -> Self {
        Self {
            inst,
            prob,
            tol,
            best: None,
        }
    }
}

impl<T: Scalar> Monitor<T> for FlassoMonitor<'_, T> {
    fn check(&mut self, it: &IterateView<'_, T>) -> Result<Option<Checkpoint<T>>> {
        let p = self.prob.objective(it.z)?;
        let pobj = match self.best {
            Some(b) if b <= p => b,
            _ => p,
        };
        self.best = Some(pobj);
        let FlassoCheck { dobj, dfeas } = flasso_dual_check(self.inst, &self.prob.map, it.y, it.x)?;
        Ok(Some(Checkpoint {
            t: it.t,
            pobj,
            dobj,
            dfeas,
            stop: termination_measure(pobj, dobj, dfeas) < self.tol,
        }))
    }
}
