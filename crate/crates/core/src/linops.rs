// SPDX-License-Identifier: Apache-2.0

//! Linear maps `M: Z -> Y` between flat coordinate spaces.
//!
//! Every point is a `DVector`. Matrix-valued spaces (the Hankel domain and
//! codomain) are stored column-major, so the trace inner product of two
//! matrices is the plain dot product of their flattened vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::scalar::{abs, Scalar};

const POWER_ITERATION_CAP: usize = 10_000;
const DENSE_GRAM_TOL: f64 = 1e-10;

/// Block layout of a block Hankel operator.
///
/// The domain is `m x n(j+k-1)` (blocks `z_0 .. z_{j+k-2}`, each `m x n`),
/// the codomain is `mj x nk` with block `(p, q)` equal to `z_{p+q}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HankelShape {
    pub m: usize,
    pub n: usize,
    pub j: usize,
    pub k: usize,
}

impl HankelShape {
    pub fn new(m: usize, n: usize, j: usize, k: usize) -> Result<Self> {
        if m == 0 || n == 0 || j == 0 || k == 0 {
            return Err(Error::Config(format!(
                "hankel dimensions must be positive, got m={m} n={n} j={j} k={k}"
            )));
        }
        Ok(Self { m, n, j, k })
    }

    pub fn num_blocks(&self) -> usize {
        self.j + self.k - 1
    }

    /// `(rows, cols)` of the measurement matrix `z`.
    pub fn domain_shape(&self) -> (usize, usize) {
        (self.m, self.n * self.num_blocks())
    }

    /// `(rows, cols)` of the Hankel matrix `H(z)`.
    pub fn codomain_shape(&self) -> (usize, usize) {
        (self.m * self.j, self.n * self.k)
    }

    pub fn domain_len(&self) -> usize {
        self.m * self.n * self.num_blocks()
    }

    pub fn codomain_len(&self) -> usize {
        self.m * self.j * self.n * self.k
    }
}

/// A dense matrix together with a certified bound on `||A^T A||`.
#[derive(Clone, Debug)]
pub struct DenseMap<T: Scalar> {
    matrix: DMatrix<T>,
    gram_bound: T,
}

impl<T: Scalar> DenseMap<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    Identity,
    Dense,
    Hankel,
    FusedDiffStack,
    Replication,
    Adjoint,
}

/// The linear maps used by the solvers and the two benchmark problems.
#[derive(Clone, Debug)]
pub enum LinearMap<T: Scalar> {
    Identity { dim: usize },
    Dense(DenseMap<T>),
    Hankel(HankelShape),
    /// `z in R^n -> (z_1..z_{n-1}, z_1-z_2, .., z_{n-2}-z_{n-1}) in R^{2n-3}`.
    /// The last coordinate of `z` (the intercept) is not penalized.
    FusedDiffStack { n: usize },
    /// `z -> (z, z, .., z)` with `copies` blocks.
    Replication { dim: usize, copies: usize },
    /// The adjoint of the wrapped map, used where a solver needs `M*` as a
    /// map in its own right.
    Adjoint(Box<LinearMap<T>>),
}

impl<T: Scalar> LinearMap<T> {
    pub fn identity(dim: usize) -> Self {
        LinearMap::Identity { dim }
    }

    /// Wraps a dense matrix; `||A^T A||` is computed once by power iteration
    /// and inflated by the relative tolerance so it stays an upper bound.
    pub fn dense(matrix: DMatrix<T>) -> Result<Self> {
        let lam = if matrix.nrows() <= matrix.ncols() {
            let aat = &matrix * matrix.transpose();
            max_eigenvalue_dense(&aat, T::lit(DENSE_GRAM_TOL))?
        } else {
            let ata = matrix.transpose() * &matrix;
            max_eigenvalue_dense(&ata, T::lit(DENSE_GRAM_TOL))?
        };
        let gram_bound = lam * (T::one() + T::lit(DENSE_GRAM_TOL));
        Ok(LinearMap::Dense(DenseMap { matrix, gram_bound }))
    }

    pub fn hankel(shape: HankelShape) -> Self {
        LinearMap::Hankel(shape)
    }

    pub fn fused_diff_stack(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!(
                "fused difference stack needs n >= 3, got {n}"
            )));
        }
        Ok(LinearMap::FusedDiffStack { n })
    }

    pub fn replication(dim: usize, copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::Config("replication needs at least one copy".into()));
        }
        Ok(LinearMap::Replication { dim, copies })
    }

    pub fn adjoint_map(self) -> Self {
        match self {
            LinearMap::Adjoint(inner) => *inner,
            other => LinearMap::Adjoint(Box::new(other)),
        }
    }

    pub fn kind(&self) -> MapKind {
        match self {
            LinearMap::Identity { .. } => MapKind::Identity,
            LinearMap::Dense(_) => MapKind::Dense,
            LinearMap::Hankel(_) => MapKind::Hankel,
            LinearMap::FusedDiffStack { .. } => MapKind::FusedDiffStack,
            LinearMap::Replication { .. } => MapKind::Replication,
            LinearMap::Adjoint(_) => MapKind::Adjoint,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, LinearMap::Identity { .. })
    }

    pub fn in_dim(&self) -> usize {
        match self {
            LinearMap::Identity { dim } => *dim,
            LinearMap::Dense(d) => d.matrix.ncols(),
            LinearMap::Hankel(s) => s.domain_len(),
            LinearMap::FusedDiffStack { n } => *n,
            LinearMap::Replication { dim, .. } => *dim,
            LinearMap::Adjoint(inner) => inner.out_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            LinearMap::Identity { dim } => *dim,
            LinearMap::Dense(d) => d.matrix.nrows(),
            LinearMap::Hankel(s) => s.codomain_len(),
            LinearMap::FusedDiffStack { n } => 2 * n - 3,
            LinearMap::Replication { dim, copies } => dim * copies,
            LinearMap::Adjoint(inner) => inner.in_dim(),
        }
    }

    /// `Mz`.
    pub fn apply(&self, z: &DVector<T>) -> Result<DVector<T>> {
        check_len("LinearMap::apply", self.in_dim(), z.len())?;
        Ok(match self {
            LinearMap::Identity { .. } => z.clone(),
            LinearMap::Dense(d) => &d.matrix * z,
            LinearMap::Hankel(s) => hankel_apply(s, z),
            LinearMap::FusedDiffStack { n } => fused_apply(*n, z),
            LinearMap::Replication { dim, copies } => {
                let mut out = DVector::zeros(dim * copies);
                for c in 0..*copies {
                    out.rows_mut(c * dim, *dim).copy_from(z);
                }
                out
            }
            LinearMap::Adjoint(inner) => inner.adjoint(z)?,
        })
    }

    /// `M* y`.
    pub fn adjoint(&self, y: &DVector<T>) -> Result<DVector<T>> {
        check_len("LinearMap::adjoint", self.out_dim(), y.len())?;
        Ok(match self {
            LinearMap::Identity { .. } => y.clone(),
            LinearMap::Dense(d) => d.matrix.tr_mul(y),
            LinearMap::Hankel(s) => hankel_adjoint(s, y),
            LinearMap::FusedDiffStack { n } => fused_adjoint(*n, y),
            LinearMap::Replication { dim, copies } => {
                let mut out = DVector::zeros(*dim);
                for c in 0..*copies {
                    out += y.rows(c * dim, *dim);
                }
                out
            }
            LinearMap::Adjoint(inner) => inner.apply(y)?,
        })
    }

    /// Certified upper bound on `||M* M||`.
    pub fn gram_norm_bound(&self) -> T {
        match self {
            LinearMap::Identity { .. } => T::one(),
            LinearMap::Dense(d) => d.gram_bound,
            LinearMap::Hankel(s) => T::lit(s.j.min(s.k) as f64),
            LinearMap::FusedDiffStack { .. } => T::lit(5.0),
            LinearMap::Replication { copies, .. } => T::lit(*copies as f64),
            // ||M M*|| = ||M* M||
            LinearMap::Adjoint(inner) => inner.gram_norm_bound(),
        }
    }

    /// `lambda_max(M* M)` by power iteration on the implicit Gram operator.
    pub fn gram_max_eigenvalue(&self, tol: T) -> Result<T> {
        max_eigenvalue(
            |v: &DVector<T>| {
                let mv = self.apply(v).expect("power iterate has domain shape");
                self.adjoint(&mv).expect("image has codomain shape")
            },
            self.in_dim(),
            tol,
        )
    }

    /// Materializes `M` column by column. Only meant for small maps.
    pub fn densify(&self) -> DMatrix<T> {
        let (rows, cols) = (self.out_dim(), self.in_dim());
        let mut out = DMatrix::zeros(rows, cols);
        let mut e = DVector::zeros(cols);
        for c in 0..cols {
            e[c] = T::one();
            let col = self.apply(&e).expect("basis vector has domain shape");
            out.set_column(c, &col);
            e[c] = T::zero();
        }
        out
    }
}

fn hankel_apply<T: Scalar>(s: &HankelShape, z: &DVector<T>) -> DVector<T> {
    let (m, n, j, k) = (s.m, s.n, s.j, s.k);
    let out_rows = m * j;
    let mut out = DVector::zeros(s.codomain_len());
    let zs = z.as_slice();
    let os = out.as_mut_slice();
    for q in 0..k {
        for c in 0..n {
            let out_col = (q * n + c) * out_rows;
            for p in 0..j {
                let src = ((p + q) * n + c) * m;
                let dst = out_col + p * m;
                os[dst..dst + m].copy_from_slice(&zs[src..src + m]);
            }
        }
    }
    out
}

fn hankel_adjoint<T: Scalar>(s: &HankelShape, y: &DVector<T>) -> DVector<T> {
    let (m, n, j, k) = (s.m, s.n, s.j, s.k);
    let in_rows = m * j;
    let mut out = DVector::zeros(s.domain_len());
    let ys = y.as_slice();
    let os = out.as_mut_slice();
    for q in 0..k {
        for c in 0..n {
            let in_col = (q * n + c) * in_rows;
            for p in 0..j {
                let dst = ((p + q) * n + c) * m;
                let src = in_col + p * m;
                for r in 0..m {
                    os[dst + r] += ys[src + r];
                }
            }
        }
    }
    out
}

fn fused_apply<T: Scalar>(n: usize, z: &DVector<T>) -> DVector<T> {
    let mut out = DVector::zeros(2 * n - 3);
    for i in 0..n - 1 {
        out[i] = z[i];
    }
    for i in 0..n - 2 {
        out[n - 1 + i] = z[i] - z[i + 1];
    }
    out
}

fn fused_adjoint<T: Scalar>(n: usize, y: &DVector<T>) -> DVector<T> {
    let mut out = DVector::zeros(n);
    for i in 0..n - 1 {
        out[i] = y[i];
    }
    for i in 0..n - 2 {
        let d = y[n - 1 + i];
        out[i] += d;
        out[i + 1] -= d;
    }
    out
}

/// Deterministic power-iteration start: all ones with a small non-symmetric
/// tilt so it is never orthogonal to an eigenvector of a reversal-symmetric
/// operator.
fn power_start<T: Scalar>(dim: usize) -> DVector<T> {
    let v = DVector::from_fn(dim, |i, _| T::lit(1.0 + 0.1 * (i % 7) as f64));
    let norm = v.norm();
    v / norm
}

/// Largest eigenvalue of a symmetric positive semidefinite operator given by
/// its action. Stops when the Rayleigh quotient changes by less than `tol`
/// relative; fails after 10000 iterations with the last estimate attached.
pub fn max_eigenvalue<T, F>(mut apply: F, dim: usize, tol: T) -> Result<T>
where
    T: Scalar,
    F: FnMut(&DVector<T>) -> DVector<T>,
{
    if tol <= T::zero() {
        return Err(Error::Domain("power iteration tolerance must be positive".into()));
    }
    if dim == 0 {
        return Ok(T::zero());
    }
    let mut v = power_start::<T>(dim);
    let mut prev: Option<T> = None;
    let mut lam = T::zero();
    for _ in 0..POWER_ITERATION_CAP {
        let w = apply(&v);
        check_len("max_eigenvalue", dim, w.len())?;
        lam = v.dot(&w);
        let wn = w.norm();
        if wn == T::zero() {
            return Ok(T::zero());
        }
        if let Some(p) = prev {
            if abs(lam - p) <= tol * abs(lam) {
                return Ok(lam);
            }
        }
        prev = Some(lam);
        v = w / wn;
    }
    Err(Error::Numerical {
        message: format!("power iteration did not converge in {POWER_ITERATION_CAP} iterations"),
        last_estimate: lam.as_f64(),
    })
}

/// [`max_eigenvalue`] of an explicit square symmetric PSD matrix.
pub fn max_eigenvalue_dense<T: Scalar>(a: &DMatrix<T>, tol: T) -> Result<T> {
    check_len("max_eigenvalue_dense", a.nrows(), a.ncols())?;
    max_eigenvalue(|v: &DVector<T>| a * v, a.nrows(), tol)
}
