// SPDX-License-Identifier: Apache-2.0

//! Smooth convex losses `h` with Lipschitz gradients, plus the two dual
//! objectives the benchmark problems need.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linops::max_eigenvalue;
use crate::scalar::Scalar;

/// Relative tolerance for `lambda_max(A^T A)`; the estimate is inflated by
/// the same factor so the Lipschitz constant never comes out low.
pub const LIPSCHITZ_EIG_TOL: f64 = 1e-10;

pub trait Smooth<T: Scalar> {
    fn dim(&self) -> usize;

    fn value(&self, z: &DVector<T>) -> Result<T>;

    fn gradient(&self, z: &DVector<T>) -> Result<DVector<T>>;

    fn eval(&self, z: &DVector<T>) -> Result<(T, DVector<T>)> {
        Ok((self.value(z)?, self.gradient(z)?))
    }

    /// Upper bound on the Lipschitz modulus of the gradient.
    fn lipschitz(&self) -> T;
}

/// `1/2 ||w o (z - data)||^2` with a 0/1 mask `w`.
#[derive(Clone, Debug)]
pub struct MaskedQuadratic<T: Scalar> {
    mask: DVector<T>,
    data: DVector<T>,
}

impl<T: Scalar> MaskedQuadratic<T> {
    pub fn new(mask: DVector<T>, data: DVector<T>) -> Result<Self> {
        check_len("MaskedQuadratic", mask.len(), data.len())?;
        if let Some(w) = mask.iter().find(|w| **w != T::zero() && **w != T::one()) {
            return Err(Error::Domain(format!("mask entries must be 0 or 1, got {w}")));
        }
        Ok(Self { mask, data })
    }

    pub fn mask(&self) -> &DVector<T> {
        &self.mask
    }

    pub fn data(&self) -> &DVector<T> {
        &self.data
    }

    fn residual(&self, z: &DVector<T>) -> Result<DVector<T>> {
        check_len("MaskedQuadratic", self.mask.len(), z.len())?;
        Ok((z - &self.data).component_mul(&self.mask))
    }
}

impl<T: Scalar> Smooth<T> for MaskedQuadratic<T> {
    fn dim(&self) -> usize {
        self.mask.len()
    }

    fn value(&self, z: &DVector<T>) -> Result<T> {
        Ok(self.residual(z)?.norm_squared() * T::lit(0.5))
    }

    fn gradient(&self, z: &DVector<T>) -> Result<DVector<T>> {
        self.residual(z)
    }

    fn eval(&self, z: &DVector<T>) -> Result<(T, DVector<T>)> {
        let r = self.residual(z)?;
        Ok((r.norm_squared() * T::lit(0.5), r))
    }

    fn lipschitz(&self) -> T {
        T::one()
    }
}

/// `sum_i log(1 + exp((Az)_i))`.
#[derive(Clone, Debug)]
pub struct Logistic<T: Scalar> {
    a: DMatrix<T>,
    lambda_max: T,
}

/// `log(1 + e^v)` without overflow.
#[inline]
pub fn log1p_exp<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Inflated `lambda_max(A^T A)` by power iteration on whichever of `A A^T`,
/// `A^T A` is smaller, applied matrix-free.
fn gram_lambda_max<T: Scalar>(a: &DMatrix<T>) -> Result<T> {
    let tol = T::lit(LIPSCHITZ_EIG_TOL);
    let lam = if a.nrows() <= a.ncols() {
        max_eigenvalue(|v: &DVector<T>| a * a.tr_mul(v), a.nrows(), tol)?
    } else {
        max_eigenvalue(|v: &DVector<T>| a.tr_mul(&(a * v)), a.ncols(), tol)?
    };
    Ok(lam * (T::one() + tol))
}

impl<T: Scalar> Logistic<T> {
    /// Computes `lambda_max(A^T A)` once, by power iteration on whichever of
    /// `A A^T`, `A^T A` is smaller, applied matrix-free.
    pub fn new(a: DMatrix<T>) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::Domain("logistic loss needs at least one sample".into()));
        }
        let lambda_max = gram_lambda_max(&a)?;
        Ok(Self { a, lambda_max })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    /// Inflated estimate of `lambda_max(A^T A)`.
    pub fn lambda_max(&self) -> T {
        self.lambda_max
    }

    fn check(&self, z: &DVector<T>) -> Result<()> {
        check_len("Logistic", self.a.ncols(), z.len())
    }

    /// Loss at a precomputed `v = Az`.
    pub fn value_at_image(v: &DVector<T>) -> T {
        v.iter().fold(T::zero(), |acc, vi| acc + log1p_exp(*vi))
    }
}

impl<T: Scalar> Smooth<T> for Logistic<T> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, z: &DVector<T>) -> Result<T> {
        self.check(z)?;
        Ok(Self::value_at_image(&(&self.a * z)))
    }

    fn gradient(&self, z: &DVector<T>) -> Result<DVector<T>> {
        self.check(z)?;
        let s = (&self.a * z).map(sigmoid);
        Ok(self.a.tr_mul(&s))
    }

    fn eval(&self, z: &DVector<T>) -> Result<(T, DVector<T>)> {
        self.check(z)?;
        let v = &self.a * z;
        let value = Self::value_at_image(&v);
        Ok((value, self.a.tr_mul(&v.map(sigmoid))))
    }

    fn lipschitz(&self) -> T {
        T::lit(0.25) * self.lambda_max
    }
}

/// `1/2 ||z - anchor||^2`.
#[derive(Clone, Debug)]
pub struct HalfSqDist<T: Scalar> {
    anchor: DVector<T>,
}

impl<T: Scalar> HalfSqDist<T> {
    pub fn new(anchor: DVector<T>) -> Self {
        Self { anchor }
    }

    pub fn anchor(&self) -> &DVector<T> {
        &self.anchor
    }
}

impl<T: Scalar> Smooth<T> for HalfSqDist<T> {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn value(&self, z: &DVector<T>) -> Result<T> {
        check_len("HalfSqDist", self.anchor.len(), z.len())?;
        Ok((z - &self.anchor).norm_squared() * T::lit(0.5))
    }

    fn gradient(&self, z: &DVector<T>) -> Result<DVector<T>> {
        check_len("HalfSqDist", self.anchor.len(), z.len())?;
        Ok(z - &self.anchor)
    }

    fn lipschitz(&self) -> T {
        T::one()
    }
}

/// `1/2 ||Az - rhs||^2`.
#[derive(Clone, Debug)]
pub struct LeastSquares<T: Scalar> {
    a: DMatrix<T>,
    rhs: DVector<T>,
    lambda_max: T,
}

impl<T: Scalar> LeastSquares<T> {
    pub fn new(a: DMatrix<T>, rhs: DVector<T>) -> Result<Self> {
        check_len("LeastSquares rhs", a.nrows(), rhs.len())?;
        if a.nrows() == 0 {
            return Err(Error::Domain("least squares needs at least one row".into()));
        }
        let lambda_max = gram_lambda_max(&a)?;
        Ok(Self { a, rhs, lambda_max })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<T> {
        &self.rhs
    }
}

impl<T: Scalar> Smooth<T> for LeastSquares<T> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, z: &DVector<T>) -> Result<T> {
        check_len("LeastSquares", self.a.ncols(), z.len())?;
        Ok((&self.a * z - &self.rhs).norm_squared() * T::lit(0.5))
    }

    fn gradient(&self, z: &DVector<T>) -> Result<DVector<T>> {
        check_len("LeastSquares", self.a.ncols(), z.len())?;
        Ok(self.a.tr_mul(&(&self.a * z - &self.rhs)))
    }

    fn lipschitz(&self) -> T {
        self.lambda_max
    }
}

/// `sum_i nu_i log nu_i + (1 - nu_i) log(1 - nu_i)` with `0 log 0 = 0`.
pub fn logistic_dual_value<T: Scalar>(nu: &DVector<T>) -> Result<T> {
    let xlogx = |x: T| if x == T::zero() { T::zero() } else { x * x.ln() };
    let mut total = T::zero();
    for (i, &x) in nu.iter().enumerate() {
        if !(x >= T::zero() && x <= T::one()) {
            return Err(Error::Domain(format!(
                "entropy dual needs components in [0, 1], component {i} is {x}"
            )));
        }
        total += xlogx(x) + xlogx(T::one() - x);
    }
    Ok(total)
}

/// `1/2 ||nu||^2 + <w o data, nu>`.
pub fn sysreal_dual_value<T: Scalar>(
    nu: &DVector<T>,
    mask: &DVector<T>,
    data: &DVector<T>,
) -> Result<T> {
    check_len("sysreal_dual_value", nu.len(), mask.len())?;
    check_len("sysreal_dual_value", nu.len(), data.len())?;
    Ok(nu.norm_squared() * T::lit(0.5) + mask.component_mul(data).dot(nu))
}
