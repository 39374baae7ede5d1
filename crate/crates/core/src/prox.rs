// SPDX-License-Identifier: Apache-2.0

//! Proximable convex functions `P` and their proximal maps.
//!
//! `prox(tau, u)` always means `argmin_v { P(v) + ||v - u||^2 / (2 tau) }`.
//! Conjugates are never formed: [`conjugate_prox`] goes through the Moreau
//! identity instead.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{check_len, Error, Result};
use crate::scalar::{abs, Scalar};

/// A proper closed convex function with an inexpensive proximal map.
pub trait Proximable<T: Scalar> {
    /// Length of the flattened argument.
    fn dim(&self) -> usize;

    fn value(&self, u: &DVector<T>) -> Result<T>;

    /// Proximal map of `tau * P` at `u`.
    fn prox(&self, tau: T, u: &DVector<T>) -> Result<DVector<T>>;
}

fn check_tau<T: Scalar>(tau: T) -> Result<()> {
    if tau > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!("prox scale must be positive, got {tau}")))
    }
}

/// Coordinatewise `sign(u_i) * max(|u_i| - tau * w_i, 0)`.
pub fn prox_weighted_l1<T: Scalar>(
    weights: &DVector<T>,
    tau: T,
    u: &DVector<T>,
) -> Result<DVector<T>> {
    check_tau(tau)?;
    check_len("prox_weighted_l1", weights.len(), u.len())?;
    if let Some(w) = weights.iter().find(|w| **w < T::zero()) {
        return Err(Error::Domain(format!("negative l1 weight {w}")));
    }
    Ok(u.zip_map(weights, |ui, wi| soft_threshold(ui, tau * wi)))
}

#[inline]
pub(crate) fn soft_threshold<T: Scalar>(x: T, t: T) -> T {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        T::zero()
    }
}

fn svd_cap(rows: usize, cols: usize) -> usize {
    1000 * rows.max(cols).max(1)
}

fn try_svd<T: Scalar>(a: &DMatrix<T>, vectors: bool) -> Result<SVD<T, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(
        a.clone(),
        vectors,
        vectors,
        T::eps(),
        svd_cap(a.nrows(), a.ncols()),
    )
    .ok_or_else(|| Error::Numerical {
        message: format!("SVD of {}x{} matrix did not converge", a.nrows(), a.ncols()),
        last_estimate: f64::NAN,
    })
    .map(|svd| if vectors { polish_svd(a, svd) } else { svd })
}

/// The implicit-QR SVD occasionally returns factors whose product misses `a`
/// by far more than rounding, typically when two singular values nearly
/// coincide. Such results are refined by one-sided Jacobi sweeps on
/// `a V` (or `a^T U`), which converge in a sweep or two from there.
fn polish_svd<T: Scalar>(a: &DMatrix<T>, svd: SVD<T, nalgebra::Dyn, nalgebra::Dyn>) -> SVD<T, nalgebra::Dyn, nalgebra::Dyn> {
    let (Some(u), Some(v_t)) = (svd.u.as_ref(), svd.v_t.as_ref()) else {
        return svd;
    };
    let k = svd.singular_values.len();
    let mut us = u.clone();
    for i in 0..k {
        us.column_mut(i).scale_mut(svd.singular_values[i]);
    }
    let scale = a.norm();
    let resid = (a - us * v_t).norm();
    if !(resid > T::lit(64.0) * T::eps() * scale) {
        return svd;
    }
    // Work with the orientation whose square orthogonal factor is available.
    let tall = a.nrows() >= a.ncols();
    let (b, mut q) = if tall {
        (a.clone(), v_t.transpose())
    } else {
        (a.transpose(), u.clone())
    };
    let mut w = &b * &q;
    let n = w.ncols();
    for _ in 0..30 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if abs(gamma) <= T::eps() * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (abs(zeta) + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut q] {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, i)], m[(r, j)]);
                        m[(r, i)] = c * x - s * y;
                        m[(r, j)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(T, usize)> = (0..n).map(|i| (w.column(i).norm(), i)).collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut left = DMatrix::zeros(w.nrows(), n);
    let mut right = DMatrix::zeros(n, n);
    let mut sv = DVector::zeros(n);
    for (c, &(sigma, i)) in order.iter().enumerate() {
        sv[c] = sigma;
        if sigma > T::zero() {
            left.set_column(c, &(w.column(i) / sigma));
        }
        right.set_column(c, &q.column(i));
    }
    let (u, v_t) = if tall {
        (left, right.transpose())
    } else {
        (right, left.transpose())
    };
    SVD {
        u: Some(u),
        v_t: Some(v_t),
        singular_values: sv,
    }
}

/// `U diag(s) V^T` restricted to the triples with `s > 0`.
fn recompose<T: Scalar>(
    svd: &SVD<T, nalgebra::Dyn, nalgebra::Dyn>,
    shrunk: &[T],
    rows: usize,
    cols: usize,
) -> DMatrix<T> {
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let keep: Vec<usize> = (0..shrunk.len()).filter(|&i| shrunk[i] > T::zero()).collect();
    if keep.is_empty() {
        return DMatrix::zeros(rows, cols);
    }
    let mut us = DMatrix::zeros(rows, keep.len());
    let mut vs = DMatrix::zeros(keep.len(), cols);
    for (c, &i) in keep.iter().enumerate() {
        us.set_column(c, &(u.column(i) * shrunk[i]));
        vs.set_row(c, &v_t.row(i));
    }
    us * vs
}

/// Sum of singular values.
pub fn nuclear_norm<T: Scalar>(a: &DMatrix<T>) -> Result<T> {
    if a.is_empty() {
        return Ok(T::zero());
    }
    let svd = try_svd(a, false)?;
    Ok(svd.singular_values.iter().fold(T::zero(), |acc, s| acc + *s))
}

/// Largest singular value.
pub fn operator_norm<T: Scalar>(a: &DMatrix<T>) -> Result<T> {
    if a.is_empty() {
        return Ok(T::zero());
    }
    let svd = try_svd(a, false)?;
    Ok(svd.singular_values.max())
}

/// Singular value soft-thresholding: prox of `tau * lambda * ||.||_*`.
pub fn prox_nuclear<T: Scalar>(lambda: T, tau: T, u: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_tau(tau)?;
    if lambda <= T::zero() {
        return Err(Error::Domain(format!("nuclear weight must be positive, got {lambda}")));
    }
    if u.is_empty() {
        return Ok(u.clone());
    }
    let svd = try_svd(u, true)?;
    let t = tau * lambda;
    let shrunk: Vec<T> = svd
        .singular_values
        .iter()
        .map(|s| if *s > t { *s - t } else { T::zero() })
        .collect();
    Ok(recompose(&svd, &shrunk, u.nrows(), u.ncols()))
}

/// Projection onto `{Y : ||Y||_op <= lambda}`: singular values are clipped
/// at `lambda`. Already-feasible input is returned unchanged.
pub fn project_spectral_ball<T: Scalar>(y: &DMatrix<T>, lambda: T) -> Result<DMatrix<T>> {
    if lambda <= T::zero() {
        return Err(Error::Domain(format!("spectral radius must be positive, got {lambda}")));
    }
    if y.is_empty() {
        return Ok(y.clone());
    }
    let svd = try_svd(y, true)?;
    if svd.singular_values.iter().all(|s| *s <= lambda) {
        return Ok(y.clone());
    }
    // Y - U (s - lambda)_+ V^T keeps the untouched directions exact.
    let excess: Vec<T> = svd
        .singular_values
        .iter()
        .map(|s| if *s > lambda { *s - lambda } else { T::zero() })
        .collect();
    Ok(y - recompose(&svd, &excess, y.nrows(), y.ncols()))
}

/// `prox_{P*/tau}(u)` computed as `u - prox_{tau P}(tau u) / tau`.
pub fn conjugate_prox<T, P>(p: &P, tau: T, u: &DVector<T>) -> Result<DVector<T>>
where
    T: Scalar,
    P: Proximable<T> + ?Sized,
{
    check_tau(tau)?;
    let scaled = u * tau;
    let inner = p.prox(tau, &scaled)?;
    Ok(u - inner / tau)
}

/// `sum_i w_i |u_i|`.
#[derive(Clone, Debug)]
pub struct WeightedL1<T: Scalar> {
    weights: DVector<T>,
}

impl<T: Scalar> WeightedL1<T> {
    pub fn new(weights: DVector<T>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= T::zero())) {
            return Err(Error::Domain(format!("l1 weights must be nonnegative, got {w}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(dim: usize, weight: T) -> Result<Self> {
        Self::new(DVector::from_element(dim, weight))
    }

    /// `w1` on the first `n1` coordinates, `w2` on the next `n2`.
    pub fn two_level(n1: usize, w1: T, n2: usize, w2: T) -> Result<Self> {
        Self::new(DVector::from_fn(n1 + n2, |i, _| if i < n1 { w1 } else { w2 }))
    }

    pub fn weights(&self) -> &DVector<T> {
        &self.weights
    }
}

impl<T: Scalar> Proximable<T> for WeightedL1<T> {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, u: &DVector<T>) -> Result<T> {
        check_len("WeightedL1::value", self.weights.len(), u.len())?;
        Ok(u.iter()
            .zip(self.weights.iter())
            .fold(T::zero(), |acc, (ui, wi)| acc + *wi * abs(*ui)))
    }

    fn prox(&self, tau: T, u: &DVector<T>) -> Result<DVector<T>> {
        prox_weighted_l1(&self.weights, tau, u)
    }
}

/// `lambda * ||U||_*` on column-major flattened `rows x cols` matrices.
#[derive(Clone, Debug)]
pub struct NuclearNorm<T: Scalar> {
    lambda: T,
    rows: usize,
    cols: usize,
}

impl<T: Scalar> NuclearNorm<T> {
    pub fn new(lambda: T, rows: usize, cols: usize) -> Result<Self> {
        if lambda <= T::zero() {
            return Err(Error::Domain(format!("nuclear weight must be positive, got {lambda}")));
        }
        Ok(Self { lambda, rows, cols })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn reshape(&self, u: &DVector<T>) -> Result<DMatrix<T>> {
        check_len("NuclearNorm", self.rows * self.cols, u.len())?;
        Ok(DMatrix::from_column_slice(self.rows, self.cols, u.as_slice()))
    }
}

impl<T: Scalar> Proximable<T> for NuclearNorm<T> {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn value(&self, u: &DVector<T>) -> Result<T> {
        Ok(self.lambda * nuclear_norm(&self.reshape(u)?)?)
    }

    fn prox(&self, tau: T, u: &DVector<T>) -> Result<DVector<T>> {
        let out = prox_nuclear(self.lambda, tau, &self.reshape(u)?)?;
        Ok(DVector::from_column_slice(out.as_slice()))
    }
}

/// `P(u_1, .., u_r) = sum_i P_i(u_i)` over consecutive segments.
pub struct SeparableSum<T: Scalar> {
    parts: Vec<Box<dyn Proximable<T> + Send + Sync>>,
}

impl<T: Scalar> SeparableSum<T> {
    pub fn new(parts: Vec<Box<dyn Proximable<T> + Send + Sync>>) -> Self {
        Self { parts }
    }

    fn segments(&self) -> impl Iterator<Item = (usize, &(dyn Proximable<T> + Send + Sync))> + '_ {
        let mut offset = 0;
        self.parts.iter().map(move |p| {
            let start = offset;
            offset += p.dim();
            (start, p.as_ref())
        })
    }
}

impl<T: Scalar> Proximable<T> for SeparableSum<T> {
    fn dim(&self) -> usize {
        self.parts.iter().map(|p| p.dim()).sum()
    }

    fn value(&self, u: &DVector<T>) -> Result<T> {
        check_len("SeparableSum::value", self.dim(), u.len())?;
        let mut total = T::zero();
        for (start, p) in self.segments() {
            let seg = u.rows(start, p.dim()).into_owned();
            total += p.value(&seg)?;
        }
        Ok(total)
    }

    fn prox(&self, tau: T, u: &DVector<T>) -> Result<DVector<T>> {
        check_tau(tau)?;
        check_len("SeparableSum::prox", self.dim(), u.len())?;
        let mut out = DVector::zeros(u.len());
        for (start, p) in self.segments() {
            let seg = u.rows(start, p.dim()).into_owned();
            out.rows_mut(start, p.dim()).copy_from(&p.prox(tau, &seg)?);
        }
        Ok(out)
    }
}
