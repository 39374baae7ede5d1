// SPDX-License-Identifier: Apache-2.0

//! Nuclear-norm system realization:
//! `min 1/2 ||w o (z - zhat)||^2 + lambda ||H(z)||_*`.

use nalgebra::{DMatrix, DVector};

use super::rng::{gaussian_matrix, gaussian_vector, instance_rng};
use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::linops::{HankelShape, LinearMap};
use crate::prox::{operator_norm, project_spectral_ball, NuclearNorm};
use crate::scalar::{abs, max, Scalar};
use crate::smooth::{sysreal_dual_value, MaskedQuadratic};
use crate::solvers::{Checkpoint, CompositeProblem, IterateView, Monitor};

/// Generator parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SysRealParams {
    /// Number of simulated time steps `T`.
    pub horizon: usize,
    pub m: usize,
    pub n: usize,
    /// State dimension.
    pub r: usize,
    pub j: usize,
    pub k: usize,
    /// Output noise level.
    pub noise: f64,
    pub lambda: f64,
}

impl SysRealParams {
    /// `T = 1000`, `m = n = r = 10`, `j = 21`, noise `0.05`.
    pub fn standard(k: usize, lambda: f64) -> Self {
        Self {
            horizon: 1000,
            m: 10,
            n: 10,
            r: 10,
            j: 21,
            k,
            noise: 0.05,
            lambda,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SysRealInstance<T: Scalar> {
    pub shape: HankelShape,
    /// `zhat`, column-major `m x n(j+k-1)`.
    pub data: DVector<T>,
    /// Ones on blocks `0..k`, zero elsewhere.
    pub mask: DVector<T>,
    pub lambda: T,
    pub seed: u64,
}

/// Mask that is one on the first `k` column blocks.
pub fn block_mask<T: Scalar>(shape: &HankelShape) -> DVector<T> {
    let per_block = shape.m * shape.n;
    DVector::from_fn(shape.domain_len(), |i, _| {
        if i / per_block < shape.k {
            T::one()
        } else {
            T::zero()
        }
    })
}

impl<T: Scalar> SysRealInstance<T> {
    /// Wraps given measurements; blocks `>= k` of `data` are ignored by the
    /// loss but kept as given.
    pub fn from_data(shape: HankelShape, data: DVector<T>, lambda: T, seed: u64) -> Result<Self> {
        crate::error::check_len("SysRealInstance data", shape.domain_len(), data.len())?;
        if !(lambda > T::zero()) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            shape,
            mask: block_mask(&shape),
            data,
            lambda,
            seed,
        })
    }

    /// `zhat` as an `m x n(j+k-1)` matrix.
    pub fn measurement_matrix(&self) -> DMatrix<T> {
        let (r, c) = self.shape.domain_shape();
        DMatrix::from_column_slice(r, c, self.data.as_slice())
    }
}

fn normalize(mut a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = operator_norm(&a)?;
    if s > 0.0 {
        a /= s;
    }
    Ok(a)
}

/// Draws a random instance from a stable state-space model.
///
/// Order of draws: `A`, `B`, `C`, `v_0`, then `e_t` for `t = 0..T`, then the
/// output noise `eps` (column `t` is the noise on `u_t`).
pub fn gen_sysreal<T: Scalar>(params: &SysRealParams, seed: u64) -> Result<SysRealInstance<T>> {
    let SysRealParams {
        horizon,
        m,
        n,
        r,
        j,
        k,
        noise,
        lambda,
    } = *params;
    let shape = HankelShape::new(m, n, j, k)?;
    if r == 0 || horizon == 0 {
        return Err(Error::Config("state dimension and horizon must be positive".into()));
    }
    if m != n {
        return Err(Error::Dimension {
            context: "gen_sysreal: measurement blocks are n x n, so m must equal n",
            expected: n,
            got: m,
        });
    }
    if horizon <= j + k {
        return Err(Error::Precondition(format!(
            "horizon T = {horizon} must exceed j + k = {}",
            j + k
        )));
    }

    let mut rng = instance_rng(seed, 0);
    let a = normalize(gaussian_matrix(&mut rng, r, r))?;
    let b = normalize(gaussian_matrix(&mut rng, r, n))?;
    let c = normalize(gaussian_matrix(&mut rng, n, r))?;
    let mut v = gaussian_vector(&mut rng, r);
    let mut u = DMatrix::zeros(n, horizon);
    for t in 0..horizon {
        let e = gaussian_vector(&mut rng, n);
        u.set_column(t, &(&c * &v + &e));
        v = &a * &v + &b * &e;
    }
    let eps = gaussian_matrix(&mut rng, n, horizon);
    let u = u + eps * noise;

    let mut z = DMatrix::<f64>::zeros(m, n * shape.num_blocks());
    let inv_t = 1.0 / horizon as f64;
    for i in 0..k {
        let lead = u.columns(i, horizon - i);
        let lag = u.columns(0, horizon - i);
        let block = lead * lag.transpose() * inv_t;
        z.view_mut((0, i * n), (m, n)).copy_from(&block);
    }
    let data = DVector::from_iterator(z.len(), z.iter().map(|v| T::lit(*v)));
    SysRealInstance::from_data(shape, data, T::lit(lambda), seed)
}

/// Type of the composite problem built from a system-realization instance.
pub type SysRealProblem<T> = CompositeProblem<T, MaskedQuadratic<T>, NuclearNorm<T>>;

impl<T: Scalar> ProblemInstance<T> for SysRealInstance<T> {
    type H = MaskedQuadratic<T>;
    type P = NuclearNorm<T>;
    type Mon<'a> = SysRealMonitor<'a, T>;

    /// `h = masked quadratic`, `P = lambda ||.||_*`, `M = H`, `b = 0`, `L = 1`.
    fn build_composite(&self) -> Result<SysRealProblem<T>> {
        let (rows, cols) = self.shape.codomain_shape();
        CompositeProblem::new(
            MaskedQuadratic::new(self.mask.clone(), self.data.clone())?,
            NuclearNorm::new(self.lambda, rows, cols)?,
            LinearMap::hankel(self.shape),
            DVector::zeros(self.shape.codomain_len()),
        )
    }

    fn monitor<'a>(&'a self, prob: &'a SysRealProblem<T>, tol: T) -> SysRealMonitor<'a, T> {
        SysRealMonitor::new(self, prob, tol)
    }
}

/// Quantities of the system-realization stopping rule at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SysRealCheck<T: Scalar> {
    pub dobj: T,
    pub dfeas: T,
}

/// Dual candidate `-w o H*(proj(y))`, its dual value and relative dual
/// infeasibility, where `proj` projects onto the spectral ball of radius
/// `lambda`.
pub fn sysreal_dual_check<T: Scalar>(inst: &SysRealInstance<T>, y: &DVector<T>) -> Result<SysRealCheck<T>> {
    crate::error::check_len("sysreal_dual_check", inst.shape.codomain_len(), y.len())?;
    let (rows, cols) = inst.shape.codomain_shape();
    let ymat = DMatrix::from_column_slice(rows, cols, y.as_slice());
    let proj = project_spectral_ball(&ymat, inst.lambda)?;
    let hy = LinearMap::hankel(inst.shape).adjoint(&DVector::from_column_slice(proj.as_slice()))?;
    let masked = inst.mask.component_mul(&hy);
    let nu = -&masked;
    let dobj = sysreal_dual_value(&nu, &inst.mask, &inst.data)?;
    let dfeas = (&hy - &masked).norm() / max(hy.norm(), T::one());
    Ok(SysRealCheck { dobj, dfeas })
}

/// `max(|p + d| / max(p, 1), 5 dfeas)`.
pub fn termination_measure<T: Scalar>(pobj: T, dobj: T, dfeas: T) -> T {
    let gap = abs(pobj + dobj) / max(pobj, T::one());
    max(gap, T::lit(5.0) * dfeas)
}

/// Stopping rule for system realization, tracking the best primal value over
/// the checkpoints seen so far.
pub struct SysRealMonitor<'a, T: Scalar> {
    inst: &'a SysRealInstance<T>,
    prob: &'a SysRealProblem<T>,
    tol: T,
    best: Option<T>,
}

impl<'a, T: Scalar> SysRealMonitor<'a, T> {
    pub fn new(inst: &'a SysRealInstance<T>, prob: &'a SysRealProblem<T>, tol: T) -> Self {
        Self {
            inst,
            prob,
            tol,
            best: None,
        }
    }
}

impl<T: Scalar> Monitor<T> for SysRealMonitor<'_, T> {
    fn check(&mut self, it: &IterateView<'_, T>) -> Result<Option<Checkpoint<T>>> {
        let p = self.prob.objective(it.z)?;
        let pobj = match self.best {
            Some(b) if b <= p => b,
            _ => p,
        };
        self.best = Some(pobj);
        let SysRealCheck { dobj, dfeas } = sysreal_dual_check(self.inst, it.y)?;
        Ok(Some(Checkpoint {
            t: it.t,
            pobj,
            dobj,
            dfeas,
            stop: termination_measure(pobj, dobj, dfeas) < self.tol,
        }))
    }
}
