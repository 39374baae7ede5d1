// SPDX-License-Identifier: Apache-2.0

//! The two benchmark applications: instance generation, composite-problem
//! construction and their stopping rules.

pub mod flasso;
pub mod io;
pub mod rng;
pub mod sysreal;

use crate::error::Result;
use crate::prox::Proximable;
use crate::scalar::Scalar;
use crate::smooth::Smooth;
use crate::solvers::{CompositeProblem, Monitor};

pub use flasso::{
    flasso_dual_candidate, flasso_dual_check, gen_fusedlasso, FlassoMonitor, FusedLassoInstance,
    FusedLassoProblem,
};
pub use io::{load_instance, read_instance, save_instance, write_instance, StoredInstance};
pub use sysreal::{
    gen_sysreal, sysreal_dual_check, termination_measure, SysRealInstance, SysRealMonitor,
    SysRealParams, SysRealProblem,
};

/// An instance that can be turned into `h(z) + P(Mz - b)` together with its
/// stopping rule.
pub trait ProblemInstance<T: Scalar> {
    type H: Smooth<T>;
    type P: Proximable<T>;
    type Mon<'a>: Monitor<T>
    where
        Self: 'a;

    fn build_composite(&self) -> Result<CompositeProblem<T, Self::H, Self::P>>;

    fn monitor<'a>(&'a self, prob: &'a CompositeProblem<T, Self::H, Self::P>, tol: T) -> Self::Mon<'a>;
}
