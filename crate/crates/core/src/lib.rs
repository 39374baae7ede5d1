// SPDX-License-Identifier: Apache-2.0

pub mod error;
pub mod linops;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod smooth;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LinearMap64 = linops::LinearMap<f64>;
pub type LinearMap32 = linops::LinearMap<f32>;
pub type PpgConfig64 = solvers::PpgConfig<f64>;
pub type PpgConfig32 = solvers::PpgConfig<f32>;
pub type MfbsConfig64 = solvers::MfbsConfig<f64>;
pub type MfbsConfig32 = solvers::MfbsConfig<f32>;
pub type CondatConfig64 = solvers::CondatConfig<f64>;
pub type CondatConfig32 = solvers::CondatConfig<f32>;
pub type SolveTrace64 = solvers::SolveTrace<f64>;
pub type SolveTrace32 = solvers::SolveTrace<f32>;
pub type SysRealInstance64 = problems::SysRealInstance<f64>;
pub type SysRealInstance32 = problems::SysRealInstance<f32>;
pub type FusedLassoInstance64 = problems::FusedLassoInstance<f64>;
pub type FusedLassoInstance32 = problems::FusedLassoInstance<f32>;
