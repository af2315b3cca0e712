//! Wave-turbulence collision dynamics on discrete momentum rays, viewed as
//! chemical reaction networks.
//!
//! Start with [`lattice::enumerate_rays`] to split a momentum lattice into
//! independent rays, then evolve each ray with [`integrator::integrate`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod collision;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod gspace;
pub mod integrator;
pub mod kernel;
pub mod lattice;
pub mod network;

pub use collision::{CollisionOperator, Kernels, Mode, Operator, StateF};
pub use error::{Error, Result};
pub use gspace::{GSystem, StateG};
pub use kernel::{Kernel, KernelSpec};
