//! Simulation and analysis of the kinetic Vicsek alignment model on the
//! torus 𝕋² × 𝕋.
//!
//! The crate is organised around the objects the model needs:
//!
//! * [`spectral`]: collocation grids, Fourier transforms, norms and the
//!   x-average / remainder split shared by every solver.
//! * [`linear`]: the per-mode passive scalar problem, the hypocoercivity
//!   functional and the enhanced-dissipation and mixing diagnostics.
//! * [`kinetic`]: influence kernels and the full nonlinear kinetic solver.
//! * [`homogeneous`]: the spatially homogeneous equation, free energy,
//!   linear stability, von Mises stationary states and the Bessel-ratio
//!   compatibility condition.
//! * [`agents`]: the interacting-particle SDE that the kinetic equation
//!   is the mean-field limit of.
//! * [`harness`]: configuration, presets, CSV output and rate fitting.
//!
//! The guide in `book/` walks through each of these with runnable code.

// `!(x > 0.0)` is how NaN gets rejected along with the other bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod error;
pub mod fit;
pub mod harness;
pub mod homogeneous;
pub mod kinetic;
pub mod linear;
pub mod speed;
pub mod spectral;

pub use error::{Error, Result};
pub use speed::SpeedProfile;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/spectral.md")]
    pub struct Spectral;
    #[doc = include_str!("../../../book/src/passive.md")]
    pub struct Passive;
    #[doc = include_str!("../../../book/src/kinetic.md")]
    pub struct Kinetic;
    #[doc = include_str!("../../../book/src/homogeneous.md")]
    pub struct Homogeneous;
    #[doc = include_str!("../../../book/src/agents.md")]
    pub struct Agents;
    #[doc = include_str!("../../../book/src/harness.md")]
    pub struct Harness;
}
