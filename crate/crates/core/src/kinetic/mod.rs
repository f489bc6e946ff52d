//! The spatially inhomogeneous kinetic alignment model.

pub mod experiment;
pub mod kernels;
pub mod solver;

pub use experiment::{default_initial, diagnostics, run_experiment, KineticConfig, KineticRun, KineticSample, KINETIC_COLUMNS};
pub use kernels::{
    validate_kernels, AngularInfluence, AngularKernel, InfluencePair, KernelCheck, KernelReport, SpatialKernel,
};
pub use solver::{alignment_l, kinetic_step_limit, step_kinetic, KineticParams, KineticSolver};
