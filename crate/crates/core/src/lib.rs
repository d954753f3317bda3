//! Block coordinate descent with a diminishing search radius (BCD-DR) for
//! block-convex problems, specialized to nonnegative matrix and tensor
//! factorization.
//!
//! - [`tensor`]: dense tensors and the multilinear kernels.
//! - [`schedule`]: radius schedules `c'·w_n`.
//! - [`subsolver`]: box ∩ ball constrained quadratic block solver.
//! - [`bcd`]: the sweep driver and trace diagnostics.
//! - [`factorization`]: NTF/NMF block problem, ALS-DR and the MU baseline.
//! - [`datagen`]: seeded synthetic tensors.
//! - [`io`]: the NTF1 tensor file format.

pub mod bcd;
pub mod datagen;
pub mod error;
pub mod factorization;
pub mod io;
pub mod rng;
pub mod schedule;
pub mod subsolver;
pub mod tensor;

pub use bcd::{
    bcd_dr_sweep, classify_point, run, stationarity_measure, verify_trace, BlockProblem, Clock, PointClass,
    RunResult, SolverConfig, TraceRecord, TraceReport,
};
pub use error::{Error, Result};
pub use factorization::{init_factors, mu_sweep, run_mu, FactorModel, ModelMode, MuConfig, NtfProblem};
pub use schedule::{RadiusSchedule, ScheduleKind};
pub use subsolver::{BoxBallFeasibleSet, QuadraticBlockSubproblem, SubsolverOptions};
pub use tensor::{DenseTensor, Matrix};
