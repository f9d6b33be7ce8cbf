//! Numerical laboratory for canonical Hilbert-space-valued U-statistics on
//! finite alphabets.
//!
//! - [`indexing`]: coordinate sets, set partitions, `(K, J)` pairs, index streams.
//! - [`kernel`]: kernels `h: Σ^d → R^q`, partial expectations, Hoeffding projection.
//! - [`norms`]: partition-indexed norms and their truncated and chaos variants.
//! - [`simulate`]: exact enumeration and seeded Monte Carlo of the four sums.
//! - [`bounds`]: moment, tail, variance, Paley–Zygmund and decoupling evaluators.
//! - [`lilcheck`]: growth curves and LIL certificates.

pub mod bounds;
mod error;
pub mod indexing;
pub mod kernel;
pub mod lilcheck;
pub mod norms;
pub mod rng;
pub mod simulate;
mod solver;

pub use error::{BoundError, CertificateError, KernelError, NormError, SimError};
pub use indexing::{
    enumerate_partition_specs, enumerate_partitions, iterate_indices, CoordSet, MultiIndex, Partition,
    PartitionSpec,
};
pub use kernel::{ll, CalibrationConstants, DiscreteDistribution, Kernel, KernelFile};
pub use norms::{NormResult, TestFunctionBundle};
pub use simulate::{SampleConfig, SimReport, SumKind};
pub use solver::SolverOptions;
