//! Recovery of two-layer rectified networks `A = U f(V X) + E`.
//!
//! The crate generates synthetic network instances and recovers the weight
//! matrices `(U, V)` up to row permutation and positive scaling, with
//! dedicated paths for the noiseless worst case, Gaussian inputs, sub-Gaussian
//! noise, arbitrary input-independent noise, and sparse corruption. A
//! companion `hardness` module builds the reduction chain from reversible
//! 6-SAT to the network feasibility problem.

pub mod bench;
pub mod error;
pub mod eval;
pub mod hardness;
pub mod init;
pub mod model;
pub mod numerics;
pub mod recover;
pub mod rng;
pub mod robust;
pub mod signpat;
pub mod worstcase;

pub use error::Error;
pub use numerics::Matrix;
pub use rng::SeedStream;

/// Global equality tolerance for "this float is that float" decisions.
pub const EQ_TOL: f64 = 1e-9;

/// Relative cutoff below which singular values count as zero.
pub const RANK_TOL: f64 = 1e-9;
