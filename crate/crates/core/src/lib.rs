//! Budgeted experiment selection under the determinant criterion.
//!
//! Given `n` experiment vectors `a_i ∈ R^m` and a budget `k`, pick `k` of
//! them (a set, or a multiset when repetitions are allowed) maximizing
//!
//! ```text
//! f(S) = det( Σ_{i∈S} a_i a_iᵀ )^{1/m},
//! ```
//!
//! the criterion that minimizes the volume of the confidence ellipsoid of
//! the least-squares estimate taken from those experiments.
//!
//! The pipeline:
//!
//! 1. [`relaxation`] solves the continuous relaxation (weights `x ∈ [0,1]`
//!    or `x ≥ 0`, `Σx = k`) by pairwise Frank-Wolfe on `ln det`, returning
//!    a fractional design `x̂` with value `ŵ` and a duality-gap certificate.
//! 2. [`sampling`] rounds `x̂` to an integral design by one of three seeded
//!    randomized schemes (proportional subset sampling, inflated Bernoulli
//!    with greedy fill, or categorical with repetitions).
//! 3. [`derand`] replaces each scheme by its deterministic counterpart via
//!    the method of conditional expectations, never landing below the
//!    scheme's expected determinant.
//! 4. [`bounds`] computes the certified approximation ratios
//!    (`f(S) ≥ α·ŵ`, with `α ≥ 1/e` for the proportional scheme and
//!    `(1-ε)`-style guarantees in the large-budget regimes).
//! 5. [`oracle`] and [`verify`] provide brute-force enumeration and a
//!    seeded property suite that checks every piece against first
//!    principles on desk-scale instances.
//!
//! Candidate sweeps, Monte Carlo batches and verification instances run
//! data-parallel through rayon when the `parallel` feature (default) is
//! enabled; disabling it yields a dependency-light sequential build with
//! identical results.

pub mod bounds;
pub mod derand;
pub mod error;
pub mod exec;
pub mod gen;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod relaxation;
pub mod sampling;
pub mod symfun;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Design, FractionalDesign, Instance, Mode};
pub use relaxation::{solve_relaxation, SolverConfig, SolverOutcome};
pub use sampling::RngSeed;
