//! Solver library for the optimal sequential flow problem.
//!
//! A problem instance is a finite set of named capacity matrices over a common
//! vertex set, with a distinguished source and target. A sequential flow picks
//! one capacity matrix per time step and routes flow through the resulting
//! layered network; the optimum is the supremum of achievable values over all
//! capacity words.
//!
//! The library is organized in layers:
//!
//! - [`mm`]: the three-valued max-min semiring `{0, 1, ω}` and its matrices,
//!   the qualitative abstraction of concrete capacities.
//! - [`pipeline`]: integral max-flow / min-cut over the time-expanded graph of
//!   a capacity word, plus explicit token flows.
//! - [`flow`]: the flow semigroup (closure of the abstracted capacities under
//!   matrix product and the `♯` iteration of idempotents), unboundedness
//!   witnesses and their derivation expressions.
//! - [`realize`]: turns a witness expression into a concrete capacity word and
//!   token flow carrying arbitrarily many tokens along its ω-edges.
//! - [`semigroup`] and [`summary`]: generic finite-semigroup machinery (Green
//!   relations, Ramsey numbers) and bounded-height factorization trees.
//! - [`qualitative`] / [`quantitative`]: the two solver stages - deciding
//!   unboundedness, then computing the exact optimum when bounded.
//! - [`oracle`]: independent brute-force baselines used by the test suites.
//! - [`instance`]: the on-disk instance format and its validation.

pub mod error;
pub mod flow;
pub mod instance;
pub mod mm;
pub mod oracle;
pub mod pipeline;
pub mod qualitative;
pub mod quantitative;
pub mod realize;
pub mod semigroup;
pub mod summary;

pub use error::Error;
pub use flow::{FlowSemigroup, PairClass, SharpExpr};
pub use instance::Instance;
pub use mm::{AbstractMatrix, Capacity, CapacityMatrix, Mm};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
