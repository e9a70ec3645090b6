//! Runtime analysis of elitist evolutionary algorithms via fitness levels.
//!
//! The crate models one elitist EA on one problem as a finite absorbing
//! Markov chain, partitions its states into fitness levels, and then works on
//! both sides of the same question — how long until the optimum is hit:
//!
//! * [`exact`] solves the chain for ground-truth hitting probabilities, exit
//!   times, mean hitting times, and their per-level decomposition.
//! * [`coeffs`] computes families of coefficients that bound the probability
//!   of visiting each level, from one scalar up to full per-pair tables.
//! * [`bounds`] assembles those coefficients into linear lower/upper bounds
//!   on the hitting time, verifies the drift inequalities behind them, and
//!   compares two algorithms by their ratio interval.
//! * [`knapsack`] builds the benchmark: six knapsack instances and the exact
//!   transition chains of a (1+1) EA under feasibility rules or greedy
//!   repair, both as full bit-string chains and as symmetry-lumped class
//!   chains.
//! * [`sim`] cross-validates everything with seeded Monte Carlo runs.
//!
//! Analyses run in exact rational arithmetic by default; a floating-point
//! mode exists for chains too large for exact solves. See the `driftlab`
//! binary for the command-line front end.

pub mod bounds;
pub mod chain;
pub mod cli;
pub mod coeffs;
pub mod exact;
pub mod graph;
pub mod io;
pub mod knapsack;
pub mod level;
pub mod linalg;
pub mod numeric;
pub mod sim;
pub mod testkit;

pub use chain::{Diagnostic, StateChain};
pub use coeffs::{CoefficientTable, Direction};
pub use level::{LevelPartition, LevelStats};
pub use numeric::Scalar;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid chain: {}", .0.join("; "))]
    InvalidChain(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("state {state} cannot leave its level: {detail}")]
    AbsorbingState { state: String, detail: String },

    #[error("no path from level {from} to level {to}")]
    NoPath { from: usize, to: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("all-path enumeration refused for {levels} levels: use the recursive form")]
    AllPathGuard { levels: usize },

    #[error(
        "no qualifying level pair: need at least two non-optimal levels with feeding transitions"
    )]
    NoQualifyingPair,

    #[error("invalid start distribution: {0}")]
    BadDistribution(String),

    #[error("level {level} unreachable upward, violates the default assumption")]
    UnreachableLevel { level: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular linear system")]
    SingularSystem,

    #[error("guard violated: {0}")]
    Guard(String),

    #[error("knapsack instance error: {0}")]
    Knapsack(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
