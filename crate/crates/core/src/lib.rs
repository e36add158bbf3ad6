//! Exact and simulated diagnostics for additive functionals of stationary
//! finite-state Markov chains: conditional-expectation norms of partial
//! sums, the square-root operator, long-run variance and its dyadic
//! recursion, bridge-centered CLT checks, and the auxiliary inequalities on
//! subadditive sequences.

pub mod chain;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod gallery;
pub mod lemmas;
pub mod operators;
pub mod simulate;
pub mod spec_file;
pub mod variance;

pub use chain::{build_chain, ChainBuilder, ChainClassification, ChainModel};
pub use config::Tolerances;
pub use diagnostics::{ConditionId, ConditionRow, ConditionalNorms, SeriesVerdict, Verdict, Weight};
pub use error::{Error, Result};
pub use gallery::GalleryChain;
pub use operators::{OperatorTable, Side, SqrtMembership, SqrtSeries};
pub use simulate::{CltTestResult, StatisticKind, TrajectoryBatch};
pub use spec_file::ChainSpec;
pub use variance::VarianceProfile;

pub use nalgebra::{DMatrix, DVector};
