//! Differentially private synthetic contingency tables.
//!
//! The mechanism privatizes the tree of hierarchical (prefix) marginals of a
//! categorical dataset level by level. Each retained node receives discrete
//! Gaussian noise on its full child vector, and the noisy vector is projected
//! back onto the non-negative integers summing to the already-released parent
//! count by minimizing the Chebyshev distance. The leaves form a synthetic
//! contingency table with exactly `n` records that is consistent at every
//! level of the hierarchy.
//!
//! Module map:
//!
//! * [`model`]: schema, CSV ingestion, sparse contingency tables, prefix counts.
//! * [`dgauss`]: exact discrete Gaussian sampler over rationals.
//! * [`rng`]: keyed, derivable random streams.
//! * [`intopt`]: integer Chebyshev projection onto `{y >= 0, sum y = c}`.
//! * [`mechanism`]: the TopDown tree construction.
//! * [`eval`]: error measurement, theoretical bound, noisy-table baseline.
//! * [`cli`]: command-line front end.

pub mod cli;
pub mod dgauss;
mod error;
pub mod eval;
pub mod intopt;
pub mod mechanism;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use mechanism::{run, NoiseMode, PrivacyParams, PrivateTree};
pub use model::{ContingencyTable, Dataset, Schema};
