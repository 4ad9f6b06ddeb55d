//! Bayes and intrinsically optimal Bayesian robust (IBR) clustering over
//! random labeled point processes.
//!
//! The crate is organised around the pieces needed to go from a point set to
//! an error-minimising partition:
//!
//! - [`partition`]: label functions, canonical partitions, enumeration and the
//!   natural partition cost.
//! - [`gaussian`]: separable Gaussian RLPPs with normal-inverse-Wishart priors,
//!   posterior label-function probabilities and effective-RLPP construction.
//! - [`bayes`]: exact Bayes/IBR partition search and the Pseed Fast heuristic.
//! - [`baselines`]: classical clusterers used for comparison.
//! - [`granulometry`]: T-grain image synthesis, linear openings, granulometric
//!   moment features and their asymptotic Gaussian law.
//! - [`experiment`]: seeded Monte-Carlo harnesses for the Gaussian and
//!   granular studies.
//! - [`io`]: text formats (points CSV, partitions, model specs, PBM images).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod bayes;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod granulometry;
pub mod io;
pub mod linalg;
pub mod method;
pub mod partition;
pub mod rng;

pub use error::{Error, Result};
pub use method::Method;
pub use partition::{LabelFunction, Partition};
