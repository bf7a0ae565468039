//! Universal-Kriging (Gaussian process interpolation) surrogate modelling engine.
//!
//! The crate provides the full model stack:
//!
//! * [`linalg`] — dense matrices, Cholesky factorization with jitter escalation,
//!   triangular solves,
//! * [`stats`] — standard-normal quantile and error-function machinery,
//! * [`random`] — seeded, platform-stable random streams,
//! * [`kernel`] — 1-D correlation families, separable/ellipsoidal composition,
//!   custom (matrix-level) correlation functions,
//! * [`trend`] — simple/ordinary/polynomial/custom trend bases and the
//!   model-mean trend used for hierarchical (multi-fidelity) surrogates,
//! * [`doe`] — Latin hypercube / Monte Carlo designs and input standardization,
//! * [`engine`] — profile estimates, ML/CV objectives, the fast leave-one-out
//!   shortcut, prediction with variance/covariance, GP trajectory sampling,
//! * [`optim`] — bounded BFGS, a real-coded genetic algorithm and the hybrid
//!   GA-then-BFGS method,
//! * [`session`] — model lifecycle: configuration defaults, the fit pipeline,
//!   reports, validation metrics and demo scenarios,
//! * [`cli`] — the `krig` command-line front end over CSV data and TOML configs.
//!
//! Fitted models are immutable and cheap to share; all randomness flows through
//! explicitly seeded [`random::RandomStream`] values so that runs reproduce
//! bit-identically across platforms.

// `!(x > 0.0)` style comparisons are deliberate: they catch NaN alongside the
// out-of-range case.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod csvio;
pub mod demos;
pub mod doe;
pub mod engine;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod model_io;
pub mod optim;
pub mod random;
pub mod registry;
pub mod report;
pub mod session;
pub mod stats;
pub mod trend;

pub use error::{KrigError, Result};
pub use linalg::{CholeskyFactor, Matrix};
pub use random::RandomStream;
