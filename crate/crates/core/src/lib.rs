//! Bayesian optimization with the `α_p(x) = E[((y − y*)₊)^p]` acquisition
//! family over Gaussian-process and Student-t-process surrogates, plus the
//! benchmark harness used to compare it against PI, EI, ε-EI, GP-UCB and
//! random search.
//!
//! `p = 0` recovers probability of improvement and `p = 1` expected
//! improvement; larger `p` weighs large improvements more heavily and pushes
//! the search toward uncertain regions.
//!
//! ```
//! use alphabo::acquisition::{alpha_p_gaussian, ei};
//! use alphabo::gp::GaussianPrediction;
//!
//! let pred = GaussianPrediction { mu: 0.3, sigma: 0.8 };
//! let a1 = alpha_p_gaussian(&pred, 0.5, 1.0).unwrap();
//! assert!((a1 - ei(&pred, 0.5)).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acqopt;
pub mod acquisition;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod harness;
pub mod kernel;
pub mod objectives;
pub mod optim;
pub mod quad;
pub mod report;
pub mod specfun;
pub mod tp;

pub use acqopt::{SearchBudget, Surrogate};
pub use acquisition::{AcquisitionContext, AcquisitionPolicy, Prediction};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, RunRecord, SurrogateKind};
