//! Entropy index of upper-quantile interdependence for random vectors of
//! arbitrary dimension.
//!
//! The crate is organised around the data flow of a dependence study:
//!
//! * [`pseudo_obs`] turns raw multivariate samples into rank-based
//!   pseudo-observations.
//! * [`entropy_index`] computes exceedance-indicator cell distributions and the
//!   normalised Shannon index `S_b` and Tsallis index `T_b^α`.
//! * [`copula`] holds the model families, their seeded samplers and the exact
//!   CDFs where a closed form exists.
//! * [`model_fit`] fits GARCH(1,1) marginal filters, elliptical copulas and
//!   Gaussian mixtures.
//! * [`extremal`] relates the index to the extremal coefficient.
//! * [`envelope`] builds Monte Carlo confidence envelopes of index curves.
//! * [`io`] parses and writes the CSV / JSON artifacts used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod copula;
pub mod entropy_index;
pub mod envelope;
mod error;
pub mod extremal;
pub mod io;
pub mod matrix;
pub mod model_fit;
pub mod optim;
pub mod pseudo_obs;
pub mod rng;
pub mod special;

pub use copula::{CopulaSpec, CorrelationMatrix, SimBatch};
pub use entropy_index::{CellDistribution, IndexCurve, IndexKind, Threshold, ThresholdGrid};
pub use envelope::{EnvelopeBand, EnvelopeOptions};
pub use error::{Error, ErrorKind, Result};
pub use extremal::{ExtremalCoefficient, StudentArgument, StudentDispersion};
pub use model_fit::{FittedCopula, GarchFit};
pub use pseudo_obs::{PseudoSample, RawSample, TieRule};
