//! Revealed-preference measurement of decision-making quality in SKU-level
//! consumer panels.
//!
//! The crate is `no_std` and only needs an allocator. It covers:
//!
//! * [`panel`]: cleaning raw purchase rows into per-household daily series.
//! * [`revpref`]: cross-expenditure matrices, WARP/GARP at an efficiency
//!   level, and the Afriat efficiency index.
//! * [`imputation`]: Monte-Carlo resampling of missing prices and the
//!   transitivity-failure incidence.
//! * [`synth`]: synthetic panels with known ground truth and brute-force
//!   oracles.
//! * [`stats`]: OLS with multiple-imputation pooling, Lasso, Group Lasso,
//!   Sparse Group Lasso, group importance and Cronbach's alpha.
//!
//! IO, parallel execution and the command line live in the `rpkit` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod bitmat;
mod error;
pub mod imputation;
pub mod panel;
pub mod revpref;
pub mod rng;
pub mod stats;
pub mod synth;

pub use bitmat::BitMatrix;
pub use error::{Error, Result};
