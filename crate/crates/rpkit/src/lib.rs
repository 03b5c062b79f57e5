//! File formats, parallel execution, reports and the command line around
//! [`rpkit_core`].
//!
//! * [`io`]: transaction CSV, JSON-lines results and per-draw files.
//! * [`covariates`]: covariate CSV, categorical schema and the regression join.
//! * [`runner`]: household-parallel estimation and ω-parallel cross-validation.
//! * [`plot`]: histogram CSV and SVG.
//! * [`report`]: text tables with significance stars.
//! * [`config`] and [`cli`]: configuration file, flags and commands.

pub mod cli;
pub mod config;
pub mod covariates;
pub mod error;
pub mod io;
pub mod plot;
pub mod report;
pub mod runner;

pub use error::{exit, CliError, Result};
pub use rpkit_core as core;
