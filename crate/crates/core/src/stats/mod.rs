//! Regression of decision-quality estimates on covariates, and scale
//! reliability.
//!
//! * [`ols_pooled`]: OLS on every imputation draw of the regressand, combined
//!   by Rubin's rules.
//! * [`lasso`], [`group_lasso`], [`sparse_group_lasso`]: penalized least
//!   squares on standardized covariates, with K-fold cross-validation in [`cv`].
//! * [`group_importance`]: each group's share of the total coefficient norm.
//! * [`cronbach_alpha`]: internal consistency of a multi-item scale.

mod cronbach;
pub mod cv;
mod design;
mod importance;
mod linalg;
mod ols;
mod penalized;

pub use cronbach::cronbach_alpha;
pub use cv::{cv_group_lasso, cv_lasso, cv_sparse_group_lasso, CvOptions, CvPoint, SelectionRule};
pub use design::{
    default_reference, one_hot, unstandardize, DesignMatrix, Standardization,
    DEFAULT_REFERENCE_LEVELS,
};
pub use importance::{group_importance, GroupImportance, GroupImportanceRow};
pub use linalg::Matrix;
pub use ols::{ols, ols_pooled, PooledOlsFit, INTERCEPT_NAME};
pub use penalized::{
    group_lasso, kkt_residual, lambda_max, lasso, sparse_group_lasso, Penalty, RegularizedFit,
    CD_TOLERANCE, KKT_TOLERANCE,
};
