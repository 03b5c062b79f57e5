//! Parallel execution over households and over the ω grid.
//!
//! Work items are independent and results are collected in input order, so
//! the output never depends on the thread count.

use rayon::prelude::*;
use rpkit_core::imputation::{
    build_price_distributions, convergence_diagnostic, EstimateOptions, Estimator,
    MonteCarloEstimate, PoolingScope,
};
use rpkit_core::panel::TransactionPanel;
use rpkit_core::stats::cv::{cv_path, refit, select};
use rpkit_core::stats::{CvOptions, DesignMatrix, RegularizedFit};
use rpkit_core::Error;

use crate::error::{CliError, Result};
use crate::io::{DrawRecord, HouseholdResult};

/// Runs `f` on a pool of `threads` workers; 0 means one per core.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Result for one household: the estimate, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdOutcome {
    pub household_id: String,
    pub days: usize,
    pub outcome: Result<MonteCarloEstimate, String>,
}

impl HouseholdOutcome {
    pub fn result(&self) -> HouseholdResult {
        match &self.outcome {
            Ok(est) => {
                let trace = convergence_diagnostic(est).ok();
                HouseholdResult::estimated(self.days, est, trace.as_ref())
            }
            Err(reason) => HouseholdResult::skipped(&self.household_id, self.days, reason.clone()),
        }
    }

    pub fn draws(&self) -> Option<DrawRecord> {
        self.outcome.as_ref().ok().map(|est| DrawRecord {
            household_id: est.household_id.clone(),
            garp_aei: est.garp_aei.clone(),
            warp_aei: est.warp_aei.clone(),
        })
    }
}

/// Estimates every household of the panel, in household-id order.
/// Households whose items cannot be priced are skipped with the reason.
pub fn estimate_panel(
    panel: &TransactionPanel,
    scope: PoolingScope,
    options: EstimateOptions,
) -> Result<Vec<HouseholdOutcome>> {
    let dists = build_price_distributions(panel, scope)?;
    let households: Vec<_> = panel.households.values().collect();
    households
        .par_iter()
        .map(|hh| {
            let outcome = match Estimator::new(hh, &dists, options) {
                Ok(est) => Ok(est.run()),
                Err(e @ Error::UnpriceableItems { .. }) => Err(e.to_string()),
                Err(e) => return Err(CliError::from(e)),
            };
            Ok(HouseholdOutcome {
                household_id: hh.household_id.clone(),
                days: hh.len(),
                outcome,
            })
        })
        .collect()
}

/// Cross-validation with the ω grid evaluated in parallel. Identical to the
/// sequential selection in the core crate.
pub fn cross_validate(
    design: &DesignMatrix,
    y: &[f64],
    omega_grid: &[f64],
    options: &CvOptions,
) -> Result<RegularizedFit> {
    if omega_grid.is_empty() {
        return Err(CliError::config("the omega grid is empty"));
    }
    let paths = omega_grid
        .par_iter()
        .map(|&w| cv_path(design, y, w, options))
        .collect::<rpkit_core::Result<Vec<_>>>()?;
    let best = select(&paths, options.rule, options.folds)
        .ok_or_else(|| CliError::config("empty cross-validation path"))?;
    Ok(refit(design, y, best, options, paths)?)
}
