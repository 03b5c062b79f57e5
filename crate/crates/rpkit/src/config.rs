//! Run configuration: defaults, optional TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use rpkit_core::imputation::{EstimateOptions, PoolingScope, DEFAULT_DRAWS};
use rpkit_core::panel::{CleaningConfig, EXPENDITURE_FLOOR_DKK};
use rpkit_core::revpref::AeiMethod;
use rpkit_core::stats::cv::{
    default_omega_grid, DEFAULT_FOLDS, DEFAULT_LAMBDA_COUNT, DEFAULT_LAMBDA_MIN_RATIO,
};
use rpkit_core::stats::{CvOptions, SelectionRule};
use rpkit_core::synth::SyntheticScenario;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::plot::DEFAULT_BINS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Exact,
    Bisect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Ols,
    Lasso,
    Gl,
    Sgl,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Ols => "ols",
            Model::Lasso => "lasso",
            Model::Gl => "gl",
            Model::Sgl => "sgl",
        }
    }
}

/// Regressand of `regress`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Response {
    #[default]
    Aei,
    WarpAei,
    Rho,
}

impl Response {
    pub fn name(self) -> &'static str {
        match self {
            Response::Aei => "AEI-hat",
            Response::WarpAei => "WARP AEI-hat",
            Response::Rho => "rho-hat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub draws: usize,
    pub seed: u64,
    /// Bisection tolerance.
    pub tol: f64,
    pub method: Method,
    pub pool: PoolingScope,
    pub expenditure_floor: f64,
    pub bins: usize,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub results: Option<PathBuf>,
    pub draws_file: Option<PathBuf>,
    pub covariates: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub model: Model,
    pub response: Response,
    pub folds: usize,
    pub omega_grid: Vec<f64>,
    pub lambda_count: usize,
    pub lambda_min_ratio: f64,
    pub selection: SelectionRule,
    pub scenario: SyntheticScenario,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            out: PathBuf::from("."),
            draws: DEFAULT_DRAWS,
            seed: 0,
            tol: 1e-6,
            method: Method::Exact,
            pool: PoolingScope::Panel,
            expenditure_floor: EXPENDITURE_FLOOR_DKK,
            bins: DEFAULT_BINS,
            threads: 0,
            results: None,
            draws_file: None,
            covariates: None,
            schema: None,
            model: Model::Ols,
            response: Response::Aei,
            folds: DEFAULT_FOLDS,
            omega_grid: default_omega_grid(),
            lambda_count: DEFAULT_LAMBDA_COUNT,
            lambda_min_ratio: DEFAULT_LAMBDA_MIN_RATIO,
            selection: SelectionRule::Min,
            scenario: SyntheticScenario::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::format(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::config(m));
        if self.draws == 0 {
            return bad("draws must be at least 1");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol must lie in (0, 1)");
        }
        if !(self.expenditure_floor >= 0.0 && self.expenditure_floor.is_finite()) {
            return bad("expenditure floor must be non-negative");
        }
        if self.bins == 0 {
            return bad("bins must be at least 1");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.omega_grid.is_empty() || self.omega_grid.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return bad("omega grid must be non-empty with values in [0, 1]");
        }
        if self.lambda_count == 0 {
            return bad("lambda count must be at least 1");
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return bad("lambda min ratio must lie in (0, 1)");
        }
        self.scenario
            .validate()
            .map_err(|e| CliError::config(format!("scenario: {e}")))
    }

    pub fn aei_method(&self) -> AeiMethod {
        match self.method {
            Method::Exact => AeiMethod::Exact,
            Method::Bisect => AeiMethod::Bisection { tol: self.tol },
        }
    }

    pub fn estimate_options(&self) -> EstimateOptions {
        EstimateOptions {
            draws: self.draws,
            seed: self.seed,
            method: self.aei_method(),
        }
    }

    pub fn cleaning(&self) -> CleaningConfig {
        CleaningConfig {
            expenditure_floor: self.expenditure_floor,
        }
    }

    pub fn cv_options(&self) -> CvOptions {
        CvOptions {
            folds: self.folds,
            seed: self.seed,
            lambda_count: self.lambda_count,
            lambda_min_ratio: self.lambda_min_ratio,
            rule: self.selection,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_defaults() {
        let text = r#"
            draws = 250
            method = "bisect"
            tol = 1e-4
            pool = "household"
            omega_grid = [0.25, 0.5]
            selection = "one_standard_error"

            [scenario]
            households = 7
            theta = 0.1
            utility = { kind = "ces", sigma = 2.0 }
        "#;
        let c = RunConfig::from_toml(text, Path::new("c.toml")).unwrap();
        assert_eq!(c.draws, 250);
        assert_eq!(c.aei_method(), AeiMethod::Bisection { tol: 1e-4 });
        assert_eq!(c.pool, PoolingScope::Household);
        assert_eq!(c.omega_grid, vec![0.25, 0.5]);
        assert_eq!(c.selection, SelectionRule::OneStandardError);
        assert_eq!(c.scenario.households, 7);
        assert_eq!(c.scenario.goods, SyntheticScenario::default().goods);
        assert_eq!(c.bins, 30);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_settings_are_rejected() {
        assert!(RunConfig::from_toml("drawz = 3", Path::new("c.toml")).is_err());
        for c in [
            RunConfig {
                draws: 0,
                ..RunConfig::default()
            },
            RunConfig {
                tol: 0.0,
                ..RunConfig::default()
            },
            RunConfig {
                bins: 0,
                ..RunConfig::default()
            },
            RunConfig {
                folds: 1,
                ..RunConfig::default()
            },
            RunConfig {
                omega_grid: vec![1.5],
                ..RunConfig::default()
            },
        ] {
            assert!(matches!(c.validate(), Err(CliError::Config(_))));
        }
    }
}
