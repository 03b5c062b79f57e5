//! The `rpkit` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rpkit_core::imputation::PoolingScope;
use rpkit_core::panel::panel_summary;
use rpkit_core::stats::{
    group_importance, ols, ols_pooled, DesignMatrix, Matrix, PooledOlsFit, RegularizedFit,
    SelectionRule,
};
use rpkit_core::synth::{
    generate_panel_with_report, SyntheticScenario, UtilityModel, DEFAULT_CES_SIGMA,
};
use serde::Serialize;

use crate::config::{Method, Model, Response, RunConfig};
use crate::covariates::{join, read_covariates, CovariateSchema};
use crate::error::{exit, CliError, Result};
use crate::io::{self, DrawRecord, HouseholdResult};
use crate::plot::histogram;
use crate::report;
use crate::runner::{cross_validate, estimate_panel, with_threads, HouseholdOutcome};

#[derive(Debug, Parser)]
#[command(
    name = "rpkit",
    version,
    about = "Revealed-preference efficiency of household purchase panels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a raw transaction CSV and summarize the panel.
    Ingest,
    /// Generate a synthetic panel with known ground truth.
    Simulate,
    /// Estimate each household's efficiency index by Monte-Carlo imputation.
    Aei,
    /// Estimate each household's transitivity-failure incidence, or read it
    /// from an `aei` results file given with `--results`.
    Rho,
    /// Regress household estimates on covariates.
    Regress,
    /// Summary and histogram of an existing results file.
    Report,
}

/// Every flag overrides the same key of the configuration file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base directory for relative input and output paths.
    #[arg(long, global = true, env = "RPKIT_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// Transaction CSV.
    #[arg(long, short, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Bisection tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    #[arg(long, global = true, value_parser = parse_pool)]
    pub pool: Option<PoolingScope>,
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Per-household results (JSON lines) for `regress` and `report`.
    #[arg(long, global = true)]
    pub results: Option<PathBuf>,
    /// Per-draw indices (JSON lines) for Rubin-pooled OLS.
    #[arg(long, global = true)]
    pub draws_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub covariates: Option<PathBuf>,
    /// TOML schema declaring categorical covariates and groups.
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<Model>,
    #[arg(long, global = true, value_enum)]
    pub response: Option<Response>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Comma-separated ω values for the sparse group lasso.
    #[arg(long, global = true, value_delimiter = ',')]
    pub omega_grid: Option<Vec<f64>>,
    /// Choose λ by the one-standard-error rule instead of the minimum.
    #[arg(long, global = true)]
    pub one_se: bool,
    /// Start from the full-scale scenario (1,664 households, 130 days,
    /// 488 goods, 30% masked, θ = 0.5); other scenario flags still apply.
    #[arg(long, global = true)]
    pub full_scale: bool,
    #[arg(long, global = true)]
    pub households: Option<usize>,
    #[arg(long, global = true)]
    pub goods: Option<usize>,
    #[arg(long, global = true)]
    pub periods: Option<usize>,
    /// Trembling-hand probability.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Probability that a good is unavailable on a day.
    #[arg(long, global = true)]
    pub mask: Option<f64>,
    /// `cobb-douglas` or `ces`.
    #[arg(long, global = true)]
    pub utility: Option<String>,
    /// CES elasticity of substitution.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
}

fn parse_pool(s: &str) -> std::result::Result<PoolingScope, String> {
    match s {
        "panel" => Ok(PoolingScope::Panel),
        "household" => Ok(PoolingScope::Household),
        _ => Err(format!("expected `panel` or `household`, got `{s}`")),
    }
}

impl Flags {
    /// Configuration file (if any) with flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(&self.path(p))?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(draws, seed, tol, method, pool, bins, threads, model, response, folds, omega_grid);
        if let Some(v) = &self.input {
            c.input = Some(v.clone());
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        for (flag, slot) in [
            (&self.results, &mut c.results),
            (&self.draws_file, &mut c.draws_file),
            (&self.covariates, &mut c.covariates),
            (&self.schema, &mut c.schema),
        ] {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
        if self.one_se {
            c.selection = SelectionRule::OneStandardError;
        }
        if self.full_scale {
            c.scenario = SyntheticScenario::full_scale(c.scenario.seed);
        }
        let s = &mut c.scenario;
        if let Some(v) = self.households {
            s.households = v;
        }
        if let Some(v) = self.goods {
            s.goods = v;
        }
        if let Some(v) = self.periods {
            s.periods = v;
        }
        if let Some(v) = self.theta {
            s.theta = v;
        }
        if let Some(v) = self.mask {
            s.mask = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        match self.utility.as_deref() {
            None => {}
            Some("cobb-douglas" | "cd") => s.utility = UtilityModel::CobbDouglas,
            Some("ces") => {
                if !matches!(s.utility, UtilityModel::Ces { .. }) {
                    s.utility = UtilityModel::Ces {
                        sigma: DEFAULT_CES_SIGMA,
                    };
                }
            }
            Some(other) => return Err(CliError::config(format!("unknown utility `{other}`"))),
        }
        if let Some(v) = self.sigma {
            match s.utility {
                UtilityModel::Ces { .. } => s.utility = UtilityModel::Ces { sigma: v },
                UtilityModel::CobbDouglas => {
                    return Err(CliError::config("--sigma needs --utility ces"))
                }
            }
        }
        c.input = c.input.map(|p| self.path(&p));
        c.out = self.path(&c.out);
        for p in [
            &mut c.results,
            &mut c.draws_file,
            &mut c.covariates,
            &mut c.schema,
        ] {
            *p = p.take().map(|p| self.path(&p));
        }
        c.validate()?;
        Ok(c)
    }

    fn path(&self, p: &Path) -> PathBuf {
        match &self.data_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::config(format!("--{flag} is required")))
}

/// Parses `args` and runs the command. Returns the text printed on success.
pub fn execute<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::config(e.to_string()))?;
    dispatch(&cli)
}

fn dispatch(cli: &Cli) -> Result<String> {
    let config = cli.flags.resolve()?;
    match cli.command {
        Command::Ingest => cmd_ingest(&config),
        Command::Simulate => cmd_simulate(&config),
        Command::Aei => cmd_aei(&config),
        Command::Rho => cmd_rho(&config),
        Command::Regress => cmd_regress(&config),
        Command::Report => cmd_report(&config),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::OK
            });
        }
    };
    let run = dispatch(&cli);
    match run {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn cmd_ingest(c: &RunConfig) -> Result<String> {
    let input = required(&c.input, "input")?;
    let (panel, cleaning) = io::ingest(input, &c.cleaning())?;
    let summary = panel_summary(&panel)?;
    io::write_panel(&panel, &c.out.join("panel.csv"))?;
    io::write_json(&c.out.join("cleaning.json"), &cleaning)?;
    io::write_json(&c.out.join("summary.json"), &summary)?;
    let text = format!(
        "{}\n{}",
        report::cleaning_report(&cleaning),
        report::panel_summary(&summary)
    );
    io::write_text(&c.out.join("summary.txt"), &text)?;
    Ok(text)
}

pub fn cmd_simulate(c: &RunConfig) -> Result<String> {
    let (panel, truth, cleaning) = generate_panel_with_report(&c.scenario)?;
    io::write_panel(&panel, &c.out.join("panel.csv"))?;
    io::write_json(&c.out.join("truth.json"), &truth)?;
    let aei: Vec<f64> = truth.households.iter().map(|h| h.garp_aei).collect();
    let mut text = report::summary_block("True AEI (complete prices)", &aei);
    writeln!(
        text,
        "{} households, {} rows, {:.4} of cells masked",
        truth.households.len(),
        cleaning.rows_kept,
        truth.masked_fraction
    )
    .unwrap();
    Ok(text)
}

fn estimate(c: &RunConfig) -> Result<Vec<HouseholdOutcome>> {
    let input = required(&c.input, "input")?;
    let (panel, _) = io::ingest(input, &c.cleaning())?;
    with_threads(c.threads, || {
        estimate_panel(&panel, c.pool, c.estimate_options())
    })?
}

fn skipped_lines(results: &[HouseholdResult]) -> String {
    let mut out = String::new();
    for r in results {
        if let Some(reason) = &r.skipped {
            writeln!(out, "skipped {}: {reason}", r.household_id).unwrap();
        }
    }
    out
}

/// Summary, histogram CSV and SVG of the ÂEI column of `results`.
fn render_aei_report(c: &RunConfig, results: &[HouseholdResult]) -> Result<String> {
    let aei: Vec<f64> = results.iter().filter_map(|r| r.aei_hat).collect();
    let rho: Vec<f64> = results.iter().filter_map(|r| r.rho_hat).collect();
    let mut text = report::summary_block("AEI-hat across households", &aei);
    if !rho.is_empty() {
        writeln!(
            text,
            "mean rho-hat {:.4}",
            rho.iter().sum::<f64>() / rho.len() as f64
        )
        .unwrap();
    }
    let stable: Vec<usize> = results
        .iter()
        .filter_map(|r| r.stabilization_draw)
        .collect();
    if !stable.is_empty() {
        let within_250 = stable.iter().filter(|s| **s <= 250).count();
        writeln!(
            text,
            "running mean stable by draw 250: {within_250} of {}",
            stable.len()
        )
        .unwrap();
    }
    let skipped = results.iter().filter(|r| r.skipped.is_some()).count();
    writeln!(
        text,
        "households estimated {}, skipped {skipped}",
        aei.len()
    )
    .unwrap();
    text.push_str(&skipped_lines(results));
    let h = histogram(&aei, c.bins, 0.0, 1.0);
    io::write_text(&c.out.join("aei_histogram.csv"), &h.to_csv())?;
    io::write_text(
        &c.out.join("aei_histogram.svg"),
        &h.to_svg("Distribution of AEI-hat", "AEI-hat"),
    )?;
    io::write_text(&c.out.join("aei_summary.txt"), &text)?;
    Ok(text)
}

pub fn cmd_aei(c: &RunConfig) -> Result<String> {
    let outcomes = estimate(c)?;
    let results: Vec<HouseholdResult> = outcomes.iter().map(HouseholdOutcome::result).collect();
    let draws: Vec<DrawRecord> = outcomes
        .iter()
        .filter_map(HouseholdOutcome::draws)
        .collect();
    io::write_jsonl(&c.out.join("aei.jsonl"), &results)?;
    io::write_jsonl(&c.out.join("draws.jsonl"), &draws)?;
    render_aei_report(c, &results)
}

#[derive(Debug, Serialize)]
struct RhoRecord<'a> {
    household_id: &'a str,
    rho_hat: Option<f64>,
    aei_hat: Option<f64>,
    warp_aei_hat: Option<f64>,
    draws: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<&'a str>,
}

pub fn cmd_rho(c: &RunConfig) -> Result<String> {
    // Each draw already carries both indices, so an `aei` results file suffices.
    let results: Vec<HouseholdResult> = match &c.results {
        Some(p) => io::read_jsonl(p)?,
        None => estimate(c)?.iter().map(HouseholdOutcome::result).collect(),
    };
    let records: Vec<RhoRecord> = results
        .iter()
        .map(|r| RhoRecord {
            household_id: &r.household_id,
            rho_hat: r.rho_hat,
            aei_hat: r.aei_hat,
            warp_aei_hat: r.warp_aei_hat,
            draws: r.draws,
            skipped: r.skipped.as_deref(),
        })
        .collect();
    io::write_jsonl(&c.out.join("rho.jsonl"), &records)?;
    let rho: Vec<f64> = results.iter().filter_map(|r| r.rho_hat).collect();
    let mut text = report::summary_block("rho-hat across households", &rho);
    let positive = rho.iter().filter(|r| **r > 0.0).count();
    writeln!(
        text,
        "households with any transitivity failure: {positive} of {}",
        rho.len()
    )
    .unwrap();
    text.push_str(&skipped_lines(&results));
    io::write_text(&c.out.join("rho_summary.txt"), &text)?;
    Ok(text)
}

pub fn cmd_report(c: &RunConfig) -> Result<String> {
    let path = required(&c.results, "results")?;
    let results: Vec<HouseholdResult> = io::read_jsonl(path)?;
    render_aei_report(c, &results)
}

#[derive(Debug, Serialize)]
struct OlsOutput<'a> {
    model: &'static str,
    response: Response,
    households: &'a [String],
    dropped_incomplete: &'a [String],
    rows: Vec<report::OlsRow>,
    fit: &'a PooledOlsFit,
}

#[derive(Debug, Serialize)]
struct PenalizedOutput<'a> {
    model: &'static str,
    response: Response,
    households: &'a [String],
    dropped_incomplete: &'a [String],
    fit: &'a RegularizedFit,
    importance: rpkit_core::stats::GroupImportance,
}

fn response_value(r: &HouseholdResult, response: Response) -> Option<f64> {
    match response {
        Response::Aei => r.aei_hat,
        Response::WarpAei => r.warp_aei_hat,
        Response::Rho => r.rho_hat,
    }
}

/// `N × M` regressand matrix from per-draw indices, rows in `ids` order.
fn draw_matrix(path: &Path, ids: &[String], response: Response) -> Result<Matrix> {
    let records: Vec<DrawRecord> = io::read_jsonl(path)?;
    let by_id: std::collections::HashMap<&str, &DrawRecord> = records
        .iter()
        .map(|r| (r.household_id.as_str(), r))
        .collect();
    let rows: Vec<&Vec<f64>> = ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .map(|r| {
                    if response == Response::WarpAei {
                        &r.warp_aei
                    } else {
                        &r.garp_aei
                    }
                })
                .ok_or_else(|| CliError::format(path, format!("no draws for household `{id}`")))
        })
        .collect::<Result<_>>()?;
    let m = rows[0].len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::format(
            path,
            "every household needs the same positive number of draws",
        ));
    }
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|d| rows.iter().map(|r| r[d]).collect())
        .collect();
    Ok(Matrix::from_columns(ids.len(), &cols)?)
}

pub fn cmd_regress(c: &RunConfig) -> Result<String> {
    let results_path = required(&c.results, "results")?;
    let cov_path = required(&c.covariates, "covariates")?;
    let results: Vec<HouseholdResult> = io::read_jsonl(results_path)?;
    let covariates = read_covariates(io::open(cov_path)?, cov_path)?;
    let schema = match &c.schema {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            CovariateSchema::from_toml(&text, p)?
        }
        None => CovariateSchema::default(),
    };
    let joined = join(&results, &covariates, &schema)?;
    let by_id: std::collections::HashMap<&str, &HouseholdResult> = results
        .iter()
        .map(|r| (r.household_id.as_str(), r))
        .collect();
    let y: Vec<f64> = joined
        .household_ids
        .iter()
        .map(|id| {
            response_value(by_id[id.as_str()], c.response).expect("joined households are estimated")
        })
        .collect();

    let stem = format!("fit_{}", c.model.name());
    let title = format!(
        "{} of {} on covariates",
        c.model.name().to_uppercase(),
        c.response.name()
    );
    let text = match c.model {
        Model::Ols => {
            let fit = match (&c.draws_file, c.response) {
                (Some(p), Response::Aei | Response::WarpAei) => ols_pooled(
                    &draw_matrix(p, &joined.household_ids, c.response)?,
                    &joined.design,
                )?,
                _ => ols(&y, &joined.design)?,
            };
            io::write_json(
                &c.out.join(format!("{stem}.json")),
                &OlsOutput {
                    model: c.model.name(),
                    response: c.response,
                    households: &joined.household_ids,
                    dropped_incomplete: &joined.dropped_incomplete,
                    rows: report::ols_rows(&fit),
                    fit: &fit,
                },
            )?;
            report::ols_table(&title, &fit)
        }
        Model::Lasso | Model::Gl | Model::Sgl => {
            let design: DesignMatrix = joined.design.standardize()?;
            let omega = match c.model {
                Model::Lasso => vec![1.0],
                Model::Gl => vec![0.0],
                _ => c.omega_grid.clone(),
            };
            let fit = with_threads(c.threads, || {
                cross_validate(&design, &y, &omega, &c.cv_options())
            })??;
            let importance = group_importance(&fit);
            io::write_json(
                &c.out.join(format!("{stem}.json")),
                &PenalizedOutput {
                    model: c.model.name(),
                    response: c.response,
                    households: &joined.household_ids,
                    dropped_incomplete: &joined.dropped_incomplete,
                    fit: &fit,
                    importance: importance.clone(),
                },
            )?;
            format!(
                "{}\n{}",
                report::penalized_table(&title, &fit),
                report::importance_table(&importance)
            )
        }
    };
    let mut text = text;
    if !joined.dropped_incomplete.is_empty() {
        writeln!(
            text,
            "dropped for incomplete covariates: {}",
            joined.dropped_incomplete.join(", ")
        )
        .unwrap();
    }
    io::write_text(&c.out.join(format!("{stem}.txt")), &text)?;
    Ok(text)
}
