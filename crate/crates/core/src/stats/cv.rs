//! K-fold cross-validation over a log-spaced λ grid and an ω grid.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::linalg::{mean, Matrix};
use super::penalized::{
    assemble_fit, check_inputs, full_problem, Problem, RegularizedFit, SolveStats,
};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_LAMBDA_COUNT: usize = 100;
pub const DEFAULT_LAMBDA_MIN_RATIO: f64 = 1e-4;

/// ω ∈ {0.05, 0.10, …, 0.95}.
pub fn default_omega_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

/// How the grid point is chosen from the cross-validation curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Smallest mean held-out error.
    #[default]
    Min,
    /// Largest λ, at the ω of the minimum, whose mean error is within one
    /// standard error of the minimum.
    OneStandardError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub lambda_count: usize,
    pub lambda_min_ratio: f64,
    pub rule: SelectionRule,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: DEFAULT_FOLDS,
            seed: 0,
            lambda_count: DEFAULT_LAMBDA_COUNT,
            lambda_min_ratio: DEFAULT_LAMBDA_MIN_RATIO,
            rule: SelectionRule::Min,
        }
    }
}

impl CvOptions {
    pub fn validate(&self, rows: usize) -> Result<()> {
        if self.folds < 2 || self.folds > rows {
            return Err(Error::param(
                "folds must lie between 2 and the number of rows",
            ));
        }
        if self.lambda_count < 1 {
            return Err(Error::param("the λ grid needs at least one point"));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::param("λ min ratio must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Mean and spread of the held-out error at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvPoint {
    pub lambda: f64,
    pub omega: f64,
    pub mean_mse: f64,
    pub sd_mse: f64,
}

/// `count` points from `lambda_max` down to `lambda_max · min_ratio`, evenly spaced in logs.
pub fn lambda_grid(lambda_max: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    if count == 1 {
        return vec![lambda_max];
    }
    (0..count)
        .map(|i| lambda_max * libm::pow(min_ratio, i as f64 / (count - 1) as f64))
        .collect()
}

/// Fold of every row: a seeded shuffle dealt round-robin.
pub fn fold_assignment(rows: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut rng::stream(seed, "cv-folds", rows as u64));
    let mut fold = vec![0; rows];
    for (k, i) in order.into_iter().enumerate() {
        fold[i] = k % folds;
    }
    fold
}

fn path_mse(
    design: &DesignMatrix,
    y: &[f64],
    train: &[usize],
    test: &[usize],
    grid: &[f64],
    omega: f64,
) -> Vec<f64> {
    let x = design.matrix().select_rows(train);
    let means: Vec<f64> = (0..x.cols()).map(|j| mean(x.col(j))).collect();
    let mut xc = x;
    for (j, m) in means.iter().enumerate() {
        xc.col_mut(j).iter_mut().for_each(|v| *v -= m);
    }
    let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let ybar = mean(&ytr);
    let yc: Vec<f64> = ytr.iter().map(|v| v - ybar).collect();
    let problem = Problem::new(&xc, &yc, design.groups(), design.group_names().len());
    let xt = design.matrix().select_rows(test);
    let (mut delta, mut q) = problem.zeros();
    grid.iter()
        .map(|&lambda| {
            problem.solve(lambda, omega, &mut delta, &mut q);
            held_out_mse(&xt, test.iter().map(|&i| y[i]), &means, ybar, &delta)
        })
        .collect()
}

fn held_out_mse(
    xt: &Matrix,
    y: impl Iterator<Item = f64>,
    means: &[f64],
    ybar: f64,
    delta: &[f64],
) -> f64 {
    let shift: f64 = means.iter().zip(delta).map(|(m, d)| m * d).sum();
    let pred = xt.mul_vec(delta);
    let mut sse = 0.0;
    let mut n = 0usize;
    for (yi, pi) in y.zip(pred) {
        let r = yi - (ybar - shift + pi);
        sse += r * r;
        n += 1;
    }
    sse / n as f64
}

/// Cross-validated error along the λ grid at a fixed ω.
pub fn cv_path(
    design: &DesignMatrix,
    y: &[f64],
    omega: f64,
    options: &CvOptions,
) -> Result<Vec<CvPoint>> {
    check_inputs(design, y, 0.0, omega)?;
    options.validate(design.rows())?;
    let (problem, _) = full_problem(design, y);
    let grid = lambda_grid(
        problem.lambda_max(omega),
        options.lambda_count,
        options.lambda_min_ratio,
    );
    let fold = fold_assignment(design.rows(), options.folds, options.seed);
    let per_fold: Vec<Vec<f64>> = (0..options.folds)
        .map(|k| {
            let train: Vec<usize> = (0..fold.len()).filter(|&i| fold[i] != k).collect();
            let test: Vec<usize> = (0..fold.len()).filter(|&i| fold[i] == k).collect();
            path_mse(design, y, &train, &test, &grid, omega)
        })
        .collect();
    let k = options.folds as f64;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let m = per_fold.iter().map(|f| f[i]).sum::<f64>() / k;
            let var = per_fold
                .iter()
                .map(|f| (f[i] - m) * (f[i] - m))
                .sum::<f64>()
                / (k - 1.0);
            CvPoint {
                lambda,
                omega,
                mean_mse: m,
                sd_mse: libm::sqrt(var),
            }
        })
        .collect())
}

/// Selected grid point. Under [`SelectionRule::Min`] ties go to the earlier
/// point (larger λ, then smaller ω in grid order). `folds` converts the fold
/// spread into a standard error.
pub fn select(paths: &[Vec<CvPoint>], rule: SelectionRule, folds: usize) -> Option<CvPoint> {
    let best = paths
        .iter()
        .flatten()
        .fold(None, |best: Option<CvPoint>, p| match best {
            Some(b) if b.mean_mse <= p.mean_mse => Some(b),
            _ => Some(*p),
        })?;
    match rule {
        SelectionRule::Min => Some(best),
        SelectionRule::OneStandardError => {
            let bound = best.mean_mse + best.sd_mse / libm::sqrt(folds as f64);
            paths
                .iter()
                .flatten()
                .filter(|p| p.omega == best.omega && p.mean_mse <= bound)
                .max_by(|a, b| a.lambda.total_cmp(&b.lambda))
                .copied()
        }
    }
}

/// Full-data fit at a selected grid point, warm-started down the λ grid.
pub fn refit(
    design: &DesignMatrix,
    y: &[f64],
    point: CvPoint,
    options: &CvOptions,
    paths: Vec<Vec<CvPoint>>,
) -> Result<RegularizedFit> {
    check_inputs(design, y, point.lambda, point.omega)?;
    let (problem, ybar) = full_problem(design, y);
    let grid = lambda_grid(
        problem.lambda_max(point.omega),
        options.lambda_count,
        options.lambda_min_ratio,
    );
    let (mut delta, mut q) = problem.zeros();
    let mut stats = SolveStats::default();
    for &lambda in grid.iter().filter(|l| **l > point.lambda) {
        problem.solve(lambda, point.omega, &mut delta, &mut q);
    }
    let last = problem.solve(point.lambda, point.omega, &mut delta, &mut q);
    stats.sweeps = last.sweeps;
    stats.history = last.history;
    let mut fit = assemble_fit(
        design,
        &problem,
        ybar,
        delta,
        point.lambda,
        point.omega,
        stats,
    );
    fit.cv_path = paths.into_iter().flatten().collect();
    Ok(fit)
}

/// Selects λ (and ω from `omega_grid`) by K-fold cross-validation, then refits on all rows.
pub fn cross_validate(
    design: &DesignMatrix,
    y: &[f64],
    omega_grid: &[f64],
    options: &CvOptions,
) -> Result<RegularizedFit> {
    if omega_grid.is_empty() {
        return Err(Error::param("the ω grid is empty"));
    }
    let paths = omega_grid
        .iter()
        .map(|&w| cv_path(design, y, w, options))
        .collect::<Result<Vec<_>>>()?;
    let best = select(&paths, options.rule, options.folds)
        .ok_or_else(|| Error::param("empty cross-validation path"))?;
    refit(design, y, best, options, paths)
}

pub fn cv_lasso(design: &DesignMatrix, y: &[f64], options: &CvOptions) -> Result<RegularizedFit> {
    cross_validate(design, y, &[1.0], options)
}

pub fn cv_group_lasso(
    design: &DesignMatrix,
    y: &[f64],
    options: &CvOptions,
) -> Result<RegularizedFit> {
    cross_validate(design, y, &[0.0], options)
}

pub fn cv_sparse_group_lasso(
    design: &DesignMatrix,
    y: &[f64],
    omega_grid: &[f64],
    options: &CvOptions,
) -> Result<RegularizedFit> {
    cross_validate(design, y, omega_grid, options)
}
