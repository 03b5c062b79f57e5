//! Lasso, Group Lasso and Sparse Group Lasso by block coordinate descent.
//!
//! All three minimize
//!
//! ```text
//! (1/2N) ‖y − α − Wδ‖² + λ [ ω ‖δ‖₁ + (1 − ω) Σ_g ‖δ_g‖₂ ]
//! ```
//!
//! with the intercept unpenalized: ω = 1 is the Lasso and ω = 0 the Group
//! Lasso. Updates work on the Gram matrix `W'W/N`, so a sweep costs `O(p²)`
//! regardless of `N`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::design::{unstandardize, DesignMatrix};
use super::linalg::{dot, largest_eigenvalue, mean, Matrix};
use crate::error::{Error, Result};

/// Coordinate descent stops once no coefficient moves by more than this in a sweep.
pub const CD_TOLERANCE: f64 = 1e-8;

/// Tolerance for subgradient optimality checks.
pub const KKT_TOLERANCE: f64 = 1e-6;

const MAX_SWEEPS: usize = 100_000;
const INNER_TOLERANCE: f64 = 1e-13;
const MAX_INNER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    Lasso,
    GroupLasso,
    SparseGroupLasso,
}

impl Penalty {
    /// Mixing parameter implied by the penalty, if fixed.
    pub fn fixed_omega(self) -> Option<f64> {
        match self {
            Penalty::Lasso => Some(1.0),
            Penalty::GroupLasso => Some(0.0),
            Penalty::SparseGroupLasso => None,
        }
    }
}

#[inline]
fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    libm::sqrt(v.map(|x| x * x).sum())
}

/// A centered least-squares problem in Gram form.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    p: usize,
    gram: Vec<f64>,
    xty: Vec<f64>,
    yy: f64,
    groups: Vec<Vec<usize>>,
    lipschitz: Vec<f64>,
}

/// Outcome of one solve.
#[derive(Debug, Clone, Default)]
pub(crate) struct SolveStats {
    pub sweeps: usize,
    pub history: Vec<f64>,
}

impl Problem {
    /// `x` and `y` must already be centered.
    pub fn new(x: &Matrix, y: &[f64], group_of: &[usize], n_groups: usize) -> Self {
        let n = x.rows() as f64;
        let p = x.cols();
        let gram = x.gram(n);
        let mut groups = vec![Vec::new(); n_groups];
        for (j, g) in group_of.iter().enumerate() {
            groups[*g].push(j);
        }
        let lipschitz = groups
            .iter()
            .map(|cols| {
                let k = cols.len();
                let mut sub = vec![0.0; k * k];
                for (a, &i) in cols.iter().enumerate() {
                    for (b, &j) in cols.iter().enumerate() {
                        sub[a * k + b] = gram[i * p + j];
                    }
                }
                largest_eigenvalue(&sub, k) * (1.0 + 1e-9)
            })
            .collect();
        Problem {
            p,
            gram,
            xty: x.xty(y, n),
            yy: dot(y, y) / n,
            groups,
            lipschitz,
        }
    }

    pub fn zeros(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; self.p], vec![0.0; self.p])
    }

    /// `q = G δ`.
    pub fn gram_times(&self, delta: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|i| dot(&self.gram[i * self.p..(i + 1) * self.p], delta))
            .collect()
    }

    #[inline]
    fn shift(&self, q: &mut [f64], j: usize, change: f64) {
        let p = self.p;
        for (qi, i) in q.iter_mut().zip(0..p) {
            *qi += self.gram[i * p + j] * change;
        }
    }

    /// Smallest λ at which δ = 0 is optimal.
    pub fn lambda_max(&self, omega: f64) -> f64 {
        self.groups
            .iter()
            .map(|cols| {
                let c: Vec<f64> = cols.iter().map(|&j| self.xty[j]).collect();
                let linf = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if cols.len() == 1 || omega >= 1.0 {
                    return linf;
                }
                let l2 = norm(c.iter().copied());
                if omega <= 0.0 {
                    return l2;
                }
                // f(λ) = ‖S(c, λω)‖ − λ(1−ω) is decreasing; find its root.
                let f = |l: f64| norm(c.iter().map(|v| soft(*v, l * omega))) - l * (1.0 - omega);
                let (mut lo, mut hi) = (0.0, (linf / omega).min(l2 / (1.0 - omega)));
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            })
            .fold(0.0, f64::max)
    }

    pub fn penalty(&self, delta: &[f64], lambda: f64, omega: f64) -> f64 {
        let l1: f64 = delta.iter().map(|d| d.abs()).sum();
        let group: f64 = self
            .groups
            .iter()
            .map(|cols| norm(cols.iter().map(|&j| delta[j])))
            .sum();
        lambda * (omega * l1 + (1.0 - omega) * group)
    }

    pub fn objective(&self, delta: &[f64], q: &[f64], lambda: f64, omega: f64) -> f64 {
        0.5 * self.yy - dot(&self.xty, delta)
            + 0.5 * dot(delta, q)
            + self.penalty(delta, lambda, omega)
    }

    /// Block coordinate descent from the warm start `(delta, q = Gδ)`.
    pub fn solve(&self, lambda: f64, omega: f64, delta: &mut [f64], q: &mut [f64]) -> SolveStats {
        let p = self.p;
        let mut stats = SolveStats::default();
        let mut u = Vec::new();
        let mut s = Vec::new();
        loop {
            let mut max_change: f64 = 0.0;
            for (g, cols) in self.groups.iter().enumerate() {
                if cols.len() == 1 || omega >= 1.0 {
                    for &j in cols {
                        let gjj = self.gram[j * p + j];
                        if gjj <= 0.0 {
                            continue;
                        }
                        let z = self.xty[j] - q[j] + gjj * delta[j];
                        let new = soft(z, lambda) / gjj;
                        let change = new - delta[j];
                        if change != 0.0 {
                            delta[j] = new;
                            self.shift(q, j, change);
                            max_change = max_change.max(change.abs());
                        }
                    }
                    continue;
                }
                // Correlation of each column with the partial residual that excludes the group.
                u.clear();
                u.extend(cols.iter().map(|&j| {
                    self.xty[j] - q[j]
                        + cols
                            .iter()
                            .map(|&k| self.gram[j * p + k] * delta[k])
                            .sum::<f64>()
                }));
                if norm(u.iter().map(|v| soft(*v, lambda * omega))) <= lambda * (1.0 - omega) {
                    for &j in cols {
                        let change = -delta[j];
                        if change != 0.0 {
                            delta[j] = 0.0;
                            self.shift(q, j, change);
                            max_change = max_change.max(change.abs());
                        }
                    }
                    continue;
                }
                let step = 1.0 / self.lipschitz[g];
                for _ in 0..MAX_INNER {
                    s.clear();
                    s.extend(cols.iter().map(|&j| {
                        soft(
                            delta[j] + step * (self.xty[j] - q[j]),
                            step * lambda * omega,
                        )
                    }));
                    let ns = norm(s.iter().copied());
                    let factor = if ns > 0.0 {
                        (1.0 - step * lambda * (1.0 - omega) / ns).max(0.0)
                    } else {
                        0.0
                    };
                    let mut inner: f64 = 0.0;
                    for (&j, sj) in cols.iter().zip(&s) {
                        let change = factor * sj - delta[j];
                        if change != 0.0 {
                            delta[j] += change;
                            self.shift(q, j, change);
                            inner = inner.max(change.abs());
                        }
                    }
                    max_change = max_change.max(inner);
                    if inner < INNER_TOLERANCE {
                        break;
                    }
                }
            }
            stats.sweeps += 1;
            stats.history.push(self.objective(delta, q, lambda, omega));
            if max_change < CD_TOLERANCE || stats.sweeps >= MAX_SWEEPS {
                return stats;
            }
        }
    }

    /// Largest violation of the subgradient optimality conditions.
    pub fn kkt_residual(&self, delta: &[f64], lambda: f64, omega: f64) -> f64 {
        let q = self.gram_times(delta);
        let grad: Vec<f64> = self.xty.iter().zip(&q).map(|(c, q)| c - q).collect();
        let mut worst: f64 = 0.0;
        for cols in &self.groups {
            let nrm = norm(cols.iter().map(|&j| delta[j]));
            if nrm == 0.0 {
                let shrunk = norm(cols.iter().map(|&j| soft(grad[j], lambda * omega)));
                worst = worst.max(shrunk - lambda * (1.0 - omega));
                continue;
            }
            for &j in cols {
                let group_term = lambda * (1.0 - omega) * delta[j] / nrm;
                let v = if delta[j] != 0.0 {
                    (grad[j] - group_term - lambda * omega * delta[j].signum()).abs()
                } else {
                    (grad[j] - group_term).abs() - lambda * omega
                };
                worst = worst.max(v);
            }
        }
        worst.max(0.0)
    }
}

/// A penalized fit on standardized covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizedFit {
    pub penalty: Penalty,
    pub names: Vec<String>,
    pub group_names: Vec<String>,
    /// Group index of each coefficient.
    pub groups: Vec<usize>,
    pub intercept: f64,
    /// Coefficients on the standardized scale.
    pub coefficients: Vec<f64>,
    /// Intercept and coefficients on the original covariate scale, when the
    /// design carries its standardization.
    pub original_intercept: Option<f64>,
    pub original_coefficients: Option<Vec<f64>>,
    pub lambda: f64,
    pub omega: f64,
    pub lambda_max: f64,
    pub cv_path: Vec<super::cv::CvPoint>,
    pub active: Vec<usize>,
    pub group_norms: Vec<f64>,
    pub objective: f64,
    pub objective_history: Vec<f64>,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

impl RegularizedFit {
    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn active_groups(&self) -> Vec<usize> {
        (0..self.group_names.len())
            .filter(|g| self.group_norms[*g] > 0.0)
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.mul_vec(&self.coefficients)
            .into_iter()
            .map(|v| v + self.intercept)
            .collect()
    }
}

pub(crate) fn check_inputs(
    design: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    omega: f64,
) -> Result<()> {
    if design.cols() == 0 {
        return Err(Error::param("design matrix has no columns"));
    }
    if y.len() != design.rows() {
        return Err(Error::param(
            "response and design have different row counts",
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("response contains non-finite values"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("λ must be finite and non-negative"));
    }
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::param("ω must lie in [0, 1]"));
    }
    design.ensure_standardized()
}

pub(crate) fn full_problem(design: &DesignMatrix, y: &[f64]) -> (Problem, f64) {
    let ybar = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    (
        Problem::new(
            design.matrix(),
            &yc,
            design.groups(),
            design.group_names().len(),
        ),
        ybar,
    )
}

pub(crate) fn penalty_for(omega: f64) -> Penalty {
    if omega >= 1.0 {
        Penalty::Lasso
    } else if omega <= 0.0 {
        Penalty::GroupLasso
    } else {
        Penalty::SparseGroupLasso
    }
}

pub(crate) fn assemble_fit(
    design: &DesignMatrix,
    problem: &Problem,
    ybar: f64,
    delta: Vec<f64>,
    lambda: f64,
    omega: f64,
    stats: SolveStats,
) -> RegularizedFit {
    let q = problem.gram_times(&delta);
    let group_norms: Vec<f64> = (0..design.group_names().len())
        .map(|g| norm(design.group_columns(g).into_iter().map(|j| delta[j])))
        .collect();
    let (original_intercept, original_coefficients) = match design.standardization() {
        Some(s) => {
            let (a, b) = unstandardize(ybar, &delta, s);
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    RegularizedFit {
        penalty: penalty_for(omega),
        names: design.names().to_vec(),
        group_names: design.group_names().to_vec(),
        groups: design.groups().to_vec(),
        intercept: ybar,
        active: (0..delta.len()).filter(|j| delta[*j] != 0.0).collect(),
        group_norms,
        objective: problem.objective(&delta, &q, lambda, omega),
        objective_history: stats.history,
        sweeps: stats.sweeps,
        kkt_residual: problem.kkt_residual(&delta, lambda, omega),
        lambda_max: problem.lambda_max(omega),
        cv_path: Vec::new(),
        original_intercept,
        original_coefficients,
        coefficients: delta,
        lambda,
        omega,
    }
}

/// Fits at a single `(λ, ω)` on a standardized design.
pub fn sparse_group_lasso(
    design: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    omega: f64,
) -> Result<RegularizedFit> {
    check_inputs(design, y, lambda, omega)?;
    let (problem, ybar) = full_problem(design, y);
    let (mut delta, mut q) = problem.zeros();
    let stats = problem.solve(lambda, omega, &mut delta, &mut q);
    Ok(assemble_fit(
        design, &problem, ybar, delta, lambda, omega, stats,
    ))
}

pub fn lasso(design: &DesignMatrix, y: &[f64], lambda: f64) -> Result<RegularizedFit> {
    sparse_group_lasso(design, y, lambda, 1.0)
}

pub fn group_lasso(design: &DesignMatrix, y: &[f64], lambda: f64) -> Result<RegularizedFit> {
    sparse_group_lasso(design, y, lambda, 0.0)
}

/// Smallest λ that zeroes every coefficient at mixing parameter `omega`.
pub fn lambda_max(design: &DesignMatrix, y: &[f64], omega: f64) -> Result<f64> {
    check_inputs(design, y, 0.0, omega)?;
    Ok(full_problem(design, y).0.lambda_max(omega))
}

/// Subgradient-condition violation of arbitrary coefficients.
pub fn kkt_residual(
    design: &DesignMatrix,
    y: &[f64],
    coefficients: &[f64],
    lambda: f64,
    omega: f64,
) -> Result<f64> {
    check_inputs(design, y, lambda, omega)?;
    if coefficients.len() != design.cols() {
        return Err(Error::param("one coefficient per column is required"));
    }
    Ok(full_problem(design, y)
        .0
        .kkt_residual(coefficients, lambda, omega))
}
