use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use super::linalg::{mean, Matrix};
use crate::error::{Error, Result};

/// Reference levels for the categorical covariates of the decision-quality
/// regressions: the omitted category of each.
pub const DEFAULT_REFERENCE_LEVELS: &[(&str, &str)] = &[
    ("age", "35-49"),
    ("income", "<250K"),
    ("employment", "full-time"),
    ("education", "no further education"),
];

/// Per-column centering and scaling (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Covariates `W` with column names and a partition of the columns into groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignMatrix {
    x: Matrix,
    names: Vec<String>,
    group_of: Vec<usize>,
    group_names: Vec<String>,
    standardization: Option<Standardization>,
}

fn population_sd(x: &[f64], m: f64) -> f64 {
    libm::sqrt(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64)
}

impl DesignMatrix {
    /// Each column forms its own group.
    pub fn new(x: Matrix, names: Vec<String>) -> Result<Self> {
        let groups = names.clone();
        Self::with_groups(x, names, groups)
    }

    /// `groups[j]` names the group of column `j`; groups are numbered in
    /// order of first appearance.
    pub fn with_groups(x: Matrix, names: Vec<String>, groups: Vec<String>) -> Result<Self> {
        if names.len() != x.cols() || groups.len() != x.cols() {
            return Err(Error::param(
                "one name and one group per column are required",
            ));
        }
        if x.rows() == 0 {
            return Err(Error::param("design matrix has no rows"));
        }
        if names.iter().collect::<BTreeSet<_>>().len() != names.len() {
            return Err(Error::param("column names must be unique"));
        }
        if let Some(name) = groups.iter().find(|g| g.is_empty()) {
            return Err(Error::EmptyGroup(name.clone()));
        }
        let mut group_names: Vec<String> = Vec::new();
        let group_of = groups
            .iter()
            .map(|g| match group_names.iter().position(|n| n == g) {
                Some(i) => i,
                None => {
                    group_names.push(g.clone());
                    group_names.len() - 1
                }
            })
            .collect();
        Ok(DesignMatrix {
            x,
            names,
            group_of,
            group_names,
            standardization: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn cols(&self) -> usize {
        self.x.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Group index of every column.
    pub fn groups(&self) -> &[usize] {
        &self.group_of
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn group_columns(&self, g: usize) -> Vec<usize> {
        (0..self.cols())
            .filter(|&j| self.group_of[j] == g)
            .collect()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Centers every column and scales it to unit population standard deviation.
    pub fn standardize(&self) -> Result<DesignMatrix> {
        let n = self.rows();
        let mut x = self.x.clone();
        let mut means = Vec::with_capacity(self.cols());
        let mut sds = Vec::with_capacity(self.cols());
        for j in 0..self.cols() {
            let m = mean(self.x.col(j));
            let sd = population_sd(self.x.col(j), m);
            if !(sd > 1e-12 * m.abs().max(1.0)) {
                return Err(Error::param(format!(
                    "column `{}` is constant and cannot be standardized",
                    self.names[j]
                )));
            }
            for v in x.col_mut(j) {
                *v = (*v - m) / sd;
            }
            means.push(m);
            sds.push(sd);
        }
        debug_assert_eq!(x.rows(), n);
        Ok(DesignMatrix {
            x,
            standardization: Some(Standardization { means, sds }),
            ..self.clone()
        })
    }

    /// Column whose mean is not 0 or whose population sd is not 1, if any.
    pub fn first_unstandardized(&self) -> Option<usize> {
        (0..self.cols()).find(|&j| {
            let c = self.x.col(j);
            let m = mean(c);
            m.abs() > 1e-8 || (population_sd(c, m) - 1.0).abs() > 1e-8
        })
    }

    pub fn ensure_standardized(&self) -> Result<()> {
        match self.first_unstandardized() {
            Some(j) => Err(Error::NotStandardized {
                column: self.names[j].clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            x: self.x.select_rows(idx),
            standardization: None,
            ..self.clone()
        }
    }
}

/// Maps coefficients on standardized columns back to the original scale.
pub fn unstandardize(intercept: f64, coefficients: &[f64], s: &Standardization) -> (f64, Vec<f64>) {
    let beta: Vec<f64> = coefficients
        .iter()
        .zip(&s.sds)
        .map(|(d, sd)| d / sd)
        .collect();
    let shift: f64 = beta.iter().zip(&s.means).map(|(b, m)| b * m).sum();
    (intercept - shift, beta)
}

/// A categorical covariate as indicator columns, one per non-reference level
/// in sorted order. Columns are named `name=level`.
pub fn one_hot(name: &str, values: &[&str], reference: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let levels: BTreeSet<&str> = values.iter().copied().collect();
    if !levels.contains(reference) {
        return Err(Error::param(format!(
            "reference level `{reference}` of `{name}` does not occur"
        )));
    }
    Ok(levels
        .into_iter()
        .filter(|l| *l != reference)
        .map(|l| {
            let col = values
                .iter()
                .map(|v| if *v == l { 1.0 } else { 0.0 })
                .collect();
            (format!("{name}={l}"), col)
        })
        .collect())
}

/// Reference level for a categorical covariate: the configured default when
/// it occurs, otherwise the first level in sorted order.
pub fn default_reference(name: &str, values: &[&str]) -> String {
    DEFAULT_REFERENCE_LEVELS
        .iter()
        .find(|(n, l)| *n == name && values.contains(l))
        .map(|(_, l)| l.to_string())
        .unwrap_or_else(|| {
            values
                .iter()
                .min()
                .map_or_else(String::new, |s| s.to_string())
        })
}
