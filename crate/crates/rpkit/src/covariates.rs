//! Household covariates and their join with estimation results.
//!
//! `covariates.csv` has a `household_id` column plus one column per
//! covariate. Columns are numeric unless the schema declares them
//! categorical:
//!
//! ```toml
//! [columns.age]
//! kind = "categorical"
//! reference = "35-49"
//! group = "Age"
//!
//! [columns.pc1]
//! group = "Personality"
//!
//! [columns.notes]
//! kind = "ignore"
//! ```
//!
//! Categorical columns are one-hot encoded against their reference level.
//! Every column forms its own group unless the schema names one.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use rpkit_core::stats::{default_reference, one_hot, DesignMatrix, Matrix};
use rpkit_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::HouseholdResult;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    #[default]
    Numeric,
    Categorical,
    Ignore,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSpec {
    pub kind: ColumnKind,
    pub reference: Option<String>,
    pub group: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovariateSchema {
    pub columns: BTreeMap<String, ColumnSpec>,
}

impl CovariateSchema {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::format(path, e))
    }

    fn spec(&self, column: &str) -> ColumnSpec {
        self.columns.get(column).cloned().unwrap_or_default()
    }
}

/// Raw covariate table, one row per household.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    /// `values[row][column]`, as read.
    pub values: Vec<Vec<String>>,
}

pub fn read_covariates<R: Read>(reader: R, path: &Path) -> Result<Covariates> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| CliError::format(path, e))?
        .clone();
    let id_col = headers
        .iter()
        .position(|h| h == "household_id")
        .ok_or_else(|| CliError::format(path, "missing column `household_id`"))?;
    let columns: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != id_col)
        .map(|(_, h)| h.to_string())
        .collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashMap::new();
    for (line, record) in csv.records().enumerate() {
        let record = record.map_err(|e| CliError::format(path, e))?;
        let id = record[id_col].to_string();
        if seen.insert(id.clone(), line).is_some() {
            return Err(CliError::format(
                path,
                format!("duplicate household `{id}`"),
            ));
        }
        ids.push(id);
        values.push(
            record
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != id_col)
                .map(|(_, v)| v.to_string())
                .collect(),
        );
    }
    Ok(Covariates {
        columns,
        ids,
        values,
    })
}

/// Rows entering a regression, in household-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedData {
    pub household_ids: Vec<String>,
    pub design: DesignMatrix,
    /// Households dropped for a missing or unparsable covariate.
    pub dropped_incomplete: Vec<String>,
}

/// Inner join of estimated households with covariates, then encoding.
/// Households skipped during estimation, or with an empty covariate, are
/// left out.
pub fn join(
    results: &[HouseholdResult],
    covariates: &Covariates,
    schema: &CovariateSchema,
) -> Result<JoinedData> {
    let estimated: BTreeMap<&str, &HouseholdResult> = results
        .iter()
        .filter(|r| r.skipped.is_none())
        .map(|r| (r.household_id.as_str(), r))
        .collect();
    let by_id: BTreeMap<&str, usize> = covariates
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let used: Vec<(usize, &String, ColumnSpec)> = covariates
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| (j, c, schema.spec(c)))
        .filter(|(_, _, s)| s.kind != ColumnKind::Ignore)
        .collect();
    for name in schema.columns.keys() {
        if !covariates.columns.contains(name) {
            return Err(CliError::config(format!(
                "schema column `{name}` is not in the covariate file"
            )));
        }
    }

    let mut household_ids = Vec::new();
    let mut rows = Vec::new();
    let mut dropped_incomplete = Vec::new();
    for (id, _) in estimated {
        let Some(&row) = by_id.get(id) else { continue };
        let vals = &covariates.values[row];
        let complete = used.iter().all(|(j, _, spec)| match spec.kind {
            ColumnKind::Numeric => vals[*j].parse::<f64>().is_ok_and(f64::is_finite),
            _ => !vals[*j].is_empty(),
        });
        if complete {
            household_ids.push(id.to_string());
            rows.push(row);
        } else {
            dropped_incomplete.push(id.to_string());
        }
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData {
            rows: 0,
            params: used.len() + 1,
        }
        .into());
    }

    let mut names = Vec::new();
    let mut groups = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (j, name, spec) in &used {
        let group = spec.group.clone().unwrap_or_else(|| name.to_string());
        match spec.kind {
            ColumnKind::Numeric => {
                cols.push(
                    rows.iter()
                        .map(|&r| covariates.values[r][*j].parse().unwrap())
                        .collect(),
                );
                names.push(name.to_string());
                groups.push(group);
            }
            ColumnKind::Categorical => {
                let values: Vec<&str> = rows
                    .iter()
                    .map(|&r| covariates.values[r][*j].as_str())
                    .collect();
                let reference = spec
                    .reference
                    .clone()
                    .unwrap_or_else(|| default_reference(name, &values));
                for (col_name, col) in one_hot(name, &values, &reference)? {
                    names.push(col_name);
                    groups.push(group.clone());
                    cols.push(col);
                }
            }
            ColumnKind::Ignore => unreachable!(),
        }
    }
    if cols.is_empty() {
        return Err(CliError::config("no covariate columns to regress on"));
    }
    let params = cols.len() + 1;
    if rows.len() < params + 1 {
        return Err(Error::InsufficientData {
            rows: rows.len(),
            params,
        }
        .into());
    }
    let x = Matrix::from_columns(rows.len(), &cols)?;
    Ok(JoinedData {
        household_ids,
        design: DesignMatrix::with_groups(x, names, groups)?,
        dropped_incomplete,
    })
}
