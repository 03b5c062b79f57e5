//! Plain-text tables.

use std::fmt::Write;

use rpkit_core::panel::{CleaningReport, Describe, SummaryStats};
use rpkit_core::stats::{GroupImportance, PooledOlsFit, RegularizedFit};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub const SIGNIFICANCE_FOOTNOTE: &str = "*** p<0.001; ** p<0.01; * p<0.05; † p<0.1";

pub fn stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        p if p < 0.1 => "†",
        _ => "",
    }
}

/// Two-sided Student-t p-value; `NaN` when the statistic is undefined.
pub fn p_value(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    2.0 * dist.sf(t.abs())
}

/// Left-aligned first column, right-aligned others.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|j| {
            rows.iter()
                .map(|r| r[j].chars().count())
                .chain([header[j].chars().count()])
                .max()
                .unwrap()
        })
        .collect();
    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        for (j, c) in cells.iter().enumerate() {
            let pad = widths[j] - c.chars().count();
            if j == 0 {
                out.push_str(c);
                out.push_str(&" ".repeat(pad));
            } else {
                out.push_str("  ");
                out.push_str(&" ".repeat(pad));
                out.push_str(c);
            }
        }
        let trimmed = out.trim_end().len();
        out.truncate(trimmed);
        out.push('\n');
    };
    line(header, &mut out);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&cells, &mut out);
    }
    out
}

fn num(v: f64, digits: usize) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format!("{v:.digits$}")
    }
}

/// Mean, sd, median, min and max of a sample.
pub fn summary_block(title: &str, values: &[f64]) -> String {
    let mut out = format!("{title}\n");
    match Describe::of(values) {
        None => out.push_str("  no values\n"),
        Some(d) => {
            writeln!(out, "  n       {}", values.len()).unwrap();
            for (k, v) in [
                ("mean", d.mean),
                ("sd", d.sd),
                ("median", d.median),
                ("min", d.min),
                ("max", d.max),
            ] {
                writeln!(out, "  {k:<7} {v:.4}").unwrap();
            }
        }
    }
    out
}

pub fn cleaning_report(r: &CleaningReport) -> String {
    let rows = [
        ("rows read", r.rows_read),
        ("malformed", r.malformed),
        ("outside country", r.outside_country),
        ("flagged vendor error", r.flagged_error),
        ("missing or non-positive", r.missing_or_nonpositive),
        ("below expenditure floor", r.below_floor),
        ("rows dropped", r.rows_dropped),
        ("rows kept", r.rows_kept),
        ("rows merged", r.rows_merged),
        ("households", r.households),
        ("shopping days", r.days),
        ("purchase cells", r.cells),
    ];
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(k, v)| vec![k.to_string(), v.to_string()])
        .collect();
    format!("Cleaning report\n{}", table(&["Rule", "Count"], &rows))
}

pub fn panel_summary(s: &SummaryStats) -> String {
    let rows: Vec<Vec<String>> = [
        ("days shopped", &s.days),
        ("distinct products", &s.products),
        ("transactions", &s.transactions),
        ("products per trip", &s.products_per_trip),
        ("expenditure per trip (DKK)", &s.mean_expenditure_per_trip),
        ("fraction of prices missing", &s.fraction_missing),
    ]
    .iter()
    .map(|(k, d)| {
        let mut r = vec![k.to_string()];
        r.extend(
            [d.mean, d.sd, d.min, d.median, d.max]
                .iter()
                .map(|v| num(*v, 3)),
        );
        r
    })
    .collect();
    format!(
        "Panel summary ({} households, {:.4} of price cells missing)\n{}",
        s.households.len(),
        s.overall_fraction_missing,
        table(
            &["Per household", "Mean", "SD", "Min", "Median", "Max"],
            &rows
        )
    )
}

/// Coefficients, Rubin-pooled standard errors and two-sided p-values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub df: f64,
    pub p_value: f64,
    pub stars: String,
}

pub fn ols_rows(fit: &PooledOlsFit) -> Vec<OlsRow> {
    (0..fit.names.len())
        .map(|j| {
            let p = p_value(fit.t_values[j], fit.df[j]);
            OlsRow {
                name: fit.names[j].clone(),
                estimate: fit.coefficients[j],
                std_error: fit.std_errors[j],
                t_value: fit.t_values[j],
                df: fit.df[j],
                p_value: p,
                stars: stars(p).into(),
            }
        })
        .collect()
}

pub fn ols_table(title: &str, fit: &PooledOlsFit) -> String {
    let rows: Vec<Vec<String>> = ols_rows(fit)
        .into_iter()
        .map(|r| {
            vec![
                r.name,
                format!("{}{}", num(r.estimate, 3), r.stars),
                format!("({})", num(r.std_error, 3)),
                num(r.t_value, 2),
                num(r.p_value, 4),
            ]
        })
        .collect();
    format!(
        "{title}\nN = {}, imputations = {}\n{}{SIGNIFICANCE_FOOTNOTE}\n",
        fit.rows,
        fit.draws_count(),
        table(&["Variable", "Estimate", "(SE)", "t", "p"], &rows)
    )
}

pub fn penalized_table(title: &str, fit: &RegularizedFit) -> String {
    let rows: Vec<Vec<String>> = fit
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let original = fit
                .original_coefficients
                .as_ref()
                .map_or(f64::NAN, |c| c[j]);
            vec![
                name.clone(),
                fit.group_names[fit.groups[j]].clone(),
                num(fit.coefficients[j], 4),
                num(original, 4),
            ]
        })
        .collect();
    let mut out = format!("{title}\n");
    writeln!(
        out,
        "lambda = {:.6} (lambda_max = {:.6}), omega = {:.2}, active = {} of {}, KKT residual = {:.2e}",
        fit.lambda,
        fit.lambda_max,
        fit.omega,
        fit.active_count(),
        fit.names.len(),
        fit.kkt_residual
    )
    .unwrap();
    out.push_str(&table(&["Variable", "Group", "Std. coef", "Coef"], &rows));
    out
}

pub fn importance_table(imp: &GroupImportance) -> String {
    let mut out = String::from("Group importance\n");
    if let Some(note) = &imp.note {
        writeln!(out, "{note}").unwrap();
    }
    let rows: Vec<Vec<String>> = imp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.group.clone(),
                format!("{}/{}", r.active, r.total),
                num(r.norm, 4),
                num(r.std_norm, 4),
                format!("{:.1}", r.percent),
            ]
        })
        .collect();
    out.push_str(&table(
        &["Group", "Active", "Norm", "Std. norm", "% of total"],
        &rows,
    ));
    out
}
