use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use super::penalized::RegularizedFit;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupImportanceRow {
    pub group: String,
    pub active: usize,
    pub total: usize,
    /// `‖δ_g‖₂` on the standardized scale.
    pub norm: f64,
    /// `‖δ_g‖₂ / √|g|`.
    pub std_norm: f64,
    /// Share of `Σ_g ‖δ_g‖₂`, in percent.
    pub percent: f64,
}

/// Groups ranked by their share of the total coefficient norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupImportance {
    pub rows: Vec<GroupImportanceRow>,
    pub note: Option<String>,
}

pub fn group_importance(fit: &RegularizedFit) -> GroupImportance {
    let total: f64 = fit.group_norms.iter().sum();
    if total == 0.0 {
        return GroupImportance {
            rows: Vec::new(),
            note: Some("all coefficients are zero; no group carries weight".to_string()),
        };
    }
    let mut rows: Vec<GroupImportanceRow> = fit
        .group_names
        .iter()
        .enumerate()
        .map(|(g, name)| {
            let cols: Vec<usize> = (0..fit.groups.len())
                .filter(|j| fit.groups[*j] == g)
                .collect();
            let norm = fit.group_norms[g];
            GroupImportanceRow {
                group: name.clone(),
                active: cols.iter().filter(|j| fit.coefficients[**j] != 0.0).count(),
                total: cols.len(),
                norm,
                std_norm: norm / libm::sqrt(cols.len() as f64),
                percent: 100.0 * norm / total,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.percent.total_cmp(&a.percent));
    GroupImportance { rows, note: None }
}
