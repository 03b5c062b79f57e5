use alloc::vec::Vec;

use crate::error::{Error, Result};

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
}

/// Cronbach's alpha of a `k`-item scale; `items[i]` holds item `i` for every respondent.
pub fn cronbach_alpha(items: &[Vec<f64>]) -> Result<f64> {
    let k = items.len();
    if k < 2 {
        return Err(Error::param("Cronbach's alpha needs at least two items"));
    }
    let n = items[0].len();
    if n < 2 || items.iter().any(|c| c.len() != n) {
        return Err(Error::param(
            "every item needs the same number (at least two) of responses",
        ));
    }
    let totals: Vec<f64> = (0..n).map(|r| items.iter().map(|c| c[r]).sum()).collect();
    let total_var = sample_variance(&totals);
    if !(total_var > 0.0) {
        return Err(Error::UndefinedAlpha);
    }
    let item_var: f64 = items.iter().map(|c| sample_variance(c)).sum();
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}
