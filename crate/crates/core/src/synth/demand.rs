use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

fn check_inputs(weights: &[f64], prices: &[f64], budget: f64) -> Result<()> {
    if weights.len() != prices.len() || weights.is_empty() {
        return Err(Error::param(
            "weights and prices must have the same, non-zero length",
        ));
    }
    if let Some(p) = prices.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::param(format!("prices must be positive, got {p}")));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::param(format!(
            "budget must be positive, got {budget}"
        )));
    }
    if weights.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::param("weights must be non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("weights must sum to 1, got {total}")));
    }
    Ok(())
}

/// Cobb–Douglas demand `x_k = a_k w / p_k`; spends the whole budget.
pub fn cobb_douglas_demand(weights: &[f64], prices: &[f64], budget: f64) -> Result<Vec<f64>> {
    check_inputs(weights, prices, budget)?;
    Ok(weights
        .iter()
        .zip(prices)
        .map(|(a, p)| a * budget / p)
        .collect())
}

/// CES demand for `u(x) = (Σ a_k^{1/σ} x_k^{(σ-1)/σ})^{σ/(σ-1)}`:
/// `x_k = a_k p_k^{-σ} w / Σ_j a_j p_j^{1-σ}`.
pub fn ces_demand(weights: &[f64], sigma: f64, prices: &[f64], budget: f64) -> Result<Vec<f64>> {
    check_inputs(weights, prices, budget)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!(
            "CES elasticity must be positive, got {sigma}"
        )));
    }
    let denom: f64 = weights
        .iter()
        .zip(prices)
        .map(|(a, p)| a * libm::pow(*p, 1.0 - sigma))
        .sum();
    Ok(weights
        .iter()
        .zip(prices)
        .map(|(a, p)| a * libm::pow(*p, -sigma) * budget / denom)
        .collect())
}

/// A random bundle on the budget hyperplane: spending shares are uniform on
/// the simplex, restricted to every line spending at least `min_spend`. When
/// the budget cannot cover `min_spend` on every line the restriction is dropped.
pub fn random_budget_bundle<R: Rng + ?Sized>(
    prices: &[f64],
    budget: f64,
    min_spend: f64,
    rng: &mut R,
) -> Vec<f64> {
    let raw: Vec<f64> = prices.iter().map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let reserved = min_spend * prices.len() as f64;
    let (base, free) = if reserved < budget {
        (min_spend, budget - reserved)
    } else {
        (0.0, budget)
    };
    raw.iter()
        .zip(prices)
        .map(|(e, p)| (base + e / total * free) / p)
        .collect()
}
