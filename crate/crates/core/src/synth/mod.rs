//! Synthetic consumer panels with known ground truth, fixed fixtures, and
//! brute-force oracles.
//!
//! Every household maximizes a Cobb–Douglas or CES utility on each day,
//! subject to the day's budget and the goods available that day. With
//! probability θ a day's optimal bundle is replaced by a random bundle on the
//! same budget hyperplane. A masked `(t, k)` cell is a good that is
//! unavailable on day `t`; its price is therefore never observed.

mod demand;
mod fixtures;
mod oracle;

pub use demand::{ces_demand, cobb_douglas_demand, random_budget_bundle};
pub use fixtures::{
    fixture_gale_cycle, fixture_polisson, gale_cycle_data, polisson_data, DenseData,
};
pub use oracle::{
    brute_force_aei, brute_force_garp, brute_force_warp, brute_force_warp_aei, ORACLE_MAX_T,
};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{
    clean_transactions, CleaningConfig, CleaningReport, RawTransaction, TransactionPanel,
    EXPENDITURE_FLOOR_DKK,
};
use crate::revpref::{self, AeiMethod, ExpenditureMatrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityModel {
    #[default]
    CobbDouglas,
    Ces {
        sigma: f64,
    },
}

/// Default CES elasticity of substitution.
pub const DEFAULT_CES_SIGMA: f64 = 0.5;

/// Log-normal prices, i.i.d. over `(t, k)`, shared by all households.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceLaw {
    pub log_mean: f64,
    pub log_sd: f64,
}

impl Default for PriceLaw {
    fn default() -> Self {
        PriceLaw {
            log_mean: libm::log(20.0),
            log_sd: 0.5,
        }
    }
}

/// Daily budget drawn uniformly from `[low, high]` DKK.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetLaw {
    pub low: f64,
    pub high: f64,
}

impl Default for BudgetLaw {
    fn default() -> Self {
        BudgetLaw {
            low: 100.0,
            high: 400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticScenario {
    pub households: usize,
    pub goods: usize,
    pub periods: usize,
    pub prices: PriceLaw,
    pub utility: UtilityModel,
    /// Fixed utility weights for every household; drawn per household when absent.
    pub weights: Option<Vec<f64>>,
    pub budget: BudgetLaw,
    /// Trembling-hand probability θ.
    pub theta: f64,
    /// Probability that a good is unavailable on a given day.
    pub mask: f64,
    pub seed: u64,
    pub start_date: NaiveDate,
}

impl Default for SyntheticScenario {
    fn default() -> Self {
        SyntheticScenario {
            households: 100,
            goods: 20,
            periods: 50,
            prices: PriceLaw::default(),
            utility: UtilityModel::CobbDouglas,
            weights: None,
            budget: BudgetLaw::default(),
            theta: 0.0,
            mask: 0.0,
            seed: 0,
            start_date: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        }
    }
}

impl SyntheticScenario {
    /// A full-scale panel: 1,664 households, 130 shopping days, 488
    /// products, 30% of prices missing.
    pub fn full_scale(seed: u64) -> Self {
        SyntheticScenario {
            households: 1664,
            goods: 488,
            periods: 130,
            theta: 0.5,
            mask: 0.3,
            // Dense 488-good bundles only cross at tight price dispersion and
            // similar budgets.
            prices: PriceLaw {
                log_mean: libm::log(20.0),
                log_sd: 0.05,
            },
            budget: BudgetLaw {
                low: 600.0,
                high: 700.0,
            },
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.households == 0 || self.goods == 0 || self.periods == 0 {
            return Err(Error::param(
                "households, goods and periods must be positive",
            ));
        }
        if !(self.prices.log_sd >= 0.0
            && self.prices.log_sd.is_finite()
            && self.prices.log_mean.is_finite())
        {
            return Err(Error::param(
                "price law needs a finite mean and non-negative sd",
            ));
        }
        if !(self.budget.low > 0.0
            && self.budget.high >= self.budget.low
            && self.budget.high.is_finite())
        {
            return Err(Error::param("budget law needs 0 < low <= high"));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::param(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if !(0.0..1.0).contains(&self.mask) {
            return Err(Error::param(format!(
                "mask must lie in [0, 1), got {}",
                self.mask
            )));
        }
        if let UtilityModel::Ces { sigma } = self.utility {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::param("CES elasticity must be positive"));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.goods {
                return Err(Error::param("fixed weights must have one entry per good"));
            }
            if w.iter().any(|a| !(*a > 0.0)) {
                return Err(Error::param("utility weights must be positive"));
            }
            if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::param("utility weights must sum to 1"));
            }
        }
        Ok(())
    }

    pub fn item_name(k: usize) -> String {
        format!("{:013}", 5_700_000_000_000u64 + k as u64)
    }

    pub fn household_name(h: usize) -> String {
        format!("hh{h:05}")
    }

    fn date(&self, t: usize) -> NaiveDate {
        self.start_date + Days::new(t as u64)
    }
}

/// True prices of every good on every day (`periods × goods`, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceMatrix {
    goods: usize,
    data: Vec<f64>,
}

impl PriceMatrix {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.goods..(t + 1) * self.goods]
    }
}

pub fn price_matrix(scenario: &SyntheticScenario) -> Result<PriceMatrix> {
    scenario.validate()?;
    let law = LogNormal::new(scenario.prices.log_mean, scenario.prices.log_sd)
        .map_err(|e| Error::param(format!("price law: {e}")))?;
    let mut rng = rng::stream(scenario.seed, "prices", 0);
    let data = (0..scenario.periods * scenario.goods)
        .map(|_| law.sample(&mut rng))
        .collect();
    Ok(PriceMatrix {
        goods: scenario.goods,
        data,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HouseholdTruth {
    pub household_id: String,
    /// Indices computed at the true, complete prices.
    pub garp_aei: f64,
    pub warp_aei: f64,
    pub garp_consistent: bool,
    pub trembled_days: Vec<usize>,
    /// Unavailable `(day, good)` cells.
    pub masked_cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub scenario: SyntheticScenario,
    pub households: Vec<HouseholdTruth>,
    pub masked_fraction: f64,
}

/// One generated household: its raw purchase rows and ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedHousehold {
    pub rows: Vec<RawTransaction>,
    pub truth: HouseholdTruth,
    /// Dense bundles (`periods × goods`).
    pub bundles: Vec<Vec<f64>>,
}

fn household_weights<R: Rng + ?Sized>(scenario: &SyntheticScenario, rng: &mut R) -> Vec<f64> {
    if let Some(w) = &scenario.weights {
        return w.clone();
    }
    let raw: Vec<f64> = (0..scenario.goods)
        .map(|_| 0.5 + rng.random::<f64>())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|a| a / total).collect()
}

/// Generates household `h`. Households are independent given the price matrix.
pub fn generate_household(
    scenario: &SyntheticScenario,
    prices: &PriceMatrix,
    h: usize,
) -> Result<GeneratedHousehold> {
    let k = scenario.goods;
    let id = SyntheticScenario::household_name(h);
    let mut rng = rng::stream(scenario.seed, "household", h as u64);
    let weights = household_weights(scenario, &mut rng);

    let mut rows = Vec::new();
    let mut bundles = Vec::with_capacity(scenario.periods);
    let mut trembled_days = Vec::new();
    let mut masked_cells = Vec::new();
    for t in 0..scenario.periods {
        let p = prices.row(t);
        let mut available: Vec<usize> = (0..k)
            .filter(|_| rng.random::<f64>() >= scenario.mask)
            .collect();
        if available.is_empty() {
            available.push(rng.random_range(0..k));
        }
        let mut avail_iter = available.iter().peekable();
        for j in 0..k {
            if avail_iter.peek() == Some(&&j) {
                avail_iter.next();
            } else {
                masked_cells.push((t, j));
            }
        }
        let budget = rng.random_range(scenario.budget.low..=scenario.budget.high);
        let sub_p: Vec<f64> = available.iter().map(|&j| p[j]).collect();
        let sub_a: Vec<f64> = {
            let a: Vec<f64> = available.iter().map(|&j| weights[j]).collect();
            let total: f64 = a.iter().sum();
            a.into_iter().map(|v| v / total).collect()
        };
        let trembles = scenario.theta > 0.0 && rng.random::<f64>() < scenario.theta;
        let mut x = if trembles {
            trembled_days.push(t);
            random_budget_bundle(&sub_p, budget, EXPENDITURE_FLOOR_DKK * 1.01, &mut rng)
        } else {
            match scenario.utility {
                UtilityModel::CobbDouglas => cobb_douglas_demand(&sub_a, &sub_p, budget)?,
                UtilityModel::Ces { sigma } => ces_demand(&sub_a, sigma, &sub_p, budget)?,
            }
        };
        // Scale the day's budget so no line falls under the coin floor;
        // demand is homogeneous of degree one in the budget.
        let min_spend = x
            .iter()
            .zip(&sub_p)
            .map(|(q, p)| q * p)
            .fold(f64::INFINITY, f64::min);
        let floor = EXPENDITURE_FLOOR_DKK * 1.01;
        if min_spend < floor {
            let scale = floor / min_spend;
            x.iter_mut().for_each(|q| *q *= scale);
        }
        let mut dense = vec![0.0; k];
        for ((&j, &q), &pj) in available.iter().zip(&x).zip(&sub_p) {
            dense[j] = q;
            rows.push(RawTransaction::new(
                id.clone(),
                scenario.date(t),
                SyntheticScenario::item_name(j),
                q,
                pj * q,
            ));
        }
        bundles.push(dense);
    }

    let true_prices: Vec<Vec<f64>> = (0..scenario.periods)
        .map(|t| prices.row(t).to_vec())
        .collect();
    let e = ExpenditureMatrix::from_dense(&true_prices, &bundles)?;
    let eff = revpref::efficiency(&e, AeiMethod::Exact)?;
    Ok(GeneratedHousehold {
        rows,
        truth: HouseholdTruth {
            household_id: id,
            garp_aei: eff.garp_aei,
            warp_aei: eff.warp_aei,
            garp_consistent: eff.garp_satisfied_at_1,
            trembled_days,
            masked_cells,
        },
        bundles,
    })
}

/// Generates the whole panel. The panel goes through the same cleaning path
/// as ingested CSV, so writing it out and reading it back reproduces it.
pub fn generate_panel(scenario: &SyntheticScenario) -> Result<(TransactionPanel, GroundTruth)> {
    let (panel, truth, _) = generate_panel_with_report(scenario)?;
    Ok((panel, truth))
}

pub fn generate_panel_with_report(
    scenario: &SyntheticScenario,
) -> Result<(TransactionPanel, GroundTruth, CleaningReport)> {
    let prices = price_matrix(scenario)?;
    let mut rows = Vec::new();
    let mut truths = Vec::with_capacity(scenario.households);
    for h in 0..scenario.households {
        let g = generate_household(scenario, &prices, h)?;
        rows.extend(g.rows);
        truths.push(g.truth);
    }
    let (panel, report) = clean_transactions(rows, 0, &CleaningConfig::default())?;
    let masked: usize = truths.iter().map(|t| t.masked_cells.len()).sum();
    let masked_fraction =
        masked as f64 / (scenario.households * scenario.periods * scenario.goods) as f64;
    Ok((
        panel,
        GroundTruth {
            scenario: scenario.clone(),
            households: truths,
            masked_fraction,
        },
        report,
    ))
}
