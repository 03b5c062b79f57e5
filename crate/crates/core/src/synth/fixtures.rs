//! Small datasets with hand-verifiable answers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Days, NaiveDate};

use crate::panel::{DayRecord, HouseholdSeries, ItemId, Purchase, RawTransaction};
use crate::revpref::ExpenditureMatrix;

/// Prices and bundles, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseData {
    pub prices: Vec<Vec<f64>>,
    pub bundles: Vec<Vec<f64>>,
}

impl DenseData {
    pub fn expenditure(&self) -> ExpenditureMatrix {
        ExpenditureMatrix::from_dense(&self.prices, &self.bundles).expect("fixture data are valid")
    }

    /// One day per observation starting at `start`; good `k` becomes item `k`.
    pub fn series(&self, household_id: &str, start: NaiveDate) -> HouseholdSeries {
        let days = self
            .prices
            .iter()
            .zip(&self.bundles)
            .enumerate()
            .map(|(t, (p, x))| {
                let purchases = p
                    .iter()
                    .zip(x)
                    .enumerate()
                    .filter(|(_, (_, q))| **q > 0.0)
                    .map(|(k, (p, q))| Purchase::new(k as ItemId, *q, p * q))
                    .collect();
                DayRecord::new(start + Days::new(t as u64), purchases)
            })
            .collect();
        HouseholdSeries::new(household_id, days).expect("fixture data are valid")
    }

    /// Raw purchase rows for the same series, with item names `item0`, `item1`, ...
    pub fn rows(&self, household_id: &str, start: NaiveDate) -> Vec<RawTransaction> {
        let mut rows = Vec::new();
        for (t, (p, x)) in self.prices.iter().zip(&self.bundles).enumerate() {
            for (k, (p, q)) in p.iter().zip(x).enumerate() {
                if *q > 0.0 {
                    rows.push(RawTransaction::new(
                        household_id,
                        start + Days::new(t as u64),
                        format!("item{k}"),
                        *q,
                        p * q,
                    ));
                }
            }
        }
        rows
    }
}

fn fixture_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()
}

/// Three goods, three observations: WARP holds at efficiency 1 but GARP
/// fails through the cycle `0 → 2 → 1 → 0`.
///
/// ```text
/// E = [[ 91,  94,  75],
///      [ 93, 105, 114],
///      [133, 117, 130]]
/// ```
///
/// The AEI is 9/10 (= 117/130), a supremum that is not attained.
pub fn gale_cycle_data() -> DenseData {
    DenseData {
        prices: vec![
            vec![2.0, 9.0, 2.0],
            vec![3.0, 3.0, 9.0],
            vec![7.0, 5.0, 7.0],
        ],
        bundles: vec![
            vec![9.0, 7.0, 5.0],
            vec![3.0, 8.0, 8.0],
            vec![6.0, 5.0, 9.0],
        ],
    }
}

/// The Gale-style dataset as a fully priced household series.
pub fn fixture_gale_cycle() -> HouseholdSeries {
    gale_cycle_data().series("gale", fixture_start())
}

/// Two observations on one ray: `x¹ = (2, 2)` at `p¹ = (2, 2)` and
/// `x² = (1, 1)` at `p² = (1, 1)`. Consistent, with AEI 1.
pub fn polisson_data() -> DenseData {
    DenseData {
        prices: vec![vec![2.0, 2.0], vec![1.0, 1.0]],
        bundles: vec![vec![2.0, 2.0], vec![1.0, 1.0]],
    }
}

pub fn fixture_polisson() -> HouseholdSeries {
    polisson_data().series("polisson", fixture_start())
}
