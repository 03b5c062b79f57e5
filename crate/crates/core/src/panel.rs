//! Transaction cleaning and per-household daily series.
//!
//! Raw purchase rows are filtered (country and vendor error flags, missing or
//! non-positive values, the 0.5 DKK expenditure floor), same-day purchases of
//! the same item are summed, and unit prices are derived as
//! expenditure / quantity on the aggregated cell.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};

/// Index into [`TransactionPanel::items`].
pub type ItemId = u32;

/// Smallest Danish coin, in DKK.
pub const EXPENDITURE_FLOOR_DKK: f64 = 0.5;

/// One purchase line as read from the source, before any cleaning.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTransaction {
    pub household_id: String,
    pub date: NaiveDate,
    pub item_id: String,
    pub quantity: Option<f64>,
    pub expenditure: Option<f64>,
    pub outside_country: bool,
    pub vendor_error: bool,
}

impl RawTransaction {
    pub fn new(
        household_id: impl Into<String>,
        date: NaiveDate,
        item_id: impl Into<String>,
        quantity: f64,
        expenditure: f64,
    ) -> Self {
        RawTransaction {
            household_id: household_id.into(),
            date,
            item_id: item_id.into(),
            quantity: Some(quantity),
            expenditure: Some(expenditure),
            outside_country: false,
            vendor_error: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleaningConfig {
    pub expenditure_floor: f64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            expenditure_floor: EXPENDITURE_FLOOR_DKK,
        }
    }
}

/// Drop counts per cleaning rule. Rules are evaluated independently, so a
/// row failing several rules increments several counters but is dropped once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CleaningReport {
    pub rows_read: u64,
    pub malformed: u64,
    pub outside_country: u64,
    pub flagged_error: u64,
    pub missing_or_nonpositive: u64,
    pub below_floor: u64,
    pub rows_dropped: u64,
    pub rows_kept: u64,
    /// Surviving rows folded into an earlier row of the same household, date and item.
    pub rows_merged: u64,
    pub households: u64,
    pub days: u64,
    pub cells: u64,
}

/// One purchased item on one day, after same-day aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Purchase {
    pub item: ItemId,
    pub quantity: f64,
    pub expenditure: f64,
    /// Unit price, `expenditure / quantity`.
    pub price: f64,
}

impl Purchase {
    pub fn new(item: ItemId, quantity: f64, expenditure: f64) -> Self {
        Purchase {
            item,
            quantity,
            expenditure,
            price: expenditure / quantity,
        }
    }
}

/// A shopping day. Prices are observed exactly on the purchased items, so the
/// bundle and price vector share one sparse support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    /// Sorted by item id, no duplicates.
    pub purchases: Vec<Purchase>,
    /// Total expenditure of the day.
    pub budget: f64,
}

impl DayRecord {
    /// Builds a day from purchases; sorts by item and sums the budget in item order.
    pub fn new(date: NaiveDate, mut purchases: Vec<Purchase>) -> Self {
        purchases.sort_by_key(|p| p.item);
        let budget = purchases.iter().map(|p| p.expenditure).sum();
        DayRecord {
            date,
            purchases,
            budget,
        }
    }

    fn find(&self, item: ItemId) -> Option<&Purchase> {
        self.purchases
            .binary_search_by_key(&item, |p| p.item)
            .ok()
            .map(|i| &self.purchases[i])
    }

    pub fn quantity(&self, item: ItemId) -> Option<f64> {
        self.find(item).map(|p| p.quantity)
    }

    pub fn price(&self, item: ItemId) -> Option<f64> {
        self.find(item).map(|p| p.price)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HouseholdSeries {
    pub household_id: String,
    /// Ascending by date, one record per date.
    pub days: Vec<DayRecord>,
    /// Sorted union of the purchased items over all days.
    pub items: Vec<ItemId>,
}

impl HouseholdSeries {
    pub fn new(household_id: impl Into<String>, mut days: Vec<DayRecord>) -> Result<Self> {
        if days.is_empty() {
            return Err(Error::param("a household series needs at least one day"));
        }
        days.sort_by_key(|d| d.date);
        if days.windows(2).any(|w| w[0].date == w[1].date) {
            return Err(Error::param("duplicate date in household series"));
        }
        for d in &days {
            if d.purchases.is_empty() {
                return Err(Error::param("a shopping day needs at least one purchase"));
            }
            if d.purchases
                .iter()
                .any(|p| !(p.quantity > 0.0 && p.price > 0.0 && p.price.is_finite()))
            {
                return Err(Error::param(
                    "quantities and prices must be strictly positive",
                ));
            }
        }
        let mut items: Vec<ItemId> = days
            .iter()
            .flat_map(|d| d.purchases.iter().map(|p| p.item))
            .collect();
        items.sort_unstable();
        items.dedup();
        Ok(HouseholdSeries {
            household_id: household_id.into(),
            days,
            items,
        })
    }

    /// Observation count T.
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Number of purchased (day, item) cells, i.e. observed price cells.
    pub fn cells(&self) -> usize {
        self.days.iter().map(|d| d.purchases.len()).sum()
    }

    /// Share of (day, item) cells over the item universe without an observed price.
    pub fn fraction_missing(&self) -> f64 {
        let total = self.len() * self.items.len();
        1.0 - self.cells() as f64 / total as f64
    }

    /// True when every universe item is priced on every day.
    pub fn has_complete_prices(&self) -> bool {
        self.days
            .iter()
            .all(|d| d.purchases.len() == self.items.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransactionPanel {
    /// Item dictionary; an [`ItemId`] indexes into this list. Sorted.
    pub items: Vec<String>,
    pub households: BTreeMap<String, HouseholdSeries>,
}

impl TransactionPanel {
    pub fn item_name(&self, id: ItemId) -> &str {
        &self.items[id as usize]
    }

    pub fn item_id(&self, name: &str) -> Option<ItemId> {
        self.items
            .binary_search_by(|s| s.as_str().cmp(name))
            .ok()
            .map(|i| i as ItemId)
    }

    pub fn len(&self) -> usize {
        self.households.len()
    }

    pub fn is_empty(&self) -> bool {
        self.households.is_empty()
    }

    /// Flattens the panel back into one row per aggregated cell, ordered by
    /// household, date and item.
    pub fn to_rows(&self) -> Vec<RawTransaction> {
        let mut rows = Vec::with_capacity(self.households.values().map(|h| h.cells()).sum());
        for hh in self.households.values() {
            for day in &hh.days {
                for p in &day.purchases {
                    rows.push(RawTransaction::new(
                        hh.household_id.clone(),
                        day.date,
                        self.item_name(p.item),
                        p.quantity,
                        p.expenditure,
                    ));
                }
            }
        }
        rows
    }
}

fn valid_positive(v: Option<f64>) -> Option<f64> {
    v.filter(|x| x.is_finite() && *x > 0.0)
}

/// Cleans raw rows into a panel. `malformed` is the count of source rows the
/// caller could not parse; it is carried into the report.
pub fn clean_transactions<I>(
    rows: I,
    malformed: u64,
    config: &CleaningConfig,
) -> Result<(TransactionPanel, CleaningReport)>
where
    I: IntoIterator<Item = RawTransaction>,
{
    if !(config.expenditure_floor >= 0.0) {
        return Err(Error::param("expenditure floor must be non-negative"));
    }
    let mut report = CleaningReport {
        malformed,
        ..CleaningReport::default()
    };
    report.rows_read = malformed;

    // Ids are interned in arrival order and ranked by name afterwards.
    let mut hh_ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut item_ids: BTreeMap<String, u32> = BTreeMap::new();
    let intern = |map: &mut BTreeMap<String, u32>, name: String| {
        let next = map.len() as u32;
        *map.entry(name).or_insert(next)
    };
    let mut kept: Vec<(u32, NaiveDate, u32, f64, f64)> = Vec::new();
    for row in rows {
        report.rows_read += 1;
        let mut rejected = false;
        if row.outside_country {
            report.outside_country += 1;
            rejected = true;
        }
        if row.vendor_error {
            report.flagged_error += 1;
            rejected = true;
        }
        let q = valid_positive(row.quantity);
        let x = valid_positive(row.expenditure);
        if q.is_none() || x.is_none() {
            report.missing_or_nonpositive += 1;
            rejected = true;
        }
        if let Some(x) = x {
            if x < config.expenditure_floor {
                report.below_floor += 1;
                rejected = true;
            }
        }
        if rejected {
            continue;
        }
        report.rows_kept += 1;
        let (q, x) = (q.unwrap(), x.unwrap());
        let hh = intern(&mut hh_ids, row.household_id);
        let item = intern(&mut item_ids, row.item_id);
        kept.push((hh, row.date, item, x, q));
    }
    let ranks = |map: &BTreeMap<String, u32>| {
        let mut rank = vec![0u32; map.len()];
        for (r, id) in map.values().enumerate() {
            rank[*id as usize] = r as u32;
        }
        rank
    };
    let (hh_rank, item_rank) = (ranks(&hh_ids), ranks(&item_ids));
    for row in &mut kept {
        row.0 = hh_rank[row.0 as usize];
        row.2 = item_rank[row.2 as usize];
    }
    // Canonical order: by cell, then by amount, so sums do not depend on row order.
    kept.sort_unstable_by(|a, b| {
        (a.0, a.1, a.2)
            .cmp(&(b.0, b.1, b.2))
            .then(a.3.total_cmp(&b.3))
            .then(a.4.total_cmp(&b.4))
    });
    report.rows_dropped = report.rows_read - report.rows_kept - report.malformed;

    let items: Vec<String> = item_ids.into_keys().collect();
    let households_by_rank: Vec<String> = hh_ids.into_keys().collect();

    let mut grouped: BTreeMap<u32, BTreeMap<NaiveDate, Vec<Purchase>>> = BTreeMap::new();
    for parts in kept.chunk_by(|a, b| (a.0, a.1, a.2) == (b.0, b.1, b.2)) {
        report.rows_merged += parts.len() as u64 - 1;
        let (x, q) = parts
            .iter()
            .fold((0.0, 0.0), |(sx, sq), r| (sx + r.3, sq + r.4));
        let (hh, date, item) = (parts[0].0, parts[0].1, parts[0].2);
        grouped
            .entry(hh)
            .or_default()
            .entry(date)
            .or_default()
            .push(Purchase::new(item, q, x));
    }

    let mut households = BTreeMap::new();
    for (hh, days) in grouped {
        let days: Vec<DayRecord> = days
            .into_iter()
            .map(|(date, purchases)| DayRecord::new(date, purchases))
            .collect();
        report.days += days.len() as u64;
        report.cells += days.iter().map(|d| d.purchases.len() as u64).sum::<u64>();
        let name = &households_by_rank[hh as usize];
        households.insert(name.clone(), HouseholdSeries::new(name.as_str(), days)?);
    }
    report.households = households.len() as u64;
    if households.is_empty() {
        return Err(Error::EmptyPanel);
    }
    Ok((TransactionPanel { items, households }, report))
}

/// Descriptive statistics of one column across households.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Describe {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Describe {
    /// `sd` uses the n − 1 denominator (0 for a single value).
    pub fn of(values: &[f64]) -> Option<Describe> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Some(Describe {
            mean,
            sd,
            min: sorted[0],
            median,
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HouseholdSummary {
    pub household_id: String,
    pub days: usize,
    pub products: usize,
    pub transactions: usize,
    pub products_per_trip: f64,
    pub mean_expenditure_per_trip: f64,
    pub fraction_missing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub households: Vec<HouseholdSummary>,
    pub days: Describe,
    pub products: Describe,
    pub transactions: Describe,
    pub products_per_trip: Describe,
    pub mean_expenditure_per_trip: Describe,
    pub fraction_missing: Describe,
    /// Missing price cells over all households' `T × |universe|` cells.
    pub overall_fraction_missing: f64,
}

pub fn summarize_household(hh: &HouseholdSeries) -> HouseholdSummary {
    let t = hh.len();
    let transactions = hh.cells();
    HouseholdSummary {
        household_id: hh.household_id.clone(),
        days: t,
        products: hh.items.len(),
        transactions,
        products_per_trip: transactions as f64 / t as f64,
        mean_expenditure_per_trip: hh.days.iter().map(|d| d.budget).sum::<f64>() / t as f64,
        fraction_missing: hh.fraction_missing(),
    }
}

pub fn panel_summary(panel: &TransactionPanel) -> Result<SummaryStats> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let households: Vec<HouseholdSummary> =
        panel.households.values().map(summarize_household).collect();
    let col = |f: fn(&HouseholdSummary) -> f64| {
        let v: Vec<f64> = households.iter().map(f).collect();
        Describe::of(&v).unwrap()
    };
    Ok(SummaryStats {
        days: col(|h| h.days as f64),
        products: col(|h| h.products as f64),
        transactions: col(|h| h.transactions as f64),
        products_per_trip: col(|h| h.products_per_trip),
        mean_expenditure_per_trip: col(|h| h.mean_expenditure_per_trip),
        fraction_missing: col(|h| h.fraction_missing),
        overall_fraction_missing: {
            let total: usize = panel
                .households
                .values()
                .map(|h| h.len() * h.items.len())
                .sum();
            let observed: usize = panel.households.values().map(HouseholdSeries::cells).sum();
            1.0 - observed as f64 / total as f64
        },
        households,
    })
}
