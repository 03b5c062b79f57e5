//! Monte-Carlo imputation of unobserved prices.
//!
//! A household that did not buy item `k` on day `t` has no price for it, so
//! `p_t · x_s` cannot be evaluated for any bundle `s` containing `k`. Each
//! draw fills every such `(t, k)` cell with a price sampled from the
//! empirical distribution of observed prices for `k`, then computes the
//! GARP and WARP efficiency indices of the completed data. One price is drawn
//! per `(t, k)` and reused for every bundle valued at day `t`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{HouseholdSeries, ItemId, TransactionPanel};
use crate::revpref::{AeiMethod, AeiSolver, EfficiencyResult, ExpenditureMatrix};
use crate::rng::{self, StreamRng};

/// Default number of resamples.
pub const DEFAULT_DRAWS: usize = 1000;

/// Two indices "differ" when they are further apart than this.
pub const RHO_TOLERANCE: f64 = 1e-9;

/// Running-mean band used to declare a Monte-Carlo estimate stable.
pub const STABILITY_BAND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PoolingScope {
    /// All observed prices of an item across the whole panel.
    #[default]
    Panel,
    /// Only the household's own observations, falling back to the panel.
    Household,
}

/// Multiset of observed unit prices for one item.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalPriceDistribution {
    values: Vec<f64>,
    /// `cumulative[i]` = number of observations `≤ values[i]`.
    cumulative: Vec<u64>,
    /// `guide[b]`: first index whose cumulative count exceeds the smallest
    /// draw falling in bucket `b` of `values.len()` equal buckets.
    guide: Vec<u32>,
}

impl EmpiricalPriceDistribution {
    pub fn from_observations(mut obs: Vec<f64>) -> Option<Self> {
        if obs.is_empty() {
            return None;
        }
        obs.sort_by(f64::total_cmp);
        let mut values = Vec::new();
        let mut cumulative = Vec::new();
        for (i, v) in obs.iter().enumerate() {
            if values.last() == Some(v) {
                *cumulative.last_mut().unwrap() = i as u64 + 1;
            } else {
                values.push(*v);
                cumulative.push(i as u64 + 1);
            }
        }
        let count = obs.len() as u128;
        let buckets = values.len() as u128;
        let guide = (0..buckets)
            .map(|b| {
                let lo = (b * count).div_ceil(buckets) as u64;
                cumulative.partition_point(|&c| c <= lo) as u32
            })
            .collect();
        Some(EmpiricalPriceDistribution {
            values,
            cumulative,
            guide,
        })
    }

    /// Number of observations (with multiplicity).
    pub fn count(&self) -> u64 {
        *self.cumulative.last().unwrap()
    }

    /// Distinct prices with their multiplicities.
    pub fn support(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        let mut prev = 0;
        self.values
            .iter()
            .zip(&self.cumulative)
            .map(move |(&v, &c)| {
                let n = c - prev;
                prev = c;
                (v, n)
            })
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(v, n)| v * n as f64).sum::<f64>() / self.count() as f64
    }

    /// Draws an observed price with probability proportional to its multiplicity.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.values.len() == 1 {
            return self.values[0];
        }
        let count = self.count();
        let u = rng.random_range(0..count);
        let bucket = (u as u128 * self.values.len() as u128 / count as u128) as usize;
        let mut i = self.guide[bucket] as usize;
        while self.cumulative[i] <= u {
            i += 1;
        }
        self.values[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceDistributions {
    scope: PoolingScope,
    item_names: Vec<String>,
    pooled: Vec<Option<EmpiricalPriceDistribution>>,
    per_household: BTreeMap<String, BTreeMap<ItemId, EmpiricalPriceDistribution>>,
}

pub fn build_price_distributions(
    panel: &TransactionPanel,
    scope: PoolingScope,
) -> Result<PriceDistributions> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let mut pooled_obs: Vec<Vec<f64>> = vec![Vec::new(); panel.items.len()];
    let mut per_household = BTreeMap::new();
    for (id, hh) in &panel.households {
        let mut own: BTreeMap<ItemId, Vec<f64>> = BTreeMap::new();
        for p in hh.days.iter().flat_map(|d| &d.purchases) {
            pooled_obs[p.item as usize].push(p.price);
            if scope == PoolingScope::Household {
                own.entry(p.item).or_default().push(p.price);
            }
        }
        if scope == PoolingScope::Household {
            let dists = own
                .into_iter()
                .filter_map(|(k, v)| {
                    EmpiricalPriceDistribution::from_observations(v).map(|d| (k, d))
                })
                .collect();
            per_household.insert(id.clone(), dists);
        }
    }
    Ok(PriceDistributions {
        scope,
        item_names: panel.items.clone(),
        pooled: pooled_obs
            .into_iter()
            .map(EmpiricalPriceDistribution::from_observations)
            .collect(),
        per_household,
    })
}

impl PriceDistributions {
    pub fn scope(&self) -> PoolingScope {
        self.scope
    }

    pub fn pooled(&self, item: ItemId) -> Option<&EmpiricalPriceDistribution> {
        self.pooled.get(item as usize).and_then(Option::as_ref)
    }

    /// Resolves a distribution for every item in the household's universe.
    pub fn for_household(&self, series: &HouseholdSeries) -> Result<HouseholdPrices<'_>> {
        let own = self.per_household.get(&series.household_id);
        let mut dists = Vec::with_capacity(series.items.len());
        let mut fallbacks = Vec::new();
        let mut missing = Vec::new();
        for &k in &series.items {
            let local = match self.scope {
                PoolingScope::Panel => None,
                PoolingScope::Household => own.and_then(|m| m.get(&k)),
            };
            match local {
                Some(d) => dists.push(d),
                None => match self.pooled(k) {
                    Some(d) => {
                        if self.scope == PoolingScope::Household {
                            fallbacks.push(k);
                        }
                        dists.push(d)
                    }
                    None => missing.push(
                        self.item_names
                            .get(k as usize)
                            .cloned()
                            .unwrap_or_else(|| alloc::format!("#{k}")),
                    ),
                },
            }
        }
        if !missing.is_empty() {
            return Err(Error::UnpriceableItems { items: missing });
        }
        Ok(HouseholdPrices { dists, fallbacks })
    }
}

/// Per-item distributions for one household, indexed like `series.items`.
#[derive(Debug, Clone)]
pub struct HouseholdPrices<'a> {
    dists: Vec<&'a EmpiricalPriceDistribution>,
    /// Items resolved from the panel pool under household scope.
    pub fallbacks: Vec<ItemId>,
}

/// The observed part of the cross-expenditure matrix plus the bookkeeping
/// needed to add imputed terms cheaply on every draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpenditureDecomposition {
    n: usize,
    items: Vec<ItemId>,
    observed: Vec<f64>,
    /// Per observation `t`: local item indices without a price at `t`.
    missing: Vec<Vec<u32>>,
    /// Per local item: the quantity in every bundle (`k × n`, zero when not bought).
    quantities: Vec<f64>,
}

impl ExpenditureDecomposition {
    pub fn new(series: &HouseholdSeries) -> Self {
        let n = series.len();
        let k = series.items.len();
        let local = |item: ItemId| series.items.binary_search(&item).unwrap();

        let locals: Vec<Vec<usize>> = series
            .days
            .iter()
            .map(|day| day.purchases.iter().map(|p| local(p.item)).collect())
            .collect();
        let mut quantities = vec![0.0; k * n];
        for (s, day) in series.days.iter().enumerate() {
            for p in &day.purchases {
                quantities[local(p.item) * n + s] = p.quantity;
            }
        }

        let mut observed = vec![0.0; n * n];
        let mut missing = Vec::with_capacity(n);
        let mut dense = vec![0.0; k];
        let mut priced = vec![false; k];
        for (t, day) in series.days.iter().enumerate() {
            dense.fill(0.0);
            priced.fill(false);
            for p in &day.purchases {
                let j = local(p.item);
                dense[j] = p.price;
                priced[j] = true;
            }
            let row = &mut observed[t * n..(t + 1) * n];
            for (s, xs) in series.days.iter().enumerate() {
                row[s] = if s == t {
                    day.budget
                } else {
                    xs.purchases
                        .iter()
                        .zip(&locals[s])
                        .map(|(x, &j)| dense[j] * x.quantity)
                        .sum()
                };
            }
            missing.push((0..k as u32).filter(|&j| !priced[j as usize]).collect());
        }
        ExpenditureDecomposition {
            n,
            items: series.items.clone(),
            observed,
            missing,
            quantities,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of `(t, item)` cells a draw must fill.
    pub fn missing_cells(&self) -> usize {
        self.missing.iter().map(Vec::len).sum()
    }

    /// The observed-price part of `E`, row-major.
    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// Unpriced `(item, quantity)` terms of `p_t · x_s`.
    pub fn missing_terms(&self, t: usize, s: usize) -> Vec<(ItemId, f64)> {
        self.missing[t]
            .iter()
            .filter_map(|&j| {
                let q = self.quantities[j as usize * self.n + s];
                (q != 0.0).then(|| (self.items[j as usize], q))
            })
            .collect()
    }

    /// Missing cells in fill order: `t` ascending, then item ascending.
    pub fn missing_cells_iter(&self) -> impl Iterator<Item = (usize, ItemId)> + '_ {
        self.missing
            .iter()
            .enumerate()
            .flat_map(move |(t, js)| js.iter().map(move |&j| (t, self.items[j as usize])))
    }

    /// Samples one price per missing cell, in fill order.
    pub fn sample_fill(
        &self,
        prices: &HouseholdPrices<'_>,
        rng: &mut StreamRng,
        fill: &mut Vec<f64>,
    ) {
        fill.clear();
        for js in &self.missing {
            fill.extend(js.iter().map(|&j| prices.dists[j as usize].sample(rng)));
        }
    }

    /// Writes `E = E_obs + Σ imputed terms` into `out` (row-major).
    pub fn assemble(&self, fill: &[f64], out: &mut Vec<f64>) {
        let n = self.n;
        out.clear();
        out.extend_from_slice(&self.observed);
        let column = |j: u32| &self.quantities[j as usize * n..(j as usize + 1) * n];
        let mut offset = 0;
        for (t, js) in self.missing.iter().enumerate() {
            let row = &mut out[t * n..(t + 1) * n];
            let prices = &fill[offset..offset + js.len()];
            offset += js.len();
            // Eight terms per pass over the row.
            let mut octs = js.chunks_exact(8).zip(prices.chunks_exact(8));
            for (j, p) in &mut octs {
                let c: [&[f64]; 8] = core::array::from_fn(|i| &column(j[i])[..row.len()]);
                for (s, e) in row.iter_mut().enumerate() {
                    let lo = (p[0] * c[0][s] + p[1] * c[1][s]) + (p[2] * c[2][s] + p[3] * c[3][s]);
                    let hi = (p[4] * c[4][s] + p[5] * c[5][s]) + (p[6] * c[6][s] + p[7] * c[7][s]);
                    *e += lo + hi;
                }
            }
            let rest = js.len() % 8;
            for (&j, &p) in js[js.len() - rest..]
                .iter()
                .zip(&prices[prices.len() - rest..])
            {
                for (e, q) in row.iter_mut().zip(column(j)) {
                    *e += p * q;
                }
            }
        }
        assert_eq!(
            offset,
            fill.len(),
            "fill length does not match the missing cells"
        );
    }

    pub fn matrix(&self, fill: &[f64]) -> ExpenditureMatrix {
        let mut out = Vec::new();
        self.assemble(fill, &mut out);
        ExpenditureMatrix::from_raw_unchecked(self.n, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateOptions {
    pub draws: usize,
    pub seed: u64,
    pub method: AeiMethod,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            draws: DEFAULT_DRAWS,
            seed: 0,
            method: AeiMethod::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub household_id: String,
    pub draws: usize,
    pub seed: u64,
    pub missing_cells: usize,
    pub garp_aei: Vec<f64>,
    pub warp_aei: Vec<f64>,
    pub aei_hat: f64,
    pub aei_sd: f64,
    pub warp_aei_hat: f64,
    pub rho_hat: f64,
}

/// Mean anchored at the first value, so identical values give that value exactly.
fn anchored_mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

impl MonteCarloEstimate {
    pub fn from_draws(
        household_id: String,
        seed: u64,
        missing_cells: usize,
        garp_aei: Vec<f64>,
        warp_aei: Vec<f64>,
    ) -> Self {
        let m = garp_aei.len();
        assert!(m > 0 && warp_aei.len() == m);
        let aei_hat = anchored_mean(&garp_aei);
        let aei_sd = if m > 1 {
            libm::sqrt(
                garp_aei
                    .iter()
                    .map(|x| (x - aei_hat) * (x - aei_hat))
                    .sum::<f64>()
                    / (m - 1) as f64,
            )
        } else {
            0.0
        };
        let differ = garp_aei
            .iter()
            .zip(&warp_aei)
            .filter(|(g, w)| (*w - *g).abs() > RHO_TOLERANCE)
            .count();
        MonteCarloEstimate {
            household_id,
            draws: m,
            seed,
            missing_cells,
            warp_aei_hat: anchored_mean(&warp_aei),
            aei_hat,
            aei_sd,
            rho_hat: differ as f64 / m as f64,
            garp_aei,
            warp_aei,
        }
    }
}

/// Per-worker scratch space.
#[derive(Debug, Default)]
pub struct Workspace {
    solver: AeiSolver,
    fill: Vec<f64>,
    matrix: Vec<f64>,
}

/// Everything needed to evaluate draws for one household.
#[derive(Debug)]
pub struct Estimator<'a> {
    series: &'a HouseholdSeries,
    decomposition: ExpenditureDecomposition,
    prices: HouseholdPrices<'a>,
    options: EstimateOptions,
}

impl<'a> Estimator<'a> {
    pub fn new(
        series: &'a HouseholdSeries,
        distributions: &'a PriceDistributions,
        options: EstimateOptions,
    ) -> Result<Self> {
        if options.draws == 0 {
            return Err(Error::param("at least one draw is required"));
        }
        let options = EstimateOptions {
            method: options.method.validate()?,
            ..options
        };
        let prices = distributions.for_household(series)?;
        Ok(Estimator {
            series,
            decomposition: ExpenditureDecomposition::new(series),
            prices,
            options,
        })
    }

    pub fn decomposition(&self) -> &ExpenditureDecomposition {
        &self.decomposition
    }

    pub fn prices(&self) -> &HouseholdPrices<'a> {
        &self.prices
    }

    /// RNG stream of one draw.
    pub fn draw_rng(&self, index: u64) -> StreamRng {
        rng::stream(self.options.seed, &self.series.household_id, index)
    }

    /// Imputed prices of one draw, in [`ExpenditureDecomposition::missing_cells_iter`] order.
    pub fn draw_fill(&self, index: u64) -> Vec<f64> {
        let mut fill = Vec::new();
        self.decomposition
            .sample_fill(&self.prices, &mut self.draw_rng(index), &mut fill);
        fill
    }

    pub fn draw(&self, index: u64, ws: &mut Workspace) -> EfficiencyResult {
        let mut rng = self.draw_rng(index);
        self.decomposition
            .sample_fill(&self.prices, &mut rng, &mut ws.fill);
        self.decomposition.assemble(&ws.fill, &mut ws.matrix);
        let e = ExpenditureMatrix::from_raw_unchecked(
            self.decomposition.n,
            core::mem::take(&mut ws.matrix),
        );
        let res = ws.solver.evaluate(&e, self.options.method);
        ws.matrix = e.into_data();
        res
    }

    pub fn run(&self) -> MonteCarloEstimate {
        let mut ws = Workspace::default();
        let m = self.options.draws;
        let (garp, warp) = if self.decomposition.missing_cells() == 0 {
            let r = self.draw(0, &mut ws);
            (vec![r.garp_aei; m], vec![r.warp_aei; m])
        } else {
            (0..m as u64)
                .map(|d| self.draw(d, &mut ws))
                .map(|r| (r.garp_aei, r.warp_aei))
                .unzip()
        };
        MonteCarloEstimate::from_draws(
            self.series.household_id.clone(),
            self.options.seed,
            self.decomposition.missing_cells(),
            garp,
            warp,
        )
    }
}

pub fn estimate_aei(
    series: &HouseholdSeries,
    distributions: &PriceDistributions,
    options: EstimateOptions,
) -> Result<MonteCarloEstimate> {
    Ok(Estimator::new(series, distributions, options)?.run())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    /// Running mean of the GARP index after `m = 1, 2, …, M` draws.
    pub running_mean: Vec<f64>,
    /// Smallest `m` after which the running mean stays within the band of its final value.
    pub stabilization_draw: usize,
}

pub fn convergence_diagnostic(estimate: &MonteCarloEstimate) -> Result<ConvergenceTrace> {
    let xs = &estimate.garp_aei;
    if xs.len() < 2 {
        return Err(Error::param("convergence needs at least two draws"));
    }
    let x0 = xs[0];
    let mut acc = 0.0;
    let running_mean: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x - x0;
            x0 + acc / (i + 1) as f64
        })
        .collect();
    let last = *running_mean.last().unwrap();
    let stabilization_draw = running_mean
        .iter()
        .rposition(|m| (m - last).abs() >= STABILITY_BAND)
        .map_or(1, |i| i + 2);
    Ok(ConvergenceTrace {
        running_mean,
        stabilization_draw,
    })
}
