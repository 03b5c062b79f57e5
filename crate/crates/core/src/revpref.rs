//! Revealed-preference relations, WARP/GARP consistency at an efficiency
//! level, and the Afriat efficiency index.
//!
//! All relations are evaluated on the ratio `E[t][s] / E[t][t]`: observation
//! `t` is directly revealed preferred to `s` at efficiency `e` when that
//! ratio is at most `e`, and strictly so when it is below `e`. Because the
//! index is always one of these ratios, comparing ratios (instead of
//! `e * E[t][t]` against `E[t][s]`) keeps ties exact at the critical values.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bitmat::BitMatrix;
use crate::error::{Error, Result};
use crate::panel::HouseholdSeries;

/// Default bisection tolerance.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-6;

/// Cross-expenditure matrix: entry `(t, s)` is the cost of bundle `s` at the
/// prices of observation `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpenditureMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ExpenditureMatrix {
    /// Row-major `n × n` matrix. Entries must be finite and non-negative and
    /// the diagonal strictly positive.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::param(
                "expenditure matrix must be square and non-empty",
            ));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param(
                "expenditure entries must be finite and non-negative",
            ));
        }
        if (0..n).any(|t| data[t * n + t] <= 0.0) {
            return Err(Error::param("own expenditure must be positive"));
        }
        Ok(ExpenditureMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::param("expenditure matrix must be square"));
        }
        Self::from_vec(n, rows.concat())
    }

    /// Builds `E[t][s] = p_t · x_s` from dense price and bundle vectors.
    pub fn from_dense(prices: &[Vec<f64>], bundles: &[Vec<f64>]) -> Result<Self> {
        let n = prices.len();
        if bundles.len() != n {
            return Err(Error::param(
                "prices and bundles must have the same number of observations",
            ));
        }
        let k = prices.first().map_or(0, Vec::len);
        if prices.iter().chain(bundles).any(|v| v.len() != k) {
            return Err(Error::param(
                "all price and bundle vectors must have the same length",
            ));
        }
        let mut data = vec![0.0; n * n];
        for (t, p) in prices.iter().enumerate() {
            for (s, x) in bundles.iter().enumerate() {
                data[t * n + s] = p.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
        Self::from_vec(n, data)
    }

    pub(crate) fn from_raw_unchecked(n: usize, data: Vec<f64>) -> Self {
        ExpenditureMatrix { n, data }
    }

    pub(crate) fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Observation count T.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, t: usize, s: usize) -> f64 {
        self.data[t * self.n + s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.n..(t + 1) * self.n]
    }

    /// `E[t][s] / E[t][t]`, row-major.
    pub fn ratios(&self) -> Vec<f64> {
        let mut out = Vec::new();
        fill_ratios(self, &mut out);
        out
    }
}

fn fill_ratios(e: &ExpenditureMatrix, out: &mut Vec<f64>) {
    let n = e.n;
    out.clear();
    out.reserve(n * n);
    for t in 0..n {
        let own = e.data[t * n + t];
        out.extend(e.data[t * n..(t + 1) * n].iter().map(|v| v / own));
    }
}

/// Cross-expenditure matrix of a series whose prices are complete.
pub fn cross_expenditure(series: &HouseholdSeries) -> Result<ExpenditureMatrix> {
    let n = series.len();
    for (t, day) in series.days.iter().enumerate() {
        if day.purchases.len() != series.items.len() {
            let item = series
                .items
                .iter()
                .find(|&&k| day.price(k).is_none())
                .copied()
                .unwrap_or_default();
            return Err(Error::IncompletePrices {
                t,
                item: format!("#{item}"),
            });
        }
    }
    // Every day prices the full universe, so purchases line up index by index.
    let mut data = vec![0.0; n * n];
    for (t, pt) in series.days.iter().enumerate() {
        for (s, xs) in series.days.iter().enumerate() {
            data[t * n + s] = if t == s {
                pt.budget
            } else {
                pt.purchases
                    .iter()
                    .zip(&xs.purchases)
                    .map(|(p, x)| p.price * x.quantity)
                    .sum()
            };
        }
    }
    ExpenditureMatrix::from_vec(n, data)
}

/// Directly revealed, strictly revealed, and (transitively) revealed
/// preference relations at one efficiency level.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationSet {
    pub efficiency: f64,
    pub r0: BitMatrix,
    pub p0: BitMatrix,
    pub r: BitMatrix,
}

pub fn relations_at(e: &ExpenditureMatrix, efficiency: f64) -> RelationSet {
    let ratios = e.ratios();
    let n = e.len();
    let r0 = BitMatrix::from_fn(n, |t, s| ratios[t * n + s] <= efficiency);
    let p0 = BitMatrix::from_fn(n, |t, s| ratios[t * n + s] < efficiency);
    let r = r0.closure();
    RelationSet {
        efficiency,
        r0,
        p0,
        r,
    }
}

/// A GARP violation: `t` is revealed preferred to `s` while `s` is directly
/// and strictly revealed preferred to `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub t: usize,
    pub s: usize,
}

pub fn garp_violation(e: &ExpenditureMatrix, efficiency: f64) -> Option<Violation> {
    let rel = relations_at(e, efficiency);
    let p0t = BitMatrix::from_fn(e.len(), |t, s| rel.p0.get(s, t));
    rel.r.first_common(&p0t).map(|(t, s)| Violation { t, s })
}

pub fn check_garp_e(e: &ExpenditureMatrix, efficiency: f64) -> bool {
    garp_violation(e, efficiency).is_none()
}

/// A violating cycle `[t, …, s]`: consecutive entries (and `s → t`) are
/// directly revealed preferred, and `s → t` is strict.
pub fn garp_witness_cycle(e: &ExpenditureMatrix, efficiency: f64) -> Option<Vec<usize>> {
    let Violation { t, s } = garp_violation(e, efficiency)?;
    let rel = relations_at(e, efficiency);
    let n = e.len();
    // Shortest R0 path from t to s.
    let mut prev = vec![usize::MAX; n];
    let mut queue = alloc::collections::VecDeque::from([t]);
    prev[t] = t;
    while let Some(u) = queue.pop_front() {
        if u == s && u != t {
            break;
        }
        for (v, pv) in prev.iter_mut().enumerate() {
            if rel.r0.get(u, v) && *pv == usize::MAX {
                *pv = u;
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![s];
    let mut cur = s;
    while cur != t {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

pub fn warp_violation(e: &ExpenditureMatrix, efficiency: f64) -> Option<Violation> {
    let r = e.ratios();
    let n = e.len();
    for t in 0..n {
        for s in 0..n {
            if t != s && r[t * n + s] <= efficiency && r[s * n + t] < efficiency {
                return Some(Violation { t, s });
            }
        }
    }
    None
}

/// WARP at an efficiency level: no pair `t ≠ s` with `t` directly revealed
/// preferred to `s` and `s` directly strictly revealed preferred to `t`.
pub fn check_warp_e(e: &ExpenditureMatrix, efficiency: f64) -> bool {
    warp_violation(e, efficiency).is_none()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axiom {
    Garp,
    Warp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AeiMethod {
    /// Search over the critical ratios; returns the exact supremum.
    Exact,
    /// Bisection on `[0, 1]` to the given tolerance.
    Bisection { tol: f64 },
}

impl AeiMethod {
    pub fn validate(self) -> Result<Self> {
        match self {
            AeiMethod::Bisection { tol } if !(tol > 0.0 && tol < 1.0) => Err(Error::param(
                format!("bisection tolerance must lie in (0, 1), got {tol}"),
            )),
            m => Ok(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyResult {
    pub garp_aei: f64,
    pub warp_aei: f64,
    pub garp_satisfied_at_1: bool,
    pub warp_satisfied_at_1: bool,
    pub method: AeiMethod,
}

/// Afriat efficiency index for one axiom.
pub fn aei(e: &ExpenditureMatrix, axiom: Axiom, method: AeiMethod) -> Result<f64> {
    let method = method.validate()?;
    let mut solver = AeiSolver::new();
    solver.load(e);
    Ok(match axiom {
        Axiom::Warp => solver.warp_aei(method),
        Axiom::Garp => {
            let bound = solver.warp_aei(AeiMethod::Exact);
            solver.garp_aei(method, bound)
        }
    })
}

pub fn efficiency(e: &ExpenditureMatrix, method: AeiMethod) -> Result<EfficiencyResult> {
    let method = method.validate()?;
    Ok(AeiSolver::new().evaluate(e, method))
}

/// Reusable buffers for repeated index computations on matrices of the
/// same size (one solver per worker).
#[derive(Debug, Clone, Default)]
pub struct AeiSolver {
    n: usize,
    ratios: Vec<f64>,
    candidates: Vec<f64>,
    r0: Option<BitMatrix>,
    p0t: Option<BitMatrix>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Strictness {
    /// Relations at `e = c`: weak `≤ c`, strict `< c`.
    AtPoint,
    /// Relations on the open interval just above `c`: both `≤ c`.
    AboveCandidate,
}

impl AeiSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn load(&mut self, e: &ExpenditureMatrix) {
        self.n = e.len();
        fill_ratios(e, &mut self.ratios);
        if self.r0.as_ref().is_none_or(|m| m.len() != self.n) {
            self.r0 = Some(BitMatrix::new(self.n));
            self.p0t = Some(BitMatrix::new(self.n));
        }
    }

    /// Both indices and the satisfaction flags at full efficiency. The
    /// method must already be validated.
    pub fn evaluate(&mut self, e: &ExpenditureMatrix, method: AeiMethod) -> EfficiencyResult {
        self.load(e);
        let warp_exact = self.warp_aei(AeiMethod::Exact);
        let warp_aei = match method {
            AeiMethod::Exact => warp_exact,
            m => self.warp_aei(m),
        };
        let garp_aei = self.garp_aei(method, warp_exact);
        let garp_satisfied_at_1 = garp_aei == 1.0 && self.garp_holds(1.0, Strictness::AtPoint);
        let warp_satisfied_at_1 = warp_aei == 1.0 && self.warp_holds(1.0);
        EfficiencyResult {
            garp_aei,
            warp_aei,
            garp_satisfied_at_1,
            warp_satisfied_at_1,
            method,
        }
    }

    fn warp_holds(&self, c: f64) -> bool {
        let n = self.n;
        let r = &self.ratios;
        (0..n).all(|t| (0..n).all(|s| t == s || !(r[t * n + s] <= c && r[s * n + t] < c)))
    }

    fn warp_aei(&self, method: AeiMethod) -> f64 {
        match method {
            // A pair (t, s) first violates at max(r_ts, r_st), so the index
            // is the smallest such pairwise maximum.
            AeiMethod::Exact => {
                let n = self.n;
                let r = &self.ratios;
                let mut best: f64 = 1.0;
                for t in 0..n {
                    for s in t + 1..n {
                        best = best.min(r[t * n + s].max(r[s * n + t]));
                    }
                }
                best
            }
            AeiMethod::Bisection { tol } => bisect(tol, |c| self.warp_holds(c)),
        }
    }

    fn garp_holds(&mut self, c: f64, mode: Strictness) -> bool {
        let n = self.n;
        let r0 = self.r0.as_mut().unwrap();
        let p0t = self.p0t.as_mut().unwrap();
        r0.clear_all();
        p0t.clear_all();
        let mut any_strict = false;
        for t in 0..n {
            let row = &self.ratios[t * n..(t + 1) * n];
            for (s, &v) in row.iter().enumerate() {
                if v <= c {
                    r0.set(t, s);
                    if mode == Strictness::AboveCandidate || v < c {
                        p0t.set(s, t);
                        any_strict = true;
                    }
                }
            }
        }
        if !any_strict {
            return true;
        }
        r0.transitive_closure();
        r0.first_common(p0t).is_none()
    }

    /// `upper` must bound the GARP index from above (the WARP index does).
    fn garp_aei(&mut self, method: AeiMethod, upper: f64) -> f64 {
        if self.n <= 1 {
            return 1.0;
        }
        match method {
            AeiMethod::Bisection { tol } => {
                bisect(tol, |c| self.garp_holds(c, Strictness::AtPoint))
            }
            AeiMethod::Exact => self.garp_exact(upper, GALLOP_WINDOW),
        }
    }

    fn garp_exact(&mut self, upper: f64, window: usize) -> f64 {
        // Satisfaction is downward closed in e, and the WARP bound is usually
        // tight, so search down from it.
        if self.garp_holds(upper, Strictness::AtPoint) {
            return upper;
        }
        let mut cands = core::mem::take(&mut self.candidates);
        cands.clear();
        cands.extend(self.ratios.iter().copied().filter(|&v| v < upper));
        cands.push(0.0);

        let split = cands.len().saturating_sub(window);
        if split > 0 && split < cands.len() {
            cands.select_nth_unstable_by(split, f64::total_cmp);
        }
        let (rest, head) = cands.split_at_mut(split);
        head.sort_unstable_by(|a, b| b.total_cmp(a));

        // Gallop over the largest candidates, then bisect the last gap.
        let mut failing: Option<usize> = None;
        let (mut idx, mut step) = (0, 1);
        let found = loop {
            if idx >= head.len() {
                if failing.is_some_and(|f| f + 1 < head.len()) {
                    idx = head.len() - 1;
                } else {
                    break None;
                }
            }
            if self.garp_holds(head[idx], Strictness::AtPoint) {
                break Some(idx);
            }
            failing = Some(idx);
            idx += step;
            step *= 2;
        };
        let (best, fail) = match found {
            Some(j) => {
                let (mut a, mut b) = (failing.map_or(0, |f| f + 1), j);
                while a < b {
                    let m = (a + b) / 2;
                    if self.garp_holds(head[m], Strictness::AtPoint) {
                        b = m;
                    } else {
                        a = m + 1;
                    }
                }
                (head[a], if a == 0 { upper } else { head[a - 1] })
            }
            None => {
                let mut fail = head.last().copied().unwrap_or(upper);
                let mut best = 0.0f64;
                // Narrow by order statistics until the largest satisfying
                // candidate and its failing successor are adjacent.
                let mut slice = rest;
                while !slice.is_empty() {
                    let mid = slice.len() / 2;
                    let (left, m, right) = slice.select_nth_unstable_by(mid, f64::total_cmp);
                    let c = *m;
                    if self.garp_holds(c, Strictness::AtPoint) {
                        best = best.max(c);
                        slice = right;
                    } else {
                        fail = fail.min(c);
                        slice = left;
                    }
                }
                (best, fail)
            }
        };
        self.candidates = cands;
        // Between two adjacent candidates the relations are constant; if they
        // are consistent there the supremum is the failing endpoint.
        if fail > best && self.garp_holds(best, Strictness::AboveCandidate) {
            fail
        } else {
            best
        }
    }
}

/// Largest candidate ratios searched before falling back to bisection.
const GALLOP_WINDOW: usize = 64;

/// Supremum of a downward-closed predicate on `[0, 1]` by bisection.
fn bisect(tol: f64, mut holds: impl FnMut(f64) -> bool) -> f64 {
    if holds(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
