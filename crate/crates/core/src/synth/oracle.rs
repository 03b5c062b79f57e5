//! Exhaustive reference implementations of GARP/WARP and the efficiency
//! index, for fuzz-testing the engine.
//!
//! The oracle never forms the ratio `E[t][s] / E[t][t]`. An efficiency level
//! is a fraction `num / den` and the weak relation is tested as
//! `num * E[t][t] >= den * E[t][s]`, which is exact for integer-valued
//! matrices of moderate size. GARP is checked by enumerating every simple
//! cycle of the weak relation.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::revpref::ExpenditureMatrix;

/// Largest T the oracle accepts.
pub const ORACLE_MAX_T: usize = 10;

#[derive(Debug, Clone, Copy)]
struct Frac {
    num: f64,
    den: f64,
}

impl Frac {
    fn cmp(&self, other: &Frac) -> Ordering {
        (self.num * other.den).total_cmp(&(other.num * self.den))
    }

    fn midpoint(&self, other: &Frac) -> Frac {
        Frac {
            num: self.num * other.den + other.num * self.den,
            den: 2.0 * self.den * other.den,
        }
    }

    fn value(&self) -> f64 {
        self.num / self.den
    }
}

struct Relations {
    n: usize,
    weak: Vec<bool>,
    strict: Vec<bool>,
}

fn relations(e: &ExpenditureMatrix, level: Frac) -> Relations {
    let n = e.len();
    let mut weak = vec![false; n * n];
    let mut strict = vec![false; n * n];
    for t in 0..n {
        let lhs = level.num * e.get(t, t);
        for s in 0..n {
            let rhs = level.den * e.get(t, s);
            weak[t * n + s] = lhs >= rhs;
            strict[t * n + s] = lhs > rhs;
        }
    }
    Relations { n, weak, strict }
}

/// Depth-first search over simple cycles through `start` whose other
/// vertices are all larger than `start`.
fn strict_cycle_from(
    rel: &Relations,
    start: usize,
    at: usize,
    on_path: &mut [bool],
    has_strict: bool,
) -> bool {
    let n = rel.n;
    for next in 0..n {
        if !rel.weak[at * n + next] {
            continue;
        }
        let strict = has_strict || rel.strict[at * n + next];
        if next == start && at != start {
            if strict {
                return true;
            }
            continue;
        }
        if next > start && !on_path[next] {
            on_path[next] = true;
            let found = strict_cycle_from(rel, start, next, on_path, strict);
            on_path[next] = false;
            if found {
                return true;
            }
        }
    }
    false
}

fn garp_holds(e: &ExpenditureMatrix, level: Frac) -> bool {
    let rel = relations(e, level);
    let mut on_path = vec![false; rel.n];
    (0..rel.n).all(|start| {
        on_path[start] = true;
        let found = strict_cycle_from(&rel, start, start, &mut on_path, false);
        on_path[start] = false;
        !found
    })
}

fn warp_holds(e: &ExpenditureMatrix, level: Frac) -> bool {
    let rel = relations(e, level);
    let n = rel.n;
    (0..n).all(|t| (0..n).all(|s| t == s || !(rel.weak[t * n + s] && rel.strict[s * n + t])))
}

/// Supremum of the satisfying levels, evaluating every critical value and
/// every gap between consecutive critical values (no monotonicity assumed).
fn supremum(
    e: &ExpenditureMatrix,
    holds: impl Fn(&ExpenditureMatrix, Frac) -> bool,
) -> Result<f64> {
    let n = e.len();
    if n > ORACLE_MAX_T {
        return Err(Error::OracleTooLarge {
            t: n,
            limit: ORACLE_MAX_T,
        });
    }
    let one = Frac { num: 1.0, den: 1.0 };
    let mut crit = vec![Frac { num: 0.0, den: 1.0 }, one];
    for t in 0..n {
        for s in 0..n {
            let f = Frac {
                num: e.get(t, s),
                den: e.get(t, t),
            };
            if t != s && f.cmp(&one) != Ordering::Greater {
                crit.push(f);
            }
        }
    }
    crit.sort_by(Frac::cmp);
    crit.dedup_by(|a, b| a.cmp(b) == Ordering::Equal);

    let mut best: f64 = 0.0;
    for (i, c) in crit.iter().enumerate() {
        if holds(e, *c) {
            best = best.max(c.value());
        }
        if let Some(next) = crit.get(i + 1) {
            if holds(e, c.midpoint(next)) {
                best = best.max(next.value());
            }
        }
    }
    Ok(best)
}

/// Afriat efficiency index by exhaustive search.
pub fn brute_force_aei(e: &ExpenditureMatrix) -> Result<f64> {
    supremum(e, garp_holds)
}

/// WARP analogue of [`brute_force_aei`].
pub fn brute_force_warp_aei(e: &ExpenditureMatrix) -> Result<f64> {
    supremum(e, warp_holds)
}

/// GARP at a given level by cycle enumeration.
pub fn brute_force_garp(e: &ExpenditureMatrix, efficiency: f64) -> bool {
    garp_holds(
        e,
        Frac {
            num: efficiency,
            den: 1.0,
        },
    )
}

pub fn brute_force_warp(e: &ExpenditureMatrix, efficiency: f64) -> bool {
    warp_holds(
        e,
        Frac {
            num: efficiency,
            den: 1.0,
        },
    )
}
