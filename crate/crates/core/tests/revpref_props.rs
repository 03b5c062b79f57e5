use proptest::prelude::*;
use rpkit_core::revpref::*;
use rpkit_core::synth::{
    brute_force_aei, brute_force_garp, brute_force_warp, brute_force_warp_aei,
};
use rpkit_core::BitMatrix;

#[derive(Debug, Clone)]
struct Data {
    prices: Vec<Vec<f64>>,
    bundles: Vec<Vec<f64>>,
}

impl Data {
    fn matrix(&self) -> ExpenditureMatrix {
        ExpenditureMatrix::from_dense(&self.prices, &self.bundles).unwrap()
    }
}

fn data(max_t: usize, max_k: usize) -> impl Strategy<Value = Data> {
    (1..=max_t, 1..=max_k).prop_flat_map(|(t, k)| {
        let row = proptest::collection::vec(1u32..=20, k)
            .prop_map(|v| v.into_iter().map(f64::from).collect::<Vec<_>>());
        (
            proptest::collection::vec(row.clone(), t),
            proptest::collection::vec(row, t),
        )
            .prop_map(|(prices, bundles)| Data { prices, bundles })
    })
}

const BISECT: AeiMethod = AeiMethod::Bisection { tol: 1e-6 };

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn exact_index_matches_oracle(d in data(7, 4)) {
        let e = d.matrix();
        let r = efficiency(&e, AeiMethod::Exact).unwrap();
        prop_assert!((r.garp_aei - brute_force_aei(&e).unwrap()).abs() <= 1e-9);
        prop_assert!((r.warp_aei - brute_force_warp_aei(&e).unwrap()).abs() <= 1e-9);
        let b = efficiency(&e, BISECT).unwrap();
        prop_assert!((b.garp_aei - r.garp_aei).abs() <= 1e-6);
        prop_assert!((b.warp_aei - r.warp_aei).abs() <= 1e-6);
    }

    #[test]
    fn exact_index_on_larger_panels(d in data(40, 3)) {
        let e = d.matrix();
        let r = efficiency(&e, AeiMethod::Exact).unwrap();
        let b = efficiency(&e, BISECT).unwrap();
        prop_assert!((b.garp_aei - r.garp_aei).abs() <= 1e-6);
        prop_assert!(check_garp_e(&e, r.garp_aei * (1.0 - 1e-9)));
        if r.garp_aei < 1.0 {
            prop_assert!(!check_garp_e(&e, (r.garp_aei * (1.0 + 1e-9)).min(1.0)));
        }
    }

    #[test]
    fn checks_match_oracle_at_random_levels(d in data(6, 4), level in 0.0f64..=1.0) {
        let e = d.matrix();
        prop_assert_eq!(check_garp_e(&e, level), brute_force_garp(&e, level));
        prop_assert_eq!(check_warp_e(&e, level), brute_force_warp(&e, level));
        prop_assert_eq!(check_garp_e(&e, 1.0), brute_force_garp(&e, 1.0));
    }

    #[test]
    fn warp_index_bounds_garp_index(d in data(10, 5)) {
        let r = efficiency(&d.matrix(), AeiMethod::Exact).unwrap();
        prop_assert!(r.warp_aei >= r.garp_aei);
        prop_assert!((0.0..=1.0).contains(&r.garp_aei));
        prop_assert_eq!(r.garp_satisfied_at_1, check_garp_e(&d.matrix(), 1.0));
        prop_assert_eq!(r.warp_satisfied_at_1, check_warp_e(&d.matrix(), 1.0));
    }

    #[test]
    fn satisfaction_is_downward_closed(d in data(8, 4), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let e = d.matrix();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if check_garp_e(&e, hi) {
            prop_assert!(check_garp_e(&e, lo));
        }
        if check_warp_e(&e, hi) {
            prop_assert!(check_warp_e(&e, lo));
        }
    }

    #[test]
    fn index_is_the_boundary(d in data(8, 4)) {
        let e = d.matrix();
        let aei = efficiency(&e, AeiMethod::Exact).unwrap().garp_aei;
        prop_assert!(check_garp_e(&e, aei * (1.0 - 1e-9)));
        if aei < 1.0 {
            prop_assert!(!check_garp_e(&e, (aei * (1.0 + 1e-9)).min(1.0)));
        }
    }

    #[test]
    fn price_scaling_leaves_index_unchanged(d in data(8, 4), t in 0usize..8, c in 0.01f64..100.0) {
        let base = efficiency(&d.matrix(), AeiMethod::Exact).unwrap();
        let mut scaled = d.clone();
        let t = t % d.prices.len();
        scaled.prices[t].iter_mut().for_each(|p| *p *= c);
        let r = efficiency(&scaled.matrix(), AeiMethod::Exact).unwrap();
        prop_assert!((r.garp_aei - base.garp_aei).abs() <= 1e-12);
        prop_assert!((r.warp_aei - base.warp_aei).abs() <= 1e-12);
    }

    #[test]
    fn unit_rescaling_leaves_index_unchanged(d in data(8, 4), k in 0usize..4, c in 0.01f64..100.0) {
        let base = efficiency(&d.matrix(), AeiMethod::Exact).unwrap();
        let mut scaled = d.clone();
        let k = k % d.prices[0].len();
        for t in 0..d.prices.len() {
            scaled.prices[t][k] /= c;
            scaled.bundles[t][k] *= c;
        }
        let r = efficiency(&scaled.matrix(), AeiMethod::Exact).unwrap();
        prop_assert!((r.garp_aei - base.garp_aei).abs() <= 1e-12);
        prop_assert!((r.warp_aei - base.warp_aei).abs() <= 1e-12);
    }

    #[test]
    fn permutation_leaves_index_unchanged(d in data(8, 4), perm_seed in any::<u64>()) {
        let n = d.prices.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut state = perm_seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let permuted = Data {
            prices: order.iter().map(|&i| d.prices[i].clone()).collect(),
            bundles: order.iter().map(|&i| d.bundles[i].clone()).collect(),
        };
        let a = efficiency(&d.matrix(), AeiMethod::Exact).unwrap();
        let b = efficiency(&permuted.matrix(), AeiMethod::Exact).unwrap();
        prop_assert_eq!(a.garp_aei, b.garp_aei);
        prop_assert_eq!(a.warp_aei, b.warp_aei);
    }

    #[test]
    fn appending_never_raises_index(d in data(9, 4), extra in data(1, 4)) {
        let k = d.prices[0].len();
        let fit = |v: &Vec<f64>| (0..k).map(|i| v[i % v.len()]).collect::<Vec<f64>>();
        let mut longer = d.clone();
        longer.prices.push(fit(&extra.prices[0]));
        longer.bundles.push(fit(&extra.bundles[0]));
        let a = efficiency(&d.matrix(), AeiMethod::Exact).unwrap();
        let b = efficiency(&longer.matrix(), AeiMethod::Exact).unwrap();
        prop_assert!(b.garp_aei <= a.garp_aei);
        prop_assert!(b.warp_aei <= a.warp_aei);
    }

    #[test]
    fn witness_cycle_is_a_real_violation(d in data(8, 4), level in 0.5f64..=1.0) {
        let e = d.matrix();
        match garp_witness_cycle(&e, level) {
            None => prop_assert!(check_garp_e(&e, level)),
            Some(cycle) => {
                let rel = relations_at(&e, level);
                for w in cycle.windows(2) {
                    prop_assert!(rel.r0.get(w[0], w[1]));
                }
                let (first, last) = (cycle[0], *cycle.last().unwrap());
                prop_assert!(rel.p0.get(last, first));
            }
        }
    }

    #[test]
    fn relation_invariants(d in data(8, 4), level in 0.0f64..=1.0) {
        let rel = relations_at(&d.matrix(), level);
        prop_assert!(rel.p0.is_subset_of(&rel.r0));
        prop_assert!(rel.r0.is_subset_of(&rel.r));
        prop_assert_eq!(rel.r.closure(), rel.r.clone());
    }

    #[test]
    fn closure_is_least_transitive_superset(n in 1usize..40, density in 0.0f64..0.2, seed in any::<u64>()) {
        let mut state = seed;
        let x = BitMatrix::from_fn(n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) < density
        });
        let c = x.closure();
        prop_assert!(x.is_subset_of(&c));
        for i in 0..n {
            for j in 0..n {
                if c.get(i, j) {
                    for k in 0..n {
                        if c.get(j, k) {
                            prop_assert!(c.get(i, k));
                        }
                    }
                }
            }
        }
        // Least: every closure edge is a path of x-edges (reachability by search).
        for i in 0..n {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = (0..n).filter(|&j| x.get(i, j)).collect();
            while let Some(u) = stack.pop() {
                if !seen[u] {
                    seen[u] = true;
                    stack.extend((0..n).filter(|&v| x.get(u, v)));
                }
            }
            for (j, s) in seen.iter().enumerate() {
                prop_assert_eq!(c.get(i, j), *s);
            }
        }
    }
}

#[test]
fn polisson_and_two_cycle() {
    let polisson = ExpenditureMatrix::from_rows(&[vec![8.0, 4.0], vec![4.0, 2.0]]).unwrap();
    let r = efficiency(&polisson, AeiMethod::Exact).unwrap();
    assert_eq!((r.garp_aei, r.warp_aei), (1.0, 1.0));
    assert!(r.garp_satisfied_at_1);

    let e = ExpenditureMatrix::from_rows(&[vec![10.0, 8.0], vec![11.0, 13.0]]).unwrap();
    let r = efficiency(&e, AeiMethod::Exact).unwrap();
    assert_eq!(r.garp_aei, 11.0 / 13.0);
    assert_eq!(r.warp_aei, 11.0 / 13.0);
    assert!(!r.garp_satisfied_at_1);
    assert!(!check_garp_e(&e, 11.0 / 13.0));
    assert!(check_garp_e(&e, 11.0 / 13.0 - 1e-12));
    let b = aei(&e, Axiom::Garp, AeiMethod::Bisection { tol: 1e-9 }).unwrap();
    assert!((b - 11.0 / 13.0).abs() < 1e-9);
}

#[test]
fn invalid_inputs() {
    assert!(ExpenditureMatrix::from_rows(&[vec![0.0]]).is_err());
    assert!(ExpenditureMatrix::from_rows(&[vec![1.0, -1.0], vec![1.0, 1.0]]).is_err());
    assert!(ExpenditureMatrix::from_rows(&[vec![1.0, f64::NAN], vec![1.0, 1.0]]).is_err());
    let e = ExpenditureMatrix::from_rows(&[vec![1.0]]).unwrap();
    assert!(aei(&e, Axiom::Garp, AeiMethod::Bisection { tol: 0.0 }).is_err());
    assert!(aei(&e, Axiom::Garp, AeiMethod::Bisection { tol: 1.5 }).is_err());
    assert_eq!(aei(&e, Axiom::Garp, AeiMethod::Exact).unwrap(), 1.0);
}
