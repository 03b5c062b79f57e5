//! Acceptance criteria 1–9. Each test prints one `PASS`/`FAIL` line to
//! stderr (bypassing the test harness capture) and runs under a shared lock
//! so timings are not distorted by sibling tests.
//!
//! Wall-clock targets of criterion 8 refer to an 8-core desktop; that test
//! reports its verdict without failing the build on slower hardware.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::Rng;
use rpkit::core::imputation::{
    build_price_distributions, convergence_diagnostic, estimate_aei, EstimateOptions, Estimator,
    PoolingScope,
};
use rpkit::core::panel::{clean_transactions, CleaningConfig, TransactionPanel};
use rpkit::core::revpref::{
    aei, check_garp_e, check_warp_e, cross_expenditure, efficiency, garp_witness_cycle, AeiMethod,
    Axiom, ExpenditureMatrix,
};
use rpkit::core::rng::{stream, StreamRng};
use rpkit::core::stats::cv::default_omega_grid;
use rpkit::core::stats::{
    cv_group_lasso, cv_lasso, cv_sparse_group_lasso, group_lasso, lambda_max, lasso, ols,
    ols_pooled, sparse_group_lasso, CvOptions, DesignMatrix, Matrix, KKT_TOLERANCE,
};
use rpkit::core::synth::{
    brute_force_aei, brute_force_warp_aei, fixture_polisson, gale_cycle_data, generate_panel,
    SyntheticScenario, UtilityModel, DEFAULT_CES_SIGMA,
};
use rpkit::core::BitMatrix;
use rpkit::runner::estimate_panel;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Collected failures of one criterion.
#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }

    fn passed(&self) -> bool {
        self.0.is_empty()
    }
}

fn emit(criterion: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("acceptance {criterion} [{verdict}] {title}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn finish(criterion: u32, title: &str, checks: Checks, detail: String) {
    let pass = checks.passed();
    let detail = if pass {
        detail
    } else {
        format!(
            "{detail}; first failures: {:?}",
            &checks.0[..checks.0.len().min(3)]
        )
    };
    emit(criterion, title, pass, &detail);
    assert!(pass, "criterion {criterion} failed: {:?}", checks.0);
}

fn secs(d: Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

/// Integer prices and quantities in `[1, 20]`.
fn instance(rng: &mut StreamRng, t: usize, k: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut draw = || -> Vec<Vec<f64>> {
        (0..t)
            .map(|_| (0..k).map(|_| rng.random_range(1..=20) as f64).collect())
            .collect()
    };
    let prices = draw();
    let bundles = draw();
    (prices, bundles)
}

fn random_instance(
    rng: &mut StreamRng,
    max_t: usize,
    max_k: usize,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let t = rng.random_range(1..=max_t);
    let k = rng.random_range(1..=max_k);
    instance(rng, t, k)
}

fn exact_aei(prices: &[Vec<f64>], bundles: &[Vec<f64>]) -> f64 {
    let e = ExpenditureMatrix::from_dense(prices, bundles).unwrap();
    aei(&e, Axiom::Garp, AeiMethod::Exact).unwrap()
}

const BISECT: AeiMethod = AeiMethod::Bisection { tol: 1e-6 };

#[test]
fn criterion_1_oracle_equivalence() {
    let _guard = serial();
    let start = Instant::now();
    let mut rng = stream(2015, "acceptance-oracle", 0);
    let mut checks = Checks::default();
    let mut violating = 0;
    for i in 0..1000 {
        let (p, x) = random_instance(&mut rng, 7, 4);
        let e = ExpenditureMatrix::from_dense(&p, &x).unwrap();
        let exact = efficiency(&e, AeiMethod::Exact).unwrap().garp_aei;
        let bisect = efficiency(&e, BISECT).unwrap().garp_aei;
        let oracle = brute_force_aei(&e).unwrap();
        violating += usize::from(oracle < 1.0);
        checks.check((exact - oracle).abs() <= 1e-9, || {
            format!("instance {i}: exact {exact} vs oracle {oracle}")
        });
        checks.check((bisect - exact).abs() <= 1e-6, || {
            format!("instance {i}: bisection {bisect} vs exact {exact}")
        });
    }
    let elapsed = start.elapsed();
    checks.check(elapsed < Duration::from_secs(60), || {
        format!("runtime {}", secs(elapsed))
    });
    finish(
        1,
        "oracle equivalence",
        checks,
        format!(
            "1000 instances ({violating} with AEI < 1) in {}",
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_2_rationality_fixture() {
    let _guard = serial();
    let start = Instant::now();
    let mut checks = Checks::default();
    let mut households = 0;
    for (utility, label) in [
        (UtilityModel::CobbDouglas, "Cobb-Douglas"),
        (
            UtilityModel::Ces {
                sigma: DEFAULT_CES_SIGMA,
            },
            "CES",
        ),
    ] {
        for seed in 0..100 {
            let scenario = SyntheticScenario {
                households: 5,
                goods: 20,
                periods: 50,
                utility,
                theta: 0.0,
                seed,
                ..SyntheticScenario::default()
            };
            let (panel, _) = generate_panel(&scenario).unwrap();
            for hh in panel.households.values() {
                households += 1;
                let e = cross_expenditure(hh).unwrap();
                let r = efficiency(&e, AeiMethod::Exact).unwrap();
                checks.check(r.garp_aei == 1.0 && r.garp_satisfied_at_1, || {
                    format!(
                        "{label} seed {seed} {}: AEI {}",
                        hh.household_id, r.garp_aei
                    )
                });
            }
        }
    }
    let elapsed = start.elapsed();
    checks.check(elapsed < Duration::from_secs(5), || {
        format!("runtime {}", secs(elapsed))
    });
    finish(
        2,
        "rationality fixture",
        checks,
        format!(
            "200 panels, {households} households, all GARP-AEI = 1, in {}",
            secs(elapsed)
        ),
    );
}

fn panel_from_rows(rows: Vec<rpkit::core::panel::RawTransaction>) -> TransactionPanel {
    clean_transactions(rows, 0, &CleaningConfig::default())
        .unwrap()
        .0
}

#[test]
fn criterion_3_hand_fixtures() {
    let _guard = serial();
    let mut checks = Checks::default();

    let two = ExpenditureMatrix::from_rows(&[vec![10.0, 8.0], vec![11.0, 13.0]]).unwrap();
    for method in [AeiMethod::Exact, AeiMethod::Bisection { tol: 1e-10 }] {
        let v = aei(&two, Axiom::Garp, method).unwrap();
        checks.check((v - 11.0 / 13.0).abs() <= 1e-9, || {
            format!("two-cycle {method:?}: {v}")
        });
    }

    let polisson = efficiency(
        &cross_expenditure(&fixture_polisson()).unwrap(),
        AeiMethod::Exact,
    )
    .unwrap();
    checks.check(polisson.garp_aei == 1.0, || {
        format!("Polisson AEI {}", polisson.garp_aei)
    });

    let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    let gale = panel_from_rows(gale_cycle_data().rows("gale", start));
    let dists = build_price_distributions(&gale, PoolingScope::Panel).unwrap();
    let est = estimate_aei(&gale.households["gale"], &dists, EstimateOptions::default()).unwrap();
    checks.check(est.warp_aei.iter().all(|w| *w == 1.0), || {
        "Gale WARP-AEI below 1".into()
    });
    checks.check(est.garp_aei.iter().all(|g| *g < 1.0), || {
        "Gale GARP-AEI not below 1".into()
    });
    checks.check(est.rho_hat == 1.0, || {
        format!("Gale rho-hat {}", est.rho_hat)
    });

    // Two goods: the axioms coincide at full efficiency. Below it the
    // deflated budgets no longer pass through the chosen bundles and a
    // transitive cycle can appear before any pairwise one, so the index
    // pair may differ; each such draw is confirmed on its witness cycle by
    // the brute-force oracles.
    let mut rng = stream(3, "acceptance-two-goods", 0);
    for i in 0..500 {
        let t = rng.random_range(1..=12);
        let (p, x) = instance(&mut rng, t, 2);
        let e = ExpenditureMatrix::from_dense(&p, &x).unwrap();
        checks.check(check_garp_e(&e, 1.0) == check_warp_e(&e, 1.0), || {
            format!("K=2 instance {i} disagrees at e = 1")
        });
    }
    let (mut households, mut draws, mut nonzero, mut differing, mut worst_rho) =
        (0, 0, 0, 0, 0.0f64);
    for seed in 0..10 {
        let scenario = SyntheticScenario {
            households: 10,
            goods: 2,
            periods: 30,
            theta: 0.5,
            mask: 0.3,
            seed,
            ..SyntheticScenario::default()
        };
        let (panel, _) = generate_panel(&scenario).unwrap();
        let dists = build_price_distributions(&panel, PoolingScope::Panel).unwrap();
        let opts = EstimateOptions {
            draws: 200,
            seed,
            ..EstimateOptions::default()
        };
        for hh in panel.households.values() {
            let est = Estimator::new(hh, &dists, opts).unwrap();
            households += 1;
            let mut differ = 0;
            for d in 0..opts.draws as u64 {
                let e = draw_matrix(&est, hh.len(), d);
                let r = efficiency(&e, AeiMethod::Exact).unwrap();
                draws += 1;
                checks.check(r.garp_satisfied_at_1 == r.warp_satisfied_at_1, || {
                    format!("K=2 {} draw {d} disagrees at e = 1", hh.household_id)
                });
                if r.garp_aei != r.warp_aei {
                    differ += 1;
                    let between = 0.5 * (r.garp_aei + r.warp_aei);
                    let cycle = garp_witness_cycle(&e, between).unwrap();
                    let rows: Vec<Vec<f64>> = cycle
                        .iter()
                        .map(|&t| cycle.iter().map(|&s| e.get(t, s)).collect())
                        .collect();
                    let sub = ExpenditureMatrix::from_rows(&rows).unwrap();
                    let (g, w) = (
                        brute_force_aei(&sub).unwrap(),
                        brute_force_warp_aei(&sub).unwrap(),
                    );
                    checks.check(g < between && w >= r.warp_aei, || {
                        format!(
                            "K=2 {} draw {d}: witness oracle GARP {g}, WARP {w}",
                            hh.household_id
                        )
                    });
                }
            }
            differing += differ;
            nonzero += usize::from(differ > 0);
            worst_rho = worst_rho.max(differ as f64 / opts.draws as f64);
        }
    }
    let two_goods_zero = nonzero == 0;
    let detail = format!(
        "two-cycle 11/13, Polisson 1, Gale WARP 1 / GARP {:.4} / rho-hat {}; two goods: axioms agree at e = 1 on all {draws} draws, \
         rho-hat > 0 for {nonzero}/{households} households (max {worst_rho:.3}, {differing} oracle-confirmed draws)",
        est.aei_hat, est.rho_hat
    );
    // The fixtures and the oracle confirmations are hard requirements; a
    // nonzero two-good rho-hat is reported as a failure without aborting.
    let pass = checks.passed() && two_goods_zero;
    emit(3, "hand fixtures", pass, &detail);
    assert!(checks.passed(), "criterion 3 failed: {:?}", checks.0);
}

fn draw_matrix(est: &Estimator, n: usize, draw: u64) -> ExpenditureMatrix {
    let mut data = Vec::new();
    est.decomposition()
        .assemble(&est.draw_fill(draw), &mut data);
    let rows: Vec<Vec<f64>> = data.chunks(n).map(<[f64]>::to_vec).collect();
    ExpenditureMatrix::from_rows(&rows).unwrap()
}

#[test]
fn criterion_4_ordering_and_monotonicity() {
    let _guard = serial();
    let mut checks = Checks::default();
    let mut rng = stream(4, "acceptance-ordering", 0);

    for i in 0..1000 {
        let (p, x) = random_instance(&mut rng, 10, 5);
        let r = efficiency(
            &ExpenditureMatrix::from_dense(&p, &x).unwrap(),
            AeiMethod::Exact,
        )
        .unwrap();
        checks.check(r.warp_aei >= r.garp_aei, || {
            format!("instance {i}: WARP {} < GARP {}", r.warp_aei, r.garp_aei)
        });
    }

    let mut lowered = 0;
    for i in 0..500 {
        let (mut p, mut x) = random_instance(&mut rng, 9, 4);
        let before = exact_aei(&p, &x);
        let k = p[0].len();
        let (np, nx) = instance(&mut rng, 1, k);
        p.extend(np);
        x.extend(nx);
        let after = exact_aei(&p, &x);
        lowered += usize::from(after < before);
        checks.check(after <= before, || {
            format!("append {i}: {before} -> {after}")
        });
    }

    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let (p, x) = random_instance(&mut rng, 8, 4);
        let base = exact_aei(&p, &x);
        let t = rng.random_range(0..p.len());
        let c = rng.random_range(0.01..100.0);
        let mut scaled = p.clone();
        scaled[t].iter_mut().for_each(|v| *v *= c);
        let by_price = exact_aei(&scaled, &x);

        let k = rng.random_range(0..p[0].len());
        let c = rng.random_range(0.01..100.0);
        let (mut up, mut ux) = (p.clone(), x.clone());
        up.iter_mut().for_each(|row| row[k] *= c);
        ux.iter_mut().for_each(|row| row[k] /= c);
        let by_unit = exact_aei(&up, &ux);
        for (what, v) in [("price scaling", by_price), ("unit rescaling", by_unit)] {
            worst = worst.max((v - base).abs());
            checks.check((v - base).abs() <= 1e-12, || {
                format!("{what} {i}: {base} -> {v}")
            });
        }
    }
    finish(
        4,
        "ordering and monotonicity",
        checks,
        format!("WARP >= GARP on 1000 instances; 500 appends ({lowered} lowered the index); largest rescaling change {worst:.1e}"),
    );
}

#[test]
fn criterion_5_convergence() {
    let _guard = serial();
    let scenario = SyntheticScenario {
        households: 200,
        theta: 0.3,
        mask: 0.3,
        seed: 5,
        ..SyntheticScenario::default()
    };
    let (panel, truth) = generate_panel(&scenario).unwrap();
    let opts = EstimateOptions {
        draws: 1000,
        seed: 5,
        ..EstimateOptions::default()
    };
    let start = Instant::now();
    let outcomes = estimate_panel(&panel, PoolingScope::Panel, opts).unwrap();
    let elapsed = start.elapsed();
    let mut checks = Checks::default();
    let (mut close, mut stable) = (0, Vec::new());
    for o in &outcomes {
        let est = o.outcome.as_ref().unwrap();
        let trace = convergence_diagnostic(est).unwrap();
        close += usize::from((trace.running_mean[249] - trace.running_mean[999]).abs() < 0.01);
        stable.push(trace.stabilization_draw);
    }
    stable.sort_unstable();
    let share = close as f64 / outcomes.len() as f64;
    checks.check(outcomes.len() == 200, || {
        format!("{} households estimated", outcomes.len())
    });
    checks.check(share >= 0.95, || format!("share {share}"));
    checks.check(stable[stable.len() / 2] <= 250, || {
        format!("median stabilization {}", stable[stable.len() / 2])
    });
    finish(
        5,
        "convergence",
        checks,
        format!(
            "|mean250 - mean1000| < 0.01 for {close}/200 households ({:.1}%), median stabilization draw {}, masked {:.3}, {}",
            100.0 * share,
            stable[stable.len() / 2],
            truth.masked_fraction,
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_6_noise_monotonicity() {
    let _guard = serial();
    let mut means = Vec::new();
    for theta in [0.0, 0.1, 0.3, 0.5] {
        let scenario = SyntheticScenario {
            households: 200,
            theta,
            seed: 6,
            ..SyntheticScenario::default()
        };
        let (panel, _) = generate_panel(&scenario).unwrap();
        let total: f64 = panel
            .households
            .values()
            .map(|hh| {
                efficiency(&cross_expenditure(hh).unwrap(), AeiMethod::Exact)
                    .unwrap()
                    .garp_aei
            })
            .sum();
        means.push((theta, total / panel.len() as f64));
    }
    let mut checks = Checks::default();
    checks.check(means.windows(2).all(|w| w[1].1 < w[0].1), || {
        format!("{means:?}")
    });
    let detail = means
        .iter()
        .map(|(t, m)| format!("θ={t}: {m:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    finish(
        6,
        "noise monotonicity",
        checks,
        format!("mean AEI over 200 households: {detail}"),
    );
}

fn regression_data(n: usize, truth: &[f64], seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = stream(seed, "acceptance-regression", 0);
    let mut normal = || -> f64 { (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0 };
    let cols: Vec<Vec<f64>> = (0..truth.len())
        .map(|_| (0..n).map(|_| normal()).collect())
        .collect();
    let y = (0..n)
        .map(|i| 1.0 + cols.iter().zip(truth).map(|(c, b)| c[i] * b).sum::<f64>() + normal())
        .collect();
    (cols, y)
}

fn design(cols: &[Vec<f64>], groups: &[&str]) -> DesignMatrix {
    DesignMatrix::with_groups(
        Matrix::from_columns(cols[0].len(), cols).unwrap(),
        (0..cols.len()).map(|j| format!("x{j}")).collect(),
        groups.iter().map(|g| g.to_string()).collect(),
    )
    .unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_7_regression_layer() {
    let _guard = serial();
    let mut checks = Checks::default();
    let (cols, y) = regression_data(120, &[1.0, -0.5, 0.0, 0.8, 0.0, 0.0], 7);
    let grouped = design(&cols, &["a", "a", "a", "b", "b", "c"])
        .standardize()
        .unwrap();
    let singletons = design(&cols, &["0", "1", "2", "3", "4", "5"])
        .standardize()
        .unwrap();

    let lmax = lambda_max(&grouped, &y, 1.0).unwrap();
    let at_max = lasso(&grouped, &y, lmax).unwrap();
    checks.check(at_max.coefficients.iter().all(|c| *c == 0.0), || {
        "lasso at lambda_max is not zero".into()
    });

    let mut worst: f64 = 0.0;
    for frac in [0.5, 0.1, 0.01] {
        let l1 = lmax * frac;
        let reference = lasso(&grouped, &y, l1).unwrap();
        let sgl1 = sparse_group_lasso(&grouped, &y, l1, 1.0).unwrap();
        let unit = group_lasso(&singletons, &y, l1).unwrap();
        let l0 = lambda_max(&grouped, &y, 0.0).unwrap() * frac;
        let gl = group_lasso(&grouped, &y, l0).unwrap();
        let sgl0 = sparse_group_lasso(&grouped, &y, l0, 0.0).unwrap();
        for (what, a, b) in [
            (
                "SGL(1) vs Lasso",
                &sgl1.coefficients,
                &reference.coefficients,
            ),
            (
                "unit-group GL vs Lasso",
                &unit.coefficients,
                &reference.coefficients,
            ),
            ("SGL(0) vs GL", &sgl0.coefficients, &gl.coefficients),
        ] {
            let d = max_diff(a, b);
            worst = worst.max(d);
            checks.check(d <= 1e-6, || format!("{what} at {frac} lambda_max: {d}"));
        }
    }

    let x = design(&[vec![1.0, 2.0, 3.0, 4.0, 5.0]], &["x"]);
    let fit = ols(&[2.0, 4.0, 5.0, 4.0, 5.0], &x).unwrap();
    let want_coef = [2.2, 0.6];
    let want_se = [(0.8f64 * 1.1).sqrt(), 0.08f64.sqrt()];
    checks.check(max_diff(&fit.coefficients, &want_coef) <= 1e-10, || {
        format!("OLS coefficients {:?}", fit.coefficients)
    });
    checks.check(max_diff(&fit.std_errors, &want_se) <= 1e-10, || {
        format!("OLS std errors {:?}", fit.std_errors)
    });

    let raw = design(&cols, &["a", "a", "a", "b", "b", "c"]);
    let single = ols(&y, &raw).unwrap();
    let draws = Matrix::from_columns(y.len(), &vec![y.clone(); 5]).unwrap();
    let pooled = ols_pooled(&draws, &raw).unwrap();
    checks.check(pooled.std_errors == single.std_errors, || {
        "Rubin pooling of identical draws changed the SEs".into()
    });
    checks.check(pooled.coefficients == single.coefficients, || {
        "Rubin pooling of identical draws changed the fit".into()
    });

    let opts = CvOptions {
        seed: 7,
        ..CvOptions::default()
    };
    let cv_fits = [
        cv_lasso(&grouped, &y, &opts).unwrap(),
        cv_group_lasso(&grouped, &y, &opts).unwrap(),
        cv_sparse_group_lasso(&grouped, &y, &default_omega_grid(), &opts).unwrap(),
    ];
    let worst_kkt = cv_fits.iter().map(|f| f.kkt_residual).fold(0.0, f64::max);
    for f in &cv_fits {
        checks.check(f.kkt_residual < KKT_TOLERANCE, || {
            format!("{:?} KKT residual {}", f.penalty, f.kkt_residual)
        });
    }
    finish(
        7,
        "regression layer",
        checks,
        format!("reductions within {worst:.1e}, OLS fixture to 1e-10, Rubin identity exact, CV KKT residual <= {worst_kkt:.1e}"),
    );
}

const FULL_SCALE_HOUSEHOLDS: f64 = 1664.0;
const DESKTOP_CORES: f64 = 8.0;

#[test]
fn criterion_8_performance() {
    let _guard = serial();
    let mut checks = Checks::default();

    let mut rng = stream(8, "acceptance-closure", 0);
    let mut closure = Duration::ZERO;
    for density in [0.005, 0.02, 0.1, 0.5] {
        let m = BitMatrix::from_fn(366, |_, _| rng.random::<f64>() < density);
        for _ in 0..3 {
            let mut c = m.clone();
            let start = Instant::now();
            c.transitive_closure();
            closure = closure.max(start.elapsed());
        }
    }
    checks.check(closure < Duration::from_millis(10), || {
        format!("closure {}", secs(closure))
    });

    let sample = 16;
    let scenario = SyntheticScenario {
        households: sample,
        ..SyntheticScenario::full_scale(8)
    };
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("panel.csv");
    let (panel, _) = generate_panel(&scenario).unwrap();
    rpkit::io::write_panel(&panel, &csv).unwrap();
    let start = Instant::now();
    let (panel, report) = rpkit::io::ingest(&csv, &CleaningConfig::default()).unwrap();
    let ingest = start.elapsed();

    let dists = build_price_distributions(&panel, PoolingScope::Panel).unwrap();
    let timed: Vec<(usize, usize, Duration)> = panel
        .households
        .values()
        .take(3)
        .map(|hh| {
            let start = Instant::now();
            let est = Estimator::new(hh, &dists, EstimateOptions::default())
                .unwrap()
                .run();
            assert_eq!(est.draws, 1000);
            (hh.len(), hh.items.len(), start.elapsed())
        })
        .collect();
    let slowest = timed.iter().map(|t| t.2).max().unwrap();
    let mean = timed.iter().map(|t| t.2.as_secs_f64()).sum::<f64>() / timed.len() as f64;
    checks.check(slowest < Duration::from_secs(2), || {
        format!("household draws {}", secs(slowest))
    });

    // `aei` ingests serially and estimates households in parallel; `rho`
    // then reads the `aei` results file.
    let projected = ingest.as_secs_f64() * FULL_SCALE_HOUSEHOLDS / sample as f64
        + mean * FULL_SCALE_HOUSEHOLDS / DESKTOP_CORES;
    checks.check(projected < 600.0, || {
        format!("projected full run {projected:.0} s")
    });

    let shape = format!("T = {}, K = {}", timed[0].0, timed[0].1);
    let detail = format!(
        "T=366 closure {:.2} ms; 1000 draws per household {} (slowest {}, {shape}, {:.1}% missing); ingest {} for {} rows; projected full run {projected:.0} s on {DESKTOP_CORES} cores ({} core(s) here)",
        closure.as_secs_f64() * 1e3,
        secs(Duration::from_secs_f64(mean)),
        secs(slowest),
        100.0 * rpkit::core::panel::panel_summary(&panel).unwrap().overall_fraction_missing,
        secs(ingest),
        report.rows_kept,
        std::thread::available_parallelism().map_or(1, |n| n.get()),
    );
    emit(8, "performance", checks.passed(), &detail);
}

/// The full-scale pipeline through the command line. About an hour on a
/// single core; run with `--ignored`.
#[test]
#[ignore]
fn criterion_8_full_scale_run() {
    let _guard = serial();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let panel = dir.path().join("panel.csv");
    let results = dir.path().join("aei.jsonl");
    rpkit::cli::execute(["rpkit", "simulate", "--full-scale", "--out", out]).unwrap();
    let start = Instant::now();
    rpkit::cli::execute([
        "rpkit",
        "aei",
        "--input",
        panel.to_str().unwrap(),
        "--out",
        out,
    ])
    .unwrap();
    rpkit::cli::execute([
        "rpkit",
        "rho",
        "--results",
        results.to_str().unwrap(),
        "--out",
        out,
    ])
    .unwrap();
    let elapsed = start.elapsed();
    let pass = elapsed < Duration::from_secs(600);
    emit(
        8,
        "full-scale aei + rho",
        pass,
        &format!("{} households in {}", FULL_SCALE_HOUSEHOLDS, secs(elapsed)),
    );
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

/// Runs every command into `out` and returns the printed reports.
fn pipeline(out: &Path, threads: &str) -> Vec<String> {
    let o = out.to_str().unwrap();
    let path = |name: &str| out.join(name).to_str().unwrap().to_string();
    let run = |args: &[&str]| {
        let mut full = vec!["rpkit"];
        full.extend_from_slice(args);
        full.extend_from_slice(&["--out", o, "--threads", threads, "--seed", "9"]);
        rpkit::cli::execute(full).unwrap()
    };
    let mut printed = vec![run(&[
        "simulate",
        "--households",
        "40",
        "--goods",
        "8",
        "--periods",
        "20",
        "--theta",
        "0.3",
        "--mask",
        "0.3",
    ])];
    let cov: String = std::iter::once("household_id,income,region\n".to_string())
        .chain((0..40).map(|h| {
            format!(
                "{},{},{}\n",
                SyntheticScenario::household_name(h),
                (h * 37 % 11) as f64 / 3.0,
                ["north", "south", "east"][h % 3]
            )
        }))
        .collect();
    fs::write(out.join("covariates.csv"), cov).unwrap();
    fs::write(
        out.join("schema.toml"),
        "[columns.region]\nkind = \"categorical\"\ngroup = \"Region\"\n",
    )
    .unwrap();

    let panel = path("panel.csv");
    printed.push(run(&["ingest", "--input", &panel]));
    printed.push(run(&["aei", "--input", &panel, "--draws", "100"]));
    let results = path("aei.jsonl");
    printed.push(run(&["rho", "--results", &results]));
    printed.push(run(&["report", "--results", &results, "--bins", "12"]));
    let (cov, schema, draws) = (
        path("covariates.csv"),
        path("schema.toml"),
        path("draws.jsonl"),
    );
    for model in ["ols", "lasso", "gl", "sgl"] {
        printed.push(run(&[
            "regress",
            "--results",
            &results,
            "--covariates",
            &cov,
            "--schema",
            &schema,
            "--draws-file",
            &draws,
            "--model",
            model,
            "--folds",
            "5",
        ]));
    }
    printed
}

#[test]
fn criterion_9_determinism() {
    let _guard = serial();
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    let printed_a = pipeline(a.path(), "1");
    let printed_b = pipeline(b.path(), "1");
    let printed_c = pipeline(c.path(), "2");
    let (sa, sb, sc) = (snapshot(a.path()), snapshot(b.path()), snapshot(c.path()));
    let mut checks = Checks::default();
    checks.check(sa.len() >= 15, || format!("only {} output files", sa.len()));
    for (name, bytes) in &sa {
        checks.check(sb.get(name) == Some(bytes), || {
            format!("{name} differs between identical runs")
        });
        checks.check(sc.get(name) == Some(bytes), || {
            format!("{name} differs with another thread count")
        });
    }
    // Printed reports embed no paths, so they must match too.
    checks.check(printed_a == printed_b && printed_a == printed_c, || {
        "printed reports differ".into()
    });
    finish(
        9,
        "determinism",
        checks,
        format!("{} files from simulate, ingest, aei, rho, report and regress (4 models) byte-identical across runs and thread counts", sa.len()),
    );
}
