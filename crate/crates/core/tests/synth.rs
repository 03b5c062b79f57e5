use rpkit_core::imputation::{
    build_price_distributions, estimate_aei, EstimateOptions, PoolingScope,
};
use rpkit_core::panel::{clean_transactions, panel_summary, CleaningConfig};
use rpkit_core::synth::*;

fn scenario(households: usize, seed: u64) -> SyntheticScenario {
    SyntheticScenario {
        households,
        seed,
        ..SyntheticScenario::default()
    }
}

#[test]
fn rational_cobb_douglas_and_ces_panels() {
    for utility in [
        UtilityModel::CobbDouglas,
        UtilityModel::Ces { sigma: 0.5 },
        UtilityModel::Ces { sigma: 2.5 },
    ] {
        let s = SyntheticScenario {
            utility,
            ..scenario(10, 3)
        };
        let (panel, truth) = generate_panel(&s).unwrap();
        assert_eq!(panel.len(), 10);
        assert!(truth
            .households
            .iter()
            .all(|h| h.garp_aei == 1.0 && h.warp_aei == 1.0 && h.garp_consistent));
        assert!(truth.households.iter().all(|h| h.trembled_days.is_empty()));
        assert!(panel.households.values().all(|h| h.has_complete_prices()));
    }
}

#[test]
fn rational_households_stay_rational_under_imputation() {
    let s = SyntheticScenario {
        mask: 0.3,
        ..scenario(5, 8)
    };
    let (panel, truth) = generate_panel(&s).unwrap();
    assert!(truth.households.iter().all(|h| h.garp_aei == 1.0));
    let dists = build_price_distributions(&panel, PoolingScope::Panel).unwrap();
    for hh in panel.households.values() {
        let est = estimate_aei(
            hh,
            &dists,
            EstimateOptions {
                draws: 5,
                ..EstimateOptions::default()
            },
        )
        .unwrap();
        assert!(est.missing_cells > 0);
        assert!(est.garp_aei.iter().all(|g| (0.0..=1.0).contains(g)));
    }
}

#[test]
fn rows_round_trip_through_cleaning() {
    let s = SyntheticScenario {
        theta: 0.3,
        mask: 0.3,
        ..scenario(6, 2)
    };
    let (panel, _, report) = generate_panel_with_report(&s).unwrap();
    assert_eq!(report.rows_dropped, 0);
    assert_eq!(report.rows_merged, 0);
    let (again, _) = clean_transactions(panel.to_rows(), 0, &CleaningConfig::default()).unwrap();
    assert_eq!(again, panel);
}

#[test]
fn mask_controls_missing_share() {
    let s = SyntheticScenario {
        mask: 0.3,
        ..scenario(40, 1)
    };
    let (panel, truth) = generate_panel(&s).unwrap();
    let summary = panel_summary(&panel).unwrap();
    assert!(
        (summary.overall_fraction_missing - 0.3).abs() < 0.01,
        "{}",
        summary.overall_fraction_missing
    );
    assert!((truth.masked_fraction - 0.3).abs() < 0.01);
    assert!((summary.fraction_missing.mean - 0.3).abs() < 0.01);

    let (full, _) = generate_panel(&scenario(5, 1)).unwrap();
    assert_eq!(panel_summary(&full).unwrap().overall_fraction_missing, 0.0);
}

#[test]
fn unmasked_panels_have_no_imputation_spread() {
    let s = SyntheticScenario {
        theta: 0.5,
        ..scenario(5, 4)
    };
    let (panel, truth) = generate_panel(&s).unwrap();
    let dists = build_price_distributions(&panel, PoolingScope::Panel).unwrap();
    for (hh, t) in panel.households.values().zip(&truth.households) {
        let est = estimate_aei(
            hh,
            &dists,
            EstimateOptions {
                draws: 20,
                ..EstimateOptions::default()
            },
        )
        .unwrap();
        assert_eq!(est.aei_sd, 0.0);
        assert!((est.aei_hat - t.garp_aei).abs() < 1e-12);
    }
}

#[test]
fn noise_lowers_true_efficiency() {
    let mean_aei = |theta: f64| {
        let s = SyntheticScenario {
            theta,
            periods: 30,
            goods: 10,
            ..scenario(60, 5)
        };
        let (_, truth) = generate_panel(&s).unwrap();
        truth.households.iter().map(|h| h.garp_aei).sum::<f64>() / truth.households.len() as f64
    };
    let means: Vec<f64> = [0.0, 0.1, 0.3, 0.5].iter().map(|&t| mean_aei(t)).collect();
    assert_eq!(means[0], 1.0);
    assert!(means.windows(2).all(|w| w[0] > w[1]), "{means:?}");
}

#[test]
fn generation_is_seeded() {
    let s = SyntheticScenario {
        theta: 0.2,
        mask: 0.2,
        ..scenario(4, 10)
    };
    let a = generate_panel(&s).unwrap();
    let b = generate_panel(&s).unwrap();
    assert_eq!(a, b);
    let c = generate_panel(&SyntheticScenario { seed: 11, ..s }).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn oracle_agrees_with_truth_on_small_households() {
    let s = SyntheticScenario {
        theta: 0.6,
        periods: 7,
        goods: 4,
        ..scenario(30, 6)
    };
    let prices = price_matrix(&s).unwrap();
    for h in 0..s.households {
        let g = generate_household(&s, &prices, h).unwrap();
        let p: Vec<Vec<f64>> = (0..s.periods).map(|t| prices.row(t).to_vec()).collect();
        let e = DenseData {
            prices: p,
            bundles: g.bundles,
        }
        .expenditure();
        assert!((brute_force_aei(&e).unwrap() - g.truth.garp_aei).abs() < 1e-9);
        assert!((brute_force_warp_aei(&e).unwrap() - g.truth.warp_aei).abs() < 1e-9);
    }
}

#[test]
fn fixed_weights_and_validation() {
    let mut s = scenario(2, 0);
    s.goods = 3;
    s.weights = Some(vec![0.2, 0.3, 0.5]);
    assert!(generate_panel(&s).is_ok());
    s.weights = Some(vec![0.2, 0.3]);
    assert!(generate_panel(&s).is_err());
    for bad in [
        SyntheticScenario {
            theta: 1.5,
            ..scenario(1, 0)
        },
        SyntheticScenario {
            mask: 1.0,
            ..scenario(1, 0)
        },
        SyntheticScenario {
            goods: 0,
            ..scenario(1, 0)
        },
        SyntheticScenario {
            utility: UtilityModel::Ces { sigma: 0.0 },
            ..scenario(1, 0)
        },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn full_scale_dimensions() {
    let s = SyntheticScenario::full_scale(3);
    assert_eq!(
        (s.households, s.goods, s.periods, s.mask),
        (1664, 488, 130, 0.3)
    );
}
