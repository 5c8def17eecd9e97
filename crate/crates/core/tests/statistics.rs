mod common;

use catci::citest::{
    chi_square_sf, ci_test, g2_montecarlo_test, g2_test, q1, q2, q3, target_residuals, CiQuery, TestFamily,
};
use catci::data::VariableKind;
use catci::estimators::{EstimatorKind, FitOptions};
use catci::residuals::{indicator_residuals, ls_residuals, ResidualBlock};
use catci::sim::{simulate_calibration_null_variant, NullVariant};
use catci::stats::{ks_critical_value, ks_uniform_distance, rejection_rate};
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn ordinal_block(rng: &mut rand_chacha::ChaCha8Rng, n: usize, levels: usize) -> ResidualBlock {
    let p = random_simplex(rng, n, levels);
    ls_residuals(&p, &uniform_codes(rng, n, levels)).unwrap()
}

fn indicator_block(rng: &mut rand_chacha::ChaCha8Rng, n: usize, levels: usize) -> ResidualBlock {
    let p = random_simplex(rng, n, levels);
    indicator_residuals(&p, &uniform_codes(rng, n, levels), levels - 1).unwrap()
}

#[test]
fn q1_matches_direct_summation() {
    let mut r = rng(1);
    for _ in 0..50 {
        let rx = ordinal_block(&mut r, 50, 3);
        let ry = ordinal_block(&mut r, 50, 2);
        let want = q1_oracle(rx.column(0).as_slice(), ry.column(0).as_slice());
        let got = q1(&rx, &ry).unwrap();
        assert!((got.statistic - want).abs() <= 1e-10 * want.max(1.0), "{} vs {want}", got.statistic);
        assert_eq!(got.df, 1);
    }
}

#[test]
fn q2_matches_dense_inverse() {
    let mut r = rng(2);
    for _ in 0..50 {
        let rx = indicator_block(&mut r, 30, 3);
        let ry = ordinal_block(&mut r, 30, 4);
        let (mx, y) = (rx.as_matrix(), ry.column(0));
        let v = DMatrix::from_fn(30, 2, |i, j| mx[(i, j)] * y[i]);
        let want = quadratic_oracle(&v);
        let got = q2(&rx, &ry).unwrap();
        assert!((got.statistic - want).abs() <= 1e-8 * want.max(1.0), "{} vs {want}", got.statistic);
        assert_eq!(got.df, 2);
    }
}

#[test]
fn q3_matches_dense_inverse_in_y_major_order() {
    let mut r = rng(3);
    for _ in 0..50 {
        let rx = indicator_block(&mut r, 60, 3);
        let ry = indicator_block(&mut r, 60, 3);
        let want = quadratic_oracle(&q3_products(&rx.as_matrix(), &ry.as_matrix()));
        let got = q3(&rx, &ry).unwrap();
        assert!((got.statistic - want).abs() <= 1e-8 * want.max(1.0), "{} vs {want}", got.statistic);
        assert_eq!(got.df, 4);
    }
}

#[test]
fn full_rank_degrees_of_freedom() {
    let mut r = rng(4);
    let x4 = indicator_block(&mut r, 400, 4);
    let y2 = ordinal_block(&mut r, 400, 2);
    assert_eq!(q2(&x4, &y2).unwrap().df, 3);
    let x3 = indicator_block(&mut r, 400, 3);
    let y4 = indicator_block(&mut r, 400, 4);
    assert_eq!(q3(&x3, &y4).unwrap().df, 6);
}

#[test]
fn two_level_reductions_agree_with_q1() {
    let mut r = rng(5);
    for _ in 0..100 {
        let n = 40;
        let px = random_simplex(&mut r, n, 2);
        let py = random_simplex(&mut r, n, 2);
        let (x, y) = (uniform_codes(&mut r, n, 2), uniform_codes(&mut r, n, 2));
        let lx = ls_residuals(&px, &x).unwrap();
        let ly = ls_residuals(&py, &y).unwrap();
        let ix = indicator_residuals(&px, &x, 1).unwrap();
        let iy = indicator_residuals(&py, &y, 1).unwrap();
        let a = q1(&lx, &ly).unwrap().statistic;
        let b = q2(&ix, &ly).unwrap().statistic;
        let c = q3(&ix, &iy).unwrap().statistic;
        assert!((a - b).abs() <= 1e-10 * a.max(1.0) && (a - c).abs() <= 1e-10 * a.max(1.0), "{a} {b} {c}");
    }
}

#[test]
fn dropped_level_does_not_change_the_statistic() {
    let mut r = rng(6);
    for _ in 0..100 {
        let n = 80;
        let (k, l) = (r.random_range(2..5), r.random_range(2..5));
        let px = random_simplex(&mut r, n, k);
        let py = random_simplex(&mut r, n, l);
        let (x, y) = (uniform_codes(&mut r, n, k), uniform_codes(&mut r, n, l));
        let ly = ls_residuals(&py, &y).unwrap();
        let base2 = q2(&indicator_residuals(&px, &x, k - 1).unwrap(), &ly).unwrap().statistic;
        let base3 = q3(
            &indicator_residuals(&px, &x, k - 1).unwrap(),
            &indicator_residuals(&py, &y, l - 1).unwrap(),
        )
        .unwrap()
        .statistic;
        for dx in 0..k {
            let ix = indicator_residuals(&px, &x, dx).unwrap();
            let s2 = q2(&ix, &ly).unwrap().statistic;
            assert!((s2 - base2).abs() <= 1e-8 * base2.max(1.0), "{s2} vs {base2}");
            for dy in 0..l {
                let iy = indicator_residuals(&py, &y, dy).unwrap();
                let s3 = q3(&ix, &iy).unwrap().statistic;
                assert!((s3 - base3).abs() <= 1e-8 * base3.max(1.0), "{s3} vs {base3}");
            }
        }
    }
}

#[test]
fn swapping_x_and_y_gives_identical_results() {
    let mut r = rng(7);
    let kinds = [VariableKind::Binary, VariableKind::Ordinal, VariableKind::Categorical];
    let estimators = [
        EstimatorKind::Saturated,
        EstimatorKind::MultinomialLogistic,
        EstimatorKind::ProbabilityForest,
    ];
    for case in 0..30 {
        let n = 120;
        let kx = kinds[case % 3];
        let ky = kinds[(case / 3) % 3];
        let lx = if kx == VariableKind::Binary { 2 } else { 3 };
        let ly = if ky == VariableKind::Binary { 2 } else { 4 };
        let ds = dataset(vec![
            ("a", kx, lx, uniform_codes(&mut r, n, lx)),
            ("b", ky, ly, uniform_codes(&mut r, n, ly)),
            ("c", VariableKind::Binary, 2, uniform_codes(&mut r, n, 2)),
            ("d", VariableKind::Categorical, 3, uniform_codes(&mut r, n, 3)),
        ]);
        let mut opts = FitOptions::default();
        opts.forest.seed = case as u64;
        opts.forest.n_trees = 10;
        for est in estimators {
            let ab = ci_test(&ds, &CiQuery::new("a", "b", &["c", "d"]), est, &opts).unwrap();
            let ba = ci_test(&ds, &CiQuery::new("b", "a", &["d", "c"]), est, &opts).unwrap();
            assert_eq!(ab, ba, "{est:?}");
        }
    }
}

#[test]
fn dispatch_puts_the_categorical_side_first() {
    let mut r = rng(8);
    let n = 300;
    let ds = dataset(vec![
        ("x", VariableKind::Categorical, 5, uniform_codes(&mut r, n, 5)),
        ("y", VariableKind::Binary, 2, uniform_codes(&mut r, n, 2)),
        ("z", VariableKind::Binary, 2, uniform_codes(&mut r, n, 2)),
    ]);
    let res = ci_test(&ds, &CiQuery::new("y", "x", &["z"]), EstimatorKind::Saturated, &FitOptions::default()).unwrap();
    assert_eq!(res.family, TestFamily::Q2);
    assert!(res.df <= 4 && res.df >= 1);
}

#[test]
fn small_samples_and_constant_targets_are_degenerate() {
    let ds = dataset(vec![
        ("x", VariableKind::Binary, 2, vec![0, 1, 0, 1, 1]),
        ("y", VariableKind::Binary, 2, vec![1, 1, 0, 0, 1]),
    ]);
    let r = ci_test(&ds, &CiQuery::new("x", "y", &[]), EstimatorKind::Saturated, &FitOptions::default()).unwrap();
    assert!(r.diagnostics.degenerate);
    assert_eq!((r.statistic, r.p_value), (0.0, 1.0));

    let ds = dataset(vec![
        ("x", VariableKind::Binary, 2, vec![0; 20]),
        ("y", VariableKind::Binary, 2, (0..20).map(|i| i % 2).collect()),
    ]);
    let r = ci_test(&ds, &CiQuery::new("x", "y", &[]), EstimatorKind::BinomialLogistic, &FitOptions::default()).unwrap();
    assert!(r.diagnostics.degenerate);
}

#[test]
fn ci_test_statistic_equals_q_on_fitted_residuals() {
    let ds = simulate_calibration_null_variant(2, 500, NullVariant::Categorical { kx: 3, ky: 2 }, 9).unwrap();
    let opts = FitOptions::default();
    let (rx, _) = target_residuals(&ds, 0, &[2, 3], EstimatorKind::Saturated, &opts).unwrap().unwrap();
    let (ry, _) = target_residuals(&ds, 1, &[2, 3], EstimatorKind::Saturated, &opts).unwrap().unwrap();
    let direct = q2(&rx, &ry).unwrap();
    let res = ci_test(&ds, &CiQuery::new("x", "y", &["z1", "z2"]), EstimatorKind::Saturated, &opts).unwrap();
    assert_eq!(res.statistic, direct.statistic);
    assert_eq!(res.p_value, chi_square_sf(direct.statistic, direct.df));
}

#[test]
fn g2_matches_hand_summed_oracle() {
    let mut r = rng(10);
    for _ in 0..50 {
        let n = 40;
        let x = uniform_codes(&mut r, n, 2);
        let y = uniform_codes(&mut r, n, 3);
        let z = uniform_codes(&mut r, n, 2);
        let ds = dataset(vec![
            ("x", VariableKind::Binary, 2, x.clone()),
            ("y", VariableKind::Categorical, 3, y.clone()),
            ("z", VariableKind::Binary, 2, z.clone()),
        ]);
        let got = g2_test(&ds, &CiQuery::new("x", "y", &["z"])).unwrap();
        let want = g2_oracle(&x, &y, &[z]);
        assert!((got.statistic - want).abs() < 1e-10, "{} vs {want}", got.statistic);
    }
}

#[test]
fn g2_degrees_of_freedom_can_exceed_the_sample_size() {
    let mut r = rng(11);
    let n = 60;
    let mut cols = vec![
        ("x", VariableKind::Categorical, 6, uniform_codes(&mut r, n, 6)),
        ("y", VariableKind::Categorical, 6, uniform_codes(&mut r, n, 6)),
    ];
    cols.push(("z", VariableKind::Binary, 2, uniform_codes(&mut r, n, 2)));
    let ds = dataset(cols);
    let one = g2_test(&ds, &CiQuery::new("x", "y", &[])).unwrap();
    let two = g2_test(&ds, &CiQuery::new("x", "y", &["z"])).unwrap();
    assert_eq!(one.df, 25);
    assert!(two.df > one.df && two.df <= 50);
    assert!(two.df as f64 > 0.5 * n as f64);
}

#[test]
fn montecarlo_g2_is_calibrated_on_null_data() {
    let p: Vec<f64> = (0..200)
        .map(|rep| {
            let ds = simulate_calibration_null_variant(1, 200, NullVariant::StrictBinary, 1000 + rep).unwrap();
            g2_montecarlo_test(&ds, &CiQuery::new("x", "y", &["z1"]), 999, rep).unwrap().p_value
        })
        .collect();
    let rate = rejection_rate(&p, 0.05);
    assert!((0.02..=0.09).contains(&rate), "type-I {rate}");
}

#[test]
fn null_p_values_of_each_statistic_are_uniform() {
    let opts = FitOptions::default();
    for variant in [
        NullVariant::StrictBinary,
        NullVariant::Categorical { kx: 4, ky: 2 },
        NullVariant::Categorical { kx: 3, ky: 4 },
    ] {
        let p: Vec<f64> = (0..500)
            .map(|rep| {
                let ds = simulate_calibration_null_variant(1, 1000, variant, 50_000 + rep).unwrap();
                ci_test(&ds, &CiQuery::new("x", "y", &["z1"]), EstimatorKind::Saturated, &opts)
                    .unwrap()
                    .p_value
            })
            .collect();
        let d = ks_uniform_distance(&p);
        assert!(d < ks_critical_value(p.len(), 0.01), "{variant:?}: KS {d}");
    }
}

#[test]
fn an_irrelevant_conditioner_barely_moves_the_null_distribution() {
    let opts = FitOptions::default();
    let run = |k: usize| -> Vec<f64> {
        (0..500)
            .map(|rep| {
                let ds = simulate_calibration_null_variant(k, 500, NullVariant::StrictBinary, 70_000 + rep).unwrap();
                let z: Vec<String> = (1..=k).map(|i| format!("z{i}")).collect();
                let z: Vec<&str> = z.iter().map(String::as_str).collect();
                ci_test(&ds, &CiQuery::new("x", "y", &z), EstimatorKind::MultinomialLogistic, &opts)
                    .unwrap()
                    .p_value
            })
            .collect()
    };
    let d = ks_two_sample(&run(1), &run(2));
    assert!(d < 0.1, "two-sample KS {d}");
}

#[test]
fn q_is_invariant_to_sign_flips_of_ordinal_residuals() {
    let mut r = rng(12);
    let rx = ordinal_block(&mut r, 100, 3);
    let ry = ordinal_block(&mut r, 100, 3);
    let neg = ResidualBlock::OrdinalVector(-DVector::from(rx.column(0)));
    assert!((q1(&rx, &ry).unwrap().statistic - q1(&neg, &ry).unwrap().statistic).abs() < 1e-12);
}
