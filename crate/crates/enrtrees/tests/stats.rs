use std::collections::BTreeMap;

use enrtrees::stats::{
    chi_square_gof, chi_square_two_sample, clt_check, median, tail_slope, tv_distance, tv_to_law, Census, Moments,
};

fn census(pairs: &[(&str, usize)]) -> Census {
    pairs.iter().flat_map(|&(c, k)| std::iter::repeat_n(c.to_string(), k)).collect()
}

#[test]
fn total_variation_extremes() {
    let a = census(&[("x", 3), ("y", 7)]);
    let b = census(&[("x", 30), ("y", 70)]);
    let c = census(&[("z", 5)]);
    assert_eq!(tv_distance(&a, &b).tv, 0.0);
    assert!((tv_distance(&a, &c).tv - 1.0).abs() < 1e-15);
    let law: BTreeMap<String, f64> = [("x".to_string(), 0.5), ("y".to_string(), 0.5)].into();
    assert!((tv_to_law(&a, &law).tv - 0.2).abs() < 1e-15);
    assert!((tv_to_law(&c, &law).tv - 1.0).abs() < 1e-15);
}

#[test]
fn chi_square_by_hand() {
    // (30 − 50)²/50 + (70 − 50)²/50 = 16 on one degree of freedom
    let obs = census(&[("a", 30), ("b", 70)]);
    let law: BTreeMap<String, f64> = [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into();
    let g = chi_square_gof(&obs, &law);
    assert!((g.statistic - 16.0).abs() < 1e-12);
    assert_eq!(g.df, 1);
    let want = statrs::function::erf::erfc((8.0f64).sqrt());
    assert!((g.p_value - want).abs() < 1e-9 * want, "{} vs {want}", g.p_value);
    let outside = census(&[("a", 5), ("c", 1)]);
    assert_eq!(chi_square_gof(&outside, &law).p_value, 0.0);
    let t = chi_square_two_sample(&obs, &obs);
    assert_eq!(t.statistic, 0.0);
    assert!((t.p_value - 1.0).abs() < 1e-12);
}

#[test]
fn moments_and_median() {
    let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m.mean, 2.5);
    assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
    assert!(m.skewness.abs() < 1e-15);
    assert!((m.excess_kurtosis - (1.64 - 3.0)).abs() < 1e-12);
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    assert!(median(&[]).is_nan());
}

#[test]
fn tail_slope_recovers_a_gaussian_tail() {
    // quantiles of P(D ≥ x) = exp(−c·x²/n)
    let (n, c) = (400usize, 0.7);
    let ds: Vec<f64> =
        (0..20_000).map(|i| ((-(n as f64) * ((i as f64 + 0.5) / 20_000.0).ln()) / c).sqrt()).collect();
    assert!((tail_slope(&ds, n) + c).abs() < 0.02);
}

#[test]
fn constant_fixpoint_counts_are_deterministic() {
    let r = clt_check(&[512; 100], 1024, 0.5);
    assert!(r.deterministic);
    assert_eq!(r.relative_error, 0.0);
    let r = clt_check(&[10, 12, 16], 30, 0.4);
    assert_eq!(r.lattice, 2);
    assert!(!r.deterministic);
}
