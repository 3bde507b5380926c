use enrtrees::models::Model;
use enrtrees::oracle::{enumerate_unlabelled, oracle_counts};
use enrtrees::powerseries::{estimate_rho, solve_enriched_fixed_point, solve_enriched_fixed_point_exact};
use enrtrees::species::{BlockCatalog, Species, Weight};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Rooted unlabelled trees by vertices, via the Euler transform recurrence.
fn rooted_trees(nmax: usize) -> Vec<u64> {
    let mut a = vec![0u64; nmax + 1];
    a[1] = 1;
    for n in 1..nmax {
        let mut s = 0u64;
        for k in 1..=n {
            let dsum: u64 = (1..=k).filter(|d| k % d == 0).map(|d| d as u64 * a[d]).sum();
            s += dsum * a[n - k + 1];
        }
        a[n + 1] = s / n as u64;
    }
    a
}

/// Unordered binary trees by leaves.
fn wedderburn(lmax: usize) -> Vec<u64> {
    let mut w = vec![0u64; lmax + 1];
    w[1] = 1;
    for l in 2..=lmax {
        let mut s = 0;
        for i in 1..l {
            let j = l - i;
            if i < j {
                s += w[i] * w[j];
            } else if i == j {
                s += w[i] * (w[i] + 1) / 2;
            }
        }
        w[l] = s;
    }
    w
}

fn catalan(m: usize) -> u64 {
    let mut c = 1u64;
    for i in 0..m as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

#[test]
fn polya_coefficients_match_the_tree_recurrence() {
    let want = rooted_trees(30);
    let exact = solve_enriched_fixed_point_exact(&Species::polya(), 30).unwrap();
    for n in 1..=30 {
        assert_eq!(exact.coeff(n), int(want[n]), "n={n}");
    }
    let head: Vec<u64> = (0..=9).map(|n| exact.coeff(n).to_integer().to_u64().unwrap()).collect();
    assert_eq!(head, vec![0, 1, 1, 2, 4, 9, 20, 48, 115, 286]);
}

#[test]
fn binary_coefficients_are_wedderburn_numbers() {
    let w = wedderburn(12);
    let exact = solve_enriched_fixed_point_exact(&Model::Binary.species(), 23).unwrap();
    for n in 0..=23 {
        let want = if n % 2 == 1 { w[(n + 1) / 2] } else { 0 };
        assert_eq!(exact.coeff(n), int(want), "n={n}");
    }
    let odd: Vec<u64> = [1, 3, 5, 7, 9].iter().map(|&n| exact.coeff(n).to_integer().to_u64().unwrap()).collect();
    assert_eq!(odd, vec![1, 1, 1, 2, 3]);
}

#[test]
fn seq_coefficients_are_catalan() {
    let exact = solve_enriched_fixed_point_exact(&Species::seq(), 25).unwrap();
    for n in 1..=25 {
        assert_eq!(exact.coeff(n), int(catalan(n - 1)), "n={n}");
    }
}

#[test]
fn oracle_agrees_with_series_for_every_builtin() {
    for (model, nmax) in [
        (Model::Polya, 12),
        (Model::Binary, 12),
        (Model::Seq, 12),
        (Model::Cacti3, 7),
        (Model::Ktree2, 6),
        (Model::Ktree3, 6),
    ] {
        let s = model.species();
        let series = solve_enriched_fixed_point_exact(&s, nmax).unwrap();
        let counts = oracle_counts(&s, nmax).unwrap();
        for n in 1..=nmax {
            assert_eq!(series.coeff(n), counts[n], "{model} n={n}");
        }
    }
}

#[test]
fn oracle_counts_match_independent_recurrences() {
    let trees = rooted_trees(12);
    let polya = oracle_counts(&Species::polya(), 12).unwrap();
    let seq = oracle_counts(&Species::seq(), 12).unwrap();
    for n in 1..=12 {
        assert_eq!(polya[n], int(trees[n]));
        assert_eq!(seq[n], int(catalan(n - 1)));
    }
}

#[test]
fn weighted_set_counts_are_weight_sums() {
    let s = Species::set_with_weights(&[(0, Weight::one()), (1, Weight::from_ratio(1, 2)), (2, Weight::integer(3))]).unwrap();
    let series = solve_enriched_fixed_point_exact(&s, 9).unwrap();
    let counts = oracle_counts(&s, 9).unwrap();
    for n in 1..=9 {
        assert_eq!(series.coeff(n), counts[n]);
        let listed = enumerate_unlabelled(&s, n).unwrap();
        let total = listed.iter().fold(int(0), |a, e| a + &e.1);
        assert_eq!(total, counts[n]);
    }
}

#[test]
fn cacti_prefix() {
    let exact = solve_enriched_fixed_point_exact(&Species::blocks(BlockCatalog::cacti(3)).unwrap(), 8).unwrap();
    let head: Vec<u64> = (1..=8).map(|n| exact.coeff(n).to_integer().to_u64().unwrap()).collect();
    let oracle = oracle_counts(&Model::Cacti3.species(), 8).unwrap();
    let want: Vec<u64> = (1..=8).map(|n| oracle[n].to_integer().to_u64().unwrap()).collect();
    assert_eq!(head, want);
    assert_eq!(head, vec![1, 1, 3, 7, 21, 60, 190, 600]);
}

#[test]
fn float_and_rational_agree() {
    for model in Model::ALL {
        let s = model.species();
        let f = solve_enriched_fixed_point(&s, 20).unwrap();
        let q = solve_enriched_fixed_point_exact(&s, 20).unwrap();
        for n in 0..=20 {
            let want = q.coeff(n).to_f64().unwrap();
            assert!((f.coeff(n) - want).abs() <= 1e-12 * want.max(1.0), "{model} n={n}");
        }
    }
}

#[test]
fn singularities_of_closed_form_models() {
    // Otter's constant 1/α for rooted trees.
    let r = estimate_rho(&Species::polya(), 128, 1e-10).unwrap();
    assert!((r.rho - 0.338_321_856_899_207_7).abs() < 1e-8, "{}", r.rho);
    assert!((r.A_rho - 1.0).abs() < 1e-4);
    // A = z/(1−A) is singular at z = 1/4 with A = 1/2.
    let r = estimate_rho(&Species::seq(), 128, 1e-10).unwrap();
    assert!((r.rho - 0.25).abs() < 1e-6 && (r.A_rho - 0.5).abs() < 1e-3);
    assert!(r.Ezeta.abs() < 1e-12);
    // Wedderburn–Etherington growth ξ ≈ 0.40270 by leaves; vertices use √ξ.
    let r = estimate_rho(&Model::Binary.species(), 128, 1e-10).unwrap();
    assert!((r.rho - 0.402_697_503_671_441_3f64.sqrt()).abs() < 1e-8, "{}", r.rho);
    assert_eq!(r.span, 2);
    // z·Y^k with Y = exp(Σ A(z^i)/i): criticality k·A = 1.
    for (k, m) in [(2.0, Model::Ktree2), (3.0, Model::Ktree3)] {
        let r = estimate_rho(&m.species(), 128, 1e-10).unwrap();
        assert!((r.A_rho - 1.0 / k).abs() < 1e-4, "{m}: {}", r.A_rho);
    }
}

#[test]
fn criticality_reports_unit_mean() {
    for model in Model::ALL {
        let r = estimate_rho(&model.species(), 128, 1e-10).unwrap();
        assert!(r.criticality_residual <= 1e-6, "{model}");
        assert!((r.Exi - 1.0).abs() < 1e-5, "{model}: {}", r.Exi);
        assert!((r.mu - 1.0 / (1.0 + r.Ezeta)).abs() < 1e-12);
    }
}
