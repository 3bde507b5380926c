use std::collections::BTreeMap;

use enrtrees::models::Model;
use enrtrees::oracle::{enumerate_unlabelled, sample_code};
use enrtrees::par::collect_indexed;
use enrtrees::samplers::{
    exact_size_sample, sample_limit_trimmed, CriticalSampler, ExactMethod, ExactTables, GibbsMethod, GibbsSampler,
    LimitKind, RngStream, SamplerError,
};
use enrtrees::species::{Species, Weight};
use enrtrees::stats::{chi_square_gof, chi_square_two_sample, Census};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

fn law(s: &Species, n: usize) -> BTreeMap<String, f64> {
    let entries = enumerate_unlabelled(s, n).unwrap();
    let total = entries.iter().fold(BigRational::zero(), |a, e| a + &e.1);
    entries.into_iter().map(|(c, w)| (c, (w / &total).to_f64().unwrap())).collect()
}

fn weighted() -> Species {
    Species::set_with_weights(&[(0, Weight::one()), (1, Weight::from_ratio(1, 2)), (2, Weight::integer(3))]).unwrap()
}

fn census(s: &Species, n: usize, method: ExactMethod, draws: u64, seed: u64) -> Census {
    let ctx = CriticalSampler::new(s).unwrap();
    let tables = ExactTables::build(s, ctx.rho(), n);
    collect_indexed(draws, 1, |i| {
        let mut rng = RngStream::new(seed, i).rng();
        let t = exact_size_sample(&ctx, &tables, n, method, &mut rng).unwrap();
        sample_code(s, &t).unwrap()
    })
    .into_iter()
    .collect()
}

#[test]
fn every_method_matches_the_oracle_law() {
    let cases = [(Model::Polya.species(), 6), (Model::Binary.species(), 7), (Model::Seq.species(), 5), (weighted(), 6)];
    for (k, (s, n)) in cases.iter().enumerate() {
        let want = law(s, *n);
        for (m, method) in [ExactMethod::Recursive, ExactMethod::Rejection, ExactMethod::Rotation].into_iter().enumerate() {
            let c = census(s, *n, method, 20_000, 100 + (k * 3 + m) as u64);
            let gof = chi_square_gof(&c, &want);
            assert!(gof.p_value > 1e-3, "{:?} {method:?}: {gof:?}", s.kind());
        }
    }
}

#[test]
fn weighted_copies_use_powered_weights() {
    // a tree whose root has two identical children is weighted κ₂·ω(child)²
    let s = weighted();
    let want = law(&s, 7);
    let c = census(&s, 7, ExactMethod::Recursive, 40_000, 7);
    assert!(chi_square_gof(&c, &want).p_value > 1e-3);
    let r = census(&s, 7, ExactMethod::Rejection, 40_000, 8);
    assert!(chi_square_two_sample(&c, &r).p_value > 1e-3);
}

#[test]
fn draws_do_not_depend_on_thread_count() {
    let s = Model::Cacti3.species();
    let ctx = CriticalSampler::new(&s).unwrap();
    let tables = ExactTables::build(&s, ctx.rho(), 40);
    let run = |threads| {
        collect_indexed(64, threads, |i| {
            let mut rng = RngStream::new(5, i).rng();
            exact_size_sample(&ctx, &tables, 40, ExactMethod::Recursive, &mut rng).unwrap().sym_code(ctx.entries())
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn off_lattice_sizes_are_rejected() {
    let s = Model::Binary.species();
    let ctx = CriticalSampler::new(&s).unwrap();
    let tables = ExactTables::build(&s, ctx.rho(), 20);
    let mut rng = RngStream::new(1, 0).rng();
    for method in [ExactMethod::Recursive, ExactMethod::Rejection, ExactMethod::Rotation] {
        let e = exact_size_sample(&ctx, &tables, 8, method, &mut rng).unwrap_err();
        assert!(matches!(e, SamplerError::Lattice { n: 8, span: 2 }), "{e}");
    }
    assert!(matches!(
        exact_size_sample(&ctx, &tables, 21, ExactMethod::Recursive, &mut rng),
        Err(SamplerError::TableTooSmall { n: 21, max: 20 })
    ));
}

#[test]
fn trimmed_limit_has_a_full_spine() {
    for model in [Model::Polya, Model::Cacti3, Model::Ktree2] {
        let ctx = CriticalSampler::new(&model.species()).unwrap();
        for i in 0..200 {
            let mut rng = RngStream::new(9, i).rng();
            let l = sample_limit_trimmed(&ctx, 3, LimitKind::TInf, &mut rng).unwrap();
            assert_eq!(l.spine.len(), 4);
            assert!(l.tree.height() >= 3);
            assert!(l.tree.trimmed(3).height() <= 3);
        }
    }
}

#[test]
fn gibbs_sizes_add_up_and_methods_agree() {
    for s in [Model::Ktree2.species(), weighted()] {
        let g = GibbsSampler::new(&s, 40).unwrap();
        let mut per = Vec::new();
        for (m, method) in [GibbsMethod::Recursive, GibbsMethod::Rejection].into_iter().enumerate() {
            let mut c = Census::new();
            for i in 0..20_000 {
                let mut rng = RngStream::new(11 + m as u64, i).rng();
                let sizes = g.sizes(12, method, &mut rng).unwrap();
                assert_eq!(sizes.iter().map(|(t, k)| t * *k as usize).sum::<usize>(), 12);
                let mut key: Vec<_> = sizes.iter().map(|(t, k)| format!("{t}x{k}")).collect();
                key.sort();
                c.add(key.join(" "));
            }
            per.push(c);
        }
        let t = chi_square_two_sample(&per[0], &per[1]);
        assert!(t.p_value > 1e-3, "{:?}: {t:?}", s.kind());
        let mut rng = RngStream::new(3, 3).rng();
        let comps = g.sample(30, GibbsMethod::Recursive, &mut rng).unwrap();
        assert_eq!(comps.iter().map(|c| c.copies as u64 * c.tree.size()).sum::<u64>(), 30);
    }
}
