use enrtrees::metrics::{diameter_height, fpp_metric, stationary, transition_matrix, FppLaw, PatchedSpace};
use enrtrees::models::{decode, Model};
use enrtrees::samplers::{CriticalSampler, ExactTables, RngStream};
use proptest::prelude::*;

fn brute(s: &PatchedSpace) -> (f64, f64) {
    let d: Vec<Vec<f64>> = (0..s.len() as u32).map(|v| s.dijkstra(v)).collect();
    let diam = d.iter().flatten().copied().fold(0.0, f64::max);
    (diam, d[s.root() as usize].iter().copied().fold(0.0, f64::max))
}

proptest! {
    #[test]
    fn block_dp_matches_all_pairs(
        n in 2usize..40,
        parents in prop::collection::vec(any::<u32>(), 40),
        extra in prop::collection::vec((any::<u32>(), any::<u32>()), 0..12),
        weights in prop::collection::vec(0.1f64..5.0, 60),
        root in any::<u32>(),
    ) {
        let mut edges = Vec::new();
        for v in 1..n as u32 {
            edges.push((parents[v as usize] % v, v, weights[v as usize]));
        }
        for (k, &(a, b)) in extra.iter().enumerate() {
            edges.push((a % n as u32, b % n as u32, weights[40 + k]));
        }
        let s = PatchedSpace::from_weighted(n, &edges, root % n as u32);
        let got = diameter_height(&s);
        let (d, h) = brute(&s);
        prop_assert!(got.exact);
        prop_assert!((got.diameter - d).abs() < 1e-9, "{} vs {}", got.diameter, d);
        prop_assert!((got.height - h).abs() < 1e-9);
    }
}

#[test]
fn sampled_block_graphs_match_all_pairs() {
    for model in [Model::Cacti3, Model::Ktree2] {
        let s = model.species();
        let ctx = CriticalSampler::new(&s).unwrap();
        let tables = ExactTables::build(&s, ctx.rho(), 60);
        for i in 0..40 {
            let t = tables.sample(60, None, &mut RngStream::new(4, i).rng()).unwrap();
            let g = decode(&t, &model.decoding()).unwrap();
            let space = PatchedSpace::from_graph(&g);
            let got = diameter_height(&space);
            assert_eq!((got.diameter, got.height), brute(&space), "{model}");
        }
    }
}

#[test]
fn fpp_distances_are_a_metric_below_hop_paths() {
    let s = Model::Cacti3.species();
    let ctx = CriticalSampler::new(&s).unwrap();
    let tables = ExactTables::build(&s, ctx.rho(), 40);
    let t = tables.sample(40, None, &mut RngStream::new(8, 0).rng()).unwrap();
    let g = decode(&t, &Model::Cacti3.decoding()).unwrap();
    for law in [FppLaw::Exp1, FppLaw::Unif01, FppLaw::Det1] {
        let m = fpp_metric(&g, law, &mut RngStream::new(8, 1).rng()).unwrap();
        let d: Vec<Vec<f64>> = (0..m.len() as u32).map(|v| m.dijkstra(v)).collect();
        let hops = g.bfs(m.root());
        let wmax = (0..m.len() as u32).flat_map(|v| m.neighbors(v).iter().map(|e| e.1)).fold(0.0, f64::max);
        for a in 0..m.len() {
            assert_eq!(d[a][a], 0.0);
            assert!(d[m.root() as usize][a] <= hops[a].unwrap() as f64 * wmax + 1e-12);
            for b in 0..m.len() {
                assert!((d[a][b] - d[b][a]).abs() < 1e-12);
                for c in 0..m.len() {
                    assert!(d[a][c] <= d[a][b] + d[b][c] + 1e-12);
                }
            }
        }
        if law == FppLaw::Det1 {
            let unit = diameter_height(&PatchedSpace::from_graph(&g));
            assert_eq!(diameter_height(&m).diameter, unit.diameter);
        }
    }
}

#[test]
fn spine_chain_is_stationary_at_harmonic_weights() {
    for k in 1..=12 {
        let p = transition_matrix(k);
        let pi = stationary(k);
        for row in &p {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for j in 0..k {
            let v: f64 = (0..k).map(|i| pi[i] * p[i][j]).sum();
            assert!((v - pi[j]).abs() < 1e-12, "k={k} j={j}");
        }
    }
}
