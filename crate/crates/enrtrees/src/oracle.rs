//! Brute-force enumeration of small unlabelled structures and canonical codes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::models::{decode_block_graph, decode_ktree, decoding_for, Decoding, Graph, Root};
use crate::species::{BlockCatalog, BlockShape, DegreeWeights, LengthSet, Species, SpeciesKind};
use crate::symmetry::{PlaneTree, SymEnrichedTree};

/// Largest graph accepted by [`canonical_graph_code`].
pub const GRAPH_CAP: usize = 64;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("size {n} exceeds the oracle cap {cap} for this species")]
    CapExceeded { n: usize, cap: usize },
    #[error("graph with {0} vertices exceeds the canonization cap")]
    TooLarge(usize),
    #[error("oracle does not support {0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] crate::models::ModelError),
}

/// (canonical code, weight).
pub type OracleEntry = (String, BigRational);

/// Size cap of [`enumerate_unlabelled`] for a species.
pub fn oracle_cap(species: &Species) -> usize {
    match species.kind() {
        SpeciesKind::SetWeighted(DegreeWeights::Uniform) => 12,
        SpeciesKind::SetWeighted(DegreeWeights::Finite(_)) => 15,
        SpeciesKind::SeqRestricted(_) => 12,
        SpeciesKind::SetDerivedBlocks(_) => 8,
        SpeciesKind::SeqKSet { .. } => 6,
    }
}

/// Every unlabelled object of size n with its weight, sorted by code.
pub fn enumerate_unlabelled(species: &Species, n: usize) -> Result<Vec<OracleEntry>, OracleError> {
    Ok(enumerate_up_to(species, n)?.swap_remove(n))
}

/// Entries for all sizes 0..=nmax (size 0 is empty).
pub fn enumerate_up_to(species: &Species, nmax: usize) -> Result<Vec<Vec<OracleEntry>>, OracleError> {
    let cap = oracle_cap(species);
    if nmax > cap {
        return Err(OracleError::CapExceeded { n: nmax, cap });
    }
    let mut out = match species.kind() {
        SpeciesKind::SetWeighted(w) => {
            let (kappa, maxdeg) = match w {
                DegreeWeights::Uniform => (BTreeMap::new(), None),
                DegreeWeights::Finite(m) => {
                    (m.iter().map(|(&d, w)| (d, w.exact().clone())).collect(), m.keys().copied().max())
                }
            };
            let uniform = matches!(w, DegreeWeights::Uniform);
            multiset_trees(nmax, |d| if uniform { Some(BigRational::one()) } else { kappa.get(&d).cloned() }, maxdeg)
        }
        SpeciesKind::SeqRestricted(l) => plane_trees(nmax, match l {
            LengthSet::All => None,
            LengthSet::Finite(v) => Some(v.clone()),
        }),
        SpeciesKind::SetDerivedBlocks(cat) => cacti(cat, nmax)?,
        SpeciesKind::SeqKSet { k } => ktrees(*k, nmax)?,
    };
    for v in &mut out {
        v.sort();
    }
    Ok(out)
}

/// Weighted counts Σ weight per size.
pub fn oracle_counts(species: &Species, nmax: usize) -> Result<Vec<BigRational>, OracleError> {
    Ok(enumerate_up_to(species, nmax)?
        .iter()
        .map(|v| v.iter().fold(BigRational::zero(), |acc, e| acc + &e.1))
        .collect())
}

pub fn to_csv(entries: &[OracleEntry]) -> String {
    let mut s = String::from("code,weight\n");
    for (c, w) in entries {
        s.push_str(c);
        s.push(',');
        s.push_str(&w.to_string());
        s.push('\n');
    }
    s
}

fn multiset_trees(
    nmax: usize,
    kappa: impl Fn(usize) -> Option<BigRational>,
    maxdeg: Option<usize>,
) -> Vec<Vec<OracleEntry>> {
    let mut by_size: Vec<Vec<OracleEntry>> = vec![Vec::new(); nmax + 1];
    for s in 1..=nmax {
        let items: Vec<(usize, usize)> =
            (1..s).rev().flat_map(|t| (0..by_size[t].len()).map(move |i| (t, i))).collect();
        let mut chosen = Vec::new();
        let mut found = Vec::new();
        choose_multisets(&items, 0, s - 1, maxdeg, &mut chosen, &mut |ch: &[(usize, usize)]| {
            let Some(k) = kappa(ch.len()).filter(|k| !k.is_zero()) else { return };
            let mut w = k;
            let mut codes: Vec<&str> = Vec::with_capacity(ch.len());
            for &(t, i) in ch {
                w *= &by_size[t][i].1;
                codes.push(&by_size[t][i].0);
            }
            codes.sort_unstable();
            found.push((format!("({})", codes.concat()), w));
        });
        by_size[s] = found;
    }
    by_size
}

fn choose_multisets(
    items: &[(usize, usize)],
    start: usize,
    remaining: usize,
    maxdeg: Option<usize>,
    chosen: &mut Vec<(usize, usize)>,
    emit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if remaining == 0 {
        emit(chosen);
        return;
    }
    if maxdeg.is_some_and(|m| chosen.len() >= m) {
        return;
    }
    for j in start..items.len() {
        let (t, _) = items[j];
        if t <= remaining {
            chosen.push(items[j]);
            choose_multisets(items, j, remaining - t, maxdeg, chosen, emit);
            chosen.pop();
        }
    }
}

fn plane_trees(nmax: usize, lengths: Option<Vec<usize>>) -> Vec<Vec<OracleEntry>> {
    let mut by_size: Vec<Vec<String>> = vec![Vec::new(); nmax + 1];
    for s in 1..=nmax {
        let mut found = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        sequences(&by_size, s - 1, &lengths, &mut chosen, &mut found);
        by_size[s] = found;
    }
    by_size.into_iter().map(|v| v.into_iter().map(|c| (c, BigRational::one())).collect()).collect()
}

fn sequences(
    by_size: &[Vec<String>],
    remaining: usize,
    lengths: &Option<Vec<usize>>,
    chosen: &mut Vec<usize>,
    found: &mut Vec<String>,
) {
    let j = chosen.len();
    let allowed = lengths.as_ref().is_none_or(|l| l.contains(&j));
    if remaining == 0 && allowed {
        // expand size choices into all code combinations
        let mut acc = vec![String::from("(")];
        for &t in chosen.iter() {
            let mut next = Vec::with_capacity(acc.len() * by_size[t].len());
            for a in &acc {
                for c in &by_size[t] {
                    next.push(format!("{a}{c}"));
                }
            }
            acc = next;
        }
        found.extend(acc.into_iter().map(|a| a + ")"));
        return;
    }
    if lengths.as_ref().is_some_and(|l| l.iter().all(|&m| m <= j)) {
        return;
    }
    for t in 1..=remaining {
        if by_size[t].is_empty() {
            continue;
        }
        chosen.push(t);
        sequences(by_size, remaining - t, lengths, chosen, found);
        chosen.pop();
    }
}

/// Block weight of a catalog kind: identity-term weight × m! / |labelled shapes|.
fn block_weight(cat: &BlockCatalog, kind: usize) -> Result<BigRational, OracleError> {
    let b = &cat.blocks[kind];
    let id = b
        .cycle_types
        .iter()
        .find(|c| c.cycles.iter().all(|&x| x == 1))
        .map(|c| c.weight.exact().clone())
        .unwrap_or_else(BigRational::zero);
    match b.shape {
        Some(BlockShape::Edge) => Ok(id),
        Some(BlockShape::Polygon) => Ok(id * BigRational::from_integer(BigInt::from(2))),
        None => Err(OracleError::Unsupported("blocks without a shape".into())),
    }
}

fn cacti(cat: &BlockCatalog, nmax: usize) -> Result<Vec<Vec<OracleEntry>>, OracleError> {
    let kinds: Vec<(usize, Option<BlockShape>, BigRational)> = (0..cat.blocks.len())
        .map(|k| Ok((cat.blocks[k].size, cat.blocks[k].shape, block_weight(cat, k)?)))
        .collect::<Result<_, OracleError>>()?;
    let mut reps: Vec<BTreeMap<String, (Graph, BigRational)>> = vec![BTreeMap::new(); nmax + 1];
    if nmax >= 1 {
        let g = Graph::new(1, vec![], Root::Vertex(0)).expect("K1");
        reps[1].insert(canonical_graph_code(&g)?, (g, BigRational::one()));
    }
    for s in 2..=nmax {
        let mut found = BTreeMap::new();
        for (m, shape, w) in &kinds {
            if *m >= s || w.is_zero() {
                continue;
            }
            for (g, gw) in reps[s - m].values() {
                for v in 0..g.vertex_count() as u32 {
                    let base = g.vertex_count() as u32;
                    let atoms: Vec<u32> = (base..base + *m as u32).collect();
                    let mut edges = g.edges().to_vec();
                    edges.push((v, atoms[0]));
                    if *shape == Some(BlockShape::Polygon) {
                        for w in atoms.windows(2) {
                            edges.push((w[0], w[1]));
                        }
                        edges.push((atoms[atoms.len() - 1], v));
                    }
                    let h = Graph::new(s, edges, Root::Vertex(0)).expect("attachment keeps the graph simple");
                    let code = canonical_graph_code(&h)?;
                    found.entry(code).or_insert_with(|| (h, gw * w));
                }
            }
        }
        reps[s] = found;
    }
    Ok(reps.into_iter().map(|m| m.into_iter().map(|(c, (_, w))| (c, w)).collect()).collect())
}

fn ktrees(k: usize, nmax: usize) -> Result<Vec<Vec<OracleEntry>>, OracleError> {
    let root: Vec<u32> = (0..k as u32).collect();
    // (graph, hedra) per code
    let mut reps: Vec<BTreeMap<String, (Graph, Vec<Vec<u32>>)>> = vec![BTreeMap::new(); nmax + 1];
    if nmax >= 1 {
        let mut edges = Vec::new();
        for a in 0..=k as u32 {
            for b in a + 1..=k as u32 {
                edges.push((a, b));
            }
        }
        let g = Graph::new(k + 1, edges, Root::Front(root.clone())).expect("clique");
        reps[1].insert(canonical_graph_code(&g)?, (g, vec![(0..=k as u32).collect()]));
    }
    for h in 2..=nmax {
        let mut found = BTreeMap::new();
        for (g, hedra) in reps[h - 1].values() {
            let mut fronts: Vec<Vec<u32>> = Vec::new();
            for hed in hedra {
                for skip in 0..hed.len() {
                    let f: Vec<u32> = hed.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
                    if f != root && !fronts.contains(&f) {
                        fronts.push(f);
                    }
                }
            }
            for f in fronts {
                let x = g.vertex_count() as u32;
                let mut edges = g.edges().to_vec();
                edges.extend(f.iter().map(|&v| (v, x)));
                let ng = Graph::new(k + h, edges, Root::Front(root.clone())).expect("new vertex");
                let code = canonical_graph_code(&ng)?;
                found.entry(code).or_insert_with(|| {
                    let mut hs = hedra.clone();
                    let mut hed = f.clone();
                    hed.push(x);
                    hs.push(hed);
                    (ng, hs)
                });
            }
        }
        reps[h] = found;
    }
    Ok(reps.into_iter().map(|m| m.into_keys().map(|c| (c, BigRational::one())).collect()).collect())
}

/// Recursive code: sorted child codes when unordered, child order otherwise.
pub fn canonical_tree_code(t: &PlaneTree, ordered: bool) -> String {
    let n = t.len();
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(t.children[v].iter().copied());
    }
    let mut codes = vec![String::new(); n];
    for &v in order.iter().rev() {
        let mut kids: Vec<String> = t.children[v].iter().map(|&c| std::mem::take(&mut codes[c])).collect();
        if !ordered {
            kids.sort_unstable();
        }
        codes[v] = format!("({})", kids.concat());
    }
    std::mem::take(&mut codes[0])
}

fn refine(adj: &[Vec<u32>], colors: &mut Vec<u32>) {
    let n = adj.len();
    let mut classes = count_classes(colors);
    loop {
        let mut sigs: Vec<(u32, Vec<u32>, usize)> = (0..n)
            .map(|v| {
                let mut nb: Vec<u32> = adj[v].iter().map(|&w| colors[w as usize]).collect();
                nb.sort_unstable();
                (colors[v], nb, v)
            })
            .collect();
        sigs.sort();
        let mut rank = 0u32;
        for i in 0..n {
            if i > 0 && (sigs[i].0 != sigs[i - 1].0 || sigs[i].1 != sigs[i - 1].1) {
                rank += 1;
            }
            colors[sigs[i].2] = rank;
        }
        let c = rank as usize + 1;
        if c == classes {
            return;
        }
        classes = c;
    }
}

fn count_classes(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn search(adj: &[Vec<u32>], mut colors: Vec<u32>, best: &mut Option<Vec<u64>>) {
    refine(adj, &mut colors);
    let n = adj.len();
    let mut counts = vec![0usize; n];
    for &c in &colors {
        counts[c as usize] += 1;
    }
    match (0..n).find(|&c| counts[c] >= 2) {
        None => {
            let words = (n * n).div_ceil(64);
            let mut bits = vec![0u64; words.max(1)];
            for v in 0..n {
                for &w in &adj[v] {
                    let (a, b) = (colors[v] as usize, colors[w as usize] as usize);
                    let idx = a * n + b;
                    bits[idx / 64] |= 1 << (idx % 64);
                }
            }
            if best.as_ref().is_none_or(|b| bits < *b) {
                *best = Some(bits);
            }
        }
        Some(c) => {
            for v in 0..n {
                if colors[v] as usize != c {
                    continue;
                }
                let next: Vec<u32> = (0..n)
                    .map(|u| {
                        let base = 2 * colors[u];
                        if colors[u] as usize == c && u != v {
                            base + 1
                        } else {
                            base
                        }
                    })
                    .collect();
                search(adj, next, best);
            }
        }
    }
}

/// Minimum adjacency string over refinement-compatible labellings. The root
/// vertex, or each front vertex in order, is fixed individually.
pub fn canonical_graph_code(g: &Graph) -> Result<String, OracleError> {
    let n = g.vertex_count();
    if n > GRAPH_CAP {
        return Err(OracleError::TooLarge(n));
    }
    let (tag, mut colors) = match g.root() {
        Root::None => ("n".to_string(), vec![0u32; n]),
        Root::Vertex(r) => {
            let mut c = vec![1u32; n];
            c[*r as usize] = 0;
            ("v".to_string(), c)
        }
        Root::Front(f) => {
            let mut c = vec![f.len() as u32; n];
            for (i, &v) in f.iter().enumerate() {
                c[v as usize] = i as u32;
            }
            (format!("f{}", f.len()), c)
        }
    };
    // make colours dense ranks
    let mut sorted = colors.clone();
    sorted.sort_unstable();
    sorted.dedup();
    for c in &mut colors {
        *c = sorted.binary_search(c).expect("present") as u32;
    }
    let mut best = None;
    search(&g.adjacency(), colors, &mut best);
    let bits = best.unwrap_or_default();
    let hex: String = bits.iter().map(|w| format!("{w:016x}")).collect();
    Ok(format!("{tag}{n}:{hex}"))
}

/// Oracle code of a sampled tree after decoding by the species kind.
pub fn sample_code(species: &Species, t: &SymEnrichedTree) -> Result<String, OracleError> {
    match decoding_for(species) {
        Decoding::Tree => {
            let ordered = matches!(species.kind(), SpeciesKind::SeqRestricted(_));
            Ok(canonical_tree_code(&t.materialize(), ordered))
        }
        Decoding::BlockGraph(cat) => canonical_graph_code(&decode_block_graph(t, &cat)?),
        Decoding::KTree(k) => canonical_graph_code(&decode_ktree(t, k)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::Weight;

    fn counts(s: &Species, n: usize) -> Vec<usize> {
        enumerate_up_to(s, n).unwrap().iter().map(|v| v.len()).collect()
    }

    #[test]
    fn polya_counts() {
        assert_eq!(counts(&Species::polya(), 9), vec![0, 1, 1, 2, 4, 9, 20, 48, 115, 286]);
    }

    #[test]
    fn plane_tree_counts_are_catalan() {
        assert_eq!(counts(&Species::seq(), 6), vec![0, 1, 1, 2, 5, 14, 42]);
    }

    #[test]
    fn binary_counts() {
        let s = Species::set_with_weights(&[(0, Weight::one()), (2, Weight::one())]).unwrap();
        assert_eq!(counts(&s, 9), vec![0, 1, 0, 1, 0, 1, 0, 2, 0, 3]);
    }

    #[test]
    fn weighted_size_four() {
        let s = Species::set_with_weights(&[(0, Weight::one()), (2, Weight::integer(2)), (3, Weight::one())]).unwrap();
        let e = enumerate_unlabelled(&s, 4).unwrap();
        // every other shape on four vertices has an outdegree-one vertex
        assert_eq!(e, vec![("(()()())".to_string(), BigRational::one())]);
    }

    #[test]
    fn cacti_and_ktree_counts() {
        let c = Species::blocks(BlockCatalog::cacti(3)).unwrap();
        assert_eq!(counts(&c, 7), vec![0, 1, 1, 3, 7, 21, 60, 190]);
        assert_eq!(counts(&Species::seqk_set(2).unwrap(), 5), vec![0, 1, 2, 7, 26, 107]);
        assert_eq!(counts(&Species::seqk_set(3).unwrap(), 4), vec![0, 1, 3, 15, 82]);
    }

    #[test]
    fn graph_code_is_invariant_and_root_sensitive() {
        let p = Graph::new(3, vec![(0, 1), (1, 2)], Root::Vertex(0)).unwrap();
        let q = Graph::new(3, vec![(2, 1), (1, 0)], Root::Vertex(2)).unwrap();
        let mid = Graph::new(3, vec![(0, 1), (1, 2)], Root::Vertex(1)).unwrap();
        assert_eq!(canonical_graph_code(&p).unwrap(), canonical_graph_code(&q).unwrap());
        assert_ne!(canonical_graph_code(&p).unwrap(), canonical_graph_code(&mid).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(enumerate_unlabelled(&Species::polya(), 13), Err(OracleError::CapExceeded { .. })));
    }
}
