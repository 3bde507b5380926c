//! Patched metric spaces, first-passage percolation, diameter and height,
//! neighbourhoods and the k-tree spine chain.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use thiserror::Error;

use crate::models::{blocks_of, Graph, Root};
use crate::symmetry::PlaneTree;

/// Largest block handled by the block-cut dynamic program.
pub const BLOCK_CAP: usize = 64;
/// Largest space whose diameter falls back to all-sources Dijkstra.
pub const EXACT_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("patch at vertex {vertex}: triangle inequality fails on points {a}, {b}, {c}")]
    Triangle { vertex: usize, a: usize, b: usize, c: usize },
    #[error("patch at vertex {vertex}: {detail}")]
    BadPatch { vertex: usize, detail: String },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("unknown weight law {0:?} (expected det1, exp1 or unif01)")]
    UnknownLaw(String),
}

/// Shortest-path metric of a weighted graph with a root point.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchedSpace {
    adj: Vec<Vec<(u32, f64)>>,
    root: u32,
}

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, u32);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PatchedSpace {
    /// From weighted edges; parallel edges keep the lighter weight.
    pub fn from_weighted(n: usize, edges: &[(u32, u32, f64)], root: u32) -> Self {
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a == b {
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                match adj[x as usize].iter_mut().find(|e| e.0 == y) {
                    Some(e) => e.1 = e.1.min(w),
                    None => adj[x as usize].push((y, w)),
                }
            }
        }
        PatchedSpace { adj, root }
    }

    /// Graph metric: every edge has length 1.
    pub fn from_graph(g: &Graph) -> Self {
        let adj = g.adjacency().into_iter().map(|nb| nb.into_iter().map(|w| (w, 1.0)).collect()).collect();
        PatchedSpace { adj, root: g.root_vertex().unwrap_or(0) }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn neighbors(&self, v: u32) -> &[(u32, f64)] {
        &self.adj[v as usize]
    }

    pub fn dijkstra(&self, src: u32) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.adj.len()];
        dist[src as usize] = 0.0;
        let mut heap = BinaryHeap::from([Item(0.0, src)]);
        while let Some(Item(d, v)) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            for &(w, len) in &self.adj[v as usize] {
                let nd = d + len;
                if nd < dist[w as usize] {
                    dist[w as usize] = nd;
                    heap.push(Item(nd, w));
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: u32, b: u32) -> f64 {
        self.dijkstra(a)[b as usize]
    }

    pub fn is_connected(&self) -> bool {
        self.adj.is_empty() || self.dijkstra(self.root).iter().all(|d| d.is_finite())
    }
}

/// A finite metric on a vertex and its children; point 0 is the vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMetric {
    pub points: usize,
    /// Row-major `points × points` distances.
    pub d: Vec<f64>,
}

impl LocalMetric {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.points + b]
    }

    fn check(&self, vertex: usize) -> Result<(), MetricError> {
        let m = self.points;
        if self.d.len() != m * m {
            return Err(MetricError::BadPatch { vertex, detail: "matrix has the wrong size".into() });
        }
        for a in 0..m {
            if self.get(a, a) != 0.0 {
                return Err(MetricError::BadPatch { vertex, detail: format!("d({a},{a}) ≠ 0") });
            }
            for b in 0..m {
                let x = self.get(a, b);
                if !(x >= 0.0 && x.is_finite()) || x != self.get(b, a) {
                    return Err(MetricError::BadPatch { vertex, detail: format!("d({a},{b}) invalid") });
                }
                for c in 0..m {
                    if self.get(a, c) > x + self.get(b, c) + 1e-12 {
                        return Err(MetricError::Triangle { vertex, a, b, c });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Named rules generating the local metric on {v} ∪ children.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchRule {
    /// Star distances 1: the tree metric.
    Unit,
    /// All distances 1.
    Clique,
    /// Star lengths uniform on [lo, hi], child pairs at the summed length.
    RandomStar { lo: f64, hi: f64 },
}

impl PatchRule {
    pub fn local<R: Rng + ?Sized>(&self, children: usize, rng: &mut R) -> LocalMetric {
        let m = children + 1;
        let mut d = vec![0.0; m * m];
        let arms: Vec<f64> = match *self {
            PatchRule::Unit | PatchRule::Clique => vec![1.0; m],
            PatchRule::RandomStar { lo, hi } => (0..m).map(|_| rng.random_range(lo..=hi)).collect(),
        };
        for a in 0..m {
            for b in 0..m {
                if a == b {
                    continue;
                }
                d[a * m + b] = match *self {
                    PatchRule::Clique => 1.0,
                    _ if a == 0 => arms[b],
                    _ if b == 0 => arms[a],
                    _ => arms[a] + arms[b],
                };
            }
        }
        LocalMetric { points: m, d }
    }
}

/// Glues per-vertex metrics along a tree: vertex v and its children form a
/// patch, and the space carries the shortest-path metric of all patches.
pub fn patch_metric_from(tree: &PlaneTree, locals: &[LocalMetric]) -> Result<PatchedSpace, MetricError> {
    let mut edges = Vec::new();
    for (v, kids) in tree.children.iter().enumerate() {
        let lm = &locals[v];
        if lm.points != kids.len() + 1 {
            return Err(MetricError::BadPatch { vertex: v, detail: "point count differs from outdegree + 1".into() });
        }
        lm.check(v)?;
        let pts: Vec<u32> = std::iter::once(v as u32).chain(kids.iter().map(|&c| c as u32)).collect();
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                edges.push((pts[a], pts[b], lm.get(a, b)));
            }
        }
    }
    Ok(PatchedSpace::from_weighted(tree.len(), &edges, 0))
}

pub fn patch_metric<R: Rng + ?Sized>(tree: &PlaneTree, rule: PatchRule, rng: &mut R) -> Result<PatchedSpace, MetricError> {
    let locals: Vec<LocalMetric> = tree.children.iter().map(|k| rule.local(k.len(), rng)).collect();
    patch_metric_from(tree, &locals)
}

/// Edge-length laws for first-passage percolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FppLaw {
    Det1,
    Exp1,
    Unif01,
}

impl FppLaw {
    pub fn name(self) -> &'static str {
        match self {
            FppLaw::Det1 => "det1",
            FppLaw::Exp1 => "exp1",
            FppLaw::Unif01 => "unif01",
        }
    }

    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            FppLaw::Det1 => 1.0,
            FppLaw::Exp1 => Exp1.sample(rng),
            FppLaw::Unif01 => rng.random::<f64>(),
        }
    }
}

impl FromStr for FppLaw {
    type Err = MetricError;
    fn from_str(s: &str) -> Result<Self, MetricError> {
        match s {
            "det1" => Ok(FppLaw::Det1),
            "exp1" => Ok(FppLaw::Exp1),
            "unif01" => Ok(FppLaw::Unif01),
            other => Err(MetricError::UnknownLaw(other.to_string())),
        }
    }
}

/// i.i.d. edge lengths, shortest weighted paths.
pub fn fpp_metric<R: Rng + ?Sized>(g: &Graph, law: FppLaw, rng: &mut R) -> Result<PatchedSpace, MetricError> {
    if !g.is_connected() {
        return Err(MetricError::Disconnected);
    }
    let edges: Vec<(u32, u32, f64)> = g.edges().iter().map(|&(a, b)| (a, b, law.draw(rng))).collect();
    Ok(PatchedSpace::from_weighted(g.vertex_count(), &edges, g.root_vertex().unwrap_or(0)))
}

/// Diameter and height (largest distance from the root).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiameterHeight {
    pub diameter: f64,
    pub height: f64,
    /// False when the diameter is a double-sweep lower bound.
    pub exact: bool,
}

pub fn diameter_height(s: &PatchedSpace) -> DiameterHeight {
    if s.len() <= 1 {
        return DiameterHeight { diameter: 0.0, height: 0.0, exact: true };
    }
    let adj: Vec<Vec<u32>> = s.adj.iter().map(|nb| nb.iter().map(|e| e.0).collect()).collect();
    let blocks = blocks_of(&adj);
    if blocks.iter().all(|b| b.vertices.len() <= BLOCK_CAP) {
        return block_dp(s, &blocks);
    }
    let from_root = s.dijkstra(s.root);
    let height = from_root.iter().copied().fold(0.0, f64::max);
    if s.len() <= EXACT_CAP {
        let diameter = (0..s.len() as u32).map(|v| s.dijkstra(v).into_iter().fold(0.0, f64::max)).fold(0.0, f64::max);
        return DiameterHeight { diameter, height, exact: true };
    }
    let far = from_root.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|x| x.0).unwrap_or(0);
    let diameter = s.dijkstra(far as u32).into_iter().fold(0.0, f64::max);
    DiameterHeight { diameter, height, exact: false }
}

/// Exact diameter and height along the block-cut tree rooted at the root.
fn block_dp(s: &PatchedSpace, blocks: &[crate::models::Block]) -> DiameterHeight {
    let n = s.len();
    let mut member: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, b) in blocks.iter().enumerate() {
        if b.vertices.len() >= 2 {
            for &v in &b.vertices {
                member[v as usize].push(i as u32);
            }
        }
    }
    // BFS over the block-cut tree: blocks in discovery order with their attachment vertex
    let mut attach = vec![u32::MAX; blocks.len()];
    let mut order = Vec::with_capacity(blocks.len());
    let mut seen = vec![false; n];
    seen[s.root as usize] = true;
    let mut queue = VecDeque::from([s.root]);
    while let Some(v) = queue.pop_front() {
        for &b in &member[v as usize] {
            if attach[b as usize] != u32::MAX {
                continue;
            }
            attach[b as usize] = v;
            order.push(b);
            for &w in &blocks[b as usize].vertices {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let mut down = vec![0.0f64; n];
    let mut best = vec![(0.0f64, 0.0f64); n];
    let mut diameter = 0.0f64;
    for &b in order.iter().rev() {
        let block = &blocks[b as usize];
        let a = attach[b as usize];
        let verts = &block.vertices;
        let m = verts.len();
        let contrib;
        if m == 2 {
            let other = if verts[0] == a { verts[1] } else { verts[0] };
            let w = s.adj[a as usize].iter().find(|e| e.0 == other).map(|e| e.1).expect("block edge");
            contrib = w + down[other as usize];
        } else {
            let d = block_distances(s, verts);
            let ai = verts.iter().position(|&v| v == a).expect("attachment in block");
            let mut c = 0.0f64;
            for (i, &v) in verts.iter().enumerate() {
                if i == ai {
                    continue;
                }
                c = c.max(d[ai * m + i] + down[v as usize]);
                for (j, &w) in verts.iter().enumerate().skip(i + 1) {
                    if j != ai {
                        diameter = diameter.max(down[v as usize] + d[i * m + j] + down[w as usize]);
                    }
                }
            }
            contrib = c;
        }
        let slot = &mut best[a as usize];
        if contrib > slot.0 {
            *slot = (contrib, slot.0);
        } else if contrib > slot.1 {
            slot.1 = contrib;
        }
        // blocks of `a` are all processed before `a`'s own parent block
        down[a as usize] = slot.0;
        diameter = diameter.max(slot.0 + slot.1);
    }
    DiameterHeight { diameter, height: down[s.root as usize], exact: true }
}

/// All-pairs distances inside a block, using only edges between its vertices.
fn block_distances(s: &PatchedSpace, verts: &[u32]) -> Vec<f64> {
    let m = verts.len();
    let mut d = vec![f64::INFINITY; m * m];
    for i in 0..m {
        d[i * m + i] = 0.0;
        for &(w, len) in &s.adj[verts[i] as usize] {
            if let Ok(j) = verts.binary_search(&w) {
                d[i * m + j] = d[i * m + j].min(len);
            }
        }
    }
    for k in 0..m {
        for i in 0..m {
            let dik = d[i * m + k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..m {
                let via = dik + d[k * m + j];
                if via < d[i * m + j] {
                    d[i * m + j] = via;
                }
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodMetric {
    Graph,
    Block,
}

/// Induced subgraph on points within distance k of `center`, rooted there.
/// Vertices are listed in breadth-first order.
pub fn neighborhood(g: &Graph, center: u32, k: u32, metric: NeighborhoodMetric) -> Graph {
    let dist = match metric {
        NeighborhoodMetric::Graph => g.bfs(center),
        NeighborhoodMetric::Block => block_distances_from(g, center),
    };
    let mut verts: Vec<(u32, u32)> =
        dist.iter().enumerate().filter_map(|(v, d)| d.filter(|&d| d <= k).map(|d| (d, v as u32))).collect();
    verts.sort_unstable();
    let order: Vec<u32> = verts.into_iter().map(|x| x.1).collect();
    g.induced(&order).with_root(Root::Vertex(0))
}

/// Minimum number of blocks covering a path from `center`.
pub fn block_distances_from(g: &Graph, center: u32) -> Vec<Option<u32>> {
    let blocks = g.blocks();
    let mut member: Vec<Vec<usize>> = vec![Vec::new(); g.vertex_count()];
    for (i, b) in blocks.iter().enumerate() {
        for &v in &b.vertices {
            member[v as usize].push(i);
        }
    }
    let mut dist = vec![None; g.vertex_count()];
    let mut used = vec![false; blocks.len()];
    dist[center as usize] = Some(0);
    let mut queue = VecDeque::from([center]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize].expect("queued");
        for &b in &member[v as usize] {
            if used[b] {
                continue;
            }
            used[b] = true;
            for &w in &blocks[b].vertices {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
    }
    dist
}

/// b_k = (k·H_k)⁻¹.
pub fn b_k(k: usize) -> f64 {
    1.0 / (k as f64 * (1..=k).map(|i| 1.0 / i as f64).sum::<f64>())
}

/// Row-stochastic matrix of the spine chain on states 1..=k (index i−1).
pub fn transition_matrix(k: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; k]; k];
    let kf = k as f64;
    p[0][k - 1] += 1.0 / kf;
    p[0][0] += (kf - 1.0) / kf;
    for i in 2..=k {
        p[i - 1][i - 2] += i as f64 / kf;
        p[i - 1][i - 1] += (kf - i as f64) / kf;
    }
    p
}

/// π_i ∝ 1/i.
pub fn stationary(k: usize) -> Vec<f64> {
    let h: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
    (1..=k).map(|i| 1.0 / (i as f64 * h)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub k: usize,
    pub steps: u64,
    /// 1 + number of visits to state k.
    pub terminal_distance: u64,
    /// Fraction of X_1..X_ℓ in each state 1..=k.
    pub occupancy: Vec<f64>,
    pub b_k: f64,
}

impl ChainReport {
    pub fn occupancy_tv(&self) -> f64 {
        0.5 * self.occupancy.iter().zip(stationary(self.k)).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// (d′_ℓ − 1)/ℓ.
    pub fn rate(&self) -> f64 {
        (self.terminal_distance - 1) as f64 / self.steps as f64
    }
}

pub fn ktree_chain<R: Rng + ?Sized>(k: usize, ell: u64, rng: &mut R) -> ChainReport {
    assert!(k >= 1 && ell >= 1);
    let mut counts = vec![0u64; k];
    let mut x = 1usize;
    for _ in 0..ell {
        let u = rng.random_range(0..k);
        x = if x == 1 {
            if u == 0 {
                k
            } else {
                1
            }
        } else if u < x {
            x - 1
        } else {
            x
        };
        counts[x - 1] += 1;
    }
    ChainReport {
        k,
        steps: ell,
        terminal_distance: 1 + counts[k - 1],
        occupancy: counts.iter().map(|&c| c as f64 / ell as f64).collect(),
        b_k: b_k(k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RngStream;

    fn path(n: usize) -> Graph {
        Graph::new(n, (0..n as u32 - 1).map(|i| (i, i + 1)).collect(), Root::Vertex(0)).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                e.push((a, b));
            }
        }
        Graph::new(n, e, Root::Vertex(0)).unwrap()
    }

    #[test]
    fn path_and_clique_diameters() {
        let p = diameter_height(&PatchedSpace::from_graph(&path(4)));
        assert_eq!((p.diameter, p.height, p.exact), (3.0, 3.0, true));
        let k = diameter_height(&PatchedSpace::from_graph(&complete(4)));
        assert_eq!((k.diameter, k.height), (1.0, 1.0));
    }

    #[test]
    fn block_dp_matches_all_pairs() {
        let mut rng = RngStream::new(11, 0).rng();
        for _ in 0..200 {
            // random cactus-like graph: attach edges and triangles
            let mut n = 1u32;
            let mut edges = Vec::new();
            while n < 30 {
                let v = rng.random_range(0..n);
                if rng.random_bool(0.5) {
                    edges.push((v, n));
                    n += 1;
                } else {
                    edges.extend([(v, n), (n, n + 1), (v, n + 1)]);
                    n += 2;
                }
            }
            let g = Graph::new(n as usize, edges, Root::Vertex(rng.random_range(0..n))).unwrap();
            let s = fpp_metric(&g, FppLaw::Exp1, &mut rng).unwrap();
            let dh = diameter_height(&s);
            let brute = (0..n).map(|v| s.dijkstra(v).into_iter().fold(0.0, f64::max)).fold(0.0, f64::max);
            let h = s.dijkstra(s.root()).into_iter().fold(0.0, f64::max);
            assert!((dh.diameter - brute).abs() < 1e-9, "{} vs {}", dh.diameter, brute);
            assert!((dh.height - h).abs() < 1e-9);
        }
    }

    #[test]
    fn star_leaves_are_two_apart() {
        let tree = PlaneTree { parent: vec![None, Some(0), Some(0), Some(0)], children: vec![vec![1, 2, 3], vec![], vec![], vec![]], rep: vec![0; 4] };
        let mut rng = RngStream::new(1, 0).rng();
        let s = patch_metric(&tree, PatchRule::Unit, &mut rng).unwrap();
        assert_eq!(s.distance(1, 3), 2.0);
        let c = patch_metric(&tree, PatchRule::Clique, &mut rng).unwrap();
        assert_eq!(c.distance(1, 3), 1.0);
    }

    #[test]
    fn non_metric_patch_is_rejected() {
        let tree = PlaneTree { parent: vec![None, Some(0), Some(0)], children: vec![vec![1, 2], vec![], vec![]], rep: vec![0; 3] };
        let bad = LocalMetric { points: 3, d: vec![0.0, 1.0, 1.0, 1.0, 0.0, 5.0, 1.0, 5.0, 0.0] };
        let leaf = LocalMetric { points: 1, d: vec![0.0] };
        assert!(matches!(
            patch_metric_from(&tree, &[bad, leaf.clone(), leaf]),
            Err(MetricError::Triangle { .. })
        ));
    }

    #[test]
    fn block_neighbourhood_at_cut_vertex() {
        // triangle 0-1-2 and triangle 2-3-4 sharing cut vertex 2, pendant 4-5
        let g = Graph::new(6, vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4), (4, 5)], Root::Vertex(2)).unwrap();
        let u1 = neighborhood(&g, 2, 1, NeighborhoodMetric::Block);
        assert_eq!(u1.vertex_count(), 5);
        let v0 = neighborhood(&g, 2, 0, NeighborhoodMetric::Graph);
        assert_eq!(v0.vertex_count(), 1);
        let all = neighborhood(&g, 2, 10, NeighborhoodMetric::Graph);
        assert_eq!(all.edges().len(), g.edges().len());
    }

    #[test]
    fn chain_stationarity() {
        for k in 1..=16 {
            let p = transition_matrix(k);
            let pi = stationary(k);
            for j in 0..k {
                let s: f64 = (0..k).map(|i| pi[i] * p[i][j]).sum();
                assert!((s - pi[j]).abs() < 1e-12);
            }
            assert!((pi[k - 1] - b_k(k)).abs() < 1e-15);
        }
        assert!((b_k(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((b_k(3) - 2.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn chain_k1_counts_every_step() {
        let mut rng = RngStream::new(1, 0).rng();
        let r = ktree_chain(1, 1000, &mut rng);
        assert_eq!(r.terminal_distance, 1001);
        assert_eq!(r.b_k, 1.0);
    }
}
