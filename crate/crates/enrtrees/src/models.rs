//! Built-in models and the decoders from enriched trees to rooted graphs
//! and front-rooted k-trees.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};
use thiserror::Error;

use crate::species::{
    BlockCatalog, BlockKind, BlockShape, DegreeWeights, EntryLabel, Species, SpeciesError, SpeciesKind, Weight,
};
use crate::symmetry::{Blueprint, NodeId, SymEnrichedTree};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model {0:?} (expected polya, binary, cacti3, ktree2, ktree3 or seq)")]
    UnknownModel(String),
    #[error("tree does not match the block catalog: {0}")]
    CatalogMismatch(String),
    #[error("tree does not encode a {expected}-tree: {detail}")]
    KMismatch { expected: usize, detail: String },
    #[error("cannot decode a trimmed tree")]
    Trimmed,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Species(#[from] SpeciesError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("loop at vertex {0}")]
    Loop(u32),
    #[error("duplicate edge {0}-{1}")]
    MultiEdge(u32, u32),
    #[error("vertex {0} out of range")]
    OutOfRange(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Root {
    None,
    Vertex(u32),
    /// An ordered k-clique.
    Front(Vec<u32>),
}

/// A simple graph with sorted edge list (u < v).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    root: Root,
}

/// A biconnected component or bridge, by vertices and edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub vertices: Vec<u32>,
    pub edges: Vec<(u32, u32)>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(u32, u32)>, root: Root) -> Result<Self, GraphError> {
        let mut es: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::Loop(a));
            }
            for v in [a, b] {
                if v as usize >= n {
                    return Err(GraphError::OutOfRange(v));
                }
            }
            es.push((a.min(b), a.max(b)));
        }
        es.sort_unstable();
        if let Some(w) = es.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::MultiEdge(w[0].0, w[0].1));
        }
        match &root {
            Root::Vertex(r) if *r as usize >= n => return Err(GraphError::OutOfRange(*r)),
            Root::Front(f) => {
                if let Some(&v) = f.iter().find(|&&v| v as usize >= n) {
                    return Err(GraphError::OutOfRange(v));
                }
            }
            _ => {}
        }
        Ok(Graph { n, edges: es, root })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn root(&self) -> &Root {
        &self.root
    }

    /// Root vertex, or the first front vertex.
    pub fn root_vertex(&self) -> Option<u32> {
        match &self.root {
            Root::None => None,
            Root::Vertex(r) => Some(*r),
            Root::Front(f) => f.first().copied(),
        }
    }

    pub fn with_root(mut self, root: Root) -> Self {
        self.root = root;
        self
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        adj
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v as usize] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Blocks by Tarjan's algorithm; isolated vertices form one-vertex blocks.
    pub fn blocks(&self) -> Vec<Block> {
        let adj = self.adjacency();
        blocks_of(&adj)
    }

    /// Breadth-first distances in hops from `src`.
    pub fn bfs(&self, src: u32) -> Vec<Option<u32>> {
        bfs_adj(&self.adjacency(), src)
    }

    /// Induced subgraph on `vertices` (in the given order), rooted at position 0.
    pub fn induced(&self, vertices: &[u32]) -> Graph {
        let mut index = vec![u32::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            index[v as usize] = i as u32;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| index[*a as usize] != u32::MAX && index[*b as usize] != u32::MAX)
            .map(|(a, b)| (index[*a as usize], index[*b as usize]))
            .collect();
        Graph::new(vertices.len(), edges, Root::Vertex(0)).expect("induced subgraph of a simple graph")
    }

    pub fn to_json(&self) -> Value {
        let root = match &self.root {
            Root::None => Value::Null,
            Root::Vertex(r) => json!(r),
            Root::Front(f) => json!(f),
        };
        json!({"n": self.n, "edges": self.edges, "root": root})
    }
}

pub(crate) fn bfs_adj(adj: &[Vec<u32>], src: u32) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    dist[src as usize] = Some(0);
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize].expect("queued");
        for &w in &adj[v as usize] {
            if dist[w as usize].is_none() {
                dist[w as usize] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

pub(crate) fn blocks_of(adj: &[Vec<u32>]) -> Vec<Block> {
    let n = adj.len();
    let mut disc = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut time = 0u32;
    let mut out = Vec::new();
    let mut estack: Vec<(u32, u32)> = Vec::new();
    for s in 0..n {
        if disc[s] != u32::MAX {
            continue;
        }
        if adj[s].is_empty() {
            out.push(Block { vertices: vec![s as u32], edges: Vec::new() });
            disc[s] = time;
            time += 1;
            continue;
        }
        disc[s] = time;
        low[s] = time;
        time += 1;
        let mut stack: Vec<(u32, u32, usize)> = vec![(s as u32, u32::MAX, 0)];
        while let Some(top) = stack.last_mut() {
            let (v, p) = (top.0, top.1);
            if top.2 < adj[v as usize].len() {
                let w = adj[v as usize][top.2];
                top.2 += 1;
                if disc[w as usize] == u32::MAX {
                    estack.push((v, w));
                    disc[w as usize] = time;
                    low[w as usize] = time;
                    time += 1;
                    stack.push((w, v, 0));
                } else if w != p && disc[w as usize] < disc[v as usize] {
                    estack.push((v, w));
                    low[v as usize] = low[v as usize].min(disc[w as usize]);
                }
            } else {
                stack.pop();
                if let Some(&(u, _, _)) = stack.last() {
                    low[u as usize] = low[u as usize].min(low[v as usize]);
                    if low[v as usize] >= disc[u as usize] {
                        let mut edges = Vec::new();
                        let mut verts = BTreeSet::new();
                        while let Some(e) = estack.pop() {
                            verts.insert(e.0);
                            verts.insert(e.1);
                            edges.push((e.0.min(e.1), e.0.max(e.1)));
                            if e == (u, v) {
                                break;
                            }
                        }
                        out.push(Block { vertices: verts.into_iter().collect(), edges });
                    }
                }
            }
        }
    }
    out
}

/// The shipped models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Polya,
    Binary,
    Cacti3,
    Ktree2,
    Ktree3,
    Seq,
}

/// What a tree of a model decodes to.
#[derive(Debug, Clone, PartialEq)]
pub enum Decoding {
    Tree,
    BlockGraph(BlockCatalog),
    KTree(usize),
}

impl Model {
    pub const ALL: [Model; 6] = [Model::Polya, Model::Binary, Model::Cacti3, Model::Ktree2, Model::Ktree3, Model::Seq];

    pub fn name(self) -> &'static str {
        match self {
            Model::Polya => "polya",
            Model::Binary => "binary",
            Model::Cacti3 => "cacti3",
            Model::Ktree2 => "ktree2",
            Model::Ktree3 => "ktree3",
            Model::Seq => "seq",
        }
    }

    pub fn species(self) -> Species {
        match self {
            Model::Polya => Species::polya(),
            Model::Binary => make_polya_model(DegreeWeights::Finite(
                [(0, Weight::one()), (2, Weight::one())].into_iter().collect(),
            ))
            .expect("valid weights"),
            Model::Cacti3 => Species::blocks(BlockCatalog::cacti(3)).expect("valid catalog"),
            Model::Ktree2 => Species::seqk_set(2).expect("k ≥ 1"),
            Model::Ktree3 => Species::seqk_set(3).expect("k ≥ 1"),
            Model::Seq => Species::seq(),
        }
    }

    pub fn decoding(self) -> Decoding {
        decoding_for(&self.species())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ModelError::UnknownModel(s.to_string()))
    }
}

pub fn decoding_for(species: &Species) -> Decoding {
    match species.kind() {
        SpeciesKind::SetDerivedBlocks(cat) => Decoding::BlockGraph(cat.clone()),
        SpeciesKind::SeqKSet { k } => Decoding::KTree(*k),
        _ => Decoding::Tree,
    }
}

/// Pólya trees with probability ∝ Π_v κ_{d⁺(v)}.
pub fn make_polya_model(weights: DegreeWeights) -> Result<Species, SpeciesError> {
    Species::new(SpeciesKind::SetWeighted(weights))
}

/// The tree itself as a graph rooted at vertex 0.
pub fn tree_graph(t: &SymEnrichedTree) -> Graph {
    let p = t.materialize();
    let edges = p.parent.iter().enumerate().filter_map(|(v, q)| q.map(|q| (q as u32, v as u32))).collect();
    Graph::new(p.len(), edges, Root::Vertex(0)).expect("a tree is simple")
}

/// For each atom cycle of a block cycle type, the atom positions it visits.
fn cycle_positions(block: &BlockKind, cycle_type: usize) -> Result<Vec<Vec<usize>>, ModelError> {
    let cycles = &block
        .cycle_types
        .get(cycle_type)
        .ok_or_else(|| ModelError::CatalogMismatch(format!("cycle type {cycle_type} missing")))?
        .cycles;
    let m = block.size;
    if cycles.iter().all(|&c| c == 1) {
        return Ok((0..m).map(|j| vec![j]).collect());
    }
    if block.shape == Some(BlockShape::Polygon) {
        let mut reflection: Vec<u32> = vec![2; m / 2];
        if m % 2 == 1 {
            reflection.push(1);
        }
        if *cycles == reflection {
            let mut out: Vec<Vec<usize>> = (0..m / 2).map(|j| vec![j, m - 1 - j]).collect();
            if m % 2 == 1 {
                out.push(vec![m / 2]);
            }
            return Ok(out);
        }
    }
    Err(ModelError::CatalogMismatch(format!("cycle type {cycles:?} has no vertex layout")))
}

fn block_edges(shape: Option<BlockShape>, v: u32, atoms: &[u32], edges: &mut Vec<(u32, u32)>) -> Result<(), ModelError> {
    match shape {
        Some(BlockShape::Edge) => edges.push((v, atoms[0])),
        Some(BlockShape::Polygon) => {
            edges.push((v, atoms[0]));
            for w in atoms.windows(2) {
                edges.push((w[0], w[1]));
            }
            edges.push((atoms[atoms.len() - 1], v));
        }
        None => return Err(ModelError::CatalogMismatch("block without a drawable shape".into())),
    }
    Ok(())
}

/// Rooted block graph: each SET-of-ℬ′ structure becomes blocks glued at the vertex.
/// Copy q of an atom cycle of length i·c goes to block q mod i at the
/// (q div i)-th position of that cycle.
pub fn decode_block_graph(t: &SymEnrichedTree, catalog: &BlockCatalog) -> Result<Graph, ModelError> {
    let species = Species::blocks(catalog.clone())?;
    let entries = species.entries();
    let n = t.size() as usize;
    let mut edges = Vec::with_capacity(n + n / 2);
    let mut next = 1u32;
    let mut stack: Vec<(NodeId, u32)> = vec![(t.root(), 0)];
    while let Some((id, v)) = stack.pop() {
        let node = t.node(id);
        let parts = match &node.blueprint {
            Blueprint::Parts(p) => p,
            Blueprint::Cut => return Err(ModelError::Trimmed),
            Blueprint::Seq(_) => return Err(ModelError::CatalogMismatch("sequence vertex".into())),
        };
        let mut k = 0;
        for part in parts {
            let entry = entries
                .get(part.entry as usize)
                .ok_or_else(|| ModelError::CatalogMismatch(format!("entry {} out of range", part.entry)))?;
            let EntryLabel::Block { kind, cycle_type } = entry.label else {
                return Err(ModelError::CatalogMismatch("entry is not a block".into()));
            };
            let block = &catalog.blocks[kind as usize];
            let layout = cycle_positions(block, cycle_type as usize)?;
            let i = part.len as usize;
            let mut slots = vec![vec![0u32; block.size]; i];
            for (j, positions) in layout.iter().enumerate() {
                let child = node
                    .children
                    .get(k + j)
                    .ok_or_else(|| ModelError::CatalogMismatch("missing child cycle".into()))?;
                if child.len as usize != i * positions.len() {
                    return Err(ModelError::CatalogMismatch("cycle length does not match the block".into()));
                }
                for q in 0..child.len as usize {
                    let w = next;
                    next += 1;
                    slots[q % i][positions[q / i]] = w;
                    stack.push((child.node, w));
                }
            }
            k += layout.len();
            for s in &slots {
                block_edges(block.shape, v, s, &mut edges)?;
            }
        }
    }
    Ok(Graph::new(n, edges, Root::Vertex(0))?)
}

/// Front-rooted k-tree with |t| hedra on k + |t| vertices. The root front is
/// 0..k; the hedron of a vertex with new vertex x on front F exposes at
/// position p the front F with F[p] replaced by x.
pub fn decode_ktree(t: &SymEnrichedTree, k: usize) -> Result<Graph, ModelError> {
    if k == 0 {
        return Err(ModelError::KMismatch { expected: k, detail: "k must be positive".into() });
    }
    let n = t.size() as usize;
    let mut edges = Vec::with_capacity(k * (k - 1) / 2 + n * k);
    for a in 0..k as u32 {
        for b in a + 1..k as u32 {
            edges.push((a, b));
        }
    }
    let mut next = k as u32;
    let mut stack: Vec<(NodeId, Vec<u32>)> = vec![(t.root(), (0..k as u32).collect())];
    while let Some((id, front)) = stack.pop() {
        let x = next;
        next += 1;
        for &f in &front {
            edges.push((f, x));
        }
        let node = t.node(id);
        let parts = match &node.blueprint {
            Blueprint::Parts(p) => p,
            Blueprint::Cut => return Err(ModelError::Trimmed),
            Blueprint::Seq(_) => {
                return Err(ModelError::KMismatch { expected: k, detail: "sequence vertex".into() })
            }
        };
        if parts.len() != node.children.len() {
            return Err(ModelError::KMismatch { expected: k, detail: "parts and children differ".into() });
        }
        for (part, child) in parts.iter().zip(&node.children) {
            let p = part.entry as usize;
            if p >= k {
                return Err(ModelError::KMismatch { expected: k, detail: format!("position {p}") });
            }
            let mut f = front.clone();
            f[p] = x;
            for _ in 0..child.len {
                stack.push((child.node, f.clone()));
            }
        }
    }
    Ok(Graph::new(k + n, edges, Root::Front((0..k as u32).collect()))?)
}

/// Decodes according to the species kind.
pub fn decode(t: &SymEnrichedTree, decoding: &Decoding) -> Result<Graph, ModelError> {
    match decoding {
        Decoding::Tree => Ok(tree_graph(t)),
        Decoding::BlockGraph(cat) => decode_block_graph(t, cat),
        Decoding::KTree(k) => decode_ktree(t, *k),
    }
}

/// Simplicial elimination: strip degree-k vertices with clique neighbourhoods
/// until K_k remains.
pub fn is_ktree(g: &Graph, k: usize) -> bool {
    let n = g.vertex_count();
    if n < k || !g.is_connected() && n > 1 {
        return false;
    }
    if g.edges().len() != k * (k - 1) / 2 + (n - k) * k {
        return false;
    }
    let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for &(a, b) in g.edges() {
        adj[a as usize].insert(b);
        adj[b as usize].insert(a);
    }
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut queue: Vec<u32> = (0..n as u32).filter(|&v| adj[v as usize].len() == k).collect();
    while remaining > k {
        let Some(v) = queue.pop() else { return false };
        let vi = v as usize;
        if !alive[vi] || adj[vi].len() != k {
            continue;
        }
        let nb: Vec<u32> = adj[vi].iter().copied().collect();
        let clique = nb.iter().enumerate().all(|(i, &a)| nb[i + 1..].iter().all(|b| adj[a as usize].contains(b)));
        if !clique {
            continue;
        }
        alive[vi] = false;
        remaining -= 1;
        for &a in &nb {
            adj[a as usize].remove(&v);
            if adj[a as usize].len() == k {
                queue.push(a);
            }
        }
        adj[vi].clear();
    }
    let rest: Vec<u32> = (0..n as u32).filter(|&v| alive[v as usize]).collect();
    rest.iter().all(|&v| adj[v as usize].len() == k.saturating_sub(1))
}

/// Every block is an edge or a cycle with at most `max_polygon` vertices.
pub fn is_cactus(g: &Graph, max_polygon: usize) -> bool {
    g.is_connected()
        && g.blocks().iter().all(|b| {
            let m = b.vertices.len();
            if m <= 2 {
                return true;
            }
            if m > max_polygon || b.edges.len() != m {
                return false;
            }
            let mut deg = std::collections::HashMap::new();
            for &(a, c) in &b.edges {
                *deg.entry(a).or_insert(0) += 1;
                *deg.entry(c).or_insert(0) += 1;
            }
            deg.values().all(|&d| d == 2)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{ChildCycle, Part, TreeBuilder};

    #[test]
    fn model_names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("tree".parse::<Model>().is_err());
    }

    #[test]
    fn single_vertex_decodes() {
        let leaf = SymEnrichedTree::single_vertex(Blueprint::empty_parts());
        let g = decode_block_graph(&leaf, &BlockCatalog::cacti(3)).unwrap();
        assert_eq!((g.vertex_count(), g.edges().len()), (1, 0));
        let h = decode_ktree(&leaf, 3).unwrap();
        assert_eq!(h.vertex_count(), 4);
        assert_eq!(h.edges().len(), 6);
        assert!(is_ktree(&h, 3));
    }

    #[test]
    fn reflected_triangles_pair_up() {
        // root with a 2-cycle of triangles under the reflection: atom cycle length 4
        let s = Species::blocks(BlockCatalog::cacti(3)).unwrap();
        let entries = s.entries();
        let refl = entries
            .iter()
            .position(|e| e.cycles == vec![2])
            .unwrap();
        let mut b = TreeBuilder::new();
        let r = b.alloc();
        let c = b.alloc();
        b.set(c, Blueprint::empty_parts(), vec![]);
        b.set(r, Blueprint::from_parts(vec![Part { entry: refl as u32, len: 2 }]), vec![ChildCycle { node: c, len: 4 }]);
        let t = b.finish();
        t.validate(&entries).unwrap();
        let g = decode_block_graph(&t, &BlockCatalog::cacti(3)).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert!(is_cactus(&g, 3));
        assert_eq!(g.blocks().len(), 2);
        assert!(g.blocks().iter().all(|b| b.vertices.len() == 3));
    }

    #[test]
    fn blocks_of_two_triangles_and_a_bridge() {
        let g = Graph::new(6, vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)], Root::Vertex(0)).unwrap();
        let mut sizes: Vec<usize> = g.blocks().iter().map(|b| b.vertices.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3, 3]);
        assert!(is_cactus(&g, 3));
        assert!(!is_cactus(&g, 2));
    }

    #[test]
    fn ktree_check_rejects_cycles() {
        let c4 = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)], Root::None).unwrap();
        assert!(!is_ktree(&c4, 2));
        let fan = Graph::new(4, vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], Root::None).unwrap();
        assert!(is_ktree(&fan, 2));
    }

    #[test]
    fn graph_rejects_multi_edges() {
        assert!(matches!(Graph::new(2, vec![(0, 1), (1, 0)], Root::None), Err(GraphError::MultiEdge(0, 1))));
        assert!(matches!(Graph::new(2, vec![(1, 1)], Root::None), Err(GraphError::Loop(1))));
    }
}
