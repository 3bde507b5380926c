//! Sym(R)-enriched plane trees: representative-per-cycle storage, G-objects,
//! fixpoint trees and symmetry composition.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::species::PartEntry;

pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("node {node}: blueprint expects {expected} atom cycles, found {found}")]
    CycleCountMismatch { node: NodeId, expected: usize, found: usize },
    #[error("node {node}: atom cycle {index} has length {found}, blueprint says {expected}")]
    CycleLengthMismatch { node: NodeId, index: usize, expected: u32, found: u32 },
    #[error("Łukasiewicz condition fails at prefix {index}")]
    Lukasiewicz { index: usize },
    #[error("fixpoint counts sum to {sum}, expected {expected}")]
    FixpointSum { sum: usize, expected: usize },
    #[error("node {0} is trimmed")]
    Trimmed(NodeId),
}

/// A set-cycle of length `len` carrying one structure of entry `entry`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Part {
    pub entry: u32,
    pub len: u32,
}

/// Cycle type of a local symmetry, enough to rebuild its atom cycles.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Blueprint {
    /// Multiset of parts, sorted.
    Parts(Vec<Part>),
    /// A sequence of this length: the identity on its atoms.
    Seq(u32),
    /// Vertex below the trimming height: structure not recorded.
    Cut,
}

impl Blueprint {
    pub fn empty_parts() -> Self {
        Blueprint::Parts(Vec::new())
    }

    pub fn from_parts(mut parts: Vec<Part>) -> Self {
        parts.sort_unstable();
        Blueprint::Parts(parts)
    }

    /// Atom-cycle lengths in child order.
    pub fn atom_cycles(&self, entries: &[PartEntry]) -> Vec<u32> {
        match self {
            Blueprint::Parts(parts) => parts
                .iter()
                .flat_map(|p| entries[p.entry as usize].cycles.iter().map(move |&c| c * p.len))
                .collect(),
            Blueprint::Seq(n) => vec![1; *n as usize],
            Blueprint::Cut => Vec::new(),
        }
    }

    /// Number of atoms, i.e. the outdegree of the vertex.
    pub fn size(&self, entries: &[PartEntry]) -> usize {
        self.atom_cycles(entries).iter().map(|&c| c as usize).sum()
    }

    pub fn fixpoints(&self, entries: &[PartEntry]) -> usize {
        self.atom_cycles(entries).iter().filter(|&&c| c == 1).count()
    }

    pub fn to_json(&self) -> Value {
        match self {
            Blueprint::Parts(p) => json!({"parts": p.iter().map(|x| [x.entry, x.len]).collect::<Vec<_>>()}),
            Blueprint::Seq(n) => json!({"seq": n}),
            Blueprint::Cut => json!("cut"),
        }
    }
}

/// Child slot: one representative subtree standing for `len` identical copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChildCycle {
    pub node: NodeId,
    pub len: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymNode {
    pub blueprint: Blueprint,
    pub children: Vec<ChildCycle>,
}

/// Arena of representative vertices. Node 0 is the root and every child id
/// exceeds its parent id.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEnrichedTree {
    nodes: Vec<SymNode>,
    sizes: Vec<u64>,
}

/// Top-down construction of a [`SymEnrichedTree`].
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<SymNode>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder { nodes: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        TreeBuilder { nodes: Vec::with_capacity(n) }
    }

    /// Reserves a node; it stays `Cut` until [`TreeBuilder::set`].
    pub fn alloc(&mut self) -> NodeId {
        self.nodes.push(SymNode { blueprint: Blueprint::Cut, children: Vec::new() });
        (self.nodes.len() - 1) as NodeId
    }

    pub fn set(&mut self, id: NodeId, blueprint: Blueprint, children: Vec<ChildCycle>) {
        let n = &mut self.nodes[id as usize];
        n.blueprint = blueprint;
        n.children = children;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Copies `tree` below the current nodes and returns the id of its root.
    pub fn graft(&mut self, tree: &SymEnrichedTree) -> NodeId {
        let offset = self.nodes.len() as NodeId;
        for n in &tree.nodes {
            self.nodes.push(SymNode {
                blueprint: n.blueprint.clone(),
                children: n.children.iter().map(|c| ChildCycle { node: c.node + offset, len: c.len }).collect(),
            });
        }
        offset
    }

    pub fn finish(self) -> SymEnrichedTree {
        SymEnrichedTree::from_nodes(self.nodes)
    }
}

/// A plane tree with explicit copies; vertex 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneTree {
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Representative node of each vertex.
    pub rep: Vec<NodeId>,
}

impl PlaneTree {
    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.len()];
        for v in 0..self.len() {
            for &c in &self.children[v] {
                d[c] = d[v] + 1;
            }
        }
        d
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Graph diameter by two sweeps (exact on trees).
    pub fn diameter(&self) -> usize {
        let far = |s: usize| -> (usize, usize) {
            let n = self.len();
            let mut dist = vec![usize::MAX; n];
            let mut q = std::collections::VecDeque::new();
            dist[s] = 0;
            q.push_back(s);
            let mut best = (s, 0);
            while let Some(v) = q.pop_front() {
                if dist[v] > best.1 {
                    best = (v, dist[v]);
                }
                let nb = self.children[v].iter().copied().chain(self.parent[v]);
                for w in nb {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            best
        };
        let (a, _) = far(0);
        far(a).1
    }
}

impl SymEnrichedTree {
    fn from_nodes(nodes: Vec<SymNode>) -> Self {
        let mut sizes = vec![1u64; nodes.len()];
        for id in (0..nodes.len()).rev() {
            let mut s = 1u64;
            for c in &nodes[id].children {
                debug_assert!(c.node as usize > id);
                s += c.len as u64 * sizes[c.node as usize];
            }
            sizes[id] = s;
        }
        SymEnrichedTree { nodes, sizes }
    }

    pub fn single_vertex(blueprint: Blueprint) -> Self {
        Self::from_nodes(vec![SymNode { blueprint, children: Vec::new() }])
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &SymNode {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[SymNode] {
        &self.nodes
    }

    /// Number of stored representatives.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Vertex count with all copies.
    pub fn size(&self) -> u64 {
        self.sizes[0]
    }

    pub fn subtree_size(&self, id: NodeId) -> u64 {
        self.sizes[id as usize]
    }

    /// Depth of each representative.
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.nodes.len()];
        for id in 0..self.nodes.len() {
            for c in &self.nodes[id].children {
                d[c.node as usize] = d[id] + 1;
            }
        }
        d
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Representatives that are fixpoints of the encoded automorphism.
    pub fn fixpoint_nodes(&self) -> Vec<NodeId> {
        let mut out = vec![0];
        let mut i = 0;
        while i < out.len() {
            let v = out[i];
            for c in &self.nodes[v as usize].children {
                if c.len == 1 {
                    out.push(c.node);
                }
            }
            i += 1;
        }
        out
    }

    /// |𝒯^f|.
    pub fn fixpoint_count(&self) -> u64 {
        self.fixpoint_nodes().len() as u64
    }

    pub fn is_trimmed(&self) -> bool {
        self.nodes.iter().any(|n| n.blueprint == Blueprint::Cut)
    }

    /// Checks children against blueprints.
    pub fn validate(&self, entries: &[PartEntry]) -> Result<(), SymmetryError> {
        for (id, n) in self.nodes.iter().enumerate() {
            if n.blueprint == Blueprint::Cut {
                if !n.children.is_empty() {
                    return Err(SymmetryError::Trimmed(id as NodeId));
                }
                continue;
            }
            let cycles = n.blueprint.atom_cycles(entries);
            if cycles.len() != n.children.len() {
                return Err(SymmetryError::CycleCountMismatch {
                    node: id as NodeId,
                    expected: cycles.len(),
                    found: n.children.len(),
                });
            }
            for (i, (c, ch)) in cycles.iter().zip(&n.children).enumerate() {
                if *c != ch.len {
                    return Err(SymmetryError::CycleLengthMismatch {
                        node: id as NodeId,
                        index: i,
                        expected: *c,
                        found: ch.len,
                    });
                }
            }
        }
        Ok(())
    }

    /// Explicit plane tree, copies of a cycle placed consecutively.
    pub fn materialize(&self) -> PlaneTree {
        let n = self.size() as usize;
        let mut parent = Vec::with_capacity(n);
        let mut children: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut rep = Vec::with_capacity(n);
        parent.push(None);
        children.push(Vec::new());
        rep.push(0);
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            let node = &self.nodes[rep[v] as usize];
            for c in &node.children {
                for _ in 0..c.len {
                    let w = children.len();
                    parent.push(Some(v));
                    children.push(Vec::new());
                    rep.push(c.node);
                    children[v].push(w);
                    stack.push(w);
                }
            }
        }
        PlaneTree { parent, children, rep }
    }

    /// Copy of the subtree rooted at `id`.
    pub fn subtree(&self, id: NodeId) -> SymEnrichedTree {
        let mut map = vec![u32::MAX; self.nodes.len()];
        let mut order = vec![id];
        map[id as usize] = 0;
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for c in &self.nodes[v as usize].children {
                if map[c.node as usize] == u32::MAX {
                    map[c.node as usize] = order.len() as u32;
                    order.push(c.node);
                }
            }
            i += 1;
        }
        let nodes = order
            .iter()
            .map(|&v| {
                let n = &self.nodes[v as usize];
                SymNode {
                    blueprint: n.blueprint.clone(),
                    children: n.children.iter().map(|c| ChildCycle { node: map[c.node as usize], len: c.len }).collect(),
                }
            })
            .collect();
        SymEnrichedTree::from_nodes(nodes)
    }

    /// Trimming at height k: representatives at depth k lose their blueprint
    /// and everything below them.
    pub fn trimmed(&self, k: usize) -> SymEnrichedTree {
        let depths = self.depths();
        let mut map = vec![u32::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        map[0] = 0;
        nodes.push(self.nodes[0].clone());
        let mut i = 0;
        let mut old = vec![0u32];
        while i < old.len() {
            let v = old[i] as usize;
            if depths[v] >= k {
                nodes[i] = SymNode { blueprint: Blueprint::Cut, children: Vec::new() };
            } else {
                let mut ch = Vec::new();
                for c in &self.nodes[v].children {
                    map[c.node as usize] = old.len() as u32;
                    old.push(c.node);
                    nodes.push(self.nodes[c.node as usize].clone());
                    ch.push(ChildCycle { node: map[c.node as usize], len: c.len });
                }
                nodes[i].children = ch;
            }
            i += 1;
        }
        SymEnrichedTree::from_nodes(nodes)
    }

    /// Cycle type of the full automorphism, length → count.
    pub fn cycle_type(&self) -> BTreeMap<u64, u64> {
        let mut types: Vec<BTreeMap<u64, u64>> = vec![BTreeMap::new(); self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let mut t = BTreeMap::new();
            t.insert(1u64, 1u64);
            for c in &self.nodes[id].children {
                for (len, cnt) in compose_cycle_type(c.len as u64, &types[c.node as usize]) {
                    *t.entry(len).or_insert(0) += cnt;
                }
            }
            types[id] = t;
        }
        types.swap_remove(0)
    }

    /// Code identifying the symmetry class: parts are unordered, SEQ children ordered.
    pub fn sym_code(&self, entries: &[PartEntry]) -> String {
        let mut codes = vec![String::new(); self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let n = &self.nodes[id];
            let code = match &n.blueprint {
                Blueprint::Cut => "*".to_string(),
                Blueprint::Seq(_) => {
                    let inner: Vec<&str> = n.children.iter().map(|c| codes[c.node as usize].as_str()).collect();
                    format!("S({})", inner.join(","))
                }
                Blueprint::Parts(parts) => {
                    let mut groups = Vec::with_capacity(parts.len());
                    let mut k = 0;
                    for p in parts {
                        let w = entries[p.entry as usize].cycles.len();
                        let inner: Vec<String> = n.children[k..k + w]
                            .iter()
                            .map(|c| format!("{}:{}", c.len, codes[c.node as usize]))
                            .collect();
                        k += w;
                        groups.push(format!("{}.{}[{}]", p.entry, p.len, inner.join(",")));
                    }
                    groups.sort();
                    format!("P({})", groups.join(","))
                }
            };
            codes[id] = code;
        }
        codes.swap_remove(0)
    }

    /// Code of the underlying tree shape, optionally cut below `max_depth`.
    /// Unordered codes sort sibling codes; plane codes keep child order.
    pub fn shape_code(&self, ordered: bool, max_depth: Option<usize>) -> String {
        let depths = self.depths();
        let mut codes = vec![String::new(); self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let n = &self.nodes[id];
            if max_depth.map(|m| depths[id] >= m).unwrap_or(false) {
                codes[id] = "()".into();
                continue;
            }
            let mut kids: Vec<&str> = Vec::new();
            for c in &n.children {
                for _ in 0..c.len {
                    kids.push(codes[c.node as usize].as_str());
                }
            }
            if !ordered {
                kids.sort_unstable();
            }
            let mut s = String::with_capacity(2 + kids.iter().map(|k| k.len()).sum::<usize>());
            s.push('(');
            for k in kids {
                s.push_str(k);
            }
            s.push(')');
            codes[id] = s;
        }
        codes.swap_remove(0)
    }

    pub fn to_json(&self) -> Value {
        fn rec(t: &SymEnrichedTree, id: NodeId) -> Value {
            let n = t.node(id);
            json!({
                "b": n.blueprint.to_json(),
                "c": n.children.iter().map(|c| json!([c.len, rec(t, c.node)])).collect::<Vec<_>>(),
            })
        }
        rec(self, 0)
    }
}

/// Each inner k-cycle under an outer ℓ-cycle becomes a kℓ-cycle.
pub fn compose_symmetries(outer_cycle_len: u64, inner_cycle_lens: &[u64]) -> Vec<u64> {
    assert!(outer_cycle_len >= 1);
    inner_cycle_lens.iter().map(|k| k * outer_cycle_len).collect()
}

pub fn compose_cycle_type(outer: u64, inner: &BTreeMap<u64, u64>) -> BTreeMap<u64, u64> {
    inner.iter().map(|(&len, &cnt)| (len * outer, cnt)).collect()
}

pub fn reconstruct_automorphism(t: &SymEnrichedTree) -> BTreeMap<u64, u64> {
    t.cycle_type()
}

/// What sits in an atom cycle of a G-object.
#[derive(Debug, Clone, PartialEq)]
pub enum GSlot {
    Fixpoint,
    Fringe { len: u32, tree: SymEnrichedTree },
}

/// (β(v), f(v), F(v)): local symmetry, fixpoint slots and fringe forest.
#[derive(Debug, Clone, PartialEq)]
pub struct GObject {
    pub blueprint: Blueprint,
    pub slots: Vec<GSlot>,
}

impl GObject {
    pub fn fixpoint_count(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, GSlot::Fixpoint)).count()
    }

    /// |F(v)| with copies.
    pub fn forest_size(&self) -> u64 {
        self.slots
            .iter()
            .map(|s| match s {
                GSlot::Fixpoint => 0,
                GSlot::Fringe { len, tree } => *len as u64 * tree.size(),
            })
            .sum()
    }
}

/// The fixpoint skeleton with a G-object per fixpoint, listed in DFS order.
#[derive(Debug, Clone, PartialEq)]
pub struct FixpointTree {
    pub objects: Vec<GObject>,
    pub children: Vec<Vec<usize>>,
}

impl FixpointTree {
    /// Σ_v (1 + |F(v)|).
    pub fn total_size(&self) -> u64 {
        self.objects.iter().map(|g| 1 + g.forest_size()).sum()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

pub fn to_fixpoint_tree(t: &SymEnrichedTree) -> FixpointTree {
    let mut objects = Vec::new();
    let mut children: Vec<Vec<usize>> = Vec::new();
    // (representative, index of parent in DFS order)
    let mut stack: Vec<(NodeId, Option<usize>)> = vec![(0, None)];
    while let Some((v, parent)) = stack.pop() {
        let idx = objects.len();
        if let Some(p) = parent {
            children[p].push(idx);
        }
        children.push(Vec::new());
        let node = t.node(v);
        let mut slots = Vec::with_capacity(node.children.len());
        let mut fix = Vec::new();
        for c in &node.children {
            if c.len == 1 {
                slots.push(GSlot::Fixpoint);
                fix.push(c.node);
            } else {
                slots.push(GSlot::Fringe { len: c.len, tree: t.subtree(c.node) });
            }
        }
        objects.push(GObject { blueprint: node.blueprint.clone(), slots });
        for &f in fix.iter().rev() {
            stack.push((f, Some(idx)));
        }
    }
    FixpointTree { objects, children }
}

/// Checks Σ|f_i| = ℓ−1 and Σ_{i≤m}|f_i| ≥ m for m < ℓ.
pub fn check_lukasiewicz(fix: &[usize]) -> Result<(), SymmetryError> {
    let l = fix.len();
    let sum: usize = fix.iter().sum();
    if l == 0 || sum != l - 1 {
        return Err(SymmetryError::FixpointSum { sum, expected: l.saturating_sub(1) });
    }
    let mut acc = 0usize;
    for (m, f) in fix.iter().enumerate().take(l - 1) {
        acc += f;
        if acc < m + 1 {
            return Err(SymmetryError::Lukasiewicz { index: m + 1 });
        }
    }
    Ok(())
}

pub fn from_g_sequence(gs: &[GObject]) -> Result<SymEnrichedTree, SymmetryError> {
    let fix: Vec<usize> = gs.iter().map(|g| g.fixpoint_count()).collect();
    check_lukasiewicz(&fix)?;
    let mut b = TreeBuilder::new();
    let root = b.alloc();
    let mut pending = vec![root];
    for g in gs {
        let id = pending.pop().expect("Łukasiewicz condition keeps the stack nonempty");
        let mut children = Vec::with_capacity(g.slots.len());
        let mut fixed = Vec::new();
        for s in &g.slots {
            match s {
                GSlot::Fixpoint => {
                    let c = b.alloc();
                    fixed.push(c);
                    children.push(ChildCycle { node: c, len: 1 });
                }
                GSlot::Fringe { len, tree } => {
                    let c = b.graft(tree);
                    children.push(ChildCycle { node: c, len: *len });
                }
            }
        }
        b.set(id, g.blueprint.clone(), children);
        pending.extend(fixed.into_iter().rev());
    }
    Ok(b.finish())
}

/// Cyclic shifts of `steps` (entries ≥ −1, sum −r) whose proper prefix sums
/// all exceed −r.
pub fn valid_rotations(steps: &[i64]) -> Vec<usize> {
    let l = steps.len();
    let total: i64 = steps.iter().sum();
    let mut out = Vec::new();
    for j in 0..l {
        let mut acc = 0i64;
        let mut ok = true;
        for m in 0..l.saturating_sub(1) {
            acc += steps[(j + m) % l];
            if acc <= total {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(j);
        }
    }
    out
}

/// The unique shift turning fixpoint counts with Σ = ℓ−1 into a valid DFS
/// sequence: the first position where the prefix walk attains its minimum.
pub fn valid_rotation(fix: &[usize]) -> Result<usize, SymmetryError> {
    let l = fix.len();
    let sum: usize = fix.iter().sum();
    if l == 0 || sum != l - 1 {
        return Err(SymmetryError::FixpointSum { sum, expected: l.saturating_sub(1) });
    }
    let mut walk = 0i64;
    let mut best = (0i64, 0usize);
    for (m, f) in fix.iter().enumerate() {
        walk += *f as i64 - 1;
        if walk < best.0 {
            best = (walk, m + 1);
        }
    }
    Ok(best.1 % l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::{EntryLabel, Weight};

    fn atom() -> Vec<PartEntry> {
        vec![PartEntry { cycles: vec![1], weight: Weight::one(), label: EntryLabel::Atom }]
    }

    fn leaf() -> SymEnrichedTree {
        SymEnrichedTree::single_vertex(Blueprint::empty_parts())
    }

    fn cherry_swap() -> SymEnrichedTree {
        let mut b = TreeBuilder::new();
        let r = b.alloc();
        let c = b.alloc();
        b.set(c, Blueprint::empty_parts(), vec![]);
        b.set(r, Blueprint::from_parts(vec![Part { entry: 0, len: 2 }]), vec![ChildCycle { node: c, len: 2 }]);
        b.finish()
    }

    #[test]
    fn composition_examples() {
        assert_eq!(compose_symmetries(2, &[3]), vec![6]);
        assert_eq!(compose_symmetries(1, &[1, 1, 2]), vec![1, 1, 2]);
        assert_eq!(compose_symmetries(3, &[1]), vec![3]);
    }

    #[test]
    fn automorphism_cycle_types() {
        assert_eq!(leaf().cycle_type(), BTreeMap::from([(1, 1)]));
        let t = cherry_swap();
        assert_eq!(t.cycle_type(), BTreeMap::from([(1, 1), (2, 1)]));
        assert_eq!(t.size(), 3);
        assert_eq!(t.fixpoint_count(), 1);
        t.validate(&atom()).unwrap();
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(valid_rotation(&[0]).unwrap(), 0);
        assert_eq!(valid_rotation(&[0, 2, 0]).unwrap(), 1);
        let brute: Vec<usize> = (0..3)
            .filter(|&j| {
                let rot: Vec<usize> = (0..3).map(|m| [0, 2, 0][(j + m) % 3]).collect();
                check_lukasiewicz(&rot).is_ok()
            })
            .collect();
        assert_eq!(brute, vec![1]);
        assert_eq!(valid_rotations(&[-1, 1, -1]), vec![1]);
    }

    #[test]
    fn bad_sequence() {
        let g = GObject { blueprint: Blueprint::empty_parts(), slots: vec![] };
        assert!(matches!(from_g_sequence(&[g.clone(), g]), Err(SymmetryError::FixpointSum { .. })));
    }

    #[test]
    fn single_g_object() {
        let g = GObject { blueprint: Blueprint::empty_parts(), slots: vec![] };
        let t = from_g_sequence(&[g]).unwrap();
        assert_eq!(t, leaf());
        let ft = to_fixpoint_tree(&t);
        assert_eq!(ft.len(), 1);
    }

    #[test]
    fn trimming_and_codes() {
        let t = cherry_swap();
        assert_eq!(t.shape_code(false, None), "(()())");
        assert_eq!(t.trimmed(1).shape_code(false, None), "(()())");
        assert_eq!(t.trimmed(0).size(), 1);
        assert!(t.trimmed(1).is_trimmed());
        assert_eq!(t.materialize().len(), 3);
        assert_eq!(t.materialize().diameter(), 2);
    }
}
