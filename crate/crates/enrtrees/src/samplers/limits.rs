use rand::Rng;

use super::{draw_g_bar, CriticalSampler, SamplerError, GROWTH_BUDGET};
use crate::symmetry::{ChildCycle, GSlot, NodeId, SymEnrichedTree, TreeBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// 𝒯^(∞): spine grows down from the root.
    TInf,
    /// Ĥ: spine grows backwards, Ḡ at its bottom.
    HHat,
}

impl std::str::FromStr for LimitKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tinf" => Ok(LimitKind::TInf),
            "hhat" => Ok(LimitKind::HHat),
            other => Err(format!("unknown limit {other:?}")),
        }
    }
}

/// Γ𝒮^(ℓ): tree with the outer root at the end of a spine of length ℓ.
#[derive(Debug, Clone)]
pub struct PointedSample {
    pub tree: SymEnrichedTree,
    /// Spine from the root down to the outer root.
    pub spine: Vec<NodeId>,
}

impl PointedSample {
    pub fn outer_root(&self) -> NodeId {
        *self.spine.last().expect("spine has the root")
    }
}

/// A trimmed limit tree with its spine (root first) and, for Ĥ, the marked
/// point u* as (representative, depth below u₀).
#[derive(Debug, Clone)]
pub struct LimitSample {
    pub tree: SymEnrichedTree,
    pub spine: Vec<NodeId>,
    pub marked: Option<(NodeId, usize)>,
}

/// Builds ℓ spine levels from Ĝ; off-spine slots are filled by `fill`.
fn build_spine<R: Rng + ?Sized>(
    ctx: &CriticalSampler,
    b: &mut TreeBuilder,
    levels: usize,
    max_depth: Option<usize>,
    rng: &mut R,
) -> Result<Vec<NodeId>, SamplerError> {
    let boltz = ctx.boltzmann();
    let entries = ctx.entries();
    let mut spine = vec![b.alloc()];
    let mut remaining = GROWTH_BUDGET;
    for h in 0..levels {
        let id = *spine.last().expect("nonempty");
        let (bp, marked) = ctx.hat_blueprint(rng);
        let cycles = bp.atom_cycles(entries);
        let mut children = Vec::with_capacity(cycles.len());
        let mut next = None;
        for (slot, &c) in cycles.iter().enumerate() {
            let cid = b.alloc();
            children.push(ChildCycle { node: cid, len: c });
            if slot == marked {
                next = Some(cid);
            } else if !boltz.grow_into(b, cid, c as u64, h + 1, max_depth, &mut remaining, rng) {
                return Err(SamplerError::GrowthBudget(GROWTH_BUDGET));
            }
        }
        b.set(id, bp, children);
        spine.push(next.expect("Ĝ marks a slot"));
    }
    Ok(spine)
}

/// Spine of length ℓ from the derived-species law, off-spine subtrees from Γ𝒮(ρ^i).
pub fn gamma_s_pointed<R: Rng + ?Sized>(ctx: &CriticalSampler, ell: usize, rng: &mut R) -> Result<PointedSample, SamplerError> {
    let mut b = TreeBuilder::new();
    let spine = build_spine(ctx, &mut b, ell, None, rng)?;
    let outer = *spine.last().expect("nonempty");
    let mut remaining = GROWTH_BUDGET;
    if !ctx.boltzmann().grow_into(&mut b, outer, 1, ell, None, &mut remaining, rng) {
        return Err(SamplerError::GrowthBudget(GROWTH_BUDGET));
    }
    Ok(PointedSample { tree: b.finish(), spine })
}

/// Uniform vertex of a subtree given by representative sizes: returns the
/// representative reached and its depth below `root`.
fn uniform_vertex<R: Rng + ?Sized>(t: &SymEnrichedTree, root: NodeId, rng: &mut R) -> (NodeId, usize) {
    let mut v = root;
    let mut depth = 0;
    loop {
        let size = t.subtree_size(v);
        let mut r = rng.random_range(0..size);
        if r == 0 {
            return (v, depth);
        }
        r -= 1;
        let mut chosen = None;
        for c in &t.node(v).children {
            let w = c.len as u64 * t.subtree_size(c.node);
            if r < w {
                chosen = Some(c.node);
                break;
            }
            r -= w;
        }
        v = chosen.expect("sizes add up");
        depth += 1;
    }
}

/// Trimmed 𝒯^(∞) (height k) or Ĥ_k (spine of length k, normal subtrees
/// trimmed at height 2k, the fringe of u₀ complete).
pub fn sample_limit_trimmed<R: Rng + ?Sized>(
    ctx: &CriticalSampler,
    k: usize,
    which: LimitKind,
    rng: &mut R,
) -> Result<LimitSample, SamplerError> {
    let mut b = TreeBuilder::new();
    match which {
        LimitKind::TInf => {
            let spine = build_spine(ctx, &mut b, k, Some(k), rng)?;
            Ok(LimitSample { tree: b.finish(), spine, marked: None })
        }
        LimitKind::HHat => {
            let cap = Some(2 * k.max(1));
            let spine = build_spine(ctx, &mut b, k, cap, rng)?;
            let u0 = *spine.last().expect("nonempty");
            let g = draw_g_bar(ctx, rng)?;
            let mut children = Vec::with_capacity(g.slots.len());
            let mut remaining = GROWTH_BUDGET;
            let mut fringe = Vec::new();
            for slot in &g.slots {
                match slot {
                    GSlot::Fixpoint => {
                        let cid = b.alloc();
                        if !ctx.boltzmann().grow_into(&mut b, cid, 1, k + 1, cap, &mut remaining, rng) {
                            return Err(SamplerError::GrowthBudget(GROWTH_BUDGET));
                        }
                        children.push(ChildCycle { node: cid, len: 1 });
                    }
                    GSlot::Fringe { len, tree } => {
                        let cid = b.graft(tree);
                        children.push(ChildCycle { node: cid, len: *len });
                        fringe.push((cid, *len));
                    }
                }
            }
            b.set(u0, g.blueprint.clone(), children);
            let tree = b.finish();
            let total: u64 = 1 + fringe.iter().map(|&(c, l)| l as u64 * tree.subtree_size(c)).sum::<u64>();
            let mut r = rng.random_range(0..total);
            let marked = if r == 0 {
                (u0, 0)
            } else {
                r -= 1;
                let mut hit = None;
                for &(c, l) in &fringe {
                    let w = l as u64 * tree.subtree_size(c);
                    if r < w {
                        hit = Some(c);
                        break;
                    }
                    r -= w;
                }
                let (v, d) = uniform_vertex(&tree, hit.expect("sizes add up"), rng);
                (v, d + 1)
            };
            Ok(LimitSample { tree, spine, marked: Some(marked) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RngStream;
    use crate::species::Species;

    #[test]
    fn spine_vertices_are_fixpoints() {
        let ctx = CriticalSampler::new(&Species::polya()).unwrap();
        let mut rng = RngStream::new(5, 0).rng();
        for ell in 0..6 {
            let p = gamma_s_pointed(&ctx, ell, &mut rng).unwrap();
            assert_eq!(p.spine.len(), ell + 1);
            let fix = p.tree.fixpoint_nodes();
            assert!(p.spine.iter().all(|s| fix.contains(s)));
            p.tree.validate(ctx.entries()).unwrap();
        }
    }

    #[test]
    fn trimmed_limit_has_height_k() {
        let ctx = CriticalSampler::new(&Species::polya()).unwrap();
        let mut rng = RngStream::new(5, 1).rng();
        for k in 0..4 {
            let s = sample_limit_trimmed(&ctx, k, LimitKind::TInf, &mut rng).unwrap();
            assert_eq!(s.tree.height(), k);
            let h = sample_limit_trimmed(&ctx, k, LimitKind::HHat, &mut rng).unwrap();
            assert_eq!(h.spine.len(), k + 1);
            assert!(h.marked.is_some());
        }
    }
}
