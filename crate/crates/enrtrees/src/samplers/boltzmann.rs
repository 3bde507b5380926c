use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Geometric};

use super::{SamplerError, ATTEMPT_BUDGET, GROWTH_BUDGET};
use crate::powerseries::{
    estimate_rho_from, solve_power_tower, zeta_distribution, CriticalityReport, PowerTower, CRITICALITY_TOLERANCE,
    DEFAULT_DEGREE_CAP,
};
use crate::species::{CycleTypeDistribution, PartEntry, Species, Structure};
use crate::symmetry::{Blueprint, ChildCycle, GObject, GSlot, NodeId, SymEnrichedTree, TreeBuilder};

/// Γ𝒮(x): blueprint tables at x, x², x³, … until Ã_j(x^j) drops below
/// 10⁻¹⁵·Ã(x); beyond that a vertex is a leaf. Level j uses the weights κ^j.
#[derive(Debug, Clone)]
pub struct BoltzmannSampler {
    species: Species,
    entries: Vec<PartEntry>,
    x: f64,
    a_x: f64,
    levels: Vec<CycleTypeDistribution>,
    leaf: Blueprint,
}

impl BoltzmannSampler {
    /// `a_x` overrides the series value at x itself (used at x = ρ, where the
    /// truncated series converges slowly).
    pub fn new(species: &Species, tower: &PowerTower<f64>, x: f64, a_x: f64) -> Result<Self, SamplerError> {
        let value = |j: usize| if j == 1 { a_x } else { tower.value(j, x) };
        let mut levels = Vec::new();
        let mut j = 1;
        while a_x > 0.0 && value(j) >= 1e-15 * a_x && j <= 4096 {
            let mut args = vec![value(j)];
            let mut m = 2;
            while j * m <= 1 << 16 {
                let v = value(j * m);
                if v < 1e-18 * a_x {
                    break;
                }
                args.push(v);
                m += 1;
            }
            let law = if species.is_power_stable() {
                CycleTypeDistribution::from_args(species, &args)?
            } else {
                CycleTypeDistribution::from_args(&species.weight_power(j as u32), &args)?
            };
            levels.push(law);
            j += 1;
        }
        let leaf = match species.structure() {
            Structure::Seq { .. } => Blueprint::Seq(0),
            _ => Blueprint::empty_parts(),
        };
        Ok(BoltzmannSampler { species: species.clone(), entries: species.entries(), x, a_x, levels, leaf })
    }

    pub fn species(&self) -> &Species {
        &self.species
    }

    pub fn entries(&self) -> &[PartEntry] {
        &self.entries
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn a_x(&self) -> f64 {
        self.a_x
    }

    /// Law of β at x^exponent, if tabulated.
    pub fn level(&self, exponent: u64) -> Option<&CycleTypeDistribution> {
        self.levels.get((exponent as usize).wrapping_sub(1))
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub(crate) fn blueprint<R: Rng + ?Sized>(&self, exponent: u64, rng: &mut R) -> Blueprint {
        match self.level(exponent) {
            Some(d) => d.sample(rng),
            None => self.leaf.clone(),
        }
    }

    /// Grows the subtree at `root` with parameter x^exponent. Vertices at
    /// depth `max_depth` stay trimmed. Returns false once more than
    /// `remaining` vertices (copies included) would be produced.
    pub(crate) fn grow_into<R: Rng + ?Sized>(
        &self,
        b: &mut TreeBuilder,
        root: NodeId,
        exponent: u64,
        depth: usize,
        max_depth: Option<usize>,
        remaining: &mut u64,
        rng: &mut R,
    ) -> bool {
        let mut stack = vec![(root, exponent, depth)];
        while let Some((id, e, d)) = stack.pop() {
            if *remaining < e {
                return false;
            }
            *remaining -= e;
            if max_depth.is_some_and(|m| d >= m) {
                continue;
            }
            let bp = self.blueprint(e, rng);
            let cycles = bp.atom_cycles(&self.entries);
            let mut children = Vec::with_capacity(cycles.len());
            for c in cycles {
                let cid = b.alloc();
                children.push(ChildCycle { node: cid, len: c });
                stack.push((cid, e * c as u64, d + 1));
            }
            b.set(id, bp, children);
        }
        true
    }

    /// A tree at x^exponent, optionally trimmed.
    pub fn sample_tree<R: Rng + ?Sized>(
        &self,
        exponent: u64,
        max_depth: Option<usize>,
        rng: &mut R,
    ) -> Result<SymEnrichedTree, SamplerError> {
        let mut b = TreeBuilder::new();
        let root = b.alloc();
        let mut remaining = GROWTH_BUDGET;
        if !self.grow_into(&mut b, root, exponent, 0, max_depth, &mut remaining, rng) {
            return Err(SamplerError::GrowthBudget(GROWTH_BUDGET));
        }
        Ok(b.finish())
    }

    /// Stops as soon as the tree would exceed `max_size` vertices.
    pub fn sample_bounded<R: Rng + ?Sized>(&self, max_size: u64, rng: &mut R) -> Option<SymEnrichedTree> {
        self.sample_bounded_at(1, max_size, rng)
    }

    /// Tree at x^exponent with at most `max_size` vertices, or None.
    pub fn sample_bounded_at<R: Rng + ?Sized>(&self, exponent: u64, max_size: u64, rng: &mut R) -> Option<SymEnrichedTree> {
        let mut b = TreeBuilder::new();
        let root = b.alloc();
        let mut remaining = max_size.saturating_mul(exponent);
        if self.grow_into(&mut b, root, exponent, 0, None, &mut remaining, rng) {
            Some(b.finish())
        } else {
            None
        }
    }
}

/// Γ𝒮(x) for a sampler built at x.
pub fn gamma_s<R: Rng + ?Sized>(sampler: &BoltzmannSampler, rng: &mut R) -> Result<SymEnrichedTree, SamplerError> {
    sampler.sample_tree(1, None, rng)
}

#[derive(Debug, Clone)]
enum HatLaw {
    /// Extra part (entry, fixpoint position) drawn ∝ λ·fix(entry).
    Poisson { alias: WeightedAliasIndex<f64>, choices: Vec<(u32, Vec<usize>)> },
    /// Blueprint drawn ∝ P(β)·fix(β).
    Table { alias: WeightedAliasIndex<f64> },
    /// Size-biased geometric length.
    Geometric(Geometric),
}

/// A G-object together with a distinguished fixpoint slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedG {
    pub g: GObject,
    pub marked: usize,
}

/// Critical Boltzmann sampler at ρ with the G-object laws derived from it.
#[derive(Debug, Clone)]
pub struct CriticalSampler {
    boltz: BoltzmannSampler,
    report: CriticalityReport,
    tower: PowerTower<f64>,
    zeta: Vec<f64>,
    f_cap: u64,
    hat: HatLaw,
}

impl CriticalSampler {
    pub fn new(species: &Species) -> Result<Self, SamplerError> {
        Self::with_cap(species, DEFAULT_DEGREE_CAP)
    }

    pub fn with_cap(species: &Species, cap: usize) -> Result<Self, SamplerError> {
        let tower = solve_power_tower(species, cap)?;
        let report = estimate_rho_from(species, &tower, CRITICALITY_TOLERANCE)?;
        let boltz = BoltzmannSampler::new(species, &tower, report.rho, report.A_rho)?;
        let zeta = zeta_distribution(species, &tower, report.rho, report.A_rho, 256)?;
        let mut tail = 0.0;
        let mut f_cap = 0u64;
        for f in (0..zeta.len()).rev() {
            if tail + zeta[f] >= 1e-12 {
                f_cap = f as u64;
                break;
            }
            tail += zeta[f];
        }
        let hat = Self::hat_law(&boltz)?;
        Ok(CriticalSampler { boltz, report, tower, zeta, f_cap, hat })
    }

    fn hat_law(boltz: &BoltzmannSampler) -> Result<HatLaw, SamplerError> {
        let level = boltz.level(1).ok_or(SamplerError::Unsupported("Ĝ with Ã(ρ) = 0"))?;
        let bad = |e: rand_distr::weighted::Error| SamplerError::Eval(crate::species::EvalError::Unsupported(e.to_string()));
        if let Some(classes) = &level.poisson {
            let mut weights = Vec::new();
            let mut choices = Vec::new();
            for c in classes.iter().filter(|c| c.part.len == 1) {
                let e = &boltz.entries[c.part.entry as usize];
                let pos: Vec<usize> = e.fixpoint_positions().collect();
                if !pos.is_empty() {
                    weights.push(c.mean * pos.len() as f64);
                    choices.push((c.part.entry, pos));
                }
            }
            return Ok(HatLaw::Poisson { alias: WeightedAliasIndex::new(weights).map_err(bad)?, choices });
        }
        if let Some(q) = level.geometric {
            return Ok(HatLaw::Geometric(Geometric::new(1.0 - q).map_err(|e| {
                SamplerError::Eval(crate::species::EvalError::Unsupported(e.to_string()))
            })?));
        }
        let weights: Vec<f64> =
            level.entries.iter().map(|(b, p)| p * b.fixpoints(&boltz.entries) as f64).collect();
        Ok(HatLaw::Table { alias: WeightedAliasIndex::new(weights).map_err(bad)? })
    }

    pub fn boltzmann(&self) -> &BoltzmannSampler {
        &self.boltz
    }

    pub fn report(&self) -> &CriticalityReport {
        &self.report
    }

    pub fn species(&self) -> &Species {
        &self.boltz.species
    }

    pub fn entries(&self) -> &[PartEntry] {
        &self.boltz.entries
    }

    pub fn rho(&self) -> f64 {
        self.report.rho
    }

    pub fn coeffs(&self) -> &[f64] {
        self.tower.base().coeffs()
    }

    pub fn tower(&self) -> &PowerTower<f64> {
        &self.tower
    }

    /// Point probabilities of ζ.
    pub fn zeta_law(&self) -> &[f64] {
        &self.zeta
    }

    /// Envelope bound used for Ḡ.
    pub fn f_cap(&self) -> u64 {
        self.f_cap
    }

    fn fill_slots<R: Rng + ?Sized>(&self, blueprint: Blueprint, rng: &mut R) -> Result<GObject, SamplerError> {
        let cycles = blueprint.atom_cycles(&self.boltz.entries);
        let mut slots = Vec::with_capacity(cycles.len());
        for c in cycles {
            if c == 1 {
                slots.push(GSlot::Fixpoint);
            } else {
                slots.push(GSlot::Fringe { len: c, tree: self.boltz.sample_tree(c as u64, None, rng)? });
            }
        }
        Ok(GObject { blueprint, slots })
    }

    pub(crate) fn hat_blueprint<R: Rng + ?Sized>(&self, rng: &mut R) -> (Blueprint, usize) {
        let entries = &self.boltz.entries;
        match &self.hat {
            HatLaw::Poisson { alias, choices } => {
                let base = self.boltz.blueprint(1, rng);
                let mut parts = match base {
                    Blueprint::Parts(p) => p,
                    _ => unreachable!("Poisson law yields parts"),
                };
                let (entry, pos) = &choices[alias.sample(rng)];
                let j = pos[rng.random_range(0..pos.len())];
                let extra = crate::symmetry::Part { entry: *entry, len: 1 };
                parts.push(extra);
                parts.sort_unstable();
                let first = parts.iter().position(|p| *p == extra).expect("inserted");
                let offset: usize = parts[..first].iter().map(|p| entries[p.entry as usize].cycles.len()).sum();
                (Blueprint::Parts(parts), offset + j)
            }
            HatLaw::Table { alias } => {
                let level = self.boltz.level(1).expect("tabulated");
                let b = level.entries[alias.sample(rng)].0.clone();
                let fixed: Vec<usize> =
                    b.atom_cycles(entries).iter().enumerate().filter(|(_, &c)| c == 1).map(|(i, _)| i).collect();
                let m = fixed[rng.random_range(0..fixed.len())];
                (b, m)
            }
            HatLaw::Geometric(g) => {
                let j = 1 + g.sample(rng) + g.sample(rng);
                let m = rng.random_range(0..j) as usize;
                (Blueprint::Seq(j as u32), m)
            }
        }
    }
}

/// Root G-object of Γ𝒮(ρ).
pub fn draw_g<R: Rng + ?Sized>(ctx: &CriticalSampler, rng: &mut R) -> Result<GObject, SamplerError> {
    let b = ctx.boltz.blueprint(1, rng);
    ctx.fill_slots(b, rng)
}

/// Ĝ: fixpoint-size-biased G with a uniformly marked fixpoint.
pub fn draw_g_hat<R: Rng + ?Sized>(ctx: &CriticalSampler, rng: &mut R) -> Result<MarkedG, SamplerError> {
    let (b, marked) = ctx.hat_blueprint(rng);
    Ok(MarkedG { g: ctx.fill_slots(b, rng)?, marked })
}

/// Ḡ: G biased by 1+|F|, by rejection from G with acceptance
/// (1+|F|)/(1+F_cap).
pub fn draw_g_bar<R: Rng + ?Sized>(ctx: &CriticalSampler, rng: &mut R) -> Result<GObject, SamplerError> {
    let envelope = 1.0 + ctx.f_cap as f64;
    for _ in 0..ATTEMPT_BUDGET {
        let g = draw_g(ctx, rng)?;
        let w = 1.0 + g.forest_size() as f64;
        if w >= envelope || rng.random::<f64>() * envelope < w {
            return Ok(g);
        }
    }
    Err(SamplerError::AttemptBudget(ATTEMPT_BUDGET))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RngStream;

    #[test]
    fn seq_level_is_geometric_half() {
        let ctx = CriticalSampler::new(&Species::seq()).unwrap();
        let level = ctx.boltzmann().level(1).unwrap();
        assert!((level.geometric.unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(ctx.f_cap(), 0);
    }

    #[test]
    fn hat_marks_a_fixpoint() {
        let ctx = CriticalSampler::new(&Species::blocks(crate::species::BlockCatalog::cacti(3)).unwrap()).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..200 {
            let m = draw_g_hat(&ctx, &mut rng).unwrap();
            assert_eq!(m.g.slots[m.marked], GSlot::Fixpoint);
        }
    }
}
