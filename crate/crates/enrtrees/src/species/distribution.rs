use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Geometric, Poisson};

use super::{cycle_types, inverse_centralizer, EvalError, PartEntry, Species, Structure};
use crate::powerseries::{ratio_to_f64, PowerTower};
use crate::symmetry::{Blueprint, Part};

/// A part class (i, e) whose multiplicity is Poisson with this mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonClass {
    pub part: Part,
    pub mean: f64,
}

#[derive(Debug, Clone)]
enum Sampler {
    Poisson { total: f64, alias: WeightedAliasIndex<f64>, poisson: Option<Poisson<f64>> },
    Table { alias: WeightedAliasIndex<f64> },
    Geometric { law: Geometric },
}

/// Law of the local cycle type β at a vertex:
/// `P(β) ∝ κ·Π_j Ã(x^j)^{c_j(β)}/z_β`, normalised by `Z_R(Ã(x), Ã(x²), …)`.
#[derive(Debug, Clone)]
pub struct CycleTypeDistribution {
    /// `Z_R` at the arguments.
    pub normalizer: f64,
    /// Enumerated blueprints with probabilities (empty for Poisson and
    /// geometric laws unless [`CycleTypeDistribution::enumerate`] is called).
    pub entries: Vec<(Blueprint, f64)>,
    /// Mass not covered by `entries`.
    pub tail_mass: f64,
    /// Independent Poisson classes when Z is an exponential.
    pub poisson: Option<Vec<PoissonClass>>,
    /// Ratio q when β is a SEQ length with `P(j) = (1−q)qʲ`.
    pub geometric: Option<f64>,
    sampler: Sampler,
}

/// Law of β at parameter x from the truncated series `Ã_j`.
pub fn symmetry_distribution(
    species: &Species,
    x: f64,
    tower: &PowerTower<f64>,
) -> Result<CycleTypeDistribution, EvalError> {
    let a_x = tower.value(1, x);
    let mut args = vec![a_x];
    let len = 64 * species.max_cycle_len();
    for j in 2..=len {
        let v = tower.value(j, x);
        if v < 1e-18 * a_x {
            break;
        }
        args.push(v);
    }
    CycleTypeDistribution::from_args(species, &args)
}

impl CycleTypeDistribution {
    /// `args[j−1] = Ã_j(x^j)`; arguments beyond the list count as zero.
    pub fn from_args(species: &Species, args: &[f64]) -> Result<Self, EvalError> {
        match species.structure() {
            Structure::Parts { entries } => Self::poisson_law(entries, args),
            Structure::FiniteSet { weights } => {
                let mut table = Vec::new();
                for (d, w) in weights.iter().enumerate() {
                    if w.is_zero() {
                        continue;
                    }
                    for counts in cycle_types(d) {
                        let mut p = w.value() * ratio_to_f64(&inverse_centralizer(&counts));
                        let mut parts = Vec::new();
                        for (len, &c) in counts.iter().enumerate().skip(1) {
                            let a = args.get(len - 1).copied().unwrap_or(0.0);
                            p *= a.powi(c as i32);
                            parts.extend(std::iter::repeat_n(Part { entry: 0, len: len as u32 }, c));
                        }
                        if p > 0.0 {
                            table.push((Blueprint::from_parts(parts), p));
                        }
                    }
                }
                Self::from_table(table)
            }
            Structure::Seq { lengths: Some(l) } => {
                let a = args[0];
                let table = l.iter().map(|&j| (Blueprint::Seq(j as u32), a.powi(j as i32))).collect();
                Self::from_table(table)
            }
            Structure::Seq { lengths: None } => {
                let q = args[0];
                if !(0.0..1.0).contains(&q) {
                    return Err(EvalError::Divergent(format!("geometric sum at s = {q}")));
                }
                let law = Geometric::new(1.0 - q).map_err(|e| EvalError::Unsupported(e.to_string()))?;
                Ok(CycleTypeDistribution {
                    normalizer: 1.0 / (1.0 - q),
                    entries: Vec::new(),
                    tail_mass: 1.0,
                    poisson: None,
                    geometric: Some(q),
                    sampler: Sampler::Geometric { law },
                })
            }
        }
    }

    fn poisson_law(entries: &[PartEntry], args: &[f64]) -> Result<Self, EvalError> {
        let mut classes = Vec::new();
        let mut i = 1usize;
        loop {
            let mut any = false;
            for (e, entry) in entries.iter().enumerate() {
                let mut m = entry.weight.value() / i as f64;
                let mut ok = true;
                for &c in &entry.cycles {
                    match args.get(i * c as usize - 1) {
                        Some(a) => m *= a,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    any = true;
                    if m > 0.0 {
                        classes.push(PoissonClass { part: Part { entry: e as u32, len: i as u32 }, mean: m });
                    }
                }
            }
            if !any {
                break;
            }
            i += 1;
        }
        let total: f64 = classes.iter().map(|c| c.mean).sum();
        if !total.is_finite() {
            return Err(EvalError::Divergent("infinite Poisson mean".into()));
        }
        let alias = if classes.is_empty() {
            WeightedAliasIndex::new(vec![1.0])
        } else {
            WeightedAliasIndex::new(classes.iter().map(|c| c.mean).collect())
        }
        .map_err(|e| EvalError::Unsupported(e.to_string()))?;
        let poisson = if total > 0.0 {
            Some(Poisson::new(total).map_err(|e| EvalError::Unsupported(e.to_string()))?)
        } else {
            None
        };
        Ok(CycleTypeDistribution {
            normalizer: total.exp(),
            entries: Vec::new(),
            tail_mass: 1.0,
            poisson: Some(classes),
            geometric: None,
            sampler: Sampler::Poisson { total, alias, poisson },
        })
    }

    fn from_table(table: Vec<(Blueprint, f64)>) -> Result<Self, EvalError> {
        let normalizer: f64 = table.iter().map(|t| t.1).sum();
        if !(normalizer > 0.0) || !normalizer.is_finite() {
            return Err(EvalError::Divergent(format!("normaliser {normalizer}")));
        }
        let alias = WeightedAliasIndex::new(table.iter().map(|t| t.1).collect())
            .map_err(|e| EvalError::Unsupported(e.to_string()))?;
        let entries = table.into_iter().map(|(b, p)| (b, p / normalizer)).collect();
        Ok(CycleTypeDistribution {
            normalizer,
            entries,
            tail_mass: 0.0,
            poisson: None,
            geometric: None,
            sampler: Sampler::Table { alias },
        })
    }

    /// Mean number of parts, Λ, for exponential laws.
    pub fn poisson_total(&self) -> Option<f64> {
        match &self.sampler {
            Sampler::Poisson { total, .. } => Some(*total),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Blueprint {
        match &self.sampler {
            Sampler::Poisson { alias, poisson, .. } => {
                let classes = self.poisson.as_ref().expect("Poisson law");
                let n = poisson.as_ref().map(|p| p.sample(rng) as usize).unwrap_or(0);
                let parts = (0..n).map(|_| classes[alias.sample(rng)].part).collect();
                Blueprint::from_parts(parts)
            }
            Sampler::Table { alias } => self.entries[alias.sample(rng)].0.clone(),
            Sampler::Geometric { law } => Blueprint::Seq(law.sample(rng) as u32),
        }
    }

    /// Probabilities of every blueprint with at most `max_atoms` atoms;
    /// returns the uncovered mass alongside.
    pub fn enumerate(&self, entries: &[PartEntry], max_atoms: usize) -> (Vec<(Blueprint, f64)>, f64) {
        match (&self.poisson, self.geometric) {
            (Some(classes), _) => {
                let total: f64 = classes.iter().map(|c| c.mean).sum();
                let atoms: Vec<usize> =
                    classes.iter().map(|c| c.part.len as usize * entries[c.part.entry as usize].atoms()).collect();
                let mut out = Vec::new();
                let mut cur = Vec::new();
                fn rec(
                    k: usize,
                    budget: usize,
                    p: f64,
                    classes: &[PoissonClass],
                    atoms: &[usize],
                    cur: &mut Vec<Part>,
                    out: &mut Vec<(Blueprint, f64)>,
                ) {
                    if k == classes.len() {
                        out.push((Blueprint::from_parts(cur.clone()), p));
                        return;
                    }
                    rec(k + 1, budget, p, classes, atoms, cur, out);
                    let mut q = p;
                    let mut used = 0;
                    let mut m = 0;
                    while used + atoms[k] <= budget {
                        used += atoms[k];
                        m += 1;
                        q *= classes[k].mean / m as f64;
                        cur.push(classes[k].part);
                        rec(k + 1, budget - used, q, classes, atoms, cur, out);
                    }
                    for _ in 0..m {
                        cur.pop();
                    }
                }
                rec(0, max_atoms, (-total).exp(), classes, &atoms, &mut cur, &mut out);
                let covered: f64 = out.iter().map(|t| t.1).sum();
                (out, (1.0 - covered).max(0.0))
            }
            (None, Some(q)) => {
                let out: Vec<_> =
                    (0..=max_atoms).map(|j| (Blueprint::Seq(j as u32), (1.0 - q) * q.powi(j as i32))).collect();
                (out, q.powi(max_atoms as i32 + 1))
            }
            (None, None) => {
                let out: Vec<_> =
                    self.entries.iter().filter(|(b, _)| b.size(entries) <= max_atoms).cloned().collect();
                let covered: f64 = out.iter().map(|t| t.1).sum();
                (out, (1.0 - covered).max(0.0))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::{BlockCatalog, Weight};

    #[test]
    fn normalizer_matches_cycle_index() {
        let args = [0.4, 0.1, 0.03, 0.008, 0.002, 5e-4, 1e-4, 3e-5];
        for s in [
            Species::polya(),
            Species::seqk_set(2).unwrap(),
            Species::blocks(BlockCatalog::cacti(3)).unwrap(),
            Species::set_with_weights(&[(0, Weight::one()), (2, Weight::one())]).unwrap(),
            Species::seq(),
        ] {
            let d = CycleTypeDistribution::from_args(&s, &args).unwrap();
            let z = s.eval_cycle_index(&args).unwrap();
            assert!((d.normalizer - z).abs() < 1e-12 * z, "{:?}", s.kind());
            let (table, tail) = d.enumerate(&s.entries(), 30);
            let sum: f64 = table.iter().map(|t| t.1).sum();
            assert!((sum + tail - 1.0).abs() < 1e-12);
            assert!(tail < 1e-6);
        }
    }
}
