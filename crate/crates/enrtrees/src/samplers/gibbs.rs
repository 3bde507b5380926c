use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::exact::ExpTableHandle;
use super::{CriticalSampler, ExactTables, SamplerError, ATTEMPT_BUDGET};
use crate::species::{EntryLabel, PartEntry, Species, Weight};
use crate::symmetry::SymEnrichedTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GibbsMethod {
    #[default]
    Recursive,
    /// Pólya–Boltzmann multiset at ρ rejected until the size is n.
    Rejection,
}

/// A component of a Gibbs partition repeated `copies` times by one set-cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub tree: SymEnrichedTree,
    pub copies: u32,
}

/// SET(𝒦°) partitions of size n into components of the inner species.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    inner: CriticalSampler,
    tables: ExactTables,
    exp: ExpTableHandle,
}

impl GibbsSampler {
    pub fn new(inner: &Species, nmax: usize) -> Result<Self, SamplerError> {
        let ctx = CriticalSampler::new(inner)?;
        let tables = ExactTables::build(inner, ctx.rho(), nmax);
        let atom = [PartEntry { cycles: vec![1], weight: Weight::one(), label: EntryLabel::Atom }];
        let exp = tables.exp_over(&atom);
        Ok(GibbsSampler { inner: ctx, tables, exp })
    }

    pub fn inner(&self) -> &CriticalSampler {
        &self.inner
    }

    fn check(&self, n: usize) -> Result<(), SamplerError> {
        if n > self.tables.nmax() {
            return Err(SamplerError::TableTooSmall { n, max: self.tables.nmax() });
        }
        if n == 0 || self.exp.y(n) <= 0.0 {
            return Err(SamplerError::Lattice { n, span: self.tables.span() });
        }
        Ok(())
    }

    /// Component sizes with multiplicities, without building the trees.
    pub fn sizes<R: Rng + ?Sized>(&self, n: usize, method: GibbsMethod, rng: &mut R) -> Result<Vec<(usize, u32)>, SamplerError> {
        self.check(n)?;
        match method {
            GibbsMethod::Recursive => Ok(self
                .exp
                .sample(n, &self.tables, rng)
                .into_iter()
                .map(|(p, sizes)| (sizes[0], p.len))
                .collect()),
            GibbsMethod::Rejection => Ok(self
                .rejection(n, rng)?
                .into_iter()
                .map(|c| (c.tree.size() as usize, c.copies))
                .collect()),
        }
    }

    fn rejection<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Component>, SamplerError> {
        let boltz = self.inner.boltzmann();
        let rho = self.inner.rho();
        let mut means = Vec::new();
        for i in 1..=n {
            let a = if i == 1 {
                self.inner.report().A_rho
            } else {
                self.inner.tower().value(i, rho)
            };
            means.push(a / i as f64);
        }
        for _ in 0..ATTEMPT_BUDGET {
            let mut comps = Vec::new();
            let mut total = 0u64;
            let mut over = false;
            'cycles: for (k, &m) in means.iter().enumerate() {
                let i = k as u64 + 1;
                if m <= 0.0 {
                    continue;
                }
                let count = Poisson::new(m).map(|p| p.sample(rng) as u64).unwrap_or(0);
                for _ in 0..count {
                    match boltz.sample_bounded_at(i, (n as u64 - total) / i, rng) {
                        Some(tree) => {
                            total += i * tree.size();
                            comps.push(Component { tree, copies: i as u32 });
                        }
                        None => {
                            over = true;
                            break 'cycles;
                        }
                    }
                }
            }
            if !over && total == n as u64 {
                return Ok(comps);
            }
        }
        Err(SamplerError::AttemptBudget(ATTEMPT_BUDGET))
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, method: GibbsMethod, rng: &mut R) -> Result<Vec<Component>, SamplerError> {
        self.check(n)?;
        match method {
            GibbsMethod::Recursive => {
                let parts = self.exp.sample(n, &self.tables, rng);
                parts
                    .into_iter()
                    .map(|(p, sizes)| Ok(Component { tree: self.tables.sample_at(sizes[0], p.len as usize, None, rng)?, copies: p.len }))
                    .collect()
            }
            GibbsMethod::Rejection => self.rejection(n, rng),
        }
    }
}

/// Draws a Gibbs partition of total size n.
pub fn gibbs_sample<R: Rng + ?Sized>(
    sampler: &GibbsSampler,
    n: usize,
    method: GibbsMethod,
    rng: &mut R,
) -> Result<Vec<Component>, SamplerError> {
    sampler.sample(n, method, rng)
}

pub fn gibbs_component_sizes<R: Rng + ?Sized>(
    sampler: &GibbsSampler,
    n: usize,
    method: GibbsMethod,
    rng: &mut R,
) -> Result<Vec<(usize, u32)>, SamplerError> {
    sampler.sizes(n, method, rng)
}

/// Removes one copy of a largest component; ties go to the first listed.
pub fn extract_remainder(mut components: Vec<Component>) -> Vec<Component> {
    let Some((idx, _)) = components.iter().enumerate().max_by(|a, b| {
        a.1.tree.size().cmp(&b.1.tree.size()).then(b.0.cmp(&a.0))
    }) else {
        return components;
    };
    if components[idx].copies > 1 {
        components[idx].copies -= 1;
    } else {
        components.remove(idx);
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_one_is_a_single_component() {
        let g = GibbsSampler::new(&Species::seqk_set(2).unwrap(), 16).unwrap();
        let mut rng = crate::samplers::RngStream::new(1, 1).rng();
        let c = gibbs_sample(&g, 1, GibbsMethod::Recursive, &mut rng).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].tree.size(), 1);
        assert!(extract_remainder(c).is_empty());
    }

    #[test]
    fn sizes_add_up() {
        let g = GibbsSampler::new(&Species::seqk_set(2).unwrap(), 64).unwrap();
        let mut rng = crate::samplers::RngStream::new(1, 2).rng();
        for method in [GibbsMethod::Recursive, GibbsMethod::Rejection] {
            for _ in 0..20 {
                let c = gibbs_sample(&g, 12, method, &mut rng).unwrap();
                let total: u64 = c.iter().map(|c| c.copies as u64 * c.tree.size()).sum();
                assert_eq!(total, 12);
            }
        }
    }
}
