use rand::Rng;

use super::{draw_g, CriticalSampler, SamplerError, ATTEMPT_BUDGET};
use crate::species::{PartEntry, Species, Structure};
use crate::symmetry::{from_g_sequence, valid_rotation, Blueprint, ChildCycle, GObject, NodeId, Part, SymEnrichedTree, TreeBuilder};

/// How to reach the conditioned law of (𝒯ₙ, βₙ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExactMethod {
    /// Recursive method over scaled coefficient tables.
    #[default]
    Recursive,
    /// Γ𝒮(ρ) with early abort, accepted when the size is n.
    Rejection,
    /// i.i.d. G-objects, cycle-lemma acceptance and rotation.
    Rotation,
}

impl std::str::FromStr for ExactMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "recursive" => Ok(ExactMethod::Recursive),
            "rejection" => Ok(ExactMethod::Rejection),
            "rotation" => Ok(ExactMethod::Rotation),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

/// One SET-cycle class (i, e) of an exponential Y = exp(S).
#[derive(Debug, Clone)]
struct ExpClass {
    part: Part,
    factor: f64,
    /// Atom-cycle multipliers `i·c` per entry cycle.
    cycles: Vec<u32>,
    /// `prefix[j][d]`: scaled weight of the first j cycles using d units,
    /// a unit of cycle c being c·i vertices over c atoms.
    prefix: Vec<Vec<f64>>,
}

/// Scaled tables for `[z^m] exp(S(z))` where S is a sum over part classes.
#[derive(Debug, Clone)]
pub(crate) struct ExpTable {
    classes: Vec<ExpClass>,
    /// Classes grouped by set-cycle length i.
    by_len: Vec<Vec<usize>>,
    s: Vec<f64>,
    y: Vec<f64>,
}

impl ExpTable {
    fn new(entries: &[PartEntry], nmax: usize) -> Self {
        let mut classes = Vec::new();
        let mut by_len = vec![Vec::new(); nmax + 1];
        for i in 1..=nmax {
            for (e, entry) in entries.iter().enumerate() {
                let units = entry.cycles.iter().map(|&c| c as usize).sum::<usize>();
                if entry.weight.is_zero() || units * i > nmax {
                    continue;
                }
                let dmax = nmax / i;
                by_len[i].push(classes.len());
                classes.push(ExpClass {
                    part: Part { entry: e as u32, len: i as u32 },
                    factor: entry.weight.value() / i as f64,
                    cycles: entry.cycles.clone(),
                    prefix: (0..=entry.cycles.len())
                        .map(|j| {
                            let mut v = vec![0.0; dmax + 1];
                            if j == 0 {
                                v[0] = 1.0;
                            }
                            v
                        })
                        .collect(),
                });
            }
        }
        ExpTable { classes, by_len, s: vec![0.0; nmax + 1], y: vec![0.0; nmax + 1] }
    }

    /// Fills S_m and Y_m once subtrees up to size m are known. `unit(l, t)`
    /// is the scaled weight of a subtree of size t on an atom cycle of length l.
    fn extend(&mut self, m: usize, unit: impl Fn(usize, usize) -> f64) {
        if m == 0 {
            self.y[0] = 1.0;
            return;
        }
        let mut s = 0.0;
        for i in 1..=m {
            if !m.is_multiple_of(i) {
                continue;
            }
            let d = m / i;
            for &ci in &self.by_len[i] {
                let class = &mut self.classes[ci];
                if d >= class.prefix[0].len() {
                    continue;
                }
                for j in 1..=class.cycles.len() {
                    let c = class.cycles[j - 1] as usize;
                    let mut acc = 0.0;
                    let mut t = 1;
                    while c * t <= d {
                        acc += class.prefix[j - 1][d - c * t] * unit(i * c, t);
                        t += 1;
                    }
                    class.prefix[j][d] = acc;
                }
                s += class.factor * class.prefix[class.cycles.len()][d];
            }
        }
        self.s[m] = s;
        let mut acc = 0.0;
        for k in 1..=m {
            acc += k as f64 * self.s[k] * self.y[m - k];
        }
        self.y[m] = acc / m as f64;
    }

    /// Draws the parts of an exp-object of size m, each with the subtree
    /// sizes of its atom cycles.
    fn sample<R: Rng + ?Sized>(
        &self,
        mut m: usize,
        unit: impl Fn(usize, usize) -> f64,
        rng: &mut R,
    ) -> Vec<(Part, Vec<usize>)> {
        let mut out = Vec::new();
        while m > 0 {
            let k = pick_boustrophedon(m, |k| k as f64 * self.s[k] * self.y[m - k], m as f64 * self.y[m], rng);
            let mut candidates = Vec::new();
            for i in 1..=k {
                if k % i != 0 {
                    continue;
                }
                for &ci in &self.by_len[i] {
                    let class = &self.classes[ci];
                    let d = k / i;
                    if d < class.prefix[0].len() {
                        candidates.push((ci, class.factor * class.prefix[class.cycles.len()][d]));
                    }
                }
            }
            let ci = pick_weighted(&candidates, rng);
            let class = &self.classes[ci];
            let i = class.part.len as usize;
            let mut d = k / i;
            let mut sizes = vec![0usize; class.cycles.len()];
            for j in (1..=class.cycles.len()).rev() {
                let c = class.cycles[j - 1] as usize;
                let w = |t: usize| {
                    if c * t > d {
                        0.0
                    } else {
                        class.prefix[j - 1][d - c * t] * unit(i * c, t)
                    }
                };
                let t = pick_boustrophedon(d / c, w, class.prefix[j][d], rng);
                sizes[j - 1] = t;
                d -= c * t;
            }
            out.push((class.part, sizes));
            m -= k;
        }
        out
    }
}

/// Picks k ∈ 1..=m with probability weight(k)/total, scanning 1, m, 2, m−1, …
fn pick_boustrophedon<R: Rng + ?Sized>(m: usize, weight: impl Fn(usize) -> f64, total: f64, rng: &mut R) -> usize {
    let mut u = rng.random::<f64>() * total;
    let (mut lo, mut hi) = (1usize, m);
    let mut last = 0;
    while lo <= hi {
        let w = weight(lo);
        if w > 0.0 {
            last = lo;
            if u < w {
                return lo;
            }
            u -= w;
        }
        if lo == hi {
            break;
        }
        let w = weight(hi);
        if w > 0.0 {
            last = hi;
            if u < w {
                return hi;
            }
            u -= w;
        }
        lo += 1;
        hi -= 1;
    }
    last
}

fn pick_weighted<R: Rng + ?Sized>(items: &[(usize, f64)], rng: &mut R) -> usize {
    let total: f64 = items.iter().map(|x| x.1).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = items[0].0;
    for &(id, w) in items {
        if w > 0.0 {
            last = id;
            if u < w {
                return id;
            }
            u -= w;
        }
    }
    last
}

#[derive(Debug, Clone)]
enum Kind {
    Exp(ExpTable),
    /// One table per weight power e, scaled by ρ^e.
    FiniteSet { levels: Vec<FiniteLevel> },
    SeqAll { y: Vec<f64> },
    /// `r[j][m]`, scaled `[z^m] Ã(z)^j`.
    SeqFinite { lengths: Vec<usize>, r: Vec<Vec<f64>> },
}

/// Level e of a FiniteSet table: `kappa[d] = (κ_d·ρ)^e`, `h[d][m]` the
/// scaled `[z^m] h_d(Ã_e(z), Ã_{2e}(z²), …)` and `b[t] = [z^t]Ã_e·ρ^{e·t}`.
#[derive(Debug, Clone)]
struct FiniteLevel {
    kappa: Vec<f64>,
    h: Vec<Vec<f64>>,
    b: Vec<f64>,
}

/// Scaled counting tables `b_t = [z^t]Ã·ρ^t` for t ≤ nmax with everything
/// the recursive method needs.
#[derive(Debug, Clone)]
pub struct ExactTables {
    species: Species,
    entries: Vec<PartEntry>,
    rho: f64,
    nmax: usize,
    b: Vec<f64>,
    kind: Kind,
}

impl ExactTables {
    /// Any positive `scale` works; a value near ρ keeps the tables bounded.
    pub fn build(species: &Species, scale: f64, nmax: usize) -> Self {
        let entries = species.entries();
        let rho = scale;
        let mut b = vec![0.0; nmax + 1];
        let kind = match species.structure() {
            Structure::Parts { .. } => {
                let mut t = ExpTable::new(&entries, nmax);
                t.extend(0, |_, _| 0.0);
                for m in 1..=nmax {
                    b[m] = rho * t.y[m - 1];
                    t.extend(m, |l, u| b[u] * rho.powi(((l - 1) * u) as i32));
                }
                Kind::Exp(t)
            }
            Structure::FiniteSet { weights } => {
                let dmax = weights.len() - 1;
                let mut levels: Vec<Option<FiniteLevel>> = vec![None; nmax + 1];
                for e in (1..=nmax.max(1)).rev() {
                    let n = nmax / e;
                    let kappa: Vec<f64> = weights.iter().map(|w| (w.value() * rho).powi(e as i32)).collect();
                    let mut h = vec![vec![0.0; n + 1]; dmax + 1];
                    let mut be = vec![0.0; n + 1];
                    h[0][0] = 1.0;
                    for m in 0..=n {
                        if m >= 1 {
                            be[m] = (0..=dmax).map(|d| kappa[d] * h[d][m - 1]).sum();
                        }
                        for d in 1..=dmax {
                            let mut acc = 0.0;
                            for i in 1..=d {
                                let mut t = 1;
                                while i * t <= m {
                                    let u = if i == 1 {
                                        be[t]
                                    } else {
                                        levels.get(e * i).and_then(|l| l.as_ref()).map_or(0.0, |l| l.b[t])
                                    };
                                    acc += u * h[d - i][m - i * t];
                                    t += 1;
                                }
                            }
                            h[d][m] = acc / d as f64;
                        }
                    }
                    levels[e] = Some(FiniteLevel { kappa, h, b: be });
                }
                let levels: Vec<FiniteLevel> = levels.into_iter().skip(1).flatten().collect();
                b = levels[0].b.clone();
                b.resize(nmax + 1, 0.0);
                Kind::FiniteSet { levels }
            }
            Structure::Seq { lengths: None } => {
                let mut y = vec![0.0; nmax + 1];
                y[0] = 1.0;
                for m in 1..=nmax {
                    b[m] = rho * y[m - 1];
                    y[m] = (1..=m).map(|t| b[t] * y[m - t]).sum();
                }
                Kind::SeqAll { y }
            }
            Structure::Seq { lengths: Some(lengths) } => {
                let jmax = *lengths.iter().max().unwrap_or(&0);
                let mut r = vec![vec![0.0; nmax + 1]; jmax + 1];
                r[0][0] = 1.0;
                for m in 0..=nmax {
                    if m >= 1 {
                        b[m] = rho * lengths.iter().map(|&j| r[j][m - 1]).sum::<f64>();
                    }
                    for j in 1..=jmax {
                        r[j][m] = (1..=m).map(|t| b[t] * r[j - 1][m - t]).sum();
                    }
                }
                Kind::SeqFinite { lengths: lengths.clone(), r }
            }
        };
        ExactTables { species: species.clone(), entries, rho, nmax, b, kind }
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn scale(&self) -> f64 {
        self.rho
    }

    /// Scaled tree counts `[z^t]Ã·scale^t`.
    pub fn scaled_counts(&self) -> &[f64] {
        &self.b
    }

    pub fn species(&self) -> &Species {
        &self.species
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<(), SamplerError> {
        if n > self.nmax {
            return Err(SamplerError::TableTooSmall { n, max: self.nmax });
        }
        if n == 0 || self.b[n] <= 0.0 {
            return Err(SamplerError::Lattice { n, span: self.span() });
        }
        Ok(())
    }

    /// Scaled weight `[z^t]Ã_l·scale^{l·t}` of a subtree of size t repeated
    /// on a cycle of length l.
    pub(crate) fn unit(&self, l: usize, t: usize) -> f64 {
        match &self.kind {
            Kind::FiniteSet { levels } => levels.get(l.wrapping_sub(1)).and_then(|lv| lv.b.get(t)).copied().unwrap_or(0.0),
            _ => self.b.get(t).map_or(0.0, |b| b * self.rho.powi(((l - 1) * t) as i32)),
        }
    }

    /// gcd of {t−1 : b_t > 0}.
    pub fn span(&self) -> usize {
        let mut g = 0;
        for t in 2..=self.nmax {
            if self.b[t] > 0.0 {
                g = crate::powerseries::gcd(g, t - 1);
            }
        }
        g.max(1)
    }

    /// Root data for a vertex whose subtree has `size` vertices and sits on
    /// cycles multiplying to `exponent`: blueprint and the subtree size on
    /// each atom cycle.
    fn root<R: Rng + ?Sized>(&self, size: usize, exponent: usize, rng: &mut R) -> (Blueprint, Vec<(u32, usize)>) {
        let m = size - 1;
        let b = &self.b;
        match &self.kind {
            Kind::Exp(t) => {
                let mut parts = t.sample(m, |l, u| self.unit(l, u), rng);
                parts.sort_by_key(|a| a.0);
                let mut children = Vec::new();
                for (p, sizes) in &parts {
                    let e = &self.entries[p.entry as usize];
                    for (c, s) in e.cycles.iter().zip(sizes) {
                        children.push((c * p.len, *s));
                    }
                }
                (Blueprint::Parts(parts.into_iter().map(|x| x.0).collect()), children)
            }
            Kind::FiniteSet { levels } => {
                let FiniteLevel { kappa, h, .. } = &levels[exponent - 1];
                let ds: Vec<(usize, f64)> = (0..kappa.len()).map(|d| (d, kappa[d] * h[d][m])).collect();
                let mut d = pick_weighted(&ds, rng);
                let mut m = m;
                let mut picked = Vec::new();
                while d > 0 {
                    let mut items = Vec::new();
                    let mut labels = Vec::new();
                    for i in 1..=d {
                        let mut t = 1;
                        while i * t <= m {
                            let w = self.unit(exponent * i, t) * h[d - i][m - i * t];
                            if w > 0.0 {
                                items.push((labels.len(), w));
                                labels.push((i, t));
                            }
                            t += 1;
                        }
                    }
                    let (i, t) = labels[pick_weighted(&items, rng)];
                    picked.push((Part { entry: 0, len: i as u32 }, t));
                    d -= i;
                    m -= i * t;
                }
                picked.sort_by_key(|a| a.0);
                let children = picked.iter().map(|(p, t)| (p.len, *t)).collect();
                (Blueprint::Parts(picked.into_iter().map(|x| x.0).collect()), children)
            }
            Kind::SeqAll { y } => {
                let mut m = m;
                let mut children = Vec::new();
                while m > 0 {
                    let t = pick_boustrophedon(m, |t| b[t] * y[m - t], y[m], rng);
                    children.push((1, t));
                    m -= t;
                }
                (Blueprint::Seq(children.len() as u32), children)
            }
            Kind::SeqFinite { lengths, r } => {
                let js: Vec<(usize, f64)> = lengths.iter().map(|&j| (j, r[j][m])).collect();
                let j = pick_weighted(&js, rng);
                let mut m = m;
                let mut children = Vec::new();
                for left in (1..=j).rev() {
                    let t = pick_boustrophedon(m, |t| b[t] * r[left - 1][m - t], r[left][m], rng);
                    children.push((1, t));
                    m -= t;
                }
                (Blueprint::Seq(j as u32), children)
            }
        }
    }

    /// Fills `root` with a tree of `size` vertices; depth `max_depth` is trimmed.
    pub(crate) fn fill<R: Rng + ?Sized>(
        &self,
        b: &mut TreeBuilder,
        root: NodeId,
        size: usize,
        exponent: usize,
        depth: usize,
        max_depth: Option<usize>,
        rng: &mut R,
    ) {
        let mut stack = vec![(root, size, depth, exponent)];
        while let Some((id, n, d, e)) = stack.pop() {
            if max_depth.is_some_and(|m| d >= m) {
                continue;
            }
            let (bp, kids) = self.root(n, e, rng);
            let mut children = Vec::with_capacity(kids.len());
            for (len, s) in kids {
                let c = b.alloc();
                children.push(ChildCycle { node: c, len });
                stack.push((c, s, d + 1, e * len as usize));
            }
            b.set(id, bp, children);
        }
    }

    /// Recursive-method draw of size n, optionally trimmed at `max_depth`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        max_depth: Option<usize>,
        rng: &mut R,
    ) -> Result<SymEnrichedTree, SamplerError> {
        self.sample_at(n, 1, max_depth, rng)
    }

    /// Draw of size n for the weights κ^exponent, i.e. a subtree repeated
    /// along a cycle of that length.
    pub fn sample_at<R: Rng + ?Sized>(
        &self,
        n: usize,
        exponent: usize,
        max_depth: Option<usize>,
        rng: &mut R,
    ) -> Result<SymEnrichedTree, SamplerError> {
        self.check_size(n)?;
        if exponent == 0 || n * exponent > self.nmax || self.unit(exponent, n) <= 0.0 {
            return Err(SamplerError::TableTooSmall { n: n * exponent, max: self.nmax });
        }
        let mut b = TreeBuilder::with_capacity(n);
        let root = b.alloc();
        self.fill(&mut b, root, n, exponent, 0, max_depth, rng);
        Ok(b.finish())
    }

    /// Exp tables over these trees as components, for SET(𝒦°).
    pub(crate) fn exp_over(&self, entries: &[PartEntry]) -> ExpTableHandle {
        let mut t = ExpTable::new(entries, self.nmax);
        for m in 0..=self.nmax {
            t.extend(m, |l, u| self.unit(l, u));
        }
        ExpTableHandle { table: t }
    }
}

/// Y = exp(S) tables built over given component counts.
#[derive(Debug, Clone)]
pub(crate) struct ExpTableHandle {
    table: ExpTable,
}

impl ExpTableHandle {
    pub(crate) fn y(&self, m: usize) -> f64 {
        self.table.y[m]
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, m: usize, tables: &ExactTables, rng: &mut R) -> Vec<(Part, Vec<usize>)> {
        self.table.sample(m, |l, u| tables.unit(l, u), rng)
    }
}

fn rejection<R: Rng + ?Sized>(ctx: &CriticalSampler, n: usize, rng: &mut R) -> Result<SymEnrichedTree, SamplerError> {
    for _ in 0..ATTEMPT_BUDGET {
        if let Some(t) = ctx.boltzmann().sample_bounded(n as u64, rng) {
            if t.size() == n as u64 {
                return Ok(t);
            }
        }
    }
    Err(SamplerError::AttemptBudget(ATTEMPT_BUDGET))
}

fn rotation<R: Rng + ?Sized>(ctx: &CriticalSampler, n: usize, rng: &mut R) -> Result<SymEnrichedTree, SamplerError> {
    'attempt: for _ in 0..ATTEMPT_BUDGET {
        let mut gs: Vec<GObject> = Vec::new();
        let mut total = 0u64;
        while total < n as u64 {
            let g = draw_g(ctx, rng)?;
            total += 1 + g.forest_size();
            gs.push(g);
        }
        if total != n as u64 {
            continue 'attempt;
        }
        let fix: Vec<usize> = gs.iter().map(|g| g.fixpoint_count()).collect();
        if fix.iter().sum::<usize>() + 1 != gs.len() {
            continue;
        }
        // every tree has ℓ linear representatives among the cyclic shifts
        if rng.random_range(0..gs.len()) != 0 {
            continue;
        }
        let shift = valid_rotation(&fix).expect("sum checked");
        gs.rotate_left(shift);
        return Ok(from_g_sequence(&gs).expect("rotation yields a valid sequence"));
    }
    Err(SamplerError::AttemptBudget(ATTEMPT_BUDGET))
}

/// Exact draw from the conditioned law of (𝒯ₙ, βₙ).
pub fn exact_size_sample<R: Rng + ?Sized>(
    ctx: &CriticalSampler,
    tables: &ExactTables,
    n: usize,
    method: ExactMethod,
    rng: &mut R,
) -> Result<SymEnrichedTree, SamplerError> {
    tables.check_size(n)?;
    match method {
        ExactMethod::Recursive => tables.sample(n, None, rng),
        ExactMethod::Rejection => rejection(ctx, n, rng),
        ExactMethod::Rotation => rotation(ctx, n, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::{BlockCatalog, Weight};

    #[test]
    fn scaled_counts_match_series() {
        for s in [
            Species::polya(),
            Species::seq(),
            Species::seqk_set(2).unwrap(),
            Species::blocks(BlockCatalog::cacti(3)).unwrap(),
            Species::set_with_weights(&[(0, Weight::one()), (2, Weight::one())]).unwrap(),
            Species::new(crate::species::SpeciesKind::SeqRestricted(crate::species::LengthSet::Finite(vec![0, 2])))
                .unwrap(),
        ] {
            let series = crate::powerseries::solve_enriched_fixed_point(&s, 30).unwrap();
            let t = ExactTables::build(&s, 0.3, 30);
            for n in 1..=30 {
                let want = series.coeff(n) * 0.3f64.powi(n as i32);
                assert!((t.scaled_counts()[n] - want).abs() <= 1e-9 * want.max(1e-300), "{:?} n={n}", s.kind());
            }
        }
    }

    #[test]
    fn lattice_error_for_even_binary() {
        let s = Species::set_with_weights(&[(0, Weight::one()), (2, Weight::one())]).unwrap();
        let t = ExactTables::build(&s, 0.6, 10);
        assert!(matches!(t.check_size(2), Err(SamplerError::Lattice { span: 2, .. })));
        assert!(t.check_size(3).is_ok());
    }

    #[test]
    fn recursive_sizes_are_exact() {
        let s = Species::blocks(BlockCatalog::cacti(3)).unwrap();
        let t = ExactTables::build(&s, 0.25, 200);
        let mut rng = crate::samplers::RngStream::new(3, 0).rng();
        for n in [1, 2, 7, 50, 200] {
            let tree = t.sample(n, None, &mut rng).unwrap();
            assert_eq!(tree.size(), n as u64);
            tree.validate(&s.entries()).unwrap();
        }
    }
}
