//! Weighted species descriptors and their cycle index sums.

mod distribution;
mod json;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::powerseries::{ratio_to_f64, TruncatedSeries};

pub use distribution::{symmetry_distribution, CycleTypeDistribution, PoissonClass};
pub use json::parse_species_json;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeciesError {
    #[error("invalid weight: {0}")]
    BadWeight(String),
    #[error("no positive weight at size 0")]
    NoEmptyStructure,
    #[error("degenerate species: all weight sits on sizes 0 and 1")]
    Degenerate,
    #[error("block catalog: {0}")]
    BadCatalog(String),
    #[error("species JSON: {0}")]
    Json(String),
    #[error("k must be at least 1")]
    BadK,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("divergent evaluation: {0}")]
    Divergent(String),
    #[error("argument list too short: last argument {last:e} is not negligible")]
    Truncation { last: f64 },
    #[error("operation unsupported in this ring: {0}")]
    Unsupported(String),
}

/// A nonnegative weight kept both exactly and as a float.
#[derive(Clone, PartialEq)]
pub struct Weight {
    exact: BigRational,
    approx: f64,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.exact)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.exact)
    }
}

impl Weight {
    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn integer(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn from_exact(exact: BigRational) -> Self {
        let approx = ratio_to_f64(&exact);
        Weight { exact, approx }
    }

    /// Exact binary value of a finite, nonnegative float.
    pub fn from_f64(v: f64) -> Result<Self, SpeciesError> {
        if !v.is_finite() || v < 0.0 {
            return Err(SpeciesError::BadWeight(format!("{v}")));
        }
        let exact = BigRational::from_float(v).ok_or_else(|| SpeciesError::BadWeight(format!("{v}")))?;
        Ok(Weight { exact, approx: v })
    }

    /// Parses `"p/q"`, `"p"` or a decimal literal.
    pub fn parse(text: &str) -> Result<Self, SpeciesError> {
        let t = text.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| SpeciesError::BadWeight(t.into()))?;
            let q: BigInt = q.trim().parse().map_err(|_| SpeciesError::BadWeight(t.into()))?;
            if q.is_zero() || p.is_negative() || q.is_negative() {
                return Err(SpeciesError::BadWeight(t.into()));
            }
            return Ok(Self::from_exact(BigRational::new(p, q)));
        }
        if let Ok(n) = t.parse::<BigInt>() {
            if n.is_negative() {
                return Err(SpeciesError::BadWeight(t.into()));
            }
            return Ok(Self::from_exact(BigRational::from_integer(n)));
        }
        let v: f64 = t.parse().map_err(|_| SpeciesError::BadWeight(t.into()))?;
        Self::from_f64(v)
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn value(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    pub fn mul(&self, other: &Weight) -> Weight {
        Weight { exact: &self.exact * &other.exact, approx: self.approx * other.approx }
    }

    pub fn pow(&self, e: u32) -> Weight {
        Weight::from_exact(num_traits::pow(self.exact.clone(), e as usize))
    }

    pub fn div_int(&self, k: i64) -> Weight {
        Weight {
            exact: &self.exact / BigRational::from_integer(BigInt::from(k)),
            approx: self.approx / k as f64,
        }
    }
}

/// Degree weights κ of a SET-type species.
#[derive(Debug, Clone, PartialEq)]
pub enum DegreeWeights {
    /// κ ≡ 1.
    Uniform,
    Finite(BTreeMap<usize, Weight>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LengthSet {
    All,
    Finite(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockShape {
    /// K₂, one non-root atom.
    Edge,
    /// A cycle through the root vertex with `size` further vertices.
    Polygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCycleType {
    /// Cycle lengths over the non-root atoms, in canonical atom order.
    pub cycles: Vec<u32>,
    pub weight: Weight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockKind {
    /// Number of non-root atoms m.
    pub size: usize,
    pub shape: Option<BlockShape>,
    pub cycle_types: Vec<BlockCycleType>,
}

/// The derived block family ℬ′ as explicit cycle-index terms.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCatalog {
    pub blocks: Vec<BlockKind>,
}

impl BlockCatalog {
    pub fn edge() -> Self {
        BlockCatalog {
            blocks: vec![BlockKind {
                size: 1,
                shape: Some(BlockShape::Edge),
                cycle_types: vec![BlockCycleType { cycles: vec![1], weight: Weight::one() }],
            }],
        }
    }

    /// Edges plus polygons with 3..=max_polygon vertices. A polygon with m
    /// non-root vertices contributes `(s₁^m + s₁^{m mod 2}·s₂^{⌊m/2⌋})/2`.
    pub fn cacti(max_polygon: usize) -> Self {
        let mut cat = Self::edge();
        for vertices in 3..=max_polygon {
            let m = vertices - 1;
            let mut reflection = vec![2u32; m / 2];
            if m % 2 == 1 {
                reflection.push(1);
            }
            cat.blocks.push(BlockKind {
                size: m,
                shape: Some(BlockShape::Polygon),
                cycle_types: vec![
                    BlockCycleType { cycles: vec![1; m], weight: Weight::from_ratio(1, 2) },
                    BlockCycleType { cycles: reflection, weight: Weight::from_ratio(1, 2) },
                ],
            });
        }
        cat
    }

    pub fn validate(&self) -> Result<(), SpeciesError> {
        let mut total = 0.0;
        for b in &self.blocks {
            if b.size == 0 {
                return Err(SpeciesError::BadCatalog("block size must be at least 1".into()));
            }
            for ct in &b.cycle_types {
                let sum: u32 = ct.cycles.iter().sum();
                if sum as usize != b.size || ct.cycles.contains(&0) {
                    return Err(SpeciesError::BadCatalog(format!(
                        "cycle type {:?} does not partition {} atoms",
                        ct.cycles, b.size
                    )));
                }
                total += ct.weight.value();
            }
        }
        if total <= 0.0 {
            return Err(SpeciesError::BadCatalog("no block with positive weight".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpeciesKind {
    SetWeighted(DegreeWeights),
    SeqRestricted(LengthSet),
    SeqKSet { k: usize },
    SetDerivedBlocks(BlockCatalog),
}

/// What a part entry stands for in the decoded structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntryLabel {
    Atom,
    /// Position p in the SEQ_k tuple.
    Position(u32),
    /// Block kind and cycle-type indices into the catalog.
    Block { kind: u32, cycle_type: u32 },
}

/// One term of the exponent of a SET-of-parts cycle index: a part of this
/// entry placed on a set-cycle of length i has atom cycles `i·c` for c in
/// `cycles` and weight `weight/i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartEntry {
    pub cycles: Vec<u32>,
    pub weight: Weight,
    pub label: EntryLabel,
}

impl PartEntry {
    pub fn fixpoint_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.cycles.iter().enumerate().filter(|(_, &c)| c == 1).map(|(j, _)| j)
    }

    pub fn fixpoints(&self) -> usize {
        self.cycles.iter().filter(|&&c| c == 1).count()
    }

    pub fn atoms(&self) -> usize {
        self.cycles.iter().map(|&c| c as usize).sum()
    }
}

/// Normal form used by every evaluator and sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    /// `Z = exp(Σ_i Σ_e (w_e/i)·Π_c s_{i·c})`.
    Parts { entries: Vec<PartEntry> },
    /// `Z = Σ_d κ_d·h_d(s)`; index = degree.
    FiniteSet { weights: Vec<Weight> },
    /// `Z = Σ_{j∈L} s₁^j`; `None` means every length.
    Seq { lengths: Option<Vec<usize>> },
}

/// A weighted species R^κ, see [`SpeciesKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    kind: SpeciesKind,
    structure: Structure,
}

pub type SpeciesDescriptor = Species;

/// Arithmetic needed to evaluate cycle index sums.
pub trait CycleRing: Clone {
    fn constant_like(&self, w: &Weight) -> Self;
    fn ring_add(&self, other: &Self) -> Self;
    fn ring_mul(&self, other: &Self) -> Self;
    /// `self·w/div`.
    fn ring_scale(&self, w: &Weight, div: i64) -> Self;
    fn ring_exp(&self) -> Result<Self, EvalError>;
    /// `1/(1 − self)`.
    fn ring_geometric(&self) -> Result<Self, EvalError>;
}

impl CycleRing for f64 {
    fn constant_like(&self, w: &Weight) -> Self {
        w.value()
    }
    fn ring_add(&self, other: &Self) -> Self {
        self + other
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn ring_scale(&self, w: &Weight, div: i64) -> Self {
        self * w.value() / div as f64
    }
    fn ring_exp(&self) -> Result<Self, EvalError> {
        let v = self.exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Divergent(format!("exp({self})")))
        }
    }
    fn ring_geometric(&self) -> Result<Self, EvalError> {
        if *self >= 1.0 {
            Err(EvalError::Divergent(format!("geometric sum at s = {self}")))
        } else {
            Ok(1.0 / (1.0 - self))
        }
    }
}

impl CycleRing for TruncatedSeries<f64> {
    fn constant_like(&self, w: &Weight) -> Self {
        TruncatedSeries::constant(w.value(), self.cap())
    }
    fn ring_add(&self, other: &Self) -> Self {
        self.add(other).expect("caps agree")
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self.multiply(other).expect("caps agree")
    }
    fn ring_scale(&self, w: &Weight, div: i64) -> Self {
        self.scale(&(w.value() / div as f64))
    }
    fn ring_exp(&self) -> Result<Self, EvalError> {
        let c = self.coeff(0);
        let mut rest = self.clone().into_coeffs();
        rest[0] = 0.0;
        let e = TruncatedSeries::new(rest, self.cap()).exp().expect("zero constant");
        let f = c.exp();
        if !f.is_finite() {
            return Err(EvalError::Divergent(format!("exp({c})")));
        }
        Ok(e.scale(&f))
    }
    fn ring_geometric(&self) -> Result<Self, EvalError> {
        let c = self.coeff(0);
        if c >= 1.0 {
            return Err(EvalError::Divergent(format!("geometric sum at constant {c}")));
        }
        let mut rest = self.clone().into_coeffs();
        rest[0] = 0.0;
        let g = TruncatedSeries::new(rest, self.cap())
            .scale(&(1.0 / (1.0 - c)))
            .geometric()
            .expect("zero constant");
        Ok(g.scale(&(1.0 / (1.0 - c))))
    }
}

impl CycleRing for TruncatedSeries<BigRational> {
    fn constant_like(&self, w: &Weight) -> Self {
        TruncatedSeries::constant(w.exact().clone(), self.cap())
    }
    fn ring_add(&self, other: &Self) -> Self {
        self.add(other).expect("caps agree")
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self.multiply(other).expect("caps agree")
    }
    fn ring_scale(&self, w: &Weight, div: i64) -> Self {
        if div == 1 {
            self.scale(w.exact())
        } else {
            self.scale(&(w.exact() / BigRational::from_integer(BigInt::from(div))))
        }
    }
    fn ring_exp(&self) -> Result<Self, EvalError> {
        self.exp().map_err(|_| EvalError::Unsupported("exact exp with a constant term".into()))
    }
    fn ring_geometric(&self) -> Result<Self, EvalError> {
        self.geometric().map_err(|_| EvalError::Unsupported("exact geometric sum with a constant term".into()))
    }
}

impl Species {
    pub fn new(kind: SpeciesKind) -> Result<Self, SpeciesError> {
        let structure = match &kind {
            SpeciesKind::SetWeighted(DegreeWeights::Uniform) => Structure::Parts {
                entries: vec![PartEntry { cycles: vec![1], weight: Weight::one(), label: EntryLabel::Atom }],
            },
            SpeciesKind::SetWeighted(DegreeWeights::Finite(map)) => {
                let max = map.keys().copied().max().unwrap_or(0);
                let mut weights = vec![Weight::integer(0); max + 1];
                for (&d, w) in map {
                    weights[d] = w.clone();
                }
                while weights.len() > 1 && weights.last().map(|w| w.is_zero()).unwrap_or(false) {
                    weights.pop();
                }
                Structure::FiniteSet { weights }
            }
            SpeciesKind::SeqRestricted(LengthSet::All) => Structure::Seq { lengths: None },
            SpeciesKind::SeqRestricted(LengthSet::Finite(l)) => {
                let mut l = l.clone();
                l.sort_unstable();
                l.dedup();
                Structure::Seq { lengths: Some(l) }
            }
            SpeciesKind::SeqKSet { k } => {
                if *k == 0 {
                    return Err(SpeciesError::BadK);
                }
                Structure::Parts {
                    entries: (0..*k)
                        .map(|p| PartEntry {
                            cycles: vec![1],
                            weight: Weight::one(),
                            label: EntryLabel::Position(p as u32),
                        })
                        .collect(),
                }
            }
            SpeciesKind::SetDerivedBlocks(cat) => {
                cat.validate()?;
                let mut entries = Vec::new();
                for (b, kind) in cat.blocks.iter().enumerate() {
                    for (c, ct) in kind.cycle_types.iter().enumerate() {
                        if ct.weight.is_zero() {
                            continue;
                        }
                        entries.push(PartEntry {
                            cycles: ct.cycles.clone(),
                            weight: ct.weight.clone(),
                            label: EntryLabel::Block { kind: b as u32, cycle_type: c as u32 },
                        });
                    }
                }
                Structure::Parts { entries }
            }
        };
        let s = Species { kind, structure };
        s.validate()?;
        Ok(s)
    }

    pub fn polya() -> Self {
        Self::new(SpeciesKind::SetWeighted(DegreeWeights::Uniform)).expect("valid")
    }

    pub fn set_with_weights(weights: &[(usize, Weight)]) -> Result<Self, SpeciesError> {
        Self::new(SpeciesKind::SetWeighted(DegreeWeights::Finite(weights.iter().cloned().collect())))
    }

    pub fn seq() -> Self {
        Self::new(SpeciesKind::SeqRestricted(LengthSet::All)).expect("valid")
    }

    pub fn seqk_set(k: usize) -> Result<Self, SpeciesError> {
        Self::new(SpeciesKind::SeqKSet { k })
    }

    pub fn blocks(catalog: BlockCatalog) -> Result<Self, SpeciesError> {
        Self::new(SpeciesKind::SetDerivedBlocks(catalog))
    }

    pub fn kind(&self) -> &SpeciesKind {
        &self.kind
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn catalog(&self) -> Option<&BlockCatalog> {
        match &self.kind {
            SpeciesKind::SetDerivedBlocks(c) => Some(c),
            _ => None,
        }
    }

    /// True exactly when Z = exp(Σ s_i/i), where Ã(ρ) = 1 is forced.
    pub fn is_unrestricted_set(&self) -> bool {
        matches!(self.kind, SpeciesKind::SetWeighted(DegreeWeights::Uniform))
    }

    /// True when the weights ω^e of an e-fold repeated subtree give back the
    /// same species, so that Ã(z^e) is the right plethystic argument.
    pub fn is_power_stable(&self) -> bool {
        match &self.structure {
            Structure::FiniteSet { weights } => weights.iter().all(|w| w.is_zero() || w.exact().is_one()),
            _ => true,
        }
    }

    /// The species with every degree weight raised to the power e.
    pub fn weight_power(&self, e: u32) -> Species {
        match &self.structure {
            Structure::FiniteSet { weights } if !self.is_power_stable() => {
                let weights: Vec<Weight> = weights.iter().map(|w| w.pow(e)).collect();
                let map = weights.iter().enumerate().filter(|(_, w)| !w.is_zero()).map(|(d, w)| (d, w.clone())).collect();
                Species { kind: SpeciesKind::SetWeighted(DegreeWeights::Finite(map)), structure: Structure::FiniteSet { weights } }
            }
            _ => self.clone(),
        }
    }

    /// Entries of the SET-of-parts form; FiniteSet uses a single atom entry.
    pub fn entries(&self) -> Vec<PartEntry> {
        match &self.structure {
            Structure::Parts { entries } => entries.clone(),
            Structure::FiniteSet { .. } => {
                vec![PartEntry { cycles: vec![1], weight: Weight::one(), label: EntryLabel::Atom }]
            }
            Structure::Seq { .. } => Vec::new(),
        }
    }

    pub fn max_cycle_len(&self) -> usize {
        match &self.structure {
            Structure::Parts { entries } => {
                entries.iter().flat_map(|e| e.cycles.iter()).copied().max().unwrap_or(1) as usize
            }
            _ => 1,
        }
    }

    /// Upper end of the s₁-domain on which Z is finite, if bounded.
    pub fn s1_domain_sup(&self) -> Option<f64> {
        match &self.structure {
            Structure::Seq { lengths: None } => Some(1.0),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SpeciesError> {
        match &self.structure {
            Structure::Parts { entries } => {
                if entries.iter().all(|e| e.weight.is_zero()) {
                    return Err(SpeciesError::Degenerate);
                }
                Ok(())
            }
            Structure::FiniteSet { weights } => {
                for w in weights {
                    if !w.value().is_finite() || w.value() < 0.0 {
                        return Err(SpeciesError::BadWeight(w.to_string()));
                    }
                }
                if weights.first().map(|w| w.is_zero()).unwrap_or(true) {
                    return Err(SpeciesError::NoEmptyStructure);
                }
                if weights.iter().skip(2).all(|w| w.is_zero()) {
                    return Err(SpeciesError::Degenerate);
                }
                Ok(())
            }
            Structure::Seq { lengths } => match lengths {
                None => Ok(()),
                Some(l) => {
                    if !l.contains(&0) {
                        return Err(SpeciesError::NoEmptyStructure);
                    }
                    if !l.iter().any(|&j| j >= 2) {
                        return Err(SpeciesError::Degenerate);
                    }
                    Ok(())
                }
            },
        }
    }

    /// `Z_R(s₁, s₂, …)` with `s_j = args[j−1]` and `s_j = 0` beyond the list.
    pub fn eval_cycle_index<R: CycleRing>(&self, args: &[R]) -> Result<R, EvalError> {
        let proto = args.first().ok_or_else(|| EvalError::Unsupported("empty argument list".into()))?;
        let zero = proto.constant_like(&Weight::integer(0));
        let one = proto.constant_like(&Weight::one());
        let arg = |j: usize| args.get(j - 1);
        match &self.structure {
            Structure::Parts { entries } => {
                let mut s = zero.clone();
                let mut i = 1;
                loop {
                    let mut any = false;
                    for e in entries {
                        let mut term: Option<R> = None;
                        let mut ok = true;
                        for &c in &e.cycles {
                            match arg(i * c as usize) {
                                Some(a) => {
                                    term = Some(match term {
                                        None => a.clone(),
                                        Some(t) => t.ring_mul(a),
                                    })
                                }
                                None => {
                                    ok = false;
                                    break;
                                }
                            }
                        }
                        if ok {
                            any = true;
                            let t = term.expect("entries have cycles");
                            s = s.ring_add(&t.ring_scale(&e.weight, i as i64));
                        }
                    }
                    if !any {
                        break;
                    }
                    i += 1;
                }
                s.ring_exp()
            }
            Structure::FiniteSet { weights } => {
                let h = newton_h(weights.len().saturating_sub(1), &one, &zero, |i| arg(i).cloned());
                let mut z = zero.clone();
                for (d, w) in weights.iter().enumerate() {
                    if !w.is_zero() {
                        z = z.ring_add(&h[d].ring_scale(w, 1));
                    }
                }
                Ok(z)
            }
            Structure::Seq { lengths } => {
                let s1 = arg(1).expect("nonempty");
                match lengths {
                    None => s1.ring_geometric(),
                    Some(l) => {
                        let mut z = zero.clone();
                        let mut p = one.clone();
                        let mut j = 0;
                        for &len in l {
                            while j < len {
                                p = p.ring_mul(s1);
                                j += 1;
                            }
                            z = z.ring_add(&p);
                        }
                        Ok(z)
                    }
                }
            }
        }
    }

    /// Scalar evaluation that also refuses argument lists whose last entry
    /// is not negligible against the first.
    pub fn eval_cycle_index_checked(&self, args: &[f64]) -> Result<f64, EvalError> {
        if let (Some(&first), Some(&last)) = (args.first(), args.last()) {
            let needed = args.len() > 1 && !matches!(self.structure, Structure::Seq { .. });
            if needed && first > 0.0 && last > 1e-12 * first {
                return Err(EvalError::Truncation { last });
            }
        }
        self.eval_cycle_index(args)
    }

    /// `(Z, ∂Z/∂s₁, ∂²Z/∂s₁²)` at scalar arguments.
    pub fn eval_s1_derivatives(&self, args: &[f64]) -> Result<[f64; 3], EvalError> {
        let arg = |j: usize| args.get(j - 1).copied().unwrap_or(0.0);
        match &self.structure {
            Structure::Parts { entries } => {
                let z = self.eval_cycle_index(args)?;
                let (mut d1, mut d2) = (0.0, 0.0);
                for e in entries {
                    let w = e.weight.value();
                    let vals: Vec<f64> = e.cycles.iter().map(|&c| arg(c as usize)).collect();
                    let fixed: Vec<usize> = e.fixpoint_positions().collect();
                    for (a, &j) in fixed.iter().enumerate() {
                        let p: f64 = vals.iter().enumerate().filter(|&(t, _)| t != j).map(|(_, v)| v).product();
                        d1 += w * p;
                        for &j2 in &fixed[a + 1..] {
                            let q: f64 = vals
                                .iter()
                                .enumerate()
                                .filter(|&(t, _)| t != j && t != j2)
                                .map(|(_, v)| v)
                                .product();
                            d2 += 2.0 * w * q;
                        }
                    }
                }
                Ok([z, z * d1, z * (d1 * d1 + d2)])
            }
            Structure::FiniteSet { weights } => {
                let h = newton_h(weights.len().saturating_sub(1), &1.0, &0.0, |i| Some(arg(i)));
                let (mut z, mut z1, mut z2) = (0.0, 0.0, 0.0);
                for (d, w) in weights.iter().enumerate() {
                    let w = w.value();
                    z += w * h[d];
                    if d >= 1 {
                        z1 += w * h[d - 1];
                    }
                    if d >= 2 {
                        z2 += w * h[d - 2];
                    }
                }
                Ok([z, z1, z2])
            }
            Structure::Seq { lengths } => {
                let u = arg(1);
                match lengths {
                    None => {
                        if u >= 1.0 {
                            return Err(EvalError::Divergent(format!("geometric sum at s = {u}")));
                        }
                        let g = 1.0 / (1.0 - u);
                        Ok([g, g * g, 2.0 * g * g * g])
                    }
                    Some(l) => {
                        let (mut z, mut z1, mut z2) = (0.0, 0.0, 0.0);
                        for &j in l {
                            let jf = j as f64;
                            z += u.powi(j as i32);
                            if j >= 1 {
                                z1 += jf * u.powi(j as i32 - 1);
                            }
                            if j >= 2 {
                                z2 += jf * (jf - 1.0) * u.powi(j as i32 - 2);
                            }
                        }
                        Ok([z, z1, z2])
                    }
                }
            }
        }
    }
}

/// Complete homogeneous cycle polynomials h_0..h_max through
/// `d·h_d = Σ_{i=1}^d s_i·h_{d−i}`.
fn newton_h<R: CycleRing>(max: usize, one: &R, zero: &R, arg: impl Fn(usize) -> Option<R>) -> Vec<R> {
    let mut h = vec![one.clone()];
    for d in 1..=max {
        let mut acc = zero.clone();
        for i in 1..=d {
            if let Some(a) = arg(i) {
                acc = acc.ring_add(&a.ring_mul(&h[d - i]));
            }
        }
        h.push(acc.ring_scale(&Weight::one(), d as i64));
    }
    h
}

/// `1/z_λ` for a cycle type given as counts per length (index = length).
pub fn inverse_centralizer(counts: &[usize]) -> BigRational {
    let mut z = BigInt::one();
    for (len, &c) in counts.iter().enumerate().skip(1) {
        for k in 1..=c {
            z *= BigInt::from(len) * BigInt::from(k);
        }
    }
    BigRational::new(BigInt::one(), z)
}

/// All cycle types of a permutation of `d` points, as counts per length.
pub fn cycle_types(d: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for len in (1..=max.min(rest)).rev() {
            cur[len] += 1;
            rec(rest - len, len, cur, out);
            cur[len] -= 1;
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0; d + 1];
    rec(d, d, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_at_zero_is_one() {
        let s = Species::polya();
        assert_eq!(s.eval_cycle_index(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn seq_geometric() {
        assert!((Species::seq().eval_cycle_index(&[0.5]).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(Species::seq().eval_cycle_index(&[1.0]), Err(EvalError::Divergent(_))));
    }

    #[test]
    fn centralizers_sum_to_one() {
        for d in 0..8 {
            let total: BigRational = cycle_types(d).iter().map(|c| inverse_centralizer(c)).sum();
            assert!(total.is_one(), "d = {d}");
        }
    }

    #[test]
    fn degenerate_weights_rejected() {
        let r = Species::set_with_weights(&[(0, Weight::one()), (1, Weight::one())]);
        assert_eq!(r, Err(SpeciesError::Degenerate));
        let r = Species::set_with_weights(&[(2, Weight::one())]);
        assert_eq!(r, Err(SpeciesError::NoEmptyStructure));
    }

    #[test]
    fn weight_parsing() {
        assert_eq!(Weight::parse("1/2").unwrap(), Weight::from_ratio(1, 2));
        assert_eq!(Weight::parse("3").unwrap(), Weight::integer(3));
        assert_eq!(Weight::parse("0.5").unwrap(), Weight::from_ratio(1, 2));
        assert!(Weight::parse("-1").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let species = [
            Species::polya(),
            Species::seq(),
            Species::seqk_set(3).unwrap(),
            Species::blocks(BlockCatalog::cacti(4)).unwrap(),
            Species::set_with_weights(&[(0, Weight::one()), (2, Weight::one()), (3, Weight::from_ratio(1, 3))])
                .unwrap(),
        ];
        let base = [0.31, 0.05, 0.011, 0.002];
        for s in &species {
            let [_, d1, d2] = s.eval_s1_derivatives(&base).unwrap();
            let h = 1e-5;
            let f = |u: f64| {
                let mut a = base;
                a[0] = u;
                s.eval_s1_derivatives(&a).unwrap()[0]
            };
            let fd1 = (f(base[0] + h) - f(base[0] - h)) / (2.0 * h);
            let fd2 = (f(base[0] + h) - 2.0 * f(base[0]) + f(base[0] - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-6 * d1.abs().max(1.0), "{:?}", s.kind());
            assert!((d2 - fd2).abs() < 1e-3 * d2.abs().max(1.0), "{:?}", s.kind());
        }
    }
}
