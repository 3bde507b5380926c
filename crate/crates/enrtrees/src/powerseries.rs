//! Truncated power series, the enriched-tree fixed point and the location
//! of the dominant singularity.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::species::{CycleRing, EvalError, Species};

pub const DEFAULT_DEGREE_CAP: usize = 128;
pub const RHO_TOLERANCE: f64 = 1e-10;
pub const CRITICALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArithmeticMode {
    ExactRational,
    Float64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("degree caps differ: {0} vs {1}")]
    CapMismatch(usize, usize),
    #[error("exp needs a zero constant term")]
    NonzeroConstant,
    #[error("species rejected by the solver: {0}")]
    InvalidSpecies(String),
    #[error("cycle index evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("bisection did not converge: {0}")]
    NoConvergence(String),
    #[error("criticality residual {residual:e} exceeds {tol:e}; degree cap {cap} is probably too small")]
    ToleranceUnreachable { residual: f64, tol: f64, cap: usize },
}

/// Numbers the series arithmetic can run over.
pub trait Coefficient: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    const MODE: ArithmeticMode;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn to_f64(&self) -> f64;
}

impl Coefficient for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Float64;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Coefficient for BigRational {
    const MODE: ArithmeticMode = ArithmeticMode::ExactRational;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
}

/// Converts a rational that may have huge numerator and denominator.
pub fn ratio_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(q) {
        if v.is_finite() {
            return v;
        }
    }
    let n = q.numer();
    let d = q.denom();
    let shift = n.bits() as i64 - d.bits() as i64;
    let (n2, d2) = if shift > 0 {
        (n.clone(), d << (shift as u64))
    } else {
        (n << ((-shift) as u64), d.clone())
    };
    let m = ToPrimitive::to_f64(&BigRational::new(n2, d2)).unwrap_or(f64::NAN);
    m * 2f64.powi(shift as i32)
}

/// Coefficients of an ordinary generating series up to `z^cap`.
#[derive(Clone, PartialEq)]
pub struct TruncatedSeries<C> {
    coeffs: Vec<C>,
}

impl<C: Coefficient> fmt::Debug for TruncatedSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncatedSeries")
            .field("cap", &self.cap())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<C: Coefficient> TruncatedSeries<C> {
    /// Pads with zeros or truncates so the series has exactly `cap + 1` entries.
    pub fn new(mut coeffs: Vec<C>, cap: usize) -> Self {
        coeffs.resize(cap + 1, C::zero());
        TruncatedSeries { coeffs }
    }

    pub fn zero(cap: usize) -> Self {
        Self::new(Vec::new(), cap)
    }

    pub fn constant(c: C, cap: usize) -> Self {
        Self::new(vec![c], cap)
    }

    pub fn one(cap: usize) -> Self {
        Self::constant(C::one(), cap)
    }

    /// `c·z^k`, or the zero series when `k > cap`.
    pub fn monomial(k: usize, c: C, cap: usize) -> Self {
        let mut s = Self::zero(cap);
        if k <= cap {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mode(&self) -> ArithmeticMode {
        C::MODE
    }

    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C> {
        self.coeffs
    }

    fn check_cap(&self, other: &Self) -> Result<(), SeriesError> {
        if self.cap() != other.cap() {
            return Err(SeriesError::CapMismatch(self.cap(), other.cap()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_cap(other)?;
        Ok(TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_cap(other)?;
        Ok(TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.sub(b)).collect(),
        })
    }

    pub fn scale(&self, c: &C) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect() }
    }

    /// Cauchy product truncated at the common cap.
    pub fn multiply(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_cap(other)?;
        let n = self.cap();
        let mut out = vec![C::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        Ok(TruncatedSeries { coeffs: out })
    }

    /// Multiplies by `z`, dropping the top coefficient.
    pub fn shift_up(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        coeffs.push(C::zero());
        coeffs.extend_from_slice(&self.coeffs[..self.cap()]);
        TruncatedSeries { coeffs }
    }

    /// `exp(a)` through `n·b_n = Σ_k k·a_k·b_{n−k}`.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstant);
        }
        let n = self.cap();
        let mut b = vec![C::zero(); n + 1];
        b[0] = C::one();
        let ka: Vec<C> = (0..=n).map(|k| self.coeffs[k].mul(&C::from_ratio(k as i64, 1))).collect();
        for m in 1..=n {
            let mut acc = C::zero();
            for k in 1..=m {
                if !ka[k].is_zero() && !b[m - k].is_zero() {
                    acc = acc.add(&ka[k].mul(&b[m - k]));
                }
            }
            b[m] = acc.div(&C::from_ratio(m as i64, 1));
        }
        Ok(TruncatedSeries { coeffs: b })
    }

    /// `1/(1 − a)` for a series without constant term.
    pub fn geometric(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstant);
        }
        let n = self.cap();
        let mut b = vec![C::zero(); n + 1];
        b[0] = C::one();
        for m in 1..=n {
            let mut acc = C::zero();
            for k in 1..=m {
                if !self.coeffs[k].is_zero() && !b[m - k].is_zero() {
                    acc = acc.add(&self.coeffs[k].mul(&b[m - k]));
                }
            }
            b[m] = acc;
        }
        Ok(TruncatedSeries { coeffs: b })
    }

    /// `a(z^k)`.
    pub fn substitute_power(&self, k: usize) -> Self {
        assert!(k >= 1, "substitute_power needs k >= 1");
        let n = self.cap();
        let mut out = vec![C::zero(); n + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            match j.checked_mul(k) {
                Some(p) if p <= n => out[p] = c.clone(),
                _ => break,
            }
        }
        TruncatedSeries { coeffs: out }
    }

    pub fn to_f64(&self) -> TruncatedSeries<f64> {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c.to_f64()).collect() }
    }

    /// gcd of `{n − 1 : [z^n] > 0}`, i.e. the lattice the sizes live on.
    pub fn span(&self) -> usize {
        let mut g = 0usize;
        for (n, c) in self.coeffs.iter().enumerate().skip(1) {
            if !c.is_zero() {
                g = gcd(g, n - 1);
            }
        }
        g.max(1)
    }
}

pub fn series_multiply<C: Coefficient>(
    a: &TruncatedSeries<C>,
    b: &TruncatedSeries<C>,
) -> Result<TruncatedSeries<C>, SeriesError> {
    a.multiply(b)
}

pub fn series_exp<C: Coefficient>(a: &TruncatedSeries<C>) -> Result<TruncatedSeries<C>, SeriesError> {
    a.exp()
}

pub fn substitute_power<C: Coefficient>(a: &TruncatedSeries<C>, k: usize) -> TruncatedSeries<C> {
    a.substitute_power(k)
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Lowest degree kept for every level of a [`PowerTower`].
pub const TOWER_MIN_DEGREE: usize = 32;

/// `Ã_e` for e = 1, 2, …: the tree series for the weights κ^e, which enters
/// the cycle index as `s_e = Ã_e(z^e)`. Level e is kept to degree
/// `max(cap/e, TOWER_MIN_DEGREE)`; for species with 0/1 weights every level
/// is the base series.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTower<C: Coefficient> {
    levels: Vec<TruncatedSeries<C>>,
}

impl<C: Coefficient> PowerTower<C> {
    pub fn base(&self) -> &TruncatedSeries<C> {
        &self.levels[0]
    }

    pub fn into_base(self) -> TruncatedSeries<C> {
        self.levels.into_iter().next().expect("nonempty")
    }

    /// Number of stored levels; 1 when the species is power-stable.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn is_stable(&self) -> bool {
        self.levels.len() == 1
    }

    /// `Ã_e` if stored.
    pub fn level(&self, e: usize) -> Option<&TruncatedSeries<C>> {
        if self.is_stable() {
            self.levels.first()
        } else {
            self.levels.get(e.wrapping_sub(1))
        }
    }

    /// `[z^t]Ã_e`; beyond the stored levels only the single vertex counts.
    pub fn coeff(&self, e: usize, t: usize) -> C {
        match self.level(e) {
            Some(l) => l.coeff(t),
            None if t == 1 => pow_c(&self.levels[0].coeff(1), e),
            None => C::zero(),
        }
    }

    /// Largest t with a stored `[z^t]Ã_e`.
    pub fn degree(&self, e: usize) -> usize {
        self.level(e).map(|l| l.cap()).unwrap_or(1)
    }
}

impl PowerTower<f64> {
    /// `Ã_e(x^e)`.
    pub fn value(&self, e: usize, x: f64) -> f64 {
        match self.level(e) {
            Some(l) => eval_at_power(l.coeffs(), x, e),
            None => (self.levels[0].coeff(1) * x).powi(e as i32),
        }
    }
}

fn pow_c<C: Coefficient>(c: &C, e: usize) -> C {
    let mut r = C::one();
    for _ in 0..e {
        r = r.mul(c);
    }
    r
}

/// Solves `a = z·Z(a, args₂, args₃, …)` to degree n; `arg(i)` supplies s_i.
fn solve_level<C: Coefficient>(
    species: &Species,
    n: usize,
    arg: impl Fn(usize, &TruncatedSeries<C>) -> TruncatedSeries<C>,
) -> Result<TruncatedSeries<C>, SeriesError>
where
    TruncatedSeries<C>: CycleRing,
{
    let mut a = TruncatedSeries::<C>::zero(n);
    // Pass p determines [z^{p+1}]: the arguments s_i, i >= 2, only use
    // lower coefficients and a(z) enters z·Z shifted by one.
    for _ in 0..n {
        let args: Vec<TruncatedSeries<C>> = (1..=n).map(|i| if i == 1 { a.clone() } else { arg(i, &a) }).collect();
        let z = species.eval_cycle_index(&args)?;
        a = z.shift_up();
    }
    Ok(a)
}

fn solve_generic<C: Coefficient>(species: &Species, cap: usize) -> Result<PowerTower<C>, SeriesError>
where
    TruncatedSeries<C>: CycleRing,
{
    species.validate().map_err(|e| SeriesError::InvalidSpecies(e.to_string()))?;
    if species.is_power_stable() {
        let a = solve_level(species, cap, |i, a| a.substitute_power(i))?;
        return Ok(PowerTower { levels: vec![a] });
    }
    let depth = cap.max(1);
    let degree = |e: usize| (cap / e).max(TOWER_MIN_DEGREE.min(cap)).max(1);
    let mut levels: Vec<Option<TruncatedSeries<C>>> = vec![None; depth + 1];
    let single = species.weight_power(1).eval_cycle_index(&vec![TruncatedSeries::<C>::zero(0); species.max_cycle_len().max(1)])?;
    let kappa0 = single.coeff(0);
    for e in (1..=depth).rev() {
        let sp = species.weight_power(e as u32);
        let n = degree(e);
        let a = solve_level(&sp, n, |i, _| {
            let mut c = vec![C::zero(); n + 1];
            match levels.get(e * i).and_then(|l| l.as_ref()) {
                Some(l) => {
                    for (t, v) in l.coeffs().iter().enumerate() {
                        if t * i > n {
                            break;
                        }
                        c[t * i] = v.clone();
                    }
                }
                None if i <= n => c[i] = pow_c(&kappa0, e * i),
                None => {}
            }
            TruncatedSeries::new(c, n)
        })?;
        levels[e] = Some(a);
    }
    Ok(PowerTower { levels: levels.into_iter().skip(1).map(|l| l.expect("filled")).collect() })
}

/// Float coefficients of the solution `Ã = z·Z_R(Ã₁(z), Ã₂(z²), …)`.
pub fn solve_enriched_fixed_point(species: &Species, cap: usize) -> Result<TruncatedSeries<f64>, SeriesError> {
    Ok(solve_generic::<f64>(species, cap)?.into_base())
}

/// Same fixed point in exact rational arithmetic.
pub fn solve_enriched_fixed_point_exact(
    species: &Species,
    cap: usize,
) -> Result<TruncatedSeries<BigRational>, SeriesError> {
    Ok(solve_generic::<BigRational>(species, cap)?.into_base())
}

/// The fixed point together with the series for the powered weights.
pub fn solve_power_tower(species: &Species, cap: usize) -> Result<PowerTower<f64>, SeriesError> {
    solve_generic::<f64>(species, cap)
}

pub fn solve_power_tower_exact(species: &Species, cap: usize) -> Result<PowerTower<BigRational>, SeriesError> {
    solve_generic::<BigRational>(species, cap)
}

/// Position of the singularity together with the moments of the
/// fixpoint-offspring law ξ and the fringe mass ζ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct CriticalityReport {
    pub rho: f64,
    pub A_rho: f64,
    pub Exi: f64,
    pub Vxi: f64,
    pub Ezeta: f64,
    pub Vzeta: f64,
    pub mu: f64,
    pub span: usize,
    pub degree_cap: usize,
    pub fixed_point_residual: f64,
    pub criticality_residual: f64,
    pub ratio_estimate: f64,
    pub iteration_gap: f64,
    pub plethysm_cap: usize,
}

impl CriticalityReport {
    /// E[ξ̂] for the fixpoint-size-biased law, E[ξ²]/E[ξ].
    pub fn exi_hat(&self) -> f64 {
        (self.Vxi + self.Exi * self.Exi) / self.Exi
    }
}

/// Evaluates `Ã(x^j)` from float coefficients.
pub fn eval_at_power(coeffs: &[f64], x: f64, j: usize) -> f64 {
    let y = x.powi(j as i32);
    let mut acc = 0.0;
    let mut p = 1.0;
    for c in coeffs {
        if p == 0.0 {
            break;
        }
        acc += c * p;
        p *= y;
    }
    acc
}

/// Plethystic cap: smallest i with `a₁·x^i < 1e-12·Ã(x)`.
pub fn plethysm_cap(a1: f64, x: f64, a_x: f64) -> usize {
    let mut i = 1usize;
    while a1 * x.powi(i as i32) >= 1e-12 * a_x && i < 4096 {
        i += 1;
    }
    i
}

pub(crate) struct ScalarEnvironment<'a> {
    species: &'a Species,
    tower: &'a PowerTower<f64>,
    cache: std::cell::RefCell<Option<(f64, Vec<f64>)>>,
}

impl<'a> ScalarEnvironment<'a> {
    pub(crate) fn new(species: &'a Species, tower: &'a PowerTower<f64>) -> Self {
        ScalarEnvironment { species, tower, cache: std::cell::RefCell::new(None) }
    }

    /// Arguments `(u, Ã(x²), Ã(x³), …)` long enough for every entry.
    pub(crate) fn args(&self, x: f64, u: f64) -> Vec<f64> {
        let mut cache = self.cache.borrow_mut();
        if let Some((cx, args)) = cache.as_ref() {
            if *cx == x {
                let mut a = args.clone();
                a[0] = u;
                return a;
            }
        }
        let a1 = self.tower.base().coeff(1).max(1e-300);
        let imax = plethysm_cap(a1, x, a1 * x);
        let len = imax * self.species.max_cycle_len();
        let mut args = Vec::with_capacity(len);
        args.push(u);
        for j in 2..=len {
            args.push(self.tower.value(j, x));
        }
        *cache = Some((x, args.clone()));
        args
    }

    /// `(E, E_u, E_uu)` at `(x, u)` where `E = x·Z_R(u, Ã(x²), …)`.
    pub(crate) fn e_derivs(&self, x: f64, u: f64) -> Result<[f64; 3], EvalError> {
        let args = self.args(x, u);
        let [z, z1, z11] = self.species.eval_s1_derivatives(&args)?;
        Ok([x * z, x * z1, x * z11])
    }

    /// Solves `E_u(x, u) = 1` for u and returns `(u*, E(x,u*) − u*)`.
    fn tangency(&self, x: f64) -> Result<(f64, f64), SeriesError> {
        let f = |u: f64| -> Result<f64, EvalError> { Ok(self.e_derivs(x, u)?[1] - 1.0) };
        let sup = self.species.s1_domain_sup();
        let mut lo = 0.0;
        let mut hi;
        if f(0.0)? >= 0.0 {
            let e = self.e_derivs(x, 0.0)?;
            return Ok((0.0, e[0]));
        }
        match sup {
            Some(d) => {
                let mut k = 1;
                loop {
                    hi = d * (1.0 - 0.5f64.powi(k));
                    match f(hi) {
                        Ok(v) if v > 0.0 => break,
                        _ => {}
                    }
                    lo = hi;
                    k += 1;
                    if k > 60 {
                        return Err(SeriesError::NoConvergence("E_u never reaches 1 below the domain edge".into()));
                    }
                }
            }
            None => {
                hi = 1.0;
                loop {
                    match f(hi) {
                        Ok(v) if v > 0.0 => break,
                        Ok(_) => {}
                        Err(e) => return Err(e.into()),
                    }
                    lo = hi;
                    hi *= 2.0;
                    if hi > 1e8 {
                        return Err(SeriesError::NoConvergence("E_u bounded below 1".into()));
                    }
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        let e = self.e_derivs(x, u)?;
        Ok((u, e[0] - u))
    }
}

/// Locates ρ and the moments of ξ and ζ, see [`CriticalityReport`].
pub fn estimate_rho(species: &Species, cap: usize, tol: f64) -> Result<CriticalityReport, SeriesError> {
    let tower = solve_power_tower(species, cap)?;
    estimate_rho_from(species, &tower, tol)
}

pub fn estimate_rho_from(
    species: &Species,
    tower: &PowerTower<f64>,
    tol: f64,
) -> Result<CriticalityReport, SeriesError> {
    let series = tower.base();
    let coeffs = series.coeffs();
    let cap = series.cap();
    let span = series.span();
    let env = ScalarEnvironment::new(species, tower);

    let top = (1..=cap).rev().find(|&n| coeffs[n] > 0.0 && n > span && coeffs[n - span] > 0.0);
    let ratio_estimate = match top {
        Some(n) => (coeffs[n - span] / coeffs[n]).powf(1.0 / span as f64),
        None => return Err(SeriesError::InvalidSpecies("too few nonzero coefficients".into())),
    };

    let sign = |x: f64| -> Result<f64, SeriesError> { Ok(env.tangency(x)?.1) };
    let mut lo = 0.5 * ratio_estimate;
    let mut hi = (1.2 * ratio_estimate).min(0.999 * ratio_estimate.sqrt());
    let mut guard = 0;
    while sign(lo)? >= 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 60 {
            return Err(SeriesError::NoConvergence("no subcritical lower bracket".into()));
        }
    }
    guard = 0;
    while sign(hi)? <= 0.0 {
        hi = 0.5 * (hi + ratio_estimate.sqrt());
        guard += 1;
        if guard > 60 {
            return Err(SeriesError::NoConvergence("no supercritical upper bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < 1e-16 {
            break;
        }
        if sign(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi - lo > RHO_TOLERANCE {
        return Err(SeriesError::NoConvergence(format!("bracket width {:e}", hi - lo)));
    }
    let rho = lo;
    let (a_rho, gap) = env.tangency(rho)?;
    let [e, e_u, e_uu] = env.e_derivs(rho, a_rho)?;
    let criticality_residual = (e_u - 1.0).abs();
    if criticality_residual > tol {
        return Err(SeriesError::ToleranceUnreachable { residual: criticality_residual, tol, cap });
    }

    let mut u = 0.0;
    for _ in 0..200_000 {
        let next = env.e_derivs(rho, u)?[0];
        if (next - u).abs() < 1e-15 {
            u = next;
            break;
        }
        u = next;
    }

    let zeta = zeta_distribution(species, tower, rho, a_rho, 256)?;
    let (ez, vz) = moments(&zeta);
    let a1 = coeffs.get(1).copied().unwrap_or(0.0);
    Ok(CriticalityReport {
        rho,
        A_rho: a_rho,
        Exi: e_u,
        Vxi: e_uu * a_rho,
        Ezeta: ez,
        Vzeta: vz,
        mu: 1.0 / (1.0 + ez),
        span,
        degree_cap: cap,
        fixed_point_residual: gap.abs().max((e - a_rho).abs()),
        criticality_residual,
        ratio_estimate,
        iteration_gap: (u - a_rho).abs(),
        plethysm_cap: plethysm_cap(a1.max(1e-300), rho, a_rho),
    })
}

/// Point probabilities of ζ from `E[z^ζ] = Z_R(Ã(ρ), Ã₂(ρ²z²), …)·ρ/Ã(ρ)`.
pub fn zeta_distribution(
    species: &Species,
    tower: &PowerTower<f64>,
    rho: f64,
    a_rho: f64,
    len: usize,
) -> Result<Vec<f64>, SeriesError> {
    let mut args = Vec::with_capacity(len);
    args.push(TruncatedSeries::constant(a_rho, len));
    for j in 2..=len {
        let mut c = vec![0.0; len + 1];
        let rj = rho.powi(j as i32);
        let mut p = 1.0;
        for t in 0..=tower.degree(j) {
            if t * j > len {
                break;
            }
            c[t * j] = tower.coeff(j, t) * p;
            p *= rj;
        }
        args.push(TruncatedSeries::new(c, len));
    }
    let z = species.eval_cycle_index(&args)?;
    Ok(z.coeffs().iter().map(|c| c * rho / a_rho).collect())
}

/// Mean and variance of a point-probability vector.
pub fn moments(p: &[f64]) -> (f64, f64) {
    let m: f64 = p.iter().enumerate().map(|(j, q)| j as f64 * q).sum();
    let m2: f64 = p.iter().enumerate().map(|(j, q)| (j * j) as f64 * q).sum();
    (m, m2 - m * m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64], cap: usize) -> TruncatedSeries<f64> {
        TruncatedSeries::new(v.to_vec(), cap)
    }

    #[test]
    fn monomial_product() {
        let z = TruncatedSeries::monomial(1, 1.0, 4);
        assert_eq!(z.multiply(&z).unwrap().coeffs(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn binomial_square() {
        let a = s(&[1.0, 1.0], 2);
        assert_eq!(a.multiply(&a).unwrap().coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn cap_mismatch_is_an_error() {
        let a = TruncatedSeries::<f64>::one(2);
        let b = TruncatedSeries::<f64>::one(3);
        assert_eq!(a.multiply(&b), Err(SeriesError::CapMismatch(2, 3)));
    }

    #[test]
    fn exp_taylor() {
        let z = TruncatedSeries::<BigRational>::monomial(1, <BigRational as One>::one(), 3);
        let e = z.exp().unwrap();
        let want: Vec<BigRational> = [(1, 1), (1, 1), (1, 2), (1, 6)]
            .iter()
            .map(|&(p, q)| BigRational::from_ratio(p, q))
            .collect();
        assert_eq!(e.coeffs(), &want[..]);
        assert_eq!(TruncatedSeries::<f64>::zero(3).exp().unwrap(), TruncatedSeries::one(3));
    }

    #[test]
    fn exp_rejects_constant() {
        assert_eq!(TruncatedSeries::<f64>::one(3).exp(), Err(SeriesError::NonzeroConstant));
    }

    #[test]
    fn substitute_power_examples() {
        let z = TruncatedSeries::<f64>::monomial(1, 1.0, 4);
        assert_eq!(z.substitute_power(2), TruncatedSeries::monomial(2, 1.0, 4));
        let a = s(&[0.0, 1.0, 1.0], 6);
        assert_eq!(a.substitute_power(3).coeffs(), &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(a.substitute_power(1), a);
        let b = s(&[0.0, 1.0, 2.0, 3.0], 30);
        assert_eq!(b.substitute_power(2).substitute_power(3), b.substitute_power(6));
    }

    #[test]
    fn ratio_conversion_of_huge_values() {
        let big = BigRational::new(BigInt::from(3).pow(900), BigInt::from(2).pow(800));
        let want = 900.0 * 3f64.ln() - 800.0 * 2f64.ln();
        assert!((ratio_to_f64(&big).ln() - want).abs() < 1e-9);
    }

    #[test]
    fn span_of_odd_support() {
        let a = s(&[0.0, 1.0, 0.0, 1.0, 0.0, 2.0], 5);
        assert_eq!(a.span(), 2);
    }
}
