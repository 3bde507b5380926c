//! Estimators and checks: censuses, total variation, chi-square, moments,
//! fixpoint CLT and diameter scaling.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::metrics::DiameterHeight;
use crate::samplers::LimitSample;
use crate::symmetry::{NodeId, SymEnrichedTree};

/// Code used when a random vertex has fewer than k fixpoint ancestors.
pub const SHALLOW: &str = "◇";

/// Empirical distribution over codes.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Census {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl Census {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, code: String) {
        *self.counts.entry(code).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: Census) {
        for (c, k) in other.counts {
            *self.counts.entry(c).or_insert(0) += k;
        }
        self.total += other.total;
    }

    pub fn prob(&self, code: &str) -> f64 {
        self.counts.get(code).map_or(0.0, |&k| k as f64 / self.total as f64)
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }
}

impl FromIterator<String> for Census {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        let mut c = Census::new();
        for s in iter {
            c.add(s);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvEstimate {
    pub tv: f64,
    pub se: f64,
}

impl TvEstimate {
    /// TV − 2·SE.
    pub fn corrected(&self) -> f64 {
        self.tv - 2.0 * self.se
    }
}

/// Half L1 distance with SE = ½·√(Σ p̂(1−p̂)/N_p + q̂(1−q̂)/N_q).
pub fn tv_distance(p: &Census, q: &Census) -> TvEstimate {
    let np = p.total.max(1) as f64;
    let nq = q.total.max(1) as f64;
    let mut l1 = 0.0;
    let mut var = 0.0;
    for code in p.counts.keys().chain(q.counts.keys().filter(|c| !p.counts.contains_key(*c))) {
        let a = p.prob(code);
        let b = q.prob(code);
        l1 += (a - b).abs();
        var += a * (1.0 - a) / np + b * (1.0 - b) / nq;
    }
    TvEstimate { tv: 0.5 * l1, se: 0.5 * var.sqrt() }
}

/// TV between a census and an exact law.
pub fn tv_to_law(p: &Census, law: &BTreeMap<String, f64>) -> TvEstimate {
    let np = p.total.max(1) as f64;
    let mut l1 = 0.0;
    let mut var = 0.0;
    for (code, &b) in law {
        let a = p.prob(code);
        l1 += (a - b).abs();
        var += a * (1.0 - a) / np;
    }
    for (code, _) in p.counts.iter().filter(|(c, _)| !law.contains_key(*c)) {
        let a = p.prob(code);
        l1 += a;
        var += a * (1.0 - a) / np;
    }
    TvEstimate { tv: 0.5 * l1, se: 0.5 * var.sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

fn chi_p(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map(|c| c.sf(stat)).unwrap_or(0.0)
}

/// Goodness of fit against exact probabilities; an observed code outside
/// the law gives p = 0.
pub fn chi_square_gof(obs: &Census, law: &BTreeMap<String, f64>) -> ChiSquare {
    let n = obs.total as f64;
    if obs.counts.keys().any(|c| !law.contains_key(c)) {
        return ChiSquare { statistic: f64::INFINITY, df: law.len().saturating_sub(1), p_value: 0.0 };
    }
    let mut stat = 0.0;
    for (code, &p) in law {
        let e = n * p;
        let o = obs.counts.get(code).copied().unwrap_or(0) as f64;
        if e > 0.0 {
            stat += (o - e).powi(2) / e;
        }
    }
    let df = law.len().saturating_sub(1);
    ChiSquare { statistic: stat, df, p_value: chi_p(stat, df) }
}

/// Two-sample homogeneity test on the union of classes.
pub fn chi_square_two_sample(a: &Census, b: &Census) -> ChiSquare {
    let (na, nb) = (a.total as f64, b.total as f64);
    let mut stat = 0.0;
    let mut classes = 0usize;
    for code in a.counts.keys().chain(b.counts.keys().filter(|c| !a.counts.contains_key(*c))) {
        let oa = a.counts.get(code).copied().unwrap_or(0) as f64;
        let ob = b.counts.get(code).copied().unwrap_or(0) as f64;
        let pooled = (oa + ob) / (na + nb);
        let (ea, eb) = (na * pooled, nb * pooled);
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
        classes += 1;
    }
    let df = classes.saturating_sub(1);
    ChiSquare { statistic: stat, df, p_value: chi_p(stat, df) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
        Moments { count: xs.len(), mean, variance: m2 * n / (n - 1.0).max(1.0), skewness, excess_kurtosis }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub n: usize,
    pub samples: usize,
    pub mu: f64,
    pub mean_over_n: f64,
    pub relative_error: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// gcd of observed differences; 0 when all values agree.
    pub lattice: u64,
    pub deterministic: bool,
}

pub fn clt_check(fixpoints: &[u64], n: usize, mu: f64) -> CltReport {
    let xs: Vec<f64> = fixpoints.iter().map(|&f| f as f64).collect();
    let m = Moments::of(&xs);
    let first = fixpoints.first().copied().unwrap_or(0);
    let lattice = fixpoints.iter().fold(0u64, |g, &f| crate::powerseries::gcd(g as usize, f.abs_diff(first) as usize) as u64);
    CltReport {
        n,
        samples: fixpoints.len(),
        mu,
        mean_over_n: m.mean / n as f64,
        relative_error: (m.mean / n as f64 - mu).abs() / mu,
        skewness: m.skewness,
        excess_kurtosis: m.excess_kurtosis,
        lattice,
        deterministic: lattice == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub samples: usize,
    pub mean_d: f64,
    pub mean_h: f64,
    pub d_over_sqrt_n: f64,
    pub h_over_sqrt_n: f64,
    pub ratio: f64,
    pub tail_slope: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// |r_last/r_first − 1| for r = E[D]/√n.
    pub stabilization: f64,
}

/// Least-squares slope of ln P(D ≥ x) against x²/n over thresholds at or
/// above the median with at least 10 exceedances.
pub fn tail_slope(ds: &[f64], n: usize) -> f64 {
    let mut v = ds.to_vec();
    v.sort_by(f64::total_cmp);
    let total = v.len() as f64;
    let mut pts = Vec::new();
    let mut i = v.len() / 2;
    while i < v.len() {
        let x = v[i];
        let ge = (v.len() - i) as f64;
        if ge < 10.0 {
            break;
        }
        pts.push((x * x / n as f64, (ge / total).ln()));
        while i < v.len() && v[i] == x {
            i += 1;
        }
    }
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn diameter_scaling_report(rows: &[(usize, Vec<DiameterHeight>)]) -> ScalingReport {
    let rows: Vec<ScalingRow> = rows
        .iter()
        .map(|(n, dh)| {
            let ds: Vec<f64> = dh.iter().map(|x| x.diameter).collect();
            let hs: Vec<f64> = dh.iter().map(|x| x.height).collect();
            let mean_d = ds.iter().sum::<f64>() / ds.len() as f64;
            let mean_h = hs.iter().sum::<f64>() / hs.len() as f64;
            let s = (*n as f64).sqrt();
            ScalingRow {
                n: *n,
                samples: dh.len(),
                mean_d,
                mean_h,
                d_over_sqrt_n: mean_d / s,
                h_over_sqrt_n: mean_h / s,
                ratio: mean_d / mean_h,
                tail_slope: tail_slope(&ds, *n),
                exact: dh.iter().all(|x| x.exact),
            }
        })
        .collect();
    let stabilization = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => (b.d_over_sqrt_n / a.d_over_sqrt_n - 1.0).abs(),
        _ => f64::NAN,
    };
    ScalingReport { rows, stabilization }
}

/// Unordered shape below `top`, cut at relative depth `cap`, with the nodes
/// in `spine` marked.
fn marked_shape(t: &SymEnrichedTree, top: NodeId, spine: &[NodeId], cap: usize) -> String {
    fn rec(t: &SymEnrichedTree, v: NodeId, depth: usize, spine: &[NodeId], cap: usize) -> String {
        let mark = if spine.contains(&v) { "s" } else { "" };
        if depth >= cap {
            return format!("({mark})");
        }
        let mut kids = Vec::new();
        for c in &t.node(v).children {
            let code = rec(t, c.node, depth + 1, spine, cap);
            for _ in 1..c.len {
                kids.push(code.clone());
            }
            kids.push(code);
        }
        kids.sort_unstable();
        format!("({mark}{})", kids.concat())
    }
    rec(t, top, 0, spine, cap)
}

/// Census code of a trimmed Ĥ_k sample.
pub fn hhat_limit_code(s: &LimitSample, k: usize) -> String {
    let (_, depth) = s.marked.expect("Ĥ samples carry a marked point");
    format!("{}|{depth}", marked_shape(&s.tree, s.spine[0], &s.spine, 2 * k))
}

/// Same code around a uniform random vertex of a finite tree: v₀ is its
/// deepest fixpoint ancestor (or itself) and v_k the k-th ancestor of v₀.
pub fn hhat_tree_code<R: Rng + ?Sized>(t: &SymEnrichedTree, k: usize, rng: &mut R) -> String {
    let mut path = vec![t.root()];
    let mut fixed = 0usize;
    let mut all_fixed = true;
    let mut v = t.root();
    loop {
        let mut r = rng.random_range(0..t.subtree_size(v));
        if r == 0 {
            break;
        }
        r -= 1;
        let mut next = None;
        for c in &t.node(v).children {
            let w = c.len as u64 * t.subtree_size(c.node);
            if r < w {
                next = Some(*c);
                break;
            }
            r -= w;
        }
        let c = next.expect("sizes add up");
        v = c.node;
        path.push(v);
        if all_fixed && c.len == 1 {
            fixed = path.len() - 1;
        } else {
            all_fixed = false;
        }
    }
    if fixed < k {
        return SHALLOW.to_string();
    }
    let spine = &path[fixed - k..=fixed];
    format!("{}|{}", marked_shape(t, spine[0], spine, 2 * k), path.len() - 1 - fixed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn census(codes: &[&str]) -> Census {
        codes.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tv_extremes() {
        let a = census(&["x", "y", "x", "y"]);
        assert_eq!(tv_distance(&a, &a).tv, 0.0);
        let b = census(&["z", "w"]);
        assert_eq!(tv_distance(&a, &b).tv, 1.0);
    }

    #[test]
    fn tv_triangle_inequality() {
        let a = census(&["x", "y", "y", "z"]);
        let b = census(&["x", "x", "w"]);
        let c = census(&["y", "w", "w", "z", "z"]);
        let (ab, bc, ac) = (tv_distance(&a, &b).tv, tv_distance(&b, &c).tv, tv_distance(&a, &c).tv);
        assert!(ac <= ab + bc + 1e-15);
        assert!((ab - tv_distance(&b, &a).tv).abs() < 1e-15);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let obs = census(&["a", "b", "a", "b"]);
        let law: BTreeMap<String, f64> = [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into_iter().collect();
        let c = chi_square_gof(&obs, &law);
        assert_eq!(c.statistic, 0.0);
        assert!((c.p_value - 1.0).abs() < 1e-12);
        assert_eq!(chi_square_gof(&census(&["c"]), &law).p_value, 0.0);
    }

    #[test]
    fn moments_of_symmetric_data() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(m.mean, 3.0);
        assert_eq!(m.variance, 2.5);
        assert!(m.skewness.abs() < 1e-15);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn deterministic_fixpoints_are_flagged() {
        let r = clt_check(&[10, 10, 10], 10, 1.0);
        assert!(r.deterministic);
        assert_eq!(r.relative_error, 0.0);
        assert_eq!(clt_check(&[10, 12, 16], 20, 0.5).lattice, 2);
    }

    #[test]
    fn tail_slope_of_gaussian_like_tail() {
        // P(D ≥ x) = exp(−x²/n) sampled by inversion
        let n = 100;
        let ds: Vec<f64> = (1..10000).map(|i| ((n as f64) * -(i as f64 / 10000.0).ln()).sqrt().floor()).collect();
        assert!(tail_slope(&ds, n) < 0.0);
    }
}
