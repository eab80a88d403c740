//! Concave moduli of continuity and the `ω / V` regime test.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::RegVaryingFn;
use crate::roots::{self, Bracket};

pub type ModulusClosure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Descriptor {
    AlphaBeta { alpha: f64, beta: f64 },
    LogK { k: f64 },
    Composite(Arc<Modulus>, Arc<Modulus>),
    Custom { name: String, f: ModulusClosure },
}

impl fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl Descriptor {
    pub fn label(&self) -> String {
        match self {
            Descriptor::AlphaBeta { alpha, beta } => format!("alpha-beta(alpha={alpha}, beta={beta})"),
            Descriptor::LogK { k } => format!("log-k(k={k})"),
            Descriptor::Composite(a, b) => format!("({})∘({})", a.descriptor.label(), b.descriptor.label()),
            Descriptor::Custom { name, .. } => name.clone(),
        }
    }
}

/// A modulus of continuity `ω : [0, ∞) → [0, ∞)`.
///
/// `h0` is the point above which the closed-form expression is replaced by a
/// concave continuation (constant for `ω_{α,β}`, linear for `ω_k`).
#[derive(Debug, Clone)]
pub struct Modulus {
    pub descriptor: Descriptor,
    pub h0: Option<f64>,
}

fn alpha_beta_raw(h: f64, alpha: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        h.powf(alpha)
    } else {
        h.powf(alpha) * (-h.ln()).powf(-beta)
    }
}

fn log_k_raw(h: f64, k: f64) -> f64 {
    h * (k * (-h.ln()) + 1.0)
}

impl Modulus {
    pub fn custom(name: impl Into<String>, f: ModulusClosure) -> Self {
        Modulus { descriptor: Descriptor::Custom { name: name.into(), f }, h0: None }
    }

    pub fn compose(outer: &Modulus, inner: &Modulus) -> Self {
        Modulus {
            descriptor: Descriptor::Composite(Arc::new(outer.clone()), Arc::new(inner.clone())),
            h0: None,
        }
    }

    pub fn eval(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        match &self.descriptor {
            Descriptor::AlphaBeta { alpha, beta } => {
                let h0 = self.h0.unwrap_or(1.0);
                alpha_beta_raw(h.min(h0), *alpha, *beta)
            }
            Descriptor::LogK { k } => {
                let h0 = self.h0.unwrap_or(1.0);
                if h <= h0 {
                    log_k_raw(h, *k)
                } else {
                    let slope = k * (-h0.ln()) + 1.0 - k;
                    log_k_raw(h0, *k) + slope * (h - h0)
                }
            }
            Descriptor::Composite(a, b) => a.eval(b.eval(h)),
            Descriptor::Custom { f, .. } => f(h),
        }
    }

    pub fn label(&self) -> String {
        self.descriptor.label()
    }
}

/// Sign of the second derivative of `h^α (-ln h)^(-β)` as a polynomial in `u = -ln h`
/// (positive factor removed).
fn alpha_beta_curvature(u: f64, alpha: f64, beta: f64) -> f64 {
    alpha * (alpha - 1.0) * u * u + beta * (2.0 * alpha - 1.0) * u + beta * (beta + 1.0)
}

const H0_SCAN_POINTS: usize = 10_000;
const H0_SCAN_T_MAX: f64 = 700.0;

/// `ω_{α,β}(h) = h^α (-log h)^(-β)` on `(0, h0]`, constant above.
pub fn make_omega_alpha_beta(alpha: f64, beta: f64) -> Result<Modulus> {
    if alpha == 0.0 && beta == 0.0 {
        return Err(Error::InvalidParameter(
            "alpha = beta = 0 gives an identically-shaped degenerate modulus".into(),
        ));
    }
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be >= 0")));
    }
    if beta == 0.0 && !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1] when beta = 0")));
    }
    if beta > 0.0 && !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in [0, 1) when beta > 0")));
    }
    let h0 = if beta == 0.0 { 1.0 } else { alpha_beta_h0(alpha, beta)? };
    Ok(Modulus { descriptor: Descriptor::AlphaBeta { alpha, beta }, h0: Some(h0) })
}

/// Scans second differences on a grid uniform in `t = -ln h`, from the
/// smallest `h` upwards, and stops at the first convex triple. The switch
/// point inside the last cell is then refined on the analytic curvature.
pub(crate) fn alpha_beta_h0(alpha: f64, beta: f64) -> Result<f64> {
    let dt = H0_SCAN_T_MAX / H0_SCAN_POINTS as f64;
    let g = |t: f64| alpha_beta_raw((-t).exp(), alpha, beta);
    let second_diff = |t: f64| {
        let (h_m, h, h_p) = ((-(t + dt)).exp(), (-t).exp(), (-(t - dt)).exp());
        let (g_m, g0, g_p) = (g(t + dt), g(t), g(t - dt));
        (g_p - g0) / (h_p - h) - (g0 - g_m) / (h - h_m)
    };
    let mut last_concave = None;
    let mut i = H0_SCAN_POINTS - 1;
    while i >= 1 {
        let t = i as f64 * dt;
        if second_diff(t) > 0.0 {
            break;
        }
        last_concave = Some(t);
        i -= 1;
    }
    let t_grid = last_concave.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "omega_(alpha={alpha}, beta={beta}) has no concave region above 1e-304"
        ))
    })?;
    if i == 0 {
        return Ok((-t_grid).exp());
    }
    let p = |u: f64| alpha_beta_curvature(u, alpha, beta);
    let lo = (t_grid - 2.0 * dt).max(1e-12);
    let hi = t_grid + dt;
    let u_star = if p(lo) > 0.0 && p(hi) <= 0.0 {
        roots::bisect(p, Bracket::new(lo, hi))?
    } else {
        t_grid
    };
    Ok((-u_star).exp())
}

/// `ω_k(h) = h (k log(1/h) + 1)` up to where it stops increasing (or 1),
/// continued linearly with the slope at that point.
pub fn make_omega_log(k: f64) -> Result<Modulus> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("k = {k} must be > 0")));
    }
    let h0 = (-(k - 1.0) / k).exp().min(1.0);
    Ok(Modulus { descriptor: Descriptor::LogK { k }, h0: Some(h0) })
}

pub const SANDWICH_CHIS: [f64; 4] = [0.1, 0.5, 2.0, 10.0];
const CHECK_TOL: f64 = 1e-12;

/// One certification test: pass flag plus the smallest slack seen
/// (negative slack means a violation).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckLine {
    pub pass: bool,
    pub min_slack: f64,
    pub worst_at: f64,
}

impl CheckLine {
    fn new() -> Self {
        CheckLine { pass: true, min_slack: f64::INFINITY, worst_at: f64::NAN }
    }

    fn record(&mut self, slack: f64, at: f64) {
        if slack < self.min_slack {
            self.min_slack = slack;
            self.worst_at = at;
        }
        if slack < -CHECK_TOL {
            self.pass = false;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusReport {
    pub zero_at_zero: bool,
    pub monotone: CheckLine,
    pub concave: CheckLine,
    pub subadditive: CheckLine,
    pub sandwich: CheckLine,
}

impl ModulusReport {
    pub fn all_pass(&self) -> bool {
        self.zero_at_zero && self.monotone.pass && self.concave.pass && self.subadditive.pass && self.sandwich.pass
    }
}

pub fn check_modulus(omega: &Modulus, grid: &[f64]) -> Result<ModulusReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::GridNotIncreasing(i + 1));
    }
    let vals: Vec<f64> = grid.iter().map(|&h| omega.eval(h)).collect();
    let mut monotone = CheckLine::new();
    for i in 1..grid.len() {
        monotone.record(vals[i] - vals[i - 1], grid[i]);
    }
    let mut concave = CheckLine::new();
    for i in 1..grid.len().saturating_sub(1) {
        let (a, b, c) = (grid[i - 1], grid[i], grid[i + 1]);
        let t = (c - b) / (c - a);
        let chord = t * vals[i - 1] + (1.0 - t) * vals[i + 1];
        concave.record(vals[i] - chord, b);
    }
    let mut subadditive = CheckLine::new();
    let stride = (grid.len() / 64).max(1);
    for i in (0..grid.len()).step_by(stride) {
        for j in (i..grid.len()).step_by(stride) {
            let (a, b) = (grid[i], grid[j]);
            subadditive.record(vals[i] + vals[j] - omega.eval(a + b), a + b);
        }
    }
    let mut sandwich = CheckLine::new();
    for (i, &h) in grid.iter().enumerate() {
        if h <= 0.0 {
            continue;
        }
        for chi in SANDWICH_CHIS {
            let w = omega.eval(chi * h);
            sandwich.record(w - chi / (1.0 + chi) * vals[i], h);
            sandwich.record((chi + 1.0) * vals[i] - w, h);
        }
    }
    Ok(ModulusReport {
        zero_at_zero: omega.eval(0.0) == 0.0,
        monotone,
        concave,
        subadditive,
        sandwich,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeTag {
    /// `ω / V` bounded away from 0: no continuous sub-action in general.
    ObstructionRegime,
    /// `ω / V → 0`.
    VanishingRatio,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiminfReport {
    pub xs: Vec<f64>,
    pub ratios: Vec<f64>,
    pub tag: RegimeTag,
    pub truncated: bool,
}

/// Evaluates `ω(x)/V(x)` at `x_j = valid_radius · 10^(-j)` and classifies the trend.
///
/// The tag is a heuristic on the last three decades: non-decreasing or
/// within 20% of each other counts as bounded away from 0; a strictly
/// decreasing sequence that has lost half its maximum counts as vanishing.
pub fn liminf_ratio(omega: &Modulus, v: &RegVaryingFn, decades: usize) -> Result<LiminfReport> {
    if decades < 2 {
        return Err(Error::InvalidParameter(format!("decades = {decades} must be >= 2")));
    }
    let mut xs = Vec::new();
    let mut ratios = Vec::new();
    let mut truncated = false;
    for j in 0..=decades {
        let x = v.valid_radius() * 10f64.powi(-(j as i32));
        let vx = v.eval(x);
        let r = omega.eval(x) / vx;
        if !(vx > 0.0) || !r.is_finite() {
            truncated = true;
            break;
        }
        xs.push(x);
        ratios.push(r);
    }
    let tag = if truncated || ratios.len() < 3 { RegimeTag::Inconclusive } else { classify(&ratios) };
    Ok(LiminfReport { xs, ratios, tag, truncated })
}

fn classify(r: &[f64]) -> RegimeTag {
    let n = r.len();
    let last3 = &r[n - 3..];
    if last3.windows(2).all(|w| w[1] >= w[0]) {
        return RegimeTag::ObstructionRegime;
    }
    let max = r.iter().cloned().fold(f64::MIN, f64::max);
    if r.windows(2).all(|w| w[1] < w[0]) && r[n - 1] < 0.5 * max {
        return RegimeTag::VanishingRatio;
    }
    let hi = last3.iter().cloned().fold(f64::MIN, f64::max);
    let lo = last3.iter().cloned().fold(f64::MAX, f64::min);
    if lo > 0.0 && hi <= 1.2 * lo {
        RegimeTag::ObstructionRegime
    } else {
        RegimeTag::Inconclusive
    }
}

/// Lower estimate of `|φ|_ω = sup |φ(x) - φ(y)| / ω(d(x, y))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub infinite: bool,
    pub pairs_checked: usize,
}

/// Maximum of the difference quotient over all adjacent pairs (after
/// sorting by `x`) and `random_pairs` uniformly drawn pairs.
pub fn modulus_norm(samples: &[(f64, f64)], omega: &Modulus, random_pairs: usize, seed: u64) -> Result<NormEstimate> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("modulus_norm needs at least 2 samples".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(i) = s.windows(2).position(|w| w[1].0 == w[0].0) {
        return Err(Error::GridNotIncreasing(i + 1));
    }
    let mut est = NormEstimate { value: 0.0, infinite: false, pairs_checked: 0 };
    let mut visit = |a: (f64, f64), b: (f64, f64)| {
        est.pairs_checked += 1;
        let diff = (a.1 - b.1).abs();
        let w = omega.eval((a.0 - b.0).abs());
        if w <= 0.0 {
            if diff > 0.0 {
                est.infinite = true;
            }
            return;
        }
        est.value = est.value.max(diff / w);
    };
    for w in s.windows(2) {
        visit(w[0], w[1]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random_pairs {
        let i = rng.gen_range(0..s.len());
        let j = rng.gen_range(0..s.len());
        if i != j {
            visit(s[i], s[j]);
        }
    }
    if est.infinite {
        est.value = f64::INFINITY;
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn log_grid(n: usize, lo: f64) -> Vec<f64> {
        (0..n).map(|i| lo * (1.0 / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn holder_examples() {
        let w = make_omega_alpha_beta(0.5, 0.0).unwrap();
        assert_eq!(w.h0, Some(1.0));
        assert_relative_eq!(w.eval(0.25), 0.5, max_relative = 1e-15);
        assert_relative_eq!(w.eval(0.04), 0.2, max_relative = 1e-15);
    }

    #[test]
    fn pure_log_modulus() {
        let w = make_omega_alpha_beta(0.0, 1.0).unwrap();
        // switch point of (-log h)^(-1) is exactly e^-2
        assert_relative_eq!(w.h0.unwrap(), (-2.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(w.eval((-2.0f64).exp()), 0.5, max_relative = 1e-12);
        assert_relative_eq!(w.eval((-5.0f64).exp()), 0.2, max_relative = 1e-14);
    }

    #[test]
    fn mixed_h0_matches_quadratic_root() {
        let w = make_omega_alpha_beta(0.8, 1.0).unwrap();
        // root of 0.8(0.8-1)u^2 + (2*0.8-1)u + 2
        let (a, b, c): (f64, f64, f64) = (-0.16, 0.6, 2.0);
        let u = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        assert_relative_eq!(w.h0.unwrap(), (-u).exp(), max_relative = 1e-10);
        // dense second differences confirm concavity below h0 only
        let h0 = w.h0.unwrap();
        let g = |h: f64| alpha_beta_raw(h, 0.8, 1.0);
        let sd = |h: f64| {
            let e = 1e-3 * h;
            g(h + e) - 2.0 * g(h) + g(h - e)
        };
        assert!(sd(0.5 * h0) < 0.0);
        assert!(sd(2.0 * h0) > 0.0);
    }

    #[test]
    fn log_k_examples() {
        let w = make_omega_log(1.0).unwrap();
        assert_relative_eq!(w.eval((-1.0f64).exp()), 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        let w2 = make_omega_log(2.0).unwrap();
        let oracle = 1e-3 * (2.0 * 1000f64.ln() + 1.0);
        assert_relative_eq!(w2.eval(1e-3), oracle, max_relative = 1e-14);
        assert_relative_eq!(oracle, 0.014815510557964274, max_relative = 1e-12);
        assert_eq!(w2.eval(0.0), 0.0);
    }

    #[test]
    fn degenerate_rejected() {
        let e = make_omega_alpha_beta(0.0, 0.0).unwrap_err();
        assert!(e.to_string().contains("degenerate"));
        assert!(make_omega_alpha_beta(1.0, 1.0).is_err());
        assert!(make_omega_log(0.0).is_err());
    }

    #[test]
    fn linear_and_convex() {
        let grid = log_grid(1000, 1e-6);
        let lin = Modulus::custom("h", Arc::new(|h| h));
        let rep = check_modulus(&lin, &grid).unwrap();
        assert!(rep.all_pass());
        assert!(rep.subadditive.min_slack.abs() < 1e-12);
        let sq = Modulus::custom("h^2", Arc::new(|h| h * h));
        let rep = check_modulus(&sq, &grid).unwrap();
        assert!(!rep.concave.pass);
    }

    #[test]
    fn constructed_moduli_certify() {
        let grid = log_grid(1000, 1e-12);
        let mods = vec![
            make_omega_alpha_beta(0.5, 0.0).unwrap(),
            make_omega_alpha_beta(0.3, 0.0).unwrap(),
            make_omega_alpha_beta(0.0, 1.0).unwrap(),
            make_omega_alpha_beta(0.8, 1.0).unwrap(),
            make_omega_alpha_beta(0.5, 2.0).unwrap(),
            make_omega_log(1.0).unwrap(),
            make_omega_log(0.5).unwrap(),
            make_omega_log(3.0).unwrap(),
        ];
        for w in &mods {
            let rep = check_modulus(w, &grid).unwrap();
            assert!(rep.all_pass(), "{}: {rep:?}", w.label());
        }
        let comp = Modulus::compose(&mods[0], &mods[5]);
        assert!(check_modulus(&comp, &grid).unwrap().all_pass());
    }

    #[test]
    fn liminf_examples() {
        let v = RegVaryingFn::power(0.5).unwrap();
        let same = make_omega_alpha_beta(0.5, 0.0).unwrap();
        let rep = liminf_ratio(&same, &v, 8).unwrap();
        assert_eq!(rep.tag, RegimeTag::ObstructionRegime);
        let faster = make_omega_alpha_beta(0.8, 0.0).unwrap();
        assert_eq!(liminf_ratio(&faster, &v, 8).unwrap().tag, RegimeTag::VanishingRatio);
        let slower = make_omega_alpha_beta(0.3, 0.0).unwrap();
        assert_eq!(liminf_ratio(&slower, &v, 8).unwrap().tag, RegimeTag::ObstructionRegime);
    }

    #[test]
    fn norm_examples() {
        let w = make_omega_alpha_beta(0.5, 0.0).unwrap();
        let flat: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 / 49.0, 3.0)).collect();
        assert_eq!(modulus_norm(&flat, &w, 100, 1).unwrap().value, 0.0);
        let own: Vec<(f64, f64)> = (0..50).map(|i| {
            let x = i as f64 / 49.0;
            (x, w.eval(x))
        }).collect();
        let est = modulus_norm(&own, &w, 500, 1).unwrap();
        assert!(est.value >= 1.0 - 1e-12 && est.value <= 1.0 + 1e-12);
    }
}
