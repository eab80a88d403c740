//! Neutral-branch orbits, time schedules and their counting estimates.
//!
//! For `T(x) = x(1 - V(x))` the orbit is forward, `w_{n+1} = T(w_n)`. For
//! `T(x) = x(1 + V(x))` it is the backward orbit along the neutral inverse
//! branch, `T(w_{n+1}) = w_n`. In both cases `w_n` decreases to 0 at the rate
//! `1 / (σ^{1/σ} b(n))`, where `b` inverts `x ↦ 1 / V(1/x)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{IntervalMap, Orientation, RegVaryingFn};

pub const DEFAULT_ORBIT_BUDGET: usize = 20_000_000;
pub const DEFAULT_C0_INFLATION: f64 = 0.05;

/// `b(n) = 1 / V^{-1}(1/n)`.
pub fn scale_b(v: &RegVaryingFn, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::ScaleUndefined(format!("n = {n} must be >= 1")));
    }
    let y = 1.0 / n;
    let vmax = v.eval(v.valid_radius());
    if y > vmax * (1.0 + 1e-14) {
        return Err(Error::ScaleUndefined(format!(
            "1/n = {y} exceeds V(valid_radius) = {vmax}; need n >= {}",
            1.0 / vmax
        )));
    }
    let x = v.inverse(y.min(vmax))?;
    Ok(1.0 / x)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScheduleParams {
    pub w0: f64,
    pub gamma_time: f64,
    pub k_max: usize,
    pub n1: usize,
    pub orbit_budget: usize,
    pub c0_inflation: f64,
}

impl ScheduleParams {
    pub fn new(w0: f64, gamma_time: f64, k_max: usize, n1: usize) -> Self {
        ScheduleParams {
            w0,
            gamma_time,
            k_max,
            n1,
            orbit_budget: DEFAULT_ORBIT_BUDGET,
            c0_inflation: DEFAULT_C0_INFLATION,
        }
    }
}

/// Per-pair constants needed for the two-sided bound on `d(w_i, w_j)`,
/// keyed by the smaller index so that head trims can be applied cheaply.
#[derive(Debug, Clone)]
struct PairConstants {
    i: Vec<usize>,
    need: Vec<f64>,
}

impl PairConstants {
    fn max_from(&self, n_start: usize) -> f64 {
        self.i
            .iter()
            .zip(&self.need)
            .filter(|(i, _)| **i >= n_start)
            .map(|(_, c)| *c)
            .fold(1.0, f64::max)
    }
}

/// Neutral orbit `w_0 > w_1 > ...` with the time subsequence `n_k`.
#[derive(Debug, Clone)]
pub struct WSchedule {
    pub map: IntervalMap,
    pub sigma: f64,
    pub gamma_time: f64,
    /// `w[n]` for `n = 0..=n_{k_max} + 1`.
    pub w: Vec<f64>,
    /// `times[k] = n_k`, with `n_0 = 0`.
    pub times: Vec<usize>,
    /// `b(n_k)`, NaN where `b` is undefined.
    pub b_times: Vec<f64>,
    pub c0: f64,
    pub c0_inflation: f64,
    /// First usable index `k`; larger than 1 after a head trim.
    pub k_start: usize,
    pair_constants: PairConstants,
}

pub fn time_sequence(n1: usize, gamma_time: f64, k_max: usize) -> Vec<usize> {
    let mut t = vec![0usize, n1];
    for k in 2..=k_max {
        let geo = (n1 as f64 * gamma_time.powi(-(k as i32 - 1))).round() as usize;
        t.push(geo.max(t[k - 1] + 1));
    }
    t
}

pub fn generate_schedule(map: &IntervalMap, params: ScheduleParams) -> Result<WSchedule> {
    let v = map.speed()?;
    let ScheduleParams { w0, gamma_time, k_max, n1, orbit_budget, c0_inflation } = params;
    if !(w0 > 0.0 && w0 < v.valid_radius()) {
        return Err(Error::InvalidParameter(format!(
            "w0 = {w0} must lie in (0, {})",
            v.valid_radius()
        )));
    }
    if !(gamma_time > 0.0 && gamma_time < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma_time = {gamma_time} must lie in (0, 1)")));
    }
    if k_max < 3 || n1 < 1 {
        return Err(Error::InvalidParameter(format!("need k_max >= 3 and n1 >= 1 (got {k_max}, {n1})")));
    }
    if !(c0_inflation >= 0.0) {
        return Err(Error::InvalidParameter(format!("c0_inflation = {c0_inflation} must be >= 0")));
    }
    let times = time_sequence(n1, gamma_time, k_max);
    let n_max = times[k_max];
    if n_max + 1 > orbit_budget {
        return Err(Error::OrbitBudget { requested: n_max + 1, budget: orbit_budget });
    }
    let w = neutral_orbit(map, w0, n_max + 1)?;
    let b_times: Vec<f64> = times
        .iter()
        .map(|&n| scale_b(v, n as f64).unwrap_or(f64::NAN))
        .collect();
    let sigma = v.sigma();
    let mut sched = WSchedule {
        map: map.clone(),
        sigma,
        gamma_time,
        w,
        times,
        b_times,
        c0: f64::NAN,
        c0_inflation,
        k_start: 1,
        pair_constants: PairConstants { i: vec![], need: vec![] },
    };
    sched.pair_constants = sched.sample_pair_constants()?;
    sched.c0 = sched.c0_for_trim(0);
    Ok(sched)
}

/// `len + 1` points of the neutral orbit starting at `w0`.
pub fn neutral_orbit(map: &IntervalMap, w0: f64, len: usize) -> Result<Vec<f64>> {
    let mut w = Vec::with_capacity(len + 1);
    w.push(w0);
    let mut x = w0;
    for n in 0..len {
        x = match map.orientation() {
            Orientation::TowardZero => map.neutral(x),
            Orientation::AwayFromZero => map.inverse_branch(0, x)?,
        };
        if !(x > 0.0) || x >= w[n] {
            return Err(Error::OrbitEscaped { iterate: n + 1, x });
        }
        w.push(x);
    }
    Ok(w)
}

fn log_spaced_indices(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if hi <= lo {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|j| (a + (b - a) * j as f64 / (count - 1).max(1) as f64).exp().round() as usize)
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

impl WSchedule {
    pub fn k_max(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n(&self, k: usize) -> usize {
        self.times[k]
    }

    pub fn w_at(&self, k: usize) -> f64 {
        self.w[self.times[k]]
    }

    pub fn speed(&self) -> &RegVaryingFn {
        self.map.speed().expect("schedule maps have a neutral branch")
    }

    pub fn orientation(&self) -> Orientation {
        self.map.orientation()
    }

    pub fn b(&self, n: usize) -> Result<f64> {
        scale_b(self.speed(), n as f64)
    }

    /// `n_k b(n_k)`.
    pub fn nb(&self, k: usize) -> f64 {
        self.times[k] as f64 * self.b_times[k]
    }

    /// `γ^{1 + 1/σ}`.
    pub fn gamma_pow(&self) -> f64 {
        self.gamma_time.powf(1.0 + 1.0 / self.sigma)
    }

    /// `σ^{1 + 1/σ}`.
    pub fn sigma_pow(&self) -> f64 {
        self.sigma.powf(1.0 + 1.0 / self.sigma)
    }

    /// `d(w_{n_a}, w_{n_b})`.
    pub fn dk(&self, a: usize, b: usize) -> f64 {
        (self.w_at(a) - self.w_at(b)).abs()
    }

    /// Smallest `n` at which `b` is defined.
    fn first_scaled_index(&self) -> usize {
        let vmax = self.speed().eval(self.speed().valid_radius());
        ((1.0 / vmax).ceil() as usize).max(1)
    }

    /// For each sampled pair `i < j` the constant needed on both sides of
    /// `(j-i) C^{-1} s / (j b(j)) ≤ d(w_i, w_j) ≤ (j-i) C s / (i b(i))`,
    /// `s = σ^{-(1+1/σ)}`.
    fn sample_pair_constants(&self) -> Result<PairConstants> {
        let hi = self.w.len() - 1;
        let lo = self.first_scaled_index().min(hi);
        let s = 1.0 / self.sigma_pow();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for &i in &log_spaced_indices(lo, hi - 1, 2000) {
            pairs.push((i, i + 1));
        }
        let coarse = log_spaced_indices(lo, hi, 200);
        for (a, &i) in coarse.iter().enumerate() {
            for &j in &coarse[a + 1..] {
                pairs.push((i, j));
            }
        }
        for k in 1..self.times.len() - 1 {
            if self.times[k] >= lo {
                pairs.push((self.times[k], self.times[k + 1]));
            }
        }
        let mut idx: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        idx.sort_unstable();
        idx.dedup();
        let v = self.speed();
        let bs: Vec<f64> = idx.par_iter().map(|&n| scale_b(v, n as f64)).collect::<Result<_>>()?;
        let b_of = |n: usize| bs[idx.binary_search(&n).unwrap()];
        let mut out = PairConstants { i: Vec::with_capacity(pairs.len()), need: Vec::with_capacity(pairs.len()) };
        for (i, j) in pairs {
            let d = self.w[i] - self.w[j];
            let m = (j - i) as f64;
            let lower = m * s / (j as f64 * b_of(j) * d);
            let upper = d * i as f64 * b_of(i) / (m * s);
            out.i.push(i);
            out.need.push(lower.max(upper));
        }
        Ok(out)
    }

    /// Empirical constant over pairs with both indices at or beyond `n_{1+trim}`,
    /// floored at 1 and inflated.
    pub fn c0_for_trim(&self, trim: usize) -> f64 {
        let n_start = self.times[(1 + trim).min(self.k_max())];
        self.pair_constants.max_from(n_start) * (1.0 + self.c0_inflation)
    }

    /// Copy with the first `trim` time indices dropped from all estimates.
    pub fn trimmed(&self, trim: usize) -> WSchedule {
        let mut s = self.clone();
        s.k_start = 1 + trim;
        s.c0 = self.c0_for_trim(trim);
        s
    }

    pub fn with_c0_inflation(&self, inflation: f64) -> WSchedule {
        let mut s = self.clone();
        s.c0_inflation = inflation;
        s.c0 = s.c0_for_trim(s.k_start - 1);
        s
    }

    /// `R_k = (1/(3C0³)) (n_{k-1}b_{k-1} / n_k b_k) d(w_{n_k}, w_{n_{k-1}})`.
    pub fn r(&self, k: usize) -> f64 {
        self.nb(k - 1) / self.nb(k) * self.dk(k, k - 1) / (3.0 * self.c0.powi(3))
    }

    pub fn constants(&self) -> LemmaConstants {
        LemmaConstants::new(self.c0, self.sigma, self.gamma_time)
    }

    /// `(n, w_n, b(n))` rows at the requested indices.
    pub fn orbit_rows(&self, ns: &[usize]) -> Vec<(usize, f64, f64)> {
        ns.iter()
            .filter(|&&n| n < self.w.len())
            .map(|&n| (n, self.w[n], self.b(n).unwrap_or(f64::NAN)))
            .collect()
    }

    /// `(k, n_k, w_{n_k}, d(w_{n_k}, w_{n_{k-1}}))` rows.
    pub fn time_rows(&self) -> Vec<(usize, usize, f64, f64)> {
        (1..=self.k_max())
            .map(|k| (k, self.times[k], self.w_at(k), self.dk(k, k - 1)))
            .collect()
    }
}

/// Constants of the counting lemma for a given `C0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaConstants {
    pub c1: f64,
    pub c1_prime: f64,
    pub c1_second: f64,
    pub c2: f64,
}

impl LemmaConstants {
    pub fn new(c0: f64, sigma: f64, gamma: f64) -> Self {
        let sp = sigma.powf(1.0 + 1.0 / sigma);
        let gp = gamma.powf(1.0 + 1.0 / sigma);
        let c1 = 0.25 * (1.0 / c0 - 1.0 / (c0 * c0)) * sp;
        let c1_prime = 0.5 * c1 / (c0.powf(sigma + 1.0) * sigma.powf((sigma + 1.0).powi(2) / sigma))
            * (1.0 - gamma).powf(sigma + 1.0)
            * gp;
        let c1_second = (sigma * gp / (2.0 * (1.0 - gamma) * c0)).powf(sigma);
        LemmaConstants { c1, c1_prime, c1_second, c2: c1_prime * c1_second }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointRow {
    pub n: usize,
    pub w_n: f64,
    pub b_n: f64,
    /// `w_n σ^{1/σ} b(n)`
    pub ratio_i: f64,
    /// `d(w_n, w_{n+1}) σ^{1+1/σ} n b(n)`
    pub ratio_ii: f64,
    /// `b^{-1}(1/w_n) / (n σ)`
    pub ratio_a: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeRow {
    pub k: usize,
    pub n_k: usize,
    /// `(n_k b(n_k)) / (n_{k+1} b(n_{k+1})) γ^{-(1+1/σ)}`
    pub ratio_iii: f64,
    /// `n_k / n_{k+1}`
    pub time_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub checkpoints: Vec<CheckpointRow>,
    pub times: Vec<TimeRow>,
}

pub fn asymptotic_report(sched: &WSchedule, checkpoints: &[usize]) -> Result<AsymptoticReport> {
    let sigma = sched.sigma;
    let v = sched.speed();
    let n_hi = sched.w.len() - 2;
    let rows = checkpoints
        .par_iter()
        .map(|&n| {
            if n < 1 || n > n_hi {
                return Err(Error::OutsideInterval { value: n as f64, lo: 1.0, hi: n_hi as f64 });
            }
            let b = sched.b(n)?;
            let w = sched.w[n];
            let d = w - sched.w[n + 1];
            Ok(CheckpointRow {
                n,
                w_n: w,
                b_n: b,
                ratio_i: w * sigma.powf(1.0 / sigma) * b,
                ratio_ii: d * sched.sigma_pow() * n as f64 * b,
                ratio_a: 1.0 / (v.eval(w) * n as f64 * sigma),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gp = sched.gamma_pow();
    let times = (sched.k_start..sched.k_max())
        .filter(|&k| sched.b_times[k].is_finite())
        .map(|k| TimeRow {
            k,
            n_k: sched.times[k],
            ratio_iii: sched.nb(k) / sched.nb(k + 1) / gp,
            time_ratio: sched.times[k] as f64 / sched.times[k + 1] as f64,
        })
        .collect();
    Ok(AsymptoticReport { checkpoints: rows, times })
}

#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    pub gamma_pow: f64,
    pub c0: f64,
    /// `γ^{1+1/σ} > 6/7`
    pub gate1: bool,
    /// `1 < C0² ≤ (7/6) γ^{1+1/σ}`
    pub gate2: bool,
    pub gate2_bound: f64,
    /// `½ γ^{1+1/σ} ≤ n_k b(n_k) / (n_{k+1} b(n_{k+1}))` for all usable `k`
    pub gate3: bool,
    pub gate3_min_ratio: f64,
    pub trim: usize,
    /// Smallest head trim for which all three gates pass, if any.
    pub recommended_trim: Option<usize>,
    pub c0_by_trim: Vec<f64>,
}

impl GateReport {
    pub fn all_pass(&self) -> bool {
        self.gate1 && self.gate2 && self.gate3
    }

    pub fn failing(&self) -> Vec<&'static str> {
        let mut out = vec![];
        if !self.gate1 {
            out.push("gamma^(1+1/sigma) > 6/7");
        }
        if !self.gate2 {
            out.push("1 < C0^2 <= (7/6) gamma^(1+1/sigma)");
        }
        if !self.gate3 {
            out.push("n_k b(n_k) / (n_{k+1} b(n_{k+1})) >= gamma^(1+1/sigma) / 2");
        }
        out
    }
}

fn gates_at(sched: &WSchedule, trim: usize) -> (f64, bool, bool, bool, f64) {
    let gp = sched.gamma_pow();
    let c0 = sched.c0_for_trim(trim);
    let g1 = gp > 6.0 / 7.0;
    let g2 = c0 * c0 > 1.0 && c0 * c0 <= 7.0 / 6.0 * gp;
    let min_ratio = (1 + trim..sched.k_max())
        .map(|k| sched.nb(k) / sched.nb(k + 1))
        .fold(f64::INFINITY, f64::min);
    let g3 = min_ratio.is_finite() && min_ratio >= 0.5 * gp;
    (c0, g1, g2, g3, min_ratio)
}

/// Gates for the schedule's current trim plus a search for the smallest
/// trim (leaving at least three indices) that passes all of them.
pub fn estimate_c0_and_gates(sched: &WSchedule) -> (f64, GateReport) {
    let trim = sched.k_start - 1;
    let (c0, gate1, gate2, gate3, gate3_min_ratio) = gates_at(sched, trim);
    let max_trim = sched.k_max().saturating_sub(3);
    let c0_by_trim: Vec<f64> = (0..=max_trim).map(|t| sched.c0_for_trim(t)).collect();
    let recommended_trim = (0..=max_trim).find(|&t| {
        let (_, a, b, c, _) = gates_at(sched, t);
        a && b && c
    });
    let gp = sched.gamma_pow();
    (
        c0,
        GateReport {
            gamma_pow: gp,
            c0,
            gate1,
            gate2,
            gate2_bound: 7.0 / 6.0 * gp,
            gate3,
            gate3_min_ratio,
            trim,
            recommended_trim,
            c0_by_trim,
        },
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub k: usize,
    pub z: f64,
    pub count: usize,
    pub r_k: f64,
    /// `d(w_{n_k}, w_{n_{k-1}}) / 3`
    pub third: f64,
    /// Window empty by construction (`R_k > d/3`).
    pub degenerate: bool,
    pub c1_bound: f64,
    pub c2_bound: f64,
    pub meets_c1: bool,
    pub meets_c2: bool,
}

/// Interval of admissible starting points for the window count at `k`.
pub fn window_interval(sched: &WSchedule, k: usize) -> (f64, f64) {
    let r = sched.r(k);
    match sched.orientation() {
        Orientation::TowardZero => (sched.w_at(k) + r, sched.w_at(k - 1)),
        Orientation::AwayFromZero => (sched.w_at(k), sched.w_at(k - 1) - r),
    }
}

/// Counts `0 ≤ j < n_k - n_{k-1}` with `R_k ≤ d(T^j z, anchor) ≤ d(w_{n_k}, w_{n_{k-1}})/3`.
pub fn window_count(sched: &WSchedule, k: usize, z: f64) -> Result<WindowReport> {
    if k < 2 || k > sched.k_max() {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in [2, {}]", sched.k_max())));
    }
    let (lo, hi) = window_interval(sched, k);
    if !(z >= lo && z <= hi) {
        return Err(Error::OutsideInterval { value: z, lo, hi });
    }
    let r = sched.r(k);
    let d = sched.dk(k, k - 1);
    let third = d / 3.0;
    let anchor = match sched.orientation() {
        Orientation::TowardZero => sched.w_at(k),
        Orientation::AwayFromZero => sched.w_at(k - 1),
    };
    let m = sched.n(k) - sched.n(k - 1);
    let mut x = z;
    let mut count = 0;
    for _ in 0..m {
        let dist = (x - anchor).abs();
        if dist >= r && dist <= third {
            count += 1;
        }
        x = sched.map.eval(x);
    }
    let c = sched.constants();
    let c1_bound = c.c1 * sched.nb(k - 1) * d;
    let c2_bound = c.c2 / sched.speed().eval(sched.w_at(k));
    Ok(WindowReport {
        k,
        z,
        count,
        r_k: r,
        third,
        degenerate: r > third,
        c1_bound,
        c2_bound,
        meets_c1: count as f64 >= c1_bound,
        meets_c2: count as f64 >= c2_bound,
    })
}

/// The window count started from the natural anchor of the segment.
pub fn window_count_from_anchor(sched: &WSchedule, k: usize) -> Result<WindowReport> {
    let z = match sched.orientation() {
        Orientation::TowardZero => sched.w_at(k - 1),
        Orientation::AwayFromZero => sched.w_at(k),
    };
    window_count(sched, k, z)
}

/// First `k*` such that `pred` holds for every `k ≥ k*` in `ks` (in order).
pub fn onset(ks: &[usize], pass: &[bool]) -> Option<usize> {
    let mut start = None;
    for (&k, &p) in ks.iter().zip(pass) {
        match (p, start) {
            (true, None) => start = Some(k),
            (false, _) => start = None,
            _ => {}
        }
    }
    start
}

/// `ω(d(x, S))` helper shared with the potential: distance from `x` to the
/// truncated set `{w_{n_k}} ∪ {0}` given the sorted (decreasing) anchors.
pub(crate) fn distance_to_anchors(anchors_desc: &[f64], x: f64) -> f64 {
    // anchors are decreasing; find the neighbours of x
    let pos = anchors_desc.partition_point(|&a| a > x);
    let mut d = x.abs();
    if pos < anchors_desc.len() {
        d = d.min((x - anchors_desc[pos]).abs());
    }
    if pos > 0 {
        d = d.min((anchors_desc[pos - 1] - x).abs());
    }
    d
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_map, Family};
    use approx::assert_relative_eq;

    #[test]
    fn geometric_times() {
        assert_eq!(&time_sequence(4, 0.5, 5)[1..], &[4, 8, 16, 32, 64]);
        let t = time_sequence(3, 0.96, 50);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn scale_examples() {
        let v = RegVaryingFn::power(0.5).unwrap();
        assert_relative_eq!(scale_b(&v, 100.0).unwrap(), 1e4, max_relative = 1e-12);
        let v1 = RegVaryingFn::power(1.0).unwrap();
        assert_relative_eq!(scale_b(&v1, 37.0).unwrap(), 37.0, max_relative = 1e-12);
        let g = make_map(Family::FareyInverse { rho: 1.0 }).unwrap();
        assert_relative_eq!(scale_b(g.speed().unwrap(), 5.0).unwrap(), 4.0, max_relative = 1e-12);
        assert!(scale_b(g.speed().unwrap(), 1.5).is_err());
    }

    #[test]
    fn farey_closed_form() {
        let g = make_map(Family::FareyInverse { rho: 1.0 }).unwrap();
        let s = generate_schedule(&g, ScheduleParams::new(0.5, 0.5, 6, 4)).unwrap();
        assert_relative_eq!(s.w[10], 1.0 / 12.0, max_relative = 1e-14);
        for (n, w) in s.w.iter().enumerate() {
            assert!((w - 1.0 / (n as f64 + 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn mp_backward_orbit() {
        let m = make_map(Family::MannevillePomeau { s: 0.5 }).unwrap();
        let w = neutral_orbit(&m, 0.25, 5).unwrap();
        assert!((w[1] * (1.0 + w[1].sqrt()) - 0.25).abs() < 1e-15);
        for n in 0..5 {
            assert!((m.eval(w[n + 1]) - w[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_arithmetic() {
        let g: f64 = 0.96;
        assert_relative_eq!(g.powi(3), 0.884736, max_relative = 1e-12);
        assert!(g.powi(3) > 6.0 / 7.0);
        assert!(0.9f64.powi(3) < 6.0 / 7.0);
        assert!(1.05f64 * 1.05 > 7.0 / 6.0 * g.powi(3));
    }

    #[test]
    fn lemma_constants() {
        let c = LemmaConstants::new(1.02, 0.5, 0.96);
        let c1 = 0.25 * (1.0 / 1.02 - 1.0 / (1.02 * 1.02)) * 0.125;
        assert_relative_eq!(c.c1, c1, max_relative = 1e-14);
        assert_relative_eq!(c.c2, c.c1_prime * c.c1_second);
    }

    #[test]
    fn anchor_distance() {
        let anchors = [0.5, 0.3, 0.1];
        assert_relative_eq!(distance_to_anchors(&anchors, 0.4), 0.1, max_relative = 1e-14);
        assert_relative_eq!(distance_to_anchors(&anchors, 0.04), 0.04);
        assert_relative_eq!(distance_to_anchors(&anchors, 0.9), 0.4);
        assert_eq!(distance_to_anchors(&anchors, 0.3), 0.0);
    }
}
