use serde::Serialize;

use crate::maps::RegVaryingFn;
use crate::moduli::Modulus;

pub const XI0_LATTICE: [f64; 3] = [2.0, 1.5, 1.1];
pub const ETA0_LATTICE: [f64; 3] = [0.5, 0.25, 0.125];
/// Exponents at or below this are treated as zero.
pub const GAMMA_FLOOR: f64 = 1e-6;
/// The extrapolated exponent must keep at least this share of the deepest
/// observed one; otherwise the sampled exponents are drifting to zero.
pub const DRIFT_SHARE: f64 = 0.25;

/// `(γ, ξ₀, η₀)` for which the growth condition on `ω / V` was certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionA {
    pub gamma_a: f64,
    pub xi0: f64,
    pub eta0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeRow {
    pub xi0: f64,
    pub eta0: f64,
    pub samples: usize,
    /// Smallest `log(ratio) / log ξ` per decade of `h`, shallowest first.
    pub decade_gammas: Vec<(i32, f64)>,
    /// Intercept of a linear fit of the decade minima against `1 / log(1/h)`.
    pub extrapolated: f64,
    pub certified: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub enum AssumptionAVerdict {
    Certified { params: AssumptionA, lattice: Vec<LatticeRow> },
    /// `ω(ξh)/V(ξh) < ξ^γ ω(h)/V(h)` at the returned pair for `γ = gamma_tested`.
    Violated { h: f64, xi: f64, gamma_tested: f64, log_ratio: f64, lattice: Vec<LatticeRow> },
}

impl AssumptionAVerdict {
    pub fn params(&self) -> Option<AssumptionA> {
        match self {
            AssumptionAVerdict::Certified { params, .. } => Some(*params),
            AssumptionAVerdict::Violated { .. } => None,
        }
    }

    pub fn lattice(&self) -> &[LatticeRow] {
        match self {
            AssumptionAVerdict::Certified { lattice, .. } | AssumptionAVerdict::Violated { lattice, .. } => lattice,
        }
    }
}

/// Log-spaced `h` from `10^-decades` up to `hi`, `per_decade` points per decade.
pub fn default_h_grid(hi: f64, decades: usize, per_decade: usize) -> Vec<f64> {
    let lo = hi.log10() - decades as f64;
    let n = decades * per_decade;
    (0..n).map(|i| 10f64.powf(lo + (hi.log10() - lo) * i as f64 / n as f64)).collect()
}

/// `ξ = 1 + j/count` for `j = 1..=count`.
pub fn default_xi_samples(count: usize) -> Vec<f64> {
    (1..=count).map(|j| 1.0 + j as f64 / count as f64).collect()
}

struct Sample {
    h: f64,
    xi: f64,
    gamma: f64,
    log_ratio: f64,
}

fn theta(omega: &Modulus, v: &RegVaryingFn, h: f64) -> f64 {
    omega.eval(h) / v.eval(h)
}

fn fit_intercept(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return points.first().map_or(f64::NAN, |p| p.1);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return my;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my - sxy / sxx * mx
}

fn lattice_row(samples: &[Sample], xi0: f64, eta0: f64) -> (LatticeRow, Option<&Sample>) {
    let mut decades: Vec<(i32, f64)> = Vec::new();
    let mut worst: Option<&Sample> = None;
    let mut used = 0;
    for s in samples.iter().filter(|s| s.h < eta0 && s.xi <= xi0) {
        used += 1;
        let d = s.h.log10().floor() as i32;
        match decades.iter_mut().find(|e| e.0 == d) {
            Some(e) => e.1 = e.1.min(s.gamma),
            None => decades.push((d, s.gamma)),
        }
        if worst.map_or(true, |w| s.gamma < w.gamma) {
            worst = Some(s);
        }
    }
    decades.sort_by(|a, b| b.0.cmp(&a.0));
    let deep = &decades[decades.len() / 2..];
    let pts: Vec<(f64, f64)> = deep
        .iter()
        .map(|&(d, g)| (1.0 / ((d as f64 + 0.5) * -std::f64::consts::LN_10), g))
        .collect();
    let extrapolated = fit_intercept(&pts);
    let observed = decades.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let deepest = decades.last().map_or(f64::NAN, |d| d.1);
    let certified = (used > 0
        && observed > GAMMA_FLOOR
        && extrapolated > GAMMA_FLOOR
        && extrapolated >= DRIFT_SHARE * deepest)
        .then(|| observed.min(extrapolated));
    (LatticeRow { xi0, eta0, samples: used, decade_gammas: decades, extrapolated, certified }, worst)
}

/// Searches the `(ξ₀, η₀)` lattice for the largest `γ` with
/// `ω(ξh)/V(ξh) ≥ ξ^γ ω(h)/V(h)` on every sampled `h < η₀`, `ξ ≤ ξ₀`.
///
/// Exponents that keep shrinking as `h → 0` are not certified even when
/// each sampled one is positive.
pub fn check_assumption_a(omega: &Modulus, v: &RegVaryingFn, grid: &[f64], xi_samples: &[f64]) -> AssumptionAVerdict {
    let radius = v.valid_radius();
    let samples: Vec<Sample> = grid
        .iter()
        .flat_map(|&h| xi_samples.iter().map(move |&xi| (h, xi)))
        .filter(|&(h, xi)| h > 0.0 && xi > 1.0 && xi * h <= radius)
        .filter_map(|(h, xi)| {
            let log_ratio = (theta(omega, v, xi * h) / theta(omega, v, h)).ln();
            log_ratio.is_finite().then(|| Sample { h, xi, gamma: log_ratio / xi.ln(), log_ratio })
        })
        .collect();
    let mut lattice = Vec::new();
    let mut best: Option<AssumptionA> = None;
    let mut fallback: Option<(usize, f64)> = None;
    for &xi0 in &XI0_LATTICE {
        for &eta0 in &ETA0_LATTICE {
            let (row, worst) = lattice_row(&samples, xi0, eta0);
            if let Some(g) = row.certified {
                if best.map_or(true, |b| g > b.gamma_a + 1e-12) {
                    best = Some(AssumptionA { gamma_a: g, xi0, eta0 });
                }
            }
            if let Some(w) = worst {
                let idx = samples.iter().position(|s| std::ptr::eq(s, w)).unwrap_or(0);
                let shallow = row.decade_gammas.first().map_or(GAMMA_FLOOR, |d| d.1);
                fallback = Some((idx, shallow.max(GAMMA_FLOOR)));
            }
            lattice.push(row);
        }
    }
    match (best, fallback) {
        (Some(params), _) => AssumptionAVerdict::Certified { params, lattice },
        (None, Some((i, gamma_tested))) => {
            let s = &samples[i];
            AssumptionAVerdict::Violated { h: s.h, xi: s.xi, gamma_tested, log_ratio: s.log_ratio, lattice }
        }
        (None, None) => AssumptionAVerdict::Violated {
            h: f64::NAN,
            xi: f64::NAN,
            gamma_tested: GAMMA_FLOOR,
            log_ratio: f64::NAN,
            lattice,
        },
    }
}

/// Default grids: 12 decades below `min(1/2, valid radius / 2)` and 16 values of `ξ`.
pub fn check_assumption_a_default(omega: &Modulus, v: &RegVaryingFn) -> AssumptionAVerdict {
    let hi = (0.5f64).min(v.valid_radius() / 2.0);
    check_assumption_a(omega, v, &default_h_grid(hi, 12, 8), &default_xi_samples(16))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::{make_omega_alpha_beta, make_omega_log};

    #[test]
    fn power_pair_gives_difference_of_exponents() {
        let w = make_omega_alpha_beta(0.8, 0.0).unwrap();
        let v = RegVaryingFn::power(0.5).unwrap();
        let p = check_assumption_a_default(&w, &v).params().unwrap();
        assert!((p.gamma_a - 0.3).abs() < 1e-9, "{p:?}");
        assert_eq!((p.xi0, p.eta0), (2.0, 0.5));
    }

    #[test]
    fn identity_pair_fails() {
        let v = RegVaryingFn::power(0.5).unwrap();
        let w = make_omega_alpha_beta(0.5, 0.0).unwrap();
        match check_assumption_a_default(&w, &v) {
            AssumptionAVerdict::Violated { gamma_tested, log_ratio, xi, .. } => {
                assert!(log_ratio < gamma_tested * xi.ln());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn log_pair_fails() {
        let w = make_omega_log(1.0).unwrap();
        let v = RegVaryingFn::with_kind(crate::maps::SpeedKind::LogPerturbed { tau: 1.0, theta: 1.0 }, 1.0, 0.1);
        match check_assumption_a_default(&w, &v) {
            AssumptionAVerdict::Violated { gamma_tested, log_ratio, xi, h, .. } => {
                assert!(log_ratio < gamma_tested * xi.ln(), "h = {h}");
            }
            other => panic!("{other:?}"),
        }
    }
}
