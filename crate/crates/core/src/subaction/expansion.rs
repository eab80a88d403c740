use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::IntervalMap;
use crate::moduli::Modulus;

use super::assumption::AssumptionA;
use super::omega::OmegaPipeline;

pub const LAMBDA_SAFETY: f64 = 1e-6;
/// Constants below this make the sub-action bounds useless in practice.
pub const SMALL_CONSTANT: f64 = 1e-6;
const LAMBDA_SAMPLES: usize = 4000;
const RADIUS_CANDIDATES: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionData {
    pub lambda: f64,
    pub sigma: f64,
    pub rho_t: f64,
    pub c7: f64,
    pub c8: f64,
    pub gamma_a: f64,
    pub xi0: f64,
    pub eta0: f64,
    /// `min(ρ_T, η₀)`.
    pub rho_t_omega: f64,
    /// Covering count `⌈2 / ρ_{T,ω}⌉ + 1`.
    pub cover_count: usize,
    pub warnings: Vec<String>,
}

impl ExpansionData {
    /// `L C8⁻¹`, the factor in the sub-action continuity bound.
    pub fn bound_factor(&self) -> f64 {
        self.cover_count as f64 / self.c8
    }
}

pub fn c7_formula(sigma: f64, lambda: f64, xi0: f64, eta0: f64) -> f64 {
    let p = 2f64.powf(-(sigma + 2.0));
    p.min((lambda - 1.0) * p).min(xi0 - 1.0).min(1.0 / eta0 - 1.0)
}

pub fn c8_formula(c7: f64, gamma_a: f64) -> f64 {
    (1.0 + c7).powf(gamma_a) - 1.0
}

/// Infimum of sampled difference quotients of the expanding branch.
fn sampled_lambda(map: &IntervalMap) -> f64 {
    let b = map.branches()[1];
    let (lo, hi) = (b.lo, b.hi);
    let n = LAMBDA_SAMPLES;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    xs.windows(2)
        .map(|w| {
            // stay strictly inside the branch
            let (a, c) = (w[0].max(lo + 1e-12), w[1].min(hi));
            (map.eval(c) - map.eval(a)).abs() / (c - a)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Expansion constants of a two-branch map for a certified growth condition.
pub fn expansion_data(map: &IntervalMap, a: &AssumptionA) -> Result<ExpansionData> {
    if !map.in_class_j() {
        return Err(Error::NotInClassJ(format!("{} is not a two-branch expanding map", map.family().id())));
    }
    let v = map.speed()?;
    let sigma = v.sigma();
    let lambda = sampled_lambda(map) - LAMBDA_SAFETY;
    if !(lambda > 1.0) {
        return Err(Error::NotInClassJ(format!("sampled expansion {lambda} of the right branch is not > 1")));
    }
    let c = map.cut().ok_or_else(|| Error::NotInClassJ("no discontinuity".into()))?;

    // (a) V(h/2) ≥ V(h) / 2^{σ+1} for all sampled h ≤ ρ
    let hs: Vec<f64> = (0..=RADIUS_CANDIDATES * 4)
        .map(|i| 10f64.powf(-12.0 * (1.0 - i as f64 / (RADIUS_CANDIDATES * 4) as f64)))
        .collect();
    let factor = 2f64.powf(-(sigma + 1.0));
    let rho_a = hs
        .iter()
        .position(|&h| v.eval(h / 2.0) < factor * v.eval(h))
        .map_or(1.0, |i| if i == 0 { 0.0 } else { hs[i - 1] });
    // (b) straddling pairs within ρ/2 of the cut land at least 1/2 apart
    let straddle = |rho: f64| -> bool {
        let m = 16;
        (1..=m).all(|i| {
            (1..=m).all(|j| {
                let x = c - rho / 2.0 * i as f64 / m as f64;
                let y = c + rho / 2.0 * j as f64 / m as f64;
                x < 0.0 || y > 1.0 || (map.eval(x) - map.eval(y)).abs() >= 0.5
            })
        })
    };
    let rho_b = (0..RADIUS_CANDIDATES)
        .map(|i| 0.5f64.powf(i as f64 / 8.0))
        .find(|&r| straddle(r))
        .unwrap_or(0.0);
    let rho_t = rho_a.min(rho_b);
    if !(rho_t > 0.0) {
        return Err(Error::NotCertified("no admissible expansion radius found".into()));
    }
    let c7 = c7_formula(sigma, lambda, a.xi0, a.eta0);
    let c8 = c8_formula(c7, a.gamma_a);
    let rho_t_omega = rho_t.min(a.eta0);
    let cover_count = (2.0 / rho_t_omega).ceil() as usize + 1;
    let mut warnings = Vec::new();
    if c7 < SMALL_CONSTANT || c8 < SMALL_CONSTANT {
        warnings.push(format!("expansion constants are uselessly small (C7 = {c7:e}, C8 = {c8:e})"));
    }
    Ok(ExpansionData {
        lambda,
        sigma,
        rho_t,
        c7,
        c8,
        gamma_a: a.gamma_a,
        xi0: a.xi0,
        eta0: a.eta0,
        rho_t_omega,
        cover_count,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCheck {
    pub pairs: usize,
    /// Smallest slack of the checked inequality.
    pub min_slack: f64,
    pub worst: (f64, f64),
    pub pass: bool,
}

fn random_pair(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
    let x: f64 = rng.gen();
    // log-uniform separations reach the small scales that matter
    let d = radius * 10f64.powf(-8.0 * rng.gen::<f64>());
    let y = if rng.gen::<bool>() { x + d } else { x - d };
    (x, y.clamp(0.0, 1.0))
}

/// Checks `d(Tx, Ty) ≥ d (1 + C7 V(d))` on random pairs with `d < ρ_T`.
pub fn check_expansion(map: &IntervalMap, data: &ExpansionData, pairs: usize, seed: u64) -> Result<PairCheck> {
    let v = map.speed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(f64, f64)> = (0..pairs).map(|_| random_pair(&mut rng, data.rho_t)).collect();
    let (min_slack, worst) = samples
        .par_iter()
        .filter(|(x, y)| x != y)
        .map(|&(x, y)| {
            let d = (x - y).abs();
            let slack = (map.eval(x) - map.eval(y)).abs() - d * (1.0 + data.c7 * v.eval(d));
            (slack / d, (x, y))
        })
        .reduce(|| (f64::INFINITY, (f64::NAN, f64::NAN)), |a, b| if b.0 < a.0 { b } else { a });
    Ok(PairCheck { pairs, min_slack, worst, pass: min_slack >= -1e-12 })
}

/// Preimage of `y` closest to `x1`.
fn closest_preimage(map: &IntervalMap, x1: f64, y: f64) -> Option<f64> {
    map.preimages(y).into_iter().min_by(|a, b| (a - x1).abs().total_cmp(&(b - x1).abs()))
}

/// Backward-pairing contraction: for `d(x₀, y₀) < ρ_{T,ω}` and each preimage
/// `x₁` of `x₀`, the preimage `y₁` of `y₀` nearest `x₁` satisfies
/// `Ω(d₁) + C8 ω(d₁) ≤ Ω(d₀)`. Slack reported against `tol`.
pub fn check_backward_pairing(
    map: &IntervalMap,
    omega: &Modulus,
    big: &OmegaPipeline,
    data: &ExpansionData,
    pairs: usize,
    seed: u64,
    tol: f64,
) -> PairCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(f64, f64)> = (0..pairs).map(|_| random_pair(&mut rng, data.rho_t_omega)).collect();
    let (min_slack, worst) = samples
        .par_iter()
        .flat_map_iter(|&(x0, y0)| {
            let d0 = (x0 - y0).abs();
            map.preimages(x0).into_iter().filter_map(move |x1| {
                let y1 = closest_preimage(map, x1, y0)?;
                let d1 = (x1 - y1).abs();
                Some((big.eval(d0) - big.eval(d1) - data.c8 * omega.eval(d1), (x0, y0)))
            })
        })
        .reduce(|| (f64::INFINITY, (f64::NAN, f64::NAN)), |a, b| if b.0 < a.0 { b } else { a });
    PairCheck { pairs, min_slack, worst, pass: min_slack >= -tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_map, Family};

    #[test]
    fn c8_arithmetic() {
        assert!((c8_formula(0.1768, 0.3) - 0.0501).abs() < 5e-5);
        assert_eq!(c7_formula(0.5, 1.0, 2.0, 0.5), 0.0);
    }

    #[test]
    fn mp_half_constants() {
        let map = make_map(Family::MannevillePomeau { s: 0.5 }).unwrap();
        let a = AssumptionA { gamma_a: 0.3, xi0: 2.0, eta0: 0.5 };
        let d = expansion_data(&map, &a).unwrap();
        let p = 2f64.powf(-2.5);
        assert!((d.c7 - p.min((d.lambda - 1.0) * p)).abs() < 1e-15);
        let exact = map.lambda().unwrap();
        assert!(d.lambda >= exact - 2.0 * LAMBDA_SAFETY && d.lambda < exact + 1e-3);
        assert!(d.rho_t > 0.0 && d.rho_t_omega <= 0.5);
        assert_eq!(d.cover_count, (2.0 / d.rho_t_omega).ceil() as usize + 1);
        assert!(check_expansion(&map, &d, 5000, 1).unwrap().pass);
    }

    #[test]
    fn rejects_single_branch() {
        let map = make_map(Family::MpInverse { s: 0.5 }).unwrap();
        let a = AssumptionA { gamma_a: 0.3, xi0: 2.0, eta0: 0.5 };
        assert!(matches!(expansion_data(&map, &a), Err(Error::NotInClassJ(_))));
    }
}
