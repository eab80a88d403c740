use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::Orientation;
use crate::moduli::{liminf_ratio, Modulus, RegimeTag};
use crate::orbits::{distance_to_anchors, estimate_c0_and_gates, WSchedule};

/// Decades used for the `ω / V` regime check at build time.
const REGIME_DECADES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BumpSign {
    Positive,
    Negative,
    Zero,
}

impl BumpSign {
    /// Sign pattern of the bump on `I_k`. Orbits that leave the origin swap
    /// the roles of `k ≡ 1` and `k ≡ 2 (mod 3)`.
    pub fn for_index(k: usize, orientation: Orientation) -> Self {
        match (k % 3, orientation) {
            (1, Orientation::TowardZero) | (2, Orientation::AwayFromZero) => BumpSign::Positive,
            (2, Orientation::TowardZero) | (1, Orientation::AwayFromZero) => BumpSign::Negative,
            _ => BumpSign::Zero,
        }
    }
}

/// One element `I_k` of the cover with its hat `φ_k`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Bump {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub core_lo: f64,
    pub core_hi: f64,
    pub sign: BumpSign,
    /// Positive bumps whose negative partner lies outside the generated
    /// range are switched off.
    pub active: bool,
}

impl Bump {
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// Piecewise-linear hat: 0 off `I_k`, 1 on the core.
    pub fn hat(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            0.0
        } else if x < self.core_lo {
            (x - self.lo) / (self.core_lo - self.lo)
        } else if x > self.core_hi {
            (self.hi - x) / (self.hi - self.core_hi)
        } else {
            1.0
        }
    }

    /// Narrower of the two linear transition zones.
    pub fn transition_width(&self) -> f64 {
        (self.core_lo - self.lo).min(self.hi - self.core_hi)
    }

    pub fn weight(&self, xi: f64) -> f64 {
        match (self.sign, self.active) {
            (BumpSign::Positive, true) => 1.0,
            (BumpSign::Negative, _) => -xi,
            _ => 0.0,
        }
    }
}

/// `f(x) = Φ(x) ω(d(x, S))` built on a schedule.
#[derive(Debug, Clone)]
pub struct CounterexamplePotential {
    pub sched: WSchedule,
    pub omega: Modulus,
    pub xi: f64,
    /// `w_{n_k}` for `k = k_start..=k_max`, decreasing. Together with 0 this is `S`.
    pub anchors: Vec<f64>,
    /// Bumps ordered by `k` (so by decreasing position).
    pub bumps: Vec<Bump>,
    pub regime: RegimeTag,
    pub warnings: Vec<String>,
}

/// Index of the negative bump an orbit from a positive `I_k` runs into.
pub fn partner(k: usize, orientation: Orientation) -> usize {
    match orientation {
        Orientation::TowardZero => k + 1,
        Orientation::AwayFromZero => k - 1,
    }
}

pub fn build_potential(sched: &WSchedule, omega: &Modulus, xi: f64) -> Result<CounterexamplePotential> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::InvalidParameter(format!("xi = {xi} must be positive and finite")));
    }
    let (_, gates) = estimate_c0_and_gates(sched);
    if !gates.all_pass() {
        return Err(Error::GateFailed(format!(
            "{} (C0 = {}, trim = {}, smallest passing trim: {:?})",
            gates.failing().join("; "),
            gates.c0,
            gates.trim,
            gates.recommended_trim
        )));
    }
    let mut warnings = Vec::new();
    let regime = liminf_ratio(omega, sched.speed(), REGIME_DECADES)?.tag;
    if regime != RegimeTag::ObstructionRegime {
        warnings.push(format!(
            "omega/V regime is {regime:?}; obstruction certificates are expected to fail"
        ));
    }
    let k0 = sched.k_start;
    let k_max = sched.k_max();
    let anchors: Vec<f64> = (k0..=k_max).map(|k| sched.w_at(k)).collect();
    let orientation = sched.orientation();
    let in_range = |k: usize| k > k0 && k < k_max;
    let bumps = (k0 + 1..k_max)
        .map(|k| {
            let (wp, w, wn) = (sched.w_at(k - 1), sched.w_at(k), sched.w_at(k + 1));
            let sign = BumpSign::for_index(k, orientation);
            let active = sign != BumpSign::Positive || in_range(partner(k, orientation));
            Bump {
                k,
                lo: (3.0 * w + 2.0 * wn) / 5.0,
                hi: (3.0 * w + 2.0 * wp) / 5.0,
                core_lo: (2.0 * w + wn) / 3.0,
                core_hi: (2.0 * w + wp) / 3.0,
                sign,
                active,
            }
        })
        .collect();
    Ok(CounterexamplePotential {
        sched: sched.clone(),
        omega: omega.clone(),
        xi,
        anchors,
        bumps,
        regime,
        warnings,
    })
}

impl CounterexamplePotential {
    pub fn with_xi(&self, xi: f64) -> Self {
        let mut p = self.clone();
        p.xi = xi;
        p
    }

    pub fn orientation(&self) -> Orientation {
        self.sched.orientation()
    }

    pub fn bump(&self, k: usize) -> Option<&Bump> {
        let first = self.bumps.first()?.k;
        self.bumps.get(k.checked_sub(first)?)
    }

    /// Bump whose `I_k` contains `x`, if any.
    pub fn locate(&self, x: f64) -> Option<&Bump> {
        // bumps sit at decreasing positions
        let pos = self.bumps.partition_point(|b| b.lo >= x);
        self.bumps.get(pos).filter(|b| b.contains(x))
    }

    pub fn distance_to_s(&self, x: f64) -> f64 {
        distance_to_anchors(&self.anchors, x)
    }

    /// `J_k`: middle third of `[w_{n_{k+1}}, w_{n_k}]`.
    pub fn j_interval(&self, k: usize) -> (f64, f64) {
        let (w, wn) = (self.sched.w_at(k), self.sched.w_at(k + 1));
        ((w + 2.0 * wn) / 3.0, (2.0 * w + wn) / 3.0)
    }

    /// `Φ(x)`.
    pub fn phi(&self, x: f64) -> f64 {
        self.locate(x).map_or(0.0, |b| b.weight(self.xi) * b.hat(x))
    }

    /// `Σ_k φ_k(x)` over all bumps regardless of sign.
    pub fn partition_sum(&self, x: f64) -> f64 {
        self.locate(x).map_or(0.0, |b| b.hat(x))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let phi = self.phi(x);
        if phi == 0.0 {
            return 0.0;
        }
        phi * self.omega.eval(self.distance_to_s(x))
    }

    /// Positive and (unscaled) negative parts: `f = pos - ξ neg`.
    pub fn split(&self, x: f64) -> (f64, f64) {
        match self.locate(x) {
            Some(b) => {
                let base = b.hat(x) * self.omega.eval(self.distance_to_s(x));
                match (b.sign, b.active) {
                    (BumpSign::Positive, true) => (base, 0.0),
                    (BumpSign::Negative, _) => (0.0, base),
                    _ => (0.0, 0.0),
                }
            }
            None => (0.0, 0.0),
        }
    }

    /// Positive bumps that carry weight.
    pub fn positive_indices(&self) -> Vec<usize> {
        self.bumps
            .iter()
            .filter(|b| b.sign == BumpSign::Positive && b.active)
            .map(|b| b.k)
            .collect()
    }
}

pub fn eval_potential(p: &CounterexamplePotential, x: f64) -> f64 {
    p.eval(x)
}
