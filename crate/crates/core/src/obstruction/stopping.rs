use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kahan::NeumaierSum;
use crate::maps::Orientation;

use super::potential::{partner, BumpSign, CounterexamplePotential};

/// Stopping-time decomposition of one starting point.
#[derive(Debug, Clone, Serialize)]
pub struct StoppingRecord {
    pub x: f64,
    /// Positive bump containing `x`, if any.
    pub k: Option<usize>,
    /// Iterates spent in `I_k`.
    pub p: usize,
    /// Further iterates until the orbit is within `R` of the partner anchor.
    pub q: usize,
    pub n_x: usize,
    /// `S_{n(x)} f(x)`.
    pub sum: f64,
    pub positive_part: f64,
    /// Mass of the negative bumps before scaling by `ξ`.
    pub negative_part: f64,
    /// `L_k + L_{k+1} - 2`.
    pub l_cap: Option<usize>,
}

/// `L_k = ⌈(3/7) C0 σ^{1+1/σ} n_k b(n_k) d(w_{n_k}, w_{n_{k-1}})⌉`.
pub fn l_k(p: &CounterexamplePotential, k: usize) -> usize {
    let s = &p.sched;
    (3.0 / 7.0 * s.c0 * s.sigma_pow() * s.nb(k) * s.dk(k, k - 1)).ceil() as usize
}

pub fn verify_stopping(p: &CounterexamplePotential, x: f64) -> Result<StoppingRecord> {
    let bump = match p.locate(x) {
        Some(b) if b.sign == BumpSign::Positive && b.active => *b,
        _ => {
            let (pos, neg) = p.split(x);
            return Ok(StoppingRecord {
                x,
                k: None,
                p: 0,
                q: 0,
                n_x: 1,
                sum: p.eval(x),
                positive_part: pos,
                negative_part: neg,
                l_cap: None,
            });
        }
    };
    let k = bump.k;
    let s = &p.sched;
    let orientation = p.orientation();
    let j = partner(k, orientation);
    let anchor = s.w_at(j);
    let radius = match orientation {
        Orientation::TowardZero => s.r(k + 1),
        Orientation::AwayFromZero => s.r(k),
    };
    let ceiling = s.w[0];
    let cap = 4 * s.n(s.k_max()) + 1000;
    let mut total = NeumaierSum::new();
    let mut pos = NeumaierSum::new();
    let mut neg = NeumaierSum::new();
    let mut y = x;
    let mut steps = 0usize;
    let mut step = |y: &mut f64, steps: &mut usize| -> Result<()> {
        let (a, b) = p.split(*y);
        total += a - p.xi * b;
        pos += a;
        neg += b;
        *y = s.map.eval(*y);
        *steps += 1;
        if *steps > cap || *y > ceiling || !(*y > 0.0) {
            return Err(Error::OrbitEscaped { iterate: *steps, x: *y });
        }
        Ok(())
    };
    step(&mut y, &mut steps)?;
    while bump.contains(y) {
        step(&mut y, &mut steps)?;
    }
    let p_count = steps;
    step(&mut y, &mut steps)?;
    while (y - anchor).abs() >= radius {
        step(&mut y, &mut steps)?;
    }
    let q_count = steps - p_count;
    Ok(StoppingRecord {
        x,
        k: Some(k),
        p: p_count,
        q: q_count,
        n_x: steps,
        sum: total.sum(),
        positive_part: pos.sum(),
        negative_part: neg.sum(),
        l_cap: Some(l_k(p, k) + l_k(p, k + 1) - 2),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StoppingSummary {
    pub samples: usize,
    pub max_sum: f64,
    pub worst_x: f64,
    pub all_nonpositive: bool,
    /// Smallest `ξ` making every sampled stopped sum nonpositive.
    pub xi_critical: f64,
    /// Records in which the observed `p` exceeded the `L` cap.
    pub cap_violations: usize,
}

pub const STOPPING_TOL: f64 = 1e-12;

pub fn verify_stopping_batch(p: &CounterexamplePotential, xs: &[f64]) -> Result<(StoppingSummary, Vec<StoppingRecord>)> {
    let recs: Vec<StoppingRecord> = xs.par_iter().map(|&x| verify_stopping(p, x)).collect::<Result<_>>()?;
    let mut max_sum = f64::NEG_INFINITY;
    let mut worst_x = f64::NAN;
    let mut xi_critical: f64 = 0.0;
    let mut cap_violations = 0;
    for r in &recs {
        if r.sum > max_sum {
            max_sum = r.sum;
            worst_x = r.x;
        }
        if r.positive_part > 0.0 {
            xi_critical = xi_critical.max(if r.negative_part > 0.0 {
                r.positive_part / r.negative_part
            } else {
                f64::INFINITY
            });
        }
        if r.l_cap.map_or(false, |c| r.p > c) {
            cap_violations += 1;
        }
    }
    Ok((
        StoppingSummary {
            samples: recs.len(),
            max_sum,
            worst_x,
            all_nonpositive: max_sum <= STOPPING_TOL,
            xi_critical,
            cap_violations,
        },
        recs,
    ))
}

/// Deterministic test points: most inside active positive bumps (where the
/// stopping argument is non-trivial), the rest uniform on `[0, 1]`.
pub fn sample_points(p: &CounterexamplePotential, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos: Vec<_> = p.bumps.iter().filter(|b| b.sign == BumpSign::Positive && b.active).collect();
    (0..count)
        .map(|i| {
            if pos.is_empty() || i % 5 == 4 {
                rng.gen::<f64>()
            } else {
                let b = pos[rng.gen_range(0..pos.len())];
                let t: f64 = rng.gen();
                b.lo + (b.hi - b.lo) * t
            }
        })
        .collect()
}
