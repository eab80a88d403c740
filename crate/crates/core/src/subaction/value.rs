use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::IntervalMap;
use crate::moduli::{modulus_norm, Modulus};

use super::expansion::ExpansionData;
use super::grid::{uniform_grid, GridFunction};
use super::omega::OmegaPipeline;

/// Consecutive iterations with increase below `eps` before stopping.
pub const STALL_WINDOW: usize = 10;
pub const DEFAULT_K_CAP: usize = 10_000;
/// Verification grid refinement relative to the sub-action grid.
pub const VERIFY_REFINE: usize = 4;
const NORM_PAIRS: usize = 20_000;

/// `f(x) = Σ a_j ω((r_j - |x - c_j|)₊)` with `Σ |a_j| = 1`, so `|f|_ω ≤ 1`.
#[derive(Debug, Clone)]
pub struct RandomPotential {
    pub omega: Modulus,
    pub centers: Vec<f64>,
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RandomPotential {
    pub fn new(omega: &Modulus, terms: usize, seed: u64) -> Result<Self> {
        if terms == 0 {
            return Err(Error::InvalidParameter("random potential needs at least one term".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<f64> = (0..terms).map(|_| rng.gen()).collect();
        let radii: Vec<f64> = (0..terms).map(|_| rng.gen_range(0.05..0.3)).collect();
        let raw: Vec<f64> = (0..terms).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let total: f64 = raw.iter().map(|a| a.abs()).sum();
        let weights = raw.iter().map(|a| a / total).collect();
        Ok(RandomPotential { omega: omega.clone(), centers, radii, weights })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.radii)
            .zip(&self.weights)
            .map(|((&c, &r), &a)| a * self.omega.eval((r - (x - c).abs()).max(0.0)))
            .sum()
    }

    /// `Σ |a_j|`, an upper bound on `|f|_ω` for concave `ω`.
    pub fn norm_bound(&self) -> f64 {
        self.weights.iter().map(|a| a.abs()).sum()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubactionOptions {
    pub eps: f64,
    pub k_cap: usize,
    /// `2 L C8⁻¹ |f|_ω Ω(1)`, checked against `max U` when given.
    pub sanity_bound: Option<f64>,
    /// Raise `m` to an upper bound on the growth rate of the interpolated
    /// grid recursion, which can exceed `m(f, T)` by interpolation error.
    pub lift_m: bool,
}

impl Default for SubactionOptions {
    fn default() -> Self {
        SubactionOptions { eps: 1e-10, k_cap: DEFAULT_K_CAP, sanity_bound: None, lift_m: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubactionResult {
    pub u: GridFunction,
    pub k_used: usize,
    pub converged: bool,
    /// `m` actually subtracted in the recursion.
    pub m_used: f64,
    /// Upper bound on the grid growth rate, when computed.
    pub m_grid: Option<f64>,
    /// Largest nodal increase of the running max in the last iteration.
    pub last_increase: f64,
    pub bound_ok: Option<bool>,
    pub notes: Vec<String>,
}

struct Preimage {
    value: f64,
    at: (usize, f64),
}

fn interp(v: &[f64], (i, t): (usize, f64)) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        v[i] + t * (v[i + 1] - v[i])
    }
}

/// One step of the recursion without subtracting `m`.
fn bellman(pre: &[Vec<Preimage>], g: &[f64]) -> Vec<f64> {
    pre.par_iter()
        .map(|ps| ps.iter().map(|p| p.value + interp(g, p.at)).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// `max_i (G h - h)_i` after damped relative value iteration; an upper
/// bound on the growth rate of `G` for any `h`.
fn grid_growth_bound(pre: &[Vec<Preimage>], iters: usize) -> f64 {
    let mut h = vec![0.0; pre.len()];
    let mut upper = f64::INFINITY;
    for _ in 0..iters {
        let gh = bellman(pre, &h);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (a, b) in gh.iter().zip(&h) {
            lo = lo.min(a - b);
            hi = hi.max(a - b);
        }
        upper = upper.min(hi);
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
        let top = gh.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // averaging with the previous iterate removes periodicity
        for (x, y) in h.iter_mut().zip(&gh) {
            *x = 0.5 * (*x + y - top);
        }
    }
    upper
}

/// `U = sup_k g_k` with `g_k(x) = max_{T y = x} [f(y) - m + g_{k-1}(y)]`,
/// `g_0 = 0`, by value iteration on `grid` with linear interpolation.
pub fn compute_subaction(
    map: &IntervalMap,
    f: &(dyn Fn(f64) -> f64 + Sync),
    m: f64,
    grid: &[f64],
    opts: SubactionOptions,
) -> Result<SubactionResult> {
    let shape = GridFunction::new(grid.to_vec(), vec![0.0; grid.len()])?;
    if shape.x_min() > 0.0 || shape.x_max() < 1.0 {
        return Err(Error::IncompatibleGrids("sub-action grid must cover [0, 1]".into()));
    }
    let pre: Vec<Vec<Preimage>> = grid
        .par_iter()
        .map(|&x| {
            map.preimages(x.clamp(0.0, 1.0))
                .into_iter()
                .map(|y| Preimage { value: f(y), at: shape.bracket(y) })
                .collect()
        })
        .collect();
    let m_grid = opts.lift_m.then(|| grid_growth_bound(&pre, opts.k_cap.max(1)));
    let m_used = m_grid.map_or(m, |g| g.max(m));
    let n = grid.len();
    let mut g = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut stall = 0;
    let mut k_used = 0;
    let mut last_increase = f64::INFINITY;
    let mut converged = false;
    for k in 1..=opts.k_cap {
        let next: Vec<f64> = bellman(&pre, &g).into_iter().map(|v| v - m_used).collect();
        let mut inc: f64 = 0.0;
        for (ui, &gi) in u.iter_mut().zip(&next) {
            if gi > *ui {
                inc = inc.max(gi - *ui);
                *ui = gi;
            }
        }
        g = next;
        k_used = k;
        last_increase = inc;
        stall = if inc < opts.eps { stall + 1 } else { 0 };
        if stall >= STALL_WINDOW {
            converged = true;
            break;
        }
    }
    let mut notes = Vec::new();
    if !converged {
        notes.push(format!(
            "no stall after {k_used} iterations (last increase {last_increase:e}); m may be underestimated"
        ));
    }
    let u = GridFunction::new(grid.to_vec(), u)?;
    let bound_ok = opts.sanity_bound.map(|b| {
        let ok = u.max_value() <= b;
        if !ok {
            notes.push(format!("max U = {} exceeds the continuity bound {b}", u.max_value()));
        }
        ok
    });
    Ok(SubactionResult { u, k_used, converged, m_used, m_grid, last_increase, bound_ok, notes })
}

/// `2 L C8⁻¹ |f|_ω Ω(1)`.
pub fn sanity_bound(data: &ExpansionData, f_norm: f64, big: &OmegaPipeline) -> f64 {
    2.0 * data.bound_factor() * f_norm * big.eval(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub max_residual: f64,
    pub worst_x: f64,
    pub tol: f64,
    pub delta: f64,
    /// Lower estimate of `|f|_ω` on the verification grid.
    pub f_norm: f64,
    /// Lower estimate of `|U|_Ω`.
    pub omega_norm_estimate: f64,
    /// `L C8⁻¹ |f|_ω`, when expansion data is supplied.
    pub bound: Option<f64>,
    pub verification_nodes: usize,
    pub pass: bool,
}

/// Residual `f + U - U∘T - m` on a grid `VERIFY_REFINE` times finer than `U`'s.
/// Passes when it stays below `2 |f|_ω Ω(Δ) + eps`.
pub fn verify_subaction(
    map: &IntervalMap,
    f: &(dyn Fn(f64) -> f64 + Sync),
    omega: &Modulus,
    m: f64,
    u: &GridFunction,
    big: &OmegaPipeline,
    eps: f64,
    data: Option<&ExpansionData>,
) -> Result<VerificationReport> {
    if u.x_min() > 0.0 || u.x_max() < 1.0 {
        return Err(Error::IncompatibleGrids("U must be sampled on [0, 1]".into()));
    }
    if big.omega_big.x_max() < 1.0 {
        return Err(Error::IncompatibleGrids("Omega must be sampled on [0, 1]".into()));
    }
    let nodes = uniform_grid(0.0, 1.0, (u.len() - 1).max(1) * VERIFY_REFINE);
    let (max_residual, worst_x) = nodes
        .par_iter()
        .map(|&x| {
            let tx = map.eval(x);
            let r = f(x) + u.at_bracket(u.bracket(x)) - u.at_bracket(u.bracket(tx)) - m;
            (r, x)
        })
        .reduce(|| (f64::NEG_INFINITY, f64::NAN), |a, b| if b.0 > a.0 { b } else { a });
    let f_samples: Vec<(f64, f64)> = nodes.iter().map(|&x| (x, f(x))).collect();
    let f_norm = modulus_norm(&f_samples, omega, NORM_PAIRS, 0)?.value;
    let delta = u.max_spacing();
    let tol = 2.0 * f_norm * big.eval(delta) + eps;
    let u_samples: Vec<(f64, f64)> = u.rows().collect();
    let omega_norm_estimate = modulus_norm(&u_samples, &big.as_modulus(), NORM_PAIRS, 1)?.value;
    Ok(VerificationReport {
        max_residual,
        worst_x,
        tol,
        delta,
        f_norm,
        omega_norm_estimate,
        bound: data.map(|d| d.bound_factor() * f_norm),
        verification_nodes: nodes.len(),
        pass: max_residual <= tol,
    })
}
