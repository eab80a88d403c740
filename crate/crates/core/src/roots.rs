//! Bracketed scalar root finding.
//!
//! Newton steps are taken while they stay inside the current bracket and
//! shrink it fast enough; otherwise the bracket is bisected. Iteration stops
//! once the step is below `REL_TOL` relative to the iterate.

use crate::error::{Error, Result};

pub const REL_TOL: f64 = 1e-14;
pub const MAX_ITER: usize = 200;

/// Invariant: lo <= hi
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(a: f64, b: f64) -> Self {
        if a <= b {
            Bracket { lo: a, hi: b }
        } else {
            Bracket { lo: b, hi: a }
        }
    }

    fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn converged(step: f64, x: f64) -> bool {
    step.abs() <= 0.1 * REL_TOL * x.abs().max(f64::MIN_POSITIVE)
}

/// Safeguarded Newton on `f_df` (value, derivative) inside `bracket`.
///
/// The endpoints must bracket a sign change (or hit zero exactly).
pub fn newton_bisect(
    f_df: impl Fn(f64) -> (f64, f64),
    bracket: Bracket,
    guess: Option<f64>,
) -> Result<f64> {
    let mut br = bracket;
    let f_lo = f_df(br.lo).0;
    let f_hi = f_df(br.hi).0;
    if f_lo == 0.0 {
        return Ok(br.lo);
    }
    if f_hi == 0.0 {
        return Ok(br.hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{}, {}] (f = {f_lo}, {f_hi})",
            br.lo, br.hi
        )));
    }
    let lo_is_neg = f_lo < 0.0;
    let mut x = match guess {
        Some(g) if br.contains(g) => g,
        _ => 0.5 * (br.lo + br.hi),
    };
    let mut dx_old = br.width();
    let mut dx = dx_old;
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f_df(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == lo_is_neg {
            br.lo = x;
        } else {
            br.hi = x;
        }
        let newton = x - fx / dfx;
        let newton_ok = dfx.is_finite() && dfx != 0.0 && br.contains(newton);
        // Fall back to bisection when Newton steps stop halving.
        let shrinking = (newton - x).abs() <= 0.5 * dx_old.abs();
        dx_old = dx;
        let next = if newton_ok && shrinking {
            newton
        } else {
            0.5 * (br.lo + br.hi)
        };
        dx = next - x;
        if converged(dx, next) || next == x {
            return Ok(next);
        }
        let mid = 0.5 * (br.lo + br.hi);
        if mid == br.lo || mid == br.hi {
            return Ok(next);
        }
        x = next;
    }
    // Newton can stall on pathological derivatives; finish by bisection.
    bisect(|t| f_df(t).0, br)
}

/// Plain bisection to relative width `REL_TOL`, at most `MAX_ITER` halvings.
pub fn bisect(f: impl Fn(f64) -> f64, bracket: Bracket) -> Result<f64> {
    let mut br = bracket;
    let f_lo = f(br.lo);
    let f_hi = f(br.hi);
    if f_lo == 0.0 {
        return Ok(br.lo);
    }
    if f_hi == 0.0 {
        return Ok(br.hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{}, {}]",
            br.lo, br.hi
        )));
    }
    let lo_is_neg = f_lo < 0.0;
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (br.lo + br.hi);
        if mid == br.lo || mid == br.hi || br.width() <= 0.1 * REL_TOL * mid.abs() {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_is_neg {
            br.lo = mid;
        } else {
            br.hi = mid;
        }
    }
    Ok(0.5 * (br.lo + br.hi))
}

/// Bisection in log-space for a root of an increasing function on (0, hi].
///
/// Used for inverting regularly varying functions far below their natural
/// scale, where a linear bracket would need hundreds of halvings.
pub fn log_bisect_increasing(f: impl Fn(f64) -> f64, target: f64, hi: f64) -> Result<f64> {
    if !(f(hi) >= target) {
        return Err(Error::RootFinding(format!(
            "target {target} above f(hi) = {}",
            f(hi)
        )));
    }
    let mut lo = hi;
    let mut steps = 0;
    while f(lo) >= target {
        lo *= 0.5;
        steps += 1;
        if lo == 0.0 || steps > 2000 {
            return Err(Error::RootFinding(format!(
                "target {target} not bracketed above zero"
            )));
        }
    }
    let mut a = lo.ln();
    let mut b = (2.0 * lo).min(hi).ln();
    for _ in 0..MAX_ITER {
        let m = 0.5 * (a + b);
        if b - a <= 0.1 * REL_TOL {
            break;
        }
        if f(m.exp()) < target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b)).exp())
}
