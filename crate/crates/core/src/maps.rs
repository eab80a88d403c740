//! Intermittent interval maps with a neutral fixed point at the origin.
//!
//! Every map here has the local form `T(x) = x (1 ± V(x))` on its neutral
//! branch, where `V` is regularly varying at 0. The remaining branches are
//! stored explicitly so that inverse branches can be evaluated for orbit
//! generation, periodic-orbit enumeration and the sub-action value recursion.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::{self, Bracket};

/// Closure type for user-supplied speed functions.
pub type SpeedClosure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SpeedKind {
    /// `V(x) = x^s`.
    Power { s: f64 },
    /// `V` defined implicitly by `V = x^s (1 - V)^(s+1)`.
    MpInverse { s: f64 },
    /// `V(x) = (1 - x^ρ)^(-1/ρ) - 1`.
    FareyExpanding { rho: f64 },
    /// `W(x) = 1 - (1 + x^ρ)^(-1/ρ)`.
    FareyContracting { rho: f64 },
    /// `V(x) = 2^τ / (log 2)^(θ+1) · x^τ |log x|^(θ+1)`.
    LogPerturbed { tau: f64, theta: f64 },
    Custom(SpeedClosure),
}

impl fmt::Debug for SpeedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeedKind::Power { s } => write!(f, "Power {{ s: {s} }}"),
            SpeedKind::MpInverse { s } => write!(f, "MpInverse {{ s: {s} }}"),
            SpeedKind::FareyExpanding { rho } => write!(f, "FareyExpanding {{ rho: {rho} }}"),
            SpeedKind::FareyContracting { rho } => write!(f, "FareyContracting {{ rho: {rho} }}"),
            SpeedKind::LogPerturbed { tau, theta } => {
                write!(f, "LogPerturbed {{ tau: {tau}, theta: {theta} }}")
            }
            SpeedKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A regularly varying speed function `V` with its index.
#[derive(Debug, Clone)]
pub struct RegVaryingFn {
    kind: SpeedKind,
    sigma: f64,
    valid_radius: f64,
}

fn log_coefficient(tau: f64, theta: f64) -> f64 {
    2f64.powf(tau) / std::f64::consts::LN_2.powf(theta + 1.0)
}

impl RegVaryingFn {
    pub fn power(s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("power index s = {s} must be > 0")));
        }
        Ok(RegVaryingFn { kind: SpeedKind::Power { s }, sigma: s, valid_radius: 1.0 })
    }

    /// Custom speed function. The caller vouches for monotonicity and the
    /// declared index; `valid_radius` bounds where that holds.
    pub fn custom(f: SpeedClosure, sigma: f64, valid_radius: f64) -> Result<Self> {
        if !(sigma > 0.0) || !(valid_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "custom speed needs sigma > 0 and valid_radius > 0 (got {sigma}, {valid_radius})"
            )));
        }
        Ok(RegVaryingFn { kind: SpeedKind::Custom(f), sigma, valid_radius })
    }

    pub(crate) fn with_kind(kind: SpeedKind, sigma: f64, valid_radius: f64) -> Self {
        RegVaryingFn { kind, sigma, valid_radius }
    }

    pub fn kind(&self) -> &SpeedKind {
        &self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn valid_radius(&self) -> f64 {
        self.valid_radius
    }

    pub fn with_valid_radius(mut self, r: f64) -> Self {
        self.valid_radius = r;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            SpeedKind::Power { s } => x.powf(*s),
            SpeedKind::MpInverse { s } => mp_inverse_speed(x, *s),
            SpeedKind::FareyExpanding { rho } => (-(-x.powf(*rho)).ln_1p() / rho).exp_m1(),
            SpeedKind::FareyContracting { rho } => -(-(x.powf(*rho)).ln_1p() / rho).exp_m1(),
            SpeedKind::LogPerturbed { tau, theta } => {
                log_coefficient(*tau, *theta) * x.powf(*tau) * (-x.ln()).abs().powf(theta + 1.0)
            }
            SpeedKind::Custom(f) => f(x),
        }
    }

    /// Analytic derivative, where one is available.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return None;
        }
        Some(match &self.kind {
            SpeedKind::Power { s } => s * x.powf(s - 1.0),
            SpeedKind::MpInverse { s } => {
                let v = mp_inverse_speed(x, *s);
                let num = s * x.powf(s - 1.0) * (1.0 - v).powf(s + 1.0);
                num / (1.0 + (s + 1.0) * x.powf(*s) * (1.0 - v).powf(*s))
            }
            SpeedKind::FareyExpanding { rho } => {
                x.powf(rho - 1.0) * (1.0 - x.powf(*rho)).powf(-1.0 / rho - 1.0)
            }
            SpeedKind::FareyContracting { rho } => {
                x.powf(rho - 1.0) * (1.0 + x.powf(*rho)).powf(-1.0 / rho - 1.0)
            }
            SpeedKind::LogPerturbed { tau, theta } => {
                let l = -x.ln();
                log_coefficient(*tau, *theta)
                    * x.powf(tau - 1.0)
                    * l.powf(*theta)
                    * (tau * l - (theta + 1.0))
            }
            SpeedKind::Custom(_) => return None,
        })
    }

    /// Solves `V(x) = y` for `x` in `(0, valid_radius]`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        let r = self.valid_radius;
        let x = roots::log_bisect_increasing(|x| self.eval(x), y, r)?;
        // polish with Newton where available
        if let Some(d) = self.derivative(x) {
            if d > 0.0 {
                let x1 = x - (self.eval(x) - y) / d;
                if x1 > 0.0 && (x1 - x).abs() < 1e-10 * x {
                    return Ok(x1);
                }
            }
        }
        Ok(x)
    }
}

/// Solves `v = x^s (1 - v)^(s+1)` by safeguarded Newton.
fn mp_inverse_speed(x: f64, s: f64) -> f64 {
    let a = x.powf(s);
    let hi = a.min(1.0);
    let f = |v: f64| {
        let q = 1.0 - v;
        (v - a * q.powf(s + 1.0), 1.0 + a * (s + 1.0) * q.powf(s))
    };
    // first-order guess v ≈ a / (1 + (s+1) a)
    let guess = a / (1.0 + (s + 1.0) * a);
    roots::newton_bisect(f, Bracket::new(0.0, hi), Some(guess)).unwrap_or(guess)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// `T(x) = x (1 + V(x))`: orbits leave the origin.
    AwayFromZero,
    /// `T(x) = x (1 - V(x))`: orbits approach the origin.
    TowardZero,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::AwayFromZero => 1.0,
            Orientation::TowardZero => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Family {
    MannevillePomeau { s: f64 },
    MpInverse { s: f64 },
    Farey { rho: f64 },
    FareyInverse { rho: f64 },
    H { rho: f64 },
    LogMap { tau: f64, theta: f64 },
    Custom { orientation: Orientation },
    /// `x ↦ 2x mod 1`; both branches affine, no neutral point.
    Doubling,
}

impl Family {
    pub fn id(&self) -> &'static str {
        match self {
            Family::MannevillePomeau { .. } => "mp",
            Family::MpInverse { .. } => "mp-inverse",
            Family::Farey { .. } => "farey-f",
            Family::FareyInverse { .. } => "farey-g",
            Family::H { .. } => "h",
            Family::LogMap { .. } => "log",
            Family::Custom { .. } => "custom",
            Family::Doubling => "doubling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BranchKind {
    /// `x (1 ± V(x))`.
    Neutral,
    /// `x (1 + V(x)) - 1`, the wrapped continuation of the neutral formula.
    Wrapped,
    /// `(1 - x^ρ)^(1/ρ) / x`, decreasing.
    FareyReturn { rho: f64 },
    Affine { slope: f64, offset: f64 },
}

/// One monotone piece of an interval map.
#[derive(Debug, Clone, Copy)]
pub struct Branch {
    pub lo: f64,
    pub hi: f64,
    pub image_lo: f64,
    pub image_hi: f64,
    pub increasing: bool,
    kind: BranchKind,
}

impl Branch {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A piecewise monotone map of `[0, 1]` with a neutral fixed point at 0.
#[derive(Debug, Clone)]
pub struct IntervalMap {
    family: Family,
    orientation: Orientation,
    speed: Option<RegVaryingFn>,
    cut: Option<f64>,
    lambda: Option<f64>,
    branches: Vec<Branch>,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

/// Builds a map of the requested family.
pub fn make_map(family: Family) -> Result<IntervalMap> {
    match family {
        Family::MannevillePomeau { s } => {
            check(s > 0.0, || format!("Manneville-Pomeau requires s > 0 (got {s})"))?;
            let c = roots::bisect(|x| x * (1.0 + x.powf(s)) - 1.0, Bracket::new(0.0, 1.0))?;
            let speed = RegVaryingFn::with_kind(SpeedKind::Power { s }, s, c);
            let lambda = 1.0 + (1.0 + s) * c.powf(s);
            Ok(IntervalMap {
                family,
                orientation: Orientation::AwayFromZero,
                speed: Some(speed),
                cut: Some(c),
                lambda: Some(lambda),
                branches: vec![
                    branch(0.0, c, 0.0, 1.0, true, BranchKind::Neutral),
                    branch(c, 1.0, 0.0, 1.0, true, BranchKind::Wrapped),
                ],
            })
        }
        Family::MpInverse { s } => {
            check(s > 0.0, || format!("inverse Manneville-Pomeau requires s > 0 (got {s})"))?;
            let c = roots::bisect(|x| x * (1.0 + x.powf(s)) - 1.0, Bracket::new(0.0, 1.0))?;
            let speed = RegVaryingFn::with_kind(SpeedKind::MpInverse { s }, s, 1.0);
            Ok(IntervalMap {
                family,
                orientation: Orientation::TowardZero,
                speed: Some(speed),
                cut: None,
                lambda: None,
                branches: vec![branch(0.0, 1.0, 0.0, c, true, BranchKind::Neutral)],
            })
        }
        Family::Farey { rho } => {
            check(rho > 0.0 && rho <= 1.0, || format!("Farey requires rho in (0, 1] (got {rho})"))?;
            let c = 0.5f64.powf(1.0 / rho);
            let speed = RegVaryingFn::with_kind(SpeedKind::FareyExpanding { rho }, rho, c);
            Ok(IntervalMap {
                family,
                orientation: Orientation::AwayFromZero,
                speed: Some(speed),
                cut: Some(c),
                lambda: None,
                branches: vec![
                    branch(0.0, c, 0.0, 1.0, true, BranchKind::Neutral),
                    branch(c, 1.0, 0.0, 1.0, false, BranchKind::FareyReturn { rho }),
                ],
            })
        }
        Family::FareyInverse { rho } => {
            check(rho > 0.0 && rho <= 1.0, || {
                format!("inverse Farey requires rho in (0, 1] (got {rho})")
            })?;
            let speed = RegVaryingFn::with_kind(SpeedKind::FareyContracting { rho }, rho, 1.0);
            let top = 0.5f64.powf(1.0 / rho);
            Ok(IntervalMap {
                family,
                orientation: Orientation::TowardZero,
                speed: Some(speed),
                cut: None,
                lambda: None,
                branches: vec![branch(0.0, 1.0, 0.0, top, true, BranchKind::Neutral)],
            })
        }
        Family::H { rho } => {
            check(rho > 0.0 && rho <= 1.0, || format!("H requires rho in (0, 1] (got {rho})"))?;
            let c = 0.5f64.powf(1.0 / rho);
            let k = 2f64.powf(1.0 / rho);
            let speed = RegVaryingFn::with_kind(SpeedKind::FareyExpanding { rho }, rho, c);
            let slope = k / (k - 1.0);
            Ok(IntervalMap {
                family,
                orientation: Orientation::AwayFromZero,
                speed: Some(speed),
                cut: Some(c),
                lambda: Some(slope),
                branches: vec![
                    branch(0.0, c, 0.0, 1.0, true, BranchKind::Neutral),
                    branch(c, 1.0, 0.0, 1.0, true, BranchKind::Affine {
                        slope,
                        offset: -1.0 / (k - 1.0),
                    }),
                ],
            })
        }
        Family::LogMap { tau, theta } => {
            check(tau > 0.0 && tau <= 1.0 && theta >= 0.0, || {
                format!("log map requires tau in (0, 1] and theta >= 0 (got {tau}, {theta})")
            })?;
            let radius = log_map_radius(tau, theta)?;
            let speed =
                RegVaryingFn::with_kind(SpeedKind::LogPerturbed { tau, theta }, tau, radius);
            Ok(IntervalMap {
                family,
                orientation: Orientation::AwayFromZero,
                speed: Some(speed),
                cut: Some(0.5),
                lambda: Some(2.0),
                branches: vec![
                    branch(0.0, 0.5, 0.0, 1.0, true, BranchKind::Neutral),
                    branch(0.5, 1.0, 0.0, 1.0, true, BranchKind::Affine {
                        slope: 2.0,
                        offset: -1.0,
                    }),
                ],
            })
        }
        Family::Custom { .. } => Err(Error::InvalidParameter(
            "custom maps are built with make_custom_map".into(),
        )),
        Family::Doubling => Ok(IntervalMap {
            family,
            orientation: Orientation::AwayFromZero,
            speed: None,
            cut: Some(0.5),
            lambda: Some(2.0),
            branches: vec![
                branch(0.0, 0.5, 0.0, 1.0, true, BranchKind::Affine { slope: 2.0, offset: 0.0 }),
                branch(0.5, 1.0, 0.0, 1.0, true, BranchKind::Affine { slope: 2.0, offset: -1.0 }),
            ],
        }),
    }
}

/// Map built from a user speed function.
///
/// `AwayFromZero` maps are completed by an affine expanding branch from the
/// cut `c` (where `c (1 + V(c)) = 1`) onto `[0, 1]`; `TowardZero` maps are a
/// single neutral branch on `[0, 1]`.
pub fn make_custom_map(speed: RegVaryingFn, orientation: Orientation) -> Result<IntervalMap> {
    let family = Family::Custom { orientation };
    match orientation {
        Orientation::AwayFromZero => {
            let c = roots::bisect(|x| x * (1.0 + speed.eval(x)) - 1.0, Bracket::new(0.0, 1.0))?;
            let slope = 1.0 / (1.0 - c);
            let speed = if speed.valid_radius() > c { speed.with_valid_radius(c) } else { speed };
            Ok(IntervalMap {
                family,
                orientation,
                speed: Some(speed),
                cut: Some(c),
                lambda: Some(slope),
                branches: vec![
                    branch(0.0, c, 0.0, 1.0, true, BranchKind::Neutral),
                    branch(c, 1.0, 0.0, 1.0, true, BranchKind::Affine {
                        slope,
                        offset: -c * slope,
                    }),
                ],
            })
        }
        Orientation::TowardZero => {
            let top = 1.0 - speed.eval(1.0);
            Ok(IntervalMap {
                family,
                orientation,
                speed: Some(speed),
                cut: None,
                lambda: None,
                branches: vec![branch(0.0, 1.0, 0.0, top, true, BranchKind::Neutral)],
            })
        }
    }
}

fn branch(lo: f64, hi: f64, image_lo: f64, image_hi: f64, increasing: bool, kind: BranchKind) -> Branch {
    Branch { lo, hi, image_lo, image_hi, increasing, kind }
}

/// Largest radius on which the log-perturbed speed is increasing and below 1.
fn log_map_radius(tau: f64, theta: f64) -> Result<f64> {
    let peak = (-(theta + 1.0) / tau).exp().min(0.5);
    let v = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            log_coefficient(tau, theta) * x.powf(tau) * (-x.ln()).powf(theta + 1.0)
        }
    };
    if v(peak) < 1.0 {
        return Ok(peak);
    }
    roots::log_bisect_increasing(v, 1.0, peak).map(|r| r * (1.0 - 1e-12))
}

impl IntervalMap {
    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The neutral-branch speed function.
    pub fn speed(&self) -> Result<&RegVaryingFn> {
        self.speed.as_ref().ok_or(Error::NoNeutralBranch)
    }

    pub fn cut(&self) -> Option<f64> {
        self.cut
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Two full increasing branches with an expanding right branch.
    pub fn in_class_j(&self) -> bool {
        self.branches.len() == 2
            && self.orientation == Orientation::AwayFromZero
            && self.branches.iter().all(|b| b.increasing)
            && self.lambda.map_or(false, |l| l > 1.0)
    }

    /// Index of the branch whose domain contains `x` (left-closed at the cut).
    pub fn branch_index(&self, x: f64) -> usize {
        self.branches
            .iter()
            .position(|b| x <= b.hi)
            .unwrap_or(self.branches.len() - 1)
    }

    /// Evaluates the neutral local form `x (1 ± V(x))` without branch dispatch.
    pub fn neutral(&self, x: f64) -> f64 {
        match &self.speed {
            Some(v) => x * (1.0 + self.orientation.sign() * v.eval(x)),
            None => self.apply_branch(0, x),
        }
    }

    fn apply_branch(&self, i: usize, x: f64) -> f64 {
        let b = &self.branches[i];
        let y = match b.kind {
            BranchKind::Neutral => self.neutral(x),
            BranchKind::Wrapped => {
                let v = self.speed.as_ref().map_or(0.0, |v| v.eval(x));
                x * (1.0 + v) - 1.0
            }
            BranchKind::FareyReturn { rho } => (-x.powf(rho)).ln_1p().mul_add(1.0 / rho, 0.0).exp() / x,
            BranchKind::Affine { slope, offset } => slope * x + offset,
        };
        y.clamp(b.image_lo, b.image_hi)
    }

    fn branch_derivative(&self, i: usize, x: f64) -> Option<f64> {
        let b = &self.branches[i];
        match b.kind {
            BranchKind::Neutral | BranchKind::Wrapped => {
                let v = self.speed.as_ref()?;
                let sign = if b.kind == BranchKind::Wrapped { 1.0 } else { self.orientation.sign() };
                Some(1.0 + sign * (v.eval(x) + x * v.derivative(x)?))
            }
            BranchKind::FareyReturn { rho } => {
                // d/dx [(1 - x^ρ)^(1/ρ) / x] = -(1 - x^ρ)^(1/ρ - 1) x^(ρ-2)
                Some(-(1.0 - x.powf(rho)).powf(1.0 / rho - 1.0) * x.powf(rho - 2.0))
            }
            BranchKind::Affine { slope, .. } => Some(slope),
        }
    }

    /// `T(x)` for `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let x = x.min(1.0);
        self.apply_branch(self.branch_index(x), x)
    }

    /// Point `x` in the domain of `branch` with `T(x) = y`.
    pub fn inverse_branch(&self, branch_idx: usize, y: f64) -> Result<f64> {
        let b = *self.branches.get(branch_idx).ok_or(Error::NoSuchBranch(branch_idx))?;
        let slack = 1e-15;
        if !(y >= b.image_lo - slack && y <= b.image_hi + slack) {
            return Err(Error::OutsideBranchImage {
                branch: branch_idx,
                value: y,
                lo: b.image_lo,
                hi: b.image_hi,
            });
        }
        let y = y.clamp(b.image_lo, b.image_hi);
        match b.kind {
            BranchKind::Affine { slope, offset } => {
                return Ok(((y - offset) / slope).clamp(b.lo, b.hi));
            }
            BranchKind::FareyReturn { rho } => {
                // (1 - x^ρ)^(1/ρ) / x = y  ⇔  x = (1 + y^ρ)^(-1/ρ)
                if y <= 0.0 {
                    return Ok(b.hi);
                }
                return Ok((-(y.powf(rho)).ln_1p() / rho).exp().clamp(b.lo, b.hi));
            }
            _ => {}
        }
        if b.kind == BranchKind::Neutral && y == 0.0 {
            return Ok(0.0);
        }
        if let (BranchKind::Neutral, Family::FareyInverse { rho }) = (b.kind, &self.family) {
            // G_ρ(x) = x / (1 + x^ρ)^(1/ρ) inverts to x = y / (1 - y^ρ)^(1/ρ)
            return Ok((y * (-(-y.powf(*rho)).ln_1p() / rho).exp()).clamp(b.lo, b.hi));
        }
        let mut br = Bracket::new(b.lo, b.hi);
        if b.kind == BranchKind::Neutral {
            br = match self.orientation {
                Orientation::AwayFromZero => {
                    // V < 1 inside the valid radius puts the root above y/2
                    let half = (0.5 * y).max(b.lo);
                    let lo = if self.neutral(half) <= y { half } else { b.lo };
                    Bracket::new(lo, y.min(b.hi))
                }
                Orientation::TowardZero => Bracket::new(y.max(b.lo), b.hi),
            };
        }
        let g = |x: f64| self.apply_branch_unclamped(branch_idx, x) - y;
        let x = match self.branch_derivative(branch_idx, br.lo.max(f64::MIN_POSITIVE)) {
            Some(_) => roots::newton_bisect(
                |x| (g(x), self.branch_derivative(branch_idx, x).unwrap_or(f64::NAN)),
                br,
                Some(y.clamp(br.lo, br.hi)),
            ),
            None => roots::bisect(g, br),
        };
        match x {
            Ok(x) => Ok(x),
            // endpoint roundoff: the image edge maps to the domain edge
            Err(_) if (y - b.image_hi).abs() < 1e-12 => Ok(if b.increasing { b.hi } else { b.lo }),
            Err(_) if (y - b.image_lo).abs() < 1e-12 => Ok(if b.increasing { b.lo } else { b.hi }),
            Err(e) => Err(e),
        }
    }

    fn apply_branch_unclamped(&self, i: usize, x: f64) -> f64 {
        let b = &self.branches[i];
        match b.kind {
            BranchKind::Neutral => self.neutral(x),
            BranchKind::Wrapped => {
                let v = self.speed.as_ref().map_or(0.0, |v| v.eval(x));
                x * (1.0 + v) - 1.0
            }
            _ => self.apply_branch(i, x),
        }
    }

    /// All preimages of `y`, one per branch whose image contains it.
    pub fn preimages(&self, y: f64) -> Vec<f64> {
        (0..self.branches.len())
            .filter_map(|i| self.inverse_branch(i, y).ok())
            .collect()
    }
}

/// Ratio table for the regular-variation limit `V(tx)/V(x) → t^σ`.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub t_values: Vec<f64>,
    pub targets: Vec<f64>,
    /// `(level j, x_j, ratios per t)`; a ratio is `NaN` where `t x_j` lies
    /// outside the valid radius.
    pub rows: Vec<(usize, f64, Vec<f64>)>,
    pub max_deviation_deepest: f64,
    pub deepest_level: usize,
    pub truncated: bool,
}

pub fn check_regular_variation(v: &RegVaryingFn, t_set: &[f64], depth: usize) -> Result<RatioReport> {
    if t_set.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("t values must be positive".into()));
    }
    let targets: Vec<f64> = t_set.iter().map(|t| t.powf(v.sigma())).collect();
    let mut rows = Vec::new();
    let mut truncated = false;
    for j in 0..=depth {
        let x = v.valid_radius() * 0.5f64.powi(j as i32);
        let vx = v.eval(x);
        if !(x > 0.0) || !(vx > 0.0) || !vx.is_finite() {
            truncated = true;
            break;
        }
        let mut ratios = Vec::with_capacity(t_set.len());
        let mut underflow = false;
        for &t in t_set {
            let tx = t * x;
            if tx > v.valid_radius() {
                ratios.push(f64::NAN);
                continue;
            }
            let vt = v.eval(tx);
            if !(vt > 0.0) || !vt.is_finite() {
                underflow = true;
                break;
            }
            ratios.push(vt / vx);
        }
        if underflow {
            truncated = true;
            break;
        }
        rows.push((j, x, ratios));
    }
    let (deepest_level, max_dev) = match rows.last() {
        Some((j, _, ratios)) => {
            let dev = ratios
                .iter()
                .zip(&targets)
                .filter(|(r, _)| r.is_finite())
                .map(|(r, t)| (r - t).abs())
                .fold(0.0, f64::max);
            (*j, dev)
        }
        None => (0, f64::NAN),
    };
    Ok(RatioReport {
        t_values: t_set.to_vec(),
        targets,
        rows,
        max_deviation_deepest: max_dev,
        deepest_level,
        truncated,
    })
}
