use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::RegVaryingFn;
use crate::moduli::Modulus;

use super::assumption::{check_assumption_a_default, AssumptionAVerdict};
use super::grid::{concave_conjugate, hull_slopes, uniform_grid, GridFunction};

/// Right end of the `y` range used for the transforms.
pub const Y_MAX: f64 = 4.0;
pub const CHAIN_TOL: f64 = 1e-10;

/// Where `θ₁*` is frozen to form `θ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CapRule {
    /// Freeze at `x = 1`. `θ₂*` is then a concave majorant of `θ₁` but not
    /// the smallest one when `θ₁` has slopes above 1.
    AtOne,
    /// Freeze at `max(1, s)` with `s` the steepest hull slope of `θ₁`, past
    /// which `θ₁*` vanishes; `θ₂*` is then the upper concave hull of `θ₁`.
    SteepestSlope,
}

/// All stages of the construction. `omega_big` is `Ω` on `[0, Y_MAX]`.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaPipeline {
    pub theta0: GridFunction,
    pub theta1: GridFunction,
    pub theta1_star: GridFunction,
    pub theta2: GridFunction,
    pub theta2_star: GridFunction,
    pub omega_big: GridFunction,
    pub cap_rule: CapRule,
    pub cap: f64,
    /// `θ₁*(cap)`, added to `θ₂*`.
    pub shift: f64,
    /// Smallest of `θ₁ - θ₀` and `θ₂* - θ₁` over nodes in `[0, 1]`.
    pub chain_slack: f64,
    pub warnings: Vec<String>,
}

impl OmegaPipeline {
    /// `Ω(h)`, clamped to the top of the grid.
    pub fn eval(&self, h: f64) -> f64 {
        self.omega_big.at_bracket(self.omega_big.bracket(h.abs()))
    }

    pub fn stages(&self) -> [(&'static str, &GridFunction); 6] {
        [
            ("theta0", &self.theta0),
            ("theta1", &self.theta1),
            ("theta1_star", &self.theta1_star),
            ("theta2", &self.theta2),
            ("theta2_star", &self.theta2_star),
            ("Omega", &self.omega_big),
        ]
    }

    /// `Ω` as a [`Modulus`], for seminorm estimates.
    pub fn as_modulus(&self) -> Modulus {
        let g = self.omega_big.clone();
        Modulus::custom("Omega", std::sync::Arc::new(move |h: f64| g.at_bracket(g.bracket(h.abs()))))
    }
}

/// `Ω` for the pair `(ω, V)` on a uniform grid of `grid_size` intervals over `[0, 1]`.
pub fn build_omega(omega: &Modulus, v: &RegVaryingFn, grid_size: usize) -> Result<OmegaPipeline> {
    build_omega_with(omega, v, grid_size, CapRule::SteepestSlope)
}

pub fn build_omega_with(omega: &Modulus, v: &RegVaryingFn, grid_size: usize, rule: CapRule) -> Result<OmegaPipeline> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter(format!("grid_size = {grid_size} must be at least 2")));
    }
    let ys = uniform_grid(0.0, 1.0, grid_size);
    let mut vals = Vec::with_capacity(ys.len());
    vals.push(0.0);
    for &h in &ys[1..] {
        let vh = v.eval(h);
        if !(vh > 0.0 && vh.is_finite()) {
            return Err(Error::InvalidParameter(format!("V({h}) = {vh} is not positive")));
        }
        vals.push(omega.eval(h) / vh);
    }
    let theta0 = GridFunction::new(ys, vals)?;
    let mut p = build_omega_from_theta0(theta0, grid_size, rule)?;
    if let AssumptionAVerdict::Violated { h, xi, .. } = check_assumption_a_default(omega, v) {
        p.warnings.push(format!(
            "growth condition on omega/V not certified (violated at h = {h:e}, xi = {xi}); \
             sub-action bounds do not apply"
        ));
    }
    Ok(p)
}

/// Runs the transform chain from sampled `θ₀` on `[0, 1]` with `θ₀(0) = 0`.
pub fn build_omega_from_theta0(theta0: GridFunction, grid_size: usize, rule: CapRule) -> Result<OmegaPipeline> {
    if theta0.x_min() != 0.0 || theta0.x_max() != 1.0 {
        return Err(Error::IncompatibleGrids("theta0 must be sampled on [0, 1]".into()));
    }
    if theta0.ys()[0] != 0.0 {
        return Err(Error::InvalidParameter(format!("theta0(0) = {} must be 0", theta0.ys()[0])));
    }
    let top = theta0.max_value();
    // running max on [0, 1], then constant out to Y_MAX
    let mut ys: Vec<f64> = theta0.xs().to_vec();
    let mut vals = Vec::with_capacity(ys.len() + 3);
    let mut run = f64::NEG_INFINITY;
    for &t in theta0.ys() {
        run = run.max(t);
        vals.push(run.min(top));
    }
    for y in [1.5, 2.0, 3.0, Y_MAX] {
        ys.push(y);
        vals.push(top);
    }
    let theta1 = GridFunction::new(ys, vals)?;

    let steepest = hull_slopes(&theta1).first().copied().unwrap_or(0.0);
    let cap = match rule {
        CapRule::AtOne => 1.0,
        CapRule::SteepestSlope => steepest.max(1.0),
    };
    // breakpoints of θ₁* are the hull slopes; including them makes the
    // second transform exact at the nodes
    let mut xg = uniform_grid(0.0, cap, grid_size);
    xg.extend(hull_slopes(&theta1).into_iter().filter(|&s| s > 0.0 && s < cap));
    xg.sort_by(f64::total_cmp);
    xg.dedup();
    let theta1_star = concave_conjugate(&theta1, &xg)?;
    let shift = theta1_star.eval(cap)?;
    let theta2 = theta1_star.map_values(|_, y| y.min(shift)).mark_concave();
    let theta2_star = concave_conjugate(&theta2, theta1.xs())?;
    let omega_big = theta2_star.map_values(|_, y| y + shift).mark_concave();

    let mut chain_slack = f64::INFINITY;
    for i in 0..theta0.len() {
        chain_slack = chain_slack
            .min(theta1.ys()[i] - theta0.ys()[i])
            .min(theta2_star.ys()[i] - theta1.ys()[i]);
    }
    if chain_slack < -CHAIN_TOL {
        return Err(Error::NotCertified(format!("theta chain violated by {chain_slack:e}")));
    }
    let at_zero = omega_big.ys()[0];
    if at_zero.abs() > CHAIN_TOL {
        return Err(Error::NotCertified(format!("Omega(0) = {at_zero:e}")));
    }
    let mut warnings = Vec::new();
    if rule == CapRule::AtOne && steepest > 1.0 {
        warnings.push(format!(
            "theta1 has slope {steepest:.4e} > 1; freezing at 1 gives a majorant above the concave hull"
        ));
    }
    Ok(OmegaPipeline {
        theta0,
        theta1,
        theta1_star,
        theta2,
        theta2_star,
        omega_big,
        cap_rule: rule,
        cap,
        shift,
        chain_slack,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::make_omega_alpha_beta;

    #[test]
    fn linear_theta0_gives_min_x_one() {
        let t0 = GridFunction::from_fn(uniform_grid(0.0, 1.0, 100), |y| y).unwrap();
        for rule in [CapRule::AtOne, CapRule::SteepestSlope] {
            let p = build_omega_from_theta0(t0.clone(), 100, rule).unwrap();
            assert!(p.shift.abs() < 1e-15);
            for (x, y) in p.omega_big.rows() {
                assert!((y - x.min(1.0)).abs() < 1e-12, "{rule:?} x = {x}: {y}");
            }
        }
    }

    #[test]
    fn omega_vanishes_at_zero() {
        let w = make_omega_alpha_beta(0.8, 0.0).unwrap();
        let v = RegVaryingFn::power(0.5).unwrap();
        for rule in [CapRule::AtOne, CapRule::SteepestSlope] {
            let p = build_omega_with(&w, &v, 500, rule).unwrap();
            assert!(p.eval(0.0).abs() < 1e-10);
            assert!(p.chain_slack >= -1e-10);
            assert!(p.omega_big.check_concave(1e-9));
            assert!(p.warnings.len() == usize::from(rule == CapRule::AtOne));
        }
    }
}
