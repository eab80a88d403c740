//! Existence side: the growth condition on `ω / V`, the majorant `Ω` built
//! from two concave conjugates, expansion constants, and the sub-action
//! `U = sup_k g_k` computed by value iteration on a grid.

mod assumption;
mod expansion;
mod grid;
mod omega;
mod value;

pub use assumption::{
    check_assumption_a, check_assumption_a_default, default_h_grid, default_xi_samples, AssumptionA,
    AssumptionAVerdict, LatticeRow, DRIFT_SHARE, ETA0_LATTICE, GAMMA_FLOOR, XI0_LATTICE,
};
pub use expansion::{
    c7_formula, c8_formula, check_backward_pairing, check_expansion, expansion_data, ExpansionData, PairCheck,
    LAMBDA_SAFETY,
};
pub use grid::{concave_conjugate, concave_majorant, hull_slopes, uniform_grid, upper_hull, GridFunction};
pub use omega::{build_omega, build_omega_from_theta0, build_omega_with, CapRule, OmegaPipeline, CHAIN_TOL, Y_MAX};
pub use value::{
    compute_subaction, sanity_bound, verify_subaction, RandomPotential, SubactionOptions, SubactionResult,
    VerificationReport, DEFAULT_K_CAP, STALL_WINDOW, VERIFY_REFINE,
};
