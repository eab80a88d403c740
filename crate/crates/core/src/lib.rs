//! Numerical toolkit for sub-actions of intermittent interval maps.
//!
//! The crate covers two opposite regimes. When the modulus of continuity
//! `ω` dominates the map's local speed `V` near the neutral point
//! (`liminf ω/V > 0`), [`obstruction`] builds a potential with no continuous
//! sub-action and produces finite numerical certificates of that fact. When
//! `ω/V → 0` fast enough, [`subaction`] constructs an `Ω`-continuous
//! sub-action by value iteration on a grid and verifies it.

mod error;
pub mod kahan;
pub mod maps;
pub mod moduli;
pub mod obstruction;
pub mod orbits;
pub mod roots;
pub mod subaction;

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use maps::{check_regular_variation, make_custom_map, make_map, Family, IntervalMap, Orientation, RegVaryingFn};
pub use moduli::{check_modulus, liminf_ratio, make_omega_alpha_beta, make_omega_log, modulus_norm, Modulus, RegimeTag};
pub use orbits::{asymptotic_report, estimate_c0_and_gates, generate_schedule, scale_b, window_count, ScheduleParams, WSchedule};
