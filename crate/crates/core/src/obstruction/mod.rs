//! Potentials with no continuous sub-action.
//!
//! On a schedule `w_{n_k}` the potential `f = Φ ω(d(·, S))` alternates
//! positive and `ξ`-weighted negative bumps on the intervals `I_k`. Orbit
//! segments crossing a positive bump collect a definite amount of `f`,
//! which forces any sub-action to jump by a fixed amount arbitrarily close
//! to 0. A large enough `ξ` keeps `m(f, T) = 0`, certified by stopping times.

mod average;
mod potential;
mod stopping;
mod sums;

pub use average::{estimate_max_average, lyndon_words, periodic_orbit, MaxAverage, Witness};
pub use potential::{build_potential, eval_potential, partner, Bump, BumpSign, CounterexamplePotential};
pub use stopping::{l_k, sample_points, verify_stopping, verify_stopping_batch, StoppingRecord, StoppingSummary, STOPPING_TOL};
pub use sums::{
    all_bump_indices, birkhoff_sum, calibrate_xi, segment_index, subaction_violation_certificate, verify_positive_sums,
    xi_ratio, IncrementRow, PositiveSums, SegmentRow, ViolationCertificate, XiCalibration, M_TOLERANCE,
    STABILITY_SPREAD, STABILITY_WINDOW, XI_INFLATION,
};
