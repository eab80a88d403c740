use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kahan::NeumaierSum;
use crate::maps::{IntervalMap, Orientation};

use super::average::MaxAverage;
use super::potential::{BumpSign, CounterexamplePotential};

/// Number of trailing certified rows inspected for stabilization.
pub const STABILITY_WINDOW: usize = 10;
/// Allowed relative spread of the running minimum over that window.
pub const STABILITY_SPREAD: f64 = 0.2;
pub const XI_INFLATION: f64 = 0.1;
/// Tolerance on `m(f, T) = 0` before a violation certificate is issued.
pub const M_TOLERANCE: f64 = 1e-10;

/// `f(x) + f(Tx) + ... + f(T^{n-1}x)` with compensated summation.
pub fn birkhoff_sum(map: &IntervalMap, f: impl Fn(f64) -> f64, x: f64, n: usize) -> f64 {
    let mut acc = NeumaierSum::new();
    let mut y = x;
    for _ in 0..n {
        acc += f(y);
        y = map.eval(y);
    }
    acc.sum()
}

/// Index `s` of the connecting segment between `w_{n_{s-1}}` and `w_{n_s}`
/// that ends at the anchor `w_{n_k}` of a positive bump.
pub fn segment_index(k: usize, orientation: Orientation) -> usize {
    match orientation {
        Orientation::TowardZero => k,
        Orientation::AwayFromZero => k + 1,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentRow {
    pub k: usize,
    pub sign: BumpSign,
    pub qualifying: bool,
    /// Orbit index of the segment start.
    pub start_n: usize,
    pub length: usize,
    /// `S_{m} f` along the connecting orbit segment.
    pub segment_sum: f64,
    /// Contribution of segment points lying in `I_k`.
    pub bump_part: f64,
    /// `(C2 / V(w_{n_s})) ω(R_s)`.
    pub lower_bound: f64,
    /// Minimum of `segment_sum` over qualifying rows up to this one.
    pub running_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositiveSums {
    pub rows: Vec<SegmentRow>,
    /// Final running minimum over qualifying rows.
    pub c5_empirical: f64,
    /// `(max - min) / max` of the running minimum over the last window.
    pub spread_last: f64,
    /// First over last running minimum in the same window.
    pub decay_last: f64,
    pub certified: bool,
}

impl PositiveSums {
    pub fn qualifying(&self) -> impl Iterator<Item = &SegmentRow> {
        self.rows.iter().filter(|r| r.qualifying)
    }
}

/// Birkhoff sums along connecting segments of the schedule orbit.
///
/// Rows for non-positive `k` are included as sanity rows. The certificate
/// passes when the running minimum over the last qualifying rows is positive
/// and varies by less than `STABILITY_SPREAD`.
pub fn verify_positive_sums(p: &CounterexamplePotential, k_range: &[usize]) -> Result<PositiveSums> {
    let sched = &p.sched;
    let orientation = p.orientation();
    let consts = sched.constants();
    let mut rows: Vec<SegmentRow> = k_range
        .par_iter()
        .map(|&k| {
            let bump = p.bump(k).ok_or_else(|| {
                Error::InvalidParameter(format!("k = {k} has no bump in the generated range"))
            })?;
            let s = segment_index(k, orientation);
            let (n_lo, n_hi) = (sched.n(s - 1), sched.n(s));
            let len = n_hi - n_lo;
            let mut total = NeumaierSum::new();
            let mut own = NeumaierSum::new();
            for j in 0..len {
                let n = match orientation {
                    Orientation::TowardZero => n_lo + j,
                    Orientation::AwayFromZero => n_hi - j,
                };
                let x = sched.w[n];
                let fx = p.eval(x);
                total += fx;
                if bump.contains(x) {
                    own += fx;
                }
            }
            let start_n = match orientation {
                Orientation::TowardZero => n_lo,
                Orientation::AwayFromZero => n_hi,
            };
            let lower_bound = consts.c2 / sched.speed().eval(sched.w_at(s)) * p.omega.eval(sched.r(s));
            Ok(SegmentRow {
                k,
                sign: bump.sign,
                qualifying: bump.sign == BumpSign::Positive && bump.active,
                start_n,
                length: len,
                segment_sum: total.sum(),
                bump_part: own.sum(),
                lower_bound,
                running_min: f64::NAN,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.k);
    let mut running = f64::INFINITY;
    let mut mins = Vec::new();
    for r in rows.iter_mut().filter(|r| r.qualifying) {
        running = running.min(r.segment_sum);
        r.running_min = running;
        mins.push(running);
    }
    let tail = &mins[mins.len().saturating_sub(STABILITY_WINDOW)..];
    let (spread_last, decay_last) = match (tail.first(), tail.last()) {
        (Some(&a), Some(&b)) => {
            let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
            let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
            ((hi - lo) / hi, a / b)
        }
        _ => (f64::NAN, f64::NAN),
    };
    let c5 = mins.last().copied().unwrap_or(f64::NAN);
    let certified = tail.len() == STABILITY_WINDOW && c5 > 0.0 && spread_last < STABILITY_SPREAD;
    Ok(PositiveSums { rows, c5_empirical: c5, spread_last, decay_last, certified })
}

/// All `k` with a bump, in increasing order.
pub fn all_bump_indices(p: &CounterexamplePotential) -> Vec<usize> {
    p.bumps.iter().map(|b| b.k).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct XiCalibration {
    pub xi_star: f64,
    pub sup_ratio: f64,
    /// `(3/7) C0 σ^{1+1/σ} / C1`
    pub bridging: f64,
    pub ratios: Vec<(usize, f64)>,
    /// Last-quartile drift above 20%: the finite sup may not be the asymptotic one.
    pub flagged: bool,
    pub drift: f64,
}

/// Ratio of the upper bound on positive mass in `I_k` to the lower bound on
/// the negative mass collected before the orbit stops.
pub fn xi_ratio(p: &CounterexamplePotential, k: usize) -> f64 {
    let s = &p.sched;
    let w = &p.omega;
    match p.orientation() {
        Orientation::TowardZero => {
            let dd = s.dk(k + 1, k - 1);
            s.nb(k + 1) * dd * w.eval(dd) / (s.nb(k) * s.dk(k, k + 1) * w.eval(s.r(k + 1)))
        }
        Orientation::AwayFromZero => {
            let dd = s.dk(k + 1, k - 1);
            s.nb(k + 1) * dd * w.eval(dd) / (s.nb(k - 1) * s.dk(k, k - 1) * w.eval(s.r(k)))
        }
    }
}

pub fn calibrate_xi(p: &CounterexamplePotential) -> Result<XiCalibration> {
    let ks = p.positive_indices();
    if ks.is_empty() {
        return Err(Error::InvalidParameter("no active positive bumps to calibrate on".into()));
    }
    let ratios: Vec<(usize, f64)> = ks.iter().map(|&k| (k, xi_ratio(p, k))).collect();
    let sup = ratios.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let c = p.sched.constants();
    let bridging = 3.0 / 7.0 * p.sched.c0 * p.sched.sigma_pow() / c.c1;
    let q = &ratios[ratios.len() - (ratios.len() / 4).max(1)..];
    let hi = q.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let lo = q.iter().map(|r| r.1).fold(f64::MAX, f64::min);
    let drift = (hi - lo) / hi;
    Ok(XiCalibration {
        xi_star: (1.0 + XI_INFLATION) * bridging * sup,
        sup_ratio: sup,
        bridging,
        ratios,
        flagged: drift > 0.2,
        drift,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IncrementRow {
    pub k: usize,
    pub w_nk: f64,
    /// Lower bound on `u(w_{n_k}) - u(segment start)` for any sub-action `u`.
    pub increment: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationCertificate {
    pub rows: Vec<IncrementRow>,
    pub c5_empirical: f64,
    pub m_estimate: f64,
    /// No qualifying `k ≤ K`.
    pub insufficient_depth: bool,
    /// The table forces any sub-action to gain at least `c5_empirical`
    /// infinitely often while `w_{n_k} → 0`.
    pub asserted: bool,
    pub summary: String,
}

pub fn subaction_violation_certificate(
    p: &CounterexamplePotential,
    big_k: usize,
    sums: &PositiveSums,
    m: &MaxAverage,
) -> Result<ViolationCertificate> {
    if m.value.abs() > M_TOLERANCE {
        return Err(Error::NotCertified(format!(
            "max ergodic average estimate {} is not 0 within {M_TOLERANCE}",
            m.value
        )));
    }
    let rows: Vec<IncrementRow> = sums
        .qualifying()
        .filter(|r| r.k <= big_k)
        .map(|r| IncrementRow { k: r.k, w_nk: p.sched.w_at(r.k), increment: r.segment_sum })
        .collect();
    let insufficient_depth = rows.is_empty();
    let asserted = !insufficient_depth && sums.certified;
    let summary = if insufficient_depth {
        format!("insufficient depth: no qualifying k <= {big_k}")
    } else if asserted {
        format!(
            "any sub-action gains at least {:.6e} across each of {} segments approaching 0; \
             no continuous sub-action exists",
            sums.c5_empirical,
            rows.len()
        )
    } else {
        format!(
            "segment sums not bounded away from 0 (spread {:.3}, decay {:.3}); no obstruction certified",
            sums.spread_last, sums.decay_last
        )
    };
    Ok(ViolationCertificate {
        rows,
        c5_empirical: sums.c5_empirical,
        m_estimate: m.value,
        insufficient_depth,
        asserted,
        summary,
    })
}
