use subact_core::maps::{make_map, Family, IntervalMap, Orientation};
use subact_core::moduli::{make_omega_alpha_beta, Modulus};
use subact_core::obstruction::*;
use subact_core::orbits::{estimate_c0_and_gates, generate_schedule, ScheduleParams, WSchedule};
use subact_core::Error;

fn schedule(family: Family, w0: f64, n1: usize, k_max: usize) -> WSchedule {
    let map = make_map(family).unwrap();
    let mut p = ScheduleParams::new(w0, 0.96, k_max, n1);
    p.c0_inflation = 0.005;
    let s = generate_schedule(&map, p).unwrap();
    let (_, gates) = estimate_c0_and_gates(&s);
    s.trimmed(gates.recommended_trim.expect("some head trim passes the gates"))
}

fn mp_half() -> WSchedule {
    schedule(Family::MannevillePomeau { s: 0.5 }, 0.25, 200, 100)
}

fn farey_g() -> WSchedule {
    schedule(Family::FareyInverse { rho: 1.0 }, 0.5, 1000, 120)
}

fn holder(a: f64) -> Modulus {
    make_omega_alpha_beta(a, 0.0).unwrap()
}

fn calibrated(s: &WSchedule, a: f64) -> CounterexamplePotential {
    let p = build_potential(s, &holder(a), 1.0).unwrap();
    let xi = calibrate_xi(&p).unwrap().xi_star;
    p.with_xi(xi)
}

#[test]
fn potential_vanishes_on_anchor_set() {
    for s in [mp_half(), farey_g()] {
        let p = build_potential(&s, &holder(0.3), 2.0).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        for k in s.k_start..=s.k_max() {
            assert_eq!(p.eval(s.w_at(k)), 0.0, "k = {k}");
        }
        assert_eq!(p.eval(1.0), 0.0);
    }
}

#[test]
fn bump_geometry() {
    let s = farey_g();
    let p = build_potential(&s, &holder(0.5), 3.0).unwrap();
    for b in &p.bumps {
        let (wp, w, wn) = (s.w_at(b.k - 1), s.w_at(b.k), s.w_at(b.k + 1));
        assert_eq!(b.lo, (3.0 * w + 2.0 * wn) / 5.0);
        assert_eq!(b.hi, (3.0 * w + 2.0 * wp) / 5.0);
        assert_eq!(b.sign, BumpSign::for_index(b.k, Orientation::TowardZero));
    }
    for pair in p.bumps.windows(2) {
        let gap = pair[0].lo - pair[1].hi;
        let want = (s.w_at(pair[0].k) - s.w_at(pair[1].k)) / 5.0;
        assert!(gap > 0.0 && (gap - want).abs() <= 1e-12 * want.max(1e-300) + 1e-18);
    }
}

#[test]
fn sign_pattern_swaps_with_orientation() {
    assert_eq!(BumpSign::for_index(4, Orientation::TowardZero), BumpSign::Positive);
    assert_eq!(BumpSign::for_index(5, Orientation::TowardZero), BumpSign::Negative);
    assert_eq!(BumpSign::for_index(6, Orientation::TowardZero), BumpSign::Zero);
    assert_eq!(BumpSign::for_index(4, Orientation::AwayFromZero), BumpSign::Negative);
    assert_eq!(BumpSign::for_index(5, Orientation::AwayFromZero), BumpSign::Positive);
    assert_eq!(partner(4, Orientation::TowardZero), 5);
    assert_eq!(partner(5, Orientation::AwayFromZero), 4);
}

#[test]
fn pointwise_values() {
    let s = farey_g();
    let xi = 3.0;
    let p = build_potential(&s, &holder(0.5), xi).unwrap();
    let om = holder(0.5);
    for b in p.bumps.iter().filter(|b| b.active) {
        let mid = 0.5 * (b.core_lo + b.core_hi);
        let d = p.distance_to_s(mid);
        match b.sign {
            BumpSign::Positive => assert_eq!(p.eval(mid), om.eval(d)),
            BumpSign::Negative => {
                assert_eq!(p.eval(mid), -xi * om.eval(d));
                let x = 0.5 * (b.lo + b.core_lo);
                let v = p.eval(x);
                assert!(v <= 0.0 && v >= -xi * om.eval(p.distance_to_s(x)));
            }
            BumpSign::Zero => assert_eq!(p.eval(mid), 0.0),
        }
        let (jl, jh) = p.j_interval(b.k);
        assert_eq!(p.eval(0.5 * (jl + jh)), 0.0);
    }
    // |f| ≤ max(1, ξ) ω(d(x, S))
    let lo = s.w_at(s.k_max());
    let hi = s.w_at(s.k_start);
    for i in 0..20_000 {
        let x = lo + (hi - lo) * i as f64 / 20_000.0;
        assert!(p.eval(x).abs() <= xi * om.eval(p.distance_to_s(x)) * (1.0 + 1e-12));
        assert!(p.partition_sum(x) <= 1.0);
    }
}

#[test]
fn hat_is_omega_lipschitz_in_transition() {
    let s = mp_half();
    let p = build_potential(&s, &holder(0.3), 1.0).unwrap();
    for b in &p.bumps {
        let w = b.transition_width();
        assert!(w > 0.0);
        let x = b.lo + 0.3 * (b.core_lo - b.lo);
        let y = b.lo + 0.6 * (b.core_lo - b.lo);
        assert!((b.hat(x) - b.hat(y)).abs() <= (x - y).abs() / w + 1e-12);
        assert_eq!(b.hat(b.lo), 0.0);
        assert_eq!(b.hat(b.hi), 0.0);
    }
}

#[test]
fn birkhoff_sum_matches_orbit_table() {
    let map = make_map(Family::FareyInverse { rho: 1.0 }).unwrap();
    assert_eq!(birkhoff_sum(&map, |_| 1.0, 0.3, 0), 0.0);
    assert_eq!(birkhoff_sum(&map, |_| 0.25, 0.3, 12), 3.0);
    let s = farey_g();
    let p = build_potential(&s, &holder(0.5), 2.0).unwrap();
    for k in [s.k_start + 4, s.k_start + 20, s.k_max() - 3] {
        let (a, b) = (s.n(k - 1), s.n(k));
        let direct = birkhoff_sum(&s.map, |x| p.eval(x), s.w[a], b - a);
        let table: f64 = (a..b).map(|n| p.eval(s.w[n])).sum();
        assert!((direct - table).abs() <= 1e-9 * table.abs().max(1e-12), "k = {k}: {direct} vs {table}");
    }
}

#[test]
fn positive_sums_certify_below_sigma() {
    let s = mp_half();
    let p = calibrated(&s, 0.3);
    let sums = verify_positive_sums(&p, &all_bump_indices(&p)).unwrap();
    assert!(sums.certified, "{:?}", sums.spread_last);
    assert!(sums.c5_empirical > 0.0);
    for r in &sums.rows {
        match r.sign {
            BumpSign::Zero => assert_eq!(r.bump_part, 0.0),
            BumpSign::Negative => assert!(r.bump_part <= 0.0),
            BumpSign::Positive => assert!(r.bump_part >= 0.0),
        }
        if r.qualifying {
            assert!(r.segment_sum >= r.lower_bound, "k = {}", r.k);
        }
    }
}

#[test]
fn xi_ratio_matches_closed_form_on_farey() {
    let s = farey_g();
    let p = build_potential(&s, &holder(0.5), 1.0).unwrap();
    let om = holder(0.5);
    // G(x) = x / (1 + x): w_n = 1/(n + 2), V(x) = x/(1+x), b(n) = n - 1
    let w = |k: usize| 1.0 / (s.n(k) as f64 + 2.0);
    let nb = |k: usize| s.n(k) as f64 * (s.n(k) as f64 - 1.0);
    let r = |k: usize| nb(k - 1) / nb(k) * (w(k - 1) - w(k)) / (3.0 * s.c0.powi(3));
    let cal = calibrate_xi(&p).unwrap();
    for &(k, ratio) in &cal.ratios {
        let d = w(k - 1) - w(k + 1);
        let want = nb(k + 1) * d * om.eval(d) / (nb(k) * (w(k) - w(k + 1)) * om.eval(r(k + 1)));
        assert!((ratio - want).abs() <= 1e-6 * want, "k = {k}: {ratio} vs {want}");
    }
    assert!(cal.sup_ratio.is_finite() && !cal.flagged);
}

#[test]
fn calibration_is_needed_and_sufficient_on_samples() {
    for (s, a) in [(farey_g(), 0.5), (mp_half(), 0.3)] {
        let p = calibrated(&s, a);
        let xs = sample_points(&p, 1000, 11);
        let (good, _) = verify_stopping_batch(&p, &xs).unwrap();
        assert!(good.all_nonpositive, "max sum {}", good.max_sum);
        assert!(good.xi_critical < p.xi);
        let weak = p.with_xi(0.5 * good.xi_critical);
        let (bad, _) = verify_stopping_batch(&weak, &xs).unwrap();
        assert!(bad.max_sum > 0.0);
    }
}

#[test]
fn stopping_examples() {
    let s = mp_half();
    let p = calibrated(&s, 0.3);
    let k = p.positive_indices()[3];
    let (jl, jh) = p.j_interval(k);
    let r = verify_stopping(&p, 0.5 * (jl + jh)).unwrap();
    assert_eq!((r.n_x, r.sum), (1, 0.0));
    let neg = p.bumps.iter().find(|b| b.sign == BumpSign::Negative).unwrap();
    let r = verify_stopping(&p, 0.5 * (neg.core_lo + neg.core_hi)).unwrap();
    assert_eq!(r.n_x, 1);
    assert!(r.sum <= 0.0);
    for &k in &p.positive_indices() {
        let b = p.bump(k).unwrap();
        let r = verify_stopping(&p, 0.5 * (b.core_lo + b.core_hi)).unwrap();
        assert!(r.sum <= STOPPING_TOL);
        assert!(r.p <= r.l_cap.unwrap(), "k = {k}: p = {} > {:?}", r.p, r.l_cap);
        assert_eq!(r.l_cap, Some(l_k(&p, k) + l_k(&p, k + 1) - 2));
    }
}

fn lyndon_count(n: usize) -> usize {
    let mobius = |mut d: usize| -> i64 {
        let mut m = 1;
        let mut q = 2;
        while q * q <= d {
            if d % q == 0 {
                d /= q;
                if d % q == 0 {
                    return 0;
                }
                m = -m;
            }
            q += 1;
        }
        if d > 1 {
            -m
        } else {
            m
        }
    };
    let s: i64 = (1..=n).filter(|d| n % d == 0).map(|d| mobius(d) * (1i64 << (n / d))).sum();
    (s / n as i64) as usize
}

#[test]
fn lyndon_words_count() {
    let words = lyndon_words(2, 12);
    for n in 1..=12 {
        assert_eq!(words.iter().filter(|w| w.len() == n).count(), lyndon_count(n), "n = {n}");
    }
    assert_eq!(lyndon_words(3, 3).len(), 3 + 3 + 8);
}

fn period_two(map: &IntervalMap) -> Vec<f64> {
    let pts = periodic_orbit(map, &[0, 1]).unwrap();
    assert!((map.eval(pts[0]) - pts[1]).abs() < 1e-12);
    assert!((map.eval(pts[1]) - pts[0]).abs() < 1e-12);
    pts
}

#[test]
fn max_average_examples() {
    let map = make_map(Family::MannevillePomeau { s: 1.0 }).unwrap();
    let one = estimate_max_average(&map, &|_| 1.0, 6, 10_000, 0);
    assert_eq!(one.value, 1.0);
    let pts = period_two(&map);
    assert!(pts[0] < map.cut().unwrap() && pts[1] > map.cut().unwrap());
    let xp = pts[0];
    let f = move |x: f64| -(x - xp).abs();
    let est = estimate_max_average(&map, &f, 8, 100_000, 0);
    let orbit_avg = 0.5 * (f(pts[0]) + f(pts[1]));
    assert!(est.value >= orbit_avg - 1e-12);
}

#[test]
fn counterexample_has_zero_max_average() {
    let s = mp_half();
    let p = calibrated(&s, 0.3);
    let f = |x: f64| p.eval(x);
    let m = estimate_max_average(&s.map, &f, 12, 1_000_000, 5);
    assert_eq!(m.dirac0, 0.0);
    assert!(m.value.abs() <= M_TOLERANCE);
    assert!(m.periodic_best.unwrap().1 <= 1e-10);
}

#[test]
fn violation_certificate_table() {
    let s = farey_g();
    let p = calibrated(&s, 0.5);
    let sums = verify_positive_sums(&p, &all_bump_indices(&p)).unwrap();
    let f = |x: f64| p.eval(x);
    let m = estimate_max_average(&s.map, &f, 10, 200_000, 1);
    let cert = subaction_violation_certificate(&p, s.k_max(), &sums, &m).unwrap();
    assert!(cert.asserted, "{}", cert.summary);
    assert!(cert.rows.iter().all(|r| r.increment > 0.0 && r.k % 3 == 1));
    let first = cert.rows[0].k;
    let shallow = subaction_violation_certificate(&p, first - 1, &sums, &m).unwrap();
    assert!(shallow.insufficient_depth && shallow.rows.is_empty() && !shallow.asserted);
    let mut off = m.clone();
    off.value = 1e-3;
    assert!(matches!(subaction_violation_certificate(&p, s.k_max(), &sums, &off), Err(Error::NotCertified(_))));
}

#[test]
fn vanishing_regime_is_not_asserted() {
    let s = mp_half();
    let p = calibrated(&s, 1.0);
    assert!(!p.warnings.is_empty());
    let sums = verify_positive_sums(&p, &p.positive_indices()).unwrap();
    let f = |x: f64| p.eval(x);
    let m = estimate_max_average(&s.map, &f, 8, 100_000, 1);
    let cert = subaction_violation_certificate(&p, s.k_max(), &sums, &m).unwrap();
    assert!(!cert.asserted);
    let inc: Vec<f64> = cert.rows.iter().map(|r| r.increment).collect();
    assert!(inc.windows(2).filter(|w| w[1] < w[0]).count() >= inc.len() * 3 / 4);
}
