use subact_core::maps::{make_map, Family, IntervalMap, RegVaryingFn};
use subact_core::moduli::{make_omega_alpha_beta, make_omega_log, Modulus};
use subact_core::obstruction::estimate_max_average;
use subact_core::subaction::*;

fn mp_half() -> IntervalMap {
    make_map(Family::MannevillePomeau { s: 0.5 }).unwrap()
}

fn omega_08() -> Modulus {
    make_omega_alpha_beta(0.8, 0.0).unwrap()
}

fn big_08(grid: usize) -> OmegaPipeline {
    build_omega(&omega_08(), &RegVaryingFn::power(0.5).unwrap(), grid).unwrap()
}

/// `max_{j <= k} max_{T^j y = x} S_j (f - m)(y)` by walking the full preimage tree.
fn tree_sup(map: &IntervalMap, f: &dyn Fn(f64) -> f64, m: f64, x: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let best = map
        .preimages(x)
        .into_iter()
        .map(|y| f(y) - m + tree_sup(map, f, m, y, k - 1))
        .fold(f64::NEG_INFINITY, f64::max);
    best.max(0.0)
}

#[test]
fn conjugate_examples() {
    let g = GridFunction::from_fn(uniform_grid(0.0, 2.0, 2000), |y| y.min(1.0)).unwrap();
    let xs = uniform_grid(0.0, 3.0, 300);
    let c = concave_conjugate(&g, &xs).unwrap();
    for (x, v) in c.rows() {
        let direct = g.rows().map(|(y, gy)| x * y - gy).fold(f64::INFINITY, f64::min);
        let closed = if x <= 1.0 { x - 1.0 } else { 0.0 };
        assert!((v - direct).abs() <= 1e-12);
        assert!((v - closed).abs() <= 1e-12, "x = {x}");
    }
    let bumpy = GridFunction::from_fn(uniform_grid(0.0, 1.0, 97), |y| (7.0 * y).sin() * y).unwrap();
    let c0 = concave_conjugate(&bumpy, &[0.0, 1.0]).unwrap();
    assert_eq!(c0.ys()[0], -bumpy.max_value());
    assert!(c.is_concave());
}

#[test]
fn concave_input_is_a_fixed_point() {
    for (name, f) in [("min", (|x: f64| x.min(1.0)) as fn(f64) -> f64), ("sqrt", f64::sqrt)] {
        let theta0 = GridFunction::from_fn(uniform_grid(0.0, 1.0, 400), f).unwrap();
        for rule in [CapRule::SteepestSlope, CapRule::AtOne] {
            let p = build_omega_from_theta0(theta0.clone(), 400, rule).unwrap();
            if name == "sqrt" && rule == CapRule::AtOne {
                // slopes above 1 make the frozen conjugate overshoot
                assert!(!p.warnings.is_empty());
                continue;
            }
            for (x, y) in theta0.rows() {
                let o = p.eval(x);
                assert!((o - y).abs() <= 1e-9, "{name} {rule:?} x = {x}: {o} vs {y}");
            }
        }
    }
}

#[test]
fn power_pair_chain_and_hull() {
    let p = big_08(500);
    assert!(p.eval(0.0).abs() <= 1e-10);
    assert!(p.chain_slack >= -1e-10);
    assert!(p.omega_big.check_concave(1e-9));
    let hull = concave_majorant(&p.theta1);
    for (i, (x, h)) in hull.rows().enumerate() {
        if x <= 1.0 {
            assert!((p.theta2_star.ys()[i] + p.shift - h).abs() <= 1e-9, "x = {x}");
        }
    }
    for (x, t0) in p.theta0.rows() {
        assert!((t0 - x.powf(0.3)).abs() <= 1e-12);
    }
}

#[test]
fn assumption_a_examples() {
    for (alpha, s) in [(0.8, 0.5), (0.9, 0.2), (0.6, 0.5), (1.0, 0.3)] {
        let w = make_omega_alpha_beta(alpha, 0.0).unwrap();
        let v = RegVaryingFn::power(s).unwrap();
        let a = check_assumption_a_default(&w, &v).params().expect("power pair certified");
        assert!((a.gamma_a - (alpha - s)).abs() <= 1e-9, "{alpha} {s}: {}", a.gamma_a);
        assert_eq!((a.xi0, a.eta0), (XI0_LATTICE[0], ETA0_LATTICE[0]));
    }
    let log = make_map(Family::LogMap { tau: 1.0, theta: 1.0 }).unwrap();
    match check_assumption_a_default(&make_omega_log(1.0).unwrap(), log.speed().unwrap()) {
        AssumptionAVerdict::Violated { h, xi, gamma_tested, log_ratio, .. } => {
            assert!(h > 0.0 && xi > 1.0);
            assert!(log_ratio < gamma_tested * xi.ln());
        }
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn expansion_constants() {
    assert!((c8_formula(0.1768, 0.3) - 0.0501).abs() < 5e-5);
    let map = mp_half();
    let a = AssumptionA { gamma_a: 0.3, xi0: 2.0, eta0: 0.5 };
    let d = expansion_data(&map, &a).unwrap();
    assert!((d.c8 - c8_formula(d.c7, 0.3)).abs() < 1e-15);
    assert!(d.warnings.is_empty());
    let tiny = c7_formula(0.5, 1.0 + 1e-9, 2.0, 0.5);
    assert!(tiny < 1e-9 && c8_formula(tiny, 0.3) < 1e-9);
}

#[test]
fn zero_potential_gives_zero() {
    let grid = uniform_grid(0.0, 1.0, 256);
    let r = compute_subaction(&mp_half(), &|_| 0.0, 0.0, &grid, SubactionOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.u.ys().iter().all(|&y| y == 0.0));
    let rep = verify_subaction(&mp_half(), &|_| 0.0, &omega_08(), 0.0, &r.u, &big_08(200), 0.0, None).unwrap();
    assert!(rep.pass && rep.max_residual == 0.0);
}

#[test]
fn verifier_detects_injected_fault() {
    let map = mp_half();
    let w = omega_08();
    let big = big_08(1000);
    let pot = RandomPotential::new(&w, 4, 3).unwrap();
    let f = |x: f64| pot.eval(x);
    let m = estimate_max_average(&map, &f, 10, 2000, 3).value;
    let grid = uniform_grid(0.0, 1.0, 256);
    let r = compute_subaction(&map, &f, m, &grid, SubactionOptions::default()).unwrap();
    assert!(r.converged);
    let ok = verify_subaction(&map, &f, &w, r.m_used, &r.u, &big, 1e-10, None).unwrap();
    assert!(ok.pass, "{ok:?}");
    let j = grid.iter().position(|&x| x >= 0.1).unwrap();
    let mut ys = r.u.ys().to_vec();
    ys[j] += big.eval((grid[j] - 0.5).abs());
    let bad = GridFunction::new(grid.clone(), ys).unwrap();
    let rep = verify_subaction(&map, &f, &w, r.m_used, &bad, &big, 1e-10, None).unwrap();
    assert!(!rep.pass && rep.max_residual > rep.tol);
}

#[test]
fn grid_recursion_matches_preimage_tree() {
    let w = omega_08();
    let big = big_08(1000);
    for fam in [Family::Doubling, Family::MannevillePomeau { s: 0.5 }] {
        let map = make_map(fam.clone()).unwrap();
        let pot = RandomPotential::new(&w, 5, 11).unwrap();
        let f = |x: f64| pot.eval(x);
        let m = estimate_max_average(&map, &f, 8, 1000, 11).value;
        let grid = uniform_grid(0.0, 1.0, 512);
        let k = 12;
        let opts = SubactionOptions { eps: 0.0, k_cap: k, sanity_bound: None, lift_m: false };
        let r = compute_subaction(&map, &f, m, &grid, opts).unwrap();
        assert_eq!(r.k_used, k);
        let tol = 2.0 * pot.norm_bound() * big.eval(r.u.max_spacing());
        for (i, &x) in grid.iter().enumerate().step_by(8) {
            let exact = tree_sup(&map, &f, m, x, k);
            assert!((r.u.ys()[i] - exact).abs() <= tol, "{fam:?} x = {x}: {} vs {exact}", r.u.ys()[i]);
        }
    }
}

#[test]
fn backward_pairing_depends_on_cap_rule() {
    let map = mp_half();
    let w = omega_08();
    let v = RegVaryingFn::power(0.5).unwrap();
    let a = check_assumption_a_default(&w, &v).params().unwrap();
    let d = expansion_data(&map, &a).unwrap();
    let steep = build_omega_with(&w, &v, 2000, CapRule::SteepestSlope).unwrap();
    let one = build_omega_with(&w, &v, 2000, CapRule::AtOne).unwrap();
    let good = check_backward_pairing(&map, &w, &steep, &d, 4000, 5, 1e-9);
    assert!(good.pass, "{good:?}");
    let literal = check_backward_pairing(&map, &w, &one, &d, 4000, 5, 1e-9);
    assert!(literal.min_slack < good.min_slack);
    assert!(literal.min_slack < -1e-9, "{literal:?}");
    // the literal cap still gives a concave majorant of theta1, just not the smallest
    let above = one.theta2_star.ys().iter().zip(steep.theta2_star.ys()).all(|(a, b)| *a >= b + steep.shift - 1e-12);
    assert!(above);
}
