use proptest::prelude::*;

use subact_core::maps::{make_map, Family};
use subact_core::moduli::make_omega_alpha_beta;
use subact_core::orbits::{generate_schedule, ScheduleParams};
use subact_core::subaction::{concave_conjugate, concave_majorant, uniform_grid, GridFunction};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        (0.1..1.5f64).prop_map(|s| Family::MannevillePomeau { s }),
        (0.1..1.5f64).prop_map(|s| Family::MpInverse { s }),
        (0.3..1.0f64).prop_map(|rho| Family::Farey { rho }),
        (0.3..1.0f64).prop_map(|rho| Family::FareyInverse { rho }),
        (0.3..1.0f64).prop_map(|rho| Family::H { rho }),
        (0.3..1.0f64, 0.0..2.0f64).prop_map(|(tau, theta)| Family::LogMap { tau, theta }),
        Just(Family::Doubling),
    ]
}

fn grid_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_branches_round_trip(fam in family(), t in 0.0..1.0f64) {
        let map = make_map(fam).unwrap();
        for (i, b) in map.branches().iter().enumerate() {
            let y = b.image_lo + t * (b.image_hi - b.image_lo);
            let x = map.inverse_branch(i, y).unwrap();
            prop_assert!(x >= b.lo - 1e-12 && x <= b.hi + 1e-12);
            prop_assert!((map.eval(x) - y).abs() <= 1e-9, "branch {} y {} x {} Tx {}", i, y, x, map.eval(x));
        }
    }

    #[test]
    fn modulus_sandwich(alpha in 0.05..1.0f64, beta in 0.0..2.0f64, chi in 0.01..50.0f64, h in 1e-9..2.0f64) {
        let (a, b) = if alpha >= 1.0 && beta > 0.0 { (0.99, beta) } else { (alpha, beta) };
        let w = make_omega_alpha_beta(a, b).unwrap();
        let lhs = chi / (1.0 + chi) * w.eval(h);
        let mid = w.eval(chi * h);
        let rhs = (chi + 1.0) * w.eval(h);
        prop_assert!(mid - lhs >= -1e-12 && rhs - mid >= -1e-12);
    }

    #[test]
    fn conjugate_reverses_order(a in grid_values(40), bump in prop::collection::vec(0.0..1.0f64, 40)) {
        let ys = uniform_grid(0.0, 2.0, 39);
        let g1 = GridFunction::new(ys.clone(), a.clone()).unwrap();
        let g2 = GridFunction::new(ys, a.iter().zip(&bump).map(|(x, d)| x + d).collect()).unwrap();
        let xs = uniform_grid(0.0, 5.0, 100);
        let c1 = concave_conjugate(&g1, &xs).unwrap();
        let c2 = concave_conjugate(&g2, &xs).unwrap();
        for (u, v) in c1.ys().iter().zip(c2.ys()) {
            prop_assert!(u >= v);
        }
    }

    #[test]
    fn conjugate_matches_direct_minimum(a in grid_values(60)) {
        let g = GridFunction::new(uniform_grid(0.0, 1.5, 59), a).unwrap();
        let xs = uniform_grid(-1.0, 4.0, 77);
        let c = concave_conjugate(&g, &xs).unwrap();
        prop_assert!(c.check_concave(1e-12));
        for (x, v) in c.rows() {
            let direct = g.rows().map(|(y, gy)| x * y - gy).fold(f64::INFINITY, f64::min);
            prop_assert!((v - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn majorant_is_concave_and_above(a in grid_values(50)) {
        let g = GridFunction::new(uniform_grid(0.0, 1.0, 49), a).unwrap();
        let m = concave_majorant(&g);
        prop_assert!(m.check_concave(1e-12));
        for (u, v) in m.ys().iter().zip(g.ys()) {
            prop_assert!(u >= v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn c0_non_increasing_under_trim(s in 0.3..1.0f64, n1 in 50usize..400) {
        let map = make_map(Family::MannevillePomeau { s }).unwrap();
        let sched = generate_schedule(&map, ScheduleParams::new(0.25, 0.96, 60, n1)).unwrap();
        let c: Vec<f64> = (0..30).map(|t| sched.c0_for_trim(t)).collect();
        for w in c.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(c.iter().all(|&v| v >= 1.0));
    }
}
