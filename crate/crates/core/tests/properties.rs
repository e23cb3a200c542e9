use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use lplab::criterion::{admissible_p_interval_for_ratio, UpperBound};
use lplab::field::{duality_map, l2_inner, l2_norm, lp_norm, PExponent, VectorField};
use lplab::projection::{project_onto_lp_ball, OUTER_TOL};
use lplab::Grid;

fn field_strategy(max_nodes: usize, max_m: usize) -> impl Strategy<Value = VectorField> {
    (1usize..=2, 1usize..=max_nodes, 1usize..=max_m, -3.0f64..1.5).prop_flat_map(|(d, n, m, log_scale)| {
        let nodes = vec![n.max(1); d];
        let len = nodes.iter().product::<usize>() * m;
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(move |vals| {
            let grid = Arc::new(Grid::unit(&nodes).unwrap());
            let s = 10f64.powf(log_scale);
            let values = vals.into_iter().map(|(a, b)| Complex64::new(a * s, b * s)).collect();
            VectorField::new(grid, m, values).unwrap()
        })
    })
}

fn pair_strategy() -> impl Strategy<Value = (VectorField, VectorField)> {
    field_strategy(9, 3).prop_flat_map(|f| {
        let len = f.values().len();
        let grid = f.grid().clone();
        let m = f.m();
        (Just(f), prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), len)).prop_map(move |(f, vals)| {
            let values = vals.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            (f, VectorField::new(grid.clone(), m, values).unwrap())
        })
    })
}

fn exponent() -> impl Strategy<Value = PExponent> {
    (1.05f64..12.0).prop_map(|p| PExponent::new(p).unwrap())
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hoelder_inequality((f, g) in pair_strategy(), p in exponent()) {
        let pairing = l2_inner(&f, &g).unwrap().norm();
        let bound = lp_norm(&f, p).unwrap() * lp_norm(&g, p.dual()).unwrap();
        prop_assert!(pairing <= bound * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn duality_map_pairing_and_norm(f in field_strategy(9, 3), p in exponent()) {
        let j = duality_map(&f, p);
        let np = lp_norm(&f, p).unwrap();
        let pairing = l2_inner(&f, &j).unwrap();
        prop_assert!(close(pairing.re, np.powf(p.p()), 1e-11));
        prop_assert!(pairing.im.abs() <= 1e-11 * pairing.re.abs().max(1e-300));
        let nq = lp_norm(&j, p.dual()).unwrap();
        prop_assert!(close(nq, np.powf(p.p() - 1.0), 1e-11));
    }

    #[test]
    fn norm_is_absolutely_homogeneous(f in field_strategy(9, 3), p in exponent(), re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let lambda = Complex64::new(re, im);
        let lhs = lp_norm(&f.scale(lambda), p).unwrap();
        let rhs = lambda.norm() * lp_norm(&f, p).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12) || rhs < 1e-280);
    }

    #[test]
    fn projection_lands_in_ball_and_is_idempotent(f in field_strategy(9, 3), p in exponent()) {
        let pf = project_onto_lp_ball(&f, p, OUTER_TOL).unwrap();
        prop_assert!(lp_norm(&pf.projected, p).unwrap() <= 1.0 + 1e-10);
        let ppf = project_onto_lp_ball(&pf.projected, p, OUTER_TOL).unwrap();
        let diff = l2_norm(&ppf.projected.sub(&pf.projected)).unwrap();
        prop_assert!(diff <= 1e-10);
        if lp_norm(&f, p).unwrap() <= 1.0 {
            prop_assert_eq!(pf.projected.values(), f.values());
            prop_assert_eq!(pf.multiplier, 0.0);
        }
    }

    #[test]
    fn projection_is_nonexpansive((f, g) in pair_strategy(), p in exponent()) {
        let pf = project_onto_lp_ball(&f, p, OUTER_TOL).unwrap();
        let pg = project_onto_lp_ball(&g, p, OUTER_TOL).unwrap();
        let lhs = l2_norm(&pf.projected.sub(&pg.projected)).unwrap();
        let rhs = l2_norm(&f.sub(&g)).unwrap();
        prop_assert!(lhs <= rhs + 1e-10);
    }

    /// `Pf_i = c_i f_i` with `0 <= c_i <= 1`, so `f = Pf + (f - Pf)` splits
    /// along the same direction at every node.
    #[test]
    fn projection_shrinks_along_each_node(f in field_strategy(9, 3), p in exponent()) {
        let pf = project_onto_lp_ball(&f, p, OUTER_TOL).unwrap();
        for (a, b) in f.nodes().zip(pf.projected.nodes()) {
            let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(nb <= na * (1.0 + 1e-12));
            if na > 0.0 {
                let c = nb / na;
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((y - x * c).norm() <= 1e-10 * na.max(1.0));
                }
            }
        }
    }

    #[test]
    fn interval_grows_with_ratio(r1 in 1e-6f64..4.0, r2 in 1e-6f64..4.0) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let a = admissible_p_interval_for_ratio(lo).unwrap();
        let b = admissible_p_interval_for_ratio(hi).unwrap();
        prop_assert!(b.p_minus <= a.p_minus + 1e-15);
        match (a.p_plus, b.p_plus) {
            (UpperBound::Finite(x), UpperBound::Finite(y)) => prop_assert!(y >= x - 1e-12),
            (UpperBound::Unbounded, UpperBound::Finite(_)) => prop_assert!(false, "interval shrank"),
            _ => {}
        }
        prop_assert!(a.contains(2.0));
    }
}
