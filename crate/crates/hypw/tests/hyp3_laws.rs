//! Group laws and distance preservation of upper half-space isometries.

use hypw::hyp3::{hyp_distance, mobius_three_points, recentering_isometry, BoundaryPoint, HyperbolicIsometry, Point3};
use num_complex::Complex64;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point3> {
    (0.05f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

/// Random isometries with well-conditioned coefficients.
fn isometry() -> impl Strategy<Value = HyperbolicIsometry> {
    (complex(2.0), complex(2.0), complex(1.0), complex(2.0), any::<bool>())
        .prop_filter("well conditioned", |(a, b, c, d, _)| (a * d - b * c).norm() > 0.3)
        .prop_map(|(a, b, c, d, r)| HyperbolicIsometry::from_coefficients(a, b, c, d, r).unwrap())
}

fn close(p: &Point3, q: &Point3, tol: f64) -> bool {
    p.euclidean_distance(q) <= tol * (1.0 + p.to_array().iter().map(|c| c.abs()).sum::<f64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn composition_is_associative(f in isometry(), g in isometry(), h in isometry(), p in point()) {
        let lhs = f.compose(&g).compose(&h).apply_interior(&p);
        let rhs = f.compose(&g.compose(&h)).apply_interior(&p);
        prop_assert!(close(&lhs, &rhs, 1e-8));
    }

    #[test]
    fn composition_matches_sequential_action(f in isometry(), g in isometry(), p in point()) {
        let a = f.compose(&g).apply_interior(&p);
        let b = f.apply_interior(&g.apply_interior(&p));
        prop_assert!(close(&a, &b, 1e-9));
    }

    #[test]
    fn inverse_undoes(f in isometry(), p in point()) {
        let q = f.inverse().apply_interior(&f.apply_interior(&p));
        prop_assert!(close(&q, &p, 1e-9));
        let id = f.compose(&f.inverse());
        prop_assert!(id.coefficient_distance(&HyperbolicIsometry::identity()) < 1e-9);
    }

    #[test]
    fn isometries_preserve_distance(f in isometry(), p in point(), q in point()) {
        let d0 = hyp_distance(&p, &q).unwrap();
        let d1 = hyp_distance(&f.apply_interior(&p), &f.apply_interior(&q)).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-8 * (1.0 + d0));
    }

    #[test]
    fn images_stay_in_the_upper_half_space(f in isometry(), p in point()) {
        prop_assert!(f.apply_interior(&p).x > 0.0);
    }

    #[test]
    fn conformal_factor_scales_small_displacements(f in isometry(), p in point()) {
        let e = 1e-6 * p.x;
        let q = Point3::new(p.x, p.y + e, p.z);
        let ratio = f.apply_interior(&p).euclidean_distance(&f.apply_interior(&q)) / e;
        prop_assert!((ratio / f.conformal_factor(&p) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn recentering_sends_q_to_the_base_point(q in point(), p in point()) {
        let r = recentering_isometry(&q).unwrap();
        prop_assert!(close(&r.apply_interior(&q), &Point3::new(1.0, 0.0, 0.0), 1e-12));
        let d0 = hyp_distance(&p, &q).unwrap();
        let d1 = hyp_distance(&r.apply_interior(&p), &Point3::new(1.0, 0.0, 0.0)).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
    }

    #[test]
    fn three_point_maps_hit_their_targets(z in prop::array::uniform3(complex(3.0)), w in prop::array::uniform3(complex(3.0))) {
        let sep = |a: &[Complex64; 3]| (a[0] - a[1]).norm().min((a[1] - a[2]).norm()).min((a[0] - a[2]).norm());
        prop_assume!(sep(&z) > 0.2 && sep(&w) > 0.2);
        let zb = z.map(BoundaryPoint::Finite);
        let wb = w.map(BoundaryPoint::Finite);
        let m = mobius_three_points(zb, wb).unwrap();
        for k in 0..3 {
            let img = m.apply_boundary(zb[k]).as_finite().unwrap();
            prop_assert!((img - w[k]).norm() < 1e-8 * (1.0 + w[k].norm()));
        }
    }
}
