//! Solver checks: the Jacobi operator against a closed form, the Willmore
//! residual of exact surfaces, minimal-graph invariances and the glued family.

use hypw::solve::glue::{glue_family, gluing_ledger, GluedSurface, GluingSpec};
use hypw::solve::{
    jacobi_solve, minimal_graph, minimal_revolution, willmore_residual, JacobiOptions, RevolutionOptions, SolveOptions,
};
use hypw::surface::{GraphDomain, RevolutionSurface, Surface};
use hypw::Error;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn jacobi_solution_on_the_hemisphere_matches_closed_form() {
    // With x = sech ρ on the unit hemisphere, L(x²) = −6x⁴.
    let m = RevolutionSurface::hemisphere(Complex64::new(0.0, 0.0), 1.0, 1.0 / 128.0).unwrap().to_mesh().unwrap();
    let rhs: Vec<f64> = m.vertices.iter().map(|v| -6.0 * v.x.powi(4)).collect();
    let sol = jacobi_solve(&m, &rhs, 1.0, &JacobiOptions::default()).unwrap();
    assert!(sol.relative_residual <= 1e-10);
    let err = m.vertices.iter().zip(&sol.phi).map(|(v, p)| (p - v.x * v.x).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-4, "sup error {err}");
}

#[test]
fn willmore_residual_vanishes_on_spherical_caps() {
    for r in [0.5, 1.0, 3.0] {
        let s = RevolutionSurface::hemisphere(Complex64::new(0.2, -0.4), r, r / 32.0).unwrap();
        let w = willmore_residual(&Surface::Revolution(s)).unwrap();
        // Residual scales like 1/r³; compare on the unit scale.
        assert!(w.sup * r.powi(3) < 1e-6, "r = {r}: sup {}", w.sup);
    }
}

#[test]
fn catenoid_meets_the_boundary_vertically_and_is_minimal() {
    let sol = minimal_revolution(1.0, 2.0, &RevolutionOptions { h: 1.0 / 32.0, ..Default::default() }).unwrap();
    let s = sol.surface.unwrap();
    let hmax = s.hyperbolic_mean_curvature().iter().fold(0.0f64, |m, h| m.max(h.abs()));
    assert!(hmax <= 1e-6, "{hmax}");
    let (a, b) = hypw::solve::revolution::profile_verticality(&s.profile, 5);
    assert!(a.windows(2).all(|w| w[1] < w[0]) && b.windows(2).all(|w| w[1] < w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tilted_planes_are_reproduced_exactly(a in -0.3f64..0.3) {
        let opts = SolveOptions { h: 1.0 / 16.0, ..Default::default() };
        let s = minimal_graph(GraphDomain::Rectangle { x_max: 1.0, y_half: 1.0 }, |_, y| a * y, &opts).unwrap();
        for (p, u) in s.surface.xy.iter().zip(&s.surface.u) {
            prop_assert!((u - a * p[1]).abs() <= 1e-10);
        }
    }

    #[test]
    fn even_data_gives_even_solutions(amp in 0.01f64..0.08, k in 1.0f64..3.0) {
        let data = move |x: f64, y: f64| if x == 0.0 { amp * (k * y).cos() } else { 0.0 };
        let opts = SolveOptions { h: 1.0 / 16.0, ..Default::default() };
        let s = minimal_graph(GraphDomain::HalfDisc { radius: 1.0 }, data, &opts).unwrap().surface;
        for i in 0..=s.ni {
            for j in 1..=s.nj as i64 {
                if let (Some(p), Some(q)) = (s.grid_node(i, j), s.grid_node(i, -j)) {
                    prop_assert!((s.u[p] - s.u[q]).abs() <= 1e-8);
                }
            }
        }
    }
}

fn glued(t: f64) -> GluedSurface {
    glue_family(&GluingSpec::single_catenoid(t)).unwrap()
}

#[test]
fn glued_family_energy_and_boundary_ledger() {
    let family: Vec<GluedSurface> = [3.0, 3.5, 4.0, 4.5].into_iter().map(glued).collect();
    for g in &family {
        assert!(g.residual_sup <= 1e-5, "t = {}: residual {}", g.t, g.residual_sup);
        let e = g.component_energy_grid;
        assert!(g.energy > 0.5 * e && g.energy < 2.0 * e);
        let tags = g.mesh.tags.as_ref().expect("glued meshes carry source tags");
        assert!(tags.contains(&0) && tags.contains(&1));
    }
    let ledger = gluing_ledger(&family, 0.0, 0.05).unwrap();
    assert!(ledger.discrepancy_decreasing, "{ledger:?}");
    assert!(ledger.final_discrepancy <= 0.05);
    assert!(ledger.c0_converges, "{ledger:?}");
    assert!(ledger.tangent_gap_persists, "{ledger:?}");
}

#[test]
fn small_dilation_is_outside_the_gluing_regime() {
    assert!(matches!(glue_family(&GluingSpec::single_catenoid(1.0)), Err(Error::BelowGluingRegime(_))));
}
