//! Isothermal charts on perturbed minimal graphs and the conformal Gauss map.

use hypw::conformal::{
    conformal_gauss_map, flux_identity, hardy_check, isothermal_chart, liouville_residual, refinement_orders,
    ChartOptions,
};
use hypw::solve::{minimal_graph, minimal_revolution, RevolutionOptions, SolveOptions};
use hypw::surface::{GraphDomain, GraphSurface};

const PATCH: GraphDomain = GraphDomain::Rectangle { x_max: 1.0, y_half: 1.25 };

fn solved(h: f64, data: fn(f64, f64) -> f64) -> GraphSurface {
    minimal_graph(PATCH, data, &SolveOptions { h, ..Default::default() }).unwrap().surface
}

fn graphs() -> [fn(f64, f64) -> f64; 3] {
    [
        |x, y| 0.1 * y + 0.03 * (2.0 * y).sin() * (-x).exp(),
        |x, y| 0.05 * y.cos() * (1.0 - 0.5 * x) + 0.02 * x * y,
        |x, y| -0.06 * y + 0.03 * (y * y - x),
    ]
}

#[test]
fn flux_identity_defect_shrinks_at_second_order() {
    for data in graphs() {
        let defects: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
            .iter()
            .map(|&h| {
                let c = isothermal_chart(&solved(h, data), &ChartOptions::default()).unwrap();
                let f = flux_identity(&c).unwrap();
                assert!(f.defect <= 0.01 * f.lhs.abs().max(h), "{f:?}");
                f.defect
            })
            .collect();
        assert!(refinement_orders(&defects).iter().all(|&o| o >= 1.0), "{defects:?}");
    }
}

#[test]
fn conformal_factor_solves_the_gauss_curvature_equation() {
    let data = graphs()[0];
    let l2: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&h| {
            liouville_residual(&isothermal_chart(&solved(h, data), &ChartOptions::default()).unwrap()).unwrap().l2_gauss
        })
        .collect();
    assert!(refinement_orders(&l2).iter().all(|&o| o >= 1.0), "{l2:?}");
}

#[test]
fn hardy_inequality_holds_on_solved_patches() {
    for data in graphs() {
        let c = isothermal_chart(&solved(1.0 / 32.0, data), &ChartOptions::default()).unwrap();
        let hc = hardy_check(&c).unwrap();
        assert!(hc.holds && hc.lhs <= 10.0 * hc.rhs, "{hc:?}");
    }
}

#[test]
fn chart_is_conformal_to_discretization_accuracy() {
    let c = isothermal_chart(&solved(1.0 / 32.0, graphs()[1]), &ChartOptions::default()).unwrap();
    assert!(c.metric_defect() < 1e-2, "{}", c.metric_defect());
}

#[test]
fn gauss_map_of_the_catenoid_lies_in_de_sitter_space() {
    let s = minimal_revolution(1.0, 2.0, &RevolutionOptions { h: 1.0 / 64.0, ..Default::default() })
        .unwrap()
        .surface
        .unwrap();
    let g = conformal_gauss_map(&s.to_mesh().unwrap()).unwrap();
    assert!(g.minkowski_defect <= 1e-9);
    // ∫|dΦ|² matches ∫|Å̄|² with |Å̄|² = |Ā|² − 2H̄².
    assert!(g.defect_full <= 0.01, "{g:?}");
}
