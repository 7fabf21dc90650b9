//! Energy functionals: conformal and isometry invariance, weighted energy
//! laws, and report serialization.

use std::sync::OnceLock;

use hypw::functionals::{
    trace_free_energy, weighted_energy, weighted_energy_from, willmore_energy, EnergyReport, PoleSet, WeightField,
};
use hypw::hyp3::{HyperbolicIsometry, Point3};
use hypw::solve::{minimal_revolution, RevolutionOptions};
use hypw::surface::{
    mesh_shape_full, to_mesh, GraphDomain, GraphSurface, RevolutionSurface, ShapeField, Surface, TriMesh,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn hemisphere(h: f64) -> TriMesh {
    RevolutionSurface::hemisphere(Complex64::new(0.0, 0.0), 1.0, h).unwrap().to_mesh().unwrap()
}

fn catenoid(h: f64) -> TriMesh {
    let opts = RevolutionOptions { h, ..Default::default() };
    minimal_revolution(1.0, 2.0, &opts).unwrap().surface.unwrap().to_mesh().unwrap()
}

fn bumpy_graph(h: f64) -> TriMesh {
    let mut g = GraphSurface::new(GraphDomain::Rectangle { x_max: 1.0, y_half: 1.0 }, h).unwrap();
    g.set_heights(|x, y| 0.1 * (2.0 * y).sin() * (1.0 + x) + 0.05 * x * x);
    to_mesh(&Surface::Graph(g)).unwrap()
}

/// Interior vertex closest to the middle of the mesh's height range.
fn middle_vertex(m: &TriMesh) -> usize {
    let xmax = m.vertices.iter().map(|v| v.x).fold(0.0, f64::max);
    (0..m.n_vertices())
        .filter(|&v| !m.boundary[v])
        .min_by(|&a, &b| (m.vertices[a].x - 0.5 * xmax).abs().total_cmp(&(m.vertices[b].x - 0.5 * xmax).abs()))
        .unwrap()
}

#[test]
fn trace_free_density_is_conformally_invariant_pointwise() {
    let moved = hemisphere(1.0 / 16.0).transform(
        &HyperbolicIsometry::from_coefficients(
            Complex64::new(1.0, 0.2),
            Complex64::new(0.3, 0.0),
            Complex64::new(0.4, -0.1),
            Complex64::new(1.0, 0.0),
            false,
        )
        .unwrap(),
    );
    let offset_sphere = {
        let m = hemisphere(1.0 / 16.0);
        let v: Vec<Point3> = m.vertices.iter().map(|p| Point3::new(p.x + 0.3, p.y, p.z)).collect();
        TriMesh::new(v, m.triangles.clone())
    };
    let surfaces = [hemisphere(1.0 / 16.0), catenoid(1.0 / 16.0), bumpy_graph(1.0 / 16.0), moved, offset_sphere];
    for (k, m) in surfaces.iter().enumerate() {
        let f = mesh_shape_full(m).unwrap();
        let mut checked = 0;
        for s in f.samples.iter().filter(|s| !s.boundary) {
            let h = s.hyperbolic.expect("interior samples carry hyperbolic data");
            let hyp = h.trace_free_sq * h.area;
            let euc = s.trace_free_bar_sq * s.area;
            // Relative to the untraced density: both sides cancel down from it.
            let scale = hyp.abs().max(euc.abs()).max(s.a_bar_sq * s.area).max(1e-300);
            assert!((hyp - euc).abs() <= 1e-10 * scale, "surface {k}: {hyp} vs {euc}");
            checked += 1;
        }
        assert!(checked > 100, "surface {k} has too few interior samples");
    }
}

#[test]
fn hemisphere_energy_is_isometry_invariant() {
    let m = hemisphere(1.0 / 32.0);
    let e0 = willmore_energy(&m).unwrap();
    let iso = HyperbolicIsometry::dilation(3.0).compose(&HyperbolicIsometry::translation(Complex64::new(0.5, -2.0)));
    let e1 = willmore_energy(&m.transform(&iso)).unwrap();
    assert!((e0 - e1).abs() < 1e-9, "{e0} vs {e1}");
}

#[test]
fn weighted_energy_is_dilation_invariant_on_the_catenoid() {
    let m = catenoid(1.0 / 16.0);
    let poles = PoleSet::new(vec![middle_vertex(&m)]);
    let e0 = weighted_energy(&m, &poles, 1.5).unwrap();
    for lambda in [0.5, 2.0, 10.0] {
        let e = weighted_energy(&m.transform(&HyperbolicIsometry::dilation(lambda)), &poles, 1.5).unwrap();
        assert!((e - e0).abs() <= 1e-3 * e0, "λ = {lambda}: {e} vs {e0}");
    }
}

#[test]
fn weight_field_is_at_least_five_and_zero_distance_at_poles() {
    let m = catenoid(1.0 / 16.0);
    let pole = middle_vertex(&m);
    let w = WeightField::new(&m, &PoleSet::new(vec![pole])).unwrap();
    assert_eq!(w.f[pole], 5.0);
    assert!(w.f.iter().all(|&f| f >= 5.0));
}

#[test]
fn energy_report_round_trips_through_json() {
    let m = hemisphere(1.0 / 16.0);
    let f = mesh_shape_full(&m).unwrap();
    let mut r = EnergyReport { energy: Some(trace_free_energy(&f)), chi: Some(1), ..Default::default() };
    r.energy_weighted.insert("1.5".into(), 0.125);
    r.local.push(([1.0, 0.0, 0.0], 0.5, 3.0e-7));
    let text = serde_json::to_string(&r).unwrap();
    let back: EnergyReport = serde_json::from_str(&text).unwrap();
    assert_eq!(r, back);
}

fn catenoid_data() -> &'static (ShapeField, WeightField) {
    static DATA: OnceLock<(ShapeField, WeightField)> = OnceLock::new();
    DATA.get_or_init(|| {
        let m = catenoid(1.0 / 16.0);
        let w = WeightField::new(&m, &PoleSet::new(vec![middle_vertex(&m)])).unwrap();
        (mesh_shape_full(&m).unwrap(), w)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weighted_energy_is_monotone_in_p(p in 1.01f64..4.0, dp in 0.01f64..2.0) {
        let (f, w) = catenoid_data();
        let a = weighted_energy_from(f, w, p).unwrap();
        let b = weighted_energy_from(f, w, p + dp).unwrap();
        prop_assert!(b >= a, "E_{} = {} < E_{} = {}", p + dp, b, p, a);
        prop_assert!(a >= 25f64.powf(p) * trace_free_energy(f) * (1.0 - 1e-12));
    }
}
