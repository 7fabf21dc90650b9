//! Bubble pipeline on planted families: a shrinking catenoid graft, two
//! grafts, and hemispheres without any concentration.

use std::sync::OnceLock;

use hypw::bubble::{
    blow_up, boundary_curve, bubble_report, concentration_scan, footprint_energy, noise_floor, normalizing_isometry,
    pole_distance_report, BubbleReport, FamilyParams, SurfaceFamily, BLOW_UP_RADIUS,
};
use hypw::curves::{convergence_report, BoundaryCurve, ConvergenceOptions};
use hypw::functionals::PoleSet;
use hypw::hyp3::{recentering_isometry, BoundaryPoint, HyperbolicIsometry, Point3};
use hypw::solve::glue::{glue_family, GluedSurface, GluingSpec};
use hypw::surface::{RevolutionSurface, TriMesh};
use num_complex::Complex64;

const TS: [f64; 4] = [3.0, 3.5, 4.0, 4.5];
const H: f64 = 1.0 / 16.0;

fn glued() -> &'static [GluedSurface] {
    static FAMILY: OnceLock<Vec<GluedSurface>> = OnceLock::new();
    FAMILY.get_or_init(|| TS.iter().map(|&t| glue_family(&GluingSpec::single_catenoid(t)).unwrap()).collect())
}

fn params() -> FamilyParams {
    FamilyParams::with_spacing(50.0 * H)
}

/// Interior vertex nearest (hyperbolically) to the boundary point `(y, z) = (1, 0)`.
fn neck_vertex(m: &TriMesh) -> usize {
    let f = |v: usize| {
        let p = m.vertices[v];
        (p.x * p.x + (p.y - 1.0).powi(2) + p.z * p.z) / p.x
    };
    (0..m.n_vertices()).filter(|&v| !m.boundary[v]).min_by(|&a, &b| f(a).total_cmp(&f(b))).unwrap()
}

fn top_vertex(m: &TriMesh) -> usize {
    (0..m.n_vertices()).max_by(|&a, &b| m.vertices[a].x.total_cmp(&m.vertices[b].x)).unwrap()
}

fn family_with(pole: fn(&TriMesh) -> usize, pre: Option<&HyperbolicIsometry>) -> SurfaceFamily {
    let raw = glued()
        .iter()
        .map(|g| {
            let m = match pre {
                Some(iso) => g.mesh.transform(iso),
                None => g.mesh.clone(),
            };
            let p = pole(&g.mesh);
            (m, PoleSet::new(vec![p]), g.t)
        })
        .collect();
    SurfaceFamily::new(raw, params()).unwrap()
}

fn neck_report() -> &'static BubbleReport {
    static R: OnceLock<BubbleReport> = OnceLock::new();
    R.get_or_init(|| bubble_report(&family_with(neck_vertex, None)).unwrap())
}

#[test]
fn one_candidate_near_the_graft_point() {
    let r = neck_report();
    assert_eq!(r.scan.candidates.len(), 1, "{:?}", r.scan.candidates);
    let last = &glued()[TS.len() - 1].mesh;
    let iso = normalizing_isometry(&boundary_curve(last).unwrap()).unwrap();
    let q = iso.apply_boundary(BoundaryPoint::finite(1.0, 0.0)).as_finite().unwrap();
    let c = r.scan.candidates[0].position;
    let d = (c[0] - q.re).hypot(c[1] - q.im);
    assert!(d <= 2.0 * params().h, "candidate {c:?}, q₁ {q}, distance {d}");
}

#[test]
fn blow_up_recovers_the_catenoid_energy() {
    let r = neck_report();
    let e_cat = glued()[0].component_energy_profile;
    let b = &r.bubbles[0];
    assert!((b.limit_energy - e_cat).abs() <= 0.1 * e_cat, "{} vs {e_cat}", b.limit_energy);
    assert!(b.limit_energy > r.noise_floor);
    assert_eq!(r.bubble_count, 1);
    assert!(r.bubble_count <= r.pole_count);
}

#[test]
fn pole_riding_the_graft_stays_at_bounded_distance() {
    let r = neck_report();
    assert_eq!(r.bubbles[0].pole_distances.verdict, "bounded", "{:?}", r.bubbles[0].pole_distances);
    assert!(!r.weighted_energy_diverges, "{:?}", r.weighted_energies);
}

#[test]
fn distant_pole_makes_the_weighted_energy_diverge() {
    let r = bubble_report(&family_with(top_vertex, None)).unwrap();
    assert!(r.weighted_energy_diverges, "{:?}", r.weighted_energies);
    assert_eq!(r.bubbles[0].pole_distances.verdict, "growing");
    assert!(r.bubble_count <= r.pole_count);
}

#[test]
fn scan_does_not_depend_on_member_order() {
    let fam = family_with(neck_vertex, None);
    let mut rev = fam.clone();
    rev.members.reverse();
    let a = concentration_scan(&fam).unwrap();
    let b = concentration_scan(&rev).unwrap();
    assert_eq!(a.candidates.len(), b.candidates.len());
    for (x, y) in a.candidates.iter().zip(&b.candidates) {
        assert_eq!(x.position, y.position);
        assert_eq!(x.collapse_radius, y.collapse_radius);
    }
}

#[test]
fn blow_up_energies_are_invariant_under_a_fixed_isometry() {
    let iso = HyperbolicIsometry::rotation(0.7)
        .compose(&HyperbolicIsometry::dilation(3.0))
        .compose(&HyperbolicIsometry::translation(Complex64::new(-1.5, 2.0)));
    let moved = bubble_report(&family_with(neck_vertex, Some(&iso))).unwrap();
    let base = neck_report();
    assert_eq!(moved.bubbles.len(), base.bubbles.len());
    for (a, b) in moved.bubbles[0].energies.iter().zip(&base.bubbles[0].energies) {
        assert!((a - b).abs() <= 1e-3 * b, "{a} vs {b}");
    }
}

#[test]
fn two_grafts_give_two_separated_candidates() {
    let flip = HyperbolicIsometry::rotation(std::f64::consts::PI);
    let raw = glued()
        .iter()
        .map(|g| {
            let m = g.mesh.merge(&g.mesh.transform(&flip));
            let n = g.mesh.n_vertices();
            let top = top_vertex(&g.mesh);
            (m, PoleSet::new(vec![top, n + top]), g.t)
        })
        .collect();
    let fam = SurfaceFamily::new(raw, params()).unwrap();
    let r = bubble_report(&fam).unwrap();
    assert_eq!(r.scan.candidates.len(), 2, "{:?}", r.scan.candidates);
    let (a, b) = (r.scan.candidates[0].position, r.scan.candidates[1].position);
    assert!((a[0] - b[0]).hypot(a[1] - b[1]) > 8.0 * params().h);
    assert!(a[0] * b[0] < 0.0, "grafts sit on opposite sides: {a:?} {b:?}");
    assert!(r.bubble_count <= 2);
}

#[test]
fn recentering_twice_equals_recentering_by_the_composition() {
    let m = &glued()[1].mesh;
    let q1 = m.vertices[neck_vertex(m)];
    let r1 = recentering_isometry(&q1).unwrap();
    let once = m.transform(&r1);
    let q2 = once.vertices[top_vertex(m)];
    let r2 = recentering_isometry(&q2).unwrap();
    let twice = once.transform(&r2);
    let composed = m.transform(&r2.compose(&r1));
    for (a, b) in twice.vertices.iter().zip(&composed.vertices) {
        assert!(a.euclidean_distance(b) <= 1e-9 * (1.0 + a.to_array().iter().map(|c| c.abs()).sum::<f64>()));
    }
    let (ea, eb) =
        (footprint_energy(&twice, BLOW_UP_RADIUS).unwrap(), footprint_energy(&composed, BLOW_UP_RADIUS).unwrap());
    assert!((ea - eb).abs() <= 1e-9 * (1.0 + ea), "{ea} vs {eb}");
}

fn hemisphere_family() -> SurfaceFamily {
    let raw = (0..4)
        .map(|j| {
            let r = 1.0 + 0.5 * j as f64;
            let m = RevolutionSurface::hemisphere(Complex64::new(0.1 * j as f64, 0.0), r, r * H)
                .unwrap()
                .to_mesh()
                .unwrap();
            let p = top_vertex(&m);
            (m, PoleSet::new(vec![p]), j as f64)
        })
        .collect();
    SurfaceFamily::new(raw, params()).unwrap()
}

#[test]
fn hemispheres_have_no_bubbles() {
    let fam = hemisphere_family();
    let r = bubble_report(&fam).unwrap();
    assert!(r.scan.candidates.is_empty());
    assert_eq!(r.bubble_count, 0);
    // Blow-ups at smooth points recover no energy beyond the noise floor.
    let centers: Vec<Point3> = fam
        .members
        .iter()
        .map(|m| {
            let v = (0..m.mesh.n_vertices()).filter(|&v| !m.mesh.boundary[v]).nth(m.mesh.n_vertices() / 3).unwrap();
            m.mesh.vertices[v]
        })
        .collect();
    let b = blow_up(&fam, &centers).unwrap();
    let floor = noise_floor(params().h).unwrap();
    assert!(b.limit_energy <= floor, "{} vs floor {floor}", b.limit_energy);
    let pd = pole_distance_report(&fam, &centers).unwrap();
    assert_eq!(pd.distances.len(), 4);
}

#[test]
fn hemisphere_boundaries_converge_without_jumps() {
    let fam = hemisphere_family();
    let curves: Vec<BoundaryCurve> = fam.members.iter().map(|m| m.curve.clone()).collect();
    let limit = BoundaryCurve::circle([0.0, 0.0], 50.0, 1024);
    let rep = convergence_report(&curves, &limit, &ConvergenceOptions::default());
    assert!(rep.jumps.is_empty(), "{:?}", rep.jumps);
}

#[test]
fn centre_off_the_mesh_is_rejected() {
    let fam = hemisphere_family();
    let centers = vec![Point3::new(1e-3, 500.0, 0.0); fam.members.len()];
    assert!(blow_up(&fam, &centers).is_err());
}
