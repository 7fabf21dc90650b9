//! Per-sample differential geometry in the Euclidean and hyperbolic metrics.
//!
//! Conventions (used everywhere in the crate):
//!
//! - `Ā(X, Y) = ⟨∂_X ν̄, Y⟩ = −⟨∂²_{XY} r, ν̄⟩`, so a round sphere of radius `R`
//!   with outward normal has `Ā = ḡ/R`;
//! - `H̄` is the average of the principal curvatures and `K̄` their product;
//! - `|Å̄|² = |Ā|² − 2H̄²`;
//! - with `g = ḡ/x²` and hyperbolic unit normal `ν = x ν̄`,
//!   `A = (1/x)(Ā − (ν̄_x/x) ḡ)`, hence `H = x H̄ − ν̄_x`, `Å = Å̄/x`,
//!   `|Å|² = x²|Å̄|²`, `|A|² = |Å|² + 2H²` and `dμ = dμ̄/x²`.
//!
//! The orientation is the one carried by the surface (triangle order, graph
//! normal `(−u_x, −u_y, 1)/W`, or revolution normal); the calibration case is
//! the unit hemisphere with outward normal, for which `H = 0`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::GraphSurface;
use super::mesh::{add, cross, dot3, norm3, normalize3, scale, sub, TriMesh};
use super::revolution::RevolutionSurface;
use super::Surface;
use crate::hyp3::Point3;
use crate::Error;

/// Hyperbolic fields of one sample (absent at `x = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicShape {
    /// `A` in the sample's tangent basis.
    pub second_form: [[f64; 2]; 2],
    /// `H`.
    pub mean_curvature: f64,
    /// `|A|²_g`.
    pub a_sq: f64,
    /// `|Å|²_g`, computed by contracting `A − H g`.
    pub trace_free_sq: f64,
    /// `dμ` quadrature weight.
    pub area: f64,
}

/// Shape data of one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSample {
    pub position: Point3,
    pub boundary: bool,
    /// `ν̄`.
    pub normal: [f64; 3],
    /// Tangent basis `(e₁, e₂)` in which the forms are written.
    pub basis: [[f64; 3]; 2],
    /// `ḡ` in that basis.
    pub metric: [[f64; 2]; 2],
    /// `Ā` in that basis.
    pub second_form: [[f64; 2]; 2],
    /// `H̄`.
    pub mean_curvature: f64,
    /// `K̄`.
    pub gauss_curvature: f64,
    /// `|Ā|²_ḡ`.
    pub a_bar_sq: f64,
    /// `|Å̄|²_ḡ`.
    pub trace_free_bar_sq: f64,
    /// `dμ̄` quadrature weight.
    pub area: f64,
    pub hyperbolic: Option<HyperbolicShape>,
}

impl ShapeSample {
    fn from_forms(
        position: Point3,
        boundary: bool,
        normal: [f64; 3],
        basis: [[f64; 3]; 2],
        g: Matrix2<f64>,
        a: Matrix2<f64>,
        area: f64,
    ) -> Self {
        let gi = g.try_inverse().unwrap_or_else(Matrix2::identity);
        let s = gi * a;
        let h = 0.5 * s.trace();
        let k = s.determinant();
        let a_sq = (s * s).trace();
        ShapeSample {
            position,
            boundary,
            normal,
            basis,
            metric: to_arr(&g),
            second_form: to_arr(&a),
            mean_curvature: h,
            gauss_curvature: k,
            a_bar_sq: a_sq,
            trace_free_bar_sq: a_sq - 2.0 * h * h,
            area,
            hyperbolic: None,
        }
    }

    /// Principal curvatures, largest first.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let d = (self.mean_curvature * self.mean_curvature - self.gauss_curvature).max(0.0).sqrt();
        (self.mean_curvature + d, self.mean_curvature - d)
    }
}

fn to_arr(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn to_mat(a: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1])
}

/// Shape data for every sample of a surface.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeField {
    pub samples: Vec<ShapeSample>,
    /// Samples excluded from the hyperbolic fields because `x ≤ 0`.
    pub excluded: Vec<usize>,
}

impl ShapeField {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `H` per sample, NaN where the hyperbolic fields are absent.
    pub fn hyperbolic_mean_curvature(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.hyperbolic.map_or(f64::NAN, |h| h.mean_curvature)).collect()
    }
}

/// Euclidean shape data of a surface (graph: finite differences; mesh:
/// per-vertex polynomial fits over the 2-ring; revolution: from the profile).
/// Sample order matches the vertex order of [`super::to_mesh`].
pub fn shape_euclidean(s: &Surface) -> Result<ShapeField, Error> {
    match s {
        Surface::Graph(g) => Ok(graph_shape(g)),
        Surface::Revolution(r) => revolution_shape(r),
        Surface::Mesh(m) => mesh_shape(m),
    }
}

/// Fills the hyperbolic fields from the Euclidean ones.
pub fn shape_hyperbolic(mut f: ShapeField) -> ShapeField {
    f.excluded.clear();
    for (i, s) in f.samples.iter_mut().enumerate() {
        let x = s.position.x;
        if !(x > 0.0) {
            s.hyperbolic = None;
            f.excluded.push(i);
            continue;
        }
        let g = to_mat(&s.metric);
        let ab = to_mat(&s.second_form);
        let nx = s.normal[0];
        let a = (ab - g * (nx / x)) / x;
        let ghyp = g / (x * x);
        let gi = ghyp.try_inverse().unwrap_or_else(Matrix2::identity);
        let sh = gi * a;
        let h = 0.5 * sh.trace();
        let a_sq = (sh * sh).trace();
        let ao = a - ghyp * h;
        let so = gi * ao;
        s.hyperbolic = Some(HyperbolicShape {
            second_form: to_arr(&a),
            mean_curvature: h,
            a_sq,
            trace_free_sq: (so * so).trace(),
            area: s.area / (x * x),
        });
    }
    f
}

/// Convenience: Euclidean and hyperbolic shape data of a mesh.
pub fn mesh_shape_full(m: &TriMesh) -> Result<ShapeField, Error> {
    Ok(shape_hyperbolic(mesh_shape(m)?))
}

fn graph_shape(g: &GraphSurface) -> ShapeField {
    let st = g.stencils();
    let w = g.planar_weights();
    let samples = (0..g.len())
        .map(|k| {
            let j = st[k].apply(&g.u);
            let (p, q) = (j.ux, j.uy);
            let ww = (1.0 + p * p + q * q).sqrt();
            let normal = [-p / ww, -q / ww, 1.0 / ww];
            let basis = [[1.0, 0.0, p], [0.0, 1.0, q]];
            let metric = Matrix2::new(1.0 + p * p, p * q, p * q, 1.0 + q * q);
            let sf = Matrix2::new(-j.uxx, -j.uxy, -j.uxy, -j.uyy) / ww;
            let pos = Point3::new(g.xy[k][0], g.xy[k][1], g.u[k]);
            ShapeSample::from_forms(pos, g.xy[k][0] == 0.0, normal, basis, metric, sf, w[k] * ww)
        })
        .collect();
    ShapeField { samples, excluded: Vec::new() }
}

fn revolution_shape(r: &RevolutionSurface) -> Result<ShapeField, Error> {
    let mesh = r.to_mesh()?;
    let areas = mesh.vertex_areas();
    let nt = r.n_theta;
    let mut samples = Vec::with_capacity(mesh.n_vertices());
    for (i, p) in r.profile.iter().enumerate() {
        let (k1, k2) = p.principal_curvatures();
        let count = if p.r == 0.0 { 1 } else { nt };
        for j in 0..count {
            let th = 2.0 * std::f64::consts::PI * j as f64 / nt as f64;
            let (c, s) = (th.cos(), th.sin());
            let (ca, sa) = (p.alpha.cos(), p.alpha.sin());
            let e_th = [0.0, -s, c];
            let t = [ca, sa * c, sa * s];
            let normal = [-sa, ca * c, ca * s];
            let v = r.vertex_index(i, j);
            let pos = mesh.vertices[v];
            samples.push(ShapeSample::from_forms(
                pos,
                mesh.boundary[v],
                normal,
                [t, e_th],
                Matrix2::identity(),
                Matrix2::new(k1, 0.0, 0.0, k2),
                areas[v],
            ));
        }
    }
    debug_assert_eq!(samples.len(), mesh.n_vertices());
    Ok(ShapeField { samples, excluded: Vec::new() })
}

/// Number of 2-ring neighbours needed for a cubic fit (otherwise quadratic).
const CUBIC_MIN_NEIGHBOURS: usize = 12;

fn mesh_shape(m: &TriMesh) -> Result<ShapeField, Error> {
    let bad = m.degenerate_triangles();
    if !bad.is_empty() {
        return Err(Error::DegenerateTriangles(bad));
    }
    let adj = m.adjacency();
    let normals = m.vertex_normals();
    let areas = m.vertex_areas();
    let samples: Vec<ShapeSample> = (0..m.n_vertices())
        .into_par_iter()
        .map_init(
            || Marks::new(m.n_vertices()),
            |marks, v| {
                let nb = fit_neighbourhood(m, &adj, v, marks);
                fit_vertex(m, v, &nb, normals[v], areas[v])
            },
        )
        .collect();
    Ok(ShapeField { samples, excluded: Vec::new() })
}

/// Reusable visited-marks for breadth-first walks (stamp per walk).
struct Marks {
    stamp: Vec<u32>,
    current: u32,
}

impl Marks {
    fn new(n: usize) -> Self {
        Self { stamp: vec![0; n], current: 0 }
    }

    fn next_walk(&mut self) {
        self.current += 1;
    }

    /// Marks `v`; returns false if it was already marked in this walk.
    fn insert(&mut self, v: usize) -> bool {
        let fresh = self.stamp[v] != self.current;
        self.stamp[v] = self.current;
        fresh
    }
}

/// Vertices within the Euclidean radius of the 2-ring (3-ring at boundary
/// vertices, whose one-sided patches need a fourth row for the cubic terms),
/// collected by a breadth-first walk so thin, anisotropic rings still yield a
/// round patch.
fn fit_neighbourhood(m: &TriMesh, adj: &[Vec<usize>], v: usize, marks: &mut Marks) -> Vec<usize> {
    const MAX_POINTS: usize = 400;
    let p0 = m.position(v);
    let dist = |u: usize| norm3(sub(m.position(u), p0));
    let rings = if m.boundary[v] { 3 } else { 2 };
    let mut radius = 0.0f64;
    marks.next_walk();
    marks.insert(v);
    let mut front = vec![v];
    for _ in 0..rings {
        let mut next = Vec::new();
        for &a in &front {
            for &b in &adj[a] {
                if marks.insert(b) {
                    radius = radius.max(dist(b));
                    next.push(b);
                }
            }
        }
        front = next;
    }
    marks.next_walk();
    marks.insert(v);
    let mut out = Vec::new();
    let mut queue = std::collections::VecDeque::from([v]);
    'walk: while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if marks.insert(w) && dist(w) <= radius * (1.0 + 1e-9) {
                out.push(w);
                queue.push_back(w);
                if out.len() >= MAX_POINTS {
                    break 'walk;
                }
            }
        }
    }
    if out.len() < 7 {
        return m.ring(adj, v, 3);
    }
    out
}

/// Fits the height over the tangent plane of `n0` by a cubic (or quadratic)
/// polynomial through the vertex and reads off normal and second fundamental form.
fn fit_vertex(m: &TriMesh, v: usize, nb: &[usize], n0: [f64; 3], area: f64) -> ShapeSample {
    let p0 = m.position(v);
    let pos = m.vertices[v];
    let helper = if n0[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalize3(sub(helper, scale(n0, dot3(helper, n0))));
    let e2 = cross(n0, e1);
    let local: Vec<[f64; 3]> = nb
        .iter()
        .map(|&u| {
            let d = sub(m.position(u), p0);
            [dot3(d, e1), dot3(d, e2), dot3(d, n0)]
        })
        .collect();
    let rho = local.iter().fold(0.0f64, |a, l| a.max(l[0].hypot(l[1]))).max(1e-300);
    let cubic = local.len() >= CUBIC_MIN_NEIGHBOURS;
    let ncoef = if cubic { 9 } else { 5 };
    let row = |l: &[f64; 3]| {
        let (u, w) = (l[0] / rho, l[1] / rho);
        [u, w, u * u, u * w, w * w, u * u * u, u * u * w, u * w * w, w * w * w]
    };
    // Normal equations (columns are O(1) after scaling by rho); SVD fallback
    // for the rare rank-deficient patch.
    let mut ata = DMatrix::<f64>::zeros(ncoef, ncoef);
    let mut atb = DVector::<f64>::zeros(ncoef);
    for l in &local {
        let r = row(l);
        for i in 0..ncoef {
            atb[i] += r[i] * l[2] / rho;
            for j in 0..=i {
                ata[(i, j)] += r[i] * r[j];
            }
        }
    }
    for i in 0..ncoef {
        for j in 0..i {
            ata[(j, i)] = ata[(i, j)];
        }
    }
    let well_posed = {
        let d = ata.diagonal();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        lo > 1e-6 * hi
    };
    let coef = match ata.clone().cholesky().filter(|_| well_posed) {
        Some(ch) => ch.solve(&atb),
        None => {
            let mat = DMatrix::from_fn(local.len(), ncoef, |r, c| row(&local[r])[c]);
            let rhs = DVector::from_iterator(local.len(), local.iter().map(|l| l[2] / rho));
            mat.svd(true, true).solve(&rhs, 1e-13).unwrap_or_else(|_| DVector::zeros(ncoef))
        }
    };
    // Height w(u,v) in units of rho: derivatives at the origin.
    let (wu, wv) = (coef[0], coef[1]);
    let (wuu, wuv, wvv) = (2.0 * coef[2] / rho, coef[3] / rho, 2.0 * coef[4] / rho);
    let ww = (1.0 + wu * wu + wv * wv).sqrt();
    let normal = normalize3(add(add(scale(e1, -wu / ww), scale(e2, -wv / ww)), scale(n0, 1.0 / ww)));
    // Coordinate basis r_u = e1 + wu n0, r_v = e2 + wv n0; move to an orthonormal basis.
    let ru = add(e1, scale(n0, wu));
    let rv = add(e2, scale(n0, wv));
    let t1 = normalize3(ru);
    let t2 = normalize3(sub(rv, scale(t1, dot3(rv, t1))));
    let r = Matrix2::new(dot3(t1, ru), dot3(t1, rv), dot3(t2, ru), dot3(t2, rv));
    let a_coord = Matrix2::new(-wuu, -wuv, -wuv, -wvv) / ww;
    let ri = r.try_inverse().unwrap_or_else(Matrix2::identity);
    let a_orth = ri.transpose() * a_coord * ri;
    ShapeSample::from_forms(pos, m.boundary[v], normal, [t1, t2], Matrix2::identity(), a_orth, area)
}

/// Second fundamental form of a sample applied to two tangent vectors
/// expressed in ambient coordinates.
pub fn second_form_on(s: &ShapeSample, x: [f64; 3], y: [f64; 3]) -> f64 {
    let g = to_mat(&s.metric);
    let gi = g.try_inverse().unwrap_or_else(Matrix2::identity);
    // Components of x, y in the basis (e1, e2): solve g c = (⟨x,e1⟩, ⟨x,e2⟩).
    let comp = |v: [f64; 3]| gi * Vector2::new(dot3(v, s.basis[0]), dot3(v, s.basis[1]));
    let (cx, cy) = (comp(x), comp(y));
    (cx.transpose() * to_mat(&s.second_form) * cy)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::graph::GraphDomain;
    use num_complex::Complex64;

    fn uv_sphere(radius: f64, h: f64) -> TriMesh {
        // Full sphere from two hemispheres is not needed: the upper hemisphere
        // shifted upwards is a spherical cap with an open rim.
        let s = RevolutionSurface::hemisphere(Complex64::new(0.0, 0.0), radius, h).unwrap();
        let mut m = s.to_mesh().unwrap();
        for p in &mut m.vertices {
            p.x += 2.0 * radius;
        }
        m.boundary = vec![false; m.n_vertices()];
        m
    }

    #[test]
    fn sphere_curvatures_from_fits() {
        let m = uv_sphere(1.0, 1.0 / 32.0);
        let f = mesh_shape(&m).unwrap();
        let mut worst = 0.0f64;
        for (v, s) in f.samples.iter().enumerate() {
            if m.vertices[v].x < 2.2 {
                continue; // skip the open rim
            }
            worst = worst.max((s.mean_curvature - 1.0).abs());
            assert!(s.trace_free_bar_sq < 1e-4);
        }
        assert!(worst < 2e-3, "{worst}");
    }

    #[test]
    fn flat_plane_has_zero_forms() {
        let mut g = GraphSurface::new(GraphDomain::Rectangle { x_max: 1.0, y_half: 1.0 }, 0.125).unwrap();
        g.set_heights(|_, _| 0.0);
        let f = shape_euclidean(&Surface::Graph(g)).unwrap();
        for s in &f.samples {
            assert_eq!(s.second_form, [[0.0, 0.0], [0.0, 0.0]]);
            assert_eq!(s.gauss_curvature, 0.0);
        }
    }

    #[test]
    fn horosphere_and_vertical_plane() {
        // Horosphere x = 2 as the graph of a mesh (flat horizontal square).
        let pts = vec![
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(2.0, 1.0, 0.0),
            Point3::new(2.0, 1.0, 1.0),
            Point3::new(2.0, 0.0, 1.0),
            Point3::new(2.0, 0.5, 0.5),
        ];
        let m = TriMesh::new(pts, vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]);
        let f = shape_hyperbolic(mesh_shape(&m).unwrap());
        for s in &f.samples {
            let hy = s.hyperbolic.unwrap();
            assert!((hy.mean_curvature.abs() - 1.0).abs() < 1e-12);
            assert!(hy.trace_free_sq.abs() < 1e-20);
        }
        // Vertical plane z = 0: A = 0.
        let mut g = GraphSurface::new(GraphDomain::Rectangle { x_max: 1.0, y_half: 1.0 }, 0.25).unwrap();
        g.set_heights(|_, _| 0.0);
        let f = shape_hyperbolic(shape_euclidean(&Surface::Graph(g)).unwrap());
        for s in f.samples.iter().filter_map(|s| s.hyperbolic) {
            assert_eq!(s.second_form, [[0.0, 0.0], [0.0, 0.0]]);
        }
        assert_eq!(f.excluded.len(), 9);
    }
}
