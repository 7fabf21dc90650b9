//! Horizontal graphs `z = u(x, y)` over a domain of the vertical plane `z = 0`.
//!
//! The domain is sampled on a regular grid of spacing `h`.  For the half-disc
//! the grid is completed by rim nodes placed exactly where grid lines cross the
//! circle, so the triangulated domain follows the arc to second order.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::mesh::TriMesh;
use crate::hyp3::Point3;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GraphDomain {
    /// `{x² + y² ≤ R², x ≥ 0}`
    HalfDisc { radius: f64 },
    /// `[0, x_max] × [−y_half, y_half]`
    Rectangle { x_max: f64, y_half: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Unknown of the boundary-value problem.
    Interior,
    /// On the row `x = 0` (boundary at infinity).
    Infinity,
    /// On the outer rim (Dirichlet data).
    Rim,
}

/// Linear derivative functionals at one sample: `u_x = Σ wx[k] u[nodes[k]]`, etc.
#[derive(Clone, Debug, Default)]
pub struct Stencil {
    pub nodes: Vec<usize>,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    pub wxx: Vec<f64>,
    pub wxy: Vec<f64>,
    pub wyy: Vec<f64>,
}

/// First and second derivatives `(u_x, u_y, u_xx, u_xy, u_yy)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub ux: f64,
    pub uy: f64,
    pub uxx: f64,
    pub uxy: f64,
    pub uyy: f64,
}

impl Stencil {
    pub fn apply(&self, u: &[f64]) -> Jet2 {
        let mut j = Jet2::default();
        for (k, &n) in self.nodes.iter().enumerate() {
            let v = u[n];
            j.ux += self.wx[k] * v;
            j.uy += self.wy[k] * v;
            j.uxx += self.wxx[k] * v;
            j.uxy += self.wxy[k] * v;
            j.uyy += self.wyy[k] * v;
        }
        j
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphSurface {
    pub domain: GraphDomain,
    pub h: f64,
    /// Planar sample positions `(x, y)`.
    pub xy: Vec<[f64; 2]>,
    pub kind: Vec<NodeKind>,
    /// Heights `u(x, y)`.
    pub u: Vec<f64>,
    /// Counter-clockwise triangulation of the planar domain.
    pub triangles: Vec<[usize; 3]>,
    /// Grid extent: rows `i = 0..=ni`, columns `j = −nj..=nj`.
    pub ni: usize,
    pub nj: usize,
    grid: Vec<Option<usize>>,
}

impl GraphSurface {
    /// Samples `domain` with spacing `h`; heights start at zero.
    pub fn new(domain: GraphDomain, h: f64) -> Result<Self, Error> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        match domain {
            GraphDomain::HalfDisc { radius } => Self::half_disc(radius, h),
            GraphDomain::Rectangle { x_max, y_half } => Self::rectangle(x_max, y_half, h),
        }
    }

    fn rectangle(x_max: f64, y_half: f64, h: f64) -> Result<Self, Error> {
        let ni = (x_max / h).round() as usize;
        let nj = (y_half / h).round() as usize;
        if ni < 2
            || nj < 1
            || ((ni as f64) * h - x_max).abs() > 1e-9 * x_max
            || ((nj as f64) * h - y_half).abs() > 1e-9 * y_half
        {
            return Err(Error::InvalidInput("rectangle sides must be positive multiples of h".into()));
        }
        let mut s = Self::empty(GraphDomain::Rectangle { x_max, y_half }, h, ni, nj);
        for i in 0..=ni {
            for j in -(nj as i64)..=(nj as i64) {
                let kind = if i == 0 {
                    NodeKind::Infinity
                } else if i == ni || j.unsigned_abs() as usize == nj {
                    NodeKind::Rim
                } else {
                    NodeKind::Interior
                };
                s.push_grid(i, j, kind);
            }
        }
        for i in 0..ni {
            for j in -(nj as i64)..(nj as i64) {
                let a = s.grid_node(i, j).unwrap();
                let b = s.grid_node(i + 1, j).unwrap();
                let c = s.grid_node(i + 1, j + 1).unwrap();
                let d = s.grid_node(i, j + 1).unwrap();
                s.triangles.push([a, b, c]);
                s.triangles.push([a, c, d]);
            }
        }
        s.u = vec![0.0; s.xy.len()];
        Ok(s)
    }

    fn half_disc(radius: f64, h: f64) -> Result<Self, Error> {
        let n = (radius / h).round() as usize;
        if n < 2 || ((n as f64) * h - radius).abs() > 1e-9 * radius {
            return Err(Error::InvalidInput("half-disc radius must be a multiple of h (at least 2h)".into()));
        }
        let r2 = radius * radius;
        let mut s = Self::empty(GraphDomain::HalfDisc { radius }, h, n, n);
        let inside = |i: usize, j: i64| {
            let (x, y) = (i as f64 * h, j as f64 * h);
            x * x + y * y <= r2 * (1.0 + 1e-12)
        };
        // Nodes closer than h/4 to the arc become rim nodes themselves, so that
        // no rim crossing point nearly coincides with a grid node.
        let near_rim = |i: usize, j: i64| {
            let (x, y) = (i as f64 * h, j as f64 * h);
            radius - (x * x + y * y).sqrt() < 0.25 * h
        };
        for i in 0..=n {
            for j in -(n as i64)..=(n as i64) {
                if !inside(i, j) {
                    continue;
                }
                let kind = if i == 0 {
                    NodeKind::Infinity
                } else if near_rim(i, j) {
                    NodeKind::Rim
                } else {
                    NodeKind::Interior
                };
                s.push_grid(i, j, kind);
            }
        }
        // Rim crossings on grid edges leaving the disc from a node that is not itself on the rim.
        let mut crossings: HashMap<(usize, i64, u8), usize> = HashMap::new();
        let mut add_crossing = |s: &mut Self, key: (usize, i64, u8), p: [f64; 2]| -> usize {
            *crossings.entry(key).or_insert_with(|| {
                s.xy.push(p);
                s.kind.push(NodeKind::Rim);
                s.xy.len() - 1
            })
        };
        let edge_crossing = |s: &Self, (i0, j0): (usize, i64), (i1, j1): (i64, i64)| -> Option<[f64; 2]> {
            let a = s.grid_node(i0, j0)?;
            if s.kind[a] != NodeKind::Interior {
                return None;
            }
            if i1 >= 0 && i1 <= n as i64 && s.grid_node(i1 as usize, j1).is_some() {
                return None;
            }
            let (x0, y0) = (i0 as f64 * h, j0 as f64 * h);
            if i1 != i0 as i64 {
                let y = y0;
                let x = (r2 - y * y).max(0.0).sqrt();
                Some([x.min(x0 + h).max(x0), y])
            } else {
                let x = x0;
                let yy = (r2 - x * x).max(0.0).sqrt();
                Some([x, if j1 > j0 { yy } else { -yy }])
            }
        };
        // Cells, walking corners counter-clockwise and inserting crossings on edges.
        for i in 0..n {
            for j in -(n as i64)..(n as i64) {
                let corners = [(i as i64, j), (i as i64 + 1, j), (i as i64 + 1, j + 1), (i as i64, j + 1)];
                let mut poly: Vec<usize> = Vec::with_capacity(6);
                for k in 0..4 {
                    let (ci, cj) = corners[k];
                    let (ni_, nj_) = corners[(k + 1) % 4];
                    let here = s.grid_node(ci as usize, cj);
                    let there = if ni_ <= n as i64 { s.grid_node(ni_ as usize, nj_) } else { None };
                    if let Some(a) = here {
                        poly.push(a);
                    }
                    // crossing on the edge (ci,cj)-(ni_,nj_)
                    let edge_key =
                        if ci == ni_ { (ci as usize, cj.min(nj_), 1u8) } else { (ci.min(ni_) as usize, cj, 0u8) };
                    let cross = match (here, there) {
                        (Some(_), None) => edge_crossing(&s, (ci as usize, cj), (ni_, nj_)),
                        (None, Some(_)) if ni_ >= 0 => edge_crossing(&s, (ni_ as usize, nj_), (ci, cj)),
                        _ => None,
                    };
                    if let Some(p) = cross {
                        let id = add_crossing(&mut s, edge_key, p);
                        poly.push(id);
                    }
                }
                if poly.len() < 3 {
                    continue;
                }
                if poly.len() == 4 && corners.iter().all(|&(ci, cj)| s.grid_node(ci as usize, cj).is_some()) {
                    s.triangles.push([poly[0], poly[1], poly[2]]);
                    s.triangles.push([poly[0], poly[2], poly[3]]);
                } else {
                    for k in 1..poly.len() - 1 {
                        let t = [poly[0], poly[k], poly[k + 1]];
                        if planar_area(&s.xy, t) > 1e-12 * h * h {
                            s.triangles.push(t);
                        }
                    }
                }
            }
        }
        s.u = vec![0.0; s.xy.len()];
        Ok(s)
    }

    fn empty(domain: GraphDomain, h: f64, ni: usize, nj: usize) -> Self {
        Self {
            domain,
            h,
            xy: Vec::new(),
            kind: Vec::new(),
            u: Vec::new(),
            triangles: Vec::new(),
            ni,
            nj,
            grid: vec![None; (ni + 1) * (2 * nj + 1)],
        }
    }

    fn push_grid(&mut self, i: usize, j: i64, kind: NodeKind) {
        let id = self.xy.len();
        self.xy.push([i as f64 * self.h, j as f64 * self.h]);
        self.kind.push(kind);
        let k = i * (2 * self.nj + 1) + (j + self.nj as i64) as usize;
        self.grid[k] = Some(id);
    }

    /// Sample index of grid node `(i, j)` (row `x = i h`, column `y = j h`).
    pub fn grid_node(&self, i: usize, j: i64) -> Option<usize> {
        if i > self.ni || j.unsigned_abs() as usize > self.nj {
            return None;
        }
        self.grid[i * (2 * self.nj + 1) + (j + self.nj as i64) as usize]
    }

    pub fn len(&self) -> usize {
        self.xy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xy.is_empty()
    }

    /// Sets `u` from a function of `(x, y)`.
    pub fn set_heights(&mut self, f: impl Fn(f64, f64) -> f64) {
        self.u = self.xy.iter().map(|p| f(p[0], p[1])).collect();
    }

    /// Sets the Dirichlet samples (row `x = 0` and rim) from a function.
    pub fn set_boundary_data(&mut self, f: impl Fn(f64, f64) -> f64) {
        for k in 0..self.len() {
            if self.kind[k] != NodeKind::Interior {
                self.u[k] = f(self.xy[k][0], self.xy[k][1]);
            }
        }
    }

    /// Derivative stencils for every sample: the standard centred 9-point
    /// stencil at regular interior nodes, least-squares polynomial fits elsewhere.
    pub fn stencils(&self) -> Vec<Stencil> {
        let buckets = self.buckets();
        (0..self.len())
            .map(|k| {
                if let Some(st) = self.regular_stencil(k) {
                    return st;
                }
                let interior = self.kind[k] == NodeKind::Interior;
                let (degree, radius) = if interior { (2, 1.5) } else { (3, 2.6) };
                let mut r = radius;
                let mut st = loop {
                    let cand = self.neighbours_within(&buckets, k, r * self.h);
                    if let Some(st) = ls_stencil(&self.xy, k, &cand, degree, self.h) {
                        break st;
                    }
                    r += 0.5;
                    assert!(r < 10.0, "no derivative stencil for sample {k}");
                };
                if interior {
                    self.shortley_weller(&buckets, k, &mut st);
                }
                st
            })
            .collect()
    }

    fn regular_stencil(&self, k: usize) -> Option<Stencil> {
        if self.kind[k] != NodeKind::Interior {
            return None;
        }
        let h = self.h;
        let i = (self.xy[k][0] / h).round() as usize;
        let j = (self.xy[k][1] / h).round() as i64;
        let g = |di: i64, dj: i64| self.grid_node((i as i64 + di) as usize, j + dj);
        let mut ids = [0usize; 9];
        let offs = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        for (n, &(di, dj)) in offs.iter().enumerate() {
            ids[n] = g(di, dj)?;
        }
        let (h1, h2) = (1.0 / (2.0 * h), 1.0 / (h * h));
        Some(Stencil {
            nodes: ids.to_vec(),
            wx: vec![0.0, h1, -h1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            wy: vec![0.0, 0.0, 0.0, h1, -h1, 0.0, 0.0, 0.0, 0.0],
            wxx: vec![-2.0 * h2, h2, h2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            wxy: vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.25 * h2, -0.25 * h2, -0.25 * h2, 0.25 * h2],
            wyy: vec![-2.0 * h2, 0.0, 0.0, h2, h2, 0.0, 0.0, 0.0, 0.0],
        })
    }

    /// Replaces the first and pure second derivative weights at an irregular
    /// interior node by three-point formulas along the grid lines, using the
    /// nearest sample (grid node or rim crossing) in each axis direction.
    /// These are monotone, unlike least-squares fits, which matters next to
    /// discontinuous boundary data.
    fn shortley_weller(&self, buckets: &HashMap<(i64, i64), Vec<usize>>, k: usize, st: &mut Stencil) {
        let c = self.xy[k];
        let tol = 1e-9 * self.h;
        let near = self.neighbours_within(buckets, k, self.h * (1.0 + 1e-9));
        let find = |axis: usize, sign: f64| -> Option<(usize, f64)> {
            near.iter()
                .filter(|&&m| m != k && (self.xy[m][1 - axis] - c[1 - axis]).abs() < tol)
                .map(|&m| (m, sign * (self.xy[m][axis] - c[axis])))
                .filter(|&(_, d)| d > tol)
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        let entry = |st: &mut Stencil, node: usize| -> usize {
            match st.nodes.iter().position(|&n| n == node) {
                Some(i) => i,
                None => {
                    st.nodes.push(node);
                    for w in [&mut st.wx, &mut st.wy, &mut st.wxx, &mut st.wxy, &mut st.wyy] {
                        w.push(0.0);
                    }
                    st.nodes.len() - 1
                }
            }
        };
        for axis in 0..2 {
            let (Some((e, he)), Some((w, hw))) = (find(axis, 1.0), find(axis, -1.0)) else {
                continue;
            };
            let (ie, iw, i0) = (entry(st, e), entry(st, w), entry(st, k));
            let (d1, d2) = if axis == 0 { (&mut st.wx, &mut st.wxx) } else { (&mut st.wy, &mut st.wyy) };
            d1.iter_mut().for_each(|v| *v = 0.0);
            d2.iter_mut().for_each(|v| *v = 0.0);
            let den = he * hw * (he + hw);
            d1[ie] = hw * hw / den;
            d1[iw] = -he * he / den;
            d1[i0] = (he * he - hw * hw) / den;
            d2[ie] = 2.0 / (he * (he + hw));
            d2[iw] = 2.0 / (hw * (he + hw));
            d2[i0] = -2.0 / (he * hw);
        }
    }

    fn buckets(&self) -> HashMap<(i64, i64), Vec<usize>> {
        let mut b: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, p) in self.xy.iter().enumerate() {
            b.entry(((p[0] / self.h).floor() as i64, (p[1] / self.h).floor() as i64)).or_default().push(k);
        }
        b
    }

    fn neighbours_within(&self, buckets: &HashMap<(i64, i64), Vec<usize>>, k: usize, r: f64) -> Vec<usize> {
        let p = self.xy[k];
        let reach = (r / self.h).ceil() as i64 + 1;
        let (bi, bj) = ((p[0] / self.h).floor() as i64, (p[1] / self.h).floor() as i64);
        let mut out = Vec::new();
        for di in -reach..=reach {
            for dj in -reach..=reach {
                if let Some(list) = buckets.get(&(bi + di, bj + dj)) {
                    for &m in list {
                        let q = self.xy[m];
                        if (q[0] - p[0]).hypot(q[1] - p[1]) <= r * (1.0 + 1e-12) {
                            out.push(m);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Derivatives of `u` at every sample.
    pub fn jets(&self, stencils: &[Stencil]) -> Vec<Jet2> {
        stencils.iter().map(|s| s.apply(&self.u)).collect()
    }

    /// Planar quadrature weights (barycentric areas of the domain triangulation).
    pub fn planar_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        for &t in &self.triangles {
            let a = planar_area(&self.xy, t) / 3.0;
            for v in t {
                w[v] += a;
            }
        }
        w
    }

    /// Hyperbolic mean curvature `H = −(x N(u) − 2 u_x W²)/(2 W³)` at every
    /// sample with `x > 0` (NaN on the row `x = 0`), where `N(u)` is the
    /// Euclidean mean-curvature operator numerator.
    pub fn hyperbolic_mean_curvature(&self, stencils: &[Stencil]) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let x = self.xy[k][0];
                if x <= 0.0 {
                    return f64::NAN;
                }
                let j = stencils[k].apply(&self.u);
                graph_h_hyp(x, &j)
            })
            .collect()
    }

    /// Mean `|⟨∂_x, ν̄⟩| = |u_x|/W` over each of the lowest `rows` grid rows with `x > 0`,
    /// ordered from the highest of those rows down to `x = h`.
    pub fn verticality_by_row(&self, stencils: &[Stencil], rows: usize, y_window: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in (1..=rows.min(self.ni)).rev() {
            let (mut s, mut c) = (0.0, 0usize);
            for j in -(self.nj as i64)..=(self.nj as i64) {
                if let Some(k) = self.grid_node(i, j) {
                    if self.xy[k][1].abs() <= y_window {
                        let jet = stencils[k].apply(&self.u);
                        s += jet.ux.abs() / (1.0 + jet.ux * jet.ux + jet.uy * jet.uy).sqrt();
                        c += 1;
                    }
                }
            }
            out.push(if c > 0 { s / c as f64 } else { f64::NAN });
        }
        out
    }

    /// Triangle mesh of the graph, one vertex per sample.
    pub fn to_mesh(&self) -> TriMesh {
        let vertices = self.xy.iter().zip(&self.u).map(|(p, &u)| Point3::new(p[0], p[1], u)).collect();
        let mut m = TriMesh::new(vertices, self.triangles.clone());
        m.boundary = self.kind.iter().map(|k| *k == NodeKind::Infinity).collect();
        m
    }
}

/// `H_hyp` of a horizontal graph in terms of its 2-jet at height `x`.
pub fn graph_h_hyp(x: f64, j: &Jet2) -> f64 {
    let (p, q) = (j.ux, j.uy);
    let w2 = 1.0 + p * p + q * q;
    let n = (1.0 + q * q) * j.uxx - 2.0 * p * q * j.uxy + (1.0 + p * p) * j.uyy;
    -(x * n - 2.0 * p * w2) / (2.0 * w2 * w2.sqrt())
}

pub(crate) fn planar_area(xy: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let (a, b, c) = (xy[t[0]], xy[t[1]], xy[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Least-squares polynomial derivative weights at `xy[center]` from the samples `cand`.
fn ls_stencil(xy: &[[f64; 2]], center: usize, cand: &[usize], degree: usize, h: f64) -> Option<Stencil> {
    let exps: Vec<(i32, i32)> = (0..=degree as i32).flat_map(|d| (0..=d).map(move |b| (d - b, b))).collect();
    let m = cand.len();
    if m < exps.len() + 1 {
        return None;
    }
    let c = xy[center];
    let mat = DMatrix::from_fn(m, exps.len(), |r, col| {
        let (dx, dy) = ((xy[cand[r]][0] - c[0]) / h, (xy[cand[r]][1] - c[1]) / h);
        dx.powi(exps[col].0) * dy.powi(exps[col].1)
    });
    let svd = mat.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() < 1e-8 * smax {
        return None;
    }
    let pinv = svd.pseudo_inverse(1e-12 * smax).ok()?;
    let row = |e: (i32, i32)| exps.iter().position(|&x| x == e).unwrap();
    let take = |e: (i32, i32), f: f64| -> Vec<f64> { (0..m).map(|k| pinv[(row(e), k)] * f).collect() };
    Some(Stencil {
        nodes: cand.to_vec(),
        wx: take((1, 0), 1.0 / h),
        wy: take((0, 1), 1.0 / h),
        wxx: take((2, 0), 2.0 / (h * h)),
        wxy: take((1, 1), 1.0 / (h * h)),
        wyy: take((0, 2), 2.0 / (h * h)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn half_disc_area_and_orientation() {
        for &h in &[1.0 / 16.0, 1.0 / 64.0] {
            let g = GraphSurface::new(GraphDomain::HalfDisc { radius: 1.0 }, h).unwrap();
            let w: f64 = g.planar_weights().iter().sum();
            assert!((w - PI / 2.0).abs() / (PI / 2.0) < 0.01 * (64.0 * h).max(1.0), "h={h} area={w}");
            assert!(g.triangles.iter().all(|&t| planar_area(&g.xy, t) > 0.0));
            let m = g.to_mesh();
            assert_eq!(m.n_vertices(), g.len());
            assert!((m.euclidean_area() - w).abs() < 1e-12);
        }
    }

    #[test]
    fn stencils_exact_on_quadratics() {
        let mut g = GraphSurface::new(GraphDomain::HalfDisc { radius: 1.0 }, 1.0 / 8.0).unwrap();
        g.set_heights(|x, y| 0.3 + 2.0 * x - y + 0.5 * x * x - 1.5 * x * y + 0.25 * y * y);
        let st = g.stencils();
        for (k, s) in st.iter().enumerate() {
            let j = s.apply(&g.u);
            let [x, y] = g.xy[k];
            assert!((j.ux - (2.0 + x - 1.5 * y)).abs() < 1e-9, "{k}");
            assert!((j.uy - (-1.0 - 1.5 * x + 0.5 * y)).abs() < 1e-9);
            assert!((j.uxx - 1.0).abs() < 1e-8 && (j.uxy + 1.5).abs() < 1e-8 && (j.uyy - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn rectangle_grid() {
        let g = GraphSurface::new(GraphDomain::Rectangle { x_max: 1.0, y_half: 0.5 }, 0.125).unwrap();
        assert_eq!(g.len(), 9 * 9);
        let w: f64 = g.planar_weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-12);
        assert_eq!(g.kind.iter().filter(|k| **k == NodeKind::Infinity).count(), 9);
    }
}
