//! Triangle meshes in the closed upper half-space.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::hyp3::{hyp_distance, HyperbolicIsometry, Point3};
use crate::Error;

/// A triangulated surface.  Vertices with `x = 0` lie on the boundary at
/// infinity and are flagged in `boundary`; `tags` optionally records which
/// glued component each vertex came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    pub tags: Option<Vec<i32>>,
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    if n > 0.0 {
        scale(a, 1.0 / n)
    } else {
        a
    }
}

impl TriMesh {
    /// Builds a mesh, flagging every vertex with `x = 0` as boundary at infinity.
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Self {
        let boundary = vertices.iter().map(|p| p.x == 0.0).collect();
        Self { vertices, triangles, boundary, tags: None }
    }

    pub fn with_tags(mut self, tags: Vec<i32>) -> Self {
        assert_eq!(tags.len(), self.vertices.len());
        self.tags = Some(tags);
        self
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn position(&self, v: usize) -> [f64; 3] {
        self.vertices[v].to_array()
    }

    /// Checks indices, heights and triangle areas.
    pub fn validate(&self) -> Result<(), Error> {
        let n = self.vertices.len();
        if self.boundary.len() != n {
            return Err(Error::InvalidInput("boundary flag count differs from vertex count".into()));
        }
        if let Some(t) = &self.tags {
            if t.len() != n {
                return Err(Error::InvalidInput("tag count differs from vertex count".into()));
            }
        }
        for (i, p) in self.vertices.iter().enumerate() {
            if !(p.x >= 0.0) || !p.y.is_finite() || !p.z.is_finite() || !p.x.is_finite() {
                return Err(Error::InvalidInput(format!("vertex {i} outside the closed upper half-space")));
            }
            if !self.boundary[i] && p.x == 0.0 {
                return Err(Error::InvalidInput(format!("interior vertex {i} has x = 0")));
            }
        }
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&v| v >= n)) {
            return Err(Error::InvalidInput(format!("triangle {t:?} references a missing vertex")));
        }
        let bad = self.degenerate_triangles();
        if !bad.is_empty() {
            return Err(Error::DegenerateTriangles(bad));
        }
        Ok(())
    }

    pub fn degenerate_triangles(&self) -> Vec<usize> {
        (0..self.triangles.len()).filter(|&t| self.triangle_area(t) < 1e-14).collect()
    }

    /// Unnormalized normal (twice the area vector) of triangle `t`.
    pub fn triangle_normal(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.position(a), self.position(b), self.position(c));
        cross(sub(pb, pa), sub(pc, pa))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * norm3(self.triangle_normal(t))
    }

    pub fn euclidean_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Barycentric vertex areas (one third of every incident triangle).
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let third = self.triangle_area(t) / 3.0;
            for &v in tri {
                a[v] += third;
            }
        }
        a
    }

    /// Area-weighted vertex normals, oriented by the triangle order.
    pub fn vertex_normals(&self) -> Vec<[f64; 3]> {
        let mut n = vec![[0.0; 3]; self.vertices.len()];
        for t in 0..self.triangles.len() {
            let tn = self.triangle_normal(t);
            for &v in &self.triangles[t] {
                n[v] = add(n[v], tn);
            }
        }
        n.into_iter().map(normalize3).collect()
    }

    /// Sorted vertex adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &[a, b, c] in &self.triangles {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    /// Unique undirected edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Edges used by exactly one triangle, oriented as in that triangle.
    pub fn topological_boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<((usize, usize), (usize, usize))> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(u, v)| (if u < v { (u, v) } else { (v, u) }, (u, v)))
            .collect();
        e.sort_unstable_by_key(|x| x.0);
        let mut out = Vec::new();
        let mut i = 0;
        while i < e.len() {
            let mut j = i;
            while j < e.len() && e[j].0 == e[i].0 {
                j += 1;
            }
            if j - i == 1 {
                out.push(e[i].1);
            }
            i = j;
        }
        out
    }

    /// Vertices within `k` edge steps of `v`, excluding `v`, in BFS order.
    pub fn ring(&self, adj: &[Vec<usize>], v: usize, k: usize) -> Vec<usize> {
        let mut seen = vec![v];
        let mut frontier = vec![v];
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &adj[u] {
                    if !seen.contains(&w) {
                        seen.push(w);
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        seen.remove(0);
        seen
    }

    /// Connected-component label per vertex (labels are dense, starting at 0).
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; self.vertices.len()];
        let mut next = 0;
        for s in 0..self.vertices.len() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &w in &adj[u] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        q.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Hyperbolic length of an edge (infinite when it touches the boundary at infinity).
    pub fn hyperbolic_edge_length(&self, u: usize, v: usize) -> f64 {
        hyp_distance(&self.vertices[u], &self.vertices[v]).unwrap_or(f64::INFINITY)
    }

    /// Hyperbolic area of the part of the mesh with `x ≥ eps`, integrating
    /// `1/x²` exactly over every flat triangle.
    pub fn hyperbolic_area_above(&self, eps: f64) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_hyperbolic_area_above(t, eps)).sum()
    }

    /// Exact `∫_{T ∩ {x ≥ eps}} dA / x²` over the flat triangle `t`.  The
    /// height `x` is affine on the triangle, so its area distribution is a
    /// piecewise-linear tent between the lowest and highest vertex heights.
    pub fn triangle_hyperbolic_area_above(&self, t: usize, eps: f64) -> f64 {
        let area = self.triangle_area(t);
        let mut h: Vec<f64> = self.triangles[t].iter().map(|&v| self.vertices[v].x).collect();
        h.sort_by(|a, b| a.total_cmp(b));
        let (x1, x2, x3) = (h[0], h[1], h[2]);
        let eps = eps.max(0.0);
        if x3 <= eps {
            return 0.0;
        }
        let span = x3 - x1;
        if span <= 1e-14 * x3.max(1e-300) {
            return if x1 >= eps && x1 > 0.0 { area / (x1 * x1) } else { 0.0 };
        }
        // ∫_lo^hi (α + βξ)/ξ² dξ
        let piece = |lo: f64, hi: f64, alpha: f64, beta: f64| -> f64 {
            let lo = lo.max(eps);
            if lo >= hi || lo <= 0.0 {
                return 0.0;
            }
            alpha * (1.0 / lo - 1.0 / hi) + beta * (hi / lo).ln()
        };
        let mut total = 0.0;
        if x2 - x1 > 0.0 {
            let k1 = 2.0 * area / (span * (x2 - x1));
            total += piece(x1, x2, -k1 * x1, k1);
        }
        if x3 - x2 > 0.0 {
            let k2 = 2.0 * area / (span * (x3 - x2));
            total += piece(x2, x3, k2 * x3, -k2);
        }
        total
    }

    /// Applies an isometry to every vertex; connectivity and flags are kept.
    pub fn transform(&self, m: &HyperbolicIsometry) -> TriMesh {
        let vertices = self
            .vertices
            .iter()
            .zip(&self.boundary)
            .map(|(p, &b)| {
                let mut q = m.apply_interior(p);
                if b {
                    q.x = 0.0;
                }
                q
            })
            .collect();
        TriMesh {
            vertices,
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            tags: self.tags.clone(),
        }
    }

    /// Disjoint union of two meshes (indices of `other` are shifted).
    pub fn merge(&self, other: &TriMesh) -> TriMesh {
        let off = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
        let mut boundary = self.boundary.clone();
        boundary.extend_from_slice(&other.boundary);
        let tags = match (&self.tags, &other.tags) {
            (None, None) => None,
            (a, b) => {
                let mut t = a.clone().unwrap_or_else(|| vec![0; off]);
                t.extend(b.clone().unwrap_or_else(|| vec![0; other.vertices.len()]));
                Some(t)
            }
        };
        TriMesh { vertices, triangles, boundary, tags }
    }

    /// Index of the vertex closest (Euclidean) to `p`.
    pub fn nearest_vertex(&self, p: &Point3) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, v) in self.vertices.iter().enumerate() {
            let d = v.euclidean_distance(p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

/// Vertexwise application of an isometry (see [`TriMesh::transform`]).
pub fn transform_surface(s: &TriMesh, m: &HyperbolicIsometry) -> TriMesh {
    s.transform(m)
}
