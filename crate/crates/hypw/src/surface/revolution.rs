//! Surfaces of revolution about a vertical axis.
//!
//! The profile is an arclength-parametrized curve `s ↦ (x(s), r(s))` in the
//! half-plane through the axis, with tangent `(cos α, sin α)` and curvature
//! `κ = dα/ds`.  Profile ends with `x = 0` are circles on the boundary at
//! infinity; an end with `r = 0` is an apex on the axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mesh::TriMesh;
use crate::hyp3::Point3;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub s: f64,
    pub x: f64,
    pub r: f64,
    pub alpha: f64,
    pub kappa: f64,
}

impl ProfileSample {
    /// Principal curvatures `(k_meridian, k_parallel)` for the normal
    /// `ν̄ = −sin α e_x + cos α e_ρ`.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let k1 = -self.kappa;
        let k2 = if self.r > 0.0 { self.alpha.cos() / self.r } else { k1 };
        (k1, k2)
    }

    /// Euclidean mean curvature (average convention).
    pub fn mean_curvature(&self) -> f64 {
        let (k1, k2) = self.principal_curvatures();
        0.5 * (k1 + k2)
    }

    /// Hyperbolic mean curvature `H = x H̄ − ν̄_x` with `ν̄_x = −sin α`.
    pub fn hyperbolic_mean_curvature(&self) -> f64 {
        self.x * self.mean_curvature() + self.alpha.sin()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RevolutionSurface {
    /// Boundary point through which the vertical axis passes.
    pub axis: Complex64,
    pub profile: Vec<ProfileSample>,
    /// Number of vertices per parallel circle in [`RevolutionSurface::to_mesh`].
    pub n_theta: usize,
}

impl RevolutionSurface {
    pub fn new(axis: Complex64, profile: Vec<ProfileSample>, n_theta: usize) -> Result<Self, Error> {
        if profile.len() < 2 {
            return Err(Error::InvalidInput("profile needs at least two samples".into()));
        }
        if n_theta < 3 {
            return Err(Error::InvalidInput("angular resolution must be at least 3".into()));
        }
        let last = profile.len() - 1;
        for (i, p) in profile.iter().enumerate() {
            if !(p.x >= 0.0) || !(p.r >= 0.0) || (p.r == 0.0 && i != 0 && i != last) {
                return Err(Error::InvalidInput(format!("invalid profile sample {i}: {p:?}")));
            }
        }
        Ok(Self { axis, profile, n_theta })
    }

    /// Geodesic hemisphere of radius `R` centred at `axis`, sampled at spacing `h`:
    /// the quarter circle from `(0, R)` to the apex `(R, 0)`.
    pub fn hemisphere(axis: Complex64, radius: f64, h: f64) -> Result<Self, Error> {
        let len = 0.5 * PI * radius;
        let n = ((len / h).ceil() as usize).max(2);
        let profile = (0..=n)
            .map(|i| {
                let s = len * i as f64 / n as f64;
                let t = s / radius;
                let (x, r) = if i == n { (radius, 0.0) } else { (radius * t.sin(), radius * t.cos()) };
                ProfileSample { s, x, r, alpha: -t, kappa: -1.0 / radius }
            })
            .collect();
        Self::new(axis, profile, angular_count(radius, h))
    }

    /// Resamples a dense profile table at uniform arclength spacing close to `h`
    /// (cubic Hermite interpolation of `x`, `r`, `α`; linear for `κ`).
    pub fn from_table(axis: Complex64, table: &[ProfileSample], h: f64) -> Result<Self, Error> {
        if table.len() < 2 {
            return Err(Error::InvalidInput("empty profile".into()));
        }
        let (s0, s1) = (table[0].s, table[table.len() - 1].s);
        let n = (((s1 - s0) / h).ceil() as usize).max(2);
        let mut k = 0;
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let s = if i == n { s1 } else { s0 + (s1 - s0) * i as f64 / n as f64 };
            while k + 2 < table.len() && table[k + 1].s < s {
                k += 1;
            }
            out.push(hermite(&table[k], &table[k + 1], s));
        }
        let rmax = out.iter().fold(0.0f64, |m, p| m.max(p.r));
        Self::new(axis, out, angular_count(rmax, h))
    }

    pub fn length(&self) -> f64 {
        self.profile[self.profile.len() - 1].s - self.profile[0].s
    }

    /// `H_hyp` at every profile sample.
    pub fn hyperbolic_mean_curvature(&self) -> Vec<f64> {
        self.profile.iter().map(|p| p.hyperbolic_mean_curvature()).collect()
    }

    /// Vertex index of ring `i`, angle index `j` in [`RevolutionSurface::to_mesh`].
    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        let apex_first = self.profile[0].r == 0.0;
        if apex_first {
            if i == 0 {
                0
            } else {
                1 + (i - 1) * self.n_theta + j
            }
        } else {
            i * self.n_theta + j
        }
    }

    /// Position of profile sample `i` at angle `θ`.
    pub fn point(&self, i: usize, theta: f64) -> Point3 {
        let p = &self.profile[i];
        Point3::above(self.axis + Complex64::from_polar(p.r, theta), p.x)
    }

    /// Rings of `n_theta` vertices per profile sample (a single vertex at an
    /// apex), quads split along a fixed diagonal; oriented along
    /// `ν̄ = −sin α e_x + cos α e_ρ`.
    pub fn to_mesh(&self) -> Result<TriMesh, Error> {
        if self.profile.len() < 2 {
            return Err(Error::InvalidInput("empty profile".into()));
        }
        let nt = self.n_theta;
        let np = self.profile.len();
        let mut vertices = Vec::new();
        let mut ring_ids: Vec<Vec<usize>> = Vec::with_capacity(np);
        for i in 0..np {
            if self.profile[i].r == 0.0 {
                vertices.push(Point3::above(self.axis, self.profile[i].x));
                ring_ids.push(vec![vertices.len() - 1; nt]);
            } else {
                let start = vertices.len();
                for j in 0..nt {
                    vertices.push(self.point(i, 2.0 * PI * j as f64 / nt as f64));
                }
                ring_ids.push((start..start + nt).collect());
            }
        }
        let mut triangles = Vec::new();
        for i in 0..np - 1 {
            let (a, b) = (&ring_ids[i], &ring_ids[i + 1]);
            let a_apex = self.profile[i].r == 0.0;
            let b_apex = self.profile[i + 1].r == 0.0;
            for j in 0..nt {
                let jn = (j + 1) % nt;
                if !b_apex {
                    triangles.push([a[j], b[jn], b[j]]);
                }
                if !a_apex {
                    triangles.push([a[j], a[jn], b[jn]]);
                }
            }
        }
        Ok(TriMesh::new(vertices, triangles))
    }
}

/// Parallel-circle resolution for spacing `h` on circles of radius up to `rmax`.
pub fn angular_count(rmax: f64, h: f64) -> usize {
    ((2.0 * PI * rmax / h).round() as usize).max(6)
}

fn hermite(a: &ProfileSample, b: &ProfileSample, s: f64) -> ProfileSample {
    let d = b.s - a.s;
    if d <= 0.0 {
        return *a;
    }
    let t = ((s - a.s) / d).clamp(0.0, 1.0);
    let (h00, h10, h01, h11) = (
        2.0 * t * t * t - 3.0 * t * t + 1.0,
        t * t * t - 2.0 * t * t + t,
        -2.0 * t * t * t + 3.0 * t * t,
        t * t * t - t * t,
    );
    let herm = |p0: f64, m0: f64, p1: f64, m1: f64| h00 * p0 + h10 * d * m0 + h01 * p1 + h11 * d * m1;
    ProfileSample {
        s,
        x: herm(a.x, a.alpha.cos(), b.x, b.alpha.cos()).max(0.0),
        r: herm(a.r, a.alpha.sin(), b.r, b.alpha.sin()).max(0.0),
        alpha: herm(a.alpha, a.kappa, b.alpha, b.kappa),
        kappa: a.kappa + t * (b.kappa - a.kappa),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hemisphere_mesh_area() {
        let s = RevolutionSurface::hemisphere(Complex64::new(0.0, 0.0), 1.0, 1.0 / 32.0).unwrap();
        let m = s.to_mesh().unwrap();
        assert!((m.euclidean_area() - 2.0 * PI).abs() / (2.0 * PI) < 0.01);
        assert!(m.validate().is_ok());
        // Orientation: outward normals on the unit sphere.
        let n = m.vertex_normals();
        let v = m.vertices.len() / 2;
        let p = m.vertices[v].to_array();
        assert!(n[v][0] * p[0] + n[v][1] * p[1] + n[v][2] * p[2] > 0.99);
        assert!(s.hyperbolic_mean_curvature().iter().all(|h| h.abs() < 1e-14));
        assert_eq!(m.boundary.iter().filter(|b| **b).count(), s.n_theta);
    }

    #[test]
    fn empty_profile_is_rejected() {
        assert!(RevolutionSurface::new(Complex64::new(0.0, 0.0), vec![], 8).is_err());
        assert!(RevolutionSurface::from_table(Complex64::new(0.0, 0.0), &[], 0.1).is_err());
    }
}
