//! Residual of the Willmore equation in its Euclidean form
//! `Δ_ḡ H̄ + 2 H̄ (H̄² − K̄) = 0`, evaluated as a verification field.
//!
//! `Δ_ḡ H̄` at a sample comes from a least-squares polynomial fit of the `H̄`
//! field in tangent-plane coordinates over the 2-ring: in the graph
//! parametrization over the tangent plane the metric is the identity to
//! first order at the sample, so the Laplacian there is `f_uu + f_vv`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::surface::{shape_euclidean, to_mesh, Surface};
use crate::Error;

/// Per-sample residual with flags for one-sided (boundary) values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WillmoreResidual {
    pub field: Vec<f64>,
    /// Samples on, or with a fitting neighbourhood touching, the boundary at
    /// infinity; their values use a one-sided stencil.
    pub one_sided: Vec<bool>,
    /// `(Σ r² dμ̄)^{1/2}` over samples that are not one-sided.
    pub l2: f64,
    pub sup: f64,
}

/// Evaluates the residual on any surface representation.
pub fn willmore_residual(s: &Surface) -> Result<WillmoreResidual, Error> {
    let shape = shape_euclidean(s)?;
    let mesh = to_mesh(s)?;
    let adj = mesh.adjacency();
    let n = mesh.n_vertices();
    let h: Vec<f64> = shape.samples.iter().map(|p| p.mean_curvature).collect();
    let mut field = vec![0.0; n];
    let mut one_sided = vec![false; n];
    for v in 0..n {
        let sample = &shape.samples[v];
        let boundary = mesh.boundary[v];
        let nb = mesh.ring(&adj, v, if boundary { 3 } else { 2 });
        one_sided[v] = boundary || nb.iter().any(|&u| mesh.boundary[u]);
        let lap = fitted_laplacian(&mesh.position(v), &sample.normal, &nb, |u| mesh.position(u), &h, h[v]);
        let (hb, kb) = (sample.mean_curvature, sample.gauss_curvature);
        field[v] = lap.unwrap_or(f64::NAN) + 2.0 * hb * (hb * hb - kb);
    }
    let mut l2 = 0.0;
    let mut sup: f64 = 0.0;
    for v in 0..n {
        if !one_sided[v] && field[v].is_finite() {
            l2 += field[v] * field[v] * shape.samples[v].area;
            sup = sup.max(field[v].abs());
        }
    }
    Ok(WillmoreResidual { field, one_sided, l2: l2.sqrt(), sup })
}

/// `f_uu + f_vv` at the origin of tangent coordinates from a quadratic (or,
/// with enough neighbours, cubic) least-squares fit of `f − f(0)`.
fn fitted_laplacian(
    p0: &[f64; 3],
    normal: &[f64; 3],
    nb: &[usize],
    pos: impl Fn(usize) -> [f64; 3],
    f: &[f64],
    f0: f64,
) -> Option<f64> {
    let (e1, e2) = tangent_frame(normal);
    let cubic = nb.len() >= 14;
    let cols = if cubic { 9 } else { 5 };
    if nb.len() < cols {
        return None;
    }
    let mut scale: f64 = 0.0;
    let pts: Vec<(f64, f64, f64)> = nb
        .iter()
        .map(|&u| {
            let q = pos(u);
            let d = [q[0] - p0[0], q[1] - p0[1], q[2] - p0[2]];
            let (a, b) = (dot(d, e1), dot(d, e2));
            scale = scale.max(a.abs()).max(b.abs());
            (a, b, f[u] - f0)
        })
        .collect();
    if !(scale > 0.0) {
        return None;
    }
    let mut m = DMatrix::zeros(pts.len(), cols);
    let mut rhs = DVector::zeros(pts.len());
    for (k, &(a, b, val)) in pts.iter().enumerate() {
        let (a, b) = (a / scale, b / scale);
        let row = [a, b, a * a, a * b, b * b, a * a * a, a * a * b, a * b * b, b * b * b];
        for c in 0..cols {
            m[(k, c)] = row[c];
        }
        rhs[k] = val;
    }
    let c = m.svd(true, true).solve(&rhs, 1e-12).ok()?;
    Some(2.0 * (c[2] + c[4]) / (scale * scale))
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn tangent_frame(n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(a, *n);
    let mut e1 = [a[0] - d * n[0], a[1] - d * n[1], a[2] - d * n[2]];
    let l = dot(e1, e1).sqrt();
    e1.iter_mut().for_each(|c| *c /= l);
    let e2 = [n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0]];
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{minimal_revolution, RevolutionOptions};
    use crate::surface::RevolutionSurface;
    use num_complex::Complex64;

    #[test]
    fn hemisphere_residual_is_small() {
        let s = RevolutionSurface::hemisphere(Complex64::new(0.0, 0.0), 1.0, 1.0 / 32.0).unwrap();
        let r = willmore_residual(&Surface::Revolution(s)).unwrap();
        assert!(r.sup < 1e-6, "sup {}", r.sup);
    }

    #[test]
    fn catenoid_residual_converges() {
        let mut l2 = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let opts = RevolutionOptions { h, ..Default::default() };
            let s = minimal_revolution(1.0, 2.0, &opts).unwrap().surface.unwrap();
            l2.push(willmore_residual(&Surface::Revolution(s)).unwrap().l2);
        }
        let orders: Vec<f64> = l2.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        assert!(orders.iter().all(|&o| o >= 1.0), "l2 {l2:?} orders {orders:?}");
    }
}
