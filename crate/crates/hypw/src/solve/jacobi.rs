//! The Jacobi operator `L = Δ_Y + |A|² − 2` of a minimal surface in the
//! upper half-space, discretized on a triangle mesh.
//!
//! In two dimensions the Laplacian is conformally covariant, so with
//! `g = ḡ/x²` we have `Δ_Y = x² Δ_ḡ`; `Δ_ḡ` is the cotangent Laplacian with
//! barycentric vertex areas.  Decay at the boundary at infinity is built in
//! through the weighted unknown `ψ = φ/x^δ`: boundary vertices carry
//! `φ = 0`, and their `ψ` (free in the continuum) is reported as the mean of
//! the neighbouring values.

use serde::{Deserialize, Serialize};

use crate::linalg::{norm_inf, smallest_singular_value, Triplets};
use crate::surface::{mesh_shape_full, TriMesh};
use crate::Error;

/// Solver parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiOptions {
    /// Required residual of the returned `φ`, relative to
    /// `sup|rhs| + ‖L‖_∞ sup|φ|` (the scale of the discrete equation).
    pub tol: f64,
    /// Systems whose smallest singular value estimate falls below this are
    /// rejected as numerically degenerate.
    pub singular_threshold: f64,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self { tol: 1e-10, singular_threshold: 1e-8 }
    }
}

/// Result of [`jacobi_solve`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JacobiSolution {
    /// Normal perturbation `φ` per vertex (zero on the boundary at infinity).
    pub phi: Vec<f64>,
    /// Weighted unknown `ψ = φ/x^δ`.
    pub psi: Vec<f64>,
    pub delta: f64,
    /// `sup |Lφ − rhs|` over interior vertices, from [`jacobi_apply`].
    pub residual_sup: f64,
    /// `residual_sup / (sup|rhs| + ‖L‖_∞ sup|φ|)`.
    pub relative_residual: f64,
    pub sigma_min_estimate: f64,
}

/// Cotangent weights `w_ij = ½(cot α + cot β)` per directed edge list, and
/// barycentric vertex areas.
fn cotan_weights(m: &TriMesh) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
    let n = m.n_vertices();
    let mut w: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut add = |i: usize, j: usize, c: f64| match w[i].iter_mut().find(|(k, _)| *k == j) {
        Some(e) => e.1 += c,
        None => w[i].push((j, c)),
    };
    for t in &m.triangles {
        for k in 0..3 {
            let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            // Angle at `a`, opposite the edge (b, c).
            let (pa, pb, pc) = (m.position(a), m.position(b), m.position(c));
            let u = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            let v = [pc[0] - pa[0], pc[1] - pa[1], pc[2] - pa[2]];
            let dt = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            let cr = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
            let cot = dt / (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt();
            add(b, c, 0.5 * cot);
            add(c, b, 0.5 * cot);
        }
    }
    (w, m.vertex_areas())
}

/// `|A|²` per vertex from the mesh shape fits (zero on the boundary).
fn a_squared(m: &TriMesh) -> Result<Vec<f64>, Error> {
    let f = mesh_shape_full(m)?;
    Ok(f.samples.iter().map(|s| s.hyperbolic.map_or(0.0, |h| h.a_sq)).collect())
}

/// `(Lφ)_i` at interior vertices (NaN on the boundary), computed per
/// triangle without the assembled matrix; used to check solutions.
pub fn jacobi_apply(m: &TriMesh, phi: &[f64]) -> Result<Vec<f64>, Error> {
    let n = m.n_vertices();
    let a2 = a_squared(m)?;
    let areas = m.vertex_areas();
    let mut lap = vec![0.0; n];
    for t in &m.triangles {
        for k in 0..3 {
            let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let (pa, pb, pc) = (m.position(a), m.position(b), m.position(c));
            let u = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            let v = [pc[0] - pa[0], pc[1] - pa[1], pc[2] - pa[2]];
            let dt = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            let cr = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
            let half_cot = 0.5 * dt / (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt();
            lap[b] += half_cot * (phi[c] - phi[b]);
            lap[c] += half_cot * (phi[b] - phi[c]);
        }
    }
    Ok((0..n)
        .map(|i| {
            if m.boundary[i] {
                f64::NAN
            } else {
                let x = m.vertices[i].x;
                x * x * lap[i] / areas[i] + (a2[i] - 2.0) * phi[i]
            }
        })
        .collect())
}

/// Solves `(Δ_Y + |A|² − 2) φ = rhs` for `φ = x^δ ψ`, `0 < δ < 3`.
pub fn jacobi_solve(m: &TriMesh, rhs: &[f64], delta: f64, opts: &JacobiOptions) -> Result<JacobiSolution, Error> {
    if !(delta > 0.0 && delta < 3.0) {
        return Err(Error::InvalidInput(format!("weight exponent δ must lie in (0, 3), got {delta}")));
    }
    let n = m.n_vertices();
    if rhs.len() != n {
        return Err(Error::InvalidInput(format!("rhs has {} values for {n} vertices", rhs.len())));
    }
    let interior: Vec<usize> = (0..n).filter(|&i| !m.boundary[i]).collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in interior.iter().enumerate() {
        slot[i] = k;
    }
    let (w, areas) = cotan_weights(m);
    let a2 = a_squared(m)?;
    let weight: Vec<f64> = m.vertices.iter().map(|p| p.x.powf(delta)).collect();
    let mut mat = Triplets::new(interior.len());
    let mut op_norm: f64 = 0.0;
    for (k, &i) in interior.iter().enumerate() {
        let x2 = m.vertices[i].x.powi(2);
        let mut diag = a2[i] - 2.0;
        let mut row = 0.0;
        for &(j, c) in &w[i] {
            let cij = x2 * c / areas[i];
            row += cij.abs();
            diag -= cij;
            if slot[j] != usize::MAX {
                mat.push(k, slot[j], cij * weight[j]);
            }
        }
        mat.push(k, k, diag * weight[i]);
        op_norm = op_norm.max(row + diag.abs());
    }
    let sigma = smallest_singular_value(&mat)?;
    if !(sigma >= opts.singular_threshold) {
        return Err(Error::NumericallyDegenerate(sigma));
    }
    let lu = mat.factorize()?;
    let b: Vec<f64> = interior.iter().map(|&i| rhs[i]).collect();
    let mut psi_int = lu.solve(&b)?;
    // One step of iterative refinement against the assembled matrix.
    let r: Vec<f64> = mat.mul(&psi_int).iter().zip(&b).map(|(a, b)| b - a).collect();
    let corr = lu.solve(&r)?;
    psi_int.iter_mut().zip(&corr).for_each(|(a, c)| *a += c);

    let mut psi = vec![0.0; n];
    let mut phi = vec![0.0; n];
    for (k, &i) in interior.iter().enumerate() {
        psi[i] = psi_int[k];
        phi[i] = weight[i] * psi_int[k];
    }
    let adj = m.adjacency();
    for i in 0..n {
        if m.boundary[i] {
            let nb: Vec<f64> = adj[i].iter().filter(|&&j| !m.boundary[j]).map(|&j| psi[j]).collect();
            psi[i] = if nb.is_empty() { 0.0 } else { nb.iter().sum::<f64>() / nb.len() as f64 };
        }
    }
    let applied = jacobi_apply(m, &phi)?;
    let residual_sup = norm_inf(&interior.iter().map(|&i| applied[i] - rhs[i]).collect::<Vec<_>>());
    let scale = norm_inf(&b) + op_norm * norm_inf(&phi);
    let relative_residual = if scale > 0.0 { residual_sup / scale } else { 0.0 };
    if !(relative_residual <= opts.tol) {
        return Err(Error::LinearSolver(format!(
            "Jacobi relative residual {relative_residual:.3e} above tolerance {}",
            opts.tol
        )));
    }
    Ok(JacobiSolution { phi, psi, delta, residual_sup, relative_residual, sigma_min_estimate: sigma })
}

/// Reference solution of the rotationally symmetric problem on the unit
/// hemisphere: `φ'' + coth ρ φ' − 2φ = f(ρ)` in geodesic polar distance `ρ`
/// from the top, regular at `ρ = 0` and decaying, by second-order finite
/// differences on `[0, ρ_max]` with `φ(ρ_max) = 0`.  Returns samples `(ρ, φ)`.
pub fn hemisphere_radial_oracle(f: impl Fn(f64) -> f64, rho_max: f64, n: usize) -> Result<Vec<(f64, f64)>, Error> {
    let h = rho_max / n as f64;
    let mut mat = Triplets::new(n);
    let mut b = vec![0.0; n];
    for i in 0..n {
        let rho = i as f64 * h;
        b[i] = f(rho);
        if i == 0 {
            // Regularity: φ'' + coth ρ φ' → 2 φ''(0) at the pole.
            mat.push(0, 0, -4.0 / (h * h) - 2.0);
            mat.push(0, 1, 4.0 / (h * h));
            continue;
        }
        let c = 1.0 / rho.tanh();
        mat.push(i, i - 1, 1.0 / (h * h) - c / (2.0 * h));
        mat.push(i, i, -2.0 / (h * h) - 2.0);
        if i + 1 < n {
            mat.push(i, i + 1, 1.0 / (h * h) + c / (2.0 * h));
        }
    }
    let phi = mat.solve(&b)?;
    let mut out: Vec<(f64, f64)> = phi.iter().enumerate().map(|(i, &v)| (i as f64 * h, v)).collect();
    out.push((rho_max, 0.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::RevolutionSurface;
    use num_complex::Complex64;

    fn hemisphere(h: f64) -> TriMesh {
        RevolutionSurface::hemisphere(Complex64::new(0.0, 0.0), 1.0, h).unwrap().to_mesh().unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = hemisphere(1.0 / 16.0);
        let s = jacobi_solve(&m, &vec![0.0; m.n_vertices()], 1.0, &JacobiOptions::default()).unwrap();
        assert!(norm_inf(&s.phi) == 0.0);
        assert!(s.sigma_min_estimate > 1e-3);
    }

    #[test]
    fn linear_in_rhs() {
        let m = hemisphere(1.0 / 16.0);
        let rhs: Vec<f64> = m.vertices.iter().map(|p| p.x.powi(2) * (1.0 + p.y)).collect();
        let rhs2: Vec<f64> = rhs.iter().map(|v| 2.0 * v).collect();
        let opts = JacobiOptions::default();
        let a = jacobi_solve(&m, &rhs, 1.0, &opts).unwrap();
        let b = jacobi_solve(&m, &rhs2, 1.0, &opts).unwrap();
        let d: Vec<f64> = a.phi.iter().zip(&b.phi).map(|(x, y)| 2.0 * x - y).collect();
        assert!(norm_inf(&d) <= 1e-12 * norm_inf(&b.phi).max(1.0));
    }

    #[test]
    fn exponent_outside_range_is_rejected() {
        let m = hemisphere(1.0 / 8.0);
        let rhs = vec![0.0; m.n_vertices()];
        assert!(jacobi_solve(&m, &rhs, 3.0, &JacobiOptions::default()).is_err());
        assert!(jacobi_solve(&m, &rhs, 0.0, &JacobiOptions::default()).is_err());
    }

    #[test]
    fn radial_oracle_reproduces_closed_form() {
        // L(x²) = −6x⁴ on the hemisphere, with x = sech ρ.
        let sol = hemisphere_radial_oracle(|r| -6.0 / r.cosh().powi(4), 12.0, 6000).unwrap();
        for &(rho, phi) in sol.iter().step_by(500) {
            assert!((phi - 1.0 / rho.cosh().powi(2)).abs() < 1e-5, "rho {rho}: {phi}");
        }
    }
}
