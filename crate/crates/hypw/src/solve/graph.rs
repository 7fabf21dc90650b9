//! Minimal horizontal graphs `z = u(x, y)` by damped Newton with continuation.
//!
//! For a graph, `H_hyp = −G / (2W³)` with `G = x N(u) − 2 u_x W²`,
//! `N(u) = (1+q²) u_xx − 2pq u_xy + (1+p²) u_yy`, `p = u_x`, `q = u_y` and
//! `W² = 1 + p² + q²`.  Newton is applied to `G = 0` at the interior samples,
//! with the row `x = 0` and the rim as Dirichlet data.

use serde::{Deserialize, Serialize};

use crate::linalg::{norm_inf, Triplets};
use crate::surface::graph::{graph_h_hyp, Jet2, Stencil};
use crate::surface::{GraphDomain, GraphSurface, NodeKind};
use crate::Error;

/// Options shared by the nonlinear solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Grid spacing.
    pub h: f64,
    /// Target for `sup |H_hyp|` over interior samples.
    pub tol: f64,
    /// Newton iterations per continuation step.
    pub max_iter: usize,
    /// Smallest step length accepted by the backtracking line search.
    pub damping: f64,
    /// Number of continuation steps in the boundary-data amplitude.
    pub continuation_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { h: 1.0 / 32.0, tol: 1e-10, max_iter: 30, damping: 1.0 / 64.0, continuation_steps: 4 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.h > 0.0) || !(self.tol > 0.0) || self.max_iter == 0 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!("invalid solve options {self:?}")));
        }
        Ok(())
    }
}

/// A solved minimal graph with its convergence record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphSolution {
    pub surface: GraphSurface,
    /// `sup |H_hyp|` over interior samples.
    pub residual: f64,
    /// Newton iterations used at each continuation step.
    pub iterations: Vec<usize>,
}

/// Partial derivatives of `G(x; p, q, r, s, t)` with respect to the jet entries.
fn g_and_partials(x: f64, j: &Jet2) -> (f64, [f64; 5]) {
    let (p, q, r, s, t) = (j.ux, j.uy, j.uxx, j.uxy, j.uyy);
    let w2 = 1.0 + p * p + q * q;
    let n = (1.0 + q * q) * r - 2.0 * p * q * s + (1.0 + p * p) * t;
    let g = x * n - 2.0 * p * w2;
    let gp = x * (-2.0 * q * s + 2.0 * p * t) - 2.0 * w2 - 4.0 * p * p;
    let gq = x * (2.0 * q * r - 2.0 * p * s) - 4.0 * p * q;
    (g, [gp, gq, x * (1.0 + q * q), -2.0 * x * p * q, x * (1.0 + p * p)])
}

/// Solves `H_hyp = 0` over `domain` with Dirichlet data `data(x, y)` on the row
/// `x = 0` and on the rim.
pub fn minimal_graph(
    domain: GraphDomain,
    data: impl Fn(f64, f64) -> f64,
    opts: &SolveOptions,
) -> Result<GraphSolution, Error> {
    opts.validate()?;
    let mut g = GraphSurface::new(domain, opts.h)?;
    let target: Vec<f64> = g.xy.iter().map(|p| data(p[0], p[1])).collect();
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("boundary data must be finite".into()));
    }
    let stencils = g.stencils();
    let unknowns: Vec<usize> = (0..g.len()).filter(|&k| g.kind[k] == NodeKind::Interior).collect();
    let mut col = vec![usize::MAX; g.len()];
    for (c, &k) in unknowns.iter().enumerate() {
        col[k] = c;
    }
    let steps = opts.continuation_steps.max(1);
    let mut iterations = Vec::with_capacity(steps);
    let mut residual = f64::INFINITY;
    for step in 1..=steps {
        let theta = step as f64 / steps as f64;
        // Dirichlet values at this amplitude; interior values scaled from the
        // previous step as the initial guess.
        let prev = (step - 1) as f64 / steps as f64;
        for k in 0..g.len() {
            if g.kind[k] == NodeKind::Interior {
                if prev > 0.0 {
                    g.u[k] *= theta / prev;
                }
            } else {
                g.u[k] = theta * target[k];
            }
        }
        let mut it = 0;
        loop {
            let (gres, hres) = residuals(&g, &stencils, &unknowns);
            residual = hres;
            if hres <= opts.tol {
                break;
            }
            if it >= opts.max_iter {
                return Err(Error::NewtonDiverged { residual, step, steps });
            }
            it += 1;
            let jac = jacobian(&g, &stencils, &unknowns, &col);
            let rhs: Vec<f64> = gres.iter().map(|v| -v).collect();
            let du = jac.solve(&rhs)?;
            // Backtracking on the G residual.
            let base = norm_inf(&gres);
            let mut lam = 1.0;
            let u0 = g.u.clone();
            loop {
                for (c, &k) in unknowns.iter().enumerate() {
                    g.u[k] = u0[k] + lam * du[c];
                }
                let (trial, _) = residuals(&g, &stencils, &unknowns);
                let tn = norm_inf(&trial);
                if tn.is_finite() && (tn < base || lam <= opts.damping) {
                    break;
                }
                lam *= 0.5;
            }
            if !g.u.iter().all(|v| v.is_finite()) {
                return Err(Error::NewtonDiverged { residual, step, steps });
            }
        }
        iterations.push(it);
    }
    Ok(GraphSolution { surface: g, residual, iterations })
}

/// `(G, sup |H_hyp|)` at the unknowns.
fn residuals(g: &GraphSurface, stencils: &[Stencil], unknowns: &[usize]) -> (Vec<f64>, f64) {
    let mut hmax = 0.0f64;
    let gv = unknowns
        .iter()
        .map(|&k| {
            let x = g.xy[k][0];
            let j = stencils[k].apply(&g.u);
            hmax = hmax.max(graph_h_hyp(x, &j).abs());
            g_and_partials(x, &j).0
        })
        .collect();
    (gv, hmax)
}

fn jacobian(g: &GraphSurface, stencils: &[Stencil], unknowns: &[usize], col: &[usize]) -> Triplets {
    let mut t = Triplets::new(unknowns.len());
    for (row, &k) in unknowns.iter().enumerate() {
        let st = &stencils[k];
        let (_, d) = g_and_partials(g.xy[k][0], &st.apply(&g.u));
        for (n, &m) in st.nodes.iter().enumerate() {
            if col[m] != usize::MAX {
                let v = d[0] * st.wx[n] + d[1] * st.wy[n] + d[2] * st.wxx[n] + d[3] * st.wxy[n] + d[4] * st.wyy[n];
                t.push(row, col[m], v);
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(h: f64) -> SolveOptions {
        SolveOptions { h, ..Default::default() }
    }

    #[test]
    fn zero_data_gives_zero() {
        let s = minimal_graph(GraphDomain::HalfDisc { radius: 1.0 }, |_, _| 0.0, &opts(1.0 / 16.0)).unwrap();
        assert!(s.surface.u.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn tilted_plane_is_exact() {
        let a = 0.2;
        let s = minimal_graph(GraphDomain::HalfDisc { radius: 1.0 }, |_, y| a * y, &opts(1.0 / 16.0)).unwrap();
        for (p, u) in s.surface.xy.iter().zip(&s.surface.u) {
            assert!((u - a * p[1]).abs() <= 1e-10);
        }
    }

    #[test]
    fn even_data_gives_even_solution() {
        let data = |x: f64, y: f64| if x == 0.0 { 0.05 * (2.0 * y).cos() } else { 0.0 };
        let s = minimal_graph(GraphDomain::HalfDisc { radius: 1.0 }, data, &opts(1.0 / 16.0)).unwrap().surface;
        for i in 0..=s.ni {
            for j in 1..=s.nj as i64 {
                if let (Some(a), Some(b)) = (s.grid_node(i, j), s.grid_node(i, -j)) {
                    assert!((s.u[a] - s.u[b]).abs() <= 1e-8);
                }
            }
        }
    }
}
