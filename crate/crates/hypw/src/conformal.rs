//! Isothermal charts on graphical patches and the identities that hold in them.
//!
//! A patch is a horizontal graph `z = u(x, y)` over the rectangle
//! `[0, X] × [−Y, Y]`.  The chart coordinate `q` is the discrete solution of
//! the Laplace–Beltrami equation `Δ_ḡ q = 0` with `q = 0` on the row `x = 0`,
//! `q = 1` on the row `x = X` and vanishing conormal derivative on the sides.
//! Its conjugate `w` has gradient `⋆dq` and is obtained by integrating that
//! closed 1-form along grid paths.  In `(q, w)` the induced metric is
//! `ḡ = e^{2φ}(dq² + dw²)` with `φ = −½ log |∇q|²_ḡ`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::functionals::{
    local_energy_with_adjacency, trace_free_energy, weighted_energy_from, PoleSet, WeightField, Weighting,
};
use crate::hyp3::Point3;
use crate::linalg::Triplets;
use crate::surface::graph::{Jet2, Stencil};
use crate::surface::mesh::{cross, dot3, sub};
use crate::surface::{mesh_shape_full, shape_euclidean, shape_hyperbolic, GraphDomain, GraphSurface, Surface, TriMesh};
use crate::Error;

/// How the pair `(q, w)` is scaled after the harmonic solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartNormalization {
    /// `q = 1` on the far edge `x = X`.
    #[default]
    FarEdge,
    /// `(q, w)` rescaled so that the `w`-span of the row `x = 0` equals its
    /// Euclidean `y`-length.
    ConjugateSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartOptions {
    pub normalization: ChartNormalization,
    /// Resample onto the chart rectangle `0 ≤ q ≤ 1, |w| ≤ half_width`.
    pub resample: bool,
    pub half_width: f64,
    /// Largest admissible slope `|∇u|` of the patch.
    pub max_slope: f64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self { normalization: ChartNormalization::FarEdge, resample: true, half_width: 1.0, max_slope: 0.2 }
    }
}

/// Fields sampled on the regular chart grid `q_i = i·h`, `w_j = −half_width + j·h`.
/// Node `(i, j)` is stored at `i · nw + j`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ChartGrid {
    pub h: f64,
    pub nq: usize,
    pub nw: usize,
    pub half_width: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    /// `∂_q u` and `∂_w u`.
    pub d1u: Vec<f64>,
    pub d2u: Vec<f64>,
    /// `∂_w φ`.
    pub d2phi: Vec<f64>,
    /// `Ā₁₂ ∇_ν z` (the normal part of `∂_q∂_w r`, projected on `e_z`).
    pub a12_nu: Vec<f64>,
    /// `|Ā₁₂|`.
    pub a12_abs: Vec<f64>,
}

impl ChartGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nw + j
    }

    pub fn q(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn w(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.h
    }

    /// Column index of `w = 0`.
    pub fn center(&self) -> usize {
        (self.nw - 1) / 2
    }
}

/// An isothermal chart `(q, w, φ)` on a graphical patch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsothermalChart {
    pub surface: GraphSurface,
    pub normalization: ChartNormalization,
    /// Factor applied to `(q, w)` by the normalization.
    pub scale: f64,
    pub q: Vec<f64>,
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
    /// Coordinate gradients `(∂_x, ∂_y)` of `q` and of `w = ∫⋆dq`.
    pub grad_q: Vec<[f64; 2]>,
    pub grad_w: Vec<[f64; 2]>,
    /// `min |∇q|_ḡ`, `max |∇q|_ḡ` and `c = max(max, 1/min)`.
    pub grad_q_min: f64,
    pub grad_q_max: f64,
    pub c: f64,
    /// Cauchy–Riemann defect of the integrated `w`: max over samples of
    /// `|⟨∇q,∇w⟩_ḡ| + ||∇q|_ḡ − |∇w|_ḡ|` with `∇w` differentiated from the
    /// stored `w` values, relative to `|∇q|_ḡ`, over the samples at least
    /// [`EDGE_MARGIN`] away from the patch edges.
    pub cauchy_riemann_defect: f64,
    pub grid: Option<ChartGrid>,
    #[serde(skip)]
    stencils: Vec<Stencil>,
    #[serde(skip)]
    jets: Vec<Jet2>,
}

/// Inverse metric `(g^{xx}, g^{xy}, g^{yy})` and `√det g = W` of a graph with slopes `(p, s)`.
fn inverse_metric(p: f64, s: f64) -> ([f64; 3], f64) {
    let w2 = 1.0 + p * p + s * s;
    ([(1.0 + s * s) / w2, -p * s / w2, (1.0 + p * p) / w2], w2.sqrt())
}

/// `Δ_ḡ f` from the 2-jets of `u` and `f`: `g^{ij}f_ij − (g^{ij}u_ij / W²) ∇u·∇f`.
fn laplace_beltrami(ju: &Jet2, jf: &Jet2) -> f64 {
    let ([a, b, c], w) = inverse_metric(ju.ux, ju.uy);
    let m = (a * ju.uxx + 2.0 * b * ju.uxy + c * ju.uyy) / (w * w);
    a * jf.uxx + 2.0 * b * jf.uxy + c * jf.uyy - m * (ju.ux * jf.ux + ju.uy * jf.uy)
}

/// Builds the isothermal chart of a rectangular graphical patch.
pub fn isothermal_chart(s: &GraphSurface, opts: &ChartOptions) -> Result<IsothermalChart, Error> {
    let y_half = match s.domain {
        GraphDomain::Rectangle { y_half, .. } => y_half,
        GraphDomain::HalfDisc { .. } => {
            return Err(Error::InvalidInput("isothermal charts need a rectangular patch".into()));
        }
    };
    let stencils = s.stencils();
    let jets = s.jets(&stencils);
    let slope = jets.iter().map(|j| j.ux.hypot(j.uy)).fold(0.0, f64::max);
    if slope > opts.max_slope + 1e-9 {
        return Err(Error::InvalidInput(format!("patch slope {slope:.3} exceeds {}", opts.max_slope)));
    }
    let (ni, nj) = (s.ni, s.nj as i64);
    let h = s.h;
    let node = |i: usize, j: i64| s.grid_node(i, j).expect("rectangle grids are complete");

    // Harmonic q: Dirichlet rows x = 0 and x = X, conormal condition on the sides.
    let n = s.len();
    let mut t = Triplets::new(n);
    let mut rhs = vec![0.0; n];
    for i in 0..=ni {
        for j in -nj..=nj {
            let k = node(i, j);
            if i == 0 || i == ni {
                t.push(k, k, 1.0);
                rhs[k] = if i == ni { 1.0 } else { 0.0 };
                continue;
            }
            let ju = &jets[k];
            let ([a, b, c], w) = inverse_metric(ju.ux, ju.uy);
            if j.abs() == nj {
                // g^{yx} q_x + g^{yy} q_y = 0 with a one-sided q_y.
                let d = -j.signum();
                t.push(k, node(i + 1, j), b / (2.0 * h));
                t.push(k, node(i - 1, j), -b / (2.0 * h));
                let sg = -(d as f64);
                t.push(k, k, sg * c * 3.0 / (2.0 * h));
                t.push(k, node(i, j + d), -sg * c * 4.0 / (2.0 * h));
                t.push(k, node(i, j + 2 * d), sg * c / (2.0 * h));
                continue;
            }
            let m = (a * ju.uxx + 2.0 * b * ju.uxy + c * ju.uyy) / (w * w);
            let (dx, dy) = (m * ju.ux, m * ju.uy);
            let h2 = h * h;
            t.push(k, k, -2.0 * a / h2 - 2.0 * c / h2);
            t.push(k, node(i + 1, j), a / h2 - dx / (2.0 * h));
            t.push(k, node(i - 1, j), a / h2 + dx / (2.0 * h));
            t.push(k, node(i, j + 1), c / h2 - dy / (2.0 * h));
            t.push(k, node(i, j - 1), c / h2 + dy / (2.0 * h));
            let e = 2.0 * b / (4.0 * h2);
            t.push(k, node(i + 1, j + 1), e);
            t.push(k, node(i - 1, j - 1), e);
            t.push(k, node(i + 1, j - 1), -e);
            t.push(k, node(i - 1, j + 1), -e);
        }
    }
    let mut q = t.solve(&rhs)?;
    let mut grad_q: Vec<[f64; 2]> = stencils
        .iter()
        .map(|st| {
            let jq = st.apply(&q);
            [jq.ux, jq.uy]
        })
        .collect();
    // ⋆dq: w_x = −W (g^{yx} q_x + g^{yy} q_y), w_y = W (g^{xx} q_x + g^{xy} q_y).
    let mut grad_w: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let ([a, b, c], w) = inverse_metric(jets[k].ux, jets[k].uy);
            let [qx, qy] = grad_q[k];
            [-w * (b * qx + c * qy), w * (a * qx + b * qy)]
        })
        .collect();
    // Integrate ⋆dq: first along x = 0 from the origin, then along each column.
    let mut w = vec![0.0; n];
    for j in 1..=nj {
        for d in [1i64, -1] {
            let (a, b) = (node(0, d * (j - 1)), node(0, d * j));
            w[b] = w[a] + d as f64 * 0.5 * h * (grad_w[a][1] + grad_w[b][1]);
        }
    }
    for j in -nj..=nj {
        for i in 1..=ni {
            let (a, b) = (node(i - 1, j), node(i, j));
            w[b] = w[a] + 0.5 * h * (grad_w[a][0] + grad_w[b][0]);
        }
    }
    let scale = match opts.normalization {
        ChartNormalization::FarEdge => 1.0,
        ChartNormalization::ConjugateSpan => {
            let span = w[node(0, nj)] - w[node(0, -nj)];
            if !(span > 0.0) {
                return Err(Error::DegenerateCell(0));
            }
            2.0 * y_half / span
        }
    };
    if scale != 1.0 {
        for v in q.iter_mut().chain(w.iter_mut()) {
            *v *= scale;
        }
        for g in grad_q.iter_mut().chain(grad_w.iter_mut()) {
            g[0] *= scale;
            g[1] *= scale;
        }
    }
    // Orientation of every image triangle.
    for (ti, tri) in s.triangles.iter().enumerate() {
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| [q[v], w[v]]).collect();
        let area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if !(area > 0.0) {
            return Err(Error::DegenerateCell(ti));
        }
    }
    let mut phi = vec![0.0; n];
    let (mut gmin, mut gmax, mut cr) = (f64::INFINITY, 0.0f64, 0.0f64);
    for k in 0..n {
        let ([a, b, c], _) = inverse_metric(jets[k].ux, jets[k].uy);
        let ip = |f: [f64; 2], g: [f64; 2]| a * f[0] * g[0] + b * (f[0] * g[1] + f[1] * g[0]) + c * f[1] * g[1];
        let gq2 = ip(grad_q[k], grad_q[k]);
        if !(gq2 > 0.0) {
            return Err(Error::DegenerateCell(k));
        }
        phi[k] = -0.5 * gq2.ln();
        let gq = gq2.sqrt();
        gmin = gmin.min(gq);
        gmax = gmax.max(gq);
        let jw = stencils[k].apply(&w);
        let gw = [jw.ux, jw.uy];
        let d = ip(grad_q[k], gw).abs() + (gq - ip(gw, gw).sqrt()).abs();
        if away_from_edges(s, k) {
            cr = cr.max(d / gq);
        }
    }
    let mut chart = IsothermalChart {
        surface: s.clone(),
        normalization: opts.normalization,
        scale,
        q,
        w,
        phi,
        grad_q,
        grad_w,
        grad_q_min: gmin,
        grad_q_max: gmax,
        c: gmax.max(1.0 / gmin),
        cauchy_riemann_defect: cr,
        grid: None,
        stencils,
        jets,
    };
    if opts.resample {
        chart.grid = Some(chart.resample(h, opts.half_width)?);
    }
    Ok(chart)
}

/// Indices and weights of the 4-point Lagrange stencil for coordinate `t`
/// (in grid units) on nodes `0..=n`.
fn lagrange4(t: f64, n: usize) -> (usize, [f64; 4]) {
    let base = (t.floor() as i64 - 1).clamp(0, n as i64 - 3) as usize;
    let mut wts = [0.0; 4];
    for (a, wa) in wts.iter_mut().enumerate() {
        let mut l = 1.0;
        for b in 0..4 {
            if b != a {
                l *= (t - (base + b) as f64) / (a as f64 - b as f64);
            }
        }
        *wa = l;
    }
    (base, wts)
}

impl IsothermalChart {
    /// 2-jets of `u` at the patch samples.
    pub fn jets(&self) -> &[Jet2] {
        &self.jets
    }

    fn ensure_cache(&self) -> Result<(), Error> {
        if self.jets.len() != self.surface.len() {
            return Err(Error::InvalidInput("chart caches missing (deserialized chart); rebuild it".into()));
        }
        Ok(())
    }

    /// Tensor cubic interpolation of a nodal field at `(x, y)`.
    fn interp(&self, f: &[f64], x: f64, y: f64) -> f64 {
        let s = &self.surface;
        let (bi, wi) = lagrange4(x / s.h, s.ni);
        let (bj, wj) = lagrange4(y / s.h + s.nj as f64, 2 * s.nj);
        let mut v = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let k = s.grid_node(bi + a, (bj + b) as i64 - s.nj as i64).unwrap();
                v += wi[a] * wj[b] * f[k];
            }
        }
        v
    }

    /// Gradient components `(q_x, q_y, w_x, w_y)` as separate nodal fields.
    fn gradient_fields(&self) -> [Vec<f64>; 4] {
        [
            self.grad_q.iter().map(|g| g[0]).collect(),
            self.grad_q.iter().map(|g| g[1]).collect(),
            self.grad_w.iter().map(|g| g[0]).collect(),
            self.grad_w.iter().map(|g| g[1]).collect(),
        ]
    }

    /// Planar point `(x, y)` with chart coordinates `(q, w)`, by Newton's
    /// method from `guess`.
    pub fn locate(&self, q: f64, w: f64, guess: [f64; 2]) -> Result<[f64; 2], Error> {
        self.locate_with(&self.gradient_fields(), q, w, guess)
    }

    fn locate_with(&self, grads: &[Vec<f64>; 4], q: f64, w: f64, guess: [f64; 2]) -> Result<[f64; 2], Error> {
        let (x_max, y_half) = match self.surface.domain {
            GraphDomain::Rectangle { x_max, y_half } => (x_max, y_half),
            GraphDomain::HalfDisc { .. } => unreachable!(),
        };
        let [gqx, gqy, gwx, gwy] = grads;
        let [mut x, mut y] = guess;
        for _ in 0..100 {
            let fq = self.interp(&self.q, x, y) - q;
            let fw = self.interp(&self.w, x, y) - w;
            if fq.abs().max(fw.abs()) < 1e-13 {
                return Ok([x, y]);
            }
            let (a, b) = (self.interp(gqx, x, y), self.interp(gqy, x, y));
            let (c, d) = (self.interp(gwx, x, y), self.interp(gwy, x, y));
            let det = a * d - b * c;
            if !(det.abs() > 1e-14) {
                break;
            }
            x = (x - (d * fq - b * fw) / det).clamp(0.0, x_max);
            y = (y - (-c * fq + a * fw) / det).clamp(-y_half, y_half);
        }
        let res = (self.interp(&self.q, x, y) - q).abs().max((self.interp(&self.w, x, y) - w).abs());
        if res < 1e-9 {
            Ok([x, y])
        } else {
            Err(Error::InvalidInput(format!(
                "chart does not cover the point (q, w) = ({q}, {w}); residual {res:.2e} at ({x}, {y})"
            )))
        }
    }

    fn resample(&self, h: f64, half_width: f64) -> Result<ChartGrid, Error> {
        let nq = (1.0 / h).round() as usize + 1;
        let nw = (2.0 * half_width / h).round() as usize + 1;
        let hq = 1.0 / (nq - 1) as f64;
        let n = self.surface.len();
        // Nodal composite fields expressed in the chart frame.
        let mut d1u = vec![0.0; n];
        let mut d2u = vec![0.0; n];
        let mut d2phi = vec![0.0; n];
        let mut a12_nu = vec![0.0; n];
        let mut a12_abs = vec![0.0; n];
        for k in 0..n {
            let ju = &self.jets[k];
            let jp = self.stencils[k].apply(&self.phi);
            let ([qx, qy], [wx, wy]) = (self.grad_q[k], self.grad_w[k]);
            let det = qx * wy - qy * wx;
            let (xq, yq) = (wy / det, -wx / det);
            let (xw, yw) = (-qy / det, qx / det);
            d1u[k] = ju.ux * xq + ju.uy * yq;
            d2u[k] = ju.ux * xw + ju.uy * yw;
            d2phi[k] = jp.ux * xw + jp.uy * yw;
            let hess = ju.uxx * xq * xw + ju.uxy * (xq * yw + yq * xw) + ju.uyy * yq * yw;
            let w2 = 1.0 + ju.ux * ju.ux + ju.uy * ju.uy;
            a12_nu[k] = hess / w2;
            a12_abs[k] = hess.abs() / w2.sqrt();
        }
        let mut g = ChartGrid { h: hq, nq, nw, half_width, ..Default::default() };
        let total = nq * nw;
        for v in [
            &mut g.x,
            &mut g.y,
            &mut g.u,
            &mut g.phi,
            &mut g.d1u,
            &mut g.d2u,
            &mut g.d2phi,
            &mut g.a12_nu,
            &mut g.a12_abs,
        ] {
            v.resize(total, 0.0);
        }
        let scale_x = match self.surface.domain {
            GraphDomain::Rectangle { x_max, .. } => x_max,
            GraphDomain::HalfDisc { .. } => 1.0,
        };
        let grads = self.gradient_fields();
        let mut row_guess = [0.0, 0.0];
        for i in 0..nq {
            let mut guess = row_guess;
            if i == 0 {
                guess = [0.0, -half_width];
            }
            for j in 0..nw {
                let (qv, wv) = (i as f64 * hq, -half_width + j as f64 * hq);
                if j == 0 && i > 0 {
                    guess = [g.x[g.index(i - 1, 0)] + hq * scale_x, g.y[g.index(i - 1, 0)]];
                }
                let p = self.locate_with(&grads, qv, wv, guess)?;
                guess = p;
                if j == 0 {
                    row_guess = p;
                }
                let k = g.index(i, j);
                g.x[k] = p[0];
                g.y[k] = p[1];
                let f = |v: &[f64]| self.interp(v, p[0], p[1]);
                g.u[k] = f(&self.surface.u);
                g.phi[k] = f(&self.phi);
                g.d1u[k] = f(&d1u);
                g.d2u[k] = f(&d2u);
                g.d2phi[k] = f(&d2phi);
                g.a12_nu[k] = f(&a12_nu);
                g.a12_abs[k] = f(&a12_abs);
            }
        }
        Ok(g)
    }

    fn grid(&self) -> Result<&ChartGrid, Error> {
        self.grid.as_ref().ok_or_else(|| Error::InvalidInput("chart was not resampled onto the chart rectangle".into()))
    }

    /// Largest entrywise gap between `e^{2φ}(∇q∇qᵀ + ∇w∇wᵀ)` and the graph metric.
    pub fn metric_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.surface.len() {
            let (p, s) = (self.jets[k].ux, self.jets[k].uy);
            let g = [1.0 + p * p, p * s, 1.0 + s * s];
            let e = (2.0 * self.phi[k]).exp();
            let ([qx, qy], [wx, wy]) = (self.grad_q[k], self.grad_w[k]);
            let r = [e * (qx * qx + wx * wx), e * (qx * qy + wx * wy), e * (qy * qy + wy * wy)];
            for t in 0..3 {
                worst = worst.max((r[t] - g[t]).abs());
            }
        }
        worst
    }

    /// Writes the resampled chart as CSV with columns `q,w,phi,u`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), Error> {
        let g = self.grid()?;
        writeln!(out, "q,w,phi,u")?;
        for i in 0..g.nq {
            for j in 0..g.nw {
                let k = g.index(i, j);
                writeln!(out, "{},{},{},{}", g.q(i), g.w(j), g.phi[k], g.u[k])?;
            }
        }
        Ok(())
    }
}

/// Composite trapezoid rule on equally spaced samples.
fn trapezoid(v: &[f64], h: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
}

/// Residuals of the Liouville equation for the conformal factor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiouvilleResidual {
    /// Sample indices of the patch at which the residual is evaluated.
    pub samples: Vec<usize>,
    /// `−Δ_ḡφ − (4H̄² − |Ā|²)/4`.
    pub field: Vec<f64>,
    /// `−Δ_ḡφ − (4H̄² − |Ā|²)/2 = −Δ_ḡφ − K̄`.
    pub field_gauss: Vec<f64>,
    pub l1: f64,
    pub l2: f64,
    pub l1_gauss: f64,
    pub l2_gauss: f64,
}

/// Physical margin excluded from field norms near the edges of the patch,
/// where the one-sided derivatives of `φ` lose accuracy.
pub const EDGE_MARGIN: f64 = 0.125;

/// Whether sample `k` of a rectangular patch lies at least [`EDGE_MARGIN`] from its edges.
fn away_from_edges(s: &GraphSurface, k: usize) -> bool {
    let GraphDomain::Rectangle { x_max, y_half } = s.domain else {
        return false;
    };
    let [x, y] = s.xy[k];
    let tol = 1e-12;
    x >= EDGE_MARGIN - tol && x <= x_max - EDGE_MARGIN + tol && y.abs() <= y_half - EDGE_MARGIN + tol
}

/// Liouville residual of a chart over the samples at least [`EDGE_MARGIN`]
/// away from the patch edges, with `dμ̄`-weighted norms.
pub fn liouville_residual(c: &IsothermalChart) -> Result<LiouvilleResidual, Error> {
    c.ensure_cache()?;
    let s = &c.surface;
    let pw = s.planar_weights();
    let mut out = LiouvilleResidual {
        samples: Vec::new(),
        field: Vec::new(),
        field_gauss: Vec::new(),
        l1: 0.0,
        l2: 0.0,
        l1_gauss: 0.0,
        l2_gauss: 0.0,
    };
    for k in 0..s.len() {
        if !away_from_edges(s, k) {
            continue;
        }
        let ju = &c.jets[k];
        let jp = c.stencils[k].apply(&c.phi);
        let lap = laplace_beltrami(ju, &jp);
        let w2 = 1.0 + ju.ux * ju.ux + ju.uy * ju.uy;
        let kbar = (ju.uxx * ju.uyy - ju.uxy * ju.uxy) / (w2 * w2);
        // 4H̄² − |Ā|² = 2K̄.
        let lit = -lap - 2.0 * kbar / 4.0;
        let gauss = -lap - kbar;
        let dmu = pw[k] * w2.sqrt();
        out.samples.push(k);
        out.field.push(lit);
        out.field_gauss.push(gauss);
        out.l1 += lit.abs() * dmu;
        out.l2 += lit * lit * dmu;
        out.l1_gauss += gauss.abs() * dmu;
        out.l2_gauss += gauss * gauss * dmu;
    }
    out.l2 = out.l2.sqrt();
    out.l2_gauss = out.l2_gauss.sqrt();
    Ok(out)
}

/// Observed convergence orders `log₂(e_k / e_{k+1})` of a sequence measured
/// under successive halving of `h`.
pub fn refinement_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Both sides of the integrated mixed-derivative identity along `w = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxIdentity {
    /// `(e^{−φ}∂₂u)(1,0) − (e^{−φ}∂₂u)(0,0)`.
    pub lhs: f64,
    /// `∫₀¹ e^{−φ} Ā₁₂ ∇_ν u dq`.
    pub rhs_integral_1: f64,
    /// `∫₀¹ e^{−φ} ∂₂φ ∂₁u dq`.
    pub rhs_integral_2: f64,
    pub defect: f64,
}

/// Evaluates the flux identity on the segment `0 ≤ q ≤ 1, w = 0` of a resampled chart.
pub fn flux_identity(c: &IsothermalChart) -> Result<FluxIdentity, Error> {
    let g = c.grid()?;
    let j = g.center();
    if g.w(j).abs() > 1e-12 {
        return Err(Error::InvalidInput("chart grid has no w = 0 column".into()));
    }
    let col = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..g.nq).map(|i| f(g.index(i, j))).collect() };
    let e = |k: usize| (-g.phi[k]).exp();
    let flux = col(&|k| e(k) * g.d2u[k]);
    let i1 = trapezoid(&col(&|k| e(k) * g.a12_nu[k]), g.h);
    let i2 = trapezoid(&col(&|k| e(k) * g.d2phi[k] * g.d1u[k]), g.h);
    let lhs = flux[g.nq - 1] - flux[0];
    Ok(FluxIdentity { lhs, rhs_integral_1: i1, rhs_integral_2: i2, defect: (lhs - i1 - i2).abs() })
}

/// Discrete Hardy inequality on the chart rectangle for `f = ∂₁u − ∂₁u(0, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyCheck {
    /// `∫∫ |f|²/q² dq dw`.
    pub lhs: f64,
    /// `∫∫ |∂²u|² dq dw`.
    pub rhs: f64,
    /// `lhs ≤ 10 · rhs`.
    pub holds: bool,
}

/// Second-order finite-difference derivative of equally spaced samples.
fn fd_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

pub fn hardy_check(c: &IsothermalChart) -> Result<HardyCheck, Error> {
    let g = c.grid()?;
    let (nq, nw, h) = (g.nq, g.nw, g.h);
    let along_q =
        |f: &[f64], j: usize| -> Vec<f64> { fd_derivative(&(0..nq).map(|i| f[g.index(i, j)]).collect::<Vec<_>>(), h) };
    let along_w =
        |f: &[f64], i: usize| -> Vec<f64> { fd_derivative(&(0..nw).map(|j| f[g.index(i, j)]).collect::<Vec<_>>(), h) };
    // u_q on the grid, then its derivatives.
    let mut uq = vec![0.0; nq * nw];
    let mut uqq = vec![0.0; nq * nw];
    let mut uw = vec![0.0; nq * nw];
    for j in 0..nw {
        let d = along_q(&g.u, j);
        for i in 0..nq {
            uq[g.index(i, j)] = d[i];
        }
    }
    for j in 0..nw {
        let d = along_q(&uq, j);
        for i in 0..nq {
            uqq[g.index(i, j)] = d[i];
        }
    }
    for i in 0..nq {
        let d = along_w(&g.u, i);
        for j in 0..nw {
            uw[g.index(i, j)] = d[j];
        }
    }
    let mut uqw = vec![0.0; nq * nw];
    let mut uww = vec![0.0; nq * nw];
    for i in 0..nq {
        let a = along_w(&uq, i);
        let b = along_w(&uw, i);
        for j in 0..nw {
            uqw[g.index(i, j)] = a[j];
            uww[g.index(i, j)] = b[j];
        }
    }
    let weight = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..nq {
        for j in 0..nw {
            let k = g.index(i, j);
            let wt = weight(i, nq) * weight(j, nw) * h * h;
            let ratio = if i == 0 { uqq[k] } else { (uq[k] - uq[g.index(0, j)]) / g.q(i) };
            lhs += wt * ratio * ratio;
            rhs += wt * (uqq[k] * uqq[k] + 2.0 * uqw[k] * uqw[k] + uww[k] * uww[k]);
        }
    }
    Ok(HardyCheck { lhs, rhs, holds: lhs <= 10.0 * rhs })
}

/// Line-integral diagnostics on the segment `0 ≤ q ≤ 1, w = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineIntegralReport {
    /// `∫|Ā₁₂| e^{−φ} dq`.
    pub abar12_integral: f64,
    /// `∫ e^{−φ} ∂₂φ ∂₁u dq`.
    pub phi_term_integral: f64,
    pub sqrt_weighted_energy: f64,
    pub sqrt_energy: f64,
    /// `sup q·f^p·|Å̄₁₂| / √(local weighted energy)` over the segment, `None`
    /// when every quotient is 0/0.
    pub ratio: Option<f64>,
    /// `"bounded-constant diagnostic"` or `"vacuous"`.
    pub ratio_status: String,
    pub hardy: HardyCheck,
}

/// Local weighted energies at or below this level count as zero, making the
/// corresponding quotient 0/0.
pub const VACUOUS_ENERGY: f64 = 1e-8;

/// Hyperbolic radius of the intrinsic balls used by the ratio diagnostic.
pub const DIAGNOSTIC_BALL_RADIUS: f64 = 2.0;

pub fn line_integral_diagnostics(c: &IsothermalChart, poles: &PoleSet, p: f64) -> Result<LineIntegralReport, Error> {
    c.ensure_cache()?;
    let g = c.grid()?;
    let mesh = c.surface.to_mesh();
    poles.validate(&mesh)?;
    let shape = shape_hyperbolic(shape_euclidean(&Surface::Graph(c.surface.clone()))?);
    let weight = WeightField::new(&mesh, poles)?;
    let e = trace_free_energy(&shape);
    let ep = weighted_energy_from(&shape, &weight, p)?;
    let j = g.center();
    let col = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..g.nq).map(|i| f(g.index(i, j))).collect() };
    let ex = |k: usize| (-g.phi[k]).exp();
    let a_int = trapezoid(&col(&|k| g.a12_abs[k] * ex(k)), g.h);
    let p_int = trapezoid(&col(&|k| ex(k) * g.d2phi[k] * g.d1u[k]), g.h);
    let adj = mesh.adjacency();
    let mut ratio: Option<f64> = None;
    for i in 1..g.nq {
        let k = g.index(i, j);
        let (x, y, z) = (g.x[k], g.y[k], g.u[k]);
        if !(x > 0.0) {
            continue;
        }
        let pole_w = {
            let v = mesh.nearest_vertex(&Point3::new(x, y, z));
            weight.f[v]
        };
        let num = g.q(i) * pole_w.powf(p) * g.a12_abs[k];
        let rho = DIAGNOSTIC_BALL_RADIUS;
        let centre = Point3::new(x * rho.cosh(), y, z);
        let local = local_energy_with_adjacency(
            &shape,
            &mesh,
            &adj,
            &centre,
            x * rho.sinh(),
            Some(Weighting { weight: &weight, p }),
        );
        if local > VACUOUS_ENERGY {
            let r = num / local.sqrt();
            ratio = Some(ratio.map_or(r, |m: f64| m.max(r)));
        }
    }
    let status = if ratio.is_some() { "bounded-constant diagnostic" } else { "vacuous" };
    Ok(LineIntegralReport {
        abar12_integral: a_int,
        phi_term_integral: p_int,
        sqrt_weighted_energy: ep.sqrt(),
        sqrt_energy: e.sqrt(),
        ratio,
        ratio_status: status.into(),
        hardy: hardy_check(c)?,
    })
}

/// Minkowski product on `R^{1,4}` with signature `(−, +, +, +, +)`.
pub fn minkowski(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3] + a[4] * b[4]
}

/// Conformal Gauss map samples and the energy identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussMap {
    /// `Φ` per vertex.
    pub phi: Vec<[f64; 5]>,
    /// `max |⟨Φ,Φ⟩ − 1|`.
    pub minkowski_defect: f64,
    /// `∫|dΦ|² dμ̄`.
    pub dirichlet_energy: f64,
    /// `∫|Å̄|² dμ̄`.
    pub trace_free_energy: f64,
    /// Relative gap between `½∫|Å̄|²` and `∫|dΦ|²`.
    pub defect: f64,
    /// Relative gap between `∫|Å̄|²` and `∫|dΦ|²`.
    pub defect_full: f64,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m < 1e-12 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// `Φ = ν̂ − H̄ Ŷ` with the light-cone lift `Ŷ = ((1+|r|²)/2, r, (1−|r|²)/2)`
/// and the normal lift `ν̂ = (⟨r,ν̄⟩, ν̄, −⟨r,ν̄⟩)`; the Dirichlet energy uses
/// cotangent weights with the Minkowski product.
pub fn conformal_gauss_map(m: &TriMesh) -> Result<GaussMap, Error> {
    let shape = mesh_shape_full(m)?;
    let phi: Vec<[f64; 5]> = shape
        .samples
        .iter()
        .map(|s| {
            let r = s.position.to_array();
            let n = s.normal;
            let rr = dot3(r, r);
            let rn = dot3(r, n);
            let h = s.mean_curvature;
            [rn - h * 0.5 * (1.0 + rr), n[0] - h * r[0], n[1] - h * r[1], n[2] - h * r[2], -rn - h * 0.5 * (1.0 - rr)]
        })
        .collect();
    let minkowski_defect = phi.iter().map(|f| (minkowski(f, f) - 1.0).abs()).fold(0.0, f64::max);
    let mut dirichlet = 0.0;
    for tri in &m.triangles {
        let p: Vec<[f64; 3]> = tri.iter().map(|&v| m.position(v)).collect();
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            // Cotangent of the angle at vertex a, weighting the opposite edge (b, c).
            let (u, v) = (sub(p[b], p[a]), sub(p[c], p[a]));
            let cr = cross(u, v);
            let sn = dot3(cr, cr).sqrt();
            if sn <= 0.0 {
                continue;
            }
            let cot = dot3(u, v) / sn;
            let d: [f64; 5] = std::array::from_fn(|i| phi[tri[b]][i] - phi[tri[c]][i]);
            dirichlet += 0.5 * cot * minkowski(&d, &d);
        }
    }
    let total: f64 = shape.samples.iter().map(|s| s.trace_free_bar_sq * s.area).sum();
    Ok(GaussMap {
        minkowski_defect,
        dirichlet_energy: dirichlet,
        trace_free_energy: total,
        defect: relative_gap(0.5 * total, dirichlet),
        defect_full: relative_gap(total, dirichlet),
        phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::GraphDomain;

    fn patch(h: f64, f: impl Fn(f64, f64) -> f64) -> GraphSurface {
        let mut g = GraphSurface::new(GraphDomain::Rectangle { x_max: 1.0, y_half: 1.25 }, h).unwrap();
        g.set_heights(f);
        g
    }

    #[test]
    fn flat_patch_is_identity_chart() {
        let c = isothermal_chart(&patch(1.0 / 16.0, |_, _| 0.0), &ChartOptions::default()).unwrap();
        for k in 0..c.q.len() {
            let [x, y] = c.surface.xy[k];
            assert!((c.q[k] - x).abs() < 1e-9 && (c.w[k] - y).abs() < 1e-9 && c.phi[k].abs() < 1e-9);
        }
        let f = flux_identity(&c).unwrap();
        assert!(f.lhs.abs() + f.rhs_integral_1.abs() + f.rhs_integral_2.abs() + f.defect < 1e-12);
        let l = liouville_residual(&c).unwrap();
        assert!(l.l2 < 1e-9 && l.l2_gauss < 1e-9);
    }

    #[test]
    fn tilted_plane_conformal_factor() {
        for &a in &[0.1, 0.2] {
            let p = patch(1.0 / 16.0, move |_, y| a * y);
            let c = isothermal_chart(&p, &ChartOptions::default()).unwrap();
            assert!(c.phi.iter().all(|v| v.abs() < 1e-8));
            let opts = ChartOptions {
                normalization: ChartNormalization::ConjugateSpan,
                resample: false,
                ..Default::default()
            };
            let c = isothermal_chart(&p, &opts).unwrap();
            let target = 0.5 * (1.0 + a * a).ln();
            assert!(c.phi.iter().all(|v| (v - target).abs() < 1e-8), "a={a}");
            assert!(c.metric_defect() < 1e-12);
            let f = flux_identity(&isothermal_chart(&p, &ChartOptions::default()).unwrap()).unwrap();
            assert!(f.lhs.abs() < 1e-8 && f.rhs_integral_1.abs() < 1e-8 && f.rhs_integral_2.abs() < 1e-8);
        }
    }

    fn sphere_patch(h: f64) -> GraphSurface {
        let r = 10.0;
        patch(h, move |x, y| (r * r - x * x - y * y).sqrt() - r)
    }

    #[test]
    fn hemisphere_patch_chart_converges() {
        let d: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
            .iter()
            .map(|&h| isothermal_chart(&sphere_patch(h), &ChartOptions::default()).unwrap().cauchy_riemann_defect)
            .collect();
        assert!(d[0] / d[1] > 3.0 && d[1] / d[2] > 3.0, "{d:?}");
    }

    #[test]
    fn hemisphere_patch_diagnostics_vacuous() {
        let c = isothermal_chart(&sphere_patch(1.0 / 32.0), &ChartOptions::default()).unwrap();
        assert!(c.c < 2.0);
        let pole = c.surface.grid_node(16, 0).unwrap();
        let r = line_integral_diagnostics(&c, &PoleSet::new(vec![pole]), 1.5).unwrap();
        assert!(r.abar12_integral < 1e-6 && r.phi_term_integral.abs() < 1e-9, "{r:?}");
        assert_eq!(r.ratio, None);
        assert_eq!(r.ratio_status, "vacuous");
        assert!(r.hardy.holds);
    }

    #[test]
    fn half_disc_is_rejected() {
        let g = GraphSurface::new(GraphDomain::HalfDisc { radius: 1.0 }, 0.125).unwrap();
        assert!(isothermal_chart(&g, &ChartOptions::default()).is_err());
    }

    #[test]
    fn steep_patch_is_rejected() {
        assert!(isothermal_chart(&patch(0.125, |x, _| x), &ChartOptions::default()).is_err());
    }

    #[test]
    fn sphere_gauss_map_is_constant() {
        let s = crate::surface::RevolutionSurface::hemisphere(num_complex::Complex64::new(0.3, 0.0), 1.0, 1.0 / 32.0)
            .unwrap();
        let g = conformal_gauss_map(&s.to_mesh().unwrap()).unwrap();
        assert!(g.minkowski_defect < 1e-9);
        assert!(
            g.dirichlet_energy.abs() < 1e-3 && g.trace_free_energy < 1e-3,
            "{} {}",
            g.dirichlet_energy,
            g.trace_free_energy
        );
    }

    #[test]
    fn plane_gauss_map() {
        let g = conformal_gauss_map(&patch(0.125, |_, _| 0.0).to_mesh()).unwrap();
        assert!(g.minkowski_defect < 1e-12 && g.dirichlet_energy.abs() < 1e-12 && g.trace_free_energy < 1e-12);
    }
}
