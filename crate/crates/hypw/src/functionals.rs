//! Scalar functionals: Willmore energy, weighted energy `E_p`, localized
//! energies, renormalized area and the doubling identity.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::hyp3::Point3;
use crate::surface::{intrinsic_distance, mesh_shape_full, ShapeField, TriMesh};
use crate::Error;

/// Marked interior vertices anchoring the weight `f = dist(·, O) + 5`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoleSet {
    pub vertices: Vec<usize>,
}

impl PoleSet {
    pub fn new(vertices: Vec<usize>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Checks that the poles are valid interior vertices of `m`.
    pub fn validate(&self, m: &TriMesh) -> Result<(), Error> {
        if self.vertices.is_empty() {
            return Err(Error::InvalidInput("pole set is empty".into()));
        }
        for &v in &self.vertices {
            if v >= m.n_vertices() || !(m.vertices[v].x > 0.0) {
                return Err(Error::InvalidInput(format!("pole {v} is not an interior vertex")));
            }
        }
        Ok(())
    }
}

/// Per-vertex weight `f = dist(·, O) + 5` with hyperbolic edge-graph distances.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightField {
    pub f: Vec<f64>,
}

impl WeightField {
    pub fn new(m: &TriMesh, poles: &PoleSet) -> Result<Self, Error> {
        poles.validate(m)?;
        let d = intrinsic_distance(m, &poles.vertices)?;
        Ok(Self { f: d.into_iter().map(|d| d + 5.0).collect() })
    }
}

/// Thresholds of the divergence sentinel of [`willmore_energy_with`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnergyOptions {
    /// Growth ratio between successive halvings of the truncation height that
    /// counts as `1/ε` growth.
    pub growth_ratio: f64,
    /// Energies below this never trigger the growth test (discretization noise).
    pub noise_floor: f64,
    /// Absolute cap on any truncated energy.
    pub cap: f64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self { growth_ratio: 1.5, noise_floor: 1e-2, cap: 1e8 }
    }
}

/// Willmore energy `∫|A|² dμ` of a mesh (boundary-at-infinity vertices excluded),
/// with the default divergence sentinel.
pub fn willmore_energy(m: &TriMesh) -> Result<f64, Error> {
    willmore_energy_with(m, &EnergyOptions::default())
}

pub fn willmore_energy_with(m: &TriMesh, opts: &EnergyOptions) -> Result<f64, Error> {
    let f = mesh_shape_full(m)?;
    energy_from_shape(&f, opts)
}

/// `∫|A|² dμ` from an already computed shape field, with the divergence sentinel.
pub fn energy_from_shape(f: &ShapeField, opts: &EnergyOptions) -> Result<f64, Error> {
    let xmin = f.samples.iter().filter(|s| s.hyperbolic.is_some()).fold(f64::INFINITY, |a, s| a.min(s.position.x));
    if !xmin.is_finite() {
        return Ok(0.0);
    }
    let levels: Vec<f64> = (0..4).map(|k| xmin * 2f64.powi(3 - k)).collect();
    let trunc: Vec<(f64, f64)> = levels.iter().map(|&e| (e, truncated_energy(f, e))).collect();
    let total = truncated_energy(f, 0.0);
    let mut streak = 0;
    let mut fired = false;
    for w in trunc.windows(2) {
        if w[1].1 > opts.noise_floor && w[1].1 > opts.growth_ratio * w[0].1 {
            streak += 1;
            fired |= streak >= 2;
        } else {
            streak = 0;
        }
    }
    if fired || total > opts.cap || !total.is_finite() {
        return Err(Error::DivergentEnergy(trunc));
    }
    Ok(total)
}

/// `∫_{x ≥ ε} |A|² dμ`, nondecreasing as `ε` decreases.
pub fn truncated_energy(f: &ShapeField, eps: f64) -> f64 {
    f.samples
        .iter()
        .filter(|s| !s.boundary && s.position.x >= eps)
        .filter_map(|s| s.hyperbolic)
        .map(|h| h.a_sq * h.area)
        .sum()
}

/// `∫|Å|² dμ = ∫|Å̄|² dμ̄` over non-boundary samples.
pub fn trace_free_energy(f: &ShapeField) -> f64 {
    f.samples.iter().filter(|s| !s.boundary).map(|s| s.trace_free_bar_sq * s.area).sum()
}

/// Weighted energy `E_p = ∫|Å|² f^{2p} dμ`, `p > 1`.
pub fn weighted_energy(m: &TriMesh, poles: &PoleSet, p: f64) -> Result<f64, Error> {
    let f = mesh_shape_full(m)?;
    let w = WeightField::new(m, poles)?;
    weighted_energy_from(&f, &w, p)
}

pub fn weighted_energy_from(f: &ShapeField, w: &WeightField, p: f64) -> Result<f64, Error> {
    if !(p > 1.0) {
        return Err(Error::InvalidInput(format!("weighted energy needs p > 1, got {p}")));
    }
    Ok(f.samples
        .iter()
        .zip(&w.f)
        .filter(|(s, fv)| !s.boundary && fv.is_finite())
        .map(|(s, fv)| s.trace_free_bar_sq * s.area * fv.powf(2.0 * p))
        .sum())
}

/// Weight and exponent for a weighted localized energy.
#[derive(Clone, Copy, Debug)]
pub struct Weighting<'a> {
    pub weight: &'a WeightField,
    pub p: f64,
}

/// Vertices of the path component of `Y ∩ B(P, R)` containing the vertex
/// nearest `P` (empty when that vertex lies outside the ball).
pub fn half_ball_component(m: &TriMesh, adj: &[Vec<usize>], p: &Point3, radius: f64) -> Vec<usize> {
    if m.n_vertices() == 0 {
        return Vec::new();
    }
    let start = m.nearest_vertex(p);
    let inside = |v: usize| m.vertices[v].euclidean_distance(p) < radius;
    if !inside(start) {
        return Vec::new();
    }
    let mut seen = vec![false; m.n_vertices()];
    seen[start] = true;
    let mut out = vec![start];
    let mut q = VecDeque::from([start]);
    while let Some(u) = q.pop_front() {
        for &w in &adj[u] {
            if !seen[w] && inside(w) {
                seen[w] = true;
                out.push(w);
                q.push_back(w);
            }
        }
    }
    out
}

/// Localized energy over the path component of `Y ∩ B(P,R)`: `∫|A|² dμ`
/// unweighted, or `∫|Å|² f^{2p} dμ` with a weighting.  Returns 0 (and logs a
/// warning to stderr) when no vertex of the component lies in the ball.
pub fn local_energy(f: &ShapeField, m: &TriMesh, p: &Point3, radius: f64, weighting: Option<Weighting>) -> f64 {
    let adj = m.adjacency();
    local_energy_with_adjacency(f, m, &adj, p, radius, weighting)
}

pub fn local_energy_with_adjacency(
    f: &ShapeField,
    m: &TriMesh,
    adj: &[Vec<usize>],
    p: &Point3,
    radius: f64,
    weighting: Option<Weighting>,
) -> f64 {
    let comp = half_ball_component(m, adj, p, radius);
    if comp.is_empty() {
        eprintln!("warning: no surface sample in B({:?}, {radius})", p.to_array());
        return 0.0;
    }
    comp.iter()
        .map(|&v| {
            let s = &f.samples[v];
            match (s.boundary, s.hyperbolic, weighting) {
                (true, _, _) | (_, None, _) => 0.0,
                (false, Some(h), None) => h.a_sq * h.area,
                (false, Some(_), Some(w)) => {
                    let fv = w.weight.f[v];
                    if fv.is_finite() {
                        s.trace_free_bar_sq * s.area * fv.powf(2.0 * w.p)
                    } else {
                        0.0
                    }
                }
            }
        })
        .sum()
}

/// Least-squares fit `Area(x ≥ ε) ≈ L/ε + RenA`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenaFit {
    #[serde(rename = "L")]
    pub l_coeff: f64,
    #[serde(rename = "const")]
    pub rena: f64,
    /// Root-mean-square misfit of the truncated areas.
    pub residual: f64,
    /// `(ε, Area(x ≥ ε))` pairs used in the fit.
    pub samples: Vec<(f64, f64)>,
    /// Set when `residual` exceeds the threshold.
    pub flagged: Option<String>,
}

/// Default residual threshold above which a fit is flagged.
pub const RENA_RESIDUAL_THRESHOLD: f64 = 0.05;

pub fn renormalized_area(m: &TriMesh, epsilons: &[f64]) -> Result<RenaFit, Error> {
    if epsilons.len() < 4 {
        return Err(Error::InvalidInput("renormalized area needs at least 4 truncation levels".into()));
    }
    if epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("truncation levels must be positive".into()));
    }
    let samples: Vec<(f64, f64)> = epsilons.iter().map(|&e| (e, m.hyperbolic_area_above(e))).collect();
    Ok(fit_rena(samples))
}

/// Two-parameter least squares on `(ε, area)` pairs.
pub fn fit_rena(samples: Vec<(f64, f64)>) -> RenaFit {
    let n = samples.len() as f64;
    let (mut su, mut suu, mut sa, mut sua) = (0.0, 0.0, 0.0, 0.0);
    for &(e, a) in &samples {
        let u = 1.0 / e;
        su += u;
        suu += u * u;
        sa += a;
        sua += u * a;
    }
    let det = n * suu - su * su;
    let l = (n * sua - su * sa) / det;
    let c = (sa - l * su) / n;
    let residual = (samples.iter().map(|&(e, a)| (a - l / e - c).powi(2)).sum::<f64>() / n).sqrt();
    let flagged =
        (residual > RENA_RESIDUAL_THRESHOLD).then(|| "expansion not yet asymptotic; refine eps list".to_string());
    RenaFit { l_coeff: l, rena: c, residual, samples, flagged }
}

/// Predicted renormalized area `−2πχ − ½∫|Å|² dμ` of a minimal surface.
pub fn rena_prediction(chi: i32, trace_free_energy: f64) -> f64 {
    -2.0 * std::f64::consts::PI * chi as f64 - 0.5 * trace_free_energy
}

/// Both sides of `∫|Ā|² dμ̄ = ∫|Å̄|² dμ̄ + 4πχ` as stated, with `|Å̄|² = |Ā|² − 2H̄²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Doubling {
    pub lhs: f64,
    pub rhs: f64,
    /// `∫|Å̄|² dμ̄`.
    pub trace_free: f64,
    /// `∫K̄ dμ̄`, which is `2πχ` for a surface meeting the boundary orthogonally.
    pub gauss: f64,
    /// `2∫|Å̄|² dμ̄ + 4πχ`, the right-hand side that Gauss–Bonnet on the doubled
    /// surface gives with this normalization of `|Å̄|²`.
    pub rhs_gauss_bonnet: f64,
    pub warning: Option<String>,
}

/// Doubling identity sides over the non-boundary samples.  `vertical` is the
/// caller's verticality verdict; when false a warning is attached.
pub fn doubling_identity(f: &ShapeField, chi: i32, vertical: bool) -> Doubling {
    let four_pi_chi = 4.0 * std::f64::consts::PI * chi as f64;
    let inner = f.samples.iter().filter(|s| !s.boundary);
    let (mut lhs, mut tf, mut gauss) = (0.0, 0.0, 0.0);
    for s in inner {
        lhs += s.a_bar_sq * s.area;
        tf += s.trace_free_bar_sq * s.area;
        gauss += s.gauss_curvature * s.area;
    }
    Doubling {
        lhs,
        rhs: tf + four_pi_chi,
        trace_free: tf,
        gauss,
        rhs_gauss_bonnet: 2.0 * tf + four_pi_chi,
        warning: (!vertical).then(|| "surface fails the verticality test at the boundary".to_string()),
    }
}

/// Per-surface summary serialized with fixed field names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `∫|A|² dμ`, `None` when divergent.
    pub energy: Option<f64>,
    pub divergent: bool,
    /// `E_p` keyed by the decimal string of `p`.
    pub energy_weighted: BTreeMap<String, f64>,
    /// Localized energies as `(P, R, value)`.
    pub local: Vec<([f64; 3], f64, f64)>,
    pub rena: Option<RenaFit>,
    pub chi: Option<i32>,
    pub doubling: Option<Doubling>,
}

impl EnergyReport {
    /// Header for [`EnergyReport::csv_row`].
    pub const CSV_HEADER: &'static str = "label,energy,rena_L,rena_const,rena_residual,doubling_lhs,doubling_rhs";

    /// One CSV row (RFC 4180 quoting of the label) for sweep runs.
    pub fn csv_row(&self, label: &str) -> String {
        let num = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.17e}"));
        format!(
            "{},{},{},{},{},{},{}",
            csv_field(label),
            num(self.energy),
            num(self.rena.as_ref().map(|r| r.l_coeff)),
            num(self.rena.as_ref().map(|r| r.rena)),
            num(self.rena.as_ref().map(|r| r.residual)),
            num(self.doubling.as_ref().map(|d| d.lhs)),
            num(self.doubling.as_ref().map(|d| d.rhs)),
        )
    }
}

/// Quotes a CSV field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
