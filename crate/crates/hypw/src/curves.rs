//! Boundary-at-infinity curves: normalization, Lipschitz radius, the reference
//! circle and C⁰/C¹ convergence diagnostics for families of curves.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Error;

/// One or more closed planar curves, each a cyclic list of samples `(y, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub components: Vec<Vec<[f64; 2]>>,
}

/// Position of a sample: `(component, index)`.
pub type SampleId = (usize, usize);

impl BoundaryCurve {
    /// Validates closedness (no repeated end point), sample counts and finiteness.
    pub fn new(components: Vec<Vec<[f64; 2]>>) -> Result<Self, Error> {
        if components.is_empty() {
            return Err(Error::InvalidInput("curve has no components".into()));
        }
        for (c, comp) in components.iter().enumerate() {
            if comp.len() < 5 {
                return Err(Error::InvalidInput(format!("component {c} needs at least 5 samples")));
            }
            if comp.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("component {c} has non-finite samples")));
            }
            for i in 0..comp.len() {
                let j = (i + 1) % comp.len();
                if comp[i] == comp[j] {
                    return Err(Error::InvalidInput(format!("component {c} repeats sample {i}")));
                }
            }
        }
        Ok(Self { components })
    }

    /// Circle of radius `r` about `center` with `n` samples, counter-clockwise.
    pub fn circle(center: [f64; 2], r: f64, n: usize) -> Self {
        let pts = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                [center[0] + r * t.cos(), center[1] + r * t.sin()]
            })
            .collect();
        Self { components: vec![pts] }
    }

    /// Closed curve sampled from a parametrization on `[0, 1)`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> [f64; 2]) -> Self {
        Self { components: vec![(0..n).map(|i| f(i as f64 / n as f64)).collect()] }
    }

    pub fn n_samples(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    pub fn ids(&self) -> Vec<SampleId> {
        self.components.iter().enumerate().flat_map(|(c, p)| (0..p.len()).map(move |i| (c, i))).collect()
    }

    pub fn point(&self, id: SampleId) -> [f64; 2] {
        self.components[id.0][id.1]
    }

    /// Derivative with respect to the sample index (4th-order central differences).
    fn velocity(comp: &[[f64; 2]], i: usize) -> [f64; 2] {
        let n = comp.len();
        let at = |k: isize| comp[((i as isize + k).rem_euclid(n as isize)) as usize];
        let (p2, p1, m1, m2) = (at(2), at(1), at(-1), at(-2));
        [(-p2[0] + 8.0 * p1[0] - 8.0 * m1[0] + m2[0]) / 12.0, (-p2[1] + 8.0 * p1[1] - 8.0 * m1[1] + m2[1]) / 12.0]
    }

    /// Unit tangent at a sample (NaN if the derivative vanishes).
    pub fn tangent(&self, id: SampleId) -> [f64; 2] {
        let v = Self::velocity(&self.components[id.0], id.1);
        let l = v[0].hypot(v[1]);
        if l > 0.0 {
            [v[0] / l, v[1] / l]
        } else {
            [f64::NAN, f64::NAN]
        }
    }

    /// Speed `|γ'|` per sample index, used as the arclength density.
    fn speeds(comp: &[[f64; 2]]) -> Vec<f64> {
        (0..comp.len())
            .map(|i| {
                let v = Self::velocity(comp, i);
                v[0].hypot(v[1])
            })
            .collect()
    }

    /// Length of each component (periodic trapezoid rule on the speed).
    pub fn component_lengths(&self) -> Vec<f64> {
        self.components.iter().map(|c| Self::speeds(c).iter().sum()).collect()
    }

    pub fn length(&self) -> f64 {
        self.component_lengths().iter().sum()
    }

    /// Arclength at every sample of each component, starting at 0.
    pub fn arclength_table(&self) -> Vec<Vec<f64>> {
        self.components
            .iter()
            .map(|c| {
                let sp = Self::speeds(c);
                let mut acc = 0.0;
                (0..c.len())
                    .map(|i| {
                        let s = acc;
                        acc += 0.5 * (sp[i] + sp[(i + 1) % c.len()]);
                        s
                    })
                    .collect()
            })
            .collect()
    }

    /// Length-weighted centre of mass.
    pub fn centroid(&self) -> [f64; 2] {
        let (mut cy, mut cz, mut l) = (0.0, 0.0, 0.0);
        for c in &self.components {
            for (p, s) in c.iter().zip(Self::speeds(c)) {
                cy += p[0] * s;
                cz += p[1] * s;
                l += s;
            }
        }
        [cy / l, cz / l]
    }

    /// Mean spacing between consecutive samples.
    pub fn mean_spacing(&self) -> f64 {
        self.length() / self.n_samples() as f64
    }

    /// Applies `p ↦ scale · R(angle) p + shift`.
    pub fn similarity(&self, scale: f64, angle: f64, shift: [f64; 2]) -> Self {
        let (c, s) = (angle.cos(), angle.sin());
        Self {
            components: self
                .components
                .iter()
                .map(|comp| {
                    comp.iter()
                        .map(|p| [scale * (c * p[0] - s * p[1]) + shift[0], scale * (s * p[0] + c * p[1]) + shift[1]])
                        .collect()
                })
                .collect(),
        }
    }
}

/// Normalized total length.
pub const NORMALIZED_LENGTH: f64 = 100.0 * PI;

/// Translates the centre of mass to the origin and scales to total length `100π`.
pub fn normalize_curve(c: &BoundaryCurve) -> Result<BoundaryCurve, Error> {
    let l = c.length();
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidInput("curve has zero length".into()));
    }
    let g = c.centroid();
    let k = NORMALIZED_LENGTH / l;
    Ok(c.similarity(k, 0.0, [0.0, 0.0]).similarity(1.0, 0.0, [-k * g[0], -k * g[1]]))
}

/// Outcome of a Lipschitz-radius evaluation at one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipRadPoint {
    pub value: f64,
    /// Set when the tangent is undefined (value reported as 0).
    pub degenerate: bool,
}

/// `LipRad^ζ_γ(P)`: the largest `M` such that near `P` the curve is the graph
/// of a function `f` over the tangent line on `(−M, M)` with every difference
/// quotient `|f(y) − f(y')|/|y − y'| < ζ`.  The window is grown sample by sample
/// in order of `|y|`, checking every new sample against all earlier ones.
pub fn lip_rad_at(c: &BoundaryCurve, p: SampleId, zeta: f64) -> LipRadPoint {
    let comp = &c.components[p.0];
    let n = comp.len();
    let t = c.tangent(p);
    if !t[0].is_finite() {
        return LipRadPoint { value: 0.0, degenerate: true };
    }
    let nrm = [-t[1], t[0]];
    let o = comp[p.1];
    let local = |k: usize| {
        let d = [comp[k][0] - o[0], comp[k][1] - o[1]];
        (d[0] * t[0] + d[1] * t[1], d[0] * nrm[0] + d[1] * nrm[1])
    };
    // Walk both ways while the tangential coordinate stays monotone.
    let mut fwd = Vec::new();
    let mut last = 0.0;
    let mut graph_limit = f64::INFINITY;
    for k in 1..n {
        let (y, f) = local((p.1 + k) % n);
        if y <= last {
            graph_limit = graph_limit.min(last.max(0.0));
            break;
        }
        fwd.push((y, f));
        last = y;
    }
    let mut bwd = Vec::new();
    let mut last = 0.0;
    for k in 1..n {
        let (y, f) = local((p.1 + n - k) % n);
        if y >= last {
            graph_limit = graph_limit.min((-last).max(0.0));
            break;
        }
        bwd.push((y, f));
        last = y;
    }
    // Merge by |y| (both lists are already sorted by |y|).
    let mut order = Vec::with_capacity(fwd.len() + bwd.len() + 1);
    order.push((0.0, 0.0));
    let (mut i, mut j) = (0, 0);
    while i < fwd.len() || j < bwd.len() {
        let take_f = j >= bwd.len() || (i < fwd.len() && fwd[i].0 <= -bwd[j].0);
        if take_f {
            order.push(fwd[i]);
            i += 1;
        } else {
            order.push(bwd[j]);
            j += 1;
        }
    }
    let mut m = graph_limit;
    for k in 1..order.len() {
        let (yk, fk) = order[k];
        if yk.abs() >= m {
            break;
        }
        let bad = order[..k].iter().any(|&(y, f)| (fk - f).abs() >= zeta * (yk - y).abs());
        if bad {
            m = yk.abs();
            break;
        }
    }
    if !m.is_finite() {
        // The whole component is a graph (cannot happen for closed curves).
        m = order.iter().fold(0.0f64, |a, q| a.max(q.0.abs()));
    }
    LipRadPoint { value: m, degenerate: false }
}

/// Global Lipschitz radius and its per-sample values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipRadReport {
    pub zeta: f64,
    pub values: Vec<f64>,
    pub degenerate: Vec<SampleId>,
    pub global: f64,
    pub argmin: SampleId,
}

/// `LipRad^ζ(γ) = inf_P LipRad^ζ_γ(P)` over all samples.
pub fn lip_rad_global(c: &BoundaryCurve, zeta: f64) -> Result<LipRadReport, Error> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidInput(format!("zeta must be positive, got {zeta}")));
    }
    let ids = c.ids();
    let pts: Vec<LipRadPoint> = ids.par_iter().map(|&id| lip_rad_at(c, id, zeta)).collect();
    let (mut global, mut argmin) = (f64::INFINITY, ids[0]);
    for (k, p) in pts.iter().enumerate() {
        if p.value < global {
            global = p.value;
            argmin = ids[k];
        }
    }
    Ok(LipRadReport {
        zeta,
        values: pts.iter().map(|p| p.value).collect(),
        degenerate: ids.iter().zip(&pts).filter(|(_, p)| p.degenerate).map(|(id, _)| *id).collect(),
        global,
        argmin,
    })
}

/// Radius `R_ζ = √(1 + 1/ζ²)` of the reference circle.
pub fn reference_radius(zeta: f64) -> f64 {
    (1.0 + 1.0 / (zeta * zeta)).sqrt()
}

/// The reference graph `f(y) = R_ζ − √(R_ζ² − y²)` and its derivative; `f'(1) = ζ`.
pub fn reference_graph(zeta: f64, y: f64) -> (f64, f64) {
    let r = reference_radius(zeta);
    let s = (r * r - y * y).sqrt();
    (r - s, y / s)
}

/// The circle of radius `R_ζ` tangent to the `y`-axis at the origin (centre
/// `(0, R_ζ)`), sampled with `n` points starting at the origin.
pub fn reference_circle(zeta: f64, n: usize) -> Result<BoundaryCurve, Error> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::InvalidInput(format!("reference circle needs 0 < zeta <= 1, got {zeta}")));
    }
    let r = reference_radius(zeta);
    Ok(BoundaryCurve::from_fn(n, |t| {
        let a = 2.0 * PI * t - 0.5 * PI;
        [r * a.cos(), r + r * a.sin()]
    }))
}

/// Thresholds of [`convergence_report`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    /// Tangent-angle gap (radians) that counts as a jump.
    pub alpha0: f64,
    /// Number of trailing family members examined.
    pub window: usize,
    /// Flagged samples closer than this (arclength) form one jump point.
    pub merge_radius: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self { alpha0: 0.05, window: 3, merge_radius: 2.0 }
    }
}

/// Gaps of one family member against the limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberGaps {
    pub sup_position: f64,
    pub sup_tangent: f64,
    /// Per limit sample (NaN where the correspondence was ambiguous).
    pub position: Vec<f64>,
    pub tangent: Vec<f64>,
}

/// A cluster of limit samples whose tangent gap fails to decay, located at
/// the middle of the cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpPoint {
    pub sample: SampleId,
    pub position: [f64; 2],
    /// Largest tangent gap of the last member over the cluster.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub members: Vec<MemberGaps>,
    pub jumps: Vec<JumpPoint>,
    /// Limit samples excluded for an ambiguous correspondence (any member).
    pub excluded: Vec<SampleId>,
}

/// C⁰ and tangent gaps of each family member against `limit` through the
/// nearest-point correspondence, and the limit samples where the tangent gap
/// does not decay along the family.
///
/// A sample is a jump point when, over the last `window` members, its tangent
/// gap stays `≥ α₀`, its position gap decreases, and the tangent gap decays
/// more slowly than the square root of the position gap (a rigid rotation
/// shrinks both at the same rate and is not a jump).
pub fn convergence_report(
    family: &[BoundaryCurve],
    limit: &BoundaryCurve,
    opts: &ConvergenceOptions,
) -> ConvergenceReport {
    let ids = limit.ids();
    let h_lim = limit.mean_spacing();
    let mut excluded = std::collections::BTreeSet::new();
    let members: Vec<MemberGaps> = family
        .iter()
        .map(|c| {
            let cids = c.ids();
            let tangents: Vec<[f64; 2]> = cids.iter().map(|&id| c.tangent(id)).collect();
            let grid = PointGrid::new(cids.iter().map(|&id| c.point(id)).collect(), 2.0 * c.mean_spacing().max(h_lim));
            let res: Vec<(f64, f64, bool)> = ids
                .par_iter()
                .map(|&lid| {
                    let p = limit.point(lid);
                    let Some((best_d, bk)) = grid.nearest(p) else {
                        return (f64::NAN, f64::NAN, true);
                    };
                    let best = (best_d, bk);
                    let bid = cids[best.1];
                    let n = c.components[bid.0].len();
                    let ambiguous = grid.within(p, best.0 + h_lim).into_iter().any(|k| {
                        let id = cids[k];
                        let sep = if id.0 != bid.0 {
                            usize::MAX
                        } else {
                            let d = id.1.abs_diff(bid.1);
                            d.min(n - d)
                        };
                        // A second branch of the curve within reach.
                        sep > 3 && sep as f64 * c.mean_spacing() > 4.0 * (best.0 + h_lim)
                    });
                    let tl = limit.tangent(lid);
                    let tm = tangents[best.1];
                    let cosang = (tl[0] * tm[0] + tl[1] * tm[1]).abs().min(1.0);
                    (best.0, cosang.acos(), ambiguous)
                })
                .collect();
            for (k, r) in res.iter().enumerate() {
                if r.2 {
                    excluded.insert(ids[k]);
                }
            }
            let position: Vec<f64> = res.iter().map(|r| if r.2 { f64::NAN } else { r.0 }).collect();
            let tangent: Vec<f64> = res.iter().map(|r| if r.2 { f64::NAN } else { r.1 }).collect();
            MemberGaps {
                sup_position: position.iter().filter(|v| v.is_finite()).fold(0.0, |a, &b| a.max(b)),
                sup_tangent: tangent.iter().filter(|v| v.is_finite()).fold(0.0, |a, &b| a.max(b)),
                position,
                tangent,
            }
        })
        .collect();
    let mut jumps = Vec::new();
    let w = opts.window.max(2);
    if members.len() >= w {
        let tail = &members[members.len() - w..];
        let flags: Vec<bool> = (0..ids.len())
            .map(|k| {
                let tg: Vec<f64> = tail.iter().map(|m| m.tangent[k]).collect();
                let ps: Vec<f64> = tail.iter().map(|m| m.position[k]).collect();
                if tg.iter().chain(&ps).any(|v| !v.is_finite()) {
                    return false;
                }
                let all_big = tg.iter().all(|&g| g >= opts.alpha0);
                let pos_decays = ps[w - 1] < ps[0];
                let slow = tg[w - 1] / tg[0] >= (ps[w - 1] / ps[0].max(1e-300)).sqrt();
                all_big && pos_decays && slow
            })
            .collect();
        let last = members.last().unwrap();
        let mut offset = 0;
        for comp in &limit.components {
            let n = comp.len();
            let flagged: Vec<usize> = (0..n).filter(|&i| flags[offset + i]).collect();
            let gap_steps = ((opts.merge_radius / h_lim).ceil() as usize).max(1);
            // Runs of flagged samples, merging runs closer than the merge radius.
            let mut runs: Vec<(usize, usize)> = Vec::new();
            for &i in &flagged {
                match runs.last_mut() {
                    Some(r) if i - r.1 <= gap_steps => r.1 = i,
                    _ => runs.push((i, i)),
                }
            }
            if runs.len() >= 2 {
                let (f, l) = (runs[0], runs[runs.len() - 1]);
                if f.0 + n - l.1 <= gap_steps {
                    runs[0] = (l.0, f.1 + n);
                    runs.pop();
                }
            }
            for (lo, hi) in runs {
                let mid = ((lo + hi) / 2) % n;
                let gap = (lo..=hi).map(|i| last.tangent[offset + i % n]).filter(|g| g.is_finite()).fold(0.0, f64::max);
                jumps.push(JumpPoint { sample: (ids[offset].0, mid), position: comp[mid], gap });
            }
            offset += n;
        }
    }
    ConvergenceReport { members, jumps, excluded: excluded.into_iter().collect() }
}

/// Uniform bucket grid for nearest-sample queries.
struct PointGrid {
    pts: Vec<[f64; 2]>,
    cell: f64,
    buckets: std::collections::HashMap<(i64, i64), Vec<usize>>,
}

impl PointGrid {
    fn new(pts: Vec<[f64; 2]>, cell: f64) -> Self {
        let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
        for (k, p) in pts.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(k);
        }
        Self { pts, cell, buckets }
    }

    fn key(p: &[f64; 2], cell: f64) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    fn ring(&self, c: (i64, i64), r: i64, out: &mut Vec<usize>) {
        for di in -r..=r {
            for dj in -r..=r {
                if di.abs().max(dj.abs()) != r {
                    continue;
                }
                if let Some(b) = self.buckets.get(&(c.0 + di, c.1 + dj)) {
                    out.extend_from_slice(b);
                }
            }
        }
    }

    fn dist(&self, k: usize, p: [f64; 2]) -> f64 {
        (self.pts[k][0] - p[0]).hypot(self.pts[k][1] - p[1])
    }

    /// Nearest sample `(distance, index)`.
    fn nearest(&self, p: [f64; 2]) -> Option<(f64, usize)> {
        if self.pts.is_empty() {
            return None;
        }
        let c = Self::key(&p, self.cell);
        let mut best: Option<(f64, usize)> = None;
        let mut r = 0i64;
        let mut cand = Vec::new();
        loop {
            cand.clear();
            self.ring(c, r, &mut cand);
            for &k in &cand {
                let d = self.dist(k, p);
                if best.is_none_or(|b| d < b.0 || (d == b.0 && k < b.1)) {
                    best = Some((d, k));
                }
            }
            // Every unvisited cell is at least r·cell away.
            if let Some(b) = best {
                if b.0 <= r as f64 * self.cell {
                    return best;
                }
            }
            r += 1;
            if r > 1_000_000 {
                return best;
            }
        }
    }

    /// All samples within distance `rad` of `p`.
    fn within(&self, p: [f64; 2], rad: f64) -> Vec<usize> {
        let c = Self::key(&p, self.cell);
        let reach = (rad / self.cell).ceil() as i64 + 1;
        let mut out = Vec::new();
        for r in 0..=reach {
            self.ring(c, r, &mut out);
        }
        out.retain(|&k| self.dist(k, p) <= rad);
        out
    }
}

/// Gaps measured from the member side: for every sample of `member`, the
/// distance to the nearest limit sample and the angle between their tangents.
/// Shrinking loops that collapse onto a point of the limit keep a large
/// tangent gap here even when the limit-side correspondence sees none.
pub fn member_gaps(member: &BoundaryCurve, limit: &BoundaryCurve) -> MemberGaps {
    let lids = limit.ids();
    let grid = PointGrid::new(lids.iter().map(|&id| limit.point(id)).collect(), 2.0 * limit.mean_spacing());
    let res: Vec<(f64, f64)> = member
        .ids()
        .par_iter()
        .map(|&id| {
            let p = member.point(id);
            let Some((d, k)) = grid.nearest(p) else {
                return (f64::NAN, f64::NAN);
            };
            let (tm, tl) = (member.tangent(id), limit.tangent(lids[k]));
            (d, (tm[0] * tl[0] + tm[1] * tl[1]).abs().min(1.0).acos())
        })
        .collect();
    let position: Vec<f64> = res.iter().map(|r| r.0).collect();
    let tangent: Vec<f64> = res.iter().map(|r| r.1).collect();
    MemberGaps {
        sup_position: position.iter().filter(|v| v.is_finite()).fold(0.0, |a, &b| a.max(b)),
        sup_tangent: tangent.iter().filter(|v| v.is_finite()).fold(0.0, |a, &b| a.max(b)),
        position,
        tangent,
    }
}

/// Writes `y,z` rows with a blank line between components.
pub fn write_curve_csv(c: &BoundaryCurve) -> String {
    let mut s = String::from("y,z\n");
    for (k, comp) in c.components.iter().enumerate() {
        if k > 0 {
            s.push('\n');
        }
        for p in comp {
            let _ = writeln!(s, "{:.17e},{:.17e}", p[0], p[1]);
        }
    }
    s
}

/// Parses the format of [`write_curve_csv`] (header optional).
pub fn read_curve_csv(text: &str) -> Result<BoundaryCurve, Error> {
    let mut comps: Vec<Vec<[f64; 2]>> = vec![Vec::new()];
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if !comps.last().unwrap().is_empty() {
                comps.push(Vec::new());
            }
            continue;
        }
        if ln == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic()) {
            continue;
        }
        let mut it = line.split(',');
        let mut num = || -> Result<f64, Error> {
            it.next()
                .ok_or_else(|| Error::Format(format!("line {}: expected two columns", ln + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("line {}: {e}", ln + 1)))
        };
        comps.last_mut().unwrap().push([num()?, num()?]);
    }
    if comps.last().is_some_and(Vec::is_empty) {
        comps.pop();
    }
    BoundaryCurve::new(comps)
}

/// SVG plot of curves (one polyline per component) with a circle marker per jump point.
pub fn curves_svg(curves: &[&BoundaryCurve], jumps: &[JumpPoint]) -> String {
    let pts = curves.iter().flat_map(|c| c.components.iter().flatten());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let size = 600.0;
    let map = |p: [f64; 2]| {
        (20.0 + (p[0] - lo[0]) / span * (size - 40.0), size - 20.0 - (p[1] - lo[1]) / span * (size - 40.0))
    };
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    );
    for (i, c) in curves.iter().enumerate() {
        for comp in &c.components {
            let path: Vec<String> = comp
                .iter()
                .chain(comp.first())
                .map(|&p| {
                    let (x, y) = map(p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                s,
                "<polyline class=\"curve\" data-index=\"{i}\" fill=\"none\" stroke=\"hsl({},60%,40%)\" stroke-width=\"1\" points=\"{}\"/>",
                (i * 47) % 360,
                path.join(" ")
            );
        }
    }
    for j in jumps {
        let (x, y) = map(j.position);
        let _ = writeln!(s, "<circle class=\"jump\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"6\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_length_and_tangent() {
        let c = BoundaryCurve::circle([0.0, 0.0], 50.0, 4096);
        assert!((c.length() - 100.0 * PI).abs() < 1e-9);
        let t = c.tangent((0, 0));
        assert!((t[0]).abs() < 1e-12 && (t[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization() {
        let c = BoundaryCurve::circle([7.0, 7.0], 1.0, 512);
        let n = normalize_curve(&c).unwrap();
        assert!((n.length() - NORMALIZED_LENGTH).abs() < 1e-9);
        let g = n.centroid();
        assert!(g[0].abs() < 1e-9 && g[1].abs() < 1e-9);
        assert!((n.components[0][0][0] - 50.0).abs() < 1e-6);
    }

    #[test]
    fn lip_rad_of_a_circle() {
        let c = BoundaryCurve::circle([0.0, 0.0], 50.0, 4096);
        let h = c.mean_spacing();
        let v = lip_rad_at(&c, (0, 0), 0.05).value;
        let exact = 50.0 * 0.05 / (1.0f64 + 0.0025).sqrt();
        assert!((v - exact).abs() <= 2.0 * h, "{v} vs {exact}");
        assert!(lip_rad_at(&c, (0, 0), 0.1).value > v);
    }

    #[test]
    fn reference_circle_slope() {
        assert!((reference_radius(1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((reference_radius(0.05) - 401f64.sqrt()).abs() < 1e-12);
        assert!((reference_graph(0.05, 1.0).1 - 0.05).abs() < 1e-12);
        let c = reference_circle(0.5, 64).unwrap();
        let p = c.components[0][0];
        assert!(p[0].abs() < 1e-15 && p[1].abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let mut c = BoundaryCurve::circle([0.0, 0.0], 1.0, 8);
        c.components.push(BoundaryCurve::circle([3.0, 0.0], 0.5, 6).components.remove(0));
        let back = read_curve_csv(&write_curve_csv(&c)).unwrap();
        assert_eq!(back, c);
    }
}
