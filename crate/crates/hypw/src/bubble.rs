//! Family-level analysis: energy concentration along the boundary,
//! blow-ups at the concentration scale, pole tracking and bubble counting.
//!
//! Members are normalized like their boundary curves (total length `100π`,
//! centroid at the origin); the similarity that does this is a hyperbolic
//! isometry (horizontal translation followed by a dilation), applied to the
//! whole mesh.

use serde::{Deserialize, Serialize};

use crate::curves::{normalize_curve, BoundaryCurve, NORMALIZED_LENGTH};
use crate::functionals::{PoleSet, WeightField};
use crate::hyp3::{recentering_isometry, HyperbolicIsometry, Point3};
use crate::surface::{intrinsic_distance, mesh_shape_full, RevolutionSurface, ShapeField, TriMesh};
use crate::Error;

/// Largest number of boundary probes of a concentration scan.
pub const MAX_PROBES: usize = 256;
/// Radius of the half-ball around the `(1,0,0)` footprint used by blow-ups.
pub const BLOW_UP_RADIUS: f64 = 10.0;

/// Thresholds shared by all members of a family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub zeta: f64,
    /// Exponent of the weighted energy, `p > 1`.
    pub p: f64,
    /// Small-energy threshold `ε'` of the concentration radius.
    pub eps_prime: f64,
    pub alpha0: f64,
    /// Grid spacing of the members in normalized units.
    pub h: f64,
}

impl FamilyParams {
    /// Defaults for spacing `h`: `p = 3/2`, `ε' = ½·5^{2p}` (half a unit of
    /// unweighted energy at the minimal weight `f = 5`).
    pub fn with_spacing(h: f64) -> Self {
        let p = 1.5;
        Self { zeta: 0.05, p, eps_prime: 0.5 * 5f64.powf(2.0 * p), alpha0: 0.05, h }
    }
}

/// One normalized family member.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyMember {
    pub mesh: TriMesh,
    pub poles: PoleSet,
    pub curve: BoundaryCurve,
    /// Family parameter (e.g. the dilation parameter `t`).
    pub label: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceFamily {
    pub members: Vec<FamilyMember>,
    pub params: FamilyParams,
}

/// Ordered boundary loops of a mesh, as `(y, z)` polygons, by chaining the
/// topological boundary edges between vertices at infinity.
pub fn boundary_curve(m: &TriMesh) -> Result<BoundaryCurve, Error> {
    let n = m.n_vertices();
    let mut next: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in m.topological_boundary_edges() {
        if m.boundary[a] && m.boundary[b] {
            next[a].push(b);
            next[b].push(a);
        }
    }
    let mut used = vec![false; n];
    let mut loops = Vec::new();
    for start in 0..n {
        if used[start] || next[start].len() != 2 {
            continue;
        }
        let mut lp = vec![start];
        used[start] = true;
        let (mut prev, mut cur) = (start, next[start][0]);
        while cur != start {
            if used[cur] || next[cur].len() != 2 {
                return Err(Error::InvalidInput(format!(
                    "boundary at infinity is not a union of loops near vertex {cur}"
                )));
            }
            used[cur] = true;
            lp.push(cur);
            let nx = if next[cur][0] == prev { next[cur][1] } else { next[cur][0] };
            prev = cur;
            cur = nx;
        }
        loops.push(lp.iter().map(|&v| [m.vertices[v].y, m.vertices[v].z]).collect());
    }
    if loops.is_empty() {
        return Err(Error::InvalidInput("mesh has no boundary loop at infinity".into()));
    }
    BoundaryCurve::new(loops)
}

/// The isometry `w ↦ k(w − c)` that normalizes a boundary curve.
pub fn normalizing_isometry(c: &BoundaryCurve) -> Result<HyperbolicIsometry, Error> {
    let l = c.length();
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidInput("curve has zero length".into()));
    }
    let g = c.centroid();
    let k = NORMALIZED_LENGTH / l;
    Ok(HyperbolicIsometry::dilation(k)
        .compose(&HyperbolicIsometry::translation(num_complex::Complex64::new(-g[0], -g[1]))))
}

impl SurfaceFamily {
    /// Normalizes every `(mesh, poles, label)` and checks equal pole counts.
    pub fn new(raw: Vec<(TriMesh, PoleSet, f64)>, params: FamilyParams) -> Result<Self, Error> {
        if !(params.p > 1.0) || !(params.h > 0.0) || !(params.eps_prime > 0.0) {
            return Err(Error::InvalidInput("family needs p > 1, h > 0 and ε' > 0".into()));
        }
        let mut members = Vec::with_capacity(raw.len());
        for (mesh, poles, label) in raw {
            poles.validate(&mesh)?;
            let c = boundary_curve(&mesh)?;
            let iso = normalizing_isometry(&c)?;
            let mesh = mesh.transform(&iso);
            let curve = normalize_curve(&c)?;
            members.push(FamilyMember { mesh, poles, curve, label });
        }
        if let Some(first) = members.first() {
            if members.iter().any(|m| m.poles.len() != first.poles.len()) {
                return Err(Error::InvalidInput("pole counts differ across members".into()));
            }
        }
        Ok(Self { members, params })
    }

    pub fn pole_count(&self) -> usize {
        self.members.first().map_or(0, |m| m.poles.len())
    }
}

/// Per-vertex data used by the scans.
struct MemberData {
    shape: ShapeField,
    /// `|Å̄|² dμ̄ f^{2p}` (unweighted when the member has no poles).
    mass: Vec<f64>,
}

fn member_data(m: &FamilyMember, p: f64) -> Result<MemberData, Error> {
    let shape = mesh_shape_full(&m.mesh)?;
    let weight = if m.poles.is_empty() { None } else { Some(WeightField::new(&m.mesh, &m.poles)?) };
    let mass = shape
        .samples
        .iter()
        .enumerate()
        .map(|(v, s)| {
            if s.boundary {
                return 0.0;
            }
            let f = weight.as_ref().map_or(1.0, |w| w.f[v].powf(2.0 * p));
            let e = s.trace_free_bar_sq * s.area * f;
            if e.is_finite() {
                e
            } else {
                0.0
            }
        })
        .collect();
    Ok(MemberData { shape, mass })
}

/// Largest `R` such that the weighted energy in `B(Q, R)` is at most `ε'`
/// (capped at `r_max`).
fn concentration_radius(m: &TriMesh, mass: &[f64], q: [f64; 2], eps: f64, r_max: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = m
        .vertices
        .iter()
        .zip(mass)
        .filter(|(_, &e)| e > 0.0)
        .map(|(v, &e)| {
            let d = (v.x * v.x + (v.y - q[0]).powi(2) + (v.z - q[1]).powi(2)).sqrt();
            (d, e)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (d, e) in pts {
        acc += e;
        if acc > eps {
            return d.min(r_max);
        }
    }
    r_max
}

/// One boundary probe of a concentration scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Probe {
    pub position: [f64; 2],
    /// `δ_j(Q)` per member.
    pub radii: Vec<f64>,
    pub inf_radius: f64,
}

/// A point where the concentration radius collapses.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub position: [f64; 2],
    /// Smallest `inf_j δ_j` over the cluster of collapsing probes.
    pub collapse_radius: f64,
    /// `δ_j` at that probe, per member.
    pub radii: Vec<f64>,
    pub probes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationScan {
    pub probes: Vec<Probe>,
    pub candidates: Vec<ConcentrationPoint>,
    /// Collapse threshold `4h`.
    pub threshold: f64,
}

/// Boundary probes pooled over all members in a canonical order (so the
/// scan does not depend on the order of the family), thinned greedily to a
/// minimum spacing of half the uniform spacing of [`MAX_PROBES`] points on
/// the normalized curve, then by stride if still too many.
fn probe_points(fam: &SurfaceFamily) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = fam
        .members
        .iter()
        .flat_map(|m| m.mesh.vertices.iter().zip(&m.mesh.boundary).filter(|(_, &b)| b).map(|(v, _)| [v.y, v.z]))
        .collect();
    pts.sort_by(|a, b| {
        let ka = (a[1].atan2(a[0]), a[0].hypot(a[1]));
        let kb = (b[1].atan2(b[0]), b[0].hypot(b[1]));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let spacing = 0.5 * NORMALIZED_LENGTH / MAX_PROBES as f64;
    let mut kept: Vec<[f64; 2]> = Vec::new();
    for p in pts {
        if kept.iter().all(|k| (k[0] - p[0]).hypot(k[1] - p[1]) >= spacing) {
            kept.push(p);
        }
    }
    if kept.len() <= MAX_PROBES {
        return kept;
    }
    let stride = kept.len() as f64 / MAX_PROBES as f64;
    (0..MAX_PROBES).map(|k| kept[(k as f64 * stride) as usize]).collect()
}

/// Concentration radii at boundary probes and the points where their
/// infimum over the family falls below `4h`; collapsing probes within `8h`
/// of each other form one candidate.
pub fn concentration_scan(fam: &SurfaceFamily) -> Result<ConcentrationScan, Error> {
    let data: Vec<MemberData> = fam.members.iter().map(|m| member_data(m, fam.params.p)).collect::<Result<_, _>>()?;
    scan_with(fam, &data)
}

fn scan_with(fam: &SurfaceFamily, data: &[MemberData]) -> Result<ConcentrationScan, Error> {
    let r_max = 2.0 * NORMALIZED_LENGTH;
    let threshold = 4.0 * fam.params.h;
    let probes: Vec<Probe> = probe_points(fam)
        .into_iter()
        .map(|q| {
            let radii: Vec<f64> = fam
                .members
                .iter()
                .zip(data)
                .map(|(m, d)| concentration_radius(&m.mesh, &d.mass, q, fam.params.eps_prime, r_max))
                .collect();
            let inf_radius = radii.iter().cloned().fold(f64::INFINITY, f64::min);
            Probe { position: q, radii, inf_radius }
        })
        .collect();
    let collapsing: Vec<usize> = (0..probes.len()).filter(|&k| probes[k].inf_radius < threshold).collect();
    // Single-linkage clusters at distance 8h.
    let mut label = vec![usize::MAX; probes.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in &collapsing {
        if label[k] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![k];
        label[k] = id;
        let mut i = 0;
        while i < members.len() {
            let a = probes[members[i]].position;
            for &o in &collapsing {
                if label[o] == usize::MAX {
                    let b = probes[o].position;
                    if (a[0] - b[0]).hypot(a[1] - b[1]) <= 2.0 * threshold {
                        label[o] = id;
                        members.push(o);
                    }
                }
            }
            i += 1;
        }
        clusters.push(members);
    }
    let mut candidates: Vec<ConcentrationPoint> = clusters
        .iter()
        .map(|c| {
            let best = *c.iter().min_by(|&&a, &&b| probes[a].inf_radius.total_cmp(&probes[b].inf_radius)).unwrap();
            ConcentrationPoint {
                position: probes[best].position,
                collapse_radius: probes[best].inf_radius,
                radii: probes[best].radii.clone(),
                probes: c.len(),
            }
        })
        .collect();
    candidates.sort_by(|a, b| a.position[1].atan2(a.position[0]).total_cmp(&b.position[1].atan2(b.position[0])));
    Ok(ConcentrationScan { probes, candidates, threshold })
}

/// Blow-up centres for one candidate: per member, the interior vertex of
/// largest `|Å|² f^{2p}` within `B(candidate, 4h)` (falling back to the whole
/// member when that half-ball holds no interior vertex).
pub fn blow_up_centers(fam: &SurfaceFamily, candidate: [f64; 2]) -> Result<Vec<Point3>, Error> {
    fam.members
        .iter()
        .map(|m| {
            let d = member_data(m, fam.params.p)?;
            Ok(center_in(m, &d, candidate, 4.0 * fam.params.h))
        })
        .collect()
}

fn center_in(m: &FamilyMember, d: &MemberData, c: [f64; 2], radius: f64) -> Point3 {
    let density = |v: usize| {
        let s = &d.shape.samples[v];
        if s.boundary || !(s.area > 0.0) {
            0.0
        } else {
            // mass/dμ = |Å̄|² x² f^{2p} = |Å|² f^{2p}
            d.mass[v] / s.area * s.position.x * s.position.x
        }
    };
    let inside = |v: usize| {
        let p = m.mesh.vertices[v];
        (p.x * p.x + (p.y - c[0]).powi(2) + (p.z - c[1]).powi(2)).sqrt() < radius
    };
    let pick = |filter: &dyn Fn(usize) -> bool| {
        (0..m.mesh.n_vertices())
            .filter(|&v| !m.mesh.boundary[v] && filter(v))
            .max_by(|&a, &b| density(a).total_cmp(&density(b)))
    };
    let v = pick(&inside).or_else(|| pick(&|_| true)).unwrap_or(0);
    m.mesh.vertices[v]
}

/// Result of [`blow_up`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowUp {
    pub centers: Vec<Point3>,
    pub isometries: Vec<HyperbolicIsometry>,
    /// `∫|Å|² dμ` of each recentred member inside `B(0, 10)`.
    pub energies: Vec<f64>,
    /// Median of the last three energies.
    pub limit_energy: f64,
    #[serde(skip)]
    pub members: Vec<TriMesh>,
}

/// Energy of a mesh inside the Euclidean half-ball of radius `r` about the
/// boundary origin (the footprint of `(1,0,0)`).
pub fn footprint_energy(m: &TriMesh, r: f64) -> Result<f64, Error> {
    let f = mesh_shape_full(m)?;
    Ok(f.samples
        .iter()
        .filter(|s| !s.boundary)
        .filter(|s| s.position.to_array().iter().map(|c| c * c).sum::<f64>().sqrt() < r)
        .map(|s| s.trace_free_bar_sq * s.area)
        .sum())
}

/// Recentres each member at its centre `Q_j` and measures the energy inside
/// the fixed half-ball.
pub fn blow_up(fam: &SurfaceFamily, centers: &[Point3]) -> Result<BlowUp, Error> {
    if centers.len() != fam.members.len() {
        return Err(Error::InvalidInput(format!("{} centres for {} members", centers.len(), fam.members.len())));
    }
    let mut isometries = Vec::new();
    let mut energies = Vec::new();
    let mut members = Vec::new();
    for (j, (m, q)) in fam.members.iter().zip(centers).enumerate() {
        let v = m.mesh.nearest_vertex(q);
        let gap = m.mesh.vertices[v].euclidean_distance(q);
        let local = local_edge_length(&m.mesh, v);
        if !(gap <= 2.0 * local) || m.mesh.boundary[v] {
            return Err(Error::InvalidInput(format!(
                "blow-up centre of member {j} lies off the mesh (gap {gap:.3e}, local edge {local:.3e})"
            )));
        }
        let iso = recentering_isometry(q)?;
        let t = m.mesh.transform(&iso);
        energies.push(footprint_energy(&t, BLOW_UP_RADIUS)?);
        isometries.push(iso);
        members.push(t);
    }
    Ok(BlowUp {
        centers: centers.to_vec(),
        isometries,
        limit_energy: median_of_last_three(&energies),
        energies,
        members,
    })
}

fn local_edge_length(m: &TriMesh, v: usize) -> f64 {
    let p = m.vertices[v];
    m.triangles
        .iter()
        .filter(|t| t.contains(&v))
        .flat_map(|t| t.iter().map(|&u| m.vertices[u].euclidean_distance(&p)))
        .fold(0.0, f64::max)
}

/// Median of the last three values (of all values when fewer).
pub fn median_of_last_three(v: &[f64]) -> f64 {
    let tail: Vec<f64> = v.iter().rev().take(3).cloned().collect();
    let mut s = tail;
    s.sort_by(|a, b| a.total_cmp(b));
    match s.len() {
        0 => f64::NAN,
        1 => s[0],
        2 => 0.5 * (s[0] + s[1]),
        _ => s[1],
    }
}

/// Intrinsic distances from blow-up centres to the nearest pole.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoleDistanceReport {
    pub distances: Vec<f64>,
    /// `"growing"` when the distances increase strictly by at least one
    /// unit overall or the last exceeds 1.2 × the median, `"bounded"`
    /// otherwise, `"insufficient data"` for fewer than two members.
    pub verdict: String,
    pub note: String,
}

pub fn pole_distance_report(fam: &SurfaceFamily, centers: &[Point3]) -> Result<PoleDistanceReport, Error> {
    if centers.len() != fam.members.len() {
        return Err(Error::InvalidInput(format!("{} centres for {} members", centers.len(), fam.members.len())));
    }
    let mut distances = Vec::new();
    for (m, q) in fam.members.iter().zip(centers) {
        if m.poles.is_empty() {
            distances.push(f64::INFINITY);
            continue;
        }
        let d = intrinsic_distance(&m.mesh, &m.poles.vertices)?;
        distances.push(d[m.mesh.nearest_vertex(q)]);
    }
    let verdict = if distances.len() < 2 {
        "insufficient data"
    } else {
        let mut s = distances.clone();
        s.sort_by(|a, b| a.total_cmp(b));
        let median = if s.len() % 2 == 1 { s[s.len() / 2] } else { 0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2]) };
        let last = *distances.last().unwrap();
        let rising = distances.windows(2).all(|w| w[1] > w[0]) && last - distances[0] >= 1.0;
        if rising || !(last <= 1.2 * median) {
            "growing"
        } else {
            "bounded"
        }
    };
    Ok(PoleDistanceReport {
        distances,
        verdict: verdict.into(),
        note: "growth-trend heuristic standing in for the existential pole-distance bound".into(),
    })
}

/// One recovered bubble.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bubble {
    pub point: ConcentrationPoint,
    pub centers: Vec<Point3>,
    pub energies: Vec<f64>,
    pub limit_energy: f64,
    pub pole_distances: PoleDistanceReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BubbleReport {
    pub labels: Vec<f64>,
    pub scan: ConcentrationScan,
    pub bubbles: Vec<Bubble>,
    /// Number of candidates whose blow-up energy exceeds the noise floor,
    /// capped at the pole count.
    pub bubble_count: usize,
    pub pole_count: usize,
    /// Candidates above the noise floor beyond the pole count (normally 0).
    pub truncated: usize,
    pub noise_floor: f64,
    /// `E_p` of each member.
    pub weighted_energies: Vec<f64>,
    /// `E_p` strictly increasing along the family with total growth ≥ 25%.
    pub weighted_energy_diverges: bool,
}

/// Noise floor: 10 × the energy of a hemisphere of radius 50 meshed at the
/// family spacing (exactly zero in the continuum).
pub fn noise_floor(h: f64) -> Result<f64, Error> {
    let m = RevolutionSurface::hemisphere(
        num_complex::Complex64::new(0.0, 0.0),
        NORMALIZED_LENGTH / (2.0 * std::f64::consts::PI),
        h,
    )?
    .to_mesh()?;
    let f = mesh_shape_full(&m)?;
    let e: f64 = f.samples.iter().filter(|s| !s.boundary).map(|s| s.trace_free_bar_sq * s.area).sum();
    Ok(10.0 * e.abs())
}

/// Full pipeline: scan, blow up each candidate, track poles, count bubbles.
pub fn bubble_report(fam: &SurfaceFamily) -> Result<BubbleReport, Error> {
    let data: Vec<MemberData> = fam.members.iter().map(|m| member_data(m, fam.params.p)).collect::<Result<_, _>>()?;
    let scan = scan_with(fam, &data)?;
    let floor = noise_floor(fam.params.h)?;
    let mut bubbles = Vec::new();
    for c in &scan.candidates {
        let centers: Vec<Point3> =
            fam.members.iter().zip(&data).map(|(m, d)| center_in(m, d, c.position, 4.0 * fam.params.h)).collect();
        let b = blow_up(fam, &centers)?;
        let pd = pole_distance_report(fam, &centers)?;
        bubbles.push(Bubble {
            point: c.clone(),
            centers,
            energies: b.energies,
            limit_energy: b.limit_energy,
            pole_distances: pd,
        });
    }
    let above = bubbles.iter().filter(|b| b.limit_energy > floor).count();
    let pole_count = fam.pole_count();
    let weighted_energies: Vec<f64> = data.iter().map(|d| d.mass.iter().sum()).collect();
    let increasing = weighted_energies.windows(2).all(|w| w[1] > w[0]);
    let diverges =
        weighted_energies.len() >= 2 && increasing && *weighted_energies.last().unwrap() >= 1.25 * weighted_energies[0];
    Ok(BubbleReport {
        labels: fam.members.iter().map(|m| m.label).collect(),
        scan,
        bubbles,
        bubble_count: above.min(pole_count),
        pole_count,
        truncated: above.saturating_sub(pole_count),
        noise_floor: floor,
        weighted_energies,
        weighted_energy_diverges: diverges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn hemisphere(center: Complex64, r: f64, h: f64) -> TriMesh {
        RevolutionSurface::hemisphere(center, r, h).unwrap().to_mesh().unwrap()
    }

    fn top(m: &TriMesh) -> PoleSet {
        let v = (0..m.n_vertices()).max_by(|&a, &b| m.vertices[a].x.total_cmp(&m.vertices[b].x)).unwrap();
        PoleSet::new(vec![v])
    }

    #[test]
    fn boundary_curve_of_hemisphere_is_one_loop() {
        let m = hemisphere(Complex64::new(0.0, 0.0), 1.0, 1.0 / 16.0);
        let c = boundary_curve(&m).unwrap();
        assert_eq!(c.components.len(), 1);
        assert!((c.length() - 2.0 * std::f64::consts::PI).abs() < 1e-2);
    }

    #[test]
    fn normalization_maps_hemisphere_to_radius_fifty() {
        let m = hemisphere(Complex64::new(3.0, -1.0), 2.0, 1.0 / 8.0);
        let fam = SurfaceFamily::new(vec![(m.clone(), top(&m), 0.0)], FamilyParams::with_spacing(50.0 / 8.0)).unwrap();
        let c = &fam.members[0].curve;
        assert!((c.length() - NORMALIZED_LENGTH).abs() < 1e-9);
        for v in fam.members[0].mesh.vertices.iter().filter(|v| v.x == 0.0) {
            assert!((v.y.hypot(v.z) - 50.0).abs() < 0.2);
        }
    }

    #[test]
    fn hemisphere_family_has_no_candidates() {
        let raw: Vec<_> = (0..3)
            .map(|j| {
                let m = hemisphere(Complex64::new(0.0, 0.0), 1.0 + j as f64, (1.0 + j as f64) / 16.0);
                let p = top(&m);
                (m, p, j as f64)
            })
            .collect();
        let fam = SurfaceFamily::new(raw, FamilyParams::with_spacing(50.0 / 16.0)).unwrap();
        let scan = concentration_scan(&fam).unwrap();
        assert!(scan.candidates.is_empty());
        assert!(scan.probes.len() <= MAX_PROBES);
    }

    #[test]
    fn single_member_pole_table_has_insufficient_data() {
        let m = hemisphere(Complex64::new(0.0, 0.0), 1.0, 1.0 / 8.0);
        let fam = SurfaceFamily::new(vec![(m.clone(), top(&m), 0.0)], FamilyParams::with_spacing(50.0 / 8.0)).unwrap();
        let c = vec![fam.members[0].mesh.vertices[0]];
        let r = pole_distance_report(&fam, &c).unwrap();
        assert_eq!(r.distances.len(), 1);
        assert_eq!(r.verdict, "insufficient data");
    }

    #[test]
    fn median_of_tail() {
        assert_eq!(median_of_last_three(&[9.0, 1.0, 3.0, 2.0]), 2.0);
        assert_eq!(median_of_last_three(&[4.0]), 4.0);
    }
}
