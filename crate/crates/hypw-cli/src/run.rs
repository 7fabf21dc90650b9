//! Executes a validated scenario stage by stage and records every written
//! file in a manifest with its SHA-256.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hypw::bubble::{boundary_curve, bubble_report, FamilyParams, SurfaceFamily};
use hypw::curves::{convergence_report, normalize_curve, BoundaryCurve, ConvergenceOptions, NORMALIZED_LENGTH};
use hypw::functionals::{
    doubling_identity, local_energy_with_adjacency, rena_prediction, renormalized_area, trace_free_energy,
    weighted_energy_from, willmore_energy, EnergyReport, PoleSet, WeightField,
};
use hypw::hyp3::{HyperbolicIsometry, Point3};
use hypw::solve::glue::{glue_family, gluing_ledger, GluedSurface, GluingSpec};
use hypw::solve::{minimal_graph, minimal_revolution, willmore_residual, RevolutionOptions, SolveOptions};
use hypw::surface::io::{read_obj, save_ply};
use hypw::surface::{mesh_shape_full, GraphDomain, RevolutionSurface, Surface, TriMesh};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::canonical;
use crate::export::{export_report, Format, Report, SweepRow};
use crate::scenario::*;
use crate::CliError;

/// A named intermediate result.
#[derive(Clone, Debug)]
pub enum Artifact {
    Mesh(TriMesh),
    Family(Family),
}

#[derive(Clone, Debug)]
pub struct Family {
    /// `(mesh, label)` in increasing label order.
    pub members: Vec<(TriMesh, f64)>,
    /// Grid spacing of the members in normalized boundary units, when known.
    pub spacing: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    pub stage: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub index: usize,
    pub stage: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub seed: u64,
    /// Hash of the canonical scenario with defaults filled in, excluding the
    /// output directory.
    pub scenario_sha256: String,
    /// `complete` or `failed`.
    pub status: String,
    pub failure: Option<StageFailure>,
    pub artifacts: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

struct Writer {
    dir: PathBuf,
    stage: usize,
    entries: Vec<ManifestEntry>,
}

impl Writer {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), String> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex(&Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
            stage: self.stage,
        });
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), String> {
        self.write(name, text.as_bytes())
    }

    fn write_mesh(&mut self, name: &str, m: &TriMesh) -> Result<(), String> {
        let mut buf = Vec::new();
        hypw::surface::io::write_ply(m, &mut buf).map_err(|e| e.to_string())?;
        self.write(name, &buf)
    }

    fn export(&mut self, stem: &str, report: Report<'_>, formats: &[Format]) -> Result<(), String> {
        for f in with_numbers(formats) {
            let text = export_report(report, f).map_err(|e| e.to_string())?;
            self.write_text(&format!("{stem}.{}", f.extension()), &text)?;
        }
        Ok(())
    }
}

/// Plots never appear without the numbers behind them.
fn with_numbers(formats: &[Format]) -> Vec<Format> {
    let mut f = formats.to_vec();
    if f.contains(&Format::Svg) && !f.contains(&Format::Csv) && !f.contains(&Format::Json) {
        f.push(Format::Csv);
    }
    f.sort();
    f.dedup();
    f
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs `sc`, writing outputs and `manifest.json` into its output directory.
/// On a stage failure the manifest lists what was written so far and the
/// error is returned.
pub fn run_scenario(sc: &Scenario) -> Result<Manifest, CliError> {
    let dir = sc.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    // Where results go does not change them: the output directory is not hashed.
    let mut hashed = sc.to_value();
    if let Some(o) = hashed.as_object_mut() {
        o.remove("output");
    }
    let scenario_text = canonical::to_string(&hashed).expect("scenario serializes");
    let mut w = Writer { dir: dir.clone(), stage: 0, entries: Vec::new() };
    let mut artifacts: BTreeMap<String, Artifact> = BTreeMap::new();
    let mut failure = None;
    for (i, stage) in sc.stages.iter().enumerate() {
        w.stage = i;
        if let Err(error) = run_stage(sc, i, stage, &mut artifacts, &mut w) {
            failure = Some(StageFailure { index: i, stage: stage.name().to_string(), error });
            break;
        }
    }
    let manifest = Manifest {
        scenario: sc.name.clone(),
        seed: sc.seed,
        scenario_sha256: hex(&Sha256::digest(scenario_text.as_bytes())),
        status: if failure.is_some() { "failed" } else { "complete" }.to_string(),
        failure: failure.clone(),
        artifacts: w.entries,
    };
    let text = canonical::to_string(&manifest).expect("manifest serializes");
    std::fs::write(dir.join(MANIFEST), text).map_err(|e| CliError::Io(format!("cannot write manifest: {e}")))?;
    match failure {
        Some(f) => Err(CliError::Stage { index: f.index, stage: f.stage, message: f.error }),
        None => Ok(manifest),
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn run_stage(
    sc: &Scenario,
    index: usize,
    stage: &Stage,
    artifacts: &mut BTreeMap<String, Artifact>,
    w: &mut Writer,
) -> Result<(), String> {
    match stage {
        Stage::Build(s) => {
            let mesh = match &s.surface {
                SurfaceSpec::Hemisphere(HemisphereSpec { radius, center, h }) => {
                    let h = h.unwrap_or(radius / 32.0);
                    RevolutionSurface::hemisphere(Complex64::new(center[0], center[1]), *radius, h)
                        .and_then(|r| r.to_mesh())
                        .map_err(err)?
                }
                SurfaceSpec::Mesh(MeshSpec { path }) => load_mesh(&sc.base_dir.join(path))?,
            };
            if s.write_mesh {
                w.write_mesh(&format!("{}.ply", s.name), &mesh)?;
            }
            artifacts.insert(s.name.clone(), Artifact::Mesh(mesh));
        }
        Stage::Solve(s) => {
            let (mesh, record) = solve(s, s.h)?;
            let mut residuals = Vec::new();
            for &h in &s.refine {
                let (_, r) = solve(s, Some(h))?;
                residuals.push((h, r["willmore_residual_l2"].as_f64().unwrap_or(f64::NAN)));
            }
            w.write_text(&format!("{}.json", s.output), &canonical::to_string(&record).map_err(err)?)?;
            if !residuals.is_empty() {
                w.export(&format!("{}-residual", s.output), Report::Residual(&residuals), &s.formats)?;
            }
            if s.write_mesh {
                w.write_mesh(&format!("{}.ply", s.name), &mesh)?;
            }
            artifacts.insert(s.name.clone(), Artifact::Mesh(mesh));
        }
        Stage::Glue(s) => {
            let mut ts = s.t.clone();
            ts.sort_by(f64::total_cmp);
            let mut family: Vec<GluedSurface> = Vec::new();
            for &t in &ts {
                let mut spec = GluingSpec::single_catenoid(t);
                if let Some(h) = s.h {
                    spec.newton.h = h;
                }
                if let Some(tol) = s.tol {
                    spec.newton.tol = tol;
                }
                family.push(glue_family(&spec).map_err(|e| format!("t = {t}: {e}"))?);
            }
            let ledger = gluing_ledger(&family, 0.0, s.alpha0).map_err(err)?;
            let members: Vec<Value> = family
                .iter()
                .map(|g| {
                    json!({
                        "t": g.t,
                        "energy": g.energy,
                        "approx_energy": g.approx_energy,
                        "component_energy_grid": g.component_energy_grid,
                        "component_energy_profile": g.component_energy_profile,
                        "residual_sup": g.residual_sup,
                        "approx_residual_sup": g.approx_residual_sup,
                        "sigma_min_estimate": g.sigma_min_estimate,
                        "newton": g.newton,
                        "deviation_outside_caps": g.deviation_outside_caps,
                        "grid_shape": g.grid_shape,
                        "vertices": g.mesh.n_vertices(),
                    })
                })
                .collect();
            let record = json!({ "ledger": ledger, "members": members });
            w.write_text(&format!("{}.json", s.output), &canonical::to_string(&record).map_err(err)?)?;
            let sweep: Vec<SweepRow> =
                ledger.rows.iter().map(|r| SweepRow { t: r.t, energy: r.energy, defect: r.discrepancy }).collect();
            let sweep_formats: Vec<Format> = s.formats.iter().copied().filter(|f| *f != Format::Json).collect();
            w.export(&format!("{}-energy", s.output), Report::Sweep(&sweep), &sweep_formats)?;
            let curves: Vec<BoundaryCurve> = family
                .iter()
                .map(|g| BoundaryCurve::new(g.boundary_loops()).and_then(|c| normalize_curve(&c)))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            let limit = BoundaryCurve::circle([0.0, 0.0], NORMALIZED_LENGTH / (2.0 * std::f64::consts::PI), 4096);
            let conv =
                convergence_report(&curves, &limit, &ConvergenceOptions { alpha0: s.alpha0, ..Default::default() });
            w.export(
                &format!("{}-curves", s.output),
                Report::Curves { curves: &curves, jumps: &conv.jumps },
                &s.formats,
            )?;
            if s.write_mesh {
                for g in &family {
                    w.write_mesh(&format!("{}-t{}.ply", s.name, g.t), &g.mesh)?;
                }
            }
            // The glued grid spacing maps to this many normalized units.
            let scale = NORMALIZED_LENGTH / (2.0 * std::f64::consts::PI);
            let h = s.h.unwrap_or(GluingSpec::single_catenoid(ts[0]).newton.h);
            artifacts.insert(
                s.name.clone(),
                Artifact::Family(Family {
                    members: family.into_iter().map(|g| (g.mesh, g.t)).collect(),
                    spacing: Some(scale * h),
                }),
            );
        }
        Stage::Transform(s) => {
            let mut iso = HyperbolicIsometry::dilation(s.dilation)
                .compose(&HyperbolicIsometry::rotation(s.rotation))
                .compose(&HyperbolicIsometry::translation(Complex64::new(s.translation[0], s.translation[1])));
            if s.inversion {
                iso = HyperbolicIsometry::inversion().compose(&iso);
            }
            let out = match &artifacts[&s.input] {
                Artifact::Mesh(m) => Artifact::Mesh(m.transform(&iso)),
                Artifact::Family(f) => Artifact::Family(Family {
                    members: f.members.iter().map(|(m, l)| (m.transform(&iso), *l)).collect(),
                    spacing: f.spacing,
                }),
            };
            artifacts.insert(s.name.clone(), out);
        }
        Stage::Analyze(s) => {
            let members: Vec<(&TriMesh, Option<f64>)> = match &artifacts[&s.input] {
                Artifact::Mesh(m) => vec![(m, None)],
                Artifact::Family(f) => f.members.iter().map(|(m, l)| (m, Some(*l))).collect(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut rows = Vec::new();
            for (m, label) in members {
                let r = analyze(s, m, &mut rng)?;
                rows.push((label, r));
            }
            if rows.len() == 1 && rows[0].0.is_none() {
                w.export(&s.output, Report::Energy { label: &s.input, report: &rows[0].1 }, &s.formats)?;
            } else {
                for f in with_numbers(&s.formats) {
                    let text = match f {
                        Format::Json => {
                            let v: Vec<Value> = rows.iter().map(|(l, r)| json!({ "label": l, "report": r })).collect();
                            canonical::to_string(&v).map_err(err)?
                        }
                        Format::Csv => {
                            let mut t = format!("{}\r\n", EnergyReport::CSV_HEADER);
                            for (l, r) in &rows {
                                t.push_str(&r.csv_row(&canonical::format_float(l.unwrap_or(f64::NAN))));
                                t.push_str("\r\n");
                            }
                            t
                        }
                        Format::Svg => {
                            let sweep: Vec<SweepRow> = rows
                                .iter()
                                .filter_map(|(l, r)| Some(SweepRow { t: (*l)?, energy: r.energy?, defect: f64::NAN }))
                                .collect();
                            export_report(Report::Sweep(&sweep), Format::Svg).map_err(err)?
                        }
                    };
                    w.write_text(&format!("{}.{}", s.output, f.extension()), &text)?;
                }
            }
        }
        Stage::Rena(s) => {
            let Artifact::Mesh(m) = &artifacts[&s.input] else { unreachable!("validated") };
            let fit = renormalized_area(m, &s.eps).map_err(err)?;
            let energy = mesh_shape_full(m).map(|f| trace_free_energy(&f)).map_err(err)?;
            let prediction = s.chi.map(|chi| rena_prediction(chi, energy));
            let record = json!({
                "L": fit.l_coeff,
                "RenA": fit.rena,
                "residual": fit.residual,
                "samples": fit.samples,
                "flagged": fit.flagged,
                "chi": s.chi,
                "trace_free_energy": energy,
                "prediction": prediction,
            });
            w.write_text(&format!("{}.json", s.output), &canonical::to_string(&record).map_err(err)?)?;
        }
        Stage::BubbleScan(s) => {
            let Artifact::Family(f) = &artifacts[&s.input] else { unreachable!("validated") };
            let spacing = match s.spacing.or(f.spacing) {
                Some(h) => h,
                None => inferred_spacing(&f.members[0].0)?,
            };
            let params = FamilyParams { zeta: s.zeta, alpha0: s.alpha0, p: s.p, ..FamilyParams::with_spacing(spacing) };
            let raw = f
                .members
                .iter()
                .map(|(m, l)| Ok((m.clone(), poles(m, &s.poles)?, *l)))
                .collect::<Result<Vec<_>, String>>()?;
            let fam = SurfaceFamily::new(raw, params).map_err(err)?;
            let report = bubble_report(&fam).map_err(err)?;
            let record = json!({ "params": params, "report": report });
            w.write_text(&format!("{}.json", s.output), &canonical::to_string(&record).map_err(err)?)?;
        }
    }
    Ok(())
}

fn load_mesh(path: &Path) -> Result<TriMesh, String> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let m = match ext.as_str() {
        "ply" => hypw::surface::io::load_ply(path).map_err(err)?,
        "obj" => read_obj(std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?).map_err(err)?,
        _ => return Err(format!("{}: unsupported mesh format (use .ply or .obj)", path.display())),
    };
    m.validate().map_err(err)?;
    Ok(m)
}

/// Saves a mesh in binary PLY; exposed for the subcommands.
pub fn save_mesh(m: &TriMesh, path: &Path) -> Result<(), String> {
    save_ply(m, path).map_err(err)
}

fn solve(s: &SolveStage, h: Option<f64>) -> Result<(TriMesh, Value), String> {
    match s.problem {
        Problem::Catenoid(CatenoidSpec { r1, r2 }) => {
            let mut opts = RevolutionOptions::default();
            if let Some(h) = h {
                opts.h = h;
            }
            let sol = minimal_revolution(r1, r2, &opts).map_err(err)?;
            let surf = sol.surface.ok_or_else(|| format!("no catenoid spans the circles of radii {r1} and {r2}"))?;
            let sup_h = surf.hyperbolic_mean_curvature().iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let (inner, outer) = hypw::solve::revolution::profile_verticality(&surf.profile, 5);
            let wr = willmore_residual(&Surface::Revolution(surf.clone())).map_err(err)?;
            let mesh = surf.to_mesh().map_err(err)?;
            let record = json!({
                "problem": "catenoid",
                "r1": r1,
                "r2": r2,
                "h": opts.h,
                "neck": sol.neck,
                "sup_h_hyp": sup_h,
                "verticality_inner": inner,
                "verticality_outer": outer,
                "willmore_residual_l2": wr.l2,
                "vertices": mesh.n_vertices(),
            });
            Ok((mesh, record))
        }
        Problem::Graph(GraphSpec { domain, tilt, amplitude, frequency }) => {
            let mut opts = SolveOptions::default();
            if let Some(h) = h {
                opts.h = h;
            }
            if let Some(tol) = s.tol {
                opts.tol = tol;
            }
            let d = match domain {
                DomainSpec::HalfDisc(HalfDiscSpec { radius }) => GraphDomain::HalfDisc { radius },
                DomainSpec::Rectangle(RectangleSpec { x_max, y_half }) => GraphDomain::Rectangle { x_max, y_half },
            };
            let sol = minimal_graph(d, |_, y| tilt * y + amplitude * (frequency * y).cos(), &opts).map_err(err)?;
            let wr = willmore_residual(&Surface::Graph(sol.surface.clone())).map_err(err)?;
            let mesh = sol.surface.to_mesh();
            let record = json!({
                "problem": "graph",
                "domain": domain,
                "h": opts.h,
                "tol": opts.tol,
                "residual": sol.residual,
                "iterations": sol.iterations,
                "willmore_residual_l2": wr.l2,
                "vertices": mesh.n_vertices(),
            });
            Ok((mesh, record))
        }
    }
}

fn analyze(s: &AnalyzeStage, m: &TriMesh, rng: &mut ChaCha8Rng) -> Result<EnergyReport, String> {
    let f = mesh_shape_full(m).map_err(err)?;
    let mut r = EnergyReport::default();
    match willmore_energy(m) {
        Ok(e) => r.energy = Some(e),
        Err(hypw::Error::DivergentEnergy(_)) => r.divergent = true,
        Err(e) => return Err(e.to_string()),
    }
    if let Some(spec) = &s.poles {
        let w = WeightField::new(m, &poles(m, spec)?).map_err(err)?;
        for &p in &s.p {
            r.energy_weighted.insert(p.to_string(), weighted_energy_from(&f, &w, p).map_err(err)?);
        }
    }
    if let Some(eps) = &s.eps {
        r.rena = Some(renormalized_area(m, eps).map_err(err)?);
    }
    if let Some(chi) = s.chi {
        r.chi = Some(chi);
        r.doubling = Some(doubling_identity(&f, chi, s.vertical));
    }
    if let Some(l) = s.local {
        let interior: Vec<usize> = (0..m.n_vertices()).filter(|&v| !m.boundary[v]).collect();
        let adj = m.adjacency();
        let mut picks: Vec<usize> = sample(rng, interior.len(), l.count.min(interior.len())).into_vec();
        picks.sort_unstable();
        for k in picks {
            let p: Point3 = m.vertices[interior[k]];
            let e = local_energy_with_adjacency(&f, m, &adj, &p, l.radius, None);
            r.local.push((p.to_array(), l.radius, e));
        }
    }
    Ok(r)
}

/// Pole vertices of `m` selected by `spec`.
pub fn poles(m: &TriMesh, spec: &PoleSpec) -> Result<PoleSet, String> {
    let interior = (0..m.n_vertices()).filter(|&v| !m.boundary[v]);
    let set = match spec {
        PoleSpec::Rule(PoleRule::Top) => PoleSet::new(vec![interior
            .max_by(|&a, &b| m.vertices[a].x.total_cmp(&m.vertices[b].x))
            .ok_or("mesh has no interior vertex")?]),
        PoleSpec::Near { near } => {
            let d = |v: usize| {
                let p = m.vertices[v];
                (p.x * p.x + (p.y - near[0]).powi(2) + (p.z - near[1]).powi(2)) / p.x
            };
            PoleSet::new(vec![interior.min_by(|&a, &b| d(a).total_cmp(&d(b))).ok_or("mesh has no interior vertex")?])
        }
        PoleSpec::Vertices(v) => PoleSet::new(v.clone()),
    };
    set.validate(m).map_err(err)?;
    Ok(set)
}

fn inferred_spacing(m: &TriMesh) -> Result<f64, String> {
    let c = boundary_curve(m).map_err(err)?;
    Ok(c.mean_spacing() * NORMALIZED_LENGTH / c.length())
}
