//! Scenario files: a named list of stages that build surfaces, transform
//! them and analyze them, with every output written below one directory.
//!
//! Validation happens before anything runs.  Errors carry a JSON pointer to
//! the offending value.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::export::Format;
use crate::CliError;

/// Names accepted in the `stage` field, in pipeline order.
pub const STAGE_NAMES: [&str; 7] = ["build", "solve", "glue", "transform", "analyze", "rena", "bubble-scan"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// Output directory; relative paths resolve against `base_dir`.
    pub output: Option<PathBuf>,
    pub stages: Vec<Stage>,
    /// Directory of the scenario file (or the working directory).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum Stage {
    Build(BuildStage),
    Solve(SolveStage),
    Glue(GlueStage),
    Transform(TransformStage),
    Analyze(AnalyzeStage),
    Rena(RenaStage),
    BubbleScan(BubbleStage),
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Build(_) => "build",
            Stage::Solve(_) => "solve",
            Stage::Glue(_) => "glue",
            Stage::Transform(_) => "transform",
            Stage::Analyze(_) => "analyze",
            Stage::Rena(_) => "rena",
            Stage::BubbleScan(_) => "bubble-scan",
        }
    }

    /// Artifact consumed by the stage.
    pub fn input(&self) -> Option<&str> {
        match self {
            Stage::Transform(s) => Some(&s.input),
            Stage::Analyze(s) => Some(&s.input),
            Stage::Rena(s) => Some(&s.input),
            Stage::BubbleScan(s) => Some(&s.input),
            _ => None,
        }
    }

    /// Artifact declared by the stage.
    pub fn declares(&self) -> Option<&str> {
        match self {
            Stage::Build(s) => Some(&s.name),
            Stage::Solve(s) => Some(&s.name),
            Stage::Glue(s) => Some(&s.name),
            Stage::Transform(s) => Some(&s.name),
            _ => None,
        }
    }

    /// Output file stem, when the stage writes reports.
    pub fn output(&self) -> Option<&str> {
        match self {
            Stage::Build(_) | Stage::Transform(_) => None,
            Stage::Solve(s) => Some(&s.output),
            Stage::Glue(s) => Some(&s.output),
            Stage::Analyze(s) => Some(&s.output),
            Stage::Rena(s) => Some(&s.output),
            Stage::BubbleScan(s) => Some(&s.output),
        }
    }
}

fn default_radius() -> f64 {
    1.0
}
fn default_one() -> f64 {
    1.0
}
fn default_two() -> f64 {
    2.0
}
fn default_alpha0() -> f64 {
    0.05
}
fn default_zeta() -> f64 {
    0.05
}
fn default_p() -> f64 {
    1.5
}
fn default_eps() -> Vec<f64> {
    vec![0.1, 0.05, 0.02, 0.01]
}
fn default_json() -> Vec<Format> {
    vec![Format::Json]
}
fn default_all() -> Vec<Format> {
    Format::ALL.to_vec()
}

/// Adds a default output stem to each report-writing stage.
macro_rules! stem {
    ($f:ident, $s:literal) => {
        fn $f() -> String {
            $s.to_string()
        }
    };
}
stem!(out_solve, "solve");
stem!(out_glue, "glue");
stem!(out_energy, "energy");
stem!(out_rena, "rena");
stem!(out_bubble, "bubble");

/// `build`: a surface given in closed form or loaded from a mesh file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildStage {
    #[serde(rename = "as")]
    pub name: String,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub write_mesh: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurfaceSpec {
    /// Totally geodesic hemisphere over a circle at infinity.
    Hemisphere(HemisphereSpec),
    /// PLY or OBJ file, chosen by extension.
    Mesh(MeshSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HemisphereSpec {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub center: [f64; 2],
    /// Sample spacing; defaults to `radius / 32`.
    #[serde(default)]
    pub h: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub path: PathBuf,
}

/// `solve`: a minimal surface from a boundary-value problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveStage {
    #[serde(rename = "as")]
    pub name: String,
    pub problem: Problem,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Extra spacings for a residual-vs-h table.
    #[serde(default)]
    pub refine: Vec<f64>,
    #[serde(default = "out_solve")]
    pub output: String,
    #[serde(default = "default_json")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub write_mesh: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Problem {
    /// Catenoid between concentric circles of radii `r1 ≤ r2`.
    Catenoid(CatenoidSpec),
    /// Minimal graph `z = u(x, y)` with data `tilt·y + amplitude·cos(frequency·y)`.
    Graph(GraphSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatenoidSpec {
    #[serde(default = "default_one")]
    pub r1: f64,
    #[serde(default = "default_two")]
    pub r2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub domain: DomainSpec,
    #[serde(default)]
    pub tilt: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_one")]
    pub frequency: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum DomainSpec {
    HalfDisc(HalfDiscSpec),
    Rectangle(RectangleSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfDiscSpec {
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangleSpec {
    pub x_max: f64,
    pub y_half: f64,
}

// Internally tagged enums buffer their content, which loses the position of
// errors inside it; these deserializers keep it.
macro_rules! tagged_deserialize {
    ($ty:ident, $tag:literal, { $($name:literal => $variant:ident),* $(,)? }) => {
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let v = Value::deserialize(d)?;
                let Value::Object(mut body) = v else {
                    return Err(serde::de::Error::custom("expected an object"));
                };
                let kind = match body.remove($tag) {
                    Some(Value::String(k)) => k,
                    Some(_) => return Err(nested(&format!("/{}", $tag), "expected a string")),
                    None => return Err(nested(&format!("/{}", $tag), "missing required field")),
                };
                let body = Value::Object(body);
                match kind.as_str() {
                    $($name => inner(&body).map($ty::$variant),)*
                    other => Err(nested(
                        &format!("/{}", $tag),
                        &format!("unknown {} \"{other}\" (expected one of: {})", $tag, [$($name),*].join(", ")),
                    )),
                }
            }
        }
    };
}

tagged_deserialize!(SurfaceSpec, "kind", { "hemisphere" => Hemisphere, "mesh" => Mesh });
tagged_deserialize!(Problem, "kind", { "catenoid" => Catenoid, "graph" => Graph });
tagged_deserialize!(DomainSpec, "shape", { "half-disc" => HalfDisc, "rectangle" => Rectangle });

/// Marks an error message with the pointer of its position below the value
/// being deserialized; [`locate`] unpacks it.
const NESTED: char = '\u{1}';

fn nested<E: serde::de::Error>(pointer: &str, message: &str) -> E {
    E::custom(format!("{NESTED}{pointer}{NESTED}{message}"))
}

fn inner<T: for<'de> Deserialize<'de>, E: serde::de::Error>(body: &Value) -> Result<T, E> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let (p, m) = locate("", &e);
        nested(&p, &m)
    })
}

/// Pointer (below `prefix`) and message of a deserialization error.
fn locate(prefix: &str, e: &serde_path_to_error::Error<serde_json::Error>) -> (String, String) {
    let mut pointer = pointer_from(prefix, e.path());
    let mut message = e.inner().to_string();
    if let Some(rest) = message.strip_prefix(NESTED) {
        if let Some((p, m)) = rest.split_once(NESTED) {
            pointer.push_str(p);
            // serde_json appends the position of the buffered value; it is
            // meaningless for a scenario file.
            message = strip_position(m).to_string();
        }
    }
    (pointer, message)
}

fn strip_position(m: &str) -> &str {
    match m.rfind(" at line ") {
        Some(k) => &m[..k],
        None => m,
    }
}

/// `glue`: a catenoid grafted onto the unit hemisphere for each `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueStage {
    #[serde(rename = "as")]
    pub name: String,
    pub t: Vec<f64>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "default_alpha0")]
    pub alpha0: f64,
    #[serde(default = "out_glue")]
    pub output: String,
    #[serde(default = "default_all")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub write_mesh: bool,
}

/// `transform`: applies `inversion? ∘ dilation ∘ rotation ∘ translation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformStage {
    pub input: String,
    #[serde(rename = "as")]
    pub name: String,
    #[serde(default)]
    pub translation: [f64; 2],
    #[serde(default)]
    pub rotation: f64,
    #[serde(default = "default_one")]
    pub dilation: f64,
    #[serde(default)]
    pub inversion: bool,
}

/// Pole selection.  `"top"` picks the highest vertex, `{"near": [y, z]}` the
/// interior vertex closest to a boundary point, an array lists vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoleSpec {
    Rule(PoleRule),
    Near { near: [f64; 2] },
    Vertices(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoleRule {
    Top,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSpec {
    /// Number of interior vertices drawn with the scenario seed.
    pub count: usize,
    pub radius: f64,
}

/// `analyze`: energy report of a mesh or of every member of a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeStage {
    pub input: String,
    #[serde(default)]
    pub poles: Option<PoleSpec>,
    /// Exponents of the weighted energy (requires `poles`).
    #[serde(default)]
    pub p: Vec<f64>,
    /// Euler characteristic; enables the doubling identity.
    #[serde(default)]
    pub chi: Option<i32>,
    /// Verticality verdict passed to the doubling identity.
    #[serde(default = "default_true")]
    pub vertical: bool,
    /// Truncation levels for a renormalized-area fit.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default)]
    pub local: Option<LocalSpec>,
    #[serde(default = "out_energy")]
    pub output: String,
    #[serde(default = "default_json")]
    pub formats: Vec<Format>,
}

fn default_true() -> bool {
    true
}

/// `rena`: renormalized-area fit of a minimal surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenaStage {
    pub input: String,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// Euler characteristic for the closed-form prediction.
    #[serde(default)]
    pub chi: Option<i32>,
    #[serde(default = "out_rena")]
    pub output: String,
}

/// `bubble-scan`: concentration scan, blow-ups and pole distances of a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleStage {
    pub input: String,
    pub poles: PoleSpec,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_alpha0")]
    pub alpha0: f64,
    /// Member grid spacing in normalized units; inferred when absent.
    #[serde(default)]
    pub spacing: Option<f64>,
    #[serde(default = "out_bubble")]
    pub output: String,
}

/// Command-line values that take precedence over scenario fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub h: Option<f64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn invalid(pointer: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Validation { pointer: pointer.into(), message: message.into() }
}

fn pointer_from(prefix: &str, path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut p = prefix.to_string();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => p.push_str(&format!("/{index}")),
            Segment::Map { key } => p.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    p
}

impl Scenario {
    /// Reads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid("", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::parse(&text, &base)
    }

    /// Parses and validates scenario text.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Scenario, CliError> {
        let v: Value = serde_json::from_str(text).map_err(|e| invalid("", format!("not valid JSON: {e}")))?;
        Scenario::from_value(&v, base_dir)
    }

    pub fn from_value(v: &Value, base_dir: &Path) -> Result<Scenario, CliError> {
        let obj = v.as_object().ok_or_else(|| invalid("", "scenario must be a JSON object"))?;
        for key in obj.keys() {
            if !["name", "seed", "output", "stages"].contains(&key.as_str()) {
                return Err(invalid(format!("/{key}"), "unknown field"));
            }
        }
        let name = match obj.get("name") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(_) => return Err(invalid("/name", "expected a non-empty string")),
            None => return Err(invalid("/name", "missing required field")),
        };
        let seed = match obj.get("seed") {
            None => 0,
            Some(s) => s.as_u64().ok_or_else(|| invalid("/seed", "expected a non-negative integer"))?,
        };
        let output = match obj.get("output") {
            None => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(invalid("/output", "expected a string")),
        };
        let raw = match obj.get("stages") {
            Some(Value::Array(a)) if !a.is_empty() => a,
            Some(_) => return Err(invalid("/stages", "expected a non-empty array")),
            None => return Err(invalid("/stages", "missing required field")),
        };
        let stages = raw.iter().enumerate().map(|(i, s)| parse_stage(i, s)).collect::<Result<Vec<_>, _>>()?;
        let sc = Scenario { name, seed, output, stages, base_dir: base_dir.to_path_buf() };
        sc.validate()?;
        Ok(sc)
    }

    /// Cross-stage checks: artifact references, kinds, duplicate outputs and
    /// parameter ranges.
    pub fn validate(&self) -> Result<(), CliError> {
        #[derive(PartialEq, Clone, Copy)]
        enum Kind {
            Mesh,
            Family,
        }
        let mut declared: Vec<(String, Kind)> = Vec::new();
        let mut outputs = BTreeSet::new();
        for (i, stage) in self.stages.iter().enumerate() {
            let at = |field: &str| format!("/stages/{i}/{field}");
            let kind_of = |name: &str| declared.iter().rev().find(|(n, _)| n == name).map(|&(_, k)| k);
            let input_kind = match stage.input() {
                Some(inp) => Some(kind_of(inp).ok_or_else(|| {
                    invalid(at("input"), format!("artifact \"{inp}\" is not declared by an earlier stage"))
                })?),
                None => None,
            };
            let positive = |field: &str, x: f64| {
                if x > 0.0 && x.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(at(field), format!("must be positive, got {x}")))
                }
            };
            let eps_ok = |field: &str, eps: &[f64]| {
                if eps.len() < 4 {
                    return Err(invalid(at(field), "needs at least 4 truncation levels"));
                }
                for (k, &e) in eps.iter().enumerate() {
                    if !(e > 0.0 && e < 1.0) {
                        return Err(invalid(
                            format!("/stages/{i}/{field}/{k}"),
                            format!("truncation level must lie in (0, 1), got {e}"),
                        ));
                    }
                }
                Ok(())
            };
            let declares = match stage {
                Stage::Build(s) => {
                    if let SurfaceSpec::Hemisphere(HemisphereSpec { radius, h, .. }) = &s.surface {
                        positive("surface/radius", *radius)?;
                        if let Some(h) = h {
                            positive("surface/h", *h)?;
                        }
                    }
                    Kind::Mesh
                }
                Stage::Solve(s) => {
                    if let Some(h) = s.h {
                        positive("h", h)?;
                    }
                    if let Some(t) = s.tol {
                        positive("tol", t)?;
                    }
                    for (k, &h) in s.refine.iter().enumerate() {
                        positive(&format!("refine/{k}"), h)?;
                    }
                    if let Problem::Catenoid(CatenoidSpec { r1, r2 }) = s.problem {
                        positive("problem/r1", r1)?;
                        if !(r2 >= r1) {
                            return Err(invalid(at("problem/r2"), format!("need r2 ≥ r1, got {r2} < {r1}")));
                        }
                    }
                    Kind::Mesh
                }
                Stage::Glue(s) => {
                    if s.t.is_empty() {
                        return Err(invalid(at("t"), "needs at least one dilation parameter"));
                    }
                    if let Some(h) = s.h {
                        positive("h", h)?;
                    }
                    if let Some(t) = s.tol {
                        positive("tol", t)?;
                    }
                    positive("alpha0", s.alpha0)?;
                    Kind::Family
                }
                Stage::Transform(s) => {
                    positive("dilation", s.dilation)?;
                    input_kind.expect("transform has an input")
                }
                Stage::Analyze(s) => {
                    if !s.p.is_empty() && s.poles.is_none() {
                        return Err(invalid(at("poles"), "weighted energies need a pole set"));
                    }
                    for (k, &p) in s.p.iter().enumerate() {
                        if !(p > 1.0) {
                            return Err(invalid(
                                format!("/stages/{i}/p/{k}"),
                                format!("exponent must exceed 1, got {p}"),
                            ));
                        }
                    }
                    if let Some(eps) = &s.eps {
                        eps_ok("eps", eps)?;
                    }
                    if let Some(l) = &s.local {
                        positive("local/radius", l.radius)?;
                    }
                    Kind::Mesh
                }
                Stage::Rena(s) => {
                    eps_ok("eps", &s.eps)?;
                    if input_kind != Some(Kind::Mesh) {
                        return Err(invalid(at("input"), "rena needs a single surface, not a family"));
                    }
                    Kind::Mesh
                }
                Stage::BubbleScan(s) => {
                    if input_kind != Some(Kind::Family) {
                        return Err(invalid(at("input"), "bubble-scan needs a family artifact (from glue)"));
                    }
                    if !(s.p > 1.0) {
                        return Err(invalid(at("p"), format!("exponent must exceed 1, got {}", s.p)));
                    }
                    positive("zeta", s.zeta)?;
                    positive("alpha0", s.alpha0)?;
                    if let Some(h) = s.spacing {
                        positive("spacing", h)?;
                    }
                    Kind::Family
                }
            };
            if let Some(name) = stage.declares() {
                if name.is_empty() {
                    return Err(invalid(at("as"), "artifact name must be non-empty"));
                }
                declared.push((name.to_string(), declares));
            }
            if let Some(out) = stage.output() {
                if out.is_empty() || out.contains(['/', '\\']) || out.starts_with('.') {
                    return Err(invalid(at("output"), "output stem must be a plain file name"));
                }
                if !outputs.insert(out.to_string()) {
                    return Err(invalid(at("output"), format!("output \"{out}\" is written by an earlier stage")));
                }
            }
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn apply(&mut self, o: &Overrides) {
        for stage in &mut self.stages {
            match stage {
                Stage::Build(s) => {
                    if let (SurfaceSpec::Hemisphere(HemisphereSpec { h, .. }), Some(v)) = (&mut s.surface, o.h) {
                        *h = Some(v);
                    }
                }
                Stage::Solve(s) => {
                    s.h = o.h.or(s.h);
                    s.tol = o.tol.or(s.tol);
                }
                Stage::Glue(s) => {
                    s.h = o.h.or(s.h);
                    s.tol = o.tol.or(s.tol);
                }
                _ => {}
            }
        }
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
    }

    /// Resolved output directory.
    pub fn output_dir(&self) -> PathBuf {
        match &self.output {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => self.base_dir.join(p),
            None => self.base_dir.join(format!("{}-out", self.name)),
        }
    }

    /// The scenario as canonical JSON (stage defaults filled in).
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("scenario serializes")
    }
}

fn parse_stage(i: usize, v: &Value) -> Result<Stage, CliError> {
    let at = format!("/stages/{i}");
    let obj = v.as_object().ok_or_else(|| invalid(at.clone(), "stage must be a JSON object"))?;
    let name = match obj.get("stage") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(invalid(format!("{at}/stage"), "expected a string")),
        None => return Err(invalid(format!("{at}/stage"), "missing required field")),
    };
    let mut body: Map<String, Value> = obj.clone();
    body.remove("stage");
    let body = Value::Object(body);
    fn de<T: for<'de> Deserialize<'de>>(at: &str, body: &Value) -> Result<T, CliError> {
        serde_path_to_error::deserialize(body).map_err(|e| {
            let (p, m) = locate(at, &e);
            invalid(p, m)
        })
    }
    Ok(match name.as_str() {
        "build" => Stage::Build(de(&at, &body)?),
        "solve" => Stage::Solve(de(&at, &body)?),
        "glue" => Stage::Glue(de(&at, &body)?),
        "transform" => Stage::Transform(de(&at, &body)?),
        "analyze" => Stage::Analyze(de(&at, &body)?),
        "rena" => Stage::Rena(de(&at, &body)?),
        "bubble-scan" => Stage::BubbleScan(de(&at, &body)?),
        _ => return Err(CliError::UnknownStage { pointer: format!("{at}/stage"), name }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Scenario, CliError> {
        Scenario::parse(s, Path::new("."))
    }

    #[test]
    fn defaults_are_filled_in() {
        let s = parse(r#"{"name":"x","stages":[{"stage":"build","as":"m","surface":{"kind":"hemisphere"}},{"stage":"rena","input":"m"}]}"#).unwrap();
        assert_eq!(s.seed, 0);
        match &s.stages[1] {
            Stage::Rena(r) => {
                assert_eq!(r.eps, vec![0.1, 0.05, 0.02, 0.01]);
                assert_eq!(r.output, "rena");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_stage_is_named() {
        let e = parse(r#"{"name":"x","stages":[{"stage":"smooth"}]}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("smooth") && e.to_string().contains("/stages/0/stage"), "{e}");
    }

    #[test]
    fn field_errors_carry_json_pointers() {
        let e = parse(
            r#"{"name":"x","stages":[{"stage":"build","as":"m","surface":{"kind":"hemisphere","radius":"big"}}]}"#,
        )
        .unwrap_err();
        assert!(e.to_string().starts_with("/stages/0/surface/radius"), "{e}");
        let e = parse(r#"{"name":"x","stages":[{"stage":"build","as":"m","surface":{"kind":"hemisphere"}},{"stage":"rena","input":"m","eps":[0.1,0.05,0.02,-1]}]}"#).unwrap_err();
        assert!(e.to_string().starts_with("/stages/1/eps/3"), "{e}");
        let e = parse(r#"{"name":"x","stages":[{"stage":"solve","as":"g","problem":{"kind":"graph","domain":{"shape":"rectangle","x_max":1}}}]}"#).unwrap_err();
        assert!(e.to_string().starts_with("/stages/0/problem/domain: missing field `y_half`"), "{e}");
        let e = parse(r#"{"name":"x","stages":[{"stage":"build","as":"m","surface":{"kind":"torus"}}]}"#).unwrap_err();
        assert!(e.to_string().starts_with("/stages/0/surface/kind") && e.to_string().contains("torus"), "{e}");
        let e = parse(r#"{"name":"x","stages":[{"stage":"rena","input":"nothing"}]}"#).unwrap_err();
        assert!(e.to_string().starts_with("/stages/0/input"), "{e}");
        let e = parse(r#"{"name":"x","stages":[{"stage":"glue","as":"f","t":[3],"colour":1}]}"#).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let e = parse(r#"{"name":"x","seed":-1,"stages":[]}"#).unwrap_err();
        assert!(e.to_string().starts_with("/seed"), "{e}");
    }

    #[test]
    fn bubble_scan_requires_a_family() {
        let e = parse(r#"{"name":"x","stages":[{"stage":"build","as":"m","surface":{"kind":"hemisphere"}},{"stage":"bubble-scan","input":"m","poles":"top"}]}"#).unwrap_err();
        assert!(e.to_string().starts_with("/stages/1/input"), "{e}");
    }

    #[test]
    fn overrides_replace_spacing_and_output() {
        let mut s = parse(r#"{"name":"x","stages":[{"stage":"glue","as":"f","t":[3],"h":0.1}]}"#).unwrap();
        s.apply(&Overrides { h: Some(0.05), out: Some("elsewhere".into()), ..Default::default() });
        match &s.stages[0] {
            Stage::Glue(g) => assert_eq!(g.h, Some(0.05)),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.output_dir(), PathBuf::from("./elsewhere"));
    }

    #[test]
    fn pole_specs_parse_in_all_forms() {
        for (txt, want) in [
            (r#""top""#, PoleSpec::Rule(PoleRule::Top)),
            (r#"{"near":[1,0]}"#, PoleSpec::Near { near: [1.0, 0.0] }),
            ("[3,4]", PoleSpec::Vertices(vec![3, 4])),
        ] {
            assert_eq!(serde_json::from_str::<PoleSpec>(txt).unwrap(), want);
        }
    }
}
