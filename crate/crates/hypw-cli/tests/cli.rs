//! End-to-end runs of the `hypw` binary: outputs, manifests, exit codes and
//! determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hypw_cli::Manifest;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn hypw(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hypw"));
    c.args(args).env_remove("HYPW_THREADS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn scenario_file(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn repo_scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn hemisphere_rena_scenario_writes_rena_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o =
        hypw(&["run", repo_scenario("hemisphere-rena.json").to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("rena.json"));
    let rena = r["RenA"].as_f64().unwrap();
    let l = r["L"].as_f64().unwrap();
    assert!((rena + 2.0 * std::f64::consts::PI).abs() <= 0.05, "RenA = {rena}");
    assert!((l / (2.0 * std::f64::consts::PI) - 1.0).abs() <= 0.01, "L = {l}");
    let m = manifest(&out);
    assert_eq!(m.status, "complete");
    let entry = m.artifacts.iter().find(|a| a.path == "rena.json").expect("rena.json listed");
    let bytes = std::fs::read(out.join("rena.json")).unwrap();
    let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(entry.sha256, digest);
}

#[test]
fn unknown_stage_exits_with_code_two_naming_it() {
    let tmp = tempfile::tempdir().unwrap();
    let p = scenario_file(
        tmp.path(),
        r#"{"name":"x","stages":[{"stage":"build","as":"m","surface":{"kind":"hemisphere"}},{"stage":"polish","input":"m"}]}"#,
    );
    let o = hypw(&["run", p.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("\"polish\"") && err.contains("/stages/1/stage"), "{err}");
    assert!(!tmp.path().join("x-out").exists(), "nothing runs before validation passes");
}

#[test]
fn validation_errors_carry_json_pointers() {
    let tmp = tempfile::tempdir().unwrap();
    let p = scenario_file(
        tmp.path(),
        r#"{"name":"x","stages":[{"stage":"solve","as":"c","problem":{"kind":"catenoid"},"formats":["json","png"]}]}"#,
    );
    let o = hypw(&["run", p.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/stages/0/formats/1") && err.contains("json") && err.contains("svg"), "{err}");
}

#[test]
fn scenario_runs_are_deterministic_in_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, seed: &str| {
        let out = tmp.path().join(dir);
        let o = hypw(
            &[
                "run",
                repo_scenario("catenoid-analysis.json").to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                seed,
            ],
            &[],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out.join("manifest.json")).unwrap(), manifest(&out))
    };
    let (a, ma) = run("a", "7");
    let (b, _) = run("b", "7");
    assert_eq!(a, b, "same scenario and seed give byte-identical manifests");
    let (_, mc) = run("c", "8");
    let energy = |m: &Manifest| m.artifacts.iter().find(|e| e.path == "energy.json").unwrap().sha256.clone();
    assert_ne!(energy(&ma), energy(&mc), "the seed drives the sampled local energies");
    let solve = |m: &Manifest| m.artifacts.iter().find(|e| e.path == "solve.json").unwrap().sha256.clone();
    assert_eq!(solve(&ma), solve(&mc), "seed-independent stages are unaffected");
}

#[test]
fn stage_failure_leaves_a_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let p = scenario_file(
        tmp.path(),
        r#"{"name":"partial","output":"out","stages":[
            {"stage":"build","as":"h","surface":{"kind":"hemisphere","h":0.0625},"write_mesh":true},
            {"stage":"solve","as":"c","problem":{"kind":"catenoid","r1":1,"r2":100}}
        ]}"#,
    );
    let o = hypw(&["run", p.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("out"));
    assert_eq!(m.status, "failed");
    let f = m.failure.expect("failure recorded");
    assert_eq!((f.index, f.stage.as_str()), (1, "solve"));
    assert_eq!(m.artifacts.len(), 1);
    assert_eq!(m.artifacts[0].path, "h.ply");
}

#[test]
fn thread_cap_is_read_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("one");
    let o = hypw(&["rena", "--out", out.to_str().unwrap()], &[("HYPW_THREADS", "1")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = hypw(&["rena", "--out", tmp.path().join("bad").to_str().unwrap()], &[("HYPW_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("HYPW_THREADS"));
}

#[test]
fn spacing_flag_overrides_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, extra: &[&str]| {
        let out = tmp.path().join(dir);
        let mut args = vec!["rena", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert!(hypw(&args, &[]).status.success());
        (manifest(&out), read_json(&out.join("rena.json")))
    };
    let (m1, r1) = run("fine", &[]);
    let (m2, r2) = run("coarse", &["--h", "0.0625"]);
    assert_ne!(m1.scenario_sha256, m2.scenario_sha256);
    assert_ne!(r1["L"], r2["L"]);
}

#[test]
fn solve_subcommand_emits_numbers_with_every_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("graph");
    let o = hypw(
        &[
            "solve",
            "graph",
            "--domain",
            "rectangle:1,1",
            "--tilt",
            "0.2",
            "--refine",
            "0.25,0.125",
            "--format",
            "svg",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(out.join("solve-residual.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let csv = std::fs::read_to_string(out.join("solve-residual.csv")).unwrap();
    assert!(csv.starts_with("h,residual\r\n"));
    assert_eq!(csv.lines().count(), 3);
    let rec = read_json(&out.join("solve.json"));
    assert!(rec["residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn analyze_subcommand_reads_a_mesh_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = tmp.path().join("hemi.ply");
    let m = hypw::surface::RevolutionSurface::hemisphere(num_complex::Complex64::new(0.0, 0.0), 1.0, 1.0 / 32.0)
        .unwrap()
        .to_mesh()
        .unwrap();
    hypw_cli::run::save_mesh(&m, &mesh).unwrap();
    let out = tmp.path().join("an");
    let o = hypw(
        &[
            "analyze",
            mesh.to_str().unwrap(),
            "--poles",
            "top",
            "--p",
            "1.5,2",
            "--chi",
            "1",
            "--format",
            "json,csv",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: hypw::functionals::EnergyReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("energy.json")).unwrap()).unwrap();
    assert!(r.energy.unwrap() < 1e-3);
    assert_eq!(r.energy_weighted.len(), 2);
    let d = r.doubling.unwrap();
    // Boundary samples are excluded, so the integral is short by O(h).
    assert!((d.lhs / (4.0 * std::f64::consts::PI) - 1.0).abs() < 0.05, "{d:?}");
    let csv = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(csv.starts_with(hypw::functionals::EnergyReport::CSV_HEADER));
}
