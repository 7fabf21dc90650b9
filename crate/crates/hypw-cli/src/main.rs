use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypw_cli::{configure_threads, run_scenario, CliError, Overrides, Scenario};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hypw", version, about = "Minimal and Willmore surfaces in hyperbolic 3-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Grid spacing (overrides every stage that has one).
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Solver tolerance (overrides every stage that has one).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Energy report of a mesh (PLY or OBJ).
    Analyze {
        mesh: PathBuf,
        /// `top`, `near:Y,Z` or a comma-separated vertex list.
        #[arg(long)]
        poles: Option<String>,
        /// Exponents of the weighted energy.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// Euler characteristic (enables the doubling identity).
        #[arg(long)]
        chi: Option<i32>,
        /// Truncation levels for a renormalized-area fit.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', default_value = "json")]
        format: Vec<String>,
    },
    /// Solve a minimal catenoid or minimal graph.
    Solve {
        #[command(subcommand)]
        problem: SolveProblem,
        /// Extra spacings for a residual-vs-h table.
        #[arg(long, value_delimiter = ',', global = true)]
        refine: Vec<f64>,
        #[arg(long, global = true)]
        write_mesh: bool,
        #[arg(long, value_delimiter = ',', default_value = "json,csv,svg", global = true)]
        format: Vec<String>,
    },
    /// Graft a catenoid onto the unit hemisphere for each t.
    Glue {
        #[arg(long, value_delimiter = ',', default_value = "3,3.5,4,4.5")]
        t: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        alpha0: f64,
        #[arg(long)]
        write_mesh: bool,
        #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
        format: Vec<String>,
    },
    /// Glue a family and run the bubble analysis on it.
    BubbleScan {
        #[arg(long, value_delimiter = ',', default_value = "3,3.5,4,4.5")]
        t: Vec<f64>,
        /// `top`, `near:Y,Z` or a comma-separated vertex list.
        #[arg(long, default_value = "near:1,0")]
        poles: String,
        #[arg(long, default_value_t = 1.5)]
        p: f64,
        #[arg(long)]
        spacing: Option<f64>,
    },
    /// Renormalized area of a mesh, or of the unit hemisphere when no mesh is given.
    Rena {
        mesh: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.02,0.01")]
        eps: Vec<f64>,
        #[arg(long)]
        chi: Option<i32>,
    },
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum SolveProblem {
    /// Catenoid between the circles of radii r1 ≤ r2.
    Catenoid {
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 2.0)]
        r2: f64,
    },
    /// Graph over a half-disc or rectangle with data tilt·y + amplitude·cos(frequency·y).
    Graph {
        /// `half-disc:R` or `rectangle:XMAX,YHALF`.
        #[arg(long, default_value = "half-disc:1")]
        domain: String,
        #[arg(long, default_value_t = 0.0)]
        tilt: f64,
        #[arg(long, default_value_t = 0.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        frequency: f64,
    },
}

fn parse_poles(s: &str) -> Result<Value, String> {
    if s == "top" {
        return Ok(json!("top"));
    }
    if let Some(rest) = s.strip_prefix("near:") {
        let v: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("--poles {s}: {e}"))?;
        if v.len() != 2 {
            return Err(format!("--poles {s}: expected near:Y,Z"));
        }
        return Ok(json!({ "near": v }));
    }
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("--poles {s}: {e}"))?;
    Ok(json!(v))
}

fn parse_domain(s: &str) -> Result<Value, String> {
    let bad = || format!("--domain {s}: expected half-disc:R or rectangle:XMAX,YHALF");
    let (shape, rest) = s.split_once(':').ok_or_else(bad)?;
    let v: Vec<f64> = rest.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    match (shape, v.as_slice()) {
        ("half-disc", [r]) => Ok(json!({ "shape": "half-disc", "radius": r })),
        ("rectangle", [x, y]) => Ok(json!({ "shape": "rectangle", "x_max": x, "y_half": y })),
        _ => Err(bad()),
    }
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
    }
}

/// The subcommand as a scenario value, with the scenario's base directory.
fn scenario_for(cmd: &Command) -> Result<(Value, PathBuf), String> {
    let cwd = std::env::current_dir().map_err(|e| e.to_string())?;
    let one = |name: &str, stages: Vec<Value>| json!({ "name": name, "output": format!("hypw-out/{name}"), "stages": stages });
    let v = match cmd {
        Command::Analyze { mesh, poles, p, chi, eps, format } => {
            let mut a = json!({ "stage": "analyze", "input": "mesh", "p": p, "formats": format });
            if let Some(s) = poles {
                a["poles"] = parse_poles(s)?;
            }
            if let Some(c) = chi {
                a["chi"] = json!(c);
            }
            if let Some(e) = eps {
                a["eps"] = json!(e);
            }
            one(
                "analyze",
                vec![
                    json!({ "stage": "build", "as": "mesh", "surface": { "kind": "mesh", "path": absolute(mesh) } }),
                    a,
                ],
            )
        }
        Command::Solve { problem, refine, write_mesh, format } => {
            let problem = match problem {
                SolveProblem::Catenoid { r1, r2 } => json!({ "kind": "catenoid", "r1": r1, "r2": r2 }),
                SolveProblem::Graph { domain, tilt, amplitude, frequency } => json!({
                    "kind": "graph", "domain": parse_domain(domain)?, "tilt": tilt, "amplitude": amplitude, "frequency": frequency
                }),
            };
            one(
                "solve",
                vec![
                    json!({ "stage": "solve", "as": "surface", "problem": problem, "refine": refine, "write_mesh": write_mesh, "formats": format }),
                ],
            )
        }
        Command::Glue { t, alpha0, write_mesh, format } => one(
            "glue",
            vec![
                json!({ "stage": "glue", "as": "family", "t": t, "alpha0": alpha0, "write_mesh": write_mesh, "formats": format }),
            ],
        ),
        Command::BubbleScan { t, poles, p, spacing } => {
            let mut b = json!({ "stage": "bubble-scan", "input": "family", "poles": parse_poles(poles)?, "p": p });
            if let Some(h) = spacing {
                b["spacing"] = json!(h);
            }
            one("bubble-scan", vec![json!({ "stage": "glue", "as": "family", "t": t, "formats": ["json"] }), b])
        }
        Command::Rena { mesh, eps, chi } => {
            let surface = match mesh {
                Some(m) => json!({ "kind": "mesh", "path": absolute(m) }),
                None => json!({ "kind": "hemisphere", "radius": 1.0, "h": 1.0 / 128.0 }),
            };
            let chi = chi.or(mesh.is_none().then_some(1));
            one(
                "rena",
                vec![
                    json!({ "stage": "build", "as": "surface", "surface": surface }),
                    json!({ "stage": "rena", "input": "surface", "eps": eps, "chi": chi }),
                ],
            )
        }
        Command::Run { .. } => unreachable!("handled separately"),
    };
    Ok((v, cwd))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let loaded = match &cli.command {
        Command::Run { scenario, .. } => Scenario::load(scenario),
        cmd => match scenario_for(cmd) {
            Ok((v, base)) => Scenario::from_value(&v, &base),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
    };
    let mut sc = match loaded {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let seed = match &cli.command {
        Command::Run { seed, .. } => *seed,
        _ => None,
    };
    let overrides =
        Overrides { h: cli.common.h, tol: cli.common.tol, out: cli.common.out.as_deref().map(absolute), seed };
    sc.apply(&overrides);
    // Overridden values are range-checked like scenario values.
    if let Err(e) = sc.validate() {
        return fail(e);
    }
    let dir = sc.output_dir();
    match run_scenario(&sc) {
        Ok(m) => {
            for a in &m.artifacts {
                println!("{}  {}", a.sha256, dir.join(&a.path).display());
            }
            println!("manifest: {}", dir.join(hypw_cli::run::MANIFEST).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("partial manifest: {}", dir.join(hypw_cli::run::MANIFEST).display());
            fail(e)
        }
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
