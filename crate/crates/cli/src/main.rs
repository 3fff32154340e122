use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use spirosnap::continuation::SolverSettings;
use spirosnap::error::Error;
use spirosnap::geometry::{arc_length, bounding_box, generate_layout, layout_svg, MetabeamSpec, SnapStructureLayout, StructureSpec};
use spirosnap::io::{read_json, write_atomic, write_json};
use spirosnap::pipeline::{self, TraceRun};
use spirosnap::robot::{mode_kinematics, simulate_with, RobotMode, RobotSpec};
use spirosnap::scenario::{builtin_labels, canonical_label, Scenario};
use spirosnap::verify::run_oracles;

const OK: u8 = 0;
const FAILED: u8 = 1;
const PARTIAL: u8 = 2;
const CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "spirosnap", version, about = "Snapping spiral metabeam simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the structure layout as JSON and SVG.
    Generate(GenerateArgs),
    /// Trace equilibrium paths.
    Trace(TraceArgs),
    /// Emulate the loading cycle of traced paths and classify them.
    Analyze(AnalyzeArgs),
    /// Swim the robot in one or both actuation modes.
    Robot(RobotArgs),
    /// Run the analytic oracle suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Output {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON with optional `metabeam` and `structure` objects.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of unit cells per metabeam.
    #[arg(long)]
    cells: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Labels {
    /// Scenario labels; `all` expands to every builtin.
    labels: Vec<String>,
    #[arg(long = "scenario")]
    scenario: Vec<String>,
}

impl Labels {
    fn resolve(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in self.labels.iter().chain(&self.scenario) {
            if l == "all" {
                out.extend(builtin_labels().iter().map(|s| s.to_string()));
            } else {
                out.push(l.clone());
            }
        }
        out.dedup();
        out
    }
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    labels: Labels,
    /// Scenario config JSON; traced in addition to any labels.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Crosshead travel, mm.
    #[arg(long)]
    stroke: Option<f64>,
    /// Target element length, mm.
    #[arg(long = "elem-len")]
    elem_len: Option<f64>,
    /// Young's modulus, MPa.
    #[arg(long = "E")]
    youngs_modulus: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    labels: Labels,
    /// Directory holding the trace artifacts; outputs go there too.
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RobotArgs {
    /// Run a single mode; both by default.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    cycles: Option<usize>,
    /// Robot spec JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Solver settings JSON.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Specification(_) | Error::Domain(_) | Error::GeometryInfeasible(_) | Error::Json(_)
    )
}

fn fail(e: &Error, code_for_other: u8) -> u8 {
    eprintln!("error: {e}");
    if config_error(e) {
        CONFIG
    } else {
        code_for_other
    }
}

fn ensure_dir(dir: &Path) -> Result<(), u8> {
    std::fs::create_dir_all(dir).map_err(|e| {
        eprintln!("error: cannot create {}: {e}", dir.display());
        CONFIG
    })
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryConfig {
    metabeam: Option<MetabeamSpec>,
    structure: Option<StructureSpec>,
}

#[derive(Serialize)]
struct LayoutArtifact<'a> {
    version: &'a str,
    config: &'a GeometryConfig,
    layout: &'a SnapStructureLayout,
}

fn generate(args: &GenerateArgs) -> u8 {
    let mut cfg: GeometryConfig = match &args.config {
        Some(p) => match read_json(p) {
            Ok(c) => c,
            Err(e) => return fail(&e, CONFIG),
        },
        None => GeometryConfig::default(),
    };
    let mut metabeam = cfg.metabeam.clone().unwrap_or_default();
    if let Some(n) = args.cells {
        let base = MetabeamSpec::default();
        metabeam.total_length = base.total_length * n as f64 / base.cell_count as f64;
        metabeam.cell_count = n;
    }
    cfg.metabeam = Some(metabeam);
    cfg.structure = Some(cfg.structure.clone().unwrap_or_default());
    let layout = match generate_layout(cfg.metabeam.as_ref().unwrap(), cfg.structure.as_ref().unwrap()) {
        Ok(l) => l,
        Err(e) => return fail(&e, CONFIG),
    };
    if let Err(code) = ensure_dir(&args.output.out) {
        return code;
    }
    let json = args.output.out.join("layout.json");
    let svg = args.output.out.join("layout.svg");
    let art = LayoutArtifact { version: spirosnap::VERSION, config: &cfg, layout: &layout };
    let written = write_json(&json, &art).and_then(|_| layout_svg(&layout)).and_then(|s| write_atomic(&svg, s.as_bytes()));
    if let Err(e) = written {
        return fail(&e, FAILED);
    }
    let mut all = layout.left_beam.clone();
    all.extend_from_slice(&layout.right_beam);
    all.push(layout.apex_block.tip);
    let [lo, hi] = bounding_box(&all);
    println!(
        "layout: {} cells per beam, beam arc length {:.3} mm, bounding box [{:.3}, {:.3}] x [{:.3}, {:.3}] mm",
        layout.metabeam.cell_count,
        arc_length(&layout.left_beam),
        lo[0],
        hi[0],
        lo[1],
        hi[1]
    );
    println!("wrote {} and {}", json.display(), svg.display());
    OK
}

fn trace(args: &TraceArgs) -> u8 {
    let mut jobs: Vec<Result<Scenario, Error>> = Vec::new();
    let mut truss = false;
    for l in args.labels.resolve() {
        if pipeline::slug(&l) == pipeline::TRUSS_LABEL {
            truss = true;
            continue;
        }
        match canonical_label(&l) {
            Some(c) => jobs.push(spirosnap::scenario::resolve_builtin(c)),
            None => {
                eprintln!("error: unknown scenario '{l}'; known: {}, {}", builtin_labels().join(", "), pipeline::TRUSS_LABEL);
                return CONFIG;
            }
        }
    }
    if let Some(p) = &args.config {
        jobs.push(Scenario::load(p));
    }
    if jobs.is_empty() && !truss {
        eprintln!("error: no scenario given");
        return CONFIG;
    }
    let mut scenarios = Vec::new();
    for j in jobs {
        match j {
            Ok(mut sc) => {
                if let Some(s) = args.stroke {
                    sc.loading.stroke = s;
                }
                if let Some(h) = args.elem_len {
                    sc.mesh.elem_len = h;
                }
                if let Some(e) = args.youngs_modulus {
                    sc.mesh.material.youngs_modulus = e;
                }
                if let Err(e) = sc.validate() {
                    return fail(&e, CONFIG);
                }
                scenarios.push(sc);
            }
            Err(e) => return fail(&e, CONFIG),
        }
    }
    if let Err(code) = ensure_dir(&args.output.out) {
        return code;
    }
    let mut runs: Vec<Result<TraceRun, Error>> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios.iter().map(|sc| s.spawn(move || pipeline::trace_scenario(sc))).collect();
        handles.into_iter().map(|h| h.join().expect("trace thread panicked")).collect()
    });
    if truss {
        runs.push(pipeline::trace_truss(&SolverSettings::default()));
    }
    let mut code = OK;
    for run in runs {
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                code = code.max(fail(&e, FAILED));
                continue;
            }
        };
        if let Err(e) = pipeline::write_trace(&args.output.out, &run) {
            code = code.max(fail(&e, FAILED));
            continue;
        }
        let folds = |k| run.path.folds_of(k);
        let status = match &run.stop_reason {
            None if run.path.complete => "complete".to_string(),
            Some(why) => format!("PARTIAL ({why})"),
            None => "PARTIAL".to_string(),
        };
        println!(
            "{}: {status}, {} points, control reached {:.3}, folds: {} displacement_limit, {} force_limit, {} free equilibria",
            run.label,
            run.path.points.len(),
            run.path.points.last().map_or(0.0, |p| p.control),
            folds(spirosnap::continuation::FoldKind::DisplacementLimit),
            folds(spirosnap::continuation::FoldKind::ForceLimit),
            run.free.len()
        );
        if !run.is_complete() && code == OK {
            code = PARTIAL;
        }
    }
    code
}

fn analyze(args: &AnalyzeArgs) -> u8 {
    let labels = args.labels.resolve();
    if labels.is_empty() {
        eprintln!("error: no scenario given");
        return CONFIG;
    }
    let dir = &args.output.out;
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = labels
            .iter()
            .map(|l| {
                s.spawn(move || {
                    let label = canonical_label(l).map(str::to_string).unwrap_or_else(|| l.clone());
                    pipeline::analyze_artifacts(dir, &label)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("analysis thread panicked")).collect()
    });
    let mut code = OK;
    for r in results {
        match r.and_then(|a| pipeline::write_analysis(dir, &a).map(|_| a)) {
            Ok(a) => println!("{}", pipeline::summary_line(&a.summary)),
            Err(e) => {
                eprintln!("error: {e}");
                code = FAILED;
            }
        }
    }
    code
}

fn robot(args: &RobotArgs) -> u8 {
    let mut spec: RobotSpec = match &args.config {
        Some(p) => match read_json(p) {
            Ok(s) => s,
            Err(e) => return fail(&e, CONFIG),
        },
        None => RobotSpec::default(),
    };
    if let Some(c) = args.cycles {
        spec.cycles = c;
    }
    let modes = match args.mode.as_deref() {
        None => vec![RobotMode::Fix, RobotMode::Pin],
        Some(m) => match m.parse::<RobotMode>() {
            Ok(m) => vec![m],
            Err(e) => return fail(&e, CONFIG),
        },
    };
    if let Err(e) = spec.validate() {
        return fail(&e, CONFIG);
    }
    if let Err(code) = ensure_dir(&args.output.out) {
        return code;
    }
    let runs: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = modes
            .iter()
            .map(|&mode| {
                let spec = RobotSpec { mode, ..spec.clone() };
                s.spawn(move || {
                    let kin = mode_kinematics(&spec)?;
                    let r = simulate_with(&spec, &kin, true)?;
                    pipeline::write_robot(&args.output.out, &spec, &kin, &r)?;
                    Ok::<_, Error>(r)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("robot thread panicked")).collect()
    });
    let mut means = Vec::new();
    for r in runs {
        match r {
            Ok(r) => {
                let per: Vec<String> = r.per_cycle_displacement.iter().map(|d| format!("{d:.2}")).collect();
                let back: Vec<usize> = r
                    .backward_segment_present
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| **b)
                    .map(|(k, _)| k + 1)
                    .collect();
                println!(
                    "{}: per-cycle displacement [{}] mm, mean {:.3} mm, backward segments in cycles {:?}",
                    r.mode.name(),
                    per.join(", "),
                    r.mean_cycle_displacement,
                    back
                );
                means.push((r.mode, r.mean_cycle_displacement));
            }
            Err(e) => return fail(&e, FAILED),
        }
    }
    if let [(RobotMode::Fix, f), (RobotMode::Pin, p)] = means[..] {
        println!("fix/pin mean displacement ratio: {:.3}", f / p);
    }
    OK
}

fn verify(args: &VerifyArgs) -> u8 {
    let settings: SolverSettings = match &args.config {
        Some(p) => match read_json::<SolverSettings>(p).and_then(|s| s.validate().map(|_| s)) {
            Ok(s) => s,
            Err(e) => return fail(&e, CONFIG),
        },
        None => SolverSettings::default(),
    };
    let checks = run_oracles(&settings);
    let mut ok = true;
    for c in &checks {
        ok &= c.passed;
        println!(
            "{} {}: measured {:.6e}, expected {:.6e}, error {:.3e} (tolerance {:.1e}){}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.expected,
            c.error,
            c.tolerance,
            c.note.as_ref().map(|n| format!("; {n}")).unwrap_or_default()
        );
    }
    if ok {
        OK
    } else {
        FAILED
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Trace(a) => trace(a),
        Command::Analyze(a) => analyze(a),
        Command::Robot(a) => robot(a),
        Command::Verify(a) => verify(a),
    };
    ExitCode::from(code)
}
