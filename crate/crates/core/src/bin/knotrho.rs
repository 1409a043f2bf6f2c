//! Command-line driver: ρ estimation, corner-smoothing inspection, lattice
//! reduction, localized Δρ classification, the deterministic quadrature
//! reference, knot generation, and batch tables.
//!
//! Every run prints a JSON record carrying the full configuration, input
//! checksums and seed, so any reported number can be regenerated from the
//! record alone. Exit codes: 0 success, 2 bad input, 3 numerical guard.

use clap::{Args, Parser, Subcommand};
use knotrho::delta::{classify, delta_rho, Deformation};
use knotrho::invariant::nearest_class;
use knotrho::knot::{generate, knot_to_text, load_knot, save_knot, shipped, shipped_names, GenKind};
use knotrho::mc::{run_until, RhoEstimate};
use knotrho::oracle::{oracle_rho, QuadratureSpec};
use knotrho::reduce::reduce_lattice;
use knotrho::{DiscreteKnot, EpsilonSpec, Error, SamplerConfig, SmoothedKnot};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "knotrho",
    version,
    about = "Degree-2 Vassiliev invariant of closed polygonal curves"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate ρ = ρ₁ + ρ₂ by Monte Carlo (after corner smoothing)
    Compute(ComputeArgs),
    /// Show the corner-smoothing plan; optionally sample the smooth curve
    Smooth(SmoothArgs),
    /// Shrink a lattice knot without changing its topology
    Reduce(ReduceArgs),
    /// Estimate Δρ for a deformation confined to K contiguous segments
    Delta(DeltaArgs),
    /// Deterministic midpoint-quadrature reference (small knots only)
    Oracle(OracleArgs),
    /// Generate a knot file (circle, square, torus knot, or shipped)
    Gen(GenArgs),
    /// Estimate ρ for every knot file in a directory
    Table(TableArgs),
}

/// Knot input: a path to a .knot/.json file, or the name of a shipped knot.
fn load_input(spec: &str) -> knotrho::Result<(DiscreteKnot, InputRecord)> {
    let path = Path::new(spec);
    if path.exists() {
        let bytes = fs::read(path)?;
        let knot = load_knot(path)?;
        let record = InputRecord { input: spec.to_string(), sha256: hex_sha(&bytes) };
        return Ok((knot, record));
    }
    match shipped(spec) {
        Ok(knot) => {
            let canon = knot_to_text(&knot);
            let record =
                InputRecord { input: format!("shipped:{spec}"), sha256: hex_sha(canon.as_bytes()) };
            Ok((knot, record))
        }
        Err(_) => Err(Error::Input(format!(
            "no file '{spec}' and no shipped knot of that name (shipped: {})",
            shipped_names().join(", ")
        ))),
    }
}

fn hex_sha(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct InputRecord {
    input: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunRecord<C: Serialize, T: Serialize> {
    command: &'static str,
    version: &'static str,
    inputs: Vec<InputRecord>,
    config: C,
    result: T,
    wall_ms: u128,
}

fn emit<C: Serialize, T: Serialize>(
    command: &'static str,
    inputs: Vec<InputRecord>,
    config: C,
    result: T,
    started: Instant,
) -> knotrho::Result<()> {
    let record = RunRecord {
        command,
        version: env!("CARGO_PKG_VERSION"),
        inputs,
        config,
        result,
        wall_ms: started.elapsed().as_millis(),
    };
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}

/// "12500", "1e7" and "2.5e6" are all valid sample counts.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && (1.0..=1.8e19).contains(&v) => Ok(v.round() as u64),
        _ => Err(format!("'{s}' is not a positive sample count")),
    }
}

#[derive(Args)]
struct SampleOpts {
    /// Sample budget; scientific notation accepted (1e7)
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    n: u64,
    /// RNG seed; identical seeds give bit-identical results
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Stop early once the combined stderr drops below this
    #[arg(long)]
    threshold: Option<f64>,
    /// Framing offset as a fraction of the shortest segment
    #[arg(long, default_value_t = 1e-4)]
    epsilon_rel: f64,
    /// Absolute framing offset (overrides --epsilon-rel)
    #[arg(long, conflicts_with = "no_framing")]
    epsilon_abs: Option<f64>,
    /// Disable the framing displacement entirely
    #[arg(long)]
    no_framing: bool,
    /// Worker threads (default: KNOTRHO_WORKERS, else all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Budget fraction for the triple integral (default 4/(4+N))
    #[arg(long)]
    rho1_fraction: Option<f64>,
}

impl SampleOpts {
    fn epsilon(&self) -> EpsilonSpec {
        if self.no_framing {
            EpsilonSpec::Off
        } else if let Some(abs) = self.epsilon_abs {
            EpsilonSpec::Absolute(abs)
        } else {
            EpsilonSpec::Relative(self.epsilon_rel)
        }
    }

    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            n: self.n,
            seed: self.seed,
            // No default precision target: consume the budget in one pass.
            threshold_sigma: self.threshold.unwrap_or(f64::INFINITY),
            epsilon: self.epsilon(),
            workers: self.workers.or_else(workers_from_env),
            rho1_fraction: self.rho1_fraction,
        }
    }
}

fn workers_from_env() -> Option<usize> {
    std::env::var("KNOTRHO_WORKERS").ok()?.parse().ok()
}

#[derive(Args)]
struct ComputeArgs {
    /// Knot file or shipped knot name
    input: String,
    #[command(flatten)]
    sample: SampleOpts,
    /// Integrate the raw polygon instead of the smoothed curve
    #[arg(long)]
    no_smoothing: bool,
    /// Comma-separated budgets for a convergence ladder (e.g. 1e5,1e6,1e7)
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    ladder: Option<Vec<u64>>,
    /// Write the ladder as CSV (n, mean, stderr) to this path
    #[arg(long, requires = "ladder")]
    ladder_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ComputeResult {
    name: String,
    n_segments: usize,
    smoothed: bool,
    mean: f64,
    stderr: f64,
    rho1: f64,
    rho1_stderr: f64,
    rho2: f64,
    rho2_stderr: f64,
    a2: f64,
    nearest_class: &'static str,
    nearest_distance: f64,
    n_used: u64,
    n_flagged: u64,
    hit_threshold: bool,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ladder: Option<Vec<LadderRow>>,
}

#[derive(Serialize)]
struct LadderRow {
    n: u64,
    mean: f64,
    stderr: f64,
}

fn estimate_rho(knot: &DiscreteKnot, cfg: &SamplerConfig, raw: bool) -> knotrho::Result<RhoEstimate> {
    if raw {
        run_until(knot, cfg)
    } else {
        let sk = SmoothedKnot::new(knot.clone())?;
        run_until(&sk, cfg)
    }
}

fn compute_result(
    knot: &DiscreteKnot,
    est: &RhoEstimate,
    raw: bool,
    ladder: Option<Vec<LadderRow>>,
) -> ComputeResult {
    let (class, dist) = nearest_class(est.mean());
    ComputeResult {
        name: knot.name().to_string(),
        n_segments: knot.n(),
        smoothed: !raw,
        mean: est.mean(),
        stderr: est.stderr(),
        rho1: est.rho1.mean,
        rho1_stderr: est.rho1.stderr,
        rho2: est.rho2.mean,
        rho2_stderr: est.rho2.stderr,
        a2: est.a2(),
        nearest_class: class.name,
        nearest_distance: dist,
        n_used: est.rho1.n_used + est.rho2.n_used,
        n_flagged: est.rho1.n_flagged + est.rho2.n_flagged,
        hit_threshold: est.hit_threshold,
        seed: est.rho1.seed,
        ladder,
    }
}

fn cmd_compute(a: ComputeArgs) -> knotrho::Result<()> {
    let started = Instant::now();
    let (knot, input) = load_input(&a.input)?;
    let cfg = a.sample.config();
    let ladder = match &a.ladder {
        None => None,
        Some(ns) => {
            let mut rows = Vec::new();
            for &n in ns {
                let e = estimate_rho(&knot, &SamplerConfig { n, ..cfg }, a.no_smoothing)?;
                rows.push(LadderRow { n, mean: e.mean(), stderr: e.stderr() });
            }
            if let Some(path) = &a.ladder_out {
                let mut csv = String::from("n,mean,stderr\n");
                for r in &rows {
                    csv.push_str(&format!("{},{},{}\n", r.n, r.mean, r.stderr));
                }
                fs::write(path, csv)?;
            }
            Some(rows)
        }
    };
    let est = estimate_rho(&knot, &cfg, a.no_smoothing)?;
    let result = compute_result(&knot, &est, a.no_smoothing, ladder);
    emit("compute", vec![input], cfg, result, started)
}

#[derive(Args)]
struct SmoothArgs {
    /// Knot file or shipped knot name
    input: String,
    /// Write dense samples (S,x,y,z,tx,ty,tz) of the smooth curve as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Sample points per segment for --csv
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

#[derive(Serialize)]
struct CornerRow {
    index: usize,
    status: knotrho::CornerStatus,
    d_in: f64,
    d_out: f64,
}

#[derive(Serialize)]
struct SmoothResult {
    name: String,
    n_segments: usize,
    smoothed_corners: usize,
    skipped_corners: usize,
    min_radius: f64,
    corners: Vec<CornerRow>,
}

fn cmd_smooth(a: SmoothArgs) -> knotrho::Result<()> {
    let started = Instant::now();
    let (knot, input) = load_input(&a.input)?;
    let sk = SmoothedKnot::new(knot)?;
    let corners: Vec<CornerRow> = sk
        .plan()
        .corners
        .iter()
        .enumerate()
        .map(|(index, c)| CornerRow { index, status: c.status, d_in: c.d_in, d_out: c.d_out })
        .collect();
    let smoothed = corners.iter().filter(|c| c.status == knotrho::CornerStatus::Smoothed).count();
    let min_radius = corners
        .iter()
        .filter(|c| c.status == knotrho::CornerStatus::Smoothed)
        .map(|c| c.d_in)
        .fold(f64::INFINITY, f64::min);
    if let Some(path) = &a.csv {
        if a.samples == 0 {
            return Err(Error::Input("--samples must be positive".into()));
        }
        let n = sk.base().n();
        let total = n * a.samples;
        let mut csv = String::from("s,x,y,z,tx,ty,tz\n");
        for i in 0..total {
            let s = i as f64 * n as f64 / total as f64;
            let (p, t) = sk.sample_smoothed(s)?;
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s, p.x, p.y, p.z, t.x, t.y, t.z
            ));
        }
        fs::write(path, csv)?;
    }
    let result = SmoothResult {
        name: sk.base().name().to_string(),
        n_segments: sk.base().n(),
        smoothed_corners: smoothed,
        skipped_corners: corners.len() - smoothed,
        min_radius,
        corners,
    };
    emit("smooth", vec![input], serde_json::json!({"csv_samples": a.samples}), result, started)
}

#[derive(Args)]
struct ReduceArgs {
    /// Knot file or shipped knot name
    input: String,
    /// Write the reduced knot here (.knot or .json)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_reduce(a: ReduceArgs) -> knotrho::Result<()> {
    let started = Instant::now();
    let (knot, input) = load_input(&a.input)?;
    let (reduced, report) = reduce_lattice(&knot)?;
    if let Some(path) = &a.out {
        save_knot(&reduced, path)?;
    }
    emit(
        "reduce",
        vec![input],
        serde_json::json!({"out": a.out}),
        serde_json::json!({"report": report, "name": reduced.name()}),
        started,
    )
}

#[derive(Args)]
struct DeltaArgs {
    /// Reference knot (file or shipped name)
    reference: String,
    /// Transformed knot (file or shipped name)
    transformed: String,
    /// First changed segment index
    #[arg(long)]
    start: usize,
    /// Number of changed segments (cyclic from --start)
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    sample: SampleOpts,
}

fn cmd_delta(a: DeltaArgs) -> knotrho::Result<()> {
    let started = Instant::now();
    let (reference, in_r) = load_input(&a.reference)?;
    let (transformed, in_t) = load_input(&a.transformed)?;
    let def = Deformation::new(reference, transformed, a.start, a.k)?;
    let cfg = a.sample.config();
    let est = delta_rho(&def, &cfg)?;
    let verdict = classify(&est);
    let (eff_start, eff_k) = def.effective_range();
    let result = serde_json::json!({
        "delta_mean": est.mean,
        "stderr": est.stderr,
        "verdict": verdict,
        "declared_start": a.start,
        "declared_k": a.k,
        "effective_start": eff_start,
        "effective_k": eff_k,
        "n_used": est.n_used,
        "n_flagged": est.n_flagged,
        "seed": est.seed,
    });
    emit("delta", vec![in_r, in_t], cfg, result, started)
}

#[derive(Args)]
struct OracleArgs {
    /// Knot file or shipped knot name
    input: String,
    /// Grid points per unit parameter interval
    #[arg(long, default_value_t = 4)]
    q: usize,
    /// Refuse grids larger than this
    #[arg(long, default_value_t = 512)]
    cap: usize,
    /// Framing offset as a fraction of the shortest segment
    #[arg(long, default_value_t = 1e-4)]
    epsilon_rel: f64,
    /// Evaluate the raw polygon instead of the smoothed curve
    #[arg(long)]
    no_smoothing: bool,
}

fn cmd_oracle(a: OracleArgs) -> knotrho::Result<()> {
    let started = Instant::now();
    let (knot, input) = load_input(&a.input)?;
    let spec = QuadratureSpec {
        q: a.q,
        cap: a.cap,
        epsilon: EpsilonSpec::Relative(a.epsilon_rel),
    };
    let result = if a.no_smoothing {
        oracle_rho(&knot, &spec)?
    } else {
        oracle_rho(&SmoothedKnot::new(knot)?, &spec)?
    };
    emit("oracle", vec![input], spec, result, started)
}

#[derive(Subcommand)]
enum GenKindArg {
    /// Regular M-gon approximation of the circle (radius 1)
    Circle {
        #[arg(long, default_value_t = 64)]
        sides: usize,
    },
    /// Unit square (the 4-segment unknot)
    Square,
    /// (p,q) torus knot sampled with M segments
    Torus {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = 96)]
        sides: usize,
    },
    /// Copy one of the shipped knots (omit NAME to list them)
    Shipped { name: Option<String> },
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKindArg,
    /// Output path (.knot or .json); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_gen(a: GenArgs) -> knotrho::Result<()> {
    let knot = match &a.kind {
        GenKindArg::Circle { sides } => generate(&GenKind::Circle { m: *sides })?,
        GenKindArg::Square => generate(&GenKind::Square)?,
        GenKindArg::Torus { p, q, sides } => {
            generate(&GenKind::Torus { p: *p, q: *q, m: *sides })?
        }
        GenKindArg::Shipped { name: None } => {
            println!("{}", shipped_names().join("\n"));
            return Ok(());
        }
        GenKindArg::Shipped { name: Some(name) } => shipped(name)?,
    };
    match &a.out {
        Some(path) => save_knot(&knot, path),
        None => {
            print!("{}", knot_to_text(&knot));
            Ok(())
        }
    }
}

#[derive(Args)]
struct TableArgs {
    /// Directory of .knot/.json files
    dir: PathBuf,
    #[command(flatten)]
    sample: SampleOpts,
    /// Integrate raw polygons instead of smoothed curves
    #[arg(long)]
    no_smoothing: bool,
    /// Also write the table as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct TableRow {
    name: String,
    n_segments: usize,
    mean: f64,
    stderr: f64,
    a2: f64,
    nearest_class: &'static str,
    nearest_distance: f64,
}

fn cmd_table(a: TableArgs) -> knotrho::Result<()> {
    let started = Instant::now();
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("knot") | Some("json")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Input(format!("no .knot or .json files under {}", a.dir.display())));
    }
    let cfg = a.sample.config();
    let mut rows = Vec::new();
    let mut inputs = Vec::new();
    for path in &paths {
        let spec = path.to_string_lossy().to_string();
        let (knot, input) = load_input(&spec)?;
        inputs.push(input);
        let est = estimate_rho(&knot, &cfg, a.no_smoothing)?;
        let (class, dist) = nearest_class(est.mean());
        rows.push(TableRow {
            name: knot.name().to_string(),
            n_segments: knot.n(),
            mean: est.mean(),
            stderr: est.stderr(),
            a2: est.a2(),
            nearest_class: class.name,
            nearest_distance: dist,
        });
    }
    if let Some(path) = &a.csv {
        let mut csv = String::from("name,n,mean,stderr,a2,nearest_class,nearest_distance\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.name, r.n_segments, r.mean, r.stderr, r.a2, r.nearest_class, r.nearest_distance
            ));
        }
        fs::write(path, csv)?;
    }
    emit("table", inputs, cfg, rows, started)
}

fn run(cli: Cli) -> knotrho::Result<()> {
    match cli.cmd {
        Cmd::Compute(a) => cmd_compute(a),
        Cmd::Smooth(a) => cmd_smooth(a),
        Cmd::Reduce(a) => cmd_reduce(a),
        Cmd::Delta(a) => cmd_delta(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Table(a) => cmd_table(a),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code().into());
    }
}
