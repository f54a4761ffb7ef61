use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use salient_core::benchmark::{parse_provider, run_benchmark, BenchmarkSpec};
use salient_core::envgen::{generate_environment, seeded_start, EnvParams};
use salient_core::metrics::threshold_label;
use salient_core::saliency::{save_heatmap, DEFAULT_DECAY_CELLS, DEFAULT_THETA};
use salient_core::*;

#[derive(Parser)]
#[command(
    name = "salient",
    version,
    about = "Frontier exploration with saliency-biased frontier selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore one environment and write its trace.
    Explore(ExploreArgs),
    /// Run a batch of experiments described by a TOML spec.
    Bench(BenchArgs),
    /// Generate an office-like environment.
    Genmap(GenmapArgs),
    /// Coverage metrics of a trace CSV.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct EnvArgs {
    /// Map file (ASCII, or .pgm with a .meta sidecar).
    #[arg(long, conflicts_with = "generate")]
    map: Option<PathBuf>,
    /// Generate the environment from this seed instead of loading a map.
    #[arg(long)]
    generate: Option<u64>,
    #[arg(long, default_value_t = EnvParams::default().rooms)]
    rooms: usize,
    #[arg(long, default_value_t = EnvParams::default().corridor_width)]
    corridor_width: usize,
    #[arg(long, default_value_t = EnvParams::default().size)]
    size: usize,
    #[arg(long, default_value_t = EnvParams::default().resolution)]
    resolution: f64,
}

impl EnvArgs {
    fn params(&self) -> EnvParams {
        EnvParams {
            rooms: self.rooms,
            corridor_width: self.corridor_width,
            size: self.size,
            resolution: self.resolution,
        }
    }

    fn load(&self) -> Result<GridMap> {
        match (&self.map, self.generate) {
            (Some(path), _) => {
                load_map_file(path).with_context(|| format!("loading {}", path.display()))
            }
            (None, Some(seed)) => Ok(generate_environment(seed, &self.params())?),
            (None, None) => bail!("pass --map PATH or --generate SEED"),
        }
    }
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// NF, IG or IG*, optionally biased: `NF+S(-2)`, `IG+S(2)`.
    #[arg(long, default_value = "NF")]
    strategy: String,
    /// Overrides the strategy's gain weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Overrides the strategy's saliency weight.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    /// none, oracle, heuristic or file:PATH. Defaults to oracle for biased
    /// strategies.
    #[arg(long)]
    provider: Option<String>,
    /// none, min-length:L, coverage:T or labels:PATH.
    #[arg(long, default_value = "none")]
    termination: String,
    /// Picks the start cell when --start is absent.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start cell as `X,Y`.
    #[arg(long)]
    start: Option<String>,
    /// Sensor range in meters.
    #[arg(long, default_value_t = 10.0)]
    range: f64,
    #[arg(long, default_value_t = 1.0)]
    scan_stride: f64,
    /// Output directory for trace.csv, final_map.txt and heatmap.pgm.
    #[arg(long, default_value = "explore-out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the spec's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the spec's worker count.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct GenmapArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = EnvParams::default().rooms)]
    rooms: usize,
    #[arg(long, default_value_t = EnvParams::default().corridor_width)]
    corridor_width: usize,
    #[arg(long, default_value_t = EnvParams::default().size)]
    size: usize,
    #[arg(long, default_value_t = EnvParams::default().resolution)]
    resolution: f64,
    /// `.pgm` writes a PGM plus `.meta` sidecar; anything else is ASCII.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    trace: PathBuf,
    /// Comma-separated coverage fractions.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS.to_vec())]
    thresholds: Vec<f64>,
}

fn parse_start(s: &str) -> Result<Pose> {
    let (x, y) = s.split_once(',').context("start must look like X,Y")?;
    Ok(Pose::at_cell(x.trim().parse()?, y.trim().parse()?))
}

fn print_metrics(m: &MetricsRow) {
    for (t, a) in m.thresholds.iter().zip(&m.area_at) {
        match a {
            Some(a) => println!("{:<6} {a:.3} m", threshold_label(*t)),
            None => println!("{:<6} not reached", threshold_label(*t)),
        }
    }
    match m.t_bar {
        Some(t) => println!("T_bar  {t:.3} m"),
        None => println!("T_bar  never explored"),
    }
    println!(
        "final coverage {:.4}, distance {:.3} m",
        m.final_coverage, m.total_cost
    );
}

fn explore(args: ExploreArgs) -> Result<()> {
    let truth = args.env.load()?;
    let kind: StrategyKind = args.strategy.parse()?;
    let start = match &args.start {
        Some(s) => parse_start(s)?,
        None => seeded_start(&truth, args.seed)?,
    };
    let mut cfg = ExplorationConfig::new(truth, start, kind);
    let d = kind.params();
    cfg.params = UtilityParams::new(
        args.alpha.unwrap_or(d.alpha()),
        args.beta.unwrap_or(d.beta()),
    )?;
    cfg.theta = args.theta;
    cfg.termination = TerminationCriterion::parse_spec(&args.termination)?;
    cfg.seed = args.seed;
    cfg.sensor = SensorModel::with_range(args.range)?;
    cfg.scan_stride = args.scan_stride;
    if let Some(p) = &args.provider {
        cfg.saliency_provider = parse_provider(p, &cfg.ground_truth, DEFAULT_DECAY_CELLS)?;
    }

    let run = run_exploration_detailed(&cfg)?;
    fs::create_dir_all(&args.out)?;
    write_trace_csv(
        &run.trace,
        BufWriter::new(File::create(args.out.join("trace.csv"))?),
    )?;
    save_map_file(&run.final_map, &args.out.join("final_map.txt"))?;
    if let Some(h) = &run.last_heatmap {
        save_heatmap(
            h,
            BufWriter::new(File::create(args.out.join("heatmap.pgm"))?),
        )?;
    }
    fs::write(
        args.out.join("frontiers.txt"),
        frontier_overlay(&run.final_map),
    )?;

    println!(
        "{kind}: {} steps, start {:?}",
        run.trace.steps.len() - 1,
        start.cell()
    );
    print_metrics(&compute_metrics(&run.trace, &DEFAULT_THRESHOLDS));
    Ok(())
}

/// ASCII map with remaining frontier cells drawn as `F`.
fn frontier_overlay(map: &GridMap) -> String {
    let mut glyphs: Vec<char> = map.cells().iter().map(|c| c.glyph()).collect();
    for f in detect_frontiers(map, 1) {
        for &c in f.cells() {
            glyphs[c] = 'F';
        }
    }
    let mut out = String::with_capacity(glyphs.len() + map.height());
    for row in glyphs.chunks(map.width()) {
        out.extend(row);
        out.push('\n');
    }
    out
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut spec = BenchmarkSpec::from_file(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    if let Some(out) = args.out {
        spec.output_dir = out;
    }
    if let Some(jobs) = args.jobs {
        spec.jobs = jobs;
    }
    let report = run_benchmark(&spec)?;
    print!("{}", report.table.to_markdown());
    for r in report.runs.iter().filter(|r| r.outcome.is_err()) {
        eprintln!(
            "failed: {} {} seed {}: {}",
            r.environment,
            r.strategy,
            r.seed,
            r.outcome.as_ref().unwrap_err()
        );
    }
    println!("results in {}", spec.output_dir.display());
    if report.incomplete() {
        bail!("some runs failed; the table is incomplete");
    }
    Ok(())
}

fn genmap(args: GenmapArgs) -> Result<()> {
    let params = EnvParams {
        rooms: args.rooms,
        corridor_width: args.corridor_width,
        size: args.size,
        resolution: args.resolution,
    };
    let map = generate_environment(args.seed, &params)?;
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_map_file(&map, &args.out)?;
    println!(
        "{}x{} map, {} free cells -> {}",
        map.width(),
        map.height(),
        map.count(CellState::Free),
        args.out.display()
    );
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let trace = read_trace(&args.trace)?;
    print_metrics(&compute_metrics(&trace, &args.thresholds));
    Ok(())
}

fn read_trace(path: &Path) -> Result<ExplorationTrace> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_trace_csv(file)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Explore(a) => explore(a),
        Command::Bench(a) => bench(a),
        Command::Genmap(a) => genmap(a),
        Command::Metrics(a) => metrics(a),
    }
}
