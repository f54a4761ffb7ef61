//! Batch experiments: environments x strategies x seeds, aggregated into a
//! coverage-versus-distance table plus per-strategy progression curves.
//!
//! A benchmark is described by one TOML document:
//!
//! ```toml
//! output_dir = "bench-out"
//! seeds = [1, 2, 3, 4, 5]
//! strategies = ["NF", "NF+S(-2)", { name = "IG", alpha = 0.4 }]
//! provider = "oracle"            # none | oracle | heuristic | file:PATH
//! termination = "coverage:0.95"  # none | min-length:L | coverage:T | labels:PATH
//!
//! [[environments]]
//! name = "office-a"
//! seed = 11
//! rooms = 6
//!
//! [[environments]]
//! name = "lab"
//! path = "maps/lab.txt"
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::envgen::{generate_environment, seeded_start, EnvParams};
use crate::error::{param_err, Error, Result};
use crate::gridmap::{load_map_file, GridMap};
use crate::metrics::{compute_metrics, threshold_label, MetricsRow, DEFAULT_THRESHOLDS};
use crate::perception::SensorModel;
use crate::saliency::{load_heatmap, DEFAULT_DECAY_CELLS, DEFAULT_THETA};
use crate::simulator::{
    run_exploration, write_trace_csv, ExplorationConfig, ExplorationTrace, SaliencyProvider,
    DEFAULT_SCAN_STRIDE_M,
};
use crate::strategy::{StrategyKind, TerminationCriterion, UtilityParams};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub name: String,
    pub path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub rooms: Option<usize>,
    pub corridor_width: Option<usize>,
    pub size: Option<usize>,
    pub resolution: Option<f64>,
}

impl EnvironmentSpec {
    pub fn generated(name: &str, seed: u64, params: EnvParams) -> Self {
        EnvironmentSpec {
            name: name.to_owned(),
            path: None,
            seed: Some(seed),
            rooms: Some(params.rooms),
            corridor_width: Some(params.corridor_width),
            size: Some(params.size),
            resolution: Some(params.resolution),
        }
    }

    /// Loads the map file, or generates the environment. Relative paths
    /// resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<GridMap> {
        if let Some(path) = &self.path {
            return load_map_file(&base_dir.join(path));
        }
        let d = EnvParams::default();
        let params = EnvParams {
            rooms: self.rooms.unwrap_or(d.rooms),
            corridor_width: self.corridor_width.unwrap_or(d.corridor_width),
            size: self.size.unwrap_or(d.size),
            resolution: self.resolution.unwrap_or(d.resolution),
        };
        generate_environment(self.seed.unwrap_or(0), &params)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StrategySpec {
    Name(String),
    Detailed {
        name: String,
        alpha: Option<f64>,
        beta: Option<f64>,
    },
}

impl StrategySpec {
    pub fn resolve(&self) -> Result<(StrategyKind, UtilityParams)> {
        let (name, alpha, beta) = match self {
            StrategySpec::Name(n) => (n, None, None),
            StrategySpec::Detailed { name, alpha, beta } => (name, *alpha, *beta),
        };
        let kind: StrategyKind = name.parse()?;
        let d = kind.params();
        let params = UtilityParams::new(alpha.unwrap_or(d.alpha()), beta.unwrap_or(d.beta()))?;
        Ok((kind, params))
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("bench-out")
}
fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}
fn default_provider() -> String {
    "oracle".into()
}
fn default_termination() -> String {
    "none".into()
}
fn default_theta() -> f64 {
    DEFAULT_THETA
}
fn default_stride() -> f64 {
    DEFAULT_SCAN_STRIDE_M
}
fn default_range() -> f64 {
    SensorModel::default().range()
}
fn default_decay() -> usize {
    DEFAULT_DECAY_CELLS
}
fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub environments: Vec<EnvironmentSpec>,
    pub strategies: Vec<StrategySpec>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_provider")]
    pub provider: String,
    #[serde(default = "default_termination")]
    pub termination: String,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_stride")]
    pub scan_stride: f64,
    #[serde(default = "default_range")]
    pub sensor_range: f64,
    #[serde(default = "default_decay")]
    pub decay: usize,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Directory relative map paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl BenchmarkSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: BenchmarkSpec =
            toml::from_str(text).map_err(|e| Error::Format(format!("benchmark spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut spec = Self::parse(&fs::read_to_string(path)?)?;
        spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.environments.is_empty() || self.strategies.is_empty() || self.seeds.is_empty() {
            return Err(param_err!(
                "a benchmark needs at least one environment, strategy and seed"
            ));
        }
        let mut names = HashSet::new();
        for e in &self.environments {
            if !names.insert(&e.name) {
                return Err(param_err!("duplicate environment name {:?}", e.name));
            }
        }
        for s in &self.strategies {
            s.resolve()?;
        }
        if self.thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(param_err!("coverage thresholds must lie in [0, 1]"));
        }
        if self.jobs == 0 {
            return Err(param_err!("jobs must be at least 1"));
        }
        TerminationCriterion::parse_spec(&self.termination)?;
        Ok(())
    }
}

/// `none`, `oracle`, `heuristic` or `file:PATH` (a P5 heatmap matching the
/// map size).
pub fn parse_provider(spec: &str, map: &GridMap, decay: usize) -> Result<SaliencyProvider> {
    Ok(match spec.split_once(':') {
        Some(("file", path)) => SaliencyProvider::Static(load_heatmap(
            fs::File::open(path)?,
            map.width(),
            map.height(),
        )?),
        _ => match spec {
            "none" => SaliencyProvider::None,
            "oracle" => SaliencyProvider::Oracle { decay },
            "heuristic" => SaliencyProvider::Heuristic { decay },
            _ => return Err(param_err!("unknown saliency provider {spec:?}")),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stat {
    pub mean: Option<f64>,
    /// Sample standard deviation; `None` below two values.
    pub std: Option<f64>,
    pub n: usize,
    /// Runs that never produced a value.
    pub excluded: usize,
}

impl Stat {
    pub fn of(values: &[Option<f64>]) -> Self {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        let n = present.len();
        let mean = (n > 0).then(|| present.iter().sum::<f64>() / n as f64);
        let std = mean.filter(|_| n > 1).map(|m| {
            (present.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Stat {
            mean,
            std,
            n,
            excluded: values.len() - n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub environment: String,
    pub strategy: StrategyKind,
    pub runs: usize,
    pub failed: usize,
    pub area_at: Vec<Stat>,
    pub t_bar: Stat,
    pub final_coverage: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub thresholds: Vec<f64>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub environment: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub trace_path: PathBuf,
    pub outcome: std::result::Result<(ExplorationTrace, MetricsRow), String>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub table: MetricsTable,
    pub runs: Vec<RunRecord>,
}

impl BenchmarkReport {
    pub fn incomplete(&self) -> bool {
        self.runs.iter().any(|r| r.outcome.is_err())
    }
}

fn run_file_stem(env: &str, strategy: &StrategyKind, seed: u64) -> String {
    format!("{env}__{}__seed{seed}", strategy.slug())
}

/// Runs every (environment, strategy, seed) combination and writes traces,
/// `table.csv`, `table.md` and `progression/*.csv` under the output dir.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkReport> {
    spec.validate()?;
    let sensor = SensorModel::with_range(spec.sensor_range)?;
    let envs: Vec<GridMap> = spec
        .environments
        .iter()
        .map(|e| e.build(&spec.base_dir))
        .collect::<Result<_>>()?;
    let strategies: Vec<(StrategyKind, UtilityParams)> = spec
        .strategies
        .iter()
        .map(StrategySpec::resolve)
        .collect::<Result<_>>()?;
    let providers: Vec<SaliencyProvider> = envs
        .iter()
        .map(|m| parse_provider(&spec.provider, m, spec.decay))
        .collect::<Result<_>>()?;

    let out = &spec.output_dir;
    fs::create_dir_all(out.join("runs"))?;
    fs::create_dir_all(out.join("progression"))?;

    let mut jobs = Vec::new();
    for ei in 0..envs.len() {
        for si in 0..strategies.len() {
            for &seed in &spec.seeds {
                jobs.push((ei, si, seed));
            }
        }
    }

    let execute = |&(ei, si, seed): &(usize, usize, u64)| -> RunRecord {
        let (kind, params) = strategies[si];
        let name = &spec.environments[ei].name;
        let trace_path = out
            .join("runs")
            .join(format!("{}.csv", run_file_stem(name, &kind, seed)));
        let outcome = (|| -> Result<(ExplorationTrace, MetricsRow)> {
            let truth = envs[ei].clone();
            let start = seeded_start(&truth, seed)?;
            let mut cfg = ExplorationConfig::new(truth, start, kind);
            cfg.params = params;
            cfg.sensor = sensor;
            cfg.saliency_provider = providers[ei].clone();
            cfg.theta = spec.theta;
            cfg.scan_stride = spec.scan_stride;
            cfg.termination = TerminationCriterion::parse_spec(&spec.termination)?;
            cfg.seed = seed;
            let trace = run_exploration(&cfg)?;
            write_trace_csv(&trace, fs::File::create(&trace_path)?)?;
            let metrics = compute_metrics(&trace, &spec.thresholds);
            Ok((trace, metrics))
        })()
        .map_err(|e| e.to_string());
        RunRecord {
            environment: name.clone(),
            strategy: kind,
            seed,
            trace_path,
            outcome,
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| param_err!("worker pool: {e}"))?;
    // `collect` keeps job order regardless of completion order.
    let runs: Vec<RunRecord> = pool.install(|| jobs.par_iter().map(execute).collect());

    let mut rows = Vec::new();
    for env in &spec.environments {
        for (kind, _) in &strategies {
            let group: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.environment == env.name && r.strategy == *kind)
                .collect();
            let ok: Vec<&MetricsRow> = group
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok().map(|(_, m)| m))
                .collect();
            let area_at = (0..spec.thresholds.len())
                .map(|i| Stat::of(&ok.iter().map(|m| m.area_at[i]).collect::<Vec<_>>()))
                .collect();
            rows.push(TableRow {
                environment: env.name.clone(),
                strategy: *kind,
                runs: group.len(),
                failed: group.len() - ok.len(),
                area_at,
                t_bar: Stat::of(&ok.iter().map(|m| m.t_bar).collect::<Vec<_>>()),
                final_coverage: Stat::of(
                    &ok.iter()
                        .map(|m| Some(m.final_coverage))
                        .collect::<Vec<_>>(),
                ),
            });
            write_progression(
                &out.join("progression")
                    .join(format!("{}__{}.csv", env.name, kind.slug())),
                &group,
            )?;
        }
    }
    let table = MetricsTable {
        thresholds: spec.thresholds.clone(),
        rows,
    };
    fs::write(out.join("table.csv"), table.to_csv())?;
    fs::write(out.join("table.md"), table.to_markdown())?;
    Ok(BenchmarkReport { table, runs })
}

/// Coverage as a step function of distance, sampled every meter, averaged
/// over the successful runs of one (environment, strategy) pair.
fn write_progression(path: &Path, runs: &[&RunRecord]) -> Result<()> {
    let traces: Vec<&ExplorationTrace> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|(t, _)| t))
        .collect();
    let mut text = String::from("distance_m,mean_coverage,min_coverage,max_coverage\n");
    let horizon = traces
        .iter()
        .map(|t| t.total_cost())
        .fold(0.0, f64::max)
        .ceil() as usize;
    for d in 0..=horizon {
        let at: Vec<f64> = traces.iter().map(|t| coverage_at(t, d as f64)).collect();
        if at.is_empty() {
            break;
        }
        let mean = at.iter().sum::<f64>() / at.len() as f64;
        let min = at.iter().copied().fold(f64::INFINITY, f64::min);
        let max = at.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(text, "{d},{mean:.6},{min:.6},{max:.6}");
    }
    fs::write(path, text)?;
    Ok(())
}

fn coverage_at(trace: &ExplorationTrace, distance: f64) -> f64 {
    trace
        .steps
        .iter()
        .take_while(|s| s.cum_cost <= distance + 1e-9)
        .last()
        .map_or(0.0, |s| s.coverage)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

impl MetricsTable {
    pub fn row(&self, environment: &str, strategy: &StrategyKind) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.environment == environment && r.strategy == *strategy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("environment,strategy,runs,failed");
        for &t in &self.thresholds {
            let l = threshold_label(t);
            let _ = write!(out, ",{l}_mean,{l}_std,{l}_n");
        }
        out.push_str(",t_bar_mean,t_bar_std,t_bar_n,final_coverage_mean\n");
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{}",
                r.environment, r.strategy, r.runs, r.failed
            );
            for s in &r.area_at {
                let _ = write!(out, ",{},{},{}", fmt_opt(s.mean), fmt_opt(s.std), s.n);
            }
            let _ = writeln!(
                out,
                ",{},{},{},{}",
                fmt_opt(r.t_bar.mean),
                fmt_opt(r.t_bar.std),
                r.t_bar.n,
                fmt_opt(r.final_coverage.mean)
            );
        }
        out
    }

    /// Table with one row per (environment, strategy), `mean ± std` cells in
    /// meters, and the best mean per column in bold within each base
    /// strategy family.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Env. | Strategy |");
        for &t in &self.thresholds {
            let _ = write!(out, " {} |", threshold_label(t));
        }
        out.push_str(" T̄ |\n|---|---|");
        for _ in 0..=self.thresholds.len() {
            out.push_str("---|");
        }
        out.push('\n');

        let columns = self.thresholds.len() + 1;
        let stat = |r: &TableRow, c: usize| -> Stat {
            if c < self.thresholds.len() {
                r.area_at[c].clone()
            } else {
                r.t_bar.clone()
            }
        };
        let best = |r: &TableRow, c: usize| -> bool {
            let Some(mine) = stat(r, c).mean else {
                return false;
            };
            self.rows
                .iter()
                .filter(|o| o.environment == r.environment && o.strategy.base == r.strategy.base)
                .filter_map(|o| stat(o, c).mean)
                .all(|m| mine <= m)
        };
        for r in &self.rows {
            let _ = write!(out, "| {} | {} |", r.environment, r.strategy);
            for c in 0..columns {
                let s = stat(r, c);
                let mut cell = match (s.mean, s.std) {
                    (None, _) => "—".to_string(),
                    (Some(m), Some(sd)) => format!("{m:.2} ± {sd:.2}"),
                    (Some(m), None) => format!("{m:.2}"),
                };
                if best(r, c) {
                    cell = format!("**{cell}**");
                }
                if s.excluded > 0 && s.mean.is_some() {
                    let _ = write!(cell, " ({} excl.)", s.excluded);
                }
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        let failed: usize = self.rows.iter().map(|r| r.failed).sum();
        if failed > 0 {
            let _ = writeln!(
                out,
                "\nIncomplete: {failed} run(s) failed and are excluded."
            );
        }
        out
    }
}
