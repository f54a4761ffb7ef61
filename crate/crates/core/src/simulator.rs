//! The closed exploration loop and its trace.
//!
//! Each iteration: pick a reachable frontier by utility, travel along the
//! shortest known path while scanning every `scan_stride` meters and at the
//! goal, then re-detect frontiers and evaluate the termination criterion.
//! The criterion never stops the loop; it only stamps `t_bar`. Saliency is
//! refreshed while the verdict is `Continue` and frozen afterwards.

use std::collections::HashSet;
use std::f64::consts::SQRT_2;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::gridmap::{coverage_ratio, CellState, GridMap, Pose};
use crate::perception::{
    detect_frontiers, ig_optimistic, ig_true, is_frontier_cell, simulate_scan_where, Frontier,
    SensorModel,
};
use crate::planning::{frontier_target, DistanceField};
use crate::saliency::{
    extract_saliency_areas, frontier_saliency, heuristic_heatmap, oracle_heatmap, Heatmap,
    SaliencyField, DEFAULT_DECAY_CELLS, DEFAULT_THETA,
};
use crate::strategy::{
    score_frontiers, select_frontier, BaseStrategy, StrategyKind, TerminationCriterion,
    UtilityParams, Verdict,
};

pub const DEFAULT_SCAN_STRIDE_M: f64 = 1.0;
pub const DEFAULT_MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SaliencyProvider {
    None,
    /// Ground-truth sized unexplored regions.
    Oracle {
        decay: usize,
    },
    /// Optimistic-gain sized regions; needs no ground truth.
    Heuristic {
        decay: usize,
    },
    /// A fixed, externally produced heatmap (e.g. loaded from a PGM file).
    Static(Heatmap),
}

impl SaliencyProvider {
    pub fn oracle() -> Self {
        SaliencyProvider::Oracle {
            decay: DEFAULT_DECAY_CELLS,
        }
    }

    pub fn heuristic() -> Self {
        SaliencyProvider::Heuristic {
            decay: DEFAULT_DECAY_CELLS,
        }
    }

    fn heatmap(
        &self,
        truth: &GridMap,
        map: &GridMap,
        sensor: &SensorModel,
    ) -> Result<Option<Heatmap>> {
        Ok(match self {
            SaliencyProvider::None => None,
            SaliencyProvider::Oracle { decay } => Some(oracle_heatmap(truth, map, *decay)?),
            SaliencyProvider::Heuristic { decay } => Some(heuristic_heatmap(map, sensor, *decay)),
            SaliencyProvider::Static(h) => Some(h.clone()),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExplorationConfig {
    pub ground_truth: GridMap,
    pub start_pose: Pose,
    pub strategy: StrategyKind,
    pub params: UtilityParams,
    pub sensor: SensorModel,
    pub saliency_provider: SaliencyProvider,
    pub theta: f64,
    pub termination: TerminationCriterion,
    /// Recorded with the run. The loop itself uses no randomness.
    pub seed: u64,
    pub scan_stride: f64,
    /// Frontiers shorter than this are ignored by the loop.
    pub min_frontier_length: usize,
    pub max_steps: usize,
}

impl ExplorationConfig {
    /// Defaults: 10 m omnidirectional sensor, the strategy's own alpha and
    /// beta, oracle saliency when the strategy is biased, theta 0.1,
    /// no-frontier termination, 1 m scan stride.
    pub fn new(ground_truth: GridMap, start_pose: Pose, strategy: StrategyKind) -> Self {
        let saliency_provider = if strategy.uses_saliency() {
            SaliencyProvider::oracle()
        } else {
            SaliencyProvider::None
        };
        ExplorationConfig {
            ground_truth,
            start_pose,
            params: strategy.params(),
            strategy,
            sensor: SensorModel::default(),
            saliency_provider,
            theta: DEFAULT_THETA,
            termination: TerminationCriterion::NoFrontiers,
            seed: 0,
            scan_stride: DEFAULT_SCAN_STRIDE_M,
            min_frontier_length: 1,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scan_stride > 0.0 && self.scan_stride.is_finite()) {
            return Err(param_err!("scan stride must be positive"));
        }
        if !(0.0..1.0).contains(&self.theta) {
            return Err(param_err!("theta must lie in [0, 1)"));
        }
        if self.min_frontier_length == 0 {
            return Err(param_err!("minimum frontier length must be at least 1"));
        }
        self.termination.validate()?;
        if let SaliencyProvider::Static(h) = &self.saliency_provider {
            h.check_matches(&self.ground_truth)?;
        }
        if self.ground_truth.count(CellState::Free) == 0 {
            return Err(Error::Format("environment has no Free cells".into()));
        }
        self.ground_truth.pose_cell(&self.start_pose)?;
        Ok(())
    }
}

/// One selection-and-travel step. Step 0 is the initial scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    /// Centroid of the selected frontier, cell units.
    pub frontier: Option<(f64, f64)>,
    pub path_cost: f64,
    pub cum_cost: f64,
    pub coverage: f64,
    /// Candidates considered at selection (detected frontiers for step 0).
    pub frontier_count: usize,
    pub s_value: f64,
    /// Termination verdict on the map after this step.
    pub explored: bool,
    /// Number of saliency refreshes so far.
    pub saliency_version: u32,
    /// Cells that stopped being Unknown during this step.
    pub revealed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationTrace {
    pub steps: Vec<TraceStep>,
    /// Cumulative distance at the first `Explored` verdict.
    pub t_bar: Option<f64>,
}

impl ExplorationTrace {
    pub fn final_coverage(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.coverage)
    }

    pub fn total_cost(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_cost)
    }
}

/// Trace plus the end state, for debugging output.
#[derive(Debug, Clone)]
pub struct ExplorationRun {
    pub trace: ExplorationTrace,
    pub final_map: GridMap,
    pub last_heatmap: Option<Heatmap>,
    pub last_field: Option<SaliencyField>,
    pub final_pose: Pose,
}

pub fn run_exploration(config: &ExplorationConfig) -> Result<ExplorationTrace> {
    Ok(run_exploration_detailed(config)?.trace)
}

struct Robot<'a> {
    truth: &'a GridMap,
    sensor: SensorModel,
    map: GridMap,
    cell: usize,
    heading: f64,
}

impl Robot<'_> {
    fn pose(&self) -> Pose {
        let (x, y) = self.map.coords(self.cell);
        Pose {
            heading: self.heading,
            ..Pose::at_cell(x, y)
        }
    }

    /// Scans at the current cell; returns the number of newly known cells.
    fn scan(&mut self) -> Result<usize> {
        let map = &self.map;
        let scan = simulate_scan_where(self.truth, &self.pose(), &self.sensor, |i| {
            map.at(i) == CellState::Unknown
        })?;
        Ok(self.map.integrate_counting(&scan))
    }

    fn step_to(&mut self, next: usize) -> f64 {
        let (x0, y0) = self.map.coords(self.cell);
        let (x1, y1) = self.map.coords(next);
        let (dx, dy) = (x1 as f64 - x0 as f64, y1 as f64 - y0 as f64);
        self.heading = dy.atan2(dx);
        self.cell = next;
        let unit = if dx != 0.0 && dy != 0.0 { SQRT_2 } else { 1.0 };
        unit * self.map.resolution()
    }
}

fn vanished(map: &GridMap, frontier: &Frontier) -> bool {
    !frontier.cells().iter().any(|&c| is_frontier_cell(map, c))
}

pub fn run_exploration_detailed(config: &ExplorationConfig) -> Result<ExplorationRun> {
    config.validate()?;
    let truth = &config.ground_truth;
    let mut termination = config.termination.clone();
    let start = truth.pose_cell(&config.start_pose)?;
    let mut robot = Robot {
        truth,
        sensor: config.sensor,
        map: GridMap::new(
            truth.width(),
            truth.height(),
            truth.resolution(),
            CellState::Unknown,
        )?,
        cell: start,
        heading: config.start_pose.heading,
    };

    let revealed = robot.scan()?;
    let mut frontiers = detect_frontiers(&robot.map, config.min_frontier_length);
    let mut verdict = termination.check(&robot.map, Some(truth), &frontiers)?;
    let mut t_bar = (verdict == Verdict::Explored).then_some(0.0);
    let mut steps = vec![TraceStep {
        step: 0,
        frontier: None,
        path_cost: 0.0,
        cum_cost: 0.0,
        coverage: coverage_ratio(&robot.map, truth)?,
        frontier_count: frontiers.len(),
        s_value: 0.0,
        explored: verdict == Verdict::Explored,
        saliency_version: 0,
        revealed,
    }];

    let mut heatmap: Option<Heatmap> = None;
    let mut field: Option<SaliencyField> = None;
    let mut saliency_version = 0u32;
    let mut cum_cost = 0.0;
    // Frontiers (keyed by cell set) whose visit revealed nothing: first
    // retargeted onto a frontier cell, then dropped.
    let mut retarget: HashSet<Vec<usize>> = HashSet::new();
    let mut blacklist: HashSet<Vec<usize>> = HashSet::new();

    loop {
        if steps.len() > config.max_steps {
            return Err(Error::StepLimit(config.max_steps));
        }
        let distances = DistanceField::compute(&robot.map, robot.cell)?;
        let mut candidates = Vec::new();
        let mut dist_raw = Vec::new();
        let mut targets = Vec::new();
        for f in &frontiers {
            if blacklist.contains(f.cells()) {
                continue;
            }
            let t = frontier_target(&robot.map, &distances, f);
            if let Some(cost) = t.cost {
                candidates.push(f.clone());
                dist_raw.push(cost);
                targets.push(t.target);
            }
        }
        if candidates.is_empty() {
            break;
        }

        if config.strategy.uses_saliency() && verdict == Verdict::Continue {
            if let Some(h) = config
                .saliency_provider
                .heatmap(truth, &robot.map, &config.sensor)?
            {
                field = Some(extract_saliency_areas(&h, config.theta)?);
                heatmap = Some(h);
                saliency_version += 1;
            }
        }
        let s: Vec<f64> = match (&field, config.strategy.uses_saliency()) {
            (Some(field), true) => candidates
                .iter()
                .map(|f| frontier_saliency(field, f))
                .collect(),
            _ => vec![0.0; candidates.len()],
        };
        let ig_raw: Vec<f64> = match config.strategy.base {
            BaseStrategy::Nf => vec![0.0; candidates.len()],
            BaseStrategy::Ig => candidates
                .iter()
                .map(|f| ig_optimistic(&robot.map, f, &config.sensor) as f64)
                .collect(),
            BaseStrategy::IgStar => candidates
                .iter()
                .map(|f| ig_true(truth, &robot.map, f, &config.sensor).map(|g| g as f64))
                .collect::<Result<_>>()?,
        };

        let scored = score_frontiers(&candidates, &ig_raw, &dist_raw, &s, config.params)?;
        let chosen = select_frontier(&scored)?;
        let chosen_idx = scored
            .iter()
            .position(|c| std::ptr::eq(c, chosen))
            .expect("selected from scored");
        let key = chosen.frontier.cells().to_vec();
        let goal = if retarget.contains(&key) {
            chosen
                .frontier
                .cells()
                .iter()
                .filter_map(|&c| distances.distance(c).map(|d| (d, c)))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map_or(targets[chosen_idx], |(_, c)| c)
        } else {
            targets[chosen_idx]
        };
        let path = distances
            .path_to(goal)
            .expect("candidate targets are reachable");

        let mut travelled = 0.0;
        let mut since_scan = 0.0;
        let mut revealed = 0;
        if path.cells.len() == 1 {
            revealed += robot.scan()?;
        }
        for (i, &next) in path.cells.iter().enumerate().skip(1) {
            let step = robot.step_to(next);
            travelled += step;
            since_scan += step;
            let at_goal = i + 1 == path.cells.len();
            if at_goal || since_scan >= config.scan_stride - 1e-9 {
                revealed += robot.scan()?;
                since_scan = 0.0;
                if !at_goal && vanished(&robot.map, &chosen.frontier) {
                    break;
                }
            }
        }
        cum_cost += travelled;

        if revealed == 0 {
            if retarget.contains(&key) {
                blacklist.insert(key);
            } else {
                retarget.insert(key);
            }
        }

        let selected_centroid = chosen.frontier.centroid();
        let selected_s = chosen.s;
        let candidate_count = candidates.len();
        frontiers = detect_frontiers(&robot.map, config.min_frontier_length);
        verdict = termination.check(&robot.map, Some(truth), &frontiers)?;
        if verdict == Verdict::Explored && t_bar.is_none() {
            t_bar = Some(cum_cost);
        }
        steps.push(TraceStep {
            step: steps.len(),
            frontier: Some(selected_centroid),
            path_cost: travelled,
            cum_cost,
            coverage: coverage_ratio(&robot.map, truth)?,
            frontier_count: candidate_count,
            s_value: selected_s,
            explored: verdict == Verdict::Explored,
            saliency_version,
            revealed,
        });
    }

    let final_pose = robot.pose();
    Ok(ExplorationRun {
        trace: ExplorationTrace { steps, t_bar },
        final_map: robot.map,
        last_heatmap: heatmap,
        last_field: field,
        final_pose,
    })
}

pub const TRACE_CSV_HEADER: &str =
    "step,frontier_x,frontier_y,path_cost_m,cum_cost_m,coverage,frontier_count,s_value,explored_flag";

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    step: usize,
    frontier_x: Option<f64>,
    frontier_y: Option<f64>,
    path_cost_m: f64,
    cum_cost_m: f64,
    coverage: f64,
    frontier_count: usize,
    s_value: f64,
    explored_flag: u8,
}

pub fn write_trace_csv<W: Write>(trace: &ExplorationTrace, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for s in &trace.steps {
        w.serialize(TraceRow {
            step: s.step,
            frontier_x: s.frontier.map(|f| f.0),
            frontier_y: s.frontier.map(|f| f.1),
            path_cost_m: s.path_cost,
            cum_cost_m: s.cum_cost,
            coverage: s.coverage,
            frontier_count: s.frontier_count,
            s_value: s.s_value,
            explored_flag: s.explored as u8,
        })?;
    }
    if trace.steps.is_empty() {
        w.write_record(TRACE_CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace CSV. `t_bar` is recovered from the first flagged row;
/// fields not stored in the CSV are zero.
pub fn read_trace_csv<R: Read>(source: R) -> Result<ExplorationTrace> {
    let mut r = csv::Reader::from_reader(source);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != TRACE_CSV_HEADER {
        return Err(Error::Format(format!("unexpected trace header {header:?}")));
    }
    let mut steps = Vec::new();
    for row in r.deserialize::<TraceRow>() {
        let row = row?;
        steps.push(TraceStep {
            step: row.step,
            frontier: row.frontier_x.zip(row.frontier_y),
            path_cost: row.path_cost_m,
            cum_cost: row.cum_cost_m,
            coverage: row.coverage,
            frontier_count: row.frontier_count,
            s_value: row.s_value,
            explored: row.explored_flag != 0,
            saliency_version: 0,
            revealed: 0,
        });
    }
    let t_bar = steps.iter().find(|s| s.explored).map(|s| s.cum_cost);
    Ok(ExplorationTrace { steps, t_bar })
}
