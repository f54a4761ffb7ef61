//! Frontier-based exploration of 2D occupancy grids with an optional
//! saliency bias in the frontier utility.
//!
//! The pieces compose as: [`gridmap`] holds the three-state map,
//! [`perception`] simulates scans and finds frontiers, [`planning`] measures
//! travel distance, [`saliency`] turns a heatmap into per-frontier scores,
//! [`strategy`] ranks frontiers, and [`simulator`] runs the loop end to end.

pub mod benchmark;
pub mod envgen;
mod error;
pub mod gridmap;
pub mod metrics;
pub mod perception;
mod pgm;
pub mod planning;
pub mod saliency;
pub mod simulator;
pub mod strategy;

pub use error::{Error, Result};
pub use gridmap::{
    coverage_ratio, load_map, load_map_file, merge_observation, save_map, save_map_file, CellState,
    GridMap, MapFormat, Observation, Observed, PgmMeta, Pose, Scan,
};
pub use metrics::{compute_metrics, MetricsRow, DEFAULT_THRESHOLDS};
pub use perception::{
    detect_frontiers, ig_optimistic, ig_true, simulate_scan, Frontier, SensorModel,
};
pub use planning::{shortest_path, DistanceField, PathResult};
pub use saliency::{
    extract_saliency_areas, frontier_saliency, Heatmap, SaliencyArea, SaliencyField,
};
pub use simulator::{
    read_trace_csv, run_exploration, run_exploration_detailed, write_trace_csv, ExplorationConfig,
    ExplorationRun, ExplorationTrace, SaliencyProvider, TraceStep,
};
pub use strategy::{
    score_frontiers, select_frontier, BaseStrategy, ScoredFrontier, StrategyKind,
    TerminationCriterion, UtilityParams, Verdict,
};
