//! Coverage-versus-distance metrics of a single run.

use crate::simulator::ExplorationTrace;

pub const DEFAULT_THRESHOLDS: [f64; 6] = [0.30, 0.50, 0.70, 0.90, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub thresholds: Vec<f64>,
    /// `A_x` per threshold: distance at which coverage first reached `x`.
    pub area_at: Vec<Option<f64>>,
    pub t_bar: Option<f64>,
    pub final_coverage: f64,
    pub total_cost: f64,
}

impl MetricsRow {
    pub fn a(&self, threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .position(|&t| t == threshold)
            .and_then(|i| self.area_at[i])
    }
}

/// Column label for a threshold, e.g. `A_95`.
pub fn threshold_label(x: f64) -> String {
    format!("A_{}", (x * 100.0).round() as i64)
}

pub fn compute_metrics(trace: &ExplorationTrace, thresholds: &[f64]) -> MetricsRow {
    let area_at = thresholds
        .iter()
        .map(|&x| {
            trace
                .steps
                .iter()
                .filter(|s| s.coverage >= x)
                .map(|s| s.cum_cost)
                .min_by(f64::total_cmp)
        })
        .collect();
    MetricsRow {
        thresholds: thresholds.to_vec(),
        area_at,
        t_bar: trace.t_bar,
        final_coverage: trace.final_coverage(),
        total_cost: trace.total_cost(),
    }
}
