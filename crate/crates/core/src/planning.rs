//! Shortest paths over known Free space (8-connected, no corner rules).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::gridmap::{GridMap, Pose};
use crate::perception::Frontier;

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Cell indices from start to goal, both included.
    pub cells: Vec<usize>,
    /// Length in meters.
    pub cost: f64,
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    cost: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on cell index for determinism.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source distances (meters) and predecessor links over Free cells.
#[derive(Debug, Clone)]
pub struct DistanceField {
    source: usize,
    dist: Vec<f64>,
    prev: Vec<usize>,
}

impl DistanceField {
    /// Dijkstra from `source`, which must be Free.
    pub fn compute(map: &GridMap, source: usize) -> Result<Self> {
        if source >= map.len() || !map.is_free(source) {
            return Err(Error::Pose(format!(
                "path source {source} is not a Free cell"
            )));
        }
        let n = map.len();
        let res = map.resolution();
        let w = map.width() as i64;
        let h = map.height() as i64;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry {
            cost: 0.0,
            cell: source,
        });
        while let Some(Entry { cost, cell }) = heap.pop() {
            if done[cell] {
                continue;
            }
            done[cell] = true;
            let (x, y) = ((cell as i64) % w, (cell as i64) / w);
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let nb = (ny * w + nx) as usize;
                    if done[nb] || !map.is_free(nb) {
                        continue;
                    }
                    let step = if dx != 0 && dy != 0 {
                        SQRT_2 * res
                    } else {
                        res
                    };
                    let c = cost + step;
                    if c < dist[nb] {
                        dist[nb] = c;
                        prev[nb] = cell;
                        heap.push(Entry { cost: c, cell: nb });
                    }
                }
            }
        }
        Ok(DistanceField { source, dist, prev })
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn distance(&self, cell: usize) -> Option<f64> {
        self.dist.get(cell).copied().filter(|d| d.is_finite())
    }

    pub fn path_to(&self, goal: usize) -> Option<PathResult> {
        let cost = self.distance(goal)?;
        let mut cells = vec![goal];
        let mut c = goal;
        while c != self.source {
            c = self.prev[c];
            cells.push(c);
        }
        cells.reverse();
        Some(PathResult { cells, cost })
    }
}

/// Minimal-cost path between two cells; `Ok(None)` when unreachable.
pub fn shortest_path(map: &GridMap, from: usize, to: usize) -> Result<Option<PathResult>> {
    if to >= map.len() {
        return Err(Error::Bounds {
            index: to,
            width: map.width(),
            height: map.height(),
        });
    }
    Ok(DistanceField::compute(map, from)?.path_to(to))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierDistance {
    /// Cell the robot would travel to.
    pub target: usize,
    /// Path length in meters, `None` when unreachable.
    pub cost: Option<f64>,
}

/// Navigation target for `frontier` given a distance field: its anchor
/// when reachable, otherwise the reachable frontier cell closest by path.
pub fn frontier_target(
    map: &GridMap,
    field: &DistanceField,
    frontier: &Frontier,
) -> FrontierDistance {
    let anchor = frontier.anchor(map);
    if let Some(d) = field.distance(anchor) {
        return FrontierDistance {
            target: anchor,
            cost: Some(d),
        };
    }
    frontier
        .cells()
        .iter()
        .filter_map(|&c| field.distance(c).map(|d| (d, c)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map_or(
            FrontierDistance {
                target: anchor,
                cost: None,
            },
            |(d, c)| FrontierDistance {
                target: c,
                cost: Some(d),
            },
        )
}

/// One Dijkstra sweep from the pose, then a lookup per frontier.
pub fn distances_to_frontiers(
    map: &GridMap,
    pose: &Pose,
    frontiers: &[Frontier],
) -> Result<(DistanceField, Vec<FrontierDistance>)> {
    let source = map.pose_cell(pose)?;
    let field = DistanceField::compute(map, source)?;
    let out = frontiers
        .iter()
        .map(|f| frontier_target(map, &field, f))
        .collect();
    Ok((field, out))
}
