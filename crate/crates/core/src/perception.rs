//! Simulated LiDAR, frontier detection and information-gain estimators.
//!
//! Visibility is decided per target cell: a cell is seen from the origin
//! cell when the segment between the two cell centers crosses the interior
//! of no obstacle cell other than the target itself. Segments that only
//! graze a cell corner do not hit that cell. The traversal is an exact
//! integer supercover walk, so results do not depend on float rounding.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use crate::error::{param_err, Error, Result};
use crate::gridmap::{CellState, GridMap, Observation, Observed, Pose, Scan};

pub const DEFAULT_RANGE_M: f64 = 10.0;
pub const DEFAULT_RAY_COUNT: u32 = 720;
pub const DEFAULT_MIN_FRONTIER_LENGTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    range: f64,
    fov: f64,
    ray_count: u32,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            range: DEFAULT_RANGE_M,
            fov: TAU,
            ray_count: DEFAULT_RAY_COUNT,
        }
    }
}

impl SensorModel {
    pub fn new(range: f64, fov: f64, ray_count: u32) -> Result<Self> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(param_err!("sensor range must be positive, got {range}"));
        }
        if !(fov > 0.0 && fov <= TAU + 1e-12) {
            return Err(param_err!("fov must lie in (0, 2pi], got {fov}"));
        }
        if ray_count == 0 {
            return Err(param_err!("ray_count must be at least 1"));
        }
        Ok(SensorModel {
            range,
            fov: fov.min(TAU),
            ray_count,
        })
    }

    pub fn with_range(range: f64) -> Result<Self> {
        Self::new(range, TAU, DEFAULT_RAY_COUNT)
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn ray_count(&self) -> u32 {
        self.ray_count
    }

    pub fn is_omnidirectional(&self) -> bool {
        self.fov >= TAU - 1e-12
    }

    /// Range in cells for a map of the given resolution.
    pub fn range_cells(&self, resolution: f64) -> f64 {
        self.range / resolution
    }
}

/// Walks the cells crossed by the segment between the centers of two cells,
/// excluding the start cell and ending with the target. `visit` returns
/// `false` to stop early; the walk returns whether it reached the target.
#[inline]
pub fn supercover_walk(
    from: (i64, i64),
    to: (i64, i64),
    mut visit: impl FnMut(i64, i64) -> bool,
) -> bool {
    let (nx, ny) = ((to.0 - from.0).abs(), (to.1 - from.1).abs());
    let (sx, sy) = ((to.0 - from.0).signum(), (to.1 - from.1).signum());
    let (mut x, mut y) = from;
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < nx || iy < ny {
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            // Exactly through a corner: the side cells are only touched.
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            x += sx;
            ix += 1;
        } else {
            y += sy;
            iy += 1;
        }
        if !visit(x, y) {
            return false;
        }
    }
    true
}

/// True when no cell strictly between `from` and `to` satisfies `blocks`.
#[inline]
fn line_of_sight(
    map: &GridMap,
    from: (i64, i64),
    to: (i64, i64),
    blocks: impl Fn(CellState) -> bool,
) -> bool {
    let w = map.width() as i64;
    let cells = map.cells();
    supercover_walk(from, to, |x, y| {
        (x, y) == to || !blocks(cells[(y * w + x) as usize])
    })
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a > std::f64::consts::PI {
        a -= TAU;
    } else if a < -std::f64::consts::PI {
        a += TAU;
    }
    a
}

/// Iterates cells whose centers lie within `range_cells` of the origin
/// cell's center, in row-major order.
fn disc_cells(
    map: &GridMap,
    origin: (i64, i64),
    range_cells: f64,
) -> impl Iterator<Item = (i64, i64)> {
    let r = range_cells.floor() as i64;
    let r2 = range_cells * range_cells;
    let (w, h) = (map.width() as i64, map.height() as i64);
    let (y0, y1) = ((origin.1 - r).max(0), (origin.1 + r).min(h - 1));
    let (x0, x1) = ((origin.0 - r).max(0), (origin.0 + r).min(w - 1));
    (y0..=y1).flat_map(move |y| {
        (x0..=x1).filter_map(move |x| {
            let (dx, dy) = (x - origin.0, y - origin.1);
            ((dx * dx + dy * dy) as f64 <= r2).then_some((x, y))
        })
    })
}

/// Simulated noise-free LiDAR scan from the center of the pose's cell.
pub fn simulate_scan(ground_truth: &GridMap, pose: &Pose, sensor: &SensorModel) -> Result<Scan> {
    simulate_scan_where(ground_truth, pose, sensor, |_| true)
}

/// As [`simulate_scan`], restricted to target cells accepted by `wanted`.
/// Occlusion is unaffected by the filter.
pub fn simulate_scan_where(
    ground_truth: &GridMap,
    pose: &Pose,
    sensor: &SensorModel,
    wanted: impl Fn(usize) -> bool,
) -> Result<Scan> {
    let origin_idx = ground_truth.pose_cell(pose)?;
    let (ox, oy) = ground_truth.coords(origin_idx);
    let origin = (ox as i64, oy as i64);
    let omni = sensor.is_omnidirectional();
    let half_fov = sensor.fov / 2.0;
    let mut observations = Vec::new();
    for (x, y) in disc_cells(
        ground_truth,
        origin,
        sensor.range_cells(ground_truth.resolution()),
    ) {
        let idx = ground_truth.index(x as usize, y as usize);
        if !wanted(idx) {
            continue;
        }
        let state = match ground_truth.at(idx) {
            CellState::Free => Observed::Free,
            CellState::Obstacle => Observed::Obstacle,
            CellState::Unknown => continue,
        };
        if !omni && (x, y) != origin {
            let bearing = ((y - origin.1) as f64).atan2((x - origin.0) as f64);
            if wrap_angle(bearing - pose.heading).abs() > half_fov {
                continue;
            }
        }
        if line_of_sight(ground_truth, origin, (x, y), |c| c == CellState::Obstacle) {
            observations.push(Observation { cell: idx, state });
        }
    }
    Ok(Scan::from_sorted(observations))
}

/// Classic angular ray casting: `ray_count` rays spread evenly over the
/// field of view, each walked cell by cell until it enters an obstacle or
/// leaves the sensor range. Unlike [`simulate_scan`] this can miss cells
/// between diverging rays.
pub fn cast_rays(ground_truth: &GridMap, pose: &Pose, sensor: &SensorModel) -> Result<Scan> {
    let origin_idx = ground_truth.pose_cell(pose)?;
    let (ox, oy) = ground_truth.coords(origin_idx);
    let (cx, cy) = (ox as f64 + 0.5, oy as f64 + 0.5);
    let range = sensor.range_cells(ground_truth.resolution());
    let n = sensor.ray_count as usize;
    let start = if sensor.is_omnidirectional() {
        pose.heading
    } else {
        pose.heading - sensor.fov / 2.0
    };
    let step = if sensor.is_omnidirectional() || n == 1 {
        sensor.fov / n as f64
    } else {
        sensor.fov / (n - 1) as f64
    };
    let mut seen = std::collections::BTreeMap::new();
    seen.insert(origin_idx, Observed::Free);
    for k in 0..n {
        let angle = start + step * k as f64;
        let (dx, dy) = (angle.cos(), angle.sin());
        let (mut x, mut y) = (ox as i64, oy as i64);
        let (step_x, step_y) = (dx.signum() as i64, dy.signum() as i64);
        let t_dx = if dx != 0.0 {
            1.0 / dx.abs()
        } else {
            f64::INFINITY
        };
        let t_dy = if dy != 0.0 {
            1.0 / dy.abs()
        } else {
            f64::INFINITY
        };
        let mut t_x = if dx > 0.0 {
            (x as f64 + 1.0 - cx) * t_dx
        } else if dx < 0.0 {
            (cx - x as f64) * t_dx
        } else {
            f64::INFINITY
        };
        let mut t_y = if dy > 0.0 {
            (y as f64 + 1.0 - cy) * t_dy
        } else if dy < 0.0 {
            (cy - y as f64) * t_dy
        } else {
            f64::INFINITY
        };
        loop {
            let t = t_x.min(t_y);
            if t > range {
                break;
            }
            if t_x < t_y {
                x += step_x;
                t_x += t_dx;
            } else {
                y += step_y;
                t_y += t_dy;
            }
            if !ground_truth.in_bounds(x, y) {
                break;
            }
            let idx = ground_truth.index(x as usize, y as usize);
            match ground_truth.at(idx) {
                CellState::Obstacle => {
                    seen.insert(idx, Observed::Obstacle);
                    break;
                }
                CellState::Free => {
                    seen.entry(idx).or_insert(Observed::Free);
                }
                CellState::Unknown => {}
            }
        }
    }
    Ok(Scan::from_sorted(
        seen.into_iter()
            .map(|(cell, state)| Observation { cell, state })
            .collect(),
    ))
}

/// A maximal 8-connected chain of Free cells that border Unknown space.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    cells: Vec<usize>,
    centroid: (f64, f64),
}

impl Frontier {
    /// Builds a frontier from cell indices of `map`. Cells are sorted; no
    /// frontier predicate is checked.
    pub fn from_cells(map: &GridMap, mut cells: Vec<usize>) -> Result<Self> {
        if cells.is_empty() {
            return Err(param_err!("a frontier needs at least one cell"));
        }
        cells.sort_unstable();
        cells.dedup();
        if let Some(&c) = cells.iter().find(|&&c| c >= map.len()) {
            return Err(Error::Bounds {
                index: c,
                width: map.width(),
                height: map.height(),
            });
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for &c in &cells {
            let (x, y) = map.coords(c);
            sx += x as f64;
            sy += y as f64;
        }
        let n = cells.len() as f64;
        Ok(Frontier {
            centroid: (sx / n, sy / n),
            cells,
        })
    }

    /// Row-major sorted cell indices.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Mean cell coordinate, in cell-index units.
    pub fn centroid(&self) -> (f64, f64) {
        self.centroid
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn first_cell(&self) -> usize {
        self.cells[0]
    }

    /// The cell nearest to the centroid (rounded coordinates), if in bounds.
    pub fn centroid_cell(&self, map: &GridMap) -> Option<usize> {
        let (x, y) = (
            self.centroid.0.round() as i64,
            self.centroid.1.round() as i64,
        );
        map.in_bounds(x, y)
            .then(|| map.index(x as usize, y as usize))
    }

    /// Frontier cell closest to the centroid among those accepted by `ok`;
    /// ties go to the smaller index.
    pub fn nearest_cell_to_centroid(
        &self,
        map: &GridMap,
        ok: impl Fn(usize) -> bool,
    ) -> Option<usize> {
        let (cx, cy) = self.centroid;
        self.cells
            .iter()
            .copied()
            .filter(|&c| ok(c))
            .map(|c| {
                let (x, y) = map.coords(c);
                let d = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                (d, c)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, c)| c)
    }

    /// Navigation and sensing anchor: the centroid cell when it is Free in
    /// `map`, otherwise the frontier cell nearest to the centroid.
    pub fn anchor(&self, map: &GridMap) -> usize {
        self.anchor_where(map, |c| map.is_free(c))
            .unwrap_or(self.cells[0])
    }

    fn anchor_where(&self, map: &GridMap, ok: impl Fn(usize) -> bool) -> Option<usize> {
        match self.centroid_cell(map) {
            Some(c) if ok(c) => Some(c),
            _ => self.nearest_cell_to_centroid(map, ok),
        }
    }
}

/// Free cell with at least one Unknown 8-neighbour.
#[inline]
pub fn is_frontier_cell(map: &GridMap, index: usize) -> bool {
    map.is_free(index)
        && map
            .neighbors8(index)
            .any(|n| map.at(n) == CellState::Unknown)
}

/// Every maximal 8-connected group of frontier cells with at least
/// `min_length` cells, ordered by smallest cell index.
pub fn detect_frontiers(map: &GridMap, min_length: usize) -> Vec<Frontier> {
    let n = map.len();
    let mut is_frontier = vec![false; n];
    for (i, flag) in is_frontier.iter_mut().enumerate() {
        *flag = is_frontier_cell(map, i);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !is_frontier[seed] || seen[seed] {
            continue;
        }
        seen[seed] = true;
        queue.push_back(seed);
        let mut cells = Vec::new();
        while let Some(c) = queue.pop_front() {
            cells.push(c);
            for nb in map.neighbors8(c) {
                if is_frontier[nb] && !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        if cells.len() >= min_length.max(1) {
            out.push(Frontier::from_cells(map, cells).expect("non-empty in-bounds cells"));
        }
    }
    out
}

/// Optimistic gain: Unknown cells within sensor range of the frontier's
/// anchor that would be visible if all Unknown space were empty. Known
/// obstacles still occlude. The sensor is treated as omnidirectional.
pub fn ig_optimistic(map: &GridMap, frontier: &Frontier, sensor: &SensorModel) -> usize {
    let (ax, ay) = map.coords(frontier.anchor(map));
    let origin = (ax as i64, ay as i64);
    let cells = map.cells();
    let w = map.width();
    disc_cells(map, origin, sensor.range_cells(map.resolution()))
        .filter(|&(x, y)| cells[y as usize * w + x as usize] == CellState::Unknown)
        .filter(|&t| line_of_sight(map, origin, t, |c| c == CellState::Obstacle))
        .count()
}

/// True gain: cells currently Unknown in `map` that a scan taken in the
/// ground truth from the frontier's anchor would observe.
pub fn ig_true(
    ground_truth: &GridMap,
    map: &GridMap,
    frontier: &Frontier,
    sensor: &SensorModel,
) -> Result<usize> {
    map.check_same_shape(ground_truth)?;
    let origin = frontier
        .anchor_where(map, |c| {
            map.is_free(c) && ground_truth.at(c) == CellState::Free
        })
        .or_else(|| {
            frontier.nearest_cell_to_centroid(map, |c| ground_truth.at(c) == CellState::Free)
        })
        .ok_or_else(|| Error::Pose("no frontier cell is Free in the ground truth".into()))?;
    let (x, y) = map.coords(origin);
    let omni = SensorModel {
        fov: TAU,
        ..*sensor
    };
    let scan = simulate_scan_where(ground_truth, &Pose::at_cell(x, y), &omni, |i| {
        map.at(i) == CellState::Unknown
    })?;
    Ok(scan.len())
}
