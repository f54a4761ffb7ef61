//! Saliency heatmaps, saliency-area extraction and the frontier lookup S(f).
//!
//! A heatmap is thresholded at `theta`, surviving cells are grouped into
//! 8-connected saliency areas, and each area carries the mean raw value of
//! its cells. A frontier's saliency is the value of the area that contains
//! its (rounded) centroid, or 0.
//!
//! Two providers stand in for an external classifier: [`oracle_heatmap`]
//! sizes the unexplored space behind each frontier from the ground truth,
//! [`heuristic_heatmap`] uses the optimistic gain instead. Externally
//! produced heatmaps are read with [`load_heatmap`].

use std::collections::VecDeque;
use std::io::{Read, Write};

use crate::error::{param_err, Error, Result};
use crate::gridmap::{CellState, GridMap};
use crate::perception::{detect_frontiers, ig_optimistic, Frontier, SensorModel};
use crate::pgm::{self, Raster};

pub const DEFAULT_THETA: f64 = 0.1;
/// Upper bound of provider output, the top of the observed S(f) range.
pub const S_MAX: f64 = 0.25;
pub const DEFAULT_DECAY_CELLS: usize = 5;

const NO_AREA: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} heatmap needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(param_err!("heatmap value {v} outside [0, 1]"));
        }
        Ok(Heatmap {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Heatmap {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn check_matches(&self, map: &GridMap) -> Result<()> {
        if self.width == map.width() && self.height == map.height() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "heatmap {}x{} does not match map {}x{}",
                self.width,
                self.height,
                map.width(),
                map.height()
            )))
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyArea {
    /// Row-major sorted cell indices.
    pub cells: Vec<usize>,
    pub mean_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyField {
    width: usize,
    height: usize,
    theta: f64,
    areas: Vec<SaliencyArea>,
    labels: Vec<u32>,
}

impl SaliencyField {
    pub fn empty(width: usize, height: usize, theta: f64) -> Self {
        SaliencyField {
            width,
            height,
            theta,
            areas: Vec::new(),
            labels: vec![NO_AREA; width * height],
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn areas(&self) -> &[SaliencyArea] {
        &self.areas
    }

    pub fn area_at(&self, x: usize, y: usize) -> Option<&SaliencyArea> {
        if x >= self.width || y >= self.height {
            return None;
        }
        match self.labels[y * self.width + x] {
            NO_AREA => None,
            l => Some(&self.areas[l as usize]),
        }
    }

    /// Heatmap in which every area cell carries its area's mean.
    pub fn to_heatmap(&self) -> Heatmap {
        let mut h = Heatmap::zeros(self.width, self.height);
        for a in &self.areas {
            for &c in &a.cells {
                h.values[c] = a.mean_value;
            }
        }
        h
    }
}

/// Thresholds at `theta` (values below it become 0) and labels the
/// remaining non-zero cells into 8-connected areas.
pub fn extract_saliency_areas(heatmap: &Heatmap, theta: f64) -> Result<SaliencyField> {
    if !(0.0..1.0).contains(&theta) {
        return Err(param_err!("theta must lie in [0, 1), got {theta}"));
    }
    let (w, h) = (heatmap.width as i64, heatmap.height as i64);
    let survives: Vec<bool> = heatmap
        .values
        .iter()
        .map(|&v| v >= theta && v > 0.0)
        .collect();
    let mut field = SaliencyField::empty(heatmap.width, heatmap.height, theta);
    let mut queue = VecDeque::new();
    for seed in 0..survives.len() {
        if !survives[seed] || field.labels[seed] != NO_AREA {
            continue;
        }
        let label = field.areas.len() as u32;
        field.labels[seed] = label;
        queue.push_back(seed);
        let mut cells = Vec::new();
        while let Some(c) = queue.pop_front() {
            cells.push(c);
            let (x, y) = ((c as i64) % w, (c as i64) / w);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let nb = (ny * w + nx) as usize;
                    if survives[nb] && field.labels[nb] == NO_AREA {
                        field.labels[nb] = label;
                        queue.push_back(nb);
                    }
                }
            }
        }
        cells.sort_unstable();
        let sum: f64 = cells.iter().map(|&c| heatmap.values[c]).sum();
        let mean_value = sum / cells.len() as f64;
        field.areas.push(SaliencyArea { cells, mean_value });
    }
    Ok(field)
}

/// S(f): mean value of the area containing the frontier's rounded
/// centroid, 0 when it lies in no area.
pub fn frontier_saliency(field: &SaliencyField, frontier: &Frontier) -> f64 {
    let (cx, cy) = frontier.centroid();
    let (x, y) = (cx.round(), cy.round());
    if x < 0.0 || y < 0.0 {
        return 0.0;
    }
    field
        .area_at(x as usize, y as usize)
        .map_or(0.0, |a| a.mean_value)
}

/// Paints `s_max * size / max(size)` over each frontier, dilated by a disc
/// of radius `decay` cells. Overlaps keep the larger value.
fn paint_frontier_values(
    map: &GridMap,
    frontiers: &[Frontier],
    sizes: &[usize],
    decay: usize,
) -> Heatmap {
    let mut heat = Heatmap::zeros(map.width(), map.height());
    let max = sizes.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return heat;
    }
    let r = decay as i64;
    let (w, h) = (map.width() as i64, map.height() as i64);
    for (f, &size) in frontiers.iter().zip(sizes) {
        if size == 0 {
            continue;
        }
        let value = S_MAX * size as f64 / max as f64;
        for &c in f.cells() {
            let (x, y) = map.coords(c);
            let (x, y) = (x as i64, y as i64);
            for dy in -r..=r {
                for dx in -r..=r {
                    let (nx, ny) = (x + dx, y + dy);
                    if dx * dx + dy * dy > r * r || nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let v = &mut heat.values[(ny * w + nx) as usize];
                    if *v < value {
                        *v = value;
                    }
                }
            }
        }
    }
    heat
}

/// Ground-truth-informed provider. Each frontier is scored by the number of
/// cells in the unexplored, truly-free regions it borders (8-connected
/// regions of cells Unknown in `map` and Free in `ground_truth`).
pub fn oracle_heatmap(ground_truth: &GridMap, map: &GridMap, decay: usize) -> Result<Heatmap> {
    map.check_same_shape(ground_truth)?;
    let hidden =
        |i: usize| map.at(i) == CellState::Unknown && ground_truth.at(i) == CellState::Free;

    let n = map.len();
    let mut region = vec![u32::MAX; n];
    let mut region_size: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if region[seed] != u32::MAX || !hidden(seed) {
            continue;
        }
        let id = region_size.len() as u32;
        region[seed] = id;
        queue.push_back(seed);
        let mut size = 0;
        while let Some(c) = queue.pop_front() {
            size += 1;
            for nb in map.neighbors8(c) {
                if region[nb] == u32::MAX && hidden(nb) {
                    region[nb] = id;
                    queue.push_back(nb);
                }
            }
        }
        region_size.push(size);
    }

    let frontiers = detect_frontiers(map, 1);
    let mut touched = Vec::new();
    let sizes: Vec<usize> = frontiers
        .iter()
        .map(|f| {
            touched.clear();
            for &c in f.cells() {
                for nb in map.neighbors8(c) {
                    if region[nb] != u32::MAX {
                        touched.push(region[nb]);
                    }
                }
            }
            touched.sort_unstable();
            touched.dedup();
            touched.iter().map(|&r| region_size[r as usize]).sum()
        })
        .collect();
    Ok(paint_frontier_values(map, &frontiers, &sizes, decay))
}

/// Ground-truth-free provider scoring frontiers by optimistic gain.
pub fn heuristic_heatmap(map: &GridMap, sensor: &SensorModel, decay: usize) -> Heatmap {
    let frontiers = detect_frontiers(map, 1);
    let sizes: Vec<usize> = frontiers
        .iter()
        .map(|f| ig_optimistic(map, f, sensor))
        .collect();
    paint_frontier_values(map, &frontiers, &sizes, decay)
}

/// Reads a P5 heatmap (`pixel / 255`) that must be `width` x `height`.
pub fn load_heatmap<R: Read>(source: R, width: usize, height: usize) -> Result<Heatmap> {
    let raster = pgm::read_p5(source)?;
    if (raster.width, raster.height) != (width, height) {
        return Err(Error::Dimension(format!(
            "heatmap is {}x{}, map is {width}x{height}",
            raster.width, raster.height
        )));
    }
    Ok(Heatmap {
        width,
        height,
        values: raster.pixels.iter().map(|&p| p as f64 / 255.0).collect(),
    })
}

pub fn save_heatmap<W: Write>(heatmap: &Heatmap, sink: W) -> Result<()> {
    let raster = Raster {
        width: heatmap.width,
        height: heatmap.height,
        pixels: heatmap
            .values
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect(),
    };
    pgm::write_p5(sink, &raster)
}
