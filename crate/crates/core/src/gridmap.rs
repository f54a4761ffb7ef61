//! Occupancy grid model, map file formats and scan integration.
//!
//! Cells are addressed either by `(x, y)` or by the row-major index
//! `y * width + x`. Row 0 is the first row of every file format.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{param_err, Error, Result};
use crate::pgm::{self, Raster};

pub const DEFAULT_RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Free,
    Obstacle,
    Unknown,
}

impl CellState {
    pub fn glyph(self) -> char {
        match self {
            CellState::Free => '.',
            CellState::Obstacle => '#',
            CellState::Unknown => '?',
        }
    }

    pub fn from_glyph(c: char) -> Self {
        match c {
            '.' => CellState::Free,
            '#' => CellState::Obstacle,
            _ => CellState::Unknown,
        }
    }
}

/// A state a sensor can report for a cell. Sensors never report `Unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observed {
    Free,
    Obstacle,
}

impl From<Observed> for CellState {
    fn from(o: Observed) -> Self {
        match o {
            Observed::Free => CellState::Free,
            Observed::Obstacle => CellState::Obstacle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation {
    pub cell: usize,
    pub state: Observed,
}

/// A set of cell observations, each cell at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scan {
    observations: Vec<Observation>,
}

impl Scan {
    pub fn new(mut observations: Vec<Observation>) -> Result<Self> {
        observations.sort_by_key(|o| o.cell);
        if let Some(w) = observations.windows(2).find(|w| w[0].cell == w[1].cell) {
            return Err(param_err!("cell {} observed twice in one scan", w[0].cell));
        }
        Ok(Scan { observations })
    }

    /// Caller guarantees sorted, unique cells.
    pub(crate) fn from_sorted(observations: Vec<Observation>) -> Self {
        debug_assert!(observations.windows(2).all(|w| w[0].cell < w[1].cell));
        Scan { observations }
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.state_of(cell).is_some()
    }

    pub fn state_of(&self, cell: usize) -> Option<Observed> {
        self.observations
            .binary_search_by_key(&cell, |o| o.cell)
            .ok()
            .map(|i| self.observations[i].state)
    }
}

/// Robot pose in cell units. The cell containing the pose is
/// `(floor(x), floor(y))`; its center is at `(x + 0.5, y + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose { x, y, heading }
    }

    /// Pose at the center of a cell.
    pub fn at_cell(x: usize, y: usize) -> Self {
        Pose {
            x: x as f64 + 0.5,
            y: y as f64 + 0.5,
            heading: 0.0,
        }
    }

    pub fn cell(&self) -> Option<(usize, usize)> {
        if self.x < 0.0 || self.y < 0.0 || !self.x.is_finite() || !self.y.is_finite() {
            return None;
        }
        Some((self.x.floor() as usize, self.y.floor() as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<CellState>,
}

impl GridMap {
    pub fn new(width: usize, height: usize, resolution: f64, fill: CellState) -> Result<Self> {
        Self::from_cells(width, height, resolution, vec![fill; width * height])
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        cells: Vec<CellState>,
    ) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(param_err!("resolution must be positive, got {resolution}"));
        }
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty map {width}x{height}")));
        }
        if cells.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} map needs {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(GridMap {
            width,
            height,
            resolution,
            cells,
        })
    }

    /// Parses the ASCII grid body only (no header line), as in test fixtures.
    pub fn from_rows(rows: &[&str], resolution: f64) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            let n = row.chars().count();
            if n != width {
                return Err(Error::Dimension(format!(
                    "row {y} has {n} cells, expected {width}"
                )));
            }
            cells.extend(row.chars().map(CellState::from_glyph));
        }
        Self::from_cells(width, height, resolution, cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn same_shape(&self, other: &GridMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_same_shape(&self, other: &GridMap) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn try_index(&self, x: usize, y: usize) -> Result<usize> {
        if x < self.width && y < self.height {
            Ok(self.index(x, y))
        } else {
            Err(self.bounds_err(x.saturating_add(y.saturating_mul(self.width))))
        }
    }

    fn bounds_err(&self, index: usize) -> Error {
        Error::Bounds {
            index,
            width: self.width,
            height: self.height,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Result<CellState> {
        Ok(self.cells[self.try_index(x, y)?])
    }

    pub fn set(&mut self, x: usize, y: usize, state: CellState) -> Result<()> {
        let i = self.try_index(x, y)?;
        self.cells[i] = state;
        Ok(())
    }

    /// State by row-major index. Panics when out of bounds.
    #[inline]
    pub fn at(&self, index: usize) -> CellState {
        self.cells[index]
    }

    #[inline]
    pub fn set_at(&mut self, index: usize, state: CellState) {
        self.cells[index] = state;
    }

    #[inline]
    pub fn is_free(&self, index: usize) -> bool {
        self.cells[index] == CellState::Free
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    /// Row-major indices of the in-bounds 8-neighbours of `index`.
    pub fn neighbors8(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.coords(index);
        let (x, y) = (x as i64, y as i64);
        NEIGHBOR_OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            self.in_bounds(nx, ny)
                .then(|| ny as usize * self.width + nx as usize)
        })
    }

    /// Validates a robot pose: inside the map and on a Free cell.
    pub fn pose_cell(&self, pose: &Pose) -> Result<usize> {
        let (x, y) = pose
            .cell()
            .filter(|&(x, y)| x < self.width && y < self.height)
            .ok_or_else(|| Error::Pose(format!("({}, {}) outside the map", pose.x, pose.y)))?;
        let i = self.index(x, y);
        if self.cells[i] != CellState::Free {
            return Err(Error::Pose(format!(
                "cell ({x}, {y}) is {:?}, not Free",
                self.cells[i]
            )));
        }
        Ok(i)
    }

    /// Merges a scan: Obstacle observations always win, Free only
    /// overwrites Unknown. Fails without modifying the map if any
    /// observation is out of bounds.
    pub fn integrate_scan(&mut self, scan: &Scan) -> Result<()> {
        if let Some(o) = scan.observations().iter().find(|o| o.cell >= self.len()) {
            return Err(self.bounds_err(o.cell));
        }
        for o in scan.observations() {
            let cell = &mut self.cells[o.cell];
            *cell = merge_observation(*cell, o.state);
        }
        Ok(())
    }

    /// Returns the number of cells that changed from Unknown.
    pub(crate) fn integrate_counting(&mut self, scan: &Scan) -> usize {
        let mut revealed = 0;
        for o in scan.observations() {
            let cell = &mut self.cells[o.cell];
            if *cell == CellState::Unknown {
                revealed += 1;
            }
            *cell = merge_observation(*cell, o.state);
        }
        revealed
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height + 32);
        out.push_str(&format!(
            "{} {} {}\n",
            self.width, self.height, self.resolution
        ));
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|c| c.glyph()));
            out.push('\n');
        }
        out
    }
}

const NEIGHBOR_OFFSETS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub fn merge_observation(prior: CellState, observed: Observed) -> CellState {
    match (prior, observed) {
        (_, Observed::Obstacle) => CellState::Obstacle,
        (CellState::Obstacle, Observed::Free) => CellState::Obstacle,
        (_, Observed::Free) => CellState::Free,
    }
}

/// Fraction of the ground truth's Free cells that are known (not Unknown)
/// in `current`.
pub fn coverage_ratio(current: &GridMap, ground_truth: &GridMap) -> Result<f64> {
    current.check_same_shape(ground_truth)?;
    let mut free = 0usize;
    let mut known = 0usize;
    for (c, g) in current.cells.iter().zip(&ground_truth.cells) {
        if *g == CellState::Free {
            free += 1;
            if *c != CellState::Unknown {
                known += 1;
            }
        }
    }
    if free == 0 {
        return Ok(1.0);
    }
    Ok(known as f64 / free as f64)
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.width) {
            for c in row {
                write!(f, "{}", c.glyph())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Sidecar metadata for PGM maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmMeta {
    pub resolution: f64,
    pub free_threshold: u8,
    pub obstacle_threshold: u8,
}

impl Default for PgmMeta {
    fn default() -> Self {
        PgmMeta {
            resolution: DEFAULT_RESOLUTION,
            free_threshold: 250,
            obstacle_threshold: 50,
        }
    }
}

impl PgmMeta {
    /// Parses `key=value` lines. Unknown keys and `#` comments are ignored.
    pub fn parse<R: Read>(source: R) -> Result<Self> {
        let mut meta = PgmMeta::default();
        for line in BufReader::new(source).lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("metadata line without '=': {line:?}")))?;
            let value = value.trim();
            let bad = || Error::Format(format!("bad metadata value {key}={value}"));
            match key.trim() {
                "resolution" => meta.resolution = value.parse().map_err(|_| bad())?,
                "free_threshold" => meta.free_threshold = value.parse().map_err(|_| bad())?,
                "obstacle_threshold" => {
                    meta.obstacle_threshold = value.parse().map_err(|_| bad())?
                }
                _ => {}
            }
        }
        if meta.obstacle_threshold >= meta.free_threshold {
            return Err(Error::Format(
                "obstacle_threshold must be below free_threshold".into(),
            ));
        }
        Ok(meta)
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "resolution={}", self.resolution)?;
        writeln!(sink, "free_threshold={}", self.free_threshold)?;
        writeln!(sink, "obstacle_threshold={}", self.obstacle_threshold)?;
        Ok(())
    }

    fn classify(&self, pixel: u8) -> CellState {
        if pixel >= self.free_threshold {
            CellState::Free
        } else if pixel <= self.obstacle_threshold {
            CellState::Obstacle
        } else {
            CellState::Unknown
        }
    }

    fn pixel(&self, state: CellState) -> u8 {
        match state {
            CellState::Free => 255,
            CellState::Obstacle => 0,
            CellState::Unknown => {
                ((self.free_threshold as u16 + self.obstacle_threshold as u16) / 2) as u8
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapFormat {
    Ascii,
    Pgm(PgmMeta),
}

pub fn load_map<R: Read>(source: R, format: MapFormat) -> Result<GridMap> {
    match format {
        MapFormat::Ascii => load_ascii(source),
        MapFormat::Pgm(meta) => {
            let raster = pgm::read_p5(source)?;
            let cells = raster.pixels.iter().map(|&p| meta.classify(p)).collect();
            GridMap::from_cells(raster.width, raster.height, meta.resolution, cells)
        }
    }
}

pub fn save_map<W: Write>(map: &GridMap, sink: W, format: MapFormat) -> Result<()> {
    match format {
        MapFormat::Ascii => {
            let mut sink = sink;
            sink.write_all(map.to_ascii().as_bytes())?;
            Ok(())
        }
        MapFormat::Pgm(meta) => {
            let raster = Raster {
                width: map.width,
                height: map.height,
                pixels: map.cells.iter().map(|&c| meta.pixel(c)).collect(),
            };
            pgm::write_p5(sink, &raster)
        }
    }
}

fn load_ascii<R: Read>(mut source: R) -> Result<GridMap> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Format(format!("unreadable ASCII map: {e}")))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .filter(|h| !h.trim().is_empty())
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [w, h, res] = fields[..] else {
        return Err(Error::Format(format!(
            "header must be 'W H RES', got {header:?}"
        )));
    };
    let bad = || Error::Format(format!("malformed header {header:?}"));
    let width: usize = w.parse().map_err(|_| bad())?;
    let height: usize = h.parse().map_err(|_| bad())?;
    let resolution: f64 = res.parse().map_err(|_| bad())?;
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(bad());
    }

    let rows: Vec<&str> = lines.collect();
    // Trailing blank lines are tolerated; anything else past H rows is not.
    let used = rows
        .iter()
        .rposition(|r| !r.trim_end_matches('\r').is_empty())
        .map_or(0, |p| p + 1);
    if used != height {
        return Err(Error::Dimension(format!(
            "header declares {height} rows, found {used}"
        )));
    }
    let rows: Vec<&str> = rows[..used]
        .iter()
        .map(|r| r.trim_end_matches('\r'))
        .collect();
    if rows.iter().any(|r| r.chars().count() != width) {
        return Err(Error::Dimension(format!(
            "every row must have {width} glyphs"
        )));
    }
    GridMap::from_rows(&rows, resolution)
}

/// Sidecar path for a PGM map: `office.pgm` -> `office.meta`.
pub fn sidecar_path(pgm_path: &Path) -> PathBuf {
    pgm_path.with_extension("meta")
}

/// Loads a map file, choosing the format by extension (`.pgm` reads its
/// sidecar, anything else is ASCII).
pub fn load_map_file(path: &Path) -> Result<GridMap> {
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let file = std::fs::File::open(path)?;
    if is_pgm {
        let meta = PgmMeta::parse(std::fs::File::open(sidecar_path(path))?)?;
        load_map(file, MapFormat::Pgm(meta))
    } else {
        load_map(file, MapFormat::Ascii)
    }
}

pub fn save_map_file(map: &GridMap, path: &Path) -> Result<()> {
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if is_pgm {
        let meta = PgmMeta {
            resolution: map.resolution,
            ..PgmMeta::default()
        };
        meta.write(std::fs::File::create(sidecar_path(path))?)?;
        save_map(map, file, MapFormat::Pgm(meta))
    } else {
        save_map(map, file, MapFormat::Ascii)
    }
}
