//! Independent reference implementations used to check the library.
//! These favour obviousness over speed.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use salient_core::{CellState, GridMap};

pub fn random_map(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    p_obstacle: f64,
    p_unknown: f64,
) -> GridMap {
    let cells = (0..w * h)
        .map(|_| {
            let r: f64 = rng.gen();
            if r < p_obstacle {
                CellState::Obstacle
            } else if r < p_obstacle + p_unknown {
                CellState::Unknown
            } else {
                CellState::Free
            }
        })
        .collect();
    GridMap::from_cells(w, h, 0.1, cells).unwrap()
}

/// Random ground truth with no Unknown cells.
pub fn random_truth(rng: &mut ChaCha8Rng, w: usize, h: usize, p_obstacle: f64) -> GridMap {
    random_map(rng, w, h, p_obstacle, 0.0)
}

/// Masks a ground truth: each cell becomes Unknown with probability `p`.
pub fn partial_view(rng: &mut ChaCha8Rng, truth: &GridMap, p: f64) -> GridMap {
    let cells = truth
        .cells()
        .iter()
        .map(|&c| {
            if rng.gen::<f64>() < p {
                CellState::Unknown
            } else {
                c
            }
        })
        .collect();
    GridMap::from_cells(truth.width(), truth.height(), truth.resolution(), cells).unwrap()
}

fn neighbours(w: usize, h: usize, i: usize) -> Vec<usize> {
    let (x, y) = ((i % w) as i64, (i / w) as i64);
    let mut out = Vec::new();
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let (nx, ny) = (x + dx, y + dy);
            if (dx, dy) != (0, 0) && nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                out.push(ny as usize * w + nx as usize);
            }
        }
    }
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Frontier groups as sets of cells, via union-find over frontier cells.
pub fn oracle_frontiers(map: &GridMap, min_length: usize) -> BTreeSet<Vec<usize>> {
    let (w, h) = (map.width(), map.height());
    let is_f: Vec<bool> = (0..map.len())
        .map(|i| {
            map.at(i) == CellState::Free
                && neighbours(w, h, i)
                    .iter()
                    .any(|&n| map.at(n) == CellState::Unknown)
        })
        .collect();
    let mut uf = UnionFind::new(map.len());
    for i in 0..map.len() {
        if is_f[i] {
            for n in neighbours(w, h, i) {
                if is_f[n] {
                    uf.union(i, n);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in (0..map.len()).filter(|&i| is_f[i]) {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    groups
        .into_values()
        .filter(|g| g.len() >= min_length)
        .collect()
}

/// Non-negative fraction `num / den` with `den > 0`.
#[derive(Clone, Copy)]
struct Frac {
    num: i64,
    den: i64,
}

impl Frac {
    fn new(num: i64, den: i64) -> Self {
        if den < 0 {
            Frac {
                num: -num,
                den: -den,
            }
        } else {
            Frac { num, den }
        }
    }
    fn cmp(self, o: Frac) -> Ordering {
        (self.num as i128 * o.den as i128).cmp(&(o.num as i128 * self.den as i128))
    }
}

/// Does the segment between the centers of `a` and `b` pass through the open
/// interior of cell `c`? Exact, in doubled integer coordinates.
pub fn segment_enters_cell(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> bool {
    let p = (2 * a.0 + 1, 2 * a.1 + 1);
    let d = (2 * (b.0 - a.0), 2 * (b.1 - a.1));
    // Parameter range on [0, 1] where each coordinate is strictly inside.
    let mut lo = Frac::new(0, 1);
    let mut hi = Frac::new(1, 1);
    let mut lo_open = false;
    let mut hi_open = false;
    for (pk, dk, ck) in [(p.0, d.0, c.0), (p.1, d.1, c.1)] {
        let (min, max) = (2 * ck, 2 * ck + 2);
        if dk == 0 {
            if !(min < pk && pk < max) {
                return false;
            }
            continue;
        }
        let (t1, t2) = (Frac::new(min - pk, dk), Frac::new(max - pk, dk));
        let (enter, leave) = if t1.cmp(t2) == Ordering::Less {
            (t1, t2)
        } else {
            (t2, t1)
        };
        if enter.cmp(lo) != Ordering::Less {
            lo = enter;
            lo_open = true;
        }
        if leave.cmp(hi) != Ordering::Greater {
            hi = leave;
            hi_open = true;
        }
    }
    match lo.cmp(hi) {
        Ordering::Less => true,
        Ordering::Equal => !lo_open && !hi_open,
        Ordering::Greater => false,
    }
}

/// Line of sight between cell centers; only cells strictly between the
/// endpoints can block.
pub fn oracle_los(
    map: &GridMap,
    from: (i64, i64),
    to: (i64, i64),
    blocks: impl Fn(CellState) -> bool,
) -> bool {
    let (x0, x1) = (from.0.min(to.0), from.0.max(to.0));
    let (y0, y1) = (from.1.min(to.1), from.1.max(to.1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            if (x, y) == from || (x, y) == to {
                continue;
            }
            let state = map.get(x as usize, y as usize).unwrap();
            if blocks(state) && segment_enters_cell(from, to, (x, y)) {
                return false;
            }
        }
    }
    true
}

fn within(from: (i64, i64), to: (i64, i64), range_cells: f64) -> bool {
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);
    ((dx * dx + dy * dy) as f64) <= range_cells * range_cells
}

/// Cells a full-circle scan from `origin` observes, with their state.
pub fn oracle_scan(
    truth: &GridMap,
    origin: (i64, i64),
    range_cells: f64,
) -> Vec<(usize, CellState)> {
    let mut out = Vec::new();
    for i in 0..truth.len() {
        let (x, y) = truth.coords(i);
        let t = (x as i64, y as i64);
        let state = truth.at(i);
        if state != CellState::Unknown
            && within(origin, t, range_cells)
            && oracle_los(truth, origin, t, |s| s == CellState::Obstacle)
        {
            out.push((i, state));
        }
    }
    out
}

/// Rounded centroid when Free in `map`, else the closest frontier cell to
/// the centroid with ties to the lower index.
pub fn oracle_anchor(map: &GridMap, cells: &[usize]) -> usize {
    let n = cells.len() as f64;
    let cx = cells.iter().map(|&c| map.coords(c).0 as f64).sum::<f64>() / n;
    let cy = cells.iter().map(|&c| map.coords(c).1 as f64).sum::<f64>() / n;
    let (rx, ry) = (cx.round() as usize, cy.round() as usize);
    if rx < map.width() && ry < map.height() && map.at(map.index(rx, ry)) == CellState::Free {
        return map.index(rx, ry);
    }
    let mut best = cells[0];
    let mut best_d = f64::INFINITY;
    for &c in cells {
        let (x, y) = map.coords(c);
        let d = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        if d < best_d || (d == best_d && c < best) {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Unknown cells within range of the anchor not hidden by a known obstacle.
pub fn oracle_ig_optimistic(map: &GridMap, cells: &[usize], range_cells: f64) -> usize {
    let (ax, ay) = map.coords(oracle_anchor(map, cells));
    let origin = (ax as i64, ay as i64);
    (0..map.len())
        .filter(|&i| map.at(i) == CellState::Unknown)
        .filter(|&i| {
            let (x, y) = map.coords(i);
            let t = (x as i64, y as i64);
            within(origin, t, range_cells)
                && oracle_los(map, origin, t, |s| s == CellState::Obstacle)
        })
        .count()
}

/// Single-source shortest path lengths over Free cells by edge relaxation.
pub fn bellman_ford(map: &GridMap, source: usize) -> Vec<Option<f64>> {
    let (w, h) = (map.width(), map.height());
    let res = map.resolution();
    let mut dist = vec![f64::INFINITY; map.len()];
    dist[source] = 0.0;
    let mut edges = Vec::new();
    for i in (0..map.len()).filter(|&i| map.at(i) == CellState::Free) {
        for n in neighbours(w, h, i) {
            if map.at(n) == CellState::Free {
                let diagonal = i % w != n % w && i / w != n / w;
                edges.push((i, n, if diagonal { res * 2f64.sqrt() } else { res }));
            }
        }
    }
    loop {
        let mut changed = false;
        for &(a, b, c) in &edges {
            if dist[a] + c < dist[b] - 1e-12 {
                dist[b] = dist[a] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist.into_iter()
        .map(|d| d.is_finite().then_some(d))
        .collect()
}

/// Classic two-pass connected-component labeling (8-connectivity) of cells
/// with value at least `theta`; returns (sorted cells, mean raw value).
pub fn oracle_areas(values: &[f64], w: usize, h: usize, theta: f64) -> Vec<(Vec<usize>, f64)> {
    let on: Vec<bool> = values.iter().map(|&v| v >= theta && v > 0.0).collect();
    let mut labels = vec![usize::MAX; values.len()];
    let mut uf = UnionFind::new(values.len());
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !on[i] {
                continue;
            }
            let mut prior = Vec::new();
            let coords = [(-1i64, -1i64), (0, -1), (1, -1), (-1, 0)];
            for (dx, dy) in coords {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx >= 0 && ny >= 0 && nx < w as i64 {
                    let n = ny as usize * w + nx as usize;
                    if on[n] {
                        prior.push(labels[n]);
                    }
                }
            }
            labels[i] = prior.iter().copied().min().unwrap_or(i);
            for p in prior {
                uf.union(p, labels[i]);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in (0..values.len()).filter(|&i| on[i]) {
        let root = uf.find(labels[i]);
        groups.entry(root).or_default().push(i);
    }
    let mut out: Vec<(Vec<usize>, f64)> = groups
        .into_values()
        .map(|cells| {
            let mean = cells.iter().map(|&c| values[c]).sum::<f64>() / cells.len() as f64;
            (cells, mean)
        })
        .collect();
    out.sort_by_key(|(cells, _)| cells[0]);
    out
}

/// First cumulative distance at which coverage reaches `x`, by a plain scan.
pub fn first_reach(points: &[(f64, f64)], x: f64) -> Option<f64> {
    for &(coverage, distance) in points {
        if coverage >= x {
            return Some(distance);
        }
    }
    None
}

/// Min-max normalisation, written out long-hand.
pub fn minmax(values: &[f64]) -> Vec<f64> {
    let mut lo = values[0];
    let mut hi = values[0];
    for &v in values {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    values
        .iter()
        .map(|&v| if hi == lo { 0.0 } else { (v - lo) / (hi - lo) })
        .collect()
}

/// Unbiased utility: `alpha * ig - (1 - alpha) * dist` on normalised inputs.
pub fn unbiased_utility(alpha: f64, ig: &[f64], dist: &[f64]) -> Vec<f64> {
    let (gn, dn) = (minmax(ig), minmax(dist));
    gn.iter()
        .zip(&dn)
        .map(|(g, d)| alpha * g - (1.0 - alpha) * d)
        .collect()
}
