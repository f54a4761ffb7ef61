//! Seeded office-like floor plans: a corridor spine with rooms on both
//! sides, each room opening onto the corridor through a door gap.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::gridmap::{CellState, GridMap, Pose, DEFAULT_RESOLUTION};

const MIN_ROOM_WIDTH: usize = 4;
const MIN_ROOM_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    pub rooms: usize,
    pub corridor_width: usize,
    /// Side length in cells; maps are square.
    pub size: usize,
    pub resolution: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            rooms: 6,
            corridor_width: 4,
            size: 128,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

fn rect(map: &mut GridMap, x0: usize, y0: usize, x1: usize, y1: usize, state: CellState) {
    for y in y0..y1 {
        for x in x0..x1 {
            map.set_at(y * map.width() + x, state);
        }
    }
}

/// Splits `total` cells into `n` widths of at least `min`, randomly.
fn split_widths(rng: &mut ChaCha8Rng, total: usize, n: usize, min: usize) -> Vec<usize> {
    let mut widths = vec![min; n];
    let mut slack = total - n * min;
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..3.0)).collect();
    let sum: f64 = weights.iter().sum();
    for (w, wt) in widths.iter_mut().zip(&weights) {
        let extra = ((slack as f64) * wt / sum).floor() as usize;
        *w += extra;
    }
    slack = total - widths.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for i in order.into_iter().cycle().take(slack) {
        widths[i] += 1;
    }
    widths
}

pub fn generate_environment(seed: u64, params: &EnvParams) -> Result<GridMap> {
    let EnvParams {
        rooms,
        corridor_width,
        size,
        resolution,
    } = *params;
    if size < 32 {
        return Err(param_err!("map size must be at least 32 cells, got {size}"));
    }
    if rooms == 0 {
        return Err(param_err!("at least one room is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = GridMap::new(size, size, resolution, CellState::Obstacle)?;

    if rooms == 1 {
        rect(&mut map, 1, 1, size - 1, size - 1, CellState::Free);
        return Ok(map);
    }
    if corridor_width == 0 {
        return Err(param_err!("corridor width must be at least 1"));
    }

    // Rows: 0 border | top band | wall | corridor | wall | bottom band | border.
    let inner = size - 2;
    let bands = inner
        .checked_sub(corridor_width + 2)
        .filter(|b| *b >= 2 * MIN_ROOM_DEPTH)
        .ok_or_else(|| param_err!("corridor width {corridor_width} leaves no room for rooms"))?;
    let spread = (bands / 8).min(bands / 2 - MIN_ROOM_DEPTH);
    let top_depth = bands / 2 - spread + rng.gen_range(0..=2 * spread);
    let top_depth = top_depth.clamp(MIN_ROOM_DEPTH, bands - MIN_ROOM_DEPTH);
    let bottom_depth = bands - top_depth;
    let corridor_y = 1 + top_depth + 1;
    rect(
        &mut map,
        1,
        corridor_y,
        size - 1,
        corridor_y + corridor_width,
        CellState::Free,
    );

    let top_rooms = rooms.div_ceil(2);
    let bottom_rooms = rooms - top_rooms;
    for (count, depth, top) in [
        (top_rooms, top_depth, true),
        (bottom_rooms, bottom_depth, false),
    ] {
        let walls = count - 1;
        if inner < walls + count * MIN_ROOM_WIDTH {
            return Err(param_err!("{rooms} rooms do not fit in a {size}-cell map"));
        }
        let widths = split_widths(&mut rng, inner - walls, count, MIN_ROOM_WIDTH);
        let mut x = 1;
        for w in widths {
            let d = rng.gen_range(MIN_ROOM_DEPTH.max(depth * 2 / 3)..=depth);
            // The room hugs the corridor wall; leftover band depth stays solid.
            let (y0, y1, door_y) = if top {
                (corridor_y - 1 - d, corridor_y - 1, corridor_y - 1)
            } else {
                let y0 = corridor_y + corridor_width + 1;
                (y0, y0 + d, y0 - 1)
            };
            rect(&mut map, x, y0, x + w, y1, CellState::Free);
            let door = rng.gen_range(2..=4).min(w - 2);
            let door_x = x + 1 + rng.gen_range(0..=(w - 2 - door));
            rect(
                &mut map,
                door_x,
                door_y,
                door_x + door,
                door_y + 1,
                CellState::Free,
            );
            x += w + 1;
        }
    }
    Ok(map)
}

/// Uniformly random Free cell of `map`, as a pose at its center.
pub fn seeded_start(map: &GridMap, seed: u64) -> Result<Pose> {
    let free: Vec<usize> = (0..map.len()).filter(|&i| map.is_free(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_57a2_7000_0000);
    let &cell = free
        .choose(&mut rng)
        .ok_or_else(|| param_err!("map has no Free cell to start from"))?;
    let (x, y) = map.coords(cell);
    Ok(Pose::at_cell(x, y))
}
