use serde::{Deserialize, Serialize};

use crate::pitch::{Pitch, Vec2};

pub const GRID_X: usize = 8;
pub const GRID_Y: usize = 5;

/// Success rate per pitch zone of the dribble start, 8 zones along the
/// length and 5 across.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBaseline {
    pub pitch: Pitch,
    /// `rates[ix][iy]`; `None` for zones without training dribbles.
    pub rates: Vec<Vec<Option<f64>>>,
    pub global_rate: f64,
}

pub fn grid_cell(p: Vec2, pitch: &Pitch) -> (usize, usize) {
    let fx = (p.x + pitch.length / 2.0) / pitch.length;
    let fy = (p.y + pitch.width / 2.0) / pitch.width;
    let ix = ((fx * GRID_X as f64).floor().max(0.0) as usize).min(GRID_X - 1);
    let iy = ((fy * GRID_Y as f64).floor().max(0.0) as usize).min(GRID_Y - 1);
    (ix, iy)
}

impl GridBaseline {
    pub fn fit(starts: &[Vec2], labels: &[bool], pitch: Pitch) -> GridBaseline {
        let mut n = [[0usize; GRID_Y]; GRID_X];
        let mut s = [[0usize; GRID_Y]; GRID_X];
        for (p, y) in starts.iter().zip(labels) {
            let (ix, iy) = grid_cell(*p, &pitch);
            n[ix][iy] += 1;
            s[ix][iy] += usize::from(*y);
        }
        let total = labels.len();
        let global_rate = if total == 0 {
            0.5
        } else {
            labels.iter().filter(|y| **y).count() as f64 / total as f64
        };
        let rates = (0..GRID_X)
            .map(|ix| {
                (0..GRID_Y)
                    .map(|iy| (n[ix][iy] > 0).then(|| s[ix][iy] as f64 / n[ix][iy] as f64))
                    .collect()
            })
            .collect();
        GridBaseline { pitch, rates, global_rate }
    }

    pub fn predict(&self, start: Vec2) -> f64 {
        let (ix, iy) = grid_cell(start, &self.pitch);
        self.rates[ix][iy].unwrap_or(self.global_rate)
    }
}
