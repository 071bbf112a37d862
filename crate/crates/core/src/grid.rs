//! Four-part occupancy grid around the ego vehicle and the shared linear
//! embedding that feeds the recurrent network.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::ngsim::{Gaps, NeighborContext, Role};

pub const GRID_CELLS: usize = 10;
pub const CELL_METERS: f64 = 10.0;
pub const GRID_RANGE: f64 = CELL_METERS * GRID_CELLS as f64;
pub const GRID_PARTS: usize = 4;

/// Parts in [`Role`] order: same lane ahead, same lane behind, target lane
/// ahead, target lane behind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub parts: [[u8; GRID_CELLS]; GRID_PARTS],
}

impl OccupancyGrid {
    pub fn part(&self, role: Role) -> &[u8; GRID_CELLS] {
        &self.parts[role.index()]
    }

    pub fn is_empty(&self) -> bool {
        self.parts.iter().all(|p| p.iter().all(|c| *c == 0))
    }

    /// Occupied cell of `role`, if any.
    pub fn cell(&self, role: Role) -> Option<usize> {
        self.parts[role.index()].iter().position(|c| *c != 0)
    }

    /// Debug rendering: four rows of ten bits.
    pub fn to_bit_rows(&self) -> String {
        self.parts
            .iter()
            .map(|p| p.iter().map(|c| if *c != 0 { '1' } else { '0' }).collect::<String>())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Cell index for a distance, or `None` when absent or at/after 100 m.
pub fn cell_index(distance: f64) -> Option<usize> {
    if !(distance.is_finite() && distance >= 0.0) {
        return None;
    }
    let idx = (distance / CELL_METERS).floor() as usize;
    (idx < GRID_CELLS).then_some(idx)
}

/// Centre of a cell, the inverse of [`cell_index`] up to ±5 m.
pub fn cell_center(index: usize) -> f64 {
    (index as f64 + 0.5) * CELL_METERS
}

pub fn encode_gaps(gaps: &Gaps) -> OccupancyGrid {
    let mut grid = OccupancyGrid::default();
    for role in Role::ALL {
        if let Some(idx) = cell_index(gaps.distance(role)) {
            grid.parts[role.index()][idx] = 1;
        }
    }
    grid
}

pub fn encode_grid(ctx: &NeighborContext) -> OccupancyGrid {
    encode_gaps(&ctx.gaps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    /// `embed_dim × GRID_CELLS`
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl EmbeddingParams {
    pub fn zeros(embed_dim: usize) -> Self {
        Self {
            weight: Matrix::zeros(embed_dim, GRID_CELLS),
            bias: vec![0.0; embed_dim],
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn output_dim(&self) -> usize {
        GRID_PARTS * self.embed_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.weight.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}

/// `[W g_pv + b; W g_rv + b; W g_plv + b; W g_pfv + b]`
pub fn embed(grid: &OccupancyGrid, p: &EmbeddingParams) -> Vec<f64> {
    let mut out = vec![0.0; p.output_dim()];
    embed_into(grid, p, &mut out);
    out
}

pub fn embed_into(grid: &OccupancyGrid, p: &EmbeddingParams, out: &mut [f64]) {
    let dim = p.embed_dim();
    assert_eq!(p.weight.shape(), (dim, GRID_CELLS), "embedding weight shape");
    assert_eq!(out.len(), GRID_PARTS * dim, "embedding output length");
    for (part, chunk) in grid.parts.iter().zip(out.chunks_exact_mut(dim)) {
        chunk.copy_from_slice(&p.bias);
        for (c, &cell) in part.iter().enumerate() {
            if cell != 0 {
                let v = cell as f64;
                for (r, o) in chunk.iter_mut().enumerate() {
                    *o += v * p.weight.get(r, c);
                }
            }
        }
    }
}
