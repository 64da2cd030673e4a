//! Visited-cell coverage of the navigation box.

use alloc::vec::Vec;

use super::nav::NavSpec;
use crate::math;

/// Occupancy grid over the outer box. Walls have no thickness, so every
/// cell holds free space and all of them count as reachable.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    cell: f64,
    nx: usize,
    ny: usize,
    visited: Vec<bool>,
    count: usize,
}

impl CoverageGrid {
    pub fn new(spec: &NavSpec, cell_size: f64) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        let nx = (math::ceil(spec.width / cell_size) as usize).max(1);
        let ny = (math::ceil(spec.height / cell_size) as usize).max(1);
        CoverageGrid {
            cell: cell_size,
            nx,
            ny,
            visited: alloc::vec![false; nx * ny],
            count: 0,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn index(&self, p: &[f64]) -> Option<usize> {
        let (x, y) = (p[0], p[1]);
        if !(x >= 0.0 && y >= 0.0) {
            return None;
        }
        let i = (math::floor(x / self.cell) as usize).min(self.nx - 1);
        let j = (math::floor(y / self.cell) as usize).min(self.ny - 1);
        (x <= self.nx as f64 * self.cell && y <= self.ny as f64 * self.cell).then_some(j * self.nx + i)
    }

    pub fn visit(&mut self, p: &[f64]) {
        if let Some(k) = self.index(p) {
            if !self.visited[k] {
                self.visited[k] = true;
                self.count += 1;
            }
        }
    }

    pub fn is_visited(&self, i: usize, j: usize) -> bool {
        self.visited[j * self.nx + i]
    }

    pub fn visited_cells(&self) -> usize {
        self.count
    }

    pub fn fraction(&self) -> f64 {
        self.count as f64 / self.n_cells() as f64
    }
}

/// Fraction of grid cells containing at least one trajectory point.
pub fn coverage<P: AsRef<[f64]>>(trajectory: &[P], spec: &NavSpec, cell_size: f64) -> f64 {
    let mut grid = CoverageGrid::new(spec, cell_size);
    for p in trajectory {
        grid.visit(p.as_ref());
    }
    grid.fraction()
}
