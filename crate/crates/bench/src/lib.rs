//! Deterministic fixtures shared by the benchmarks.

use geomarch::synth::{disk_mask, grid_center};
use geomarch::{Grid2D, PotentialField, ScalarField, SeedSet};

/// Smooth, strictly positive potential on an `n × n` unit grid with a centre seed.
pub fn smooth_instance(n: usize) -> (PotentialField, SeedSet) {
    let grid = Grid2D::new(n, n, 1.0 / n as f64).expect("n ≥ 2");
    let (x0, y0) = (0.37, 0.61);
    let values = (0..grid.len())
        .map(|p| {
            let (x, y) = grid.position(p).expect("in range");
            1.0 + 0.5 * (6.0 * x + x0).sin() * (4.0 * y + y0).cos()
        })
        .collect();
    let phi = PotentialField::from_values(grid, values).expect("positive");
    let seeds = SeedSet::single(&grid, grid.center()).expect("in range");
    (phi, seeds)
}

/// Centred disk of radius 0.3 on an `n × n` unit grid.
pub fn disk_target(n: usize) -> ScalarField {
    let grid = Grid2D::new(n, n, 1.0 / n as f64).expect("n ≥ 2");
    disk_mask(&grid, grid_center(&grid), 0.3).expect("valid disk")
}
