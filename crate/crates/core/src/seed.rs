//! Seed placement: mask barycenters and Gaussian seed heatmaps.
//!
//! Coordinates here are fractional `(column, row)` index positions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};

/// Default Gaussian width in pixels.
pub const DEFAULT_SIGMA: f64 = 2.0;

/// Mean index position of the positive pixels of a binary mask.
pub fn barycenter_from_mask(target: &ScalarField) -> Result<(f64, f64)> {
    target.ensure_binary()?;
    let nx = target.grid().nx();
    let (mut si, mut sj, mut count) = (0.0, 0.0, 0usize);
    for (p, _) in target.values().iter().enumerate().filter(|(_, &v)| v == 1.0) {
        si += (p % nx) as f64;
        sj += (p / nx) as f64;
        count += 1;
    }
    if count == 0 {
        return Err(Error::validation("mask", "empty mask has no barycenter"));
    }
    Ok((si / count as f64, sj / count as f64))
}

/// Normalized Gaussian bump `exp(−r² / 2σ²) / (√(2π) σ)` centred on `center`.
pub fn gaussian_seed_map(grid: &Grid2D, center: (f64, f64), sigma: f64) -> Result<ScalarField> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::validation("sigma", format!("must be positive, got {sigma}")));
    }
    let (bi, bj) = center;
    let in_range = |v: f64, n: usize| v.is_finite() && (0.0..=(n - 1) as f64).contains(&v);
    if !in_range(bi, grid.nx()) || !in_range(bj, grid.ny()) {
        return Err(Error::validation(
            "barycenter",
            format!("({bi}, {bj}) outside {}x{} grid", grid.nx(), grid.ny()),
        ));
    }
    let peak = 1.0 / ((2.0 * PI).sqrt() * sigma);
    let two_var = 2.0 * sigma * sigma;
    Ok(ScalarField::from_fn(*grid, |i, j| {
        let r2 = (i as f64 - bi).powi(2) + (j as f64 - bj).powi(2);
        peak * (-r2 / two_var).exp()
    }))
}

/// Node holding the largest value; ties go to the lower index.
pub fn argmax_node(field: &ScalarField) -> usize {
    let mut best = 0;
    for (p, &v) in field.values().iter().enumerate() {
        if v > field[best] {
            best = p;
        }
    }
    best
}
