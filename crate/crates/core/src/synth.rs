//! Synthetic targets and random potentials for experiments and checks.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, PotentialField, ScalarField};

/// Binary disk of physical radius `radius` around the physical point `center`.
pub fn disk_mask(grid: &Grid2D, center: (f64, f64), radius: f64) -> Result<ScalarField> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::validation("radius", format!("must be positive, got {radius}")));
    }
    let h = grid.h();
    let r2 = radius * radius;
    Ok(ScalarField::from_fn(*grid, |i, j| {
        let (x, y) = (i as f64 * h - center.0, j as f64 * h - center.1);
        if x * x + y * y <= r2 {
            1.0
        } else {
            0.0
        }
    }))
}

/// Physical position of the geometric centre of the grid.
pub fn grid_center(grid: &Grid2D) -> (f64, f64) {
    let h = grid.h();
    ((grid.nx() - 1) as f64 * h / 2.0, (grid.ny() - 1) as f64 * h / 2.0)
}

/// Independent uniform values in `[low, high)`, `0 < low < high`.
pub fn random_potential<R: Rng>(grid: &Grid2D, rng: &mut R, low: f64, high: f64) -> Result<PotentialField> {
    if !(low > 0.0 && high > low && high.is_finite()) {
        return Err(Error::validation("range", format!("need 0 < low < high, got [{low}, {high})")));
    }
    let values = (0..grid.len()).map(|_| rng.gen_range(low..high)).collect();
    PotentialField::from_values(*grid, values)
}

/// Smooth positive potential: `1` plus a few random low-frequency waves,
/// bounded to `[0.2, 1.8]`.
pub fn random_smooth_potential<R: Rng>(grid: &Grid2D, rng: &mut R) -> Result<PotentialField> {
    const WAVES: usize = 4;
    let waves: Vec<[f64; 4]> = (0..WAVES)
        .map(|_| {
            [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.0..1.0),
            ]
        })
        .collect();
    let total: f64 = waves.iter().map(|w| w[3]).sum();
    let amp = 0.8 / total.max(f64::MIN_POSITIVE);
    let (sx, sy) = (1.0 / grid.nx() as f64, 1.0 / grid.ny() as f64);
    let field = ScalarField::from_fn(*grid, |i, j| {
        let (x, y) = (i as f64 * sx, j as f64 * sy);
        1.0 + amp
            * waves
                .iter()
                .map(|&[fx, fy, phase, a]| a * (TAU * (fx * x + fy * y) + phase).sin())
                .sum::<f64>()
    });
    PotentialField::new(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disk_is_symmetric_and_sized() {
        let g = Grid2D::new(64, 64, 1.0 / 64.0).unwrap();
        let m = disk_mask(&g, grid_center(&g), 0.3).unwrap();
        let area = m.values().iter().sum::<f64>() * g.h() * g.h();
        assert!((area - std::f64::consts::PI * 0.09).abs() < 0.01, "{area}");
        for j in 0..64 {
            for i in 0..64 {
                assert_eq!(m[g.index(i, j).unwrap()], m[g.index(63 - i, j).unwrap()]);
            }
        }
    }

    #[test]
    fn smooth_potential_bounds() {
        let g = Grid2D::new(16, 12, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let phi = random_smooth_potential(&g, &mut rng).unwrap();
            assert!(phi.values().iter().all(|&v| (0.2 - 1e-12..=1.8 + 1e-12).contains(&v)));
        }
        assert!(random_potential(&g, &mut rng, 0.0, 1.0).is_err());
    }
}
