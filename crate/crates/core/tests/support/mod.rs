//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use geomarch::{Grid2D, PotentialField, ScalarField, SeedSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest `u` solving `Σ_i max(u − v_i, 0)² = c²` for per-axis minima `v`,
/// found by trying one and then two active terms.
fn upwind_root(mut v: [f64; 2], c: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let one = v[0] + c;
    if one <= v[1] {
        return one;
    }
    // (u − a)² + (u − b)² = c²
    let (a, b) = (v[0], v[1]);
    let s = a + b;
    let disc = s * s - 2.0 * (a * a + b * b - c * c);
    (s + disc.sqrt()) / 2.0
}

/// Label-correcting solver: Gauss–Seidel sweeps of the local upwind solve
/// until no value changes.
pub fn label_correcting(phi: &PotentialField, seeds: &SeedSet) -> Vec<f64> {
    let g = *phi.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let mut u = vec![f64::INFINITY; g.len()];
    for &s in seeds.points() {
        u[s] = 0.0;
    }
    for _sweep in 0..100_000 {
        let mut changed = false;
        for p in 0..g.len() {
            if seeds.contains(p) {
                continue;
            }
            let (i, j) = (p % nx, p / nx);
            let mut vx = f64::INFINITY;
            if i > 0 {
                vx = vx.min(u[p - 1]);
            }
            if i + 1 < nx {
                vx = vx.min(u[p + 1]);
            }
            let mut vy = f64::INFINITY;
            if j > 0 {
                vy = vy.min(u[p - nx]);
            }
            if j + 1 < ny {
                vy = vy.min(u[p + nx]);
            }
            if vx.is_infinite() && vy.is_infinite() {
                continue;
            }
            let cand = upwind_root([vx, vy], h * phi[p]);
            if cand < u[p] {
                u[p] = cand;
                changed = true;
            }
        }
        if !changed {
            return u;
        }
    }
    panic!("label-correcting oracle did not converge");
}

pub fn random_grid_potential(rng: &mut ChaCha8Rng, nx: usize, ny: usize, h: f64) -> PotentialField {
    let g = Grid2D::new(nx, ny, h).unwrap();
    geomarch::synth::random_potential(&g, rng, 0.2, 3.0).unwrap()
}

pub fn random_field(rng: &mut ChaCha8Rng, grid: &Grid2D, low: f64, high: f64) -> ScalarField {
    use rand::Rng;
    ScalarField::new(*grid, (0..grid.len()).map(|_| rng.gen_range(low..high)).collect()).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Euclidean distance cone around node `c`.
pub fn euclidean_cone(grid: &Grid2D, c: usize) -> Vec<f64> {
    let (cx, cy) = grid.position(c).unwrap();
    (0..grid.len())
        .map(|p| {
            let (x, y) = grid.position(p).unwrap();
            (x - cx).hypot(y - cy)
        })
        .collect()
}
