//! Adjoint-versus-finite-difference check on a random instance.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::{fd_gradient_at, vjp, FdStep};
use crate::eikonal::fast_march;
use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField, SeedSet};
use crate::synth::random_smooth_potential;

/// Percentage of probes that must agree for the check to pass.
pub const PASS_PERCENT: usize = 95;

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckConfig {
    pub nx: usize,
    pub ny: usize,
    /// Grid spacing; `None` means `1 / max(nx, ny)`.
    pub h: Option<f64>,
    pub probes: usize,
    pub tol: f64,
    pub step: FdStep,
    pub rng_seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            nx: 16,
            ny: 16,
            h: None,
            probes: 20,
            tol: 1e-3,
            step: FdStep::Absolute(1e-5),
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub index: usize,
    pub adjoint: f64,
    pub fd: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub seed: usize,
    pub probes: Vec<Probe>,
    pub tol: f64,
}

impl GradcheckReport {
    pub fn within(&self) -> usize {
        self.probes.iter().filter(|p| p.rel_err <= self.tol).count()
    }

    pub fn passed(&self) -> bool {
        100 * self.within() >= PASS_PERCENT * self.probes.len()
    }
}

/// `|a − b| / max(|a|, |b|)`, zero when both are below `1e-14`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-14 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Draws a smooth potential, a seed and a linear loss `⟨w, u⟩`, then compares
/// the adjoint gradient with central differences at `probes` random nodes.
pub fn gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    let h = cfg.h.unwrap_or(1.0 / cfg.nx.max(cfg.ny) as f64);
    let grid = Grid2D::new(cfg.nx, cfg.ny, h)?;
    if cfg.probes == 0 || cfg.probes > grid.len() {
        return Err(Error::validation(
            "probes",
            format!("must be in 1..={}, got {}", grid.len(), cfg.probes),
        ));
    }
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        return Err(Error::validation("tol", format!("must be positive, got {}", cfg.tol)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let phi = random_smooth_potential(&grid, &mut rng)?;
    let seed = rng.gen_range(0..grid.len());
    let seeds = SeedSet::single(&grid, seed)?;
    let weights: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let probes = sample(&mut rng, grid.len(), cfg.probes).into_vec();

    let field = fast_march(&phi, &seeds)?;
    let adjoint = vjp(&field, &phi, &ScalarField::new(grid, weights.clone())?)?;
    let loss = |u: &[f64]| u.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();
    let fd = fd_gradient_at(&phi, &seeds, loss, cfg.step, &probes)?;

    let probes = probes
        .into_iter()
        .zip(fd)
        .map(|(index, fd)| {
            let adjoint = adjoint.values()[index];
            Probe {
                index,
                adjoint,
                fd,
                rel_err: relative_error(adjoint, fd),
            }
        })
        .collect();
    Ok(GradcheckReport {
        seed,
        probes,
        tol: cfg.tol,
    })
}
