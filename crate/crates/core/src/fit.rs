//! Inverse problem: fit a potential whose soft unit geodesic ball matches a
//! binary target mask.
//!
//! Forward chain per iteration:
//!
//! ```text
//! raw ─▶ φ = raw² + ε ─▶ [φ / max(‖φ‖₁/λ, 1)] ─▶ u = FM(φ, seed) ─▶ χ^δ(u) ─▶ Σ (χ − y)²
//! ```
//!
//! The gradient is pulled back through every stage and fed to Adam.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adam::{AdamConfig, AdamState};
use crate::ballmask::{normalize_potential, normalize_potential_vjp, soft_mask, soft_mask_vjp, DEFAULT_DELTA};
use crate::diff::vjp;
use crate::eikonal::fast_march;
use crate::error::{Error, Result};
use crate::grid::{square_potential, PotentialField, ScalarField, SeedSet, DEFAULT_EPSILON};
use crate::loss::{ball_fit_loss, ball_fit_loss_grad, iou};
use crate::seed::barycenter_from_mask;

/// Initial value of the raw (pre-squaring) field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Constant(f64),
    /// Constant chosen so the initial unit ball is a Euclidean disk of
    /// radius `margin · R` around the seed, `R` being the distance from the
    /// seed to the farthest target pixel. With `margin > 1` the ball starts
    /// just around the target, where the soft mask still has gradient.
    EnclosingBall { margin: f64 },
    /// Uniform in `[low, high)`, drawn from the configured RNG seed.
    Uniform { low: f64, high: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub adam: AdamConfig,
    pub delta: f64,
    pub epsilon: f64,
    /// L¹ mass bound; `None` disables normalization.
    pub lambda: Option<f64>,
    pub max_iters: usize,
    pub init: Init,
    pub rng_seed: u64,
    /// Stop once the best loss improved by less than `early_stop_tol` over
    /// the last `early_stop_window` iterations. A window of 0 disables this.
    pub early_stop_window: usize,
    pub early_stop_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            adam: AdamConfig::default(),
            delta: DEFAULT_DELTA,
            epsilon: DEFAULT_EPSILON,
            lambda: None,
            max_iters: 2000,
            init: Init::EnclosingBall { margin: 1.5 },
            rng_seed: 0,
            early_stop_window: 50,
            early_stop_tol: 1e-8,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(name, format!("must be positive, got {v}")))
            }
        };
        positive("delta", self.delta)?;
        positive("epsilon", self.epsilon)?;
        if let Some(l) = self.lambda {
            positive("lambda", l)?;
        }
        if self.max_iters == 0 {
            return Err(Error::validation("max_iters", "must be at least 1"));
        }
        match self.init {
            Init::Constant(c) if !c.is_finite() => {
                return Err(Error::validation("init", "constant must be finite"));
            }
            Init::Uniform { low, high } if !(low.is_finite() && high.is_finite() && low < high) => {
                return Err(Error::validation("init", format!("need low < high, got [{low}, {high})")));
            }
            Init::EnclosingBall { margin } if !(margin.is_finite() && margin > 0.0) => {
                return Err(Error::validation("init", format!("margin must be positive, got {margin}")));
            }
            _ => {}
        }
        if self.early_stop_tol.is_nan() || self.early_stop_tol < 0.0 {
            return Err(Error::validation("early_stop_tol", "must be non-negative"));
        }
        Ok(())
    }

    fn initial_raw(&self, target: &ScalarField, seeds: &SeedSet) -> Vec<f64> {
        let n = target.values().len();
        match self.init {
            Init::Constant(c) => vec![c; n],
            Init::EnclosingBall { margin } => {
                let radius = margin * target_radius(target, seeds);
                let phi = (1.0 / radius - self.epsilon).max(self.epsilon);
                vec![phi.sqrt(); n]
            }
            Init::Uniform { low, high } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
                (0..n).map(|_| rng.gen_range(low..high)).collect()
            }
        }
    }
}

/// One row of the optimization history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub loss: f64,
    pub iou: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitTrace {
    pub rows: Vec<TraceRow>,
}

impl FitTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Running minimum of the loss.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.rows
            .iter()
            .scan(f64::INFINITY, |best, r| {
                *best = best.min(r.loss);
                Some(*best)
            })
            .collect()
    }
}

/// Loss, gradient and intermediate fields for one raw field.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub loss: f64,
    pub grad_raw: Vec<f64>,
    /// Potential fed to Fast Marching (after squaring and normalization).
    pub phi: PotentialField,
    pub mask: ScalarField,
}

/// Evaluates the ball-fitting objective and its gradient with respect to `raw`.
pub fn ball_fit_objective(raw: &ScalarField, target: &ScalarField, seeds: &SeedSet, cfg: &FitConfig) -> Result<Evaluation> {
    let squared = square_potential(raw, cfg.epsilon)?;
    let phi = match cfg.lambda {
        Some(lambda) => normalize_potential(&squared, lambda)?.0,
        None => squared.clone(),
    };
    let field = fast_march(&phi, seeds)?;
    let mask = soft_mask(&field, cfg.delta)?;
    let loss = ball_fit_loss(mask.field(), target)?;

    let mask_bar = ball_fit_loss_grad(mask.field(), target)?;
    let u_bar = soft_mask_vjp(&field, cfg.delta, &mask_bar)?;
    let phi_bar = vjp(&field, &phi, &u_bar)?;
    let squared_bar = match cfg.lambda {
        Some(lambda) => {
            let bar = ScalarField::new(*phi.grid(), phi_bar.into_values())?;
            normalize_potential_vjp(&squared, lambda, &bar)?.into_values()
        }
        None => phi_bar.into_values(),
    };
    let grad_raw = squared_bar
        .iter()
        .zip(raw.values())
        .map(|(g, r)| 2.0 * r * g)
        .collect();

    Ok(Evaluation {
        loss,
        grad_raw,
        phi,
        mask: mask.into_field(),
    })
}

#[derive(Clone, Debug)]
pub struct FitResult {
    /// Potential (as fed to Fast Marching) at the best iteration.
    pub phi: PotentialField,
    /// Soft mask at the best iteration.
    pub mask: ScalarField,
    pub best_iter: usize,
    pub best_loss: f64,
    pub seeds: SeedSet,
    pub trace: FitTrace,
}

/// Largest Euclidean distance from a seed to a positive target pixel, at
/// least one grid step.
fn target_radius(target: &ScalarField, seeds: &SeedSet) -> f64 {
    let grid = target.grid();
    let mut radius = grid.h();
    for (p, _) in target.values().iter().enumerate().filter(|(_, &y)| y == 1.0) {
        let (x, y) = grid.position(p).expect("index within grid");
        let nearest_seed = seeds
            .points()
            .iter()
            .map(|&s| {
                let (sx, sy) = grid.position(s).expect("seed within grid");
                (x - sx).hypot(y - sy)
            })
            .fold(f64::INFINITY, f64::min);
        radius = radius.max(nearest_seed);
    }
    radius
}

/// Default seed: the node nearest to the barycenter of the mask.
pub fn default_seed(target: &ScalarField) -> Result<SeedSet> {
    let (bi, bj) = barycenter_from_mask(target)?;
    let grid = target.grid();
    SeedSet::single(grid, grid.nearest_node(bi, bj)?)
}

/// [`fit_potential_with`] without a progress callback.
pub fn fit_potential(target: &ScalarField, seeds: Option<SeedSet>, cfg: &FitConfig) -> Result<FitResult> {
    fit_potential_with(target, seeds, cfg, |_| Ok(()))
}

/// Runs Adam on the raw field, calling `on_iter` after every evaluation.
pub fn fit_potential_with<F>(target: &ScalarField, seeds: Option<SeedSet>, cfg: &FitConfig, mut on_iter: F) -> Result<FitResult>
where
    F: FnMut(&TraceRow) -> Result<()>,
{
    cfg.validate()?;
    target.ensure_binary()?;
    let grid = *target.grid();
    let seeds = match seeds {
        Some(s) => s,
        None => default_seed(target)?,
    };
    seeds.check_grid(&grid)?;

    let mut raw = ScalarField::new(grid, cfg.initial_raw(target, &seeds))?;
    let mut adam = AdamState::new(grid.len());
    let mut trace = FitTrace::default();
    let mut best: Option<(usize, f64, PotentialField, ScalarField)> = None;
    let mut best_history = Vec::with_capacity(cfg.max_iters);

    for iter in 0..cfg.max_iters {
        let eval = ball_fit_objective(&raw, target, &seeds, cfg)?;
        let grad_norm = eval.grad_raw.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !eval.loss.is_finite() || !grad_norm.is_finite() {
            return Err(Error::Numerical(format!(
                "iteration {iter}: loss {} gradient norm {grad_norm}",
                eval.loss
            )));
        }
        let row = TraceRow {
            iter,
            loss: eval.loss,
            iou: iou(&eval.mask, target)?,
            grad_norm,
        };
        trace.rows.push(row);
        on_iter(&row)?;

        if best.as_ref().is_none_or(|b| eval.loss < b.1) {
            best = Some((iter, eval.loss, eval.phi, eval.mask));
        }
        let best_loss = best.as_ref().map_or(f64::INFINITY, |b| b.1);
        best_history.push(best_loss);
        let w = cfg.early_stop_window;
        if w > 0 && iter >= w && best_history[iter - w] - best_loss < cfg.early_stop_tol {
            break;
        }

        adam.step(raw.values_mut(), &eval.grad_raw, &cfg.adam)?;
    }

    let (best_iter, best_loss, phi, mask) = best.ok_or_else(|| Error::Internal("no iterations ran".into()))?;
    Ok(FitResult {
        phi,
        mask,
        best_iter,
        best_loss,
        seeds,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use crate::synth::{disk_mask, grid_center};

    fn small_disk() -> ScalarField {
        let g = Grid2D::new(24, 24, 1.0 / 24.0).unwrap();
        disk_mask(&g, grid_center(&g), 0.3).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        let bad = [
            FitConfig { delta: 0.0, ..FitConfig::default() },
            FitConfig { max_iters: 0, ..FitConfig::default() },
            FitConfig { lambda: Some(-5.0), ..FitConfig::default() },
            FitConfig { init: Init::Uniform { low: 1.0, high: 1.0 }, ..FitConfig::default() },
            FitConfig { init: Init::EnclosingBall { margin: 0.0 }, ..FitConfig::default() },
            FitConfig { early_stop_tol: f64::NAN, ..FitConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn enclosing_init_sets_ball_radius() {
        let target = small_disk();
        let seeds = default_seed(&target).unwrap();
        let r = target_radius(&target, &seeds);
        assert!((r - 0.3).abs() < 2.0 * target.grid().h(), "{r}");
        let cfg = FitConfig::default();
        let raw = cfg.initial_raw(&target, &seeds);
        let phi = raw[0] * raw[0] + cfg.epsilon;
        assert!((1.0 / phi - 1.5 * r).abs() < 1e-9);
    }

    #[test]
    fn default_seed_is_mask_center() {
        let target = small_disk();
        let seeds = default_seed(&target).unwrap();
        let (i, j) = target.grid().coords(seeds.points()[0]).unwrap();
        assert!((11..=12).contains(&i) && (11..=12).contains(&j));
        assert!(default_seed(&ScalarField::zeros(*target.grid())).is_err());
    }

    #[test]
    fn short_fit_reduces_loss_and_reports_each_iteration() {
        let target = small_disk();
        let cfg = FitConfig { max_iters: 40, ..FitConfig::default() };
        let mut seen = 0;
        let result = fit_potential_with(&target, None, &cfg, |row| {
            assert_eq!(row.iter, seen);
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, result.trace.len());
        let best = result.trace.best_so_far();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        assert!(result.best_loss < result.trace.rows[0].loss);
        assert_eq!(result.best_loss, *best.last().unwrap());
    }

    #[test]
    fn non_binary_target_is_rejected() {
        let target = small_disk().map(|v| v * 0.5);
        assert!(fit_potential(&target, None, &FitConfig::default()).is_err());
    }

    #[test]
    fn callback_errors_abort() {
        let target = small_disk();
        let err = fit_potential_with(&target, None, &FitConfig::default(), |_| {
            Err(Error::Numerical("stop".into()))
        })
        .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }
}
