//! Differentiable Fast Marching on 2D grids.
//!
//! [`fast_march`] computes geodesic distances for an isotropic potential and
//! records the causal structure of the solve; [`vjp`] and
//! [`subgradient_march`] differentiate the distances with respect to the
//! potential; [`fit_potential`] uses both to recover a potential whose soft
//! unit geodesic ball matches a target mask.

pub mod adam;
pub mod ballmask;
pub mod diff;
pub mod eikonal;
pub mod error;
pub mod fit;
pub mod gradcheck;
pub mod grid;
pub mod io;
pub mod loss;
pub mod seed;
pub mod synth;

pub use adam::{AdamConfig, AdamState};
pub use ballmask::{normalize_potential, normalize_potential_vjp, soft_mask, soft_mask_vjp, SoftMask};
pub use diff::{fd_gradient, fd_gradient_at, subgradient_march, subgradient_rows, vjp, FdStep, GradientField, SparseRow};
pub use eikonal::{fast_march, upwind_update, DistanceField, Parent, Update, UpdateCase, UpdateRecord};
pub use error::{Error, Result};
pub use fit::{ball_fit_objective, fit_potential, fit_potential_with, FitConfig, FitResult, FitTrace, Init, TraceRow};
pub use gradcheck::{gradcheck, GradcheckConfig, GradcheckReport};
pub use grid::{square_potential, Axis, Grid2D, PotentialField, ScalarField, SeedSet};
pub use loss::{ball_fit_loss, dice_bce_loss, hausdorff, iou};
pub use seed::{argmax_node, barycenter_from_mask, gaussian_seed_map};
