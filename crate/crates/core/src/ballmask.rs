//! Soft geodesic-ball masks and L¹ normalization of the potential.

use crate::diff::GradientField;
use crate::eikonal::DistanceField;
use crate::error::{Error, Result};
use crate::grid::{Grid2D, PotentialField, ScalarField};

/// Mass bound used by the normalization when enabled.
pub const DEFAULT_LAMBDA: f64 = 5.0;

/// Mask sharpness used by the fitting experiments.
pub const DEFAULT_DELTA: f64 = 0.01;

/// Sharpness of the order of one pixel: `1 / max(nx, ny)`.
pub fn pixel_delta(grid: &Grid2D) -> f64 {
    1.0 / grid.nx().max(grid.ny()) as f64
}

/// Sigmoid relaxation of the unit geodesic ball.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftMask {
    field: ScalarField,
    delta: f64,
}

impl SoftMask {
    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    /// Hard mask `{χ ≥ 0.5}`, i.e. the closed unit ball.
    pub fn threshold(&self) -> ScalarField {
        self.field.map(|m| if m >= 0.5 { 1.0 } else { 0.0 })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::validation("delta", format!("must be positive, got {delta}")))
    }
}

/// `1 − sigmoid(z)` with `z = (u − 1) / δ`, evaluated without overflow.
#[inline]
fn inside(u: f64, delta: f64) -> f64 {
    let z = (u - 1.0) / delta;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `χ^δ(u) = 1 − 1 / (1 + exp(−(u − 1)/δ))` at every node.
pub fn soft_mask(field: &DistanceField, delta: f64) -> Result<SoftMask> {
    check_delta(delta)?;
    let values = field.values().iter().map(|&u| inside(u, delta)).collect();
    Ok(SoftMask {
        field: ScalarField::new(*field.grid(), values)?,
        delta,
    })
}

/// Pulls `∂L/∂χ` back to `∂L/∂u`.
pub fn soft_mask_vjp(field: &DistanceField, delta: f64, mask_bar: &ScalarField) -> Result<ScalarField> {
    check_delta(delta)?;
    let grid = *field.grid();
    if mask_bar.values().len() != grid.len() {
        return Err(Error::Shape {
            expected: grid.len(),
            found: mask_bar.values().len(),
        });
    }
    let values = field
        .values()
        .iter()
        .zip(mask_bar.values())
        .map(|(&u, &bar)| {
            let m = inside(u, delta);
            -bar * m * (1.0 - m) / delta
        })
        .collect();
    ScalarField::new(grid, values)
}

/// Riemann-sum L¹ norm `h² Σ |φ_p|`.
pub fn l1_norm(field: &ScalarField) -> f64 {
    let h = field.grid().h();
    h * h * field.values().iter().map(|v| v.abs()).sum::<f64>()
}

/// `φ / max(‖φ‖₁ / λ, 1)`, returned with the applied scale.
///
/// When the bound is active the scale is nudged down by a few ulps if
/// rounding would otherwise leave the output norm above `λ`, so the result
/// always satisfies the bound and a second application is the identity.
pub fn normalize_potential(phi: &PotentialField, lambda: f64) -> Result<(PotentialField, f64)> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::validation("lambda", format!("must be positive, got {lambda}")));
    }
    let norm = l1_norm(phi);
    if norm <= lambda {
        return Ok((phi.clone(), 1.0));
    }
    let mut scale = lambda / norm;
    loop {
        let out = phi.scaled(scale)?;
        if l1_norm(&out) <= lambda {
            return Ok((out, scale));
        }
        scale *= 1.0 - f64::EPSILON;
    }
}

/// Pulls `∂L/∂φ_out` back through [`normalize_potential`].
///
/// With `s = λ / ‖φ‖₁` active, `∂φ_out,p/∂φ_q = s δ_pq − (s h² / ‖φ‖₁) φ_p`.
pub fn normalize_potential_vjp(phi: &PotentialField, lambda: f64, out_bar: &ScalarField) -> Result<GradientField> {
    let grid = *phi.grid();
    if out_bar.values().len() != grid.len() {
        return Err(Error::Shape {
            expected: grid.len(),
            found: out_bar.values().len(),
        });
    }
    let (_, scale) = normalize_potential(phi, lambda)?;
    if scale == 1.0 {
        return GradientField::new(grid, out_bar.values().to_vec());
    }
    let norm = l1_norm(phi);
    let s = lambda / norm;
    let h2 = grid.h() * grid.h();
    let coupling: f64 = out_bar
        .values()
        .iter()
        .zip(phi.values())
        .map(|(b, p)| b * p)
        .sum::<f64>()
        * s
        * h2
        / norm;
    let g = out_bar.values().iter().map(|&b| s * b - coupling).collect();
    GradientField::new(grid, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eikonal::fast_march;
    use crate::grid::SeedSet;

    fn chain(values: &[f64], h: f64) -> PotentialField {
        let g = Grid2D::new(values.len(), 2, h).unwrap();
        let mut v = values.to_vec();
        v.extend_from_slice(values);
        PotentialField::from_values(g, v).unwrap()
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(inside(1.0, 0.01), 0.5);
        assert_eq!(inside(0.0, 0.01), 1.0 - 1.0 / (1.0 + 100f64.exp()));
        assert!((inside(1.01, 0.01) - 0.268_941_421_369_995_1).abs() < 1e-15);
        assert!(inside(1e6, 1e-3) >= 0.0 && inside(-1e6, 1e-3) <= 1.0);
    }

    #[test]
    fn mask_is_half_on_the_unit_sphere() {
        let phi = chain(&[1.0; 4], 1.0);
        let d = fast_march(&phi, &SeedSet::single(phi.grid(), 0).unwrap()).unwrap();
        let m = soft_mask(&d, 0.01).unwrap();
        assert_eq!(m.values()[1], 0.5);
        assert!(m.values()[0] > 0.999 && m.values()[3] < 1e-3);
        assert_eq!(m.threshold().values()[..4], [1.0, 1.0, 0.0, 0.0]);
        assert!(soft_mask(&d, 0.0).is_err());
    }

    #[test]
    fn mask_vjp_at_midpoint() {
        let phi = chain(&[1.0; 3], 1.0);
        let d = fast_march(&phi, &SeedSet::single(phi.grid(), 0).unwrap()).unwrap();
        let bar = ScalarField::constant(*phi.grid(), 1.0);
        let ubar = soft_mask_vjp(&d, 0.01, &bar).unwrap();
        assert!((ubar[1] + 25.0).abs() < 1e-12);
        let zero = soft_mask_vjp(&d, 0.01, &ScalarField::zeros(*phi.grid())).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalization_examples() {
        // 5x2 grid, h = 1: norm = 10 * 1 = 10
        let phi = chain(&[1.0; 5], 1.0);
        let (out, scale) = normalize_potential(&phi, 5.0).unwrap();
        assert!((scale - 0.5).abs() < 1e-15);
        assert!((l1_norm(&out) - 5.0).abs() < 1e-12);

        let phi = chain(&[0.3; 5], 1.0);
        let (out, scale) = normalize_potential(&phi, 5.0).unwrap();
        assert_eq!(scale, 1.0);
        assert_eq!(out, phi);
        assert!(normalize_potential(&phi, 0.0).is_err());
    }

    #[test]
    fn boundary_norm_is_inactive() {
        let phi = chain(&[0.5; 5], 1.0);
        assert_eq!(l1_norm(&phi), 5.0);
        let (out, scale) = normalize_potential(&phi, 5.0).unwrap();
        assert_eq!(scale, 1.0);
        assert_eq!(out, phi);
        let bar = ScalarField::from_fn(*phi.grid(), |i, j| (i + 3 * j) as f64);
        let g = normalize_potential_vjp(&phi, 5.0, &bar).unwrap();
        assert_eq!(g.values(), bar.values());
    }

    #[test]
    fn norm_uses_cell_area() {
        let phi = chain(&[2.0; 10], 0.1);
        assert!((l1_norm(&phi) - 0.4).abs() < 1e-15);
    }
}
