//! Segmentation losses and overlap metrics.

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Clamp applied to predictions before taking logarithms.
pub const BCE_CLAMP: f64 = 1e-7;

fn same_shape(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.grid().nx() != b.grid().nx() || a.grid().ny() != b.grid().ny() {
        return Err(Error::Shape {
            expected: a.values().len(),
            found: b.values().len(),
        });
    }
    Ok(())
}

/// `Σ (mask_p − y_p)²`.
pub fn ball_fit_loss(mask: &ScalarField, target: &ScalarField) -> Result<f64> {
    same_shape(mask, target)?;
    target.ensure_binary()?;
    Ok(mask
        .values()
        .iter()
        .zip(target.values())
        .map(|(m, y)| (m - y) * (m - y))
        .sum())
}

/// `∂/∂mask` of [`ball_fit_loss`].
pub fn ball_fit_loss_grad(mask: &ScalarField, target: &ScalarField) -> Result<ScalarField> {
    same_shape(mask, target)?;
    let values = mask
        .values()
        .iter()
        .zip(target.values())
        .map(|(m, y)| 2.0 * (m - y))
        .collect();
    ScalarField::new(*mask.grid(), values)
}

/// Soft Dice coefficient `2 Σ x y / (Σ x + Σ y)`; two empty inputs score 1.
pub fn dice_coefficient(pred: &ScalarField, target: &ScalarField) -> Result<f64> {
    same_shape(pred, target)?;
    let (mut inter, mut total) = (0.0, 0.0);
    for (x, y) in pred.values().iter().zip(target.values()) {
        inter += x * y;
        total += x + y;
    }
    Ok(if total == 0.0 { 1.0 } else { 2.0 * inter / total })
}

/// Mean binary cross-entropy with predictions clamped to `[1e-7, 1 − 1e-7]`.
pub fn binary_cross_entropy(pred: &ScalarField, target: &ScalarField) -> Result<f64> {
    same_shape(pred, target)?;
    let n = pred.values().len() as f64;
    let sum: f64 = pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(&x, &y)| {
            let x = x.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            -(y * x.ln() + (1.0 - y) * (1.0 - x).ln())
        })
        .sum();
    Ok(sum / n)
}

/// `(1 − Dice) + BCE`.
pub fn dice_bce_loss(pred: &ScalarField, target: &ScalarField) -> Result<f64> {
    target.ensure_binary()?;
    if let Some(p) = pred.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::validation(
            "pred",
            format!("entry {p} is {} outside [0, 1]", pred.values()[p]),
        ));
    }
    Ok(1.0 - dice_coefficient(pred, target)? + binary_cross_entropy(pred, target)?)
}

/// Intersection over union of `{a ≥ 0.5}` and `{b ≥ 0.5}`; two empty masks score 1.
pub fn iou(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    same_shape(a, b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let (x, y) = (x >= 0.5, y >= 0.5);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Dice of the thresholded masks.
pub fn hard_dice(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    dice_coefficient(&a.map(hard), &b.map(hard))
}

fn hard(v: f64) -> f64 {
    if v >= 0.5 {
        1.0
    } else {
        0.0
    }
}

/// Symmetric Hausdorff distance between `{a ≥ 0.5}` and `{b ≥ 0.5}`, in pixels.
///
/// Zero when both sets are empty, infinite when exactly one is.
pub fn hausdorff(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    same_shape(a, b)?;
    let nx = a.grid().nx();
    let a: Vec<bool> = a.values().iter().map(|&v| v >= 0.5).collect();
    let b: Vec<bool> = b.values().iter().map(|&v| v >= 0.5).collect();
    let ab = directed_hausdorff(&a, &b, nx);
    let ba = directed_hausdorff(&b, &a, nx);
    Ok(ab.max(ba))
}

/// `sup_{x ∈ from} dist(x, to)`. The nearest point of `to` from outside it
/// always lies on its inner boundary, so only boundary pixels are scanned.
fn directed_hausdorff(from: &[bool], to: &[bool], nx: usize) -> f64 {
    let ny = from.len() / nx;
    if !from.iter().any(|&x| x) {
        return 0.0;
    }
    if !to.iter().any(|&x| x) {
        return f64::INFINITY;
    }
    let boundary: Vec<(i64, i64)> = (0..to.len())
        .filter(|&p| to[p])
        .filter(|&p| {
            let (i, j) = (p % nx, p / nx);
            (i > 0 && !to[p - 1])
                || (i + 1 < nx && !to[p + 1])
                || (j > 0 && !to[p - nx])
                || (j + 1 < ny && !to[p + nx])
        })
        .map(|p| ((p % nx) as i64, (p / nx) as i64))
        .collect();
    let mut worst = 0i64;
    for p in (0..from.len()).filter(|&p| from[p] && !to[p]) {
        let (i, j) = ((p % nx) as i64, (p / nx) as i64);
        let nearest = boundary
            .iter()
            .map(|&(bi, bj)| (bi - i).pow(2) + (bj - j).pow(2))
            .min()
            .unwrap_or(i64::MAX);
        worst = worst.max(nearest);
    }
    (worst as f64).sqrt()
}
