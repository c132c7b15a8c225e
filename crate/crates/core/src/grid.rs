//! Grid geometry, scalar fields and seed sets.
//!
//! Nodes are indexed row-major: the node in column `i` and row `j` has
//! linear index `j * nx + i` and sits at physical coordinates `(i h, j h)`.

use std::collections::HashSet;
use std::ops::{Deref, Index};

use crate::error::{Error, Result};

/// Default positivity floor added when squaring a raw field.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Grid axis. `X` moves along a row (changes `i`), `Y` along a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Uniform rectangular grid with `nx` columns, `ny` rows and spacing `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    h: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if nx < 2 {
            return Err(Error::validation("nx", format!("must be at least 2, got {nx}")));
        }
        if ny < 2 {
            return Err(Error::validation("ny", format!("must be at least 2, got {ny}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::validation("h", format!("must be positive and finite, got {h}")));
        }
        if nx.checked_mul(ny).is_none() {
            return Err(Error::validation("nx", "nx * ny overflows".to_string()));
        }
        Ok(Grid2D { nx, ny, h })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: usize) -> bool {
        p < self.len()
    }

    pub fn index(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.nx || j >= self.ny {
            return Err(Error::validation(
                "node",
                format!("({i}, {j}) outside {}x{} grid", self.nx, self.ny),
            ));
        }
        Ok(j * self.nx + i)
    }

    /// Column and row of linear index `p`.
    pub fn coords(&self, p: usize) -> Result<(usize, usize)> {
        self.check(p)?;
        Ok((p % self.nx, p / self.nx))
    }

    /// Physical position of node `p`.
    pub fn position(&self, p: usize) -> Result<(f64, f64)> {
        let (i, j) = self.coords(p)?;
        Ok((i as f64 * self.h, j as f64 * self.h))
    }

    pub(crate) fn check(&self, p: usize) -> Result<()> {
        if p < self.len() {
            Ok(())
        } else {
            Err(Error::Index {
                index: p,
                len: self.len(),
            })
        }
    }

    /// In-bounds axis neighbours of `p`, in the order `-x, +x, -y, +y`.
    pub fn neighbors(&self, p: usize) -> Result<Vec<(usize, Axis)>> {
        self.check(p)?;
        Ok(self.neighbors_unchecked(p).collect())
    }

    pub(crate) fn neighbors_unchecked(&self, p: usize) -> impl Iterator<Item = (usize, Axis)> {
        let (nx, ny) = (self.nx, self.ny);
        let (i, j) = (p % nx, p / nx);
        let left = (i > 0).then(|| (p - 1, Axis::X));
        let right = (i + 1 < nx).then(|| (p + 1, Axis::X));
        let down = (j > 0).then(|| (p - nx, Axis::Y));
        let up = (j + 1 < ny).then(|| (p + nx, Axis::Y));
        [left, right, down, up].into_iter().flatten()
    }

    /// The two neighbours of `p` along `axis`, either of which may be absent.
    pub(crate) fn axis_pair(&self, p: usize, axis: Axis) -> [Option<usize>; 2] {
        let (i, j) = (p % self.nx, p / self.nx);
        match axis {
            Axis::X => [(i > 0).then(|| p - 1), (i + 1 < self.nx).then(|| p + 1)],
            Axis::Y => [
                (j > 0).then(|| p - self.nx),
                (j + 1 < self.ny).then(|| p + self.nx),
            ],
        }
    }

    /// Node nearest to the fractional index-space point `(fi, fj)`.
    pub fn nearest_node(&self, fi: f64, fj: f64) -> Result<usize> {
        if !(fi.is_finite() && fj.is_finite()) {
            return Err(Error::validation("point", format!("({fi}, {fj}) is not finite")));
        }
        let i = fi.round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fj.round().clamp(0.0, (self.ny - 1) as f64) as usize;
        self.index(i, j)
    }

    /// Node closest to the geometric centre of the grid.
    pub fn center(&self) -> usize {
        (self.ny / 2) * self.nx + self.nx / 2
    }
}

/// Real values attached to every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps `values`; entries must be finite.
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        let field = Self::new_unchecked_finite(grid, values)?;
        if let Some(p) = field.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(
                "values",
                format!("entry {p} is not finite ({})", field.values[p]),
            ));
        }
        Ok(field)
    }

    /// Like [`ScalarField::new`] but allows infinities and NaN.
    pub fn new_unchecked_finite(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|p| f(p % grid.nx(), p / grid.nx()))
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Checks every entry is exactly 0 or 1.
    pub fn ensure_binary(&self) -> Result<()> {
        match self.values.iter().position(|&v| v != 0.0 && v != 1.0) {
            Some(p) => Err(Error::validation(
                "mask",
                format!("entry {p} is {} but a binary mask holds only 0 or 1", self.values[p]),
            )),
            None => Ok(()),
        }
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, p: usize) -> &f64 {
        &self.values[p]
    }
}

/// A strictly positive, finite field: the isotropic metric potential.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField(ScalarField);

impl PotentialField {
    pub fn new(field: ScalarField) -> Result<Self> {
        for (p, &v) in field.values().iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(
                    "phi",
                    format!("potential must be positive and finite, entry {p} is {v}"),
                ));
            }
        }
        Ok(PotentialField(field))
    }

    pub fn constant(grid: Grid2D, value: f64) -> Result<Self> {
        Self::new(ScalarField::constant(grid, value))
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        Self::new(ScalarField::new_unchecked_finite(grid, values)?)
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.map(|v| v * c))
    }

    pub fn as_field(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_field(self) -> ScalarField {
        self.0
    }
}

impl Deref for PotentialField {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.0
    }
}

/// `raw² + epsilon` pointwise.
pub fn square_potential(raw: &ScalarField, epsilon: f64) -> Result<PotentialField> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::validation("epsilon", format!("must be positive, got {epsilon}")));
    }
    PotentialField::new(raw.map(|r| r * r + epsilon))
}

/// Nonempty set of distinct source nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedSet(Vec<usize>);

impl SeedSet {
    pub fn new(grid: &Grid2D, points: Vec<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::validation("seeds", "at least one seed is required"));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for &p in &points {
            grid.check(p)?;
            if !seen.insert(p) {
                return Err(Error::validation("seeds", format!("duplicate seed {p}")));
            }
        }
        Ok(SeedSet(points))
    }

    pub fn single(grid: &Grid2D, p: usize) -> Result<Self> {
        Self::new(grid, vec![p])
    }

    /// Seeds given as `(column, row)` pairs.
    pub fn from_coords(grid: &Grid2D, coords: &[(usize, usize)]) -> Result<Self> {
        let points = coords
            .iter()
            .map(|&(i, j)| grid.index(i, j))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, points)
    }

    pub fn points(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, p: usize) -> bool {
        self.0.contains(&p)
    }

    pub(crate) fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        self.0.iter().try_for_each(|&p| grid.check(p))
    }
}
