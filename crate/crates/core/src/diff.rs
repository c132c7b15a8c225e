//! Derivatives of the Fast Marching distance with respect to the potential.
//!
//! Both routes differentiate the local updates with the causal structure of
//! the forward solve held fixed. For a two-parent node with parents `a`, `b`
//!
//! ```text
//! D u_p = (w_a D u_a + w_b D u_b) + h² φ_p / s · 1_p,
//! w_a = (u_p − u_a) / s,  w_b = (u_p − u_b) / s,  s = (u_p − u_a) + (u_p − u_b)
//! ```
//!
//! and a one-parent node copies its parent's row and adds `h · 1_p`.
//! `s` equals `sqrt(2h²φ_p² − (u_a − u_b)²)`, which is positive whenever the
//! quadratic branch was taken.

use crate::eikonal::{fast_march, DistanceField, Update};
use crate::error::{Error, Result};
use crate::grid::{Grid2D, PotentialField, ScalarField, SeedSet};

/// Sparse row vector over grid nodes, sorted by index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    pub fn zero() -> Self {
        SparseRow::default()
    }

    /// The one-entry row `value · 1_p`.
    pub fn unit(p: usize, value: f64) -> Self {
        SparseRow {
            entries: vec![(p, value)],
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, p: usize) -> f64 {
        self.entries
            .binary_search_by_key(&p, |&(q, _)| q)
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(p, c)| c * dense[p]).sum()
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(p, c) in &self.entries {
            out[p] = c;
        }
        out
    }

    /// `wa · a + wb · b` merged by index.
    fn combine(a: &SparseRow, wa: f64, b: &SparseRow, wb: f64) -> SparseRow {
        let (x, y) = (&a.entries, &b.entries);
        let mut out = Vec::with_capacity(x.len() + y.len() + 1);
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            match (x.get(i), y.get(j)) {
                (Some(&(p, c)), Some(&(q, d))) if p == q => {
                    out.push((p, wa * c + wb * d));
                    i += 1;
                    j += 1;
                }
                (Some(&(p, c)), Some(&(q, _))) if p < q => {
                    out.push((p, wa * c));
                    i += 1;
                }
                (Some(&(p, c)), None) => {
                    out.push((p, wa * c));
                    i += 1;
                }
                (_, Some(&(q, d))) => {
                    out.push((q, wb * d));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        SparseRow { entries: out }
    }

    fn push_last_or_merge(&mut self, p: usize, value: f64) {
        match self.entries.binary_search_by_key(&p, |&(q, _)| q) {
            Ok(k) => self.entries[k].1 += value,
            Err(k) => self.entries.insert(k, (p, value)),
        }
    }
}

/// Dense `∂L/∂φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    grid: Grid2D,
    g: Vec<f64>,
}

impl GradientField {
    pub fn new(grid: Grid2D, g: Vec<f64>) -> Result<Self> {
        if g.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: g.len(),
            });
        }
        Ok(GradientField { grid, g })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    pub fn into_values(self) -> Vec<f64> {
        self.g
    }

    pub fn norm(&self) -> f64 {
        self.g.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Coefficients of a non-seed update: parent weights and the local term.
#[derive(Clone, Copy, Debug)]
pub(crate) enum LocalJacobian {
    Seed,
    One { parent: usize, local: f64 },
    Two { a: usize, wa: f64, b: usize, wb: f64, local: f64 },
}

pub(crate) fn local_jacobian(field: &DistanceField, phi: &[f64], p: usize) -> LocalJacobian {
    let h = field.grid().h();
    let u = field.values();
    match field.records()[p].update {
        Update::Seed => LocalJacobian::Seed,
        Update::OneParent(a) => LocalJacobian::One {
            parent: a.index,
            local: h,
        },
        Update::TwoParent(a, b) => {
            let da = u[p] - u[a.index];
            let db = u[p] - u[b.index];
            let s = da + db;
            LocalJacobian::Two {
                a: a.index,
                wa: da / s,
                b: b.index,
                wb: db / s,
                local: h * h * phi[p] / s,
            }
        }
    }
}

/// Forward-mode rows `D_φ u_p` for each target, in target order.
///
/// Only the ancestors of the targets are propagated. Rows may fill in
/// quadratically in the worst case; use [`vjp`] for full gradients.
pub fn subgradient_march(phi: &PotentialField, seeds: &SeedSet, targets: &[usize]) -> Result<Vec<SparseRow>> {
    let field = fast_march(phi, seeds)?;
    subgradient_rows(&field, phi, targets)
}

/// [`subgradient_march`] over an already solved field.
pub fn subgradient_rows(field: &DistanceField, phi: &PotentialField, targets: &[usize]) -> Result<Vec<SparseRow>> {
    let grid = field.grid();
    ensure_grid(grid, phi.grid())?;
    for &t in targets {
        grid.check(t)?;
    }
    let n = grid.len();
    let records = field.records();

    let mut needed = vec![false; n];
    let mut stack: Vec<usize> = targets.to_vec();
    while let Some(p) = stack.pop() {
        if std::mem::replace(&mut needed[p], true) {
            continue;
        }
        stack.extend(records[p].update.parents().map(|a| a.index));
    }

    let mut rows: Vec<Option<SparseRow>> = vec![None; n];
    for &p in field.order() {
        if !needed[p] {
            continue;
        }
        let parent_row = |q: usize| -> Result<&SparseRow> {
            rows[q]
                .as_ref()
                .ok_or_else(|| Error::Internal(format!("parent {q} of {p} has no row yet")))
        };
        let row = match local_jacobian(field, phi.values(), p) {
            LocalJacobian::Seed => SparseRow::zero(),
            LocalJacobian::One { parent, local } => {
                let mut row = parent_row(parent)?.clone();
                row.push_last_or_merge(p, local);
                row
            }
            LocalJacobian::Two { a, wa, b, wb, local } => {
                let mut row = SparseRow::combine(parent_row(a)?, wa, parent_row(b)?, wb);
                row.push_last_or_merge(p, local);
                row
            }
        };
        rows[p] = Some(row);
    }

    targets
        .iter()
        .map(|&t| {
            rows[t]
                .clone()
                .ok_or_else(|| Error::Internal(format!("target {t} was never propagated")))
        })
        .collect()
}

/// Reverse-mode product `Jᵀ ū` where `J = ∂u/∂φ` and `ū = ∂L/∂u`.
///
/// One sweep over the nodes in reverse acceptance order; the Jacobian is
/// never formed.
pub fn vjp(field: &DistanceField, phi: &PotentialField, u_bar: &ScalarField) -> Result<GradientField> {
    let grid = *field.grid();
    ensure_grid(&grid, phi.grid())?;
    ensure_grid(&grid, u_bar.grid())?;
    if field.order().len() != grid.len() {
        return Err(Error::Internal("distance field has an incomplete acceptance order".into()));
    }

    let mut adj = u_bar.values().to_vec();
    let mut g = vec![0.0; grid.len()];
    for &p in field.order().iter().rev() {
        let a_p = adj[p];
        match local_jacobian(field, phi.values(), p) {
            LocalJacobian::Seed => {}
            LocalJacobian::One { parent, local } => {
                g[p] += a_p * local;
                adj[parent] += a_p;
            }
            LocalJacobian::Two { a, wa, b, wb, local } => {
                g[p] += a_p * local;
                adj[a] += a_p * wa;
                adj[b] += a_p * wb;
            }
        }
    }
    GradientField::new(grid, g)
}

fn ensure_grid(expected: &Grid2D, found: &Grid2D) -> Result<()> {
    if expected.nx() != found.nx() || expected.ny() != found.ny() {
        return Err(Error::Shape {
            expected: expected.len(),
            found: found.len(),
        });
    }
    Ok(())
}

/// Finite-difference step policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FdStep {
    /// The same step `t` at every node.
    Absolute(f64),
    /// `t · (1 + |φ_p|)` at node `p`.
    Relative(f64),
}

impl Default for FdStep {
    fn default() -> Self {
        FdStep::Relative(1e-5)
    }
}

impl FdStep {
    fn at(self, phi_p: f64) -> f64 {
        match self {
            FdStep::Absolute(t) => t,
            FdStep::Relative(t) => t * (1.0 + phi_p.abs()),
        }
    }

    fn base(self) -> f64 {
        match self {
            FdStep::Absolute(t) | FdStep::Relative(t) => t,
        }
    }
}

/// Central finite differences of `loss ∘ fast_march` at the probed nodes.
///
/// The loss receives the distance values. Every probe costs two solves.
pub fn fd_gradient_at<F>(phi: &PotentialField, seeds: &SeedSet, loss: F, step: FdStep, probes: &[usize]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let t = step.base();
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::validation("step", format!("must be positive, got {t}")));
    }
    let grid = *phi.grid();
    probes.iter().try_for_each(|&p| grid.check(p))?;

    let mut values = phi.values().to_vec();
    let eval = |values: &[f64]| -> Result<f64> {
        let perturbed = PotentialField::from_values(grid, values.to_vec())?;
        Ok(loss(fast_march(&perturbed, seeds)?.values()))
    };
    probes
        .iter()
        .map(|&p| {
            let base = values[p];
            let dt = step.at(base);
            values[p] = base + dt;
            let plus = eval(&values)?;
            values[p] = base - dt;
            let minus = eval(&values)?;
            values[p] = base;
            Ok((plus - minus) / (2.0 * dt))
        })
        .collect()
}

/// Central finite differences at every node.
pub fn fd_gradient<F>(phi: &PotentialField, seeds: &SeedSet, loss: F, step: FdStep) -> Result<GradientField>
where
    F: Fn(&[f64]) -> f64,
{
    let all: Vec<usize> = (0..phi.grid().len()).collect();
    let g = fd_gradient_at(phi, seeds, loss, step, &all)?;
    GradientField::new(*phi.grid(), g)
}
