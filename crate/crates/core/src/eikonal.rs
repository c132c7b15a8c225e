//! Fast Marching solver for the isotropic upwind Eikonal scheme.
//!
//! Besides the distance values, the solver keeps the causal record of every
//! node (which neighbours fed its final update and in which order nodes were
//! accepted). Differentiation replays that record with frozen structure.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2D, PotentialField, ScalarField, SeedSet};

/// Which branch of the local solve produced a node's value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UpdateCase {
    Seed,
    OneParent,
    TwoParent,
}

/// Accepted neighbour whose value entered an update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parent {
    pub index: usize,
    pub axis: Axis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    Seed,
    OneParent(Parent),
    /// Parents on the x axis and the y axis, in that order.
    TwoParent(Parent, Parent),
}

impl Update {
    pub fn case(&self) -> UpdateCase {
        match self {
            Update::Seed => UpdateCase::Seed,
            Update::OneParent(_) => UpdateCase::OneParent,
            Update::TwoParent(..) => UpdateCase::TwoParent,
        }
    }

    pub fn parents(&self) -> impl Iterator<Item = Parent> {
        let (a, b) = match *self {
            Update::Seed => (None, None),
            Update::OneParent(a) => (Some(a), None),
            Update::TwoParent(a, b) => (Some(a), Some(b)),
        };
        a.into_iter().chain(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpdateRecord {
    pub update: Update,
    /// Position of the node in the acceptance order.
    pub rank: usize,
}

/// Local solve of the upwind scheme at one node.
///
/// `u_a` and `u_b` are the smaller neighbour values along the two axes
/// (`+inf` when an axis has no accepted neighbour). The quadratic branch is
/// taken only when `h²φ² > (u_a − u_b)²`; at equality both branches agree
/// and the one-parent form is returned.
pub fn upwind_update(u_a: f64, u_b: f64, phi_p: f64, h: f64) -> Result<(f64, UpdateCase)> {
    if !(phi_p.is_finite() && phi_p > 0.0) {
        return Err(Error::validation("phi", format!("local potential must be positive, got {phi_p}")));
    }
    if u_a.is_infinite() && u_b.is_infinite() {
        return Err(Error::Internal("upwind update with no finite neighbour".into()));
    }
    Ok(solve_local(u_a, u_b, h * phi_p))
}

#[inline]
fn solve_local(u_a: f64, u_b: f64, cost: f64) -> (f64, UpdateCase) {
    if u_a.is_finite() && u_b.is_finite() {
        let gap = u_a - u_b;
        let disc = cost * cost - gap * gap;
        if disc > 0.0 {
            let u = 0.5 * (u_a + u_b + (cost * cost + disc).sqrt());
            return (u, UpdateCase::TwoParent);
        }
    }
    (u_a.min(u_b) + cost, UpdateCase::OneParent)
}

/// Geodesic distance from a seed set together with its causal record.
#[derive(Clone, Debug)]
pub struct DistanceField {
    grid: Grid2D,
    u: Vec<f64>,
    records: Vec<UpdateRecord>,
    order: Vec<usize>,
}

impl DistanceField {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn records(&self) -> &[UpdateRecord] {
        &self.records
    }

    /// Nodes in the order they were accepted.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField::new_unchecked_finite(self.grid, self.u.clone())
            .expect("distance buffer matches its grid")
    }

    /// Binary indicator of the closed sublevel set `{u <= threshold}`.
    pub fn ball(&self, threshold: f64) -> Result<ScalarField> {
        if threshold.is_nan() || threshold < 0.0 {
            return Err(Error::validation("threshold", format!("must be non-negative, got {threshold}")));
        }
        let values = self
            .u
            .iter()
            .map(|&u| if u <= threshold { 1.0 } else { 0.0 })
            .collect();
        ScalarField::new(self.grid, values)
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    dist: f64,
    node: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Max-heap order: smaller distance first, then lower index.
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Smaller accepted neighbour of `p` along `axis`; ties go to the lower index.
fn axis_parent(grid: &Grid2D, u: &[f64], accepted: &[bool], p: usize, axis: Axis) -> Option<(Parent, f64)> {
    let mut best: Option<(Parent, f64)> = None;
    for q in grid.axis_pair(p, axis).into_iter().flatten() {
        if !accepted[q] {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, ub)) => u[q] < ub || (u[q] == ub && q < b.index),
        };
        if better {
            best = Some((Parent { index: q, axis }, u[q]));
        }
    }
    best
}

fn local_update(grid: &Grid2D, u: &[f64], accepted: &[bool], phi: &[f64], p: usize) -> Option<(f64, Update)> {
    let a = axis_parent(grid, u, accepted, p, Axis::X);
    let b = axis_parent(grid, u, accepted, p, Axis::Y);
    let ua = a.map_or(f64::INFINITY, |(_, v)| v);
    let ub = b.map_or(f64::INFINITY, |(_, v)| v);
    if ua.is_infinite() && ub.is_infinite() {
        return None;
    }
    let (value, case) = solve_local(ua, ub, grid.h() * phi[p]);
    let update = match (case, a, b) {
        (UpdateCase::TwoParent, Some((pa, _)), Some((pb, _))) => Update::TwoParent(pa, pb),
        (_, Some((pa, _)), Some((pb, _))) => Update::OneParent(if ua <= ub { pa } else { pb }),
        (_, Some((pa, _)), None) => Update::OneParent(pa),
        (_, None, Some((pb, _))) => Update::OneParent(pb),
        (_, None, None) => unreachable!(),
    };
    Some((value, update))
}

/// Solves the discrete Eikonal equation `|∇u| = φ`, `u = 0` on the seeds.
pub fn fast_march(phi: &PotentialField, seeds: &SeedSet) -> Result<DistanceField> {
    let grid = *phi.grid();
    seeds.check_grid(&grid)?;
    let n = grid.len();
    let phi = phi.values();

    let mut u = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    let mut pending = vec![Update::Seed; n];
    let mut records = vec![UpdateRecord { update: Update::Seed, rank: usize::MAX }; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::with_capacity(4 * (grid.nx() + grid.ny()));

    for &s in seeds.points() {
        u[s] = 0.0;
        heap.push(Candidate { dist: 0.0, node: s });
    }

    while let Some(Candidate { dist, node }) = heap.pop() {
        if accepted[node] || dist != u[node] {
            continue;
        }
        accepted[node] = true;
        records[node] = UpdateRecord {
            update: pending[node],
            rank: order.len(),
        };
        order.push(node);

        for (q, _) in grid.neighbors_unchecked(node) {
            if accepted[q] {
                continue;
            }
            if let Some((value, update)) = local_update(&grid, &u, &accepted, phi, q) {
                if value < u[q] {
                    u[q] = value;
                    pending[q] = update;
                    heap.push(Candidate { dist: value, node: q });
                }
            }
        }
    }

    if order.len() != n {
        return Err(Error::Internal(format!(
            "fast marching accepted {} of {n} nodes",
            order.len()
        )));
    }
    Ok(DistanceField { grid, u, records, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn unit(nx: usize, ny: usize) -> PotentialField {
        PotentialField::constant(Grid2D::new(nx, ny, 1.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn local_update_examples() {
        assert_eq!(upwind_update(0.0, f64::INFINITY, 1.0, 1.0).unwrap(), (1.0, UpdateCase::OneParent));
        let (v, case) = upwind_update(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(case, UpdateCase::TwoParent);
        assert!((v - FRAC_1_SQRT_2).abs() < 1e-15);
        // h²φ² == (u_a - u_b)² resolves to the one-parent branch
        assert_eq!(upwind_update(0.0, 1.0, 1.0, 1.0).unwrap(), (1.0, UpdateCase::OneParent));
    }

    #[test]
    fn local_update_errors() {
        assert!(matches!(
            upwind_update(f64::INFINITY, f64::INFINITY, 1.0, 1.0),
            Err(Error::Internal(_))
        ));
        assert!(matches!(upwind_update(0.0, 1.0, 0.0, 1.0), Err(Error::Validation { .. })));
        assert!(upwind_update(0.0, 1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn two_parent_root_exceeds_both_parents() {
        for &(a, b) in &[(0.0, 0.5), (0.3, 0.2), (1.0, 1.0)] {
            let (v, case) = upwind_update(a, b, 1.0, 1.0).unwrap();
            assert_eq!(case, UpdateCase::TwoParent);
            assert!(v > a && v > b);
            assert!(((v - a).powi(2) + (v - b).powi(2) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn three_by_three_center_seed() {
        let phi = unit(3, 3);
        let seeds = SeedSet::single(phi.grid(), 4).unwrap();
        let d = fast_march(&phi, &seeds).unwrap();
        let u = d.values();
        assert_eq!(u[4], 0.0);
        for p in [1, 3, 5, 7] {
            assert_eq!(u[p], 1.0);
            assert_eq!(d.records()[p].update.case(), UpdateCase::OneParent);
        }
        for p in [0, 2, 6, 8] {
            assert!((u[p] - (1.0 + FRAC_1_SQRT_2)).abs() < 1e-14);
            assert_eq!(d.records()[p].update.case(), UpdateCase::TwoParent);
        }
        assert_eq!(d.order(), &[4, 1, 3, 5, 7, 0, 2, 6, 8]);
    }

    #[test]
    fn hard_ball_of_three_by_three() {
        let phi = unit(3, 3);
        let d = fast_march(&phi, &SeedSet::single(phi.grid(), 4).unwrap()).unwrap();
        let ball = d.ball(1.0).unwrap();
        assert_eq!(ball.values(), &[0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0]);
        let ball = d.ball(0.0).unwrap();
        assert_eq!(ball.values().iter().sum::<f64>(), 1.0);
        assert_eq!(ball[4], 1.0);
        assert!(d.ball(1e300).unwrap().values().iter().all(|&v| v == 1.0));
        assert!(d.ball(-1.0).is_err());
    }

    #[test]
    fn chain_distances() {
        let phi = unit(5, 2);
        let d = fast_march(&phi, &SeedSet::single(phi.grid(), 0).unwrap()).unwrap();
        for i in 0..5 {
            assert_eq!(d.values()[i], i as f64);
        }
    }

    #[test]
    fn records_are_causal() {
        let g = Grid2D::new(7, 5, 0.3).unwrap();
        let phi = PotentialField::from_values(g, (0..35).map(|p| 1.0 + (p % 4) as f64).collect()).unwrap();
        let d = fast_march(&phi, &SeedSet::new(&g, vec![3, 30]).unwrap()).unwrap();
        for w in d.order().windows(2) {
            assert!(d.values()[w[0]] <= d.values()[w[1]]);
        }
        for (p, rec) in d.records().iter().enumerate() {
            assert_eq!(d.order()[rec.rank], p);
            for parent in rec.update.parents() {
                assert!(d.records()[parent.index].rank < rec.rank);
                assert!(d.values()[parent.index] < d.values()[p]);
            }
            if let Update::TwoParent(a, b) = rec.update {
                assert_eq!((a.axis, b.axis), (Axis::X, Axis::Y));
            }
        }
    }

    #[test]
    fn rejects_seeds_from_another_grid() {
        let small = Grid2D::new(2, 2, 1.0).unwrap();
        let big = Grid2D::new(4, 4, 1.0).unwrap();
        let seeds = SeedSet::single(&big, 15).unwrap();
        let phi = PotentialField::constant(small, 1.0).unwrap();
        assert!(fast_march(&phi, &seeds).is_err());
    }
}
