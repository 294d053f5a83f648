//! Cells of a grid-supported source measure carried along the barycentric
//! transport map; the cell measures follow the finite-difference Jacobian.

use super::{DiscreteMeasure, TransportPlan};
use crate::error::{Error, Result};
use crate::spaces::{rotate, Discretization, GridLayout, ModelSpace, Point, Tangent};
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::sync::Arc;

/// Total degree of the polynomial fit of 2D transport velocities.
const FIELD_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug)]
enum Stencil {
    Central(usize, usize),
    Forward(usize, usize),
    Backward(usize, usize),
    Forward1(usize),
    Backward1(usize),
}

#[derive(Clone, Debug)]
pub struct LagrangianFlow {
    space: ModelSpace,
    weights: Vec<f64>,
    /// Support nodes first, then helper nodes at grid neighbors of isolated cells.
    starts: Vec<Point>,
    velocities: Vec<Tangent>,
    stencils: Vec<[Stencil; 2]>,
    dim: usize,
}

impl LagrangianFlow {
    pub fn from_plan(plan: &TransportPlan) -> Result<Self> {
        if plan.q != 2.0 {
            return Err(Error::InvalidArgument("Lagrangian flow needs a q = 2 plan".into()));
        }
        let disc: &Discretization = &plan.source.disc;
        let space = *disc.space();
        let mut vel = vec![[0.0; 2]; disc.len()];
        let mut row_mass = vec![0.0; disc.len()];
        for &(i, j, m) in &plan.mass {
            let v = space.log(&disc.points()[i], &plan.target.disc.points()[j])?;
            vel[i][0] += m * v[0];
            vel[i][1] += m * v[1];
            row_mass[i] += m;
        }
        for (v, &r) in vel.iter_mut().zip(&row_mass) {
            if r > 0.0 {
                v[0] /= r;
                v[1] /= r;
            }
        }
        if space.dim() == 2 {
            if let Some(grid) = disc.grid() {
                // Discrete plans split mass between neighboring cells; the
                // barycentric field is replaced by its least-squares
                // polynomial fit so the Jacobian sees the smooth map.
                let fit = smooth_field(grid, plan.source.weights(), &vel, FIELD_DEGREE)?;
                return Self::build(disc, plan.source.weights(), &fit, true);
            }
        }
        Self::build(disc, plan.source.weights(), &vel, false)
    }

    /// Flow of the cells of a grid measure along a velocity field prescribed on
    /// every grid cell (chart frame). Zero-weight cells carry no mass but still
    /// serve as difference nodes.
    pub fn from_velocities(disc: &Discretization, weights: &[f64], velocities: &[Tangent]) -> Result<Self> {
        Self::build(disc, weights, velocities, true)
    }

    fn build(disc: &Discretization, weights: &[f64], velocities: &[Tangent], field: bool) -> Result<Self> {
        if weights.len() != disc.len() || velocities.len() != disc.len() {
            return Err(Error::InvalidArgument("weights and velocities must match the discretization".into()));
        }
        let grid = disc
            .grid()
            .ok_or_else(|| Error::InvalidArgument("Lagrangian flow needs a grid-structured source".into()))?;
        let space = *disc.space();
        let dim = space.dim();
        let support: Vec<usize> = (0..disc.len()).filter(|&i| weights[i] > 0.0).collect();
        if support.is_empty() {
            return Err(Error::InvalidArgument("empty source measure".into()));
        }
        let mut node: HashMap<usize, usize> = support.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut weights: Vec<f64> = support.iter().map(|&i| weights[i]).collect();
        let mut starts: Vec<Point> = support.iter().map(|&i| disc.points()[i]).collect();
        let mut vel: Vec<Tangent> = support.iter().map(|&i| velocities[i]).collect();
        let mut stencils = Vec::with_capacity(support.len());
        for (k, &i) in support.iter().enumerate() {
            let mut st = [Stencil::Forward1(k); 2];
            for axis in 0..dim {
                let mut on = |step: i64| {
                    let c = grid.neighbor(i, axis, step)?;
                    if let Some(&n) = node.get(&c) {
                        return Some(n);
                    }
                    if !field {
                        return None;
                    }
                    node.insert(c, starts.len());
                    starts.push(disc.points()[c]);
                    vel.push(velocities[c]);
                    Some(starts.len() - 1)
                };
                let near = (on(1), on(-1));
                let far = if near.0.is_some() && near.1.is_some() { (None, None) } else { (on(2), on(-2)) };
                st[axis] = match (near.0, near.1, far.0, far.1) {
                    (Some(p), Some(m), _, _) => Stencil::Central(p, m),
                    (Some(p), None, Some(p2), _) => Stencil::Forward(p, p2),
                    (None, Some(m), _, Some(m2)) => Stencil::Backward(m, m2),
                    (Some(p), None, None, _) => Stencil::Forward1(p),
                    (None, Some(m), _, None) => Stencil::Backward1(m),
                    (None, None, _, _) => {
                        // Isolated along this axis: a helper node at the
                        // neighboring grid location, sent to the parallel
                        // offset of the cell's own image.
                        let cell = grid.cell(i);
                        let at = |step: i64| {
                            let mut c = [cell[0] as i64, cell[1] as i64];
                            c[axis] += step;
                            grid.position(&space, c)
                        };
                        let (q, fwd) = match (at(1), at(-1)) {
                            (Some(q), _) => (q, true),
                            (None, Some(q)) => (q, false),
                            (None, None) => {
                                return Err(Error::InvalidArgument("source grid has a cell without neighbors".into()))
                            }
                        };
                        let h = starts.len();
                        let v = helper_velocity(&space, &starts[k], vel[k], &q)?;
                        vel.push(v);
                        starts.push(q);
                        if fwd {
                            Stencil::Forward1(h)
                        } else {
                            Stencil::Backward1(h)
                        }
                    }
                };
            }
            stencils.push(st);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { space, weights, starts, velocities: vel, stencils, dim })
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    /// Barycentric velocities of the support cells.
    pub fn velocities(&self) -> &[Tangent] {
        &self.velocities[..self.weights.len()]
    }

    /// Kinetic energy Σ wᵢ|vᵢ|² of the barycentric map.
    pub fn kinetic_energy(&self) -> f64 {
        self.weights.iter().zip(self.velocities()).map(|(w, v)| w * (v[0] * v[0] + v[1] * v[1])).sum()
    }

    fn all_positions(&self, a: f64) -> Vec<Point> {
        self.starts
            .iter()
            .zip(&self.velocities)
            .map(|(x, v)| if a == 0.0 { *x } else { self.space.exp(x, [a * v[0], a * v[1]]) })
            .collect()
    }

    /// Positions exp_{xᵢ}(a·vᵢ) of the support cells.
    pub fn positions(&self, a: f64) -> Vec<Point> {
        let mut p = self.all_positions(a);
        p.truncate(self.weights.len());
        p
    }

    /// Reference measure of every transported cell at parameter `a`.
    pub fn cell_measures(&self, a: f64) -> Result<Vec<f64>> {
        let z = self.all_positions(a);
        let mut out = Vec::with_capacity(self.weights.len());
        for (k, st) in self.stencils.iter().enumerate() {
            let lg = |n: usize| self.space.log(&z[k], &z[n]);
            let mut cols = [[0.0; 2]; 2];
            for axis in 0..self.dim {
                cols[axis] = match st[axis] {
                    Stencil::Central(p, m) => {
                        let (u, w) = (lg(p)?, lg(m)?);
                        [0.5 * (u[0] - w[0]), 0.5 * (u[1] - w[1])]
                    }
                    Stencil::Forward(p, p2) => {
                        let (u, w) = (lg(p)?, lg(p2)?);
                        [2.0 * u[0] - 0.5 * w[0], 2.0 * u[1] - 0.5 * w[1]]
                    }
                    Stencil::Backward(m, m2) => {
                        let (u, w) = (lg(m)?, lg(m2)?);
                        [-(2.0 * u[0] - 0.5 * w[0]), -(2.0 * u[1] - 0.5 * w[1])]
                    }
                    Stencil::Forward1(p) => lg(p)?,
                    Stencil::Backward1(m) => {
                        let u = lg(m)?;
                        [-u[0], -u[1]]
                    }
                };
            }
            let det = if self.dim == 1 {
                cols[0][0].abs()
            } else {
                (cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0]).abs()
            };
            out.push(det * (-self.space.weight_f(&z[k])).exp());
        }
        Ok(out)
    }

    /// Relative entropy Σ wᵢ log(wᵢ/mᵢ(a)) of the transported measure.
    pub fn entropy_at(&self, a: f64) -> Result<f64> {
        let m = self.cell_measures(a)?;
        if m.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InfiniteEntropy);
        }
        Ok(self.weights.iter().zip(&m).filter(|(w, _)| **w > 0.0).map(|(w, mi)| w * (w / mi).ln()).sum())
    }

    /// The transported measure on its moved cells.
    pub fn measure_at(&self, a: f64) -> Result<DiscreteMeasure> {
        let m = self.cell_measures(a)?;
        let d = Discretization::from_cells(self.space, self.positions(a), m, 0.0)?;
        DiscreteMeasure::new(Arc::new(d), self.weights.clone())
    }
}

/// Velocity at `q` (a grid neighbor of `x`) that lands on the image of `x`
/// shifted by the parallel offset; falls back to the parallel velocity when
/// transport is undefined.
fn helper_velocity(space: &ModelSpace, x: &Point, v: Tangent, q: &Point) -> Result<Tangent> {
    let target = space.exp(x, v);
    let image = space
        .log(x, q)
        .and_then(|u| Ok(space.exp(&target, rotate(space.transport_angle(x, &target, 0.0)?, u))))
        .and_then(|p| space.log(q, &p));
    match image {
        Ok(w) => Ok(w),
        Err(_) => Ok(rotate(space.transport_angle(x, q, 0.0)?, v)),
    }
}

/// Mass-weighted least-squares fit of each velocity component by a polynomial
/// of the given total degree in grid coordinates, evaluated on every cell.
fn smooth_field(grid: &GridLayout, weights: &[f64], vel: &[Tangent], degree: usize) -> Result<Vec<Tangent>> {
    let n = weights.len();
    let cells: Vec<[f64; 2]> = (0..n).map(|i| {
        let c = grid.cell(i);
        [c[0] as f64, c[1] as f64]
    }).collect();
    let total: f64 = weights.iter().sum();
    let mean = [0, 1].map(|a| cells.iter().zip(weights).map(|(c, w)| c[a] * w).sum::<f64>() / total);
    let scale = cells
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(c, _)| (c[0] - mean[0]).abs().max((c[1] - mean[1]).abs()))
        .fold(1.0, f64::max);
    let powers: Vec<(i32, i32)> = (0..=degree as i32).flat_map(|d| (0..=d).map(move |k| (d - k, k))).collect();
    let basis = |c: &[f64; 2]| -> Vec<f64> {
        let (u, w) = ((c[0] - mean[0]) / scale, (c[1] - mean[1]) / scale);
        powers.iter().map(|&(a, b)| u.powi(a) * w.powi(b)).collect()
    };
    let rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    if rows.len() < 2 * powers.len() {
        return Ok(vel.to_vec());
    }
    let a = DMatrix::from_fn(rows.len(), powers.len(), |r, k| weights[rows[r]].sqrt() * basis(&cells[rows[r]])[k]);
    let b = DMatrix::from_fn(rows.len(), 2, |r, k| weights[rows[r]].sqrt() * vel[rows[r]][k]);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("velocity fit failed: {e}")))?;
    Ok(cells
        .iter()
        .map(|c| {
            let phi = basis(c);
            let mut v = [0.0; 2];
            for (k, p) in phi.iter().enumerate() {
                v[0] += p * coef[(k, 0)];
                v[1] += p * coef[(k, 1)];
            }
            v
        })
        .collect())
}
