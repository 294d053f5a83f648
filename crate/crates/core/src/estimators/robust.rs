//! Midpoint entropy defect of short geodesic triples (μ⁻¹, μ⁰, μ¹).
//!
//! μ⁰ is uniform on a small ball around x; every cell moves by ±r∇φ with
//! φ = ⟨v, log_x ·⟩, so the three measures sit on a geodesic of length 2r
//! through μ⁰.

use super::EstimatorConfig;
use crate::entropy::robust_defect;
use crate::error::{Error, Result};
use crate::spaces::{Discretization, ModelSpace, Point, Tangent};
use crate::transport::{DiscreteMeasure, LagrangianFlow};

/// Radius of the uniform patch carrying μ⁰.
pub const ROBUST_PATCH_RADIUS: f64 = 0.01;
const PATCH_CELLS: f64 = 8.0;
const GRADIENT_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct RobustFamily {
    pub r: f64,
    pub minus: DiscreteMeasure,
    pub mid: DiscreteMeasure,
    pub plus: DiscreteMeasure,
    /// (S(μ¹) − 2S(μ⁰) + S(μ⁻¹))/r².
    pub defect: f64,
    /// K̄(r) = K + σ²r² with K the Ricci curvature along v and σ the curvature
    /// modulus.
    pub bound: f64,
}

impl RobustFamily {
    pub fn pass(&self, tol: f64) -> bool {
        self.defect <= self.bound + tol
    }
}

fn unit(v: Tangent) -> Result<Tangent> {
    let n = v[0].hypot(v[1]);
    if !(n > 0.0) {
        return Err(Error::InvalidArgument("zero direction".into()));
    }
    Ok([v[0] / n, v[1] / n])
}

/// ∇⟨v, log_x ·⟩ at z in the chart frame of z, by central differences.
fn gradient(space: &ModelSpace, x: &Point, v: Tangent, z: &Point) -> Result<Tangent> {
    let phi = |p: &Point| -> Result<f64> {
        let u = space.log(x, p)?;
        Ok(v[0] * u[0] + v[1] * u[1])
    };
    let mut g = [0.0; 2];
    for (k, gk) in g.iter_mut().enumerate().take(space.dim()) {
        let mut e = [0.0; 2];
        e[k] = GRADIENT_STEP;
        let fp = phi(&space.exp(z, e))?;
        let fm = phi(&space.exp(z, [-e[0], -e[1]]))?;
        *gk = (fp - fm) / (2.0 * GRADIENT_STEP);
    }
    Ok(g)
}

pub fn robust_family(space: &ModelSpace, x: &Point, v: Tangent, r: f64, cfg: &EstimatorConfig) -> Result<RobustFamily> {
    space.check(x)?;
    if space.is_vertex(x) {
        return Err(Error::VertexCurvature);
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("robust scale r = {r}")));
    }
    let v = unit(if space.dim() == 1 { [v[0], 0.0] } else { v })?;
    let rho = ROBUST_PATCH_RADIUS.min(0.25 * space.normal_radius(x));
    let h = rho / PATCH_CELLS;
    // Two rings of massless cells around the ball close the difference stencils.
    let disc = Discretization::ball_patch(space, x, 0.0, rho + 2.5 * h, h, cfg.point_cap)?;
    let velocities = disc
        .points()
        .iter()
        .map(|z| gradient(space, x, v, z).map(|g| [r * g[0], r * g[1]]))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = disc
        .points()
        .iter()
        .zip(disc.cell_measures())
        .map(|(z, m)| if space.dist(x, z) <= rho * (1.0 + 1e-9) { *m } else { 0.0 })
        .collect();
    let flow = LagrangianFlow::from_velocities(&disc, &weights, &velocities)?;
    let (minus, mid, plus) = (flow.measure_at(-1.0)?, flow.measure_at(0.0)?, flow.measure_at(1.0)?);
    let defect = robust_defect(&minus, &mid, &plus, r)?;
    let y = space.exp(x, [r * v[0], r * v[1]]);
    let k = space.ricci_f(x, v)?;
    let sigma = space.curvature_modulus(x, &y)?;
    Ok(RobustFamily { r, minus, mid, plus, defect, bound: k + sigma * sigma * r * r })
}

/// Defect of the family through x in direction v at scale r.
pub fn robust_defect_estimate(space: &ModelSpace, x: &Point, v: Tangent, r: f64, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(robust_family(space, x, v, r, cfg)?.defect)
}
