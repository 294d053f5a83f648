//! ϑ♭ and η over a deterministic family of finite-entropy endpoint pairs.
//!
//! Each candidate is a uniform measure on a shape inside B_ε(x) paired with
//! the same shape inside B_ε(y), placed in the frame parallel along the
//! geodesic from x to y.

use super::{evaluator, heat_center, heat_patch, parallel_angle, w_q, EstimatorConfig, TLadder, ThetaEstimate};
use crate::entropy::{entropy_along_geodesic_with_step, EndpointDerivative};
use crate::error::{Error, Result};
use crate::spaces::{rotate, Discretization, ModelSpace, Point, SpaceKind, Tangent};
use crate::transport::{solve_exact_capped, DiscreteMeasure, Interpolation, WassersteinGeodesic};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CandidateShape {
    /// B_ε around the base point.
    Ball,
    /// Half of B_ε on the side of direction `angle`.
    HalfBall { angle: f64 },
    /// B_{ε/4} centered at distance 3ε/4 in direction `angle`; it keeps a gap
    /// of ε/2 from the base point.
    OffCenter { angle: f64 },
}

impl CandidateShape {
    pub fn label(&self) -> String {
        match self {
            Self::Ball => "ball".into(),
            Self::HalfBall { angle } => format!("half-ball@{angle:.4}"),
            Self::OffCenter { angle } => format!("off-center@{angle:.4}"),
        }
    }

    /// (center offset, radius, half-plane direction) in the base frame.
    fn geometry(&self, eps: f64) -> (Tangent, f64, Option<f64>) {
        match *self {
            Self::Ball => ([0.0, 0.0], eps, None),
            Self::HalfBall { angle } => ([0.0, 0.0], eps, Some(angle)),
            Self::OffCenter { angle } => (rotate(angle, [0.75 * eps, 0.0]), 0.25 * eps, None),
        }
    }

    /// Ball, then half-balls and off-center balls at `rotations` angles (two
    /// directions on the line).
    pub fn family(dim: usize, rotations: usize) -> Vec<Self> {
        let angles: Vec<f64> = if dim == 1 {
            vec![0.0, PI]
        } else {
            (0..rotations.max(1)).map(|k| 2.0 * PI * k as f64 / rotations.max(1) as f64).collect()
        };
        let mut out = vec![Self::Ball];
        out.extend(angles.iter().map(|&angle| Self::HalfBall { angle }));
        out.extend(angles.iter().map(|&angle| Self::OffCenter { angle }));
        out
    }
}

/// One side of a candidate pair.
struct Placed {
    mu: DiscreteMeasure,
    center: Point,
    angle: f64,
    radius: f64,
}

/// Center of the shape around `base` (frame angle `frame` at base).
fn shape_center(space: &ModelSpace, base: &Point, frame: f64, offset: Tangent) -> Point {
    if offset == [0.0, 0.0] {
        *base
    } else {
        space.exp(base, rotate(frame, offset))
    }
}

/// Uniform measure on the shape centered at `center`, gridded in the frame
/// `grid_angle` there; half-balls are cut by the direction `frame + β` at base.
fn place(
    space: &ModelSpace,
    base: &Point,
    frame: f64,
    center: Point,
    grid_angle: f64,
    shape: CandidateShape,
    eps: f64,
    cfg: &EstimatorConfig,
) -> Result<Placed> {
    let (_, radius, half) = shape.geometry(eps);
    let cells = if space.dim() == 1 { 128 * cfg.flat.base_cells } else { cfg.flat.base_cells };
    let spacing = radius / cells as f64;
    let mut disc = Discretization::ball_patch(space, &center, grid_angle, radius, spacing, 4 * cfg.point_cap)?;
    if let (Some(beta), SpaceKind::Cone { alpha }) = (half, space.kind()) {
        if space.is_vertex(base) {
            // Directions at the vertex are angles on the link circle of length α.
            let dir = (frame + beta).rem_euclid(2.0 * PI) * alpha / (2.0 * PI);
            disc = disc.restrict(
                |p| {
                    let gap = (p.coords()[1] - dir).rem_euclid(alpha);
                    gap.min(alpha - gap) <= 0.25 * alpha * (1.0 + 1e-12)
                },
                cfg.point_cap,
            )?;
            let mu = DiscreteMeasure::uniform(Arc::new(disc), |_| true)?;
            return Ok(Placed { mu, center, angle: grid_angle, radius });
        }
    }
    if let Some(beta) = half {
        let e = rotate(frame + beta, [1.0, 0.0]);
        disc = disc.restrict(
            |p| match space.log(base, p) {
                Ok(u) => u[0] * e[0] + u[1] * e[1] >= -1e-12 * radius,
                Err(_) => false,
            },
            cfg.point_cap,
        )?;
    }
    let mu = DiscreteMeasure::uniform(Arc::new(disc), |_| true)?;
    Ok(Placed { mu, center, angle: grid_angle, radius })
}

/// Both sides of a candidate. The shapes are placed in frames parallel along
/// x → y; the grids are aligned by transport along the geodesic joining the
/// two shape centers so the discretized pair is an isometric image.
fn candidate_pair(space: &ModelSpace, x: &Point, y: &Point, shape: CandidateShape, eps: f64, cfg: &EstimatorConfig) -> Result<(Placed, Placed)> {
    let (angle_y, _) = parallel_angle(space, x, y);
    let (offset, _, _) = shape.geometry(eps);
    let cx = shape_center(space, x, 0.0, offset);
    let cy = shape_center(space, y, angle_y, offset);
    let gx = if cx == *x { 0.0 } else { space.transport_angle(x, &cx, 0.0)? };
    let gy = space.transport_angle(&cx, &cy, gx).unwrap_or(angle_y);
    Ok((place(space, x, 0.0, cx, gx, shape, eps, cfg)?, place(space, y, angle_y, cy, gy, shape, eps, cfg)?))
}

/// P̂_tμ on a heat patch, coarsened until its support fits the solver cap.
fn flow(space: &ModelSpace, t: f64, p: &Placed, cfg: &EstimatorConfig) -> Result<DiscreteMeasure> {
    let (c, sigma) = heat_center(space, &p.center, t)?;
    let mut cfg2 = cfg.clone();
    for _ in 0..4 {
        let patch = heat_patch(space, &c, p.angle, sigma, p.radius, &cfg2)?;
        let mu = evaluator(space, cfg).dual_flow_onto(t, &p.mu, patch)?.trimmed(cfg.trim_tail);
        let n = mu.support().len();
        if n <= cfg.point_cap {
            return Ok(mu);
        }
        let f = n as f64 / cfg.point_cap as f64 * 1.02;
        let f = if space.dim() == 1 { f } else { f.sqrt() };
        cfg2.cells_per_sigma /= f;
        cfg2.cells_per_sigma_1d /= f;
    }
    Err(Error::ResourceLimit { what: "heat patch", requested: usize::MAX, cap: cfg.point_cap })
}

/// Candidate ladder: σ from radius/sigma_lo up to radius/sigma_hi, t = σ²/2.
fn candidate_ladder(radius: f64, cfg: &EstimatorConfig) -> Result<TLadder> {
    let f = &cfg.flat;
    let t_max = (radius / f.sigma_hi).powi(2) / 2.0;
    let t_min = (radius / f.sigma_lo).powi(2) / 2.0;
    let n = f.rungs.max(3);
    TLadder::geometric(t_max, (t_min / t_max).powf(1.0 / (n - 1) as f64), n)
}

#[derive(Clone, Debug)]
pub struct FlatEstimate {
    /// Minimum over candidates (+∞ when every candidate diverges).
    pub value: f64,
    pub error: f64,
    pub divergent: bool,
    pub candidates: Vec<(CandidateShape, ThetaEstimate)>,
}

fn check_eps(space: &ModelSpace, x: &Point, y: &Point, eps: f64) -> Result<f64> {
    let d = space.distance(x, y)?;
    if !(eps > 0.0 && eps < d / 4.0) {
        return Err(Error::InvalidArgument(format!("need 0 < ε < d/4 (ε = {eps}, d = {d})")));
    }
    Ok(d)
}

/// ϑ♭(x, y): smallest ladder-fitted −∂_t log W(P̂_tμ, P̂_tν) at t = 0 over the
/// candidate pairs.
pub fn theta_flat_estimate(space: &ModelSpace, x: &Point, y: &Point, eps: f64, ladder: Option<&TLadder>, cfg: &EstimatorConfig) -> Result<FlatEstimate> {
    check_eps(space, x, y, eps)?;
    let shapes = CandidateShape::family(space.dim(), cfg.flat.rotations);
    let candidates = shapes
        .par_iter()
        .map(|&shape| Ok((shape, flat_candidate(space, x, y, shape, eps, ladder, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let best = argmin(candidates.iter().map(|c| c.1.value));
    let e = &candidates[best].1;
    // A minimum of noisy values is off by at most the largest candidate error.
    let mut error = candidates.iter().filter(|c| !c.1.divergent).map(|c| c.1.error_bar()).fold(e.error_bar(), f64::max);
    if !e.divergent {
        let coarse = flat_candidate(space, x, y, candidates[best].0, eps, ladder, &coarser(cfg))?;
        if !coarse.divergent {
            error += (coarse.value - e.value).abs();
        }
    }
    Ok(FlatEstimate { value: e.value, error, divergent: e.divergent, candidates })
}

fn flat_candidate(
    space: &ModelSpace,
    x: &Point,
    y: &Point,
    shape: CandidateShape,
    eps: f64,
    ladder: Option<&TLadder>,
    cfg: &EstimatorConfig,
) -> Result<ThetaEstimate> {
    let (a, b) = candidate_pair(space, x, y, shape, eps, cfg)?;
    let w0 = w_q(&a.mu, &b.mu, 2.0, cfg)?;
    let own;
    let l = match ladder {
        Some(l) => l,
        None => {
            own = candidate_ladder(a.radius, cfg)?;
            &own
        }
    };
    let rungs = l
        .times()
        .par_iter()
        .map(|&t| {
            let wt = w_q(&flow(space, t, &a, cfg)?, &flow(space, t, &b, cfg)?, 2.0, cfg)?;
            Ok((t, -(wt / w0).ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    ThetaEstimate::from_rungs_boundary(rungs, cfg)
}

/// The same candidate grids with spacings √2 larger. For second-order
/// discretizations the change in value is about the discretization error.
fn coarser(cfg: &EstimatorConfig) -> EstimatorConfig {
    let mut c = cfg.clone();
    c.cells_per_sigma /= SQRT_2;
    c.cells_per_sigma_1d /= SQRT_2;
    c.flat.base_cells = ((cfg.flat.base_cells as f64 / SQRT_2).round() as usize).max(2);
    c
}

fn argmin(v: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, x) in v.enumerate() {
        if x < best.1 || (i == 0 && x.is_infinite()) {
            best = (i, x);
        }
    }
    best.0
}

#[derive(Clone, Debug)]
pub struct EtaCandidate {
    pub shape: CandidateShape,
    pub value: f64,
    pub error: f64,
    pub w: f64,
    pub start: EndpointDerivative,
    pub end: EndpointDerivative,
}

#[derive(Clone, Debug)]
pub struct EtaEstimate {
    pub value: f64,
    pub error: f64,
    pub candidates: Vec<EtaCandidate>,
}

/// η(x, y): smallest (∂⁻S|₁ − ∂⁺S|₀)/W² over the candidate pairs, entropy
/// taken along the Lagrangian interpolation of the optimal plan.
pub fn eta_estimate(space: &ModelSpace, x: &Point, y: &Point, eps: f64, cfg: &EstimatorConfig) -> Result<EtaEstimate> {
    check_eps(space, x, y, eps)?;
    let shapes = CandidateShape::family(space.dim(), cfg.flat.rotations);
    let candidates = shapes.par_iter().map(|&shape| eta_candidate(space, x, y, shape, eps, cfg)).collect::<Result<Vec<_>>>()?;
    let best = argmin(candidates.iter().map(|c| c.value));
    let mut error = candidates.iter().map(|c| c.error).fold(0.0, f64::max);
    let coarse = eta_candidate(space, x, y, candidates[best].shape, eps, &coarser(cfg))?;
    error += (coarse.value - candidates[best].value).abs();
    Ok(EtaEstimate { value: candidates[best].value, error, candidates })
}

fn eta_candidate(space: &ModelSpace, x: &Point, y: &Point, shape: CandidateShape, eps: f64, cfg: &EstimatorConfig) -> Result<EtaCandidate> {
    let (a, b) = candidate_pair(space, x, y, shape, eps, cfg)?;
    let plan = solve_exact_capped(&a.mu, &b.mu, 2.0, cfg.point_cap)?;
    let w = plan.wasserstein();
    let geo = WassersteinGeodesic::new(plan, Interpolation::Lagrangian)?;
    let prof = entropy_along_geodesic_with_step(&geo, 2, cfg.endpoint_step)?;
    let w2 = w * w;
    Ok(EtaCandidate {
        shape,
        value: (prof.end.value - prof.start.value) / w2,
        error: (prof.end.error + prof.start.error) / w2,
        w,
        start: prof.start,
        end: prof.end,
    })
}
