//! Expansion-rate estimators built from heat flow, transport and entropy.
//!
//! Every rate is read off a geometric ladder of small times: the observable
//! y(t) is fitted by a√t + bt, b is the reported rate and a flags the √t
//! singularity of cone vertices and cut loci.

mod fit;
mod flat;
mod robust;
mod theta;

pub use fit::{fit_sqrt_linear, fit_boundary_layer, LadderFit};
pub use flat::{eta_estimate, theta_flat_estimate, CandidateShape, EtaEstimate, FlatEstimate};
pub use robust::{robust_family, robust_defect_estimate, RobustFamily};
pub use theta::{
    action_decay_estimate, contraction_check, cone_coefficient_fit, sandwich_check, speed_decay_estimate, theta_estimate,
    theta_star_estimate, ConeFit, ContractionReport, SandwichReport, ThetaStar,
};

use crate::error::{Error, Result};
use crate::heat::HeatKernelEvaluator;
use crate::spaces::{Discretization, ModelSpace, Point, SpaceKind};
use crate::transport::{solve_exact_capped, DiscreteMeasure};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    /// Heat patches in 2D have spacing σ/cells_per_sigma.
    pub cells_per_sigma: f64,
    /// Same for 1D patches (cheap, and OU drift offsets need finer cells).
    pub cells_per_sigma_1d: f64,
    /// Patch radius in units of σ beyond the support of the initial measure.
    pub patch_sigmas: f64,
    /// Mass dropped from heat measures before transport.
    pub trim_tail: f64,
    /// Support cap per measure for exact transport.
    pub point_cap: usize,
    /// Renormalization budget for discretized heat measures.
    pub mass_tolerance: f64,
    /// Divergence: a > max(divergence_sigmas·stderr_a, divergence_floor).
    pub divergence_sigmas: f64,
    pub divergence_floor: f64,
    /// Half-step h of the central difference in speed_decay_estimate.
    pub speed_step: f64,
    /// Candidate family for ϑ♭ and η.
    pub flat: FlatConfig,
    /// Step of the clustered entropy samples at the geodesic endpoints.
    pub endpoint_step: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            cells_per_sigma: 2.0,
            cells_per_sigma_1d: 160.0,
            patch_sigmas: 6.5,
            trim_tail: 1e-9,
            point_cap: 2000,
            mass_tolerance: 1e-6,
            divergence_sigmas: 3.0,
            divergence_floor: 0.02,
            speed_step: 0.05,
            flat: FlatConfig::default(),
            endpoint_step: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatConfig {
    /// Rotations of the half-ball and off-center shapes.
    pub rotations: usize,
    /// Cells per candidate radius in the base grid of the initial measures.
    pub base_cells: usize,
    /// Heat ladder for candidates: σ from radius/sigma_lo to radius/sigma_hi.
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub rungs: usize,
}

impl Default for FlatConfig {
    fn default() -> Self {
        Self { rotations: 4, base_cells: 8, sigma_lo: 6.0, sigma_hi: 2.0, rungs: 8 }
    }
}

/// Geometric sequence of heat times t_k = t_max·q^k.
#[derive(Clone, Debug, PartialEq)]
pub struct TLadder {
    times: Vec<f64>,
}

impl TLadder {
    pub fn geometric(t_max: f64, ratio: f64, n: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) || !(ratio > 0.0 && ratio < 1.0) || n < 3 {
            return Err(Error::InvalidArgument(format!("ladder t_max={t_max}, ratio={ratio}, n={n}")));
        }
        Ok(Self { times: (0..n).map(|k| t_max * ratio.powi(k as i32)).collect() })
    }

    /// t_max = d²/16 (so 4√t_max = d), halving, ten rungs. On the sphere t_max
    /// is further capped so heat patches stay inside the injectivity domain;
    /// on cones it is d²/64 so heat from a point at distance d barely reaches
    /// the vertex.
    pub fn for_distance(space: &ModelSpace, d: f64) -> Result<Self> {
        let mut t_max = d * d / 16.0;
        match space.kind() {
            SpaceKind::Sphere { radius } => t_max = t_max.min(0.068 * radius * radius),
            SpaceKind::Cone { .. } => t_max = d * d / 64.0,
            _ => {}
        }
        Self::geometric(t_max, 0.5, 10)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The ladder without its `k` largest times.
    pub fn without_largest(&self, k: usize) -> Result<Self> {
        if self.times.len() < k + 3 {
            return Err(Error::InvalidArgument("ladder too short".into()));
        }
        Ok(Self { times: self.times[k..].to_vec() })
    }
}

/// Ladder-fitted rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaEstimate {
    /// Fitted t-coefficient b, or +∞ when divergent.
    pub value: f64,
    /// Fitted √t coefficient a.
    pub sqrt_coeff: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub divergent: bool,
    /// Weighted RMS residual of the fit.
    pub residual: f64,
    /// |b − b'| with b' fitted without the two largest rungs (0 if unavailable).
    pub truncation: f64,
    /// Set when the pair sits at (numerical) conjugacy, e.g. antipodal torus points.
    pub conjugate_warning: bool,
    /// (t, y) per rung.
    pub rungs: Vec<(f64, f64)>,
    slope: f64,
}

impl ThetaEstimate {
    pub(crate) fn from_rungs(rungs: Vec<(f64, f64)>, cfg: &EstimatorConfig, conjugate_warning: bool) -> Result<Self> {
        let f = fit_sqrt_linear(&rungs)?;
        let truncation = if rungs.len() >= 5 { (fit_sqrt_linear(&rungs[2..])?.b - f.b).abs() } else { 0.0 };
        Ok(Self::assemble(f, truncation, rungs, cfg, conjugate_warning))
    }

    /// Fit for matched pairs with sharp edges (no √t term, see `fit_boundary_layer`).
    pub(crate) fn from_rungs_boundary(rungs: Vec<(f64, f64)>, cfg: &EstimatorConfig) -> Result<Self> {
        let (f, _) = fit_boundary_layer(&rungs)?;
        let truncation = if rungs.len() >= 6 { (fit_boundary_layer(&rungs[2..])?.0.b - f.b).abs() } else { 0.0 };
        Ok(Self::assemble(f, truncation, rungs, cfg, false))
    }

    fn assemble(f: LadderFit, truncation: f64, rungs: Vec<(f64, f64)>, cfg: &EstimatorConfig, conjugate_warning: bool) -> Self {
        let divergent = f.a > (cfg.divergence_sigmas * f.stderr_a).max(cfg.divergence_floor);
        Self {
            value: if divergent { f64::INFINITY } else { f.b },
            sqrt_coeff: f.a,
            stderr_a: f.stderr_a,
            stderr_b: f.stderr_b,
            divergent,
            residual: f.residual,
            truncation,
            conjugate_warning,
            rungs,
            slope: f.b,
        }
    }

    /// Fitted b even when divergent.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Statistical and ladder-truncation error combined.
    pub fn error_bar(&self) -> f64 {
        self.stderr_b.hypot(self.truncation)
    }
}

/// Center and standard deviation of P̂_tδ_x (the OU mean on Gaussian spaces).
pub(crate) fn heat_center(space: &ModelSpace, x: &Point, t: f64) -> Result<(Point, f64)> {
    match space.kind() {
        SpaceKind::Gaussian { k, n } => {
            let var = if k == 0.0 { 2.0 * t } else { -(-2.0 * k * t).exp_m1() / k };
            let s = (-k * t).exp();
            let c: Vec<f64> = x.coords()[..n].iter().map(|v| v * s).collect();
            Ok((space.point(&c)?, var.sqrt()))
        }
        _ => Ok((*x, (2.0 * t).sqrt())),
    }
}

pub(crate) fn patch_spacing(space: &ModelSpace, sigma: f64, cfg: &EstimatorConfig) -> f64 {
    if space.dim() == 1 {
        sigma / cfg.cells_per_sigma_1d
    } else {
        sigma / cfg.cells_per_sigma
    }
}

/// Grid covering B_{support + patch_sigmas·σ}(center) at the heat spacing.
pub(crate) fn heat_patch(space: &ModelSpace, center: &Point, angle: f64, sigma: f64, support: f64, cfg: &EstimatorConfig) -> Result<Arc<Discretization>> {
    let h = patch_spacing(space, sigma, cfg);
    let radius = support + cfg.patch_sigmas * sigma;
    Ok(Arc::new(Discretization::ball_patch(space, center, angle, radius, h, 4 * cfg.point_cap)?))
}

pub(crate) fn evaluator(space: &ModelSpace, cfg: &EstimatorConfig) -> HeatKernelEvaluator {
    HeatKernelEvaluator::new(*space).with_mass_tolerance(cfg.mass_tolerance)
}

/// P̂_tδ_x on its own patch (frame angle `angle` at the heat center), trimmed.
pub(crate) fn heat_dirac(space: &ModelSpace, t: f64, x: &Point, angle: f64, cfg: &EstimatorConfig) -> Result<DiscreteMeasure> {
    let (c, sigma) = heat_center(space, x, t)?;
    let patch = heat_patch(space, &c, angle, sigma, 0.0, cfg)?;
    let mu = evaluator(space, cfg).heat_row(t, x, patch)?;
    Ok(mu.trimmed(cfg.trim_tail))
}

pub(crate) fn w_q(mu: &DiscreteMeasure, nu: &DiscreteMeasure, q: f64, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(solve_exact_capped(mu, nu, q, cfg.point_cap)?.wasserstein())
}

/// Frame angle at y parallel to angle 0 at x (0 when transport is undefined).
pub(crate) fn parallel_angle(space: &ModelSpace, x: &Point, y: &Point) -> (f64, bool) {
    match space.transport_angle(x, y, 0.0) {
        Ok(a) => (a, false),
        Err(_) => (0.0, true),
    }
}

/// Low-discrepancy (golden-angle) sample of n points in the unit disc (or
/// interval), deterministic.
pub(crate) fn low_discrepancy(n: usize, dim: usize) -> Vec<[f64; 2]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let s = (i as f64 + 0.5) / n as f64;
            if dim == 1 {
                [2.0 * s - 1.0, 0.0]
            } else {
                let r = s.sqrt();
                let a = golden * i as f64;
                [r * a.cos(), r * a.sin()]
            }
        })
        .collect()
}
