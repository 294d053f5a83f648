use super::{
    evaluator, fit_sqrt_linear, heat_center, heat_dirac, heat_patch, low_discrepancy, parallel_angle, patch_spacing, w_q,
    EstimatorConfig, TLadder, ThetaEstimate,
};
use crate::error::{Error, Result};
use crate::spaces::{Curve, ModelSpace, Point, SpaceKind, Tangent};
use crate::transport::DiscreteMeasure;
use rayon::prelude::*;
use std::f64::consts::PI;

/// W(P̂_tδ_x, P̂_tδ_y) on isometrically aligned patches.
fn heat_pair_distance(space: &ModelSpace, t: f64, x: &Point, y: &Point, angle_y: f64, q: f64, cfg: &EstimatorConfig) -> Result<f64> {
    let mu = heat_dirac(space, t, x, 0.0, cfg)?;
    let nu = heat_dirac(space, t, y, angle_y, cfg)?;
    w_q(&mu, &nu, q, cfg)
}

/// Ladder estimate of −lim (1/t) log(W(P̂_tδ_x, P̂_tδ_y)/d(x, y)).
pub fn theta_estimate(space: &ModelSpace, x: &Point, y: &Point, ladder: &TLadder, cfg: &EstimatorConfig) -> Result<ThetaEstimate> {
    let d = space.distance(x, y)?;
    if !(d > 0.0) {
        return Err(Error::InvalidPoint("theta needs two distinct points".into()));
    }
    let conjugate = matches!(space.log(x, y), Err(Error::ConjugatePair));
    let (angle_y, _) = parallel_angle(space, x, y);
    let rungs = ladder
        .times()
        .par_iter()
        .map(|&t| Ok((t, -(heat_pair_distance(space, t, x, y, angle_y, 2.0, cfg)? / d).ln())))
        .collect::<Result<Vec<_>>>()?;
    ThetaEstimate::from_rungs(rungs, cfg, conjugate)
}

#[derive(Clone, Debug)]
pub struct ThetaStar {
    pub value: f64,
    pub radius: f64,
    /// Combined error bar of the maximizing pair.
    pub error: f64,
    pub pairs: Vec<(Point, Point, ThetaEstimate)>,
}

/// Largest ϑ over deterministic pairs (y, z) = (exp_x(ru), exp_x(−ru)) in B_r(x).
pub fn theta_star_estimate(
    space: &ModelSpace,
    x: &Point,
    radius: f64,
    n_pairs: usize,
    ladder: Option<&TLadder>,
    cfg: &EstimatorConfig,
) -> Result<ThetaStar> {
    space.check(x)?;
    if !(radius > 0.0) || n_pairs == 0 {
        return Err(Error::InvalidArgument("theta-star needs a positive radius and at least one pair".into()));
    }
    let dirs = low_discrepancy(2 * n_pairs, space.dim());
    let mut pairs = Vec::new();
    for u in dirs {
        if pairs.len() == n_pairs {
            break;
        }
        let v: Tangent = [radius * u[0], radius * u[1]];
        if (v[0] * v[0] + v[1] * v[1]).sqrt() < 0.05 * radius {
            continue;
        }
        pairs.push((space.exp(x, v), space.exp(x, [-v[0], -v[1]])));
    }
    let ests = pairs
        .par_iter()
        .map(|(y, z)| {
            let own;
            let l = match ladder {
                Some(l) => l,
                None => {
                    own = TLadder::for_distance(space, space.dist(y, z))?;
                    &own
                }
            };
            theta_estimate(space, y, z, l, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, e) in ests.iter().enumerate() {
        if e.value > ests[best].value {
            best = i;
        }
    }
    Ok(ThetaStar {
        value: ests[best].value,
        radius,
        error: ests[best].error_bar(),
        pairs: pairs.into_iter().zip(ests).map(|((y, z), e)| (y, z, e)).collect(),
    })
}

#[derive(Clone, Debug)]
pub struct SandwichReport {
    /// Averaged Ric_f along the geodesic.
    pub lower: f64,
    /// lower + σ·tan²(√σ·d/2), +∞ past the tangent singularity.
    pub upper: f64,
    pub estimate: ThetaEstimate,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn sandwich_check(space: &ModelSpace, x: &Point, y: &Point, ladder: &TLadder, tolerance: f64, cfg: &EstimatorConfig) -> Result<SandwichReport> {
    if space.is_vertex(x) || space.is_vertex(y) {
        return Err(Error::VertexCurvature);
    }
    space.log(x, y)?;
    let lower = space.ricci_average(x, y)?;
    let sigma = space.curvature_modulus(x, y)?;
    let d = space.distance(x, y)?;
    let arg = sigma.sqrt() * d / 2.0;
    let upper = if sigma == 0.0 {
        lower
    } else if arg < PI / 2.0 {
        lower + sigma * arg.tan().powi(2)
    } else {
        f64::INFINITY
    };
    let estimate = theta_estimate(space, x, y, ladder, cfg)?;
    let v = estimate.value;
    let pass = !estimate.divergent && lower - tolerance <= v && v <= upper + tolerance;
    Ok(SandwichReport { lower, upper, estimate, tolerance, pass })
}

/// −∂_t log Speed of the heat-evolved geodesic exp_x(av) at a = 0, with the
/// metric speed taken as W(μ_t^{−h}, μ_t^{h})/(2h).
pub fn speed_decay_estimate(space: &ModelSpace, x: &Point, v: Tangent, ladder: Option<&TLadder>, cfg: &EstimatorConfig) -> Result<ThetaEstimate> {
    space.check(x)?;
    let norm = v[0].hypot(v[1]);
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("speed decay needs a nonzero direction".into()));
    }
    let h = cfg.speed_step / norm;
    let a = space.exp(x, [-h * v[0], -h * v[1]]);
    let b = space.exp(x, [h * v[0], h * v[1]]);
    let own;
    let l = match ladder {
        Some(l) => l,
        None => {
            own = TLadder::for_distance(space, space.dist(&a, &b))?;
            &own
        }
    };
    theta_estimate(space, &a, &b, l, cfg)
}

/// Decay rate −(1/p)∂_t log Act_p of a curve of Diracs under the dual heat flow.
pub fn action_decay_estimate(space: &ModelSpace, curve: &Curve, p: f64, ladder: Option<&TLadder>, cfg: &EstimatorConfig) -> Result<ThetaEstimate> {
    let s = &curve.samples;
    if s.len() < 2 || !(p >= 1.0) {
        return Err(Error::InvalidArgument("action decay needs ≥ 2 samples and p ≥ 1".into()));
    }
    let mut segs = Vec::with_capacity(s.len() - 1);
    for w in s.windows(2) {
        let d = space.distance(&w[0].1, &w[1].1)?;
        let da = w[1].0 - w[0].0;
        if !(da > 0.0) || !(d > 0.0) {
            return Err(Error::InvalidArgument("curve samples must be distinct with increasing parameters".into()));
        }
        let (angle, _) = parallel_angle(space, &w[0].1, &w[1].1);
        segs.push((w[0].1, w[1].1, d, da, angle));
    }
    let act0: f64 = segs.iter().map(|g| g.2.powf(p) / g.3.powf(p - 1.0)).sum();
    let own;
    let l = match ladder {
        Some(l) => l,
        None => {
            let dmin = segs.iter().map(|g| g.2).fold(f64::INFINITY, f64::min);
            own = TLadder::for_distance(space, dmin)?;
            &own
        }
    };
    let rungs = l
        .times()
        .par_iter()
        .map(|&t| {
            let mut act = 0.0;
            for (x, y, _, da, angle) in &segs {
                let w = heat_pair_distance(space, t, x, y, *angle, 2.0, cfg)?;
                act += w.powf(p) / da.powf(p - 1.0);
            }
            Ok((t, -(act / act0).ln() / p))
        })
        .collect::<Result<Vec<_>>>()?;
    ThetaEstimate::from_rungs(rungs, cfg, false)
}

#[derive(Clone, Debug)]
pub struct ContractionReport {
    pub k: f64,
    pub q: f64,
    /// (t, W_q(P̂_tμ, P̂_tν), e^{−Kt}W_q(μ, ν)).
    pub rungs: Vec<(f64, f64, f64)>,
    /// max_t W_t/bound_t − 1.
    pub worst_margin: f64,
}

impl ContractionReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.worst_margin <= tol
    }
}

/// Smallest ball (center, radius) around a support point containing the support.
fn support_ball(space: &ModelSpace, mu: &DiscreteMeasure) -> Result<(Point, f64)> {
    let pts = mu.discretization().points();
    let sup = mu.support();
    let c = match space.kind() {
        SpaceKind::Euclidean { n } | SpaceKind::Gaussian { n, .. } => {
            let mut c = [0.0; 2];
            for &i in &sup {
                for a in 0..n {
                    c[a] += mu.weights()[i] * pts[i].coords()[a];
                }
            }
            space.point(&c[..n])?
        }
        _ => pts[sup[0]],
    };
    let r = sup.iter().map(|&i| space.dist(&c, &pts[i])).fold(0.0, f64::max);
    Ok((c, r))
}

/// P̂_tμ on a patch around the support of μ.
pub(crate) fn heat_measure(space: &ModelSpace, t: f64, mu: &DiscreteMeasure, angle: f64, cfg: &EstimatorConfig) -> Result<DiscreteMeasure> {
    let (c, r) = support_ball(space, mu)?;
    let (hc, sigma) = heat_center(space, &c, t)?;
    let shrink = match space.kind() {
        SpaceKind::Gaussian { k, .. } => (-k * t).exp(),
        _ => 1.0,
    };
    let mut cfg2 = cfg.clone();
    let reach = shrink * r + cfg.patch_sigmas * sigma;
    let cells = match space.dim() {
        1 => 2.0 * reach / patch_spacing(space, sigma, cfg),
        _ => PI * (reach / patch_spacing(space, sigma, cfg)).powi(2),
    };
    let budget = 3.0 * cfg.point_cap as f64;
    if cells > budget {
        let f = if space.dim() == 1 { cells / budget } else { (cells / budget).sqrt() };
        cfg2.cells_per_sigma /= f;
        cfg2.cells_per_sigma_1d /= f;
    }
    let patch = heat_patch(space, &hc, angle, sigma, shrink * r, &cfg2)?;
    Ok(evaluator(space, cfg).dual_flow_onto(t, mu, patch)?.trimmed(cfg.trim_tail))
}

/// W_q(P̂_tμ, P̂_tν) against e^{−Kt}W_q(μ, ν) on every rung.
pub fn contraction_check(
    space: &ModelSpace,
    k: f64,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ladder: &TLadder,
    q: f64,
    cfg: &EstimatorConfig,
) -> Result<ContractionReport> {
    let w0 = w_q(mu, nu, q, cfg)?;
    let rungs = ladder
        .times()
        .par_iter()
        .map(|&t| {
            let a = heat_measure(space, t, mu, 0.0, cfg)?;
            let b = heat_measure(space, t, nu, 0.0, cfg)?;
            Ok((t, w_q(&a, &b, q, cfg)?, (-k * t).exp() * w0))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_margin = rungs.iter().map(|r| r.1 / r.2 - 1.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ContractionReport { k, q, rungs, worst_margin })
}

#[derive(Clone, Debug)]
pub struct ConeFit {
    pub c_fit: f64,
    pub c_theory: f64,
    pub stderr: f64,
    /// t-coefficient of the fit.
    pub b: f64,
    /// (t, W_t) per rung.
    pub rungs: Vec<(f64, f64)>,
}

impl ConeFit {
    pub fn relative_error(&self) -> f64 {
        (self.c_fit - self.c_theory).abs() / self.c_theory
    }
}

/// √π·(2/α)·sin(α/2).
pub fn cone_coefficient(alpha: f64) -> f64 {
    PI.sqrt() * (2.0 / alpha) * (alpha / 2.0).sin()
}

/// Fit W(P̂_tδ_o, P̂_tδ_y) = d − c√t − bt for the vertex o and y = (R, 0).
pub fn cone_coefficient_fit(alpha: f64, y_radius: f64, ladder: Option<&TLadder>, cfg: &EstimatorConfig) -> Result<ConeFit> {
    let space = ModelSpace::cone(alpha)?;
    if !(y_radius > 0.0) {
        return Err(Error::InvalidArgument("cone probe radius must be positive".into()));
    }
    let o = space.vertex().expect("cone has a vertex");
    let y = space.point(&[y_radius, 0.0])?;
    let own;
    let l = match ladder {
        Some(l) => l,
        None => {
            own = TLadder::for_distance(&space, y_radius)?;
            &own
        }
    };
    let rungs = l
        .times()
        .par_iter()
        .map(|&t| Ok((t, heat_pair_distance(&space, t, &o, &y, 0.0, 2.0, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<(f64, f64)> = rungs.iter().map(|&(t, w)| (t, y_radius - w)).collect();
    let f = fit_sqrt_linear(&gaps)?;
    Ok(ConeFit { c_fit: f.a, c_theory: cone_coefficient(alpha), stderr: f.stderr_a, b: f.b, rungs })
}
