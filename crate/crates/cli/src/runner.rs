//! Executes experiments and turns estimator output into result rows.

use crate::config::{ConfigError, Experiment, Kind, Num};
use crate::invariants;
use ricci_lab::estimators::{
    action_decay_estimate, cone_coefficient_fit, contraction_check, eta_estimate, robust_family, sandwich_check,
    speed_decay_estimate, theta_estimate, theta_flat_estimate, theta_star_estimate, EstimatorConfig, TLadder,
};
use ricci_lab::spaces::{Discretization, ModelSpace, Point, Tangent};
use ricci_lab::transport::DiscreteMeasure;
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct Options {
    pub cap_points: Option<usize>,
    pub tolerance_scale: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { cap_points: None, tolerance_scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub id: String,
    pub space: String,
    pub params: String,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub reference: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
    pub seconds: f64,
    /// Estimator error, if the experiment could not be evaluated.
    pub error: Option<String>,
}

/// What an experiment measured before judging.
struct Outcome {
    estimate: f64,
    stderr: Option<f64>,
    divergent: bool,
    reference: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
    /// Set when the kind decides pass/fail itself.
    verdict: Option<bool>,
}

impl Outcome {
    fn value(estimate: f64, stderr: f64, divergent: bool) -> Self {
        Self { estimate, stderr: Some(stderr), divergent, reference: None, lower: None, upper: None, verdict: None }
    }
}

fn field(e: &Experiment, field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field { id: e.id.clone(), field, msg: msg.into() }
}

fn num(e: &Experiment, name: &'static str, v: &Option<Num>) -> Result<Option<f64>, ConfigError> {
    v.as_ref().map(|n| n.eval().map_err(|m| field(e, name, m))).transpose()
}

fn need(e: &Experiment, name: &'static str, v: &Option<Num>) -> Result<f64, ConfigError> {
    num(e, name, v)?.ok_or_else(|| field(e, name, "required"))
}

fn coords(e: &Experiment, name: &'static str, v: &Option<Vec<Num>>) -> Result<Option<Vec<f64>>, ConfigError> {
    v.as_ref()
        .map(|xs| xs.iter().map(|n| n.eval().map_err(|m| field(e, name, m))).collect())
        .transpose()
}

/// Validated inputs of one experiment.
struct Inputs {
    space: Option<ModelSpace>,
    x: Option<Point>,
    y: Option<Point>,
    v: Option<Tangent>,
    ladder: Option<TLadder>,
}

fn inputs(e: &Experiment) -> Result<Inputs, ConfigError> {
    let space = e
        .space
        .as_deref()
        .map(|s| crate::config::parse_space(s).map_err(|m| field(e, "space", m)))
        .transpose()?;
    let pt = |name: &'static str, v: &Option<Vec<Num>>| -> Result<Option<Point>, ConfigError> {
        let Some(c) = coords(e, name, v)? else { return Ok(None) };
        let s = space.as_ref().ok_or_else(|| field(e, "space", "required for points"))?;
        s.point(&c).map(Some).map_err(|err| field(e, name, err.to_string()))
    };
    let mut x = pt("x", &e.x)?;
    if e.x_vertex {
        let s = space.as_ref().ok_or_else(|| field(e, "space", "required for x-vertex"))?;
        if x.is_some() {
            return Err(field(e, "x-vertex", "conflicts with x"));
        }
        x = Some(s.vertex().ok_or_else(|| field(e, "x-vertex", "space has no vertex"))?);
    }
    let y = pt("y", &e.y)?;
    let v = match coords(e, "v", &e.v)? {
        Some(c) if c.len() == 1 => Some([c[0], 0.0]),
        Some(c) if c.len() == 2 => Some([c[0], c[1]]),
        Some(_) => return Err(field(e, "v", "needs one or two components")),
        None => None,
    };
    let ladder = match &e.ladder {
        Some(l) => {
            let t_max = l.t_max.eval().map_err(|m| field(e, "ladder", m))?;
            let ratio = l.ratio.as_ref().map(|r| r.eval()).transpose().map_err(|m| field(e, "ladder", m))?.unwrap_or(0.5);
            Some(TLadder::geometric(t_max, ratio, l.rungs.unwrap_or(10)).map_err(|err| field(e, "ladder", err.to_string()))?)
        }
        None => None,
    };
    Ok(Inputs { space, x, y, v, ladder })
}

fn params(e: &Experiment) -> String {
    let f = |v: &Option<Num>| v.as_ref().map(|n| n.eval().map(fmt).unwrap_or_else(|m| m));
    let c = |v: &Option<Vec<Num>>| {
        v.as_ref().map(|xs| format!("[{}]", xs.iter().map(|n| n.eval().map(fmt).unwrap_or_default()).collect::<Vec<_>>().join(" ")))
    };
    let mut out = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            out.push(format!("{k}={v}"));
        }
    };
    push("kind", Some(e.kind.name().to_string()));
    push("x", if e.x_vertex { Some("vertex".into()) } else { c(&e.x) });
    push("y", c(&e.y));
    push("v", c(&e.v));
    push("eps", f(&e.eps));
    push("radius", f(&e.radius));
    push("pairs", e.pairs.map(|p| p.to_string()));
    push("p", f(&e.p));
    push("q", f(&e.q));
    push("r", f(&e.r));
    push("alpha", f(&e.alpha));
    push("samples", e.samples.map(|s| s.to_string()));
    push("suite", e.suite.clone());
    push("instances", e.instances.map(|s| s.to_string()));
    push("seed", e.seed.map(|s| s.to_string()));
    if let Some(l) = &e.ladder {
        push("t_max", f(&Some(l.t_max.clone())));
    }
    out.join(";")
}

pub fn fmt(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.10e}")
    }
}

fn estimator_config(opts: &Options) -> EstimatorConfig {
    let mut cfg = EstimatorConfig::default();
    if let Some(cap) = opts.cap_points {
        cfg.point_cap = cap;
    }
    cfg
}

/// Random measure with support in the ball of radius `support` around `c`.
fn random_measure(space: &ModelSpace, c: &Point, support: f64, seed: u64, cfg: &EstimatorConfig) -> ricci_lab::Result<DiscreteMeasure> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let disc = Arc::new(Discretization::ball_patch(space, c, 0.0, support, support / 8.0, cfg.point_cap)?);
    let w = disc
        .points()
        .iter()
        .map(|p| if space.dist(c, p) <= support { rng.gen::<f64>() } else { 0.0 })
        .collect();
    DiscreteMeasure::new(disc, w)
}

fn ladder_or_default(l: &Option<TLadder>, space: &ModelSpace, d: f64) -> ricci_lab::Result<TLadder> {
    match l {
        Some(l) => Ok(l.clone()),
        None => TLadder::for_distance(space, d),
    }
}

fn measure(e: &Experiment, inp: &Inputs, opts: &Options) -> Result<Result<Outcome, String>, ConfigError> {
    let cfg = estimator_config(opts);
    let scale = opts.tolerance_scale;
    let space = || inp.space.ok_or_else(|| field(e, "space", "required"));
    let x = || inp.x.ok_or_else(|| field(e, "x", "required"));
    let y = || inp.y.ok_or_else(|| field(e, "y", "required"));
    let v = || inp.v.ok_or_else(|| field(e, "v", "required"));
    let s = |r: ricci_lab::Error| r.to_string();
    Ok(match e.kind {
        Kind::Theta => {
            let (sp, x, y) = (space()?, x()?, y()?);
            (|| {
                let l = ladder_or_default(&inp.ladder, &sp, sp.distance(&x, &y)?)?;
                let t = theta_estimate(&sp, &x, &y, &l, &cfg)?;
                Ok(Outcome::value(t.value, t.error_bar(), t.divergent))
            })()
            .map_err(s)
        }
        Kind::ThetaStar => {
            let (sp, x) = (space()?, x()?);
            let radius = need(e, "radius", &e.radius)?;
            theta_star_estimate(&sp, &x, radius, e.pairs.unwrap_or(4), inp.ladder.as_ref(), &cfg)
                .map(|t| Outcome::value(t.value, t.error, t.value.is_infinite()))
                .map_err(s)
        }
        Kind::ThetaFlat => {
            let (sp, x, y) = (space()?, x()?, y()?);
            let eps = need(e, "eps", &e.eps)?;
            theta_flat_estimate(&sp, &x, &y, eps, inp.ladder.as_ref(), &cfg)
                .map(|f| Outcome::value(f.value, f.error, f.divergent))
                .map_err(s)
        }
        Kind::Eta => {
            let (sp, x, y) = (space()?, x()?, y()?);
            let eps = need(e, "eps", &e.eps)?;
            eta_estimate(&sp, &x, &y, eps, &cfg).map(|h| Outcome::value(h.value, h.error, false)).map_err(s)
        }
        Kind::Sandwich => {
            let (sp, x, y) = (space()?, x()?, y()?);
            let tol = num(e, "tolerance", &e.tolerance)?.unwrap_or(0.02) * scale;
            (|| {
                let l = ladder_or_default(&inp.ladder, &sp, sp.distance(&x, &y)?)?;
                let r = sandwich_check(&sp, &x, &y, &l, tol, &cfg)?;
                Ok(Outcome {
                    estimate: r.estimate.value,
                    stderr: Some(r.estimate.error_bar()),
                    divergent: r.estimate.divergent,
                    reference: None,
                    lower: Some(r.lower),
                    upper: Some(r.upper),
                    verdict: Some(r.pass),
                })
            })()
            .map_err(s)
        }
        Kind::ActionDecay => {
            let (sp, x, y) = (space()?, x()?, y()?);
            let p = num(e, "p", &e.p)?.unwrap_or(1.0);
            (|| {
                let curve = sp.geodesic(&x, &y, e.samples.unwrap_or(5))?;
                let t = action_decay_estimate(&sp, &curve, p, inp.ladder.as_ref(), &cfg)?;
                Ok(Outcome::value(t.value, t.error_bar(), t.divergent))
            })()
            .map_err(s)
        }
        Kind::SpeedDecay => {
            let (sp, x, v) = (space()?, x()?, v()?);
            speed_decay_estimate(&sp, &x, v, inp.ladder.as_ref(), &cfg)
                .map(|t| Outcome::value(t.value, t.error_bar(), t.divergent))
                .map_err(s)
        }
        Kind::ConeCoefficient => {
            let alpha = need(e, "alpha", &e.alpha)?;
            let radius = num(e, "radius", &e.radius)?.unwrap_or(1.0);
            let tol = num(e, "tolerance", &e.tolerance)?.unwrap_or(0.05) * scale;
            cone_coefficient_fit(alpha, radius, inp.ladder.as_ref(), &cfg)
                .map(|f| Outcome {
                    estimate: f.c_fit,
                    stderr: Some(f.stderr),
                    divergent: false,
                    reference: Some(f.c_theory),
                    lower: None,
                    upper: None,
                    verdict: Some(f.relative_error() <= tol),
                })
                .map_err(s)
        }
        Kind::Contraction => {
            let (sp, x, y) = (space()?, x()?, y()?);
            let q = num(e, "q", &e.q)?.unwrap_or(2.0);
            let k = num(e, "k", &e.k)?.unwrap_or_else(|| sp.lower_ricci_bound());
            let support = num(e, "support", &e.support)?.unwrap_or(0.1);
            let tol = num(e, "tolerance", &e.tolerance)?.unwrap_or(0.01) * scale;
            let seed = e.seed.unwrap_or(0);
            (|| {
                let mu = random_measure(&sp, &x, support, seed, &cfg)?;
                let nu = random_measure(&sp, &y, support, seed.wrapping_add(1), &cfg)?;
                let l = ladder_or_default(&inp.ladder, &sp, sp.distance(&x, &y)?)?;
                let r = contraction_check(&sp, k, &mu, &nu, &l, q, &cfg)?;
                Ok(Outcome {
                    estimate: r.worst_margin,
                    stderr: None,
                    divergent: false,
                    reference: None,
                    lower: None,
                    upper: Some(tol),
                    verdict: Some(r.pass(tol)),
                })
            })()
            .map_err(s)
        }
        Kind::Robust => {
            let (sp, x, v) = (space()?, x()?, v()?);
            let r = need(e, "r", &e.r)?;
            let tol = num(e, "tolerance", &e.tolerance)?.unwrap_or(0.02) * scale;
            robust_family(&sp, &x, v, r, &cfg)
                .map(|f| Outcome {
                    estimate: f.defect,
                    stderr: None,
                    divergent: false,
                    reference: None,
                    lower: None,
                    upper: Some(f.bound),
                    verdict: Some(f.pass(tol)),
                })
                .map_err(s)
        }
        Kind::InvariantSuite => {
            let name = e.suite.as_deref().ok_or_else(|| field(e, "suite", "required"))?;
            let seed = e.seed.unwrap_or(0);
            let r = match name {
                "sinkhorn" => invariants::sinkhorn_gap(e.instances.unwrap_or(100), seed),
                "duality" => invariants::duality_gap(e.instances.unwrap_or(20), seed),
                "metric" => invariants::metric_axioms(e.instances.unwrap_or(20), seed),
                "heat" => invariants::heat_core(),
                other => return Err(field(e, "suite", format!("unknown invariant suite `{other}`"))),
            };
            r.map(|(worst, limit)| {
                let limit = limit * scale;
                Outcome {
                    estimate: worst,
                    stderr: None,
                    divergent: false,
                    reference: None,
                    lower: None,
                    upper: Some(limit),
                    verdict: Some(worst <= limit),
                }
            })
            .map_err(s)
        }
    })
}

fn judge(e: &Experiment, o: &Outcome, scale: f64) -> Result<(bool, Option<f64>, Option<f64>, Option<f64>), ConfigError> {
    let reference = num(e, "reference", &e.reference)?.or(o.reference);
    let lower = num(e, "lower", &e.lower)?.or(o.lower);
    let upper = num(e, "upper", &e.upper)?.or(o.upper);
    if let Some(want) = e.expect_divergent {
        return Ok((o.divergent == want, reference, lower, upper));
    }
    if let Some(v) = o.verdict {
        return Ok((v && !o.divergent, reference, lower, upper));
    }
    let tol = num(e, "tolerance", &e.tolerance)?.unwrap_or(0.0) * scale;
    let est = o.estimate;
    let mut pass = !o.divergent && est.is_finite();
    if let Some(r) = reference {
        let t = if e.relative { tol * r.abs() } else { tol };
        pass &= (est - r).abs() <= t;
    }
    if let Some(l) = lower {
        pass &= est >= l - tol;
    }
    if let Some(u) = upper {
        pass &= est <= u + tol;
    }
    Ok((pass, reference, lower, upper))
}

/// Runs one experiment. Configuration errors abort the run; estimator
/// errors produce a failing row.
pub fn run_experiment(e: &Experiment, opts: &Options) -> Result<Row, ConfigError> {
    let inp = inputs(e)?;
    let space = inp.space.map(|s| s.label()).unwrap_or_else(|| "-".into());
    let start = Instant::now();
    let measured = measure(e, &inp, opts)?;
    let seconds = start.elapsed().as_secs_f64();
    let within_time = e.max_seconds.is_none_or(|m| seconds <= m);
    Ok(match measured {
        Ok(o) => {
            let (pass, reference, lower, upper) = judge(e, &o, opts.tolerance_scale)?;
            Row {
                id: e.id.clone(),
                space,
                params: params(e),
                estimate: if o.divergent && o.verdict.is_none() { f64::INFINITY } else { o.estimate },
                stderr: o.stderr,
                reference,
                lower,
                upper,
                pass: pass && within_time,
                seconds,
                error: None,
            }
        }
        Err(msg) => Row {
            id: e.id.clone(),
            space,
            params: params(e),
            estimate: f64::NAN,
            stderr: None,
            reference: None,
            lower: None,
            upper: None,
            pass: false,
            seconds,
            error: Some(msg),
        },
    })
}

/// Checks an experiment's inputs without running it.
pub fn validate(e: &Experiment) -> Result<(), ConfigError> {
    inputs(e).map(|_| ())
}

/// Runs every experiment and returns rows sorted by id.
pub fn run_all(exps: &[Experiment], opts: &Options) -> Result<Vec<Row>, ConfigError> {
    // Validate everything before spending time on estimators.
    for e in exps {
        validate(e)?;
    }
    let mut rows = exps.par_iter().map(|e| run_experiment(e, opts)).collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(rows)
}
