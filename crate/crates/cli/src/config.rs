//! Experiment configuration: TOML with one `[[experiment]]` table per row.

use ricci_lab::spaces::ModelSpace;
use serde::Deserialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("experiment `{id}`, field `{field}`: {msg}")]
    Field { id: String, field: &'static str, msg: String },
}

/// A number or an expression such as "pi/2", "3*pi/4", "-0.5".
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Value(f64),
    Expr(String),
}

impl Num {
    pub fn eval(&self) -> Result<f64, String> {
        match self {
            Num::Value(v) => Ok(*v),
            Num::Expr(s) => parse_expr(s),
        }
    }
}

/// Products and quotients of decimal numbers and `pi`.
pub fn parse_expr(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    let mut value = 1.0;
    let mut divide = false;
    let mut rest = body.trim();
    if rest.is_empty() {
        return Err(format!("empty number `{s}`"));
    }
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let tok = rest[..end].trim();
        // "3pi" is accepted as 3*pi.
        let v = match tok {
            "pi" | "π" => PI,
            t if t.ends_with("pi") => t[..t.len() - 2].trim().parse::<f64>().map_err(|_| format!("bad number `{s}`"))? * PI,
            t => t.parse::<f64>().map_err(|_| format!("bad number `{s}`"))?,
        };
        value = if divide { value / v } else { value * v };
        if end == rest.len() {
            break;
        }
        divide = &rest[end..end + 1] == "/";
        rest = rest[end + 1..].trim();
    }
    Ok(sign * value)
}

/// "euclidean(2)", "gaussian(1, -0.5)", "torus(1, 1)", "cone(pi)", "sphere(1)".
pub fn parse_space(s: &str) -> Result<ModelSpace, String> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| format!("space `{s}` needs parameters in parentheses"))?;
    let close = s.rfind(')').filter(|&c| c > open).ok_or_else(|| format!("unbalanced parentheses in `{s}`"))?;
    let name = s[..open].trim().to_ascii_lowercase();
    let args = s[open + 1..close]
        .split(',')
        .map(parse_expr)
        .collect::<Result<Vec<_>, _>>()?;
    let want = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("`{name}` takes {n} parameter(s), got {}", args.len()))
        }
    };
    let dim = |v: f64| {
        if v.fract() == 0.0 && v >= 1.0 {
            Ok(v as usize)
        } else {
            Err(format!("dimension must be a positive integer, got {v}"))
        }
    };
    let space = match name.as_str() {
        "euclidean" => {
            want(1)?;
            ModelSpace::euclidean(dim(args[0])?)
        }
        "gaussian" => {
            want(2)?;
            ModelSpace::gaussian(dim(args[0])?, args[1])
        }
        "torus" | "flat_torus" => {
            want(2)?;
            ModelSpace::flat_torus(args[0], args[1])
        }
        "cone" => {
            want(1)?;
            ModelSpace::cone(args[0])
        }
        "sphere" => {
            want(1)?;
            ModelSpace::sphere(args[0])
        }
        _ => return Err(format!("unknown space `{name}`")),
    };
    space.map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Theta,
    ThetaStar,
    ThetaFlat,
    Eta,
    Sandwich,
    ActionDecay,
    SpeedDecay,
    ConeCoefficient,
    Contraction,
    Robust,
    InvariantSuite,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Theta => "theta",
            Kind::ThetaStar => "theta-star",
            Kind::ThetaFlat => "theta-flat",
            Kind::Eta => "eta",
            Kind::Sandwich => "sandwich",
            Kind::ActionDecay => "action-decay",
            Kind::SpeedDecay => "speed-decay",
            Kind::ConeCoefficient => "cone-coefficient",
            Kind::Contraction => "contraction",
            Kind::Robust => "robust",
            Kind::InvariantSuite => "invariant-suite",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub t_max: Num,
    #[serde(default)]
    pub ratio: Option<Num>,
    #[serde(default)]
    pub rungs: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Experiment {
    pub id: String,
    pub kind: Kind,
    #[serde(default)]
    pub space: Option<String>,
    #[serde(default)]
    pub x: Option<Vec<Num>>,
    #[serde(default)]
    pub y: Option<Vec<Num>>,
    /// Tangent direction (speed-decay, robust).
    #[serde(default)]
    pub v: Option<Vec<Num>>,
    /// Use the cone vertex as x.
    #[serde(default)]
    pub x_vertex: bool,
    #[serde(default)]
    pub eps: Option<Num>,
    #[serde(default)]
    pub radius: Option<Num>,
    #[serde(default)]
    pub pairs: Option<usize>,
    #[serde(default)]
    pub p: Option<Num>,
    #[serde(default)]
    pub q: Option<Num>,
    /// Robust scale.
    #[serde(default)]
    pub r: Option<Num>,
    #[serde(default)]
    pub alpha: Option<Num>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub ladder: Option<Ladder>,
    /// Lower Ricci bound for contraction (defaults to the space's own).
    #[serde(default)]
    pub k: Option<Num>,
    /// Support radius of the random measures in contraction checks.
    #[serde(default)]
    pub support: Option<Num>,
    /// invariant-suite name: sinkhorn, metric, duality, heat.
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub instances: Option<usize>,
    #[serde(default)]
    pub reference: Option<Num>,
    #[serde(default)]
    pub lower: Option<Num>,
    #[serde(default)]
    pub upper: Option<Num>,
    #[serde(default)]
    pub tolerance: Option<Num>,
    /// Tolerance relative to |reference|.
    #[serde(default)]
    pub relative: bool,
    #[serde(default)]
    pub expect_divergent: Option<bool>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Wall-clock limit in seconds (checked when timings are recorded or not).
    #[serde(default)]
    pub max_seconds: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub experiment: Vec<Experiment>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut ids: Vec<&str> = cfg.experiment.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ConfigError::Parse(format!("duplicate experiment id `{}`", w[0])));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }
}
