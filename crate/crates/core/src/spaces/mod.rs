//! Model metric measure spaces: Euclidean, Gaussian, flat torus, cone over a
//! circle, and the round 2-sphere.
//!
//! Tangent vectors are two-component arrays expressed in the orthonormal
//! chart frame at the base point (Cartesian axes; (e_r, e_φ) on the cone;
//! (e_θ, e_φ) on the sphere). One-dimensional spaces ignore the second
//! component. At the cone vertex tangent vectors live in the unfolded sector,
//! with the first axis along φ = 0.

mod discretize;

pub use discretize::{Discretization, Extent, GridChart, GridLayout, DEFAULT_POINT_CAP};

use crate::error::{Error, Result};
use crate::special::gauss_legendre;
use std::f64::consts::PI;
use std::fmt;

pub type Tangent = [f64; 2];

/// Angular tolerance for deciding that two minimizing geodesics exist.
pub const CONJUGACY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpaceKind {
    Euclidean { n: usize },
    Gaussian { n: usize, k: f64 },
    FlatTorus { l1: f64, l2: f64 },
    Cone { alpha: f64 },
    Sphere { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpace {
    kind: SpaceKind,
    id: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub space_id: u64,
    dim: u8,
    coords: [f64; 2],
}

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }
    pub fn raw(&self) -> [f64; 2] {
        self.coords
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            1 => write!(f, "({})", self.coords[0]),
            _ => write!(f, "({}, {})", self.coords[0], self.coords[1]),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Curve {
    pub samples: Vec<(f64, Point)>,
    pub is_geodesic: bool,
    pub is_constant_speed: bool,
}

fn fnv(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn wrap(x: f64, lo: f64, period: f64) -> f64 {
    let mut y = (x - lo).rem_euclid(period) + lo;
    if y >= lo + period {
        y -= period;
    }
    y
}

pub fn rotate(beta: f64, u: Tangent) -> Tangent {
    let (s, c) = beta.sin_cos();
    [c * u[0] - s * u[1], s * u[0] + c * u[1]]
}

fn norm(v: Tangent) -> f64 {
    v[0].hypot(v[1])
}

type V3 = [f64; 3];

fn dot3(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: V3) -> f64 {
    dot3(a, a).sqrt()
}

fn axpy3(a: f64, x: V3, y: V3) -> V3 {
    [a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]]
}

impl ModelSpace {
    fn build(kind: SpaceKind) -> Result<Self> {
        let (tag, params): (u8, Vec<f64>) = match kind {
            SpaceKind::Euclidean { n } => {
                if !(1..=2).contains(&n) {
                    return Err(Error::InvalidSpace(format!("Euclidean dimension {n} (supported: 1, 2)")));
                }
                (0, vec![n as f64])
            }
            SpaceKind::Gaussian { n, k } => {
                if !(1..=2).contains(&n) {
                    return Err(Error::InvalidSpace(format!("Gaussian dimension {n} (supported: 1, 2)")));
                }
                if !k.is_finite() {
                    return Err(Error::InvalidSpace("Gaussian K must be finite".into()));
                }
                (1, vec![n as f64, k])
            }
            SpaceKind::FlatTorus { l1, l2 } => {
                if !(l1.is_finite() && l2.is_finite() && l1 > 0.0 && l2 > 0.0) {
                    return Err(Error::InvalidSpace("torus periods must be positive".into()));
                }
                (2, vec![l1, l2])
            }
            SpaceKind::Cone { alpha } => {
                if !(alpha > 0.0 && alpha < 2.0 * PI) {
                    return Err(Error::InvalidSpace(format!("cone angle {alpha} not in (0, 2π)")));
                }
                (3, vec![alpha])
            }
            SpaceKind::Sphere { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidSpace("sphere radius must be positive".into()));
                }
                (4, vec![radius])
            }
        };
        let id = fnv(std::iter::once(tag).chain(params.iter().flat_map(|p| p.to_bits().to_le_bytes())));
        Ok(Self { kind, id })
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::build(SpaceKind::Euclidean { n })
    }
    pub fn gaussian(n: usize, k: f64) -> Result<Self> {
        Self::build(SpaceKind::Gaussian { n, k })
    }
    pub fn flat_torus(l1: f64, l2: f64) -> Result<Self> {
        Self::build(SpaceKind::FlatTorus { l1, l2 })
    }
    pub fn cone(alpha: f64) -> Result<Self> {
        Self::build(SpaceKind::Cone { alpha })
    }
    pub fn sphere(radius: f64) -> Result<Self> {
        Self::build(SpaceKind::Sphere { radius })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SpaceKind::Euclidean { n } | SpaceKind::Gaussian { n, .. } => n,
            _ => 2,
        }
    }

    /// Short human-readable name, e.g. `cone(3.14159)`.
    pub fn label(&self) -> String {
        match self.kind {
            SpaceKind::Euclidean { n } => format!("euclidean({n})"),
            SpaceKind::Gaussian { n, k } => format!("gaussian({n},{k})"),
            SpaceKind::FlatTorus { l1, l2 } => format!("torus({l1},{l2})"),
            SpaceKind::Cone { alpha } => format!("cone({alpha:.6})"),
            SpaceKind::Sphere { radius } => format!("sphere({radius})"),
        }
    }

    /// Build a point from chart coordinates, normalizing periodic coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        let dim = self.dim();
        if coords.len() != dim || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("{coords:?} for {}", self.label())));
        }
        let mut c = [0.0; 2];
        c[..dim].copy_from_slice(coords);
        match self.kind {
            SpaceKind::FlatTorus { l1, l2 } => {
                c[0] = wrap(c[0], 0.0, l1);
                c[1] = wrap(c[1], 0.0, l2);
            }
            SpaceKind::Cone { alpha } => {
                if c[0] < 0.0 {
                    return Err(Error::InvalidPoint(format!("negative cone radius {}", c[0])));
                }
                c[1] = if c[0] == 0.0 { 0.0 } else { wrap(c[1], -alpha / 2.0, alpha) };
            }
            SpaceKind::Sphere { .. } => {
                if !(0.0..=PI).contains(&c[0]) {
                    return Err(Error::InvalidPoint(format!("polar angle {} outside [0, π]", c[0])));
                }
                c[1] = if c[0] == 0.0 || c[0] == PI { 0.0 } else { wrap(c[1], -PI, 2.0 * PI) };
            }
            _ => {}
        }
        Ok(Point { space_id: self.id, dim: dim as u8, coords: c })
    }

    fn pt(&self, c: [f64; 2]) -> Point {
        Point { space_id: self.id, dim: self.dim() as u8, coords: c }
    }

    /// The cone vertex `o`, if this is a cone.
    pub fn vertex(&self) -> Option<Point> {
        match self.kind {
            SpaceKind::Cone { .. } => Some(self.pt([0.0, 0.0])),
            _ => None,
        }
    }

    pub fn is_vertex(&self, p: &Point) -> bool {
        matches!(self.kind, SpaceKind::Cone { .. }) && p.coords[0] == 0.0
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if p.space_id != self.id {
            Err(Error::SpaceMismatch(self.id, p.space_id))
        } else {
            Ok(())
        }
    }

    /// Weight f with m = e^{-f} vol.
    pub fn weight_f(&self, p: &Point) -> f64 {
        match self.kind {
            SpaceKind::Gaussian { n, k } => {
                let r2: f64 = p.coords[..n].iter().map(|c| c * c).sum();
                0.5 * k * r2
            }
            _ => 0.0,
        }
    }

    pub fn sphere_embed(&self, p: &Point) -> V3 {
        let rho = match self.kind {
            SpaceKind::Sphere { radius } => radius,
            _ => 1.0,
        };
        let (st, ct) = p.coords[0].sin_cos();
        let (sp, cp) = p.coords[1].sin_cos();
        [rho * st * cp, rho * st * sp, rho * ct]
    }

    fn sphere_frame(p: &Point) -> (V3, V3) {
        let (st, ct) = p.coords[0].sin_cos();
        let (sp, cp) = p.coords[1].sin_cos();
        ([ct * cp, ct * sp, -st], [-sp, cp, 0.0])
    }

    fn sphere_from_embed(&self, x: V3) -> Point {
        let theta = (x[0].hypot(x[1])).atan2(x[2]);
        let phi = if x[0] == 0.0 && x[1] == 0.0 { 0.0 } else { x[1].atan2(x[0]) };
        let mut c = [theta, phi];
        if theta == 0.0 || theta == PI {
            c[1] = 0.0;
        } else {
            c[1] = wrap(phi, -PI, 2.0 * PI);
        }
        self.pt(c)
    }

    /// Geodesic distance with space-id checks.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dist(x, y))
    }

    /// Geodesic distance without id checks (hot loops).
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        let a = x.coords;
        let b = y.coords;
        match self.kind {
            SpaceKind::Euclidean { n } | SpaceKind::Gaussian { n, .. } => {
                if n == 1 {
                    (a[0] - b[0]).abs()
                } else {
                    (a[0] - b[0]).hypot(a[1] - b[1])
                }
            }
            SpaceKind::FlatTorus { l1, l2 } => {
                let d0 = (a[0] - b[0]).abs().rem_euclid(l1);
                let d1 = (a[1] - b[1]).abs().rem_euclid(l2);
                d0.min(l1 - d0).hypot(d1.min(l2 - d1))
            }
            SpaceKind::Cone { alpha } => {
                let (r1, r2) = (a[0], b[0]);
                let delta = (a[1] - b[1]).abs();
                let beta = delta.min(alpha - delta).max(0.0);
                if beta <= PI {
                    let s = (0.5 * beta).sin();
                    ((r1 - r2) * (r1 - r2) + 4.0 * r1 * r2 * s * s).max(0.0).sqrt()
                } else {
                    r1 + r2
                }
            }
            SpaceKind::Sphere { radius } => {
                let xa = self.sphere_embed(x);
                let xb = self.sphere_embed(y);
                radius * norm3(cross3(xa, xb)).atan2(dot3(xa, xb))
            }
        }
    }

    /// Exponential map at `p` of the chart-frame vector `v`.
    pub fn exp(&self, p: &Point, v: Tangent) -> Point {
        let c = p.coords;
        match self.kind {
            SpaceKind::Euclidean { n } | SpaceKind::Gaussian { n, .. } => {
                if n == 1 {
                    self.pt([c[0] + v[0], 0.0])
                } else {
                    self.pt([c[0] + v[0], c[1] + v[1]])
                }
            }
            SpaceKind::FlatTorus { l1, l2 } => {
                self.pt([wrap(c[0] + v[0], 0.0, l1), wrap(c[1] + v[1], 0.0, l2)])
            }
            SpaceKind::Cone { alpha } => {
                if c[0] == 0.0 {
                    let r = norm(v);
                    if r == 0.0 {
                        return *p;
                    }
                    return self.pt([r, wrap(v[1].atan2(v[0]), -alpha / 2.0, alpha)]);
                }
                let x = c[0] + v[0];
                let y = v[1];
                let r = x.hypot(y);
                if r == 0.0 {
                    return self.pt([0.0, 0.0]);
                }
                let psi = if y == 0.0 && x < 0.0 { alpha / 2.0 } else { y.atan2(x) };
                self.pt([r, wrap(c[1] + psi, -alpha / 2.0, alpha)])
            }
            SpaceKind::Sphere { radius } => {
                let s = norm(v);
                if s == 0.0 {
                    return *p;
                }
                let x = self.sphere_embed(p);
                let (et, ep) = Self::sphere_frame(p);
                let dir = axpy3(v[1] / s, ep, [et[0] * v[0] / s, et[1] * v[0] / s, et[2] * v[0] / s]);
                let (sw, cw) = (s / radius).sin_cos();
                let q = axpy3(radius * sw, dir, [cw * x[0], cw * x[1], cw * x[2]]);
                self.sphere_from_embed(q)
            }
        }
    }

    /// Inverse exponential map: chart-frame vector at `p` pointing to `q` with
    /// length d(p, q). Fails with `ConjugatePair` on the cut locus.
    pub fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        let a = p.coords;
        let b = q.coords;
        match self.kind {
            SpaceKind::Euclidean { n } | SpaceKind::Gaussian { n, .. } => {
                if n == 1 {
                    Ok([b[0] - a[0], 0.0])
                } else {
                    Ok([b[0] - a[0], b[1] - a[1]])
                }
            }
            SpaceKind::FlatTorus { l1, l2 } => {
                let mut out = [0.0; 2];
                for (i, l) in [l1, l2].into_iter().enumerate() {
                    let d = wrap(b[i] - a[i], -l / 2.0, l);
                    if (d.abs() - l / 2.0).abs() <= CONJUGACY_TOL * l {
                        return Err(Error::ConjugatePair);
                    }
                    out[i] = d;
                }
                Ok(out)
            }
            SpaceKind::Cone { alpha } => {
                if a[0] == 0.0 {
                    return Ok([b[0] * b[1].cos(), b[0] * b[1].sin()]);
                }
                if b[0] == 0.0 {
                    return Ok([-a[0], 0.0]);
                }
                let delta = wrap(b[1] - a[1], -alpha / 2.0, alpha);
                if (delta.abs() - alpha / 2.0).abs() <= CONJUGACY_TOL {
                    return Err(Error::ConjugatePair);
                }
                Ok([b[0] * delta.cos() - a[0], b[0] * delta.sin()])
            }
            SpaceKind::Sphere { radius } => {
                let x = self.sphere_embed(p);
                let y = self.sphere_embed(q);
                let omega = norm3(cross3(x, y)).atan2(dot3(x, y));
                if omega >= PI - CONJUGACY_TOL {
                    return Err(Error::ConjugatePair);
                }
                if omega == 0.0 {
                    return Ok([0.0, 0.0]);
                }
                let c = dot3(x, y) / (radius * radius);
                let w = axpy3(-c, x, y);
                let wn = norm3(w);
                if wn == 0.0 {
                    return Ok([0.0, 0.0]);
                }
                let (et, ep) = Self::sphere_frame(p);
                let s = radius * omega / wn;
                Ok([s * dot3(w, et), s * dot3(w, ep)])
            }
        }
    }

    /// γ(a) on the minimizing geodesic from x to y (radial through the vertex
    /// when an endpoint is the cone vertex).
    pub fn geodesic_point(&self, x: &Point, y: &Point, a: f64) -> Result<Point> {
        if self.is_vertex(x) {
            return Ok(self.pt([a * y.coords[0], if y.coords[0] == 0.0 { 0.0 } else { y.coords[1] }]));
        }
        if self.is_vertex(y) {
            let r = (1.0 - a) * x.coords[0];
            return Ok(self.pt([r, if r == 0.0 { 0.0 } else { x.coords[1] }]));
        }
        let v = self.log(x, y)?;
        Ok(self.exp(x, [a * v[0], a * v[1]]))
    }

    pub fn geodesic(&self, x: &Point, y: &Point, n_samples: usize) -> Result<Curve> {
        self.check(x)?;
        self.check(y)?;
        if n_samples < 2 {
            return Err(Error::InvalidArgument("geodesic needs at least 2 samples".into()));
        }
        if !self.is_vertex(x) && !self.is_vertex(y) {
            self.log(x, y)?;
        }
        let mut samples = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let a = i as f64 / (n_samples - 1) as f64;
            let p = if i == 0 {
                *x
            } else if i == n_samples - 1 {
                *y
            } else {
                self.geodesic_point(x, y, a)?
            };
            samples.push((a, p));
        }
        Ok(Curve { samples, is_geodesic: true, is_constant_speed: true })
    }

    /// Bakry–Émery Ricci curvature Ric_f(v, v)/|v|².
    pub fn ricci_f(&self, x: &Point, v: Tangent) -> Result<f64> {
        self.check(x)?;
        if norm(v) == 0.0 {
            return Err(Error::InvalidArgument("zero tangent vector".into()));
        }
        match self.kind {
            SpaceKind::Euclidean { .. } | SpaceKind::FlatTorus { .. } => Ok(0.0),
            SpaceKind::Gaussian { k, .. } => Ok(k),
            SpaceKind::Cone { .. } => {
                if self.is_vertex(x) {
                    Err(Error::VertexCurvature)
                } else {
                    Ok(0.0)
                }
            }
            SpaceKind::Sphere { radius } => Ok(1.0 / (radius * radius)),
        }
    }

    fn check_segment(&self, x: &Point, y: &Point) -> Result<()> {
        self.check(x)?;
        self.check(y)?;
        if self.is_vertex(x) || self.is_vertex(y) {
            return Err(Error::VertexCurvature);
        }
        if x == y {
            return Err(Error::InvalidArgument("degenerate geodesic (x = y)".into()));
        }
        self.log(x, y).map(|_| ())
    }

    /// Average of Ric_f(γ̇, γ̇)/|γ̇|² along the geodesic from x to y
    /// (32-node Gauss–Legendre rule).
    pub fn ricci_average(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_segment(x, y)?;
        let v = self.log(x, y)?;
        let (nodes, weights) = gauss_legendre(32);
        let mut acc = 0.0;
        for (s, w) in nodes.iter().zip(&weights) {
            let a = 0.5 * (s + 1.0);
            let p = self.exp(x, [a * v[0], a * v[1]]);
            if self.is_vertex(&p) {
                return Err(Error::VertexCurvature);
            }
            let dir = self.log(&p, y)?;
            let dir = if norm(dir) > 0.0 { dir } else { v };
            acc += 0.5 * w * self.ricci_f(&p, dir)?;
        }
        Ok(acc)
    }

    /// Largest modulus of the sectional curvature along the geodesic.
    pub fn curvature_modulus(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_segment(x, y)?;
        Ok(match self.kind {
            SpaceKind::Sphere { radius } => 1.0 / (radius * radius),
            _ => 0.0,
        })
    }

    /// Frame angle at `y` obtained by parallel transport of the frame rotated
    /// by `beta` at `x` along the geodesic from x to y.
    pub fn transport_angle(&self, x: &Point, y: &Point, beta: f64) -> Result<f64> {
        match self.kind {
            SpaceKind::Euclidean { .. } | SpaceKind::Gaussian { .. } | SpaceKind::FlatTorus { .. } => Ok(beta),
            SpaceKind::Cone { alpha } => {
                if self.is_vertex(x) {
                    Ok(beta - y.coords[1])
                } else if self.is_vertex(y) {
                    Ok(beta + x.coords[1])
                } else {
                    let delta = wrap(y.coords[1] - x.coords[1], -alpha / 2.0, alpha);
                    Ok(beta - delta)
                }
            }
            SpaceKind::Sphere { .. } => {
                let px = self.sphere_embed(x);
                let py = self.sphere_embed(y);
                let (et, ep) = Self::sphere_frame(x);
                let (cb, sb) = (beta.cos(), beta.sin());
                let e = axpy3(sb, ep, [cb * et[0], cb * et[1], cb * et[2]]);
                let axis = cross3(px, py);
                let an = norm3(axis);
                let e2 = if an < 1e-300 {
                    if dot3(px, py) < 0.0 {
                        return Err(Error::ConjugatePair);
                    }
                    e
                } else {
                    let k = [axis[0] / an, axis[1] / an, axis[2] / an];
                    let omega = an.atan2(dot3(px, py));
                    let (so, co) = omega.sin_cos();
                    let kxe = cross3(k, e);
                    let kd = dot3(k, e) * (1.0 - co);
                    [
                        e[0] * co + kxe[0] * so + k[0] * kd,
                        e[1] * co + kxe[1] * so + k[1] * kd,
                        e[2] * co + kxe[2] * so + k[2] * kd,
                    ]
                };
                let (ft, fp) = Self::sphere_frame(y);
                Ok(dot3(e2, fp).atan2(dot3(e2, ft)))
            }
        }
    }

    /// Volume density of the exponential map at distance s (Riemannian
    /// Jacobian of normal coordinates).
    pub fn exp_jacobian(&self, s: f64) -> f64 {
        match self.kind {
            SpaceKind::Sphere { radius } => {
                let u = s / radius;
                if u < 1e-8 {
                    1.0 - u * u / 6.0
                } else {
                    u.sin() / u
                }
            }
            _ => 1.0,
        }
    }

    /// Largest normal-patch radius around `p` on which exp_p is injective
    /// and avoids the vertex.
    pub fn normal_radius(&self, p: &Point) -> f64 {
        match self.kind {
            SpaceKind::Euclidean { .. } | SpaceKind::Gaussian { .. } => f64::INFINITY,
            SpaceKind::FlatTorus { l1, l2 } => 0.5 * l1.min(l2),
            SpaceKind::Cone { alpha } => {
                let r = p.coords[0];
                if alpha >= PI {
                    r
                } else {
                    r * (0.5 * alpha).sin()
                }
            }
            SpaceKind::Sphere { radius } => PI * radius,
        }
    }

    /// Natural volume measure of the whole space if finite.
    pub fn total_volume(&self) -> Option<f64> {
        match self.kind {
            SpaceKind::FlatTorus { l1, l2 } => Some(l1 * l2),
            SpaceKind::Sphere { radius } => Some(4.0 * PI * radius * radius),
            _ => None,
        }
    }

    /// Analytic lower Ricci bound used by contraction checks.
    pub fn lower_ricci_bound(&self) -> f64 {
        match self.kind {
            SpaceKind::Gaussian { k, .. } => k,
            SpaceKind::Sphere { radius } => 1.0 / (radius * radius),
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let e = ModelSpace::euclidean(2).unwrap();
        let d = e.distance(&e.point(&[0.0, 0.0]).unwrap(), &e.point(&[3.0, 4.0]).unwrap()).unwrap();
        assert_eq!(d, 5.0);
        let c = ModelSpace::cone(PI).unwrap();
        let d = c.distance(&c.point(&[1.0, -PI / 4.0]).unwrap(), &c.point(&[1.0, PI / 4.0]).unwrap()).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let y = c.point(&[0.7, 1.1]).unwrap();
        assert!((c.dist(&c.vertex().unwrap(), &y) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let a = ModelSpace::euclidean(2).unwrap();
        let b = ModelSpace::gaussian(2, 1.0).unwrap();
        let x = a.point(&[0.0, 0.0]).unwrap();
        let y = b.point(&[0.0, 0.0]).unwrap();
        assert!(matches!(a.distance(&x, &y), Err(Error::SpaceMismatch(..))));
    }

    #[test]
    fn geodesic_examples() {
        let e = ModelSpace::euclidean(2).unwrap();
        let m = e
            .geodesic_point(&e.point(&[0.0, 0.0]).unwrap(), &e.point(&[2.0, 0.0]).unwrap(), 0.5)
            .unwrap();
        assert_eq!(m.coords(), &[1.0, 0.0]);
        let s = ModelSpace::sphere(1.0).unwrap();
        let pole = s.point(&[0.0, 0.0]).unwrap();
        let eq = s.point(&[PI / 2.0, 0.3]).unwrap();
        let m = s.geodesic_point(&pole, &eq, 0.5).unwrap();
        assert!((m.coords()[0] - PI / 4.0).abs() < 1e-12);
        assert!((m.coords()[1] - 0.3).abs() < 1e-12);
        let t = ModelSpace::flat_torus(1.0, 1.0).unwrap();
        let r = t.geodesic(&t.point(&[0.1, 0.0]).unwrap(), &t.point(&[0.6, 0.0]).unwrap(), 5);
        assert!(matches!(r, Err(Error::ConjugatePair)));
    }

    #[test]
    fn cone_conjugate_and_vertex_errors() {
        let c = ModelSpace::cone(PI).unwrap();
        let x = c.point(&[1.0, -PI / 4.0]).unwrap();
        let y = c.point(&[1.0, PI / 4.0]).unwrap();
        assert!(matches!(c.geodesic(&x, &y, 3), Err(Error::ConjugatePair)));
        let o = c.vertex().unwrap();
        assert!(matches!(c.ricci_f(&o, [1.0, 0.0]), Err(Error::VertexCurvature)));
        assert!(matches!(c.ricci_average(&o, &y), Err(Error::VertexCurvature)));
        assert_eq!(c.ricci_f(&c.point(&[1.0, 0.0]).unwrap(), [0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn curvature_values() {
        let g = ModelSpace::gaussian(2, -0.5).unwrap();
        let x = g.point(&[0.1, 0.2]).unwrap();
        let y = g.point(&[-0.4, 0.9]).unwrap();
        assert!((g.ricci_average(&x, &y).unwrap() + 0.5).abs() < 1e-14);
        assert_eq!(g.curvature_modulus(&x, &y).unwrap(), 0.0);
        let s = ModelSpace::sphere(1.0).unwrap();
        let x = s.point(&[PI / 2.0, 0.0]).unwrap();
        let y = s.point(&[PI / 2.0, PI / 2.0]).unwrap();
        assert!((s.ricci_average(&x, &y).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(s.curvature_modulus(&x, &y).unwrap(), 1.0);
        let c = ModelSpace::cone(1.5 * PI).unwrap();
        let a = c.point(&[1.0, 0.2]).unwrap();
        let b = c.point(&[0.5, -1.0]).unwrap();
        assert_eq!(c.curvature_modulus(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn sphere_transport_angle_preserves_direction_to_target() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let x = s.point(&[0.8, 0.3]).unwrap();
        let y = s.point(&[1.9, -1.2]).unwrap();
        let v = s.log(&x, &y).unwrap();
        let beta = v[1].atan2(v[0]);
        let by = s.transport_angle(&x, &y, beta).unwrap();
        let w = s.log(&y, &x).unwrap();
        // the transported tangent continues away from x
        let back = (-w[1]).atan2(-w[0]);
        let diff = wrap(by - back, -PI, 2.0 * PI);
        assert!(diff.abs() < 1e-10, "{by} vs {back}");
    }
}
