//! Heat semigroup P_t and its dual P̂_t on the model spaces.
//!
//! Kernels are densities with respect to the reference measure m, so
//! P̂_tδ_x(dy) = p_t(x, y) m(dy).

mod laplacian;

pub use laplacian::{discrete_laplacian_flow, weighted_laplacian, LAPLACIAN_POINT_CAP};

use crate::error::{Error, Result};
use crate::spaces::{Discretization, GridChart, ModelSpace, Point, SpaceKind};
use crate::special::{bessel_i_scaled, legendre_sum};
use crate::transport::DiscreteMeasure;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Budget on |1 − total mass| of a discretized heat measure.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// Below this fraction of the peak density, kernel values count as zero when
/// judging series tails.
const TAIL_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum HeatMethod {
    ClosedForm,
    /// Legendre (sphere) or Bessel (cone) series; `truncation` overrides the
    /// default number of terms.
    SpectralSeries { truncation: Option<usize> },
    DiscreteLaplacian(Arc<Discretization>),
}

#[derive(Clone, Debug)]
pub struct HeatKernelEvaluator {
    space: ModelSpace,
    method: HeatMethod,
    mass_tol: f64,
}

impl HeatKernelEvaluator {
    /// Closed form where one exists, otherwise the spectral series.
    pub fn new(space: ModelSpace) -> Self {
        let method = match space.kind() {
            SpaceKind::Sphere { .. } | SpaceKind::Cone { .. } => HeatMethod::SpectralSeries { truncation: None },
            _ => HeatMethod::ClosedForm,
        };
        Self { space, method, mass_tol: MASS_TOLERANCE }
    }

    pub fn with_method(space: ModelSpace, method: HeatMethod) -> Result<Self> {
        match (&method, space.kind()) {
            (HeatMethod::ClosedForm, SpaceKind::Sphere { .. } | SpaceKind::Cone { .. }) => {
                return Err(Error::InvalidArgument(format!("no closed-form heat kernel on {}", space.label())))
            }
            (HeatMethod::SpectralSeries { .. }, SpaceKind::Euclidean { .. } | SpaceKind::Gaussian { .. } | SpaceKind::FlatTorus { .. }) => {
                return Err(Error::InvalidArgument(format!("no spectral series configured for {}", space.label())))
            }
            (HeatMethod::DiscreteLaplacian(d), _) if d.space().id() != space.id() => {
                return Err(Error::SpaceMismatch(space.id(), d.space().id()))
            }
            _ => {}
        }
        Ok(Self { space, method, mass_tol: MASS_TOLERANCE })
    }

    /// Replace the renormalization budget (default 1e−6).
    pub fn with_mass_tolerance(mut self, tol: f64) -> Self {
        self.mass_tol = tol;
        self
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }
    pub fn method(&self) -> &HeatMethod {
        &self.method
    }

    /// Peak density scale used to floor relative tail checks.
    fn peak(&self, t: f64) -> f64 {
        match self.space.dim() {
            1 => (4.0 * PI * t).powf(-0.5),
            _ => 1.0 / (4.0 * PI * t),
        }
    }

    /// p_t(x, y) with respect to m.
    pub fn kernel(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        self.space.check(x)?;
        self.space.check(y)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("heat time t = {t}")));
        }
        if let HeatMethod::DiscreteLaplacian(d) = &self.method {
            let i = d.nearest(x);
            let j = d.nearest(y);
            let mu = DiscreteMeasure::cell_dirac(d.clone(), i)?;
            let w = discrete_laplacian_flow(d, t, &mu)?;
            return Ok(w.weights()[j] / d.cell_measures()[j]);
        }
        let (v, tail) = self.kernel_with_tail(t, x, y);
        let scale = v.max(TAIL_FLOOR * self.peak(t));
        if tail > 1e-8 * scale {
            return Err(Error::TruncationWarning { tail, value: v });
        }
        Ok(v)
    }

    /// Kernel value and an estimate of the neglected series tail.
    fn kernel_with_tail(&self, t: f64, x: &Point, y: &Point) -> (f64, f64) {
        let trunc = match self.method {
            HeatMethod::SpectralSeries { truncation } => truncation,
            _ => None,
        };
        let (v, tail) = match self.space.kind() {
            SpaceKind::Euclidean { n } => {
                let d = self.space.dist(x, y);
                ((4.0 * PI * t).powf(-(n as f64) / 2.0) * (-d * d / (4.0 * t)).exp(), 0.0)
            }
            SpaceKind::Gaussian { n, k } => (ou_kernel(n, k, t, x, y), 0.0),
            SpaceKind::FlatTorus { l1, l2 } => (torus_kernel(l1, l2, t, x, y), 0.0),
            SpaceKind::Sphere { radius } => sphere_kernel(radius, t, x, y, trunc),
            SpaceKind::Cone { alpha } => cone_kernel(alpha, t, x, y, trunc),
        };
        (if v < 0.0 { 0.0 } else { v }, tail)
    }

    fn kernel_unchecked(&self, t: f64, x: &Point, y: &Point) -> f64 {
        self.kernel_with_tail(t, x, y).0
    }

    /// Row-major matrix p_t(xᵢ, yⱼ), rows assembled in parallel.
    pub fn kernel_matrix(&self, t: f64, xs: &[Point], ys: &[Point]) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("heat time t = {t}")));
        }
        let rows: Vec<Vec<f64>> = xs.par_iter().map(|x| ys.iter().map(|y| self.kernel_unchecked(t, x, y)).collect()).collect();
        Ok(rows.concat())
    }

    /// P̂_tδ_x on `disc`, renormalized; the renormalization factor must lie
    /// within the mass budget of one.
    pub fn heat_row(&self, t: f64, x: &Point, disc: Arc<Discretization>) -> Result<DiscreteMeasure> {
        self.space.check(x)?;
        if disc.space().id() != self.space.id() {
            return Err(Error::SpaceMismatch(self.space.id(), disc.space().id()));
        }
        if let HeatMethod::DiscreteLaplacian(_) = self.method {
            let i = disc.nearest(x);
            return self.dual_flow(t, &DiscreteMeasure::cell_dirac(disc, i)?);
        }
        if let Some(w) = self.vertex_cell_masses(t, x, &disc) {
            return self.finish(disc, w);
        }
        let w: Vec<f64> = match self.polar_nodes(&disc) {
            Some(nodes) => nodes.par_iter().map(|cell| cell.iter().map(|(y, m)| self.kernel_unchecked(t, x, y) * m).sum()).collect(),
            None => disc
                .points()
                .par_iter()
                .zip(disc.cell_measures().par_iter())
                .map(|(y, m)| self.kernel_unchecked(t, x, y) * m)
                .collect(),
        };
        self.finish(disc, w)
    }

    /// Radial Gauss nodes (point, measure) for every cell of a polar cone
    /// grid. The midpoint rule in r carries an h²f(0)/24 end error at the
    /// vertex; angular sums are periodic and need no correction.
    fn polar_nodes(&self, disc: &Discretization) -> Option<Vec<[(Point, f64); 4]>> {
        let SpaceKind::Cone { .. } = self.space.kind() else { return None };
        let g = disc.grid()?;
        if !matches!(g.chart, GridChart::Canonical { .. }) {
            return None;
        }
        const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let (h, dphi) = (g.spacing[0], g.spacing[1]);
        disc.points()
            .iter()
            .map(|p| {
                let (r, phi) = (p.coords()[0], p.coords()[1]);
                let mut out = [(*p, 0.0); 4];
                for k in 0..4 {
                    let rq = r + 0.5 * h * X[k];
                    out[k] = (self.space.point(&[rq, phi]).ok()?, 0.5 * h * W[k] * rq * dphi);
                }
                Some(out)
            })
            .collect()
    }

    /// From the cone vertex on a polar grid the row is integrated over each
    /// cell exactly; the midpoint rule is off by O(h²/t) at r = 0.
    fn vertex_cell_masses(&self, t: f64, x: &Point, disc: &Discretization) -> Option<Vec<f64>> {
        let SpaceKind::Cone { alpha } = self.space.kind() else { return None };
        if !self.space.is_vertex(x) {
            return None;
        }
        let g = disc.grid()?;
        if !matches!(g.chart, GridChart::Canonical { .. }) {
            return None;
        }
        let (hr, dphi) = (0.5 * g.spacing[0], g.spacing[1]);
        Some(
            disc.points()
                .iter()
                .map(|p| {
                    let r = p.coords()[0];
                    let lo = (r - hr).max(0.0);
                    dphi / alpha * ((-lo * lo / (4.0 * t)).exp() - (-(r + hr) * (r + hr) / (4.0 * t)).exp())
                })
                .collect(),
        )
    }

    fn finish(&self, disc: Arc<Discretization>, w: Vec<f64>) -> Result<DiscreteMeasure> {
        let total: f64 = w.iter().sum();
        if !((total - 1.0).abs() <= self.mass_tol) {
            return Err(Error::TruncationError { factor: total });
        }
        DiscreteMeasure::new(disc, w)
    }

    /// P̂_tμ on μ's own discretization.
    pub fn dual_flow(&self, t: f64, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        let disc = mu.discretization().clone();
        self.dual_flow_onto(t, mu, disc)
    }

    /// P̂_tμ evaluated on the cells of `target`.
    pub fn dual_flow_onto(&self, t: f64, mu: &DiscreteMeasure, target: Arc<Discretization>) -> Result<DiscreteMeasure> {
        if mu.space().id() != self.space.id() {
            return Err(Error::SpaceMismatch(self.space.id(), mu.space().id()));
        }
        if target.space().id() != self.space.id() {
            return Err(Error::SpaceMismatch(self.space.id(), target.space().id()));
        }
        if t == 0.0 {
            return Ok(mu.clone());
        }
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("heat time t = {t}")));
        }
        if let HeatMethod::DiscreteLaplacian(d) = &self.method {
            if !Arc::ptr_eq(d, &target) || !Arc::ptr_eq(d, mu.discretization()) {
                return Err(Error::InvalidArgument("discrete Laplacian flow stays on its own grid".into()));
            }
            return discrete_laplacian_flow(d, t, mu);
        }
        let src: Vec<(Point, f64)> = mu
            .support()
            .into_iter()
            .map(|i| (mu.discretization().points()[i], mu.weights()[i]))
            .collect();
        let w: Vec<f64> = match self.sphere_table(t, &src, target.points()) {
            Some(table) => {
                let ex: Vec<([f64; 3], f64)> = src.iter().map(|(x, wi)| (sphere_unit(x), *wi)).collect();
                target
                    .points()
                    .par_iter()
                    .zip(target.cell_measures().par_iter())
                    .map(|(y, m)| {
                        let ey = sphere_unit(y);
                        ex.iter().map(|(e, wi)| wi * table.eval(chord_angle(e, &ey))).sum::<f64>() * m
                    })
                    .collect()
            }
            None => match self.polar_nodes(&target) {
                Some(nodes) => nodes
                    .par_iter()
                    .map(|cell| cell.iter().map(|(y, m)| src.iter().map(|(x, wi)| wi * self.kernel_unchecked(t, x, y)).sum::<f64>() * m).sum())
                    .collect(),
                None => target
                    .points()
                    .par_iter()
                    .zip(target.cell_measures().par_iter())
                    .map(|(y, m)| src.iter().map(|(x, wi)| wi * self.kernel_unchecked(t, x, y)).sum::<f64>() * m)
                    .collect(),
            },
        };
        self.finish(target, w)
    }

    /// Tabulated sphere series, used when the pair count dwarfs the table.
    fn sphere_table(&self, t: f64, src: &[(Point, f64)], ys: &[Point]) -> Option<SphereTable> {
        let SpaceKind::Sphere { radius } = self.space.kind() else { return None };
        if !matches!(self.method, HeatMethod::SpectralSeries { truncation: None }) {
            return None;
        }
        let ex: Vec<[f64; 3]> = src.iter().map(|(x, _)| sphere_unit(x)).collect();
        let theta_max = ys
            .par_iter()
            .map(|y| {
                let ey = sphere_unit(y);
                ex.iter().map(|e| chord_angle(e, &ey)).fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        let delta = SphereTable::step(radius, t);
        let nodes = (theta_max / delta).ceil() as usize + 3;
        if (src.len() * ys.len()) < 8 * nodes {
            return None;
        }
        Some(SphereTable::new(radius, t, nodes))
    }
}

/// Density of the Ornstein–Uhlenbeck law with respect to e^{−K|x|²/2}dx.
fn ou_kernel(n: usize, k: f64, t: f64, x: &Point, y: &Point) -> f64 {
    let (decay, var) = if k == 0.0 {
        (1.0, 2.0 * t)
    } else {
        ((-k * t).exp(), -(-2.0 * k * t).exp_m1() / k)
    };
    let xs = x.coords();
    let ys = y.coords();
    let mut q = 0.0;
    let mut f = 0.0;
    for a in 0..n {
        let d = ys[a] - decay * xs[a];
        q += d * d;
        f += ys[a] * ys[a];
    }
    let log = -(n as f64) / 2.0 * (2.0 * PI * var).ln() - q / (2.0 * var) + 0.5 * k * f;
    log.exp()
}

fn torus_kernel(l1: f64, l2: f64, t: f64, x: &Point, y: &Point) -> f64 {
    let (a, b) = (x.coords(), y.coords());
    let axis = |d: f64, l: f64| {
        let d = d - l * (d / l).round();
        let r = (6.0 * t.sqrt() / l).ceil() as i64 + 2;
        let mut s = 0.0;
        for k in -r..=r {
            let e = d + k as f64 * l;
            s += (-e * e / (4.0 * t)).exp();
        }
        s / (4.0 * PI * t).sqrt()
    };
    axis(b[0] - a[0], l1) * axis(b[1] - a[1], l2)
}

/// Legendre series; returns (value, last-term magnitude).
fn sphere_kernel(radius: f64, t: f64, x: &Point, y: &Point, trunc: Option<usize>) -> (f64, f64) {
    let s = t / (radius * radius);
    let n = trunc.unwrap_or_else(|| 64usize.max((8.0 / s.sqrt()).ceil() as usize));
    let ex = sphere_unit(x);
    let ey = sphere_unit(y);
    let c = (ex[0] * ey[0] + ex[1] * ey[1] + ex[2] * ey[2]).clamp(-1.0, 1.0);
    let coeffs: Vec<f64> = (0..=n).map(|l| (2 * l + 1) as f64 / (4.0 * PI) * (-((l * (l + 1)) as f64) * s).exp()).collect();
    let v = legendre_sum(&coeffs, c) / (radius * radius);
    (v, coeffs[n] / (radius * radius))
}

/// p_t as a function of the angle on a uniform grid of angles; cubic
/// interpolation at spacing √(2t)/256 (in units of the radius).
struct SphereTable {
    delta: f64,
    values: Vec<f64>,
}

impl SphereTable {
    fn step(radius: f64, t: f64) -> f64 {
        (2.0 * t / (radius * radius)).sqrt() / 256.0
    }

    fn new(radius: f64, t: f64, nodes: usize) -> Self {
        let s = t / (radius * radius);
        let n = 64usize.max((8.0 / s.sqrt()).ceil() as usize);
        let coeffs: Vec<f64> = (0..=n).map(|l| (2 * l + 1) as f64 / (4.0 * PI) * (-((l * (l + 1)) as f64) * s).exp()).collect();
        let delta = Self::step(radius, t);
        let values = (0..nodes)
            .into_par_iter()
            .map(|j| legendre_sum(&coeffs, (j as f64 * delta).min(PI).cos()) / (radius * radius))
            .collect();
        Self { delta, values }
    }

    fn eval(&self, theta: f64) -> f64 {
        let u = theta / self.delta;
        let i = (u.floor() as usize).min(self.values.len() - 3);
        let f = u - i as f64;
        // Even in θ: node −1 mirrors node 1.
        let at = |k: isize| self.values[k.unsigned_abs()];
        let k = i as isize;
        let (a, b, c, d) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        let v = -f * (f - 1.0) * (f - 2.0) / 6.0 * a + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * b
            - (f + 1.0) * f * (f - 2.0) / 2.0 * c
            + (f + 1.0) * f * (f - 1.0) / 6.0 * d;
        v.max(0.0)
    }
}

/// Angle between unit vectors, accurate for nearby points.
fn chord_angle(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let c = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    2.0 * (0.5 * c).min(1.0).asin()
}

fn sphere_unit(p: &Point) -> [f64; 3] {
    let c = p.coords();
    let (st, ct) = c[0].sin_cos();
    let (sp, cp) = c[1].sin_cos();
    [st * cp, st * sp, ct]
}

/// Carslaw series on the cone of total angle α; returns (value, tail estimate).
fn cone_kernel(alpha: f64, t: f64, x: &Point, y: &Point, trunc: Option<usize>) -> (f64, f64) {
    let (r, phi) = (x.coords()[0], x.coords()[1]);
    let (s, psi) = (y.coords()[0], y.coords()[1]);
    let pre = 1.0 / (2.0 * alpha * t);
    if r == 0.0 || s == 0.0 {
        let rr = r.max(s);
        return (pre * (-rr * rr / (4.0 * t)).exp(), 0.0);
    }
    let dphi = psi - phi;
    let n = (2.0 * PI / alpha).round();
    if trunc.is_none() && (n * alpha - 2.0 * PI).abs() < 1e-12 {
        // α = 2π/n: the cone is the plane mod a rotation group, n images exactly.
        let g = 1.0 / (4.0 * PI * t);
        let v = (0..n as usize)
            .map(|k| (-(r * r + s * s - 2.0 * r * s * (dphi + k as f64 * alpha).cos()) / (4.0 * t)).exp())
            .sum::<f64>();
        return (g * v, 0.0);
    }
    if trunc.is_none() && (r + s) * (r + s) / (4.0 * t) > 700.0 {
        // Diffracted part is below e^{−700}: only geometric images remain.
        return (cone_images(alpha, t, r, s, dphi), 0.0);
    }
    let z = r * s / (2.0 * t);
    let gauss = (-(r - s) * (r - s) / (4.0 * t)).exp();
    let omega = 2.0 * PI / alpha;
    let j_cap = trunc.unwrap_or_else(|| ((2.0 * t).powf(-0.5) * r.max(s) * 4.0 / alpha).ceil() as usize + 32);
    let i0 = bessel_i_scaled(0.0, z);
    let mut sum = i0;
    let mut last = i0;
    let mut j = 1usize;
    loop {
        if j > j_cap && trunc.is_some() {
            break;
        }
        let nu = omega * j as f64;
        let term = bessel_i_scaled(nu, z);
        sum += 2.0 * (nu * dphi).cos() * term;
        last = 2.0 * term;
        if trunc.is_none() && nu > z && term < 1e-18 * i0 {
            break;
        }
        if trunc.is_none() && j > 4 * j_cap {
            break;
        }
        j += 1;
    }
    (pre * gauss * sum, pre * gauss * last)
}

/// Sum of planar Gaussians over the unfoldings of the angle difference that
/// stay below π.
fn cone_images(alpha: f64, t: f64, r: f64, s: f64, dphi: f64) -> f64 {
    let g = 1.0 / (4.0 * PI * t);
    let base = dphi - alpha * (dphi / alpha).round();
    let kmax = (PI / alpha).ceil() as i64 + 1;
    let mut v = 0.0;
    for k in -kmax..=kmax {
        let th = base + k as f64 * alpha;
        if th.abs() < PI {
            let d2 = r * r + s * s - 2.0 * r * s * th.cos();
            v += g * (-d2 / (4.0 * t)).exp();
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::Extent;

    #[test]
    fn sphere_table_matches_series() {
        let t = 1e-3;
        let table = SphereTable::new(1.0, t, 256 * 12);
        let sigma = (2.0 * t).sqrt();
        for k in 0..200 {
            let theta = 8.0 * sigma * k as f64 / 200.0 + 1e-4;
            let c = [theta.cos(), 0.0, 0.0];
            let exact = legendre_sum(
                &(0..=(8.0 / t.sqrt()).ceil() as usize)
                    .map(|l| (2 * l + 1) as f64 / (4.0 * PI) * (-((l * (l + 1)) as f64) * t).exp())
                    .collect::<Vec<_>>(),
                c[0],
            );
            let peak = 1.0 / (4.0 * PI * t);
            assert!((table.eval(theta) - exact).abs() <= 1e-8 * exact.max(1e-6 * peak), "{theta}");
        }
    }

    #[test]
    fn cone_vertex_row_and_small_radius_limit() {
        for alpha in [PI / 2.0, PI, 1.5 * PI] {
            let c = ModelSpace::cone(alpha).unwrap();
            let h = HeatKernelEvaluator::new(c);
            let t = 0.05;
            let o = c.vertex().unwrap();
            let y = c.point(&[0.4, 0.1]).unwrap();
            let v = h.kernel(t, &o, &y).unwrap();
            let exact = (-0.16 / (4.0 * t)).exp() / (2.0 * alpha * t);
            assert!((v - exact).abs() < 1e-14 * exact);
            let x = c.point(&[1e-7, 0.3]).unwrap();
            let w = h.kernel(t, &x, &y).unwrap();
            assert!((w - exact).abs() < 1e-8 * exact, "{w} vs {exact}");
        }
    }

    #[test]
    fn cone_pi_two_matches_quarter_plane_images() {
        // On the cone of angle π/2 with 2π/α = 4 even, the kernel is the sum of
        // the four rotated images.
        let c = ModelSpace::cone(PI / 2.0).unwrap();
        let h = HeatKernelEvaluator::new(c);
        let t = 0.1;
        let x = c.point(&[0.5, 0.2]).unwrap();
        let y = c.point(&[0.7, -0.5]).unwrap();
        let mut img = 0.0;
        for k in 0..4 {
            let th = -0.7 + k as f64 * PI / 2.0;
            let d2 = 0.25 + 0.49 - 2.0 * 0.35 * th.cos();
            img += (-d2 / (4.0 * t)).exp() / (4.0 * PI * t);
        }
        let v = h.kernel(t, &x, &y).unwrap();
        assert!((v - img).abs() < 1e-12 * img, "{v} vs {img}");
        let (series, _) = cone_kernel(PI / 2.0, t, &x, &y, Some(200));
        assert!((series - img).abs() < 1e-10 * img, "{series} vs {img}");
    }

    #[test]
    fn polar_cells_near_vertex_keep_mass() {
        // σ twice the radial spacing: the midpoint rule alone loses ~0.5%.
        let c = ModelSpace::cone(PI).unwrap();
        let t = 2e-4;
        let d = Arc::new(Discretization::ball_patch(&c, &c.vertex().unwrap(), 0.0, 0.15, 0.01, 20_000).unwrap());
        let h = HeatKernelEvaluator::new(c).with_mass_tolerance(1e-5);
        let x = c.point(&[0.004, 0.3]).unwrap();
        let mu = h.heat_row(t, &x, d).unwrap();
        assert!(mu.weights().iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn cone_fast_path_agrees_with_series() {
        let alpha = PI;
        let t = 1e-3;
        let x = [0.6, 0.1];
        let y = [0.62, 0.15];
        let c = ModelSpace::cone(alpha).unwrap();
        let (px, py) = (c.point(&x).unwrap(), c.point(&y).unwrap());
        let (series, _) = cone_kernel(alpha, t, &px, &py, Some(400));
        let fast = cone_images(alpha, t, x[0], y[0], y[1] - x[1]);
        assert!((series - fast).abs() < 1e-10 * fast, "{series} vs {fast}");
    }

    #[test]
    fn symmetric_kernels() {
        let spaces = [
            ModelSpace::euclidean(2).unwrap(),
            ModelSpace::gaussian(2, 0.7).unwrap(),
            ModelSpace::flat_torus(1.0, 1.3).unwrap(),
            ModelSpace::cone(1.2).unwrap(),
            ModelSpace::sphere(1.0).unwrap(),
        ];
        for s in spaces {
            let h = HeatKernelEvaluator::new(s);
            let x = s.point(&[0.4, 0.3]).unwrap();
            let y = s.point(&[0.9, -0.2]).unwrap();
            let a = h.kernel(0.07, &x, &y).unwrap();
            let b = h.kernel(0.07, &y, &x).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300), "{}: {a} {b}", s.label());
        }
    }

    #[test]
    fn euclidean_second_moment() {
        let e = ModelSpace::euclidean(1).unwrap();
        let d = Arc::new(Discretization::discretize(&e, 0.005, Extent::Radius(2.0)).unwrap());
        let h = HeatKernelEvaluator::new(e);
        let o = d.points()[d.nearest(&e.point(&[0.0]).unwrap())];
        let c = o.coords()[0];
        let mu = h.heat_row(0.05, &o, d).unwrap();
        let m2 = mu.integrate(|p| (p.coords()[0] - c).powi(2));
        assert!((m2 - 0.1).abs() < 1e-3, "{m2}");
    }

    #[test]
    fn sphere_mass_conservation() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let d = Arc::new(Discretization::discretize(&s, 0.04, Extent::Full).unwrap());
        let h = HeatKernelEvaluator::new(s);
        let x = s.point(&[1.0, 0.5]).unwrap();
        let total: f64 = d.points().iter().zip(d.cell_measures()).map(|(y, m)| h.kernel(0.1, &x, y).unwrap() * m).sum();
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }
}
