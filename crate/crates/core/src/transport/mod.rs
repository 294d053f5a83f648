//! Discrete optimal transport: exact and entropic W_q, dual potentials,
//! displacement interpolation and the p-action of curves of measures.

mod lagrangian;
mod simplex;
mod sinkhorn;

pub use lagrangian::LagrangianFlow;
pub use sinkhorn::EntropicConfig;

use crate::error::{Error, Result};
use crate::spaces::{Discretization, ModelSpace, Point, SpaceKind};
use std::sync::Arc;

/// Default cap on the support size of each side of an exact solve.
pub const EXACT_SUPPORT_CAP: usize = 2000;

/// Finitely supported probability measure on a discretization.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    disc: Arc<Discretization>,
    weights: Vec<f64>,
    atomic: bool,
}

impl DiscreteMeasure {
    /// Weights are normalized to total mass one.
    pub fn new(disc: Arc<Discretization>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != disc.len() {
            return Err(Error::InvalidArgument(format!("{} weights for {} cells", weights.len(), disc.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("measure has no mass".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { disc, weights, atomic: false })
    }

    /// Measure with density `u` with respect to the cell measures.
    pub fn from_density(disc: Arc<Discretization>, u: impl Fn(&Point) -> f64) -> Result<Self> {
        let w = disc.points().iter().zip(disc.cell_measures()).map(|(p, m)| u(p) * m).collect();
        Self::new(disc, w)
    }

    /// Normalized restriction of m to the cells satisfying `inside`.
    pub fn uniform(disc: Arc<Discretization>, inside: impl Fn(&Point) -> bool) -> Result<Self> {
        Self::from_density(disc, |p| if inside(p) { 1.0 } else { 0.0 })
    }

    /// All mass on one cell (finite entropy −log m₀).
    pub fn cell_dirac(disc: Arc<Discretization>, cell: usize) -> Result<Self> {
        let mut w = vec![0.0; disc.len()];
        *w.get_mut(cell).ok_or_else(|| Error::InvalidArgument(format!("cell {cell} out of range")))? = 1.0;
        Self::new(disc, w)
    }

    /// A true Dirac mass (infinite entropy), carried by one cell.
    pub fn atomic_dirac(disc: Arc<Discretization>, cell: usize) -> Result<Self> {
        let mut d = Self::cell_dirac(disc, cell)?;
        d.atomic = true;
        Ok(d)
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }
    pub fn space(&self) -> &ModelSpace {
        self.disc.space()
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn is_atomic(&self) -> bool {
        self.atomic
    }
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// Drop the lightest cells carrying at most `tail` of the mass, renormalize.
    pub fn trimmed(&self, tail: f64) -> Self {
        if tail <= 0.0 {
            return self.clone();
        }
        let mut order: Vec<usize> = self.support();
        order.sort_by(|&i, &j| self.weights[i].partial_cmp(&self.weights[j]).unwrap().then(i.cmp(&j)));
        let mut w = self.weights.clone();
        let mut acc = 0.0;
        for &i in &order[..order.len().saturating_sub(1)] {
            if acc + w[i] > tail {
                break;
            }
            acc += w[i];
            w[i] = 0.0;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        Self { disc: self.disc.clone(), weights: w, atomic: self.atomic }
    }

    /// ∫ g dμ.
    pub fn integrate(&self, g: impl Fn(&Point) -> f64) -> f64 {
        self.weights
            .iter()
            .zip(self.disc.points())
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, p)| w * g(p))
            .sum()
    }

    /// Total-variation distance ½Σ|μᵢ − νᵢ| (same discretization).
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        if !Arc::ptr_eq(&self.disc, &other.disc) && self.disc.len() != other.disc.len() {
            return Err(Error::InvalidArgument("total variation needs a shared discretization".into()));
        }
        Ok(0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

/// Optimal (or entropic) coupling between two discrete measures.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub source: DiscreteMeasure,
    pub target: DiscreteMeasure,
    /// (source cell, target cell, mass).
    pub mass: Vec<(usize, usize, f64)>,
    pub q: f64,
    pub total_cost: f64,
    /// Kantorovich potentials on the supports (φ over `source_support`, ψ over
    /// `target_support`); absent for entropic plans.
    pub potentials: Option<(Vec<f64>, Vec<f64>)>,
    pub source_support: Vec<usize>,
    pub target_support: Vec<usize>,
}

impl TransportPlan {
    pub fn wasserstein(&self) -> f64 {
        self.total_cost.max(0.0).powf(1.0 / self.q)
    }

    /// Σφᵢμᵢ + Σψⱼνⱼ (exact plans).
    pub fn dual_objective(&self) -> Option<f64> {
        let (phi, psi) = self.potentials.as_ref()?;
        let s: f64 = self.source_support.iter().zip(phi).map(|(&i, p)| self.source.weights[i] * p).sum();
        let t: f64 = self.target_support.iter().zip(psi).map(|(&j, p)| self.target.weights[j] * p).sum();
        Some(s + t)
    }

    /// Row and column sums of the plan.
    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut r = vec![0.0; self.source.disc.len()];
        let mut c = vec![0.0; self.target.disc.len()];
        for &(i, j, m) in &self.mass {
            r[i] += m;
            c[j] += m;
        }
        (r, c)
    }

    /// Sparse triplet CSV (i,j,mass) for debugging.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,mass\n");
        for &(i, j, m) in &self.mass {
            s.push_str(&format!("{i},{j},{m:e}\n"));
        }
        s
    }
}

fn same_space(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<ModelSpace> {
    let a = *mu.space();
    let b = nu.space();
    if a.id() != b.id() {
        return Err(Error::SpaceMismatch(a.id(), b.id()));
    }
    Ok(a)
}

/// Dense matrix of d(xᵢ, yⱼ)^q, row-major.
pub fn cost_matrix(space: &ModelSpace, xs: &[Point], ys: &[Point], q: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(xs.len() * ys.len());
    let pow = |d: f64| if q == 2.0 { d * d } else if q == 1.0 { d } else { d.powf(q) };
    if let SpaceKind::Sphere { radius } = space.kind() {
        let ex: Vec<[f64; 3]> = xs.iter().map(|p| space.sphere_embed(p)).collect();
        let ey: Vec<[f64; 3]> = ys.iter().map(|p| space.sphere_embed(p)).collect();
        for a in &ex {
            for b in &ey {
                let cr = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                let cn = (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt();
                let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                c.push(pow(radius * cn.atan2(d)));
            }
        }
    } else {
        for x in xs {
            for y in ys {
                c.push(pow(space.dist(x, y)));
            }
        }
    }
    c
}

fn is_line(space: &ModelSpace) -> bool {
    matches!(space.kind(), SpaceKind::Euclidean { n: 1 } | SpaceKind::Gaussian { n: 1, .. })
}

/// Exact optimal plan for cost d^q.
pub fn solve_exact(source: &DiscreteMeasure, target: &DiscreteMeasure, q: f64) -> Result<TransportPlan> {
    solve_exact_capped(source, target, q, EXACT_SUPPORT_CAP)
}

const LINE_CAP_FACTOR: usize = 16;

pub fn solve_exact_capped(source: &DiscreteMeasure, target: &DiscreteMeasure, q: f64, cap: usize) -> Result<TransportPlan> {
    let space = same_space(source, target)?;
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("cost power q = {q} (need 1 ≤ q < ∞)")));
    }
    let ss = source.support();
    let ts = target.support();
    // The monotone solver on a line costs O(n log n); its cap is looser.
    let cap = if is_line(&space) { cap.saturating_mul(LINE_CAP_FACTOR) } else { cap };
    for (len, what) in [(ss.len(), "source support"), (ts.len(), "target support")] {
        if len > cap {
            return Err(Error::ResourceLimit { what, requested: len, cap });
        }
    }
    let a: Vec<f64> = ss.iter().map(|&i| source.weights[i]).collect();
    let b: Vec<f64> = ts.iter().map(|&j| target.weights[j]).collect();
    let xs: Vec<Point> = ss.iter().map(|&i| source.disc.points()[i]).collect();
    let ys: Vec<Point> = ts.iter().map(|&j| target.disc.points()[j]).collect();

    let (flows, u, v, cost) = if is_line(&space) {
        solve_line(&xs, &a, &ys, &b, q)
    } else {
        let c = cost_matrix(&space, &xs, &ys, q);
        let s = simplex::network_simplex(&c, xs.len(), ys.len(), &a, &b)?;
        (s.flows, s.u, s.v, s.cost)
    };
    let mass = flows.into_iter().map(|(i, j, m)| (ss[i], ts[j], m)).collect();
    Ok(TransportPlan {
        source: source.clone(),
        target: target.clone(),
        mass,
        q,
        total_cost: cost,
        potentials: Some((u, v)),
        source_support: ss,
        target_support: ts,
    })
}

/// Monotone rearrangement on the line (optimal for every convex cost |x−y|^q,
/// q ≥ 1), with dual potentials read off the north-west-corner staircase.
fn solve_line(xs: &[Point], a: &[f64], ys: &[Point], b: &[f64], q: f64) -> (Vec<(usize, usize, f64)>, Vec<f64>, Vec<f64>, f64) {
    let n = xs.len();
    let m = ys.len();
    let mut si: Vec<usize> = (0..n).collect();
    let mut sj: Vec<usize> = (0..m).collect();
    let xv = |i: usize| xs[i].raw()[0];
    let yv = |j: usize| ys[j].raw()[0];
    si.sort_by(|&p, &r| xv(p).partial_cmp(&xv(r)).unwrap());
    sj.sort_by(|&p, &r| yv(p).partial_cmp(&yv(r)).unwrap());
    let c = |i: usize, j: usize| {
        let d = (xv(i) - yv(j)).abs();
        if q == 2.0 {
            d * d
        } else {
            d.powf(q)
        }
    };
    let mut arcs = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0usize, 0usize);
    let mut ra = a[si[0]];
    let mut rb = b[sj[0]];
    loop {
        arcs.push((si[i], sj[j], ra.min(rb)));
        if i == n - 1 && j == m - 1 {
            break;
        }
        let adv_i = if i == n - 1 {
            false
        } else if j == m - 1 {
            true
        } else {
            ra <= rb
        };
        if adv_i {
            rb = (rb - ra).max(0.0);
            i += 1;
            ra = a[si[i]];
        } else {
            ra = (ra - rb).max(0.0);
            j += 1;
            rb = b[sj[j]];
        }
    }
    let mut u = vec![f64::NAN; n];
    let mut v = vec![f64::NAN; m];
    u[arcs[0].0] = 0.0;
    for &(i, j, _) in &arcs {
        if v[j].is_nan() {
            v[j] = c(i, j) - u[i];
        } else if u[i].is_nan() {
            u[i] = c(i, j) - v[j];
        }
    }
    let cost = arcs.iter().map(|&(i, j, w)| w * c(i, j)).sum();
    let flows = arcs.into_iter().filter(|a| a.2 > 0.0).collect();
    (flows, u, v, cost)
}

/// Entropic approximation of the optimal plan (potentials absent).
pub fn solve_entropic(source: &DiscreteMeasure, target: &DiscreteMeasure, q: f64, cfg: &EntropicConfig) -> Result<TransportPlan> {
    let space = same_space(source, target)?;
    let ss = source.support();
    let ts = target.support();
    let a: Vec<f64> = ss.iter().map(|&i| source.weights[i]).collect();
    let b: Vec<f64> = ts.iter().map(|&j| target.weights[j]).collect();
    let xs: Vec<Point> = ss.iter().map(|&i| source.disc.points()[i]).collect();
    let ys: Vec<Point> = ts.iter().map(|&j| target.disc.points()[j]).collect();
    let c = cost_matrix(&space, &xs, &ys, q);
    let sol = sinkhorn::sinkhorn(&c, xs.len(), ys.len(), &a, &b, cfg)?;
    let m = ys.len();
    let mut mass = Vec::new();
    let mut total = 0.0;
    for (k, &p) in sol.plan.iter().enumerate() {
        total += p * c[k];
        if p > 1e-300 {
            mass.push((ss[k / m], ts[k % m], p));
        }
    }
    Ok(TransportPlan {
        source: source.clone(),
        target: target.clone(),
        mass,
        q,
        total_cost: total,
        potentials: None,
        source_support: ss,
        target_support: ts,
    })
}

/// W_q between two measures (exact solver).
pub fn wasserstein(source: &DiscreteMeasure, target: &DiscreteMeasure, q: f64) -> Result<f64> {
    Ok(solve_exact(source, target, q)?.wasserstein())
}

/// Displacement interpolation snapped to the source discretization.
pub fn displacement_interpolate(plan: &TransportPlan, a: f64) -> Result<DiscreteMeasure> {
    let disc = plan.source.disc.clone();
    displacement_interpolate_on(plan, a, disc)
}

/// Displacement interpolation: every plan atom rides its geodesic to
/// parameter `a` and is snapped to the nearest cell of `disc` (ties to the
/// lowest index). Endpoints return the plan marginals exactly.
pub fn displacement_interpolate_on(plan: &TransportPlan, a: f64, disc: Arc<Discretization>) -> Result<DiscreteMeasure> {
    if plan.q != 2.0 {
        return Err(Error::InvalidArgument("displacement interpolation needs a q = 2 plan".into()));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("interpolation parameter {a}")));
    }
    if a == 0.0 {
        return Ok(plan.source.clone());
    }
    if a == 1.0 {
        return Ok(plan.target.clone());
    }
    let space = *plan.source.space();
    if disc.space().id() != space.id() {
        return Err(Error::SpaceMismatch(space.id(), disc.space().id()));
    }
    let mut w = vec![0.0; disc.len()];
    for &(i, j, m) in &plan.mass {
        let x = plan.source.disc.points()[i];
        let y = plan.target.disc.points()[j];
        let z = space.geodesic_point(&x, &y, a)?;
        w[disc.nearest(&z)] += m;
    }
    DiscreteMeasure::new(disc, w)
}

/// Σ W_q(μ^{aᵢ₋₁}, μ^{aᵢ})^p / |aᵢ − aᵢ₋₁|^{p−1} over the given partition.
pub fn action_p(curve: &[(f64, DiscreteMeasure)], p: f64, q: f64) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::InvalidArgument("action needs at least two samples".into()));
    }
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidArgument("curve parameters must increase".into()));
    }
    let mut total = 0.0;
    for w in curve.windows(2) {
        let d = wasserstein(&w[0].1, &w[1].1, q)?;
        let da = w[1].0 - w[0].0;
        total += d.powf(p) / da.powf(p - 1.0);
    }
    Ok(total)
}

/// How interpolated measures are represented along a Wasserstein geodesic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    /// Atoms snapped to the source cells.
    Snapped,
    /// Cells carried along the barycentric transport map; cell measures
    /// follow the Jacobian of the map.
    Lagrangian,
}

#[derive(Clone, Debug)]
pub struct WassersteinGeodesic {
    pub plan: TransportPlan,
    pub rule: Interpolation,
}

impl WassersteinGeodesic {
    pub fn new(plan: TransportPlan, rule: Interpolation) -> Result<Self> {
        if plan.q != 2.0 {
            return Err(Error::InvalidArgument("Wasserstein geodesics need a q = 2 plan".into()));
        }
        Ok(Self { plan, rule })
    }

    /// Exact plan between the two measures, then the geodesic.
    pub fn between(mu: &DiscreteMeasure, nu: &DiscreteMeasure, rule: Interpolation) -> Result<Self> {
        Self::new(solve_exact(mu, nu, 2.0)?, rule)
    }

    pub fn space(&self) -> &ModelSpace {
        self.plan.source.space()
    }

    pub fn snapped(&self, a: f64) -> Result<DiscreteMeasure> {
        displacement_interpolate(&self.plan, a)
    }

    pub fn lagrangian(&self) -> Result<LagrangianFlow> {
        LagrangianFlow::from_plan(&self.plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::Extent;

    fn line_measure(xs: &[f64], ws: &[f64]) -> DiscreteMeasure {
        let e = ModelSpace::euclidean(1).unwrap();
        let pts = xs.iter().map(|x| e.point(&[*x]).unwrap()).collect();
        let d = Discretization::from_cells(e, pts, vec![1.0; xs.len()], 0.0).unwrap();
        DiscreteMeasure::new(Arc::new(d), ws.to_vec()).unwrap()
    }

    #[test]
    fn two_point_monotone_rearrangement() {
        let mu = line_measure(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = line_measure(&[0.5, 1.5], &[0.5, 0.5]);
        let p = solve_exact(&mu, &nu, 2.0).unwrap();
        assert!((p.total_cost - 0.25).abs() < 1e-15);
        let mid = displacement_interpolate_on(&p, 0.5, Arc::new(Discretization::from_cells(
            *mu.space(),
            [0.0, 0.25, 0.5, 1.0, 1.25, 1.5].iter().map(|x| mu.space().point(&[*x]).unwrap()).collect(),
            vec![1.0; 6],
            0.0,
        ).unwrap())).unwrap();
        assert_eq!(mid.weights(), &[0.0, 0.5, 0.0, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn dirac_to_dirac() {
        let mu = line_measure(&[0.0], &[1.0]);
        let nu = line_measure(&[1.0], &[1.0]);
        assert_eq!(wasserstein(&mu, &nu, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn identical_measures_cost_zero() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let d = Arc::new(Discretization::discretize(&s, 0.5, Extent::Full).unwrap());
        let mu = DiscreteMeasure::from_density(d.clone(), |p| 1.0 + p.raw()[0]).unwrap();
        let p = solve_exact(&mu, &mu, 2.0).unwrap();
        assert!(p.total_cost.abs() < 1e-14);
        assert!(p.mass.iter().all(|&(i, j, _)| i == j));
    }
}
