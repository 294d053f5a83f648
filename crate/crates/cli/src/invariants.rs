//! Transport and heat invariant suites. Each returns (worst observed
//! violation, limit).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci_lab::heat::HeatKernelEvaluator;
use ricci_lab::spaces::{Discretization, Extent, ModelSpace, Point};
use ricci_lab::transport::{solve_entropic, solve_exact, DiscreteMeasure, EntropicConfig};
use ricci_lab::Result;
use std::sync::Arc;

fn cloud(rng: &mut ChaCha8Rng, space: &ModelSpace, n: usize) -> Result<Arc<Discretization>> {
    let pts = (0..n)
        .map(|_| space.point(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
        .collect::<Result<Vec<Point>>>()?;
    Ok(Arc::new(Discretization::from_cells(*space, pts, vec![1.0; n], 0.0)?))
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.1..1.0)).collect()
}

/// Relative cost gap between the annealed Sinkhorn plan and the exact plan on
/// random 64-point instances in the plane.
pub fn sinkhorn_gap(instances: usize, seed: u64) -> Result<(f64, f64)> {
    let e = ModelSpace::euclidean(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let mu = DiscreteMeasure::new(cloud(&mut rng, &e, 64)?, weights(&mut rng, 64))?;
        let nu = DiscreteMeasure::new(cloud(&mut rng, &e, 64)?, weights(&mut rng, 64))?;
        let exact = solve_exact(&mu, &nu, 2.0)?;
        let ent = solve_entropic(&mu, &nu, 2.0, &EntropicConfig::default())?;
        worst = worst.max((ent.total_cost - exact.total_cost).abs() / exact.total_cost);
    }
    Ok((worst, 1e-3))
}

/// Relative gap between primal cost and the dual objective of exact plans.
pub fn duality_gap(instances: usize, seed: u64) -> Result<(f64, f64)> {
    let e = ModelSpace::euclidean(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let (n, m) = (16 + 3 * i % 40, 20 + 7 * i % 30);
        let mu = DiscreteMeasure::new(cloud(&mut rng, &e, n)?, weights(&mut rng, n))?;
        let nu = DiscreteMeasure::new(cloud(&mut rng, &e, m)?, weights(&mut rng, m))?;
        for q in [1.0, 2.0] {
            let plan = solve_exact(&mu, &nu, q)?;
            let dual = plan.dual_objective().unwrap_or(f64::NAN);
            worst = worst.max((dual - plan.total_cost).abs() / plan.total_cost);
        }
    }
    Ok((worst, 1e-9))
}

/// Identity, symmetry and triangle inequality of W_2 on shared supports.
pub fn metric_axioms(instances: usize, seed: u64) -> Result<(f64, f64)> {
    let e = ModelSpace::euclidean(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let disc = cloud(&mut rng, &e, 24)?;
        let m = (0..3)
            .map(|_| DiscreteMeasure::new(disc.clone(), weights(&mut rng, 24)))
            .collect::<Result<Vec<_>>>()?;
        let w = |a: usize, b: usize| solve_exact(&m[a], &m[b], 2.0).map(|p| p.wasserstein());
        let (ab, ba, bc, ac, aa) = (w(0, 1)?, w(1, 0)?, w(1, 2)?, w(0, 2)?, w(0, 0)?);
        worst = worst.max(aa).max((ab - ba).abs()).max(ac - ab - bc);
    }
    Ok((worst, 1e-9))
}

/// Chapman–Kolmogorov (TV ≤ 1%), vertex limit of the cone series (1e−8),
/// kernel mass (1e−10) and Euclidean second moment 2t per axis (1e−3), each
/// normalized by its limit.
pub fn heat_core() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    let s = ModelSpace::sphere(1.0)?;
    let g = ModelSpace::gaussian(2, 0.7)?;
    for (space, disc, x) in [
        (s, Discretization::discretize(&s, 0.05, Extent::Full)?, s.point(&[1.0, 0.5])?),
        (g, Discretization::discretize(&g, 0.06, Extent::Radius(3.0))?, g.point(&[0.3, -0.2])?),
    ] {
        let disc = Arc::new(disc);
        let h = HeatKernelEvaluator::new(space).with_mass_tolerance(1e-3);
        let direct = h.heat_row(0.2, &x, disc.clone())?;
        let twice = h.dual_flow(0.1, &h.heat_row(0.1, &x, disc)?)?;
        worst = worst.max(direct.total_variation(&twice)? / 0.01);
    }
    let c = ModelSpace::cone(1.2)?;
    let t: f64 = 0.05;
    let y = c.point(&[0.4, 0.1])?;
    let closed = (-0.16 / (4.0 * t)).exp() / (2.0 * 1.2 * t);
    let near = HeatKernelEvaluator::new(c).kernel(t, &c.point(&[1e-9, 0.7])?, &y)?;
    worst = worst.max((near - closed).abs() / closed / 1e-8);
    let e = ModelSpace::euclidean(2)?;
    let disc = Discretization::discretize(&e, 0.03, Extent::Radius(2.0))?;
    let he = HeatKernelEvaluator::new(e);
    let o = e.point(&[0.01, 0.01])?;
    let t = 0.03;
    let (mut mass, mut m2) = (0.0, 0.0);
    for (p, m) in disc.points().iter().zip(disc.cell_measures()) {
        let k = he.kernel(t, &o, p)? * m;
        mass += k;
        m2 += k * e.dist(&o, p).powi(2);
    }
    worst = worst.max((mass - 1.0).abs() / 1e-10).max((m2 / 2.0 - 2.0 * t).abs() / 1e-3);
    Ok((worst, 1.0))
}
