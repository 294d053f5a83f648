//! Acceptance criteria AC1–AC10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci_lab::estimators::{
    action_decay_estimate, cone_coefficient_fit, contraction_check, eta_estimate, robust_family, sandwich_check,
    speed_decay_estimate, theta_estimate, theta_flat_estimate, theta_star_estimate, EstimatorConfig, TLadder,
};
use ricci_lab::heat::HeatKernelEvaluator;
use ricci_lab::spaces::{Discretization, Extent, ModelSpace, Point};
use ricci_lab::transport::{solve_entropic, solve_exact, DiscreteMeasure, EntropicConfig};
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err(e: ricci_lab::Error) -> String {
    format!("error: {e}")
}

fn gauss_pair(k: f64) -> (ModelSpace, Point, Point) {
    let s = ModelSpace::gaussian(1, k).unwrap();
    (s, s.point(&[-0.5]).unwrap(), s.point(&[0.5]).unwrap())
}

/// Two points on the unit sphere at distance d, symmetric about the equator.
fn sphere_pair(d: f64) -> (ModelSpace, Point, Point) {
    let s = ModelSpace::sphere(1.0).unwrap();
    (s, s.point(&[PI / 2.0 - d / 2.0, 0.3]).unwrap(), s.point(&[PI / 2.0 + d / 2.0, 0.3]).unwrap())
}

fn ac1(cfg: &EstimatorConfig) -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for alpha in [PI / 2.0, PI, 1.5 * PI] {
        let f = cone_coefficient_fit(alpha, 1.0, None, cfg).map_err(err)?;
        ok &= f.relative_error() <= 0.05;
        lines.push(format!("α={alpha:.4}: c={:.5} ref={:.5}", f.c_fit, f.c_theory));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 60.0;
    ensure(ok, format!("{} ({secs:.1} s)", lines.join(", ")))
}

fn ac2(cfg: &EstimatorConfig) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in [-0.5, 1.0] {
        let (s, x, y) = gauss_pair(k);
        let l = TLadder::for_distance(&s, 1.0).map_err(err)?;
        let e = theta_estimate(&s, &x, &y, &l, cfg).map_err(err)?;
        ok &= (e.value - k).abs() <= 0.02 * k.abs();
        lines.push(format!("K={k}: θ={:.5}", e.value));
        let grid = Arc::new(Discretization::discretize(&s, 0.02, Extent::Radius(1.5)).map_err(err)?);
        let random = |rng: &mut ChaCha8Rng, c: f64| {
            let w: Vec<f64> = grid
                .points()
                .iter()
                .map(|p| if (p.coords()[0] - c).abs() < 0.15 { rng.gen::<f64>() } else { 0.0 })
                .collect();
            DiscreteMeasure::new(grid.clone(), w)
        };
        let mu = random(&mut rng, -0.5).map_err(err)?;
        let nu = random(&mut rng, 0.5).map_err(err)?;
        for q in [2.0, 4.0] {
            let r = contraction_check(&s, k, &mu, &nu, &l, q, cfg).map_err(err)?;
            ok &= r.pass(0.01);
            lines.push(format!("q={q} margin={:.2e}", r.worst_margin));
        }
    }
    ensure(ok, lines.join(", "))
}

fn ac3(cfg: &EstimatorConfig) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [PI / 4.0, PI / 2.0] {
        let (s, x, y) = sphere_pair(d);
        let l = TLadder::for_distance(&s, d).map_err(err)?;
        let r = sandwich_check(&s, &x, &y, &l, 0.1, cfg).map_err(err)?;
        let v = r.estimate.value;
        ok &= (0.9..=1.0 + (d / 2.0).tan().powi(2) + 0.1).contains(&v);
        lines.push(format!("sphere d={d:.4}: {v:.4} in [{:.3}, {:.3}]", r.lower, r.upper));
    }
    let e = ModelSpace::euclidean(2).unwrap();
    for (a, b) in [([0.0, 0.0], [1.0, 0.0]), ([0.2, -0.3], [0.5, 0.4])] {
        let (x, y) = (e.point(&a).unwrap(), e.point(&b).unwrap());
        let l = TLadder::for_distance(&e, e.dist(&x, &y)).map_err(err)?;
        let r = sandwich_check(&e, &x, &y, &l, 0.02, cfg).map_err(err)?;
        ok &= r.estimate.value.abs() <= 0.02;
        lines.push(format!("euclidean: {:.2e}", r.estimate.value));
    }
    ensure(ok, lines.join(", "))
}

/// Smooth, non-conjugate pairs: none may be flagged divergent.
fn smooth_pairs() -> Vec<(ModelSpace, Point, Point)> {
    let mut out = Vec::new();
    let mut add = |s: ModelSpace, a: &[f64], b: &[f64]| out.push((s, s.point(a).unwrap(), s.point(b).unwrap()));
    let e2 = ModelSpace::euclidean(2).unwrap();
    add(e2, &[0.0, 0.0], &[1.0, 0.0]);
    add(e2, &[0.2, -0.3], &[0.5, 0.4]);
    add(e2, &[-1.0, 0.5], &[0.3, -0.2]);
    add(ModelSpace::euclidean(1).unwrap(), &[0.1], &[0.8]);
    add(ModelSpace::gaussian(1, 1.0).unwrap(), &[-0.5], &[0.5]);
    add(ModelSpace::gaussian(1, -0.5).unwrap(), &[-0.2], &[0.7]);
    add(ModelSpace::gaussian(2, 0.7).unwrap(), &[0.1, 0.2], &[0.6, -0.3]);
    add(ModelSpace::gaussian(2, -0.5).unwrap(), &[-0.3, 0.0], &[0.4, 0.3]);
    let s = ModelSpace::sphere(1.0).unwrap();
    for (th, d) in [(1.2, 0.3), (0.9, PI / 4.0), (1.5, 1.0), (1.1, PI / 2.0), (0.7, 2.0)] {
        add(s, &[th, 0.2], &[th + d, 0.2]);
    }
    add(s, &[1.0, 0.0], &[1.3, 0.6]);
    let t = ModelSpace::flat_torus(1.0, 1.0).unwrap();
    add(t, &[0.1, 0.1], &[0.4, 0.2]);
    add(t, &[0.5, 0.5], &[0.6, 0.9]);
    add(t, &[0.0, 0.0], &[0.25, 0.0]);
    let c = ModelSpace::cone(PI).unwrap();
    add(c, &[1.0, 0.0], &[1.2, 0.4]);
    add(c, &[0.8, 0.5], &[1.0, -0.2]);
    let c3 = ModelSpace::cone(1.5 * PI).unwrap();
    add(c3, &[1.0, 0.0], &[1.0, 0.5]);
    add(c3, &[0.6, 1.0], &[1.1, 1.2]);
    out
}

fn ladder_for(s: &ModelSpace, x: &Point, y: &Point) -> ricci_lab::Result<TLadder> {
    TLadder::for_distance(s, s.distance(x, y)?)
}

fn ac4(cfg: &EstimatorConfig) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for alpha in [PI / 2.0, PI, 1.5 * PI] {
        let c = ModelSpace::cone(alpha).unwrap();
        let (o, y) = (c.vertex().unwrap(), c.point(&[1.0, 0.0]).unwrap());
        let e = theta_estimate(&c, &o, &y, &ladder_for(&c, &o, &y).map_err(err)?, cfg).map_err(err)?;
        ok &= e.divergent;
        lines.push(format!("cone α={alpha:.3} vertex divergent={}", e.divergent));
    }
    let t = ModelSpace::flat_torus(1.0, 1.0).unwrap();
    let (x, y) = (t.point(&[0.0, 0.3]).unwrap(), t.point(&[0.5, 0.3]).unwrap());
    let e = theta_estimate(&t, &x, &y, &ladder_for(&t, &x, &y).map_err(err)?, cfg).map_err(err)?;
    ok &= e.divergent;
    lines.push(format!("torus antipodal divergent={}", e.divergent));
    let pairs = smooth_pairs();
    let mut false_pos = Vec::new();
    for (s, x, y) in &pairs {
        let e = theta_estimate(s, x, y, &ladder_for(s, x, y).map_err(err)?, cfg).map_err(err)?;
        if e.divergent {
            false_pos.push(format!("{} a={:.3}", s.label(), e.sqrt_coeff));
        }
    }
    ok &= pairs.len() >= 20 && false_pos.is_empty();
    lines.push(format!("{} smooth pairs, false positives: [{}]", pairs.len(), false_pos.join("; ")));
    ensure(ok, lines.join(", "))
}

/// (space, x, y, ε) used for the ϑ♭ = η comparison and the chain in AC6.
fn flat_cases() -> Vec<(&'static str, ModelSpace, Point, Point, f64)> {
    let (g, gx, gy) = gauss_pair(1.0);
    let e = ModelSpace::euclidean(2).unwrap();
    let (s, sx, sy) = sphere_pair(PI / 2.0);
    vec![
        ("gaussian(1,1)", g, gx, gy, 0.1),
        ("euclidean(2)", e, e.point(&[0.0, 0.0]).unwrap(), e.point(&[PI / 2.0, 0.0]).unwrap(), 0.1),
        ("sphere(1) d=π/2", s, sx, sy, 0.04),
    ]
}

#[derive(Clone)]
struct FlatRow {
    name: &'static str,
    flat: (f64, f64),
    /// ϑ♭ extrapolated to ε → 0 from ε and ε/2.
    flat_limit: (f64, f64),
    eta: (f64, f64),
    theta: (f64, f64),
}

fn flat_rows(cfg: &EstimatorConfig) -> Result<Vec<FlatRow>, String> {
    flat_cases()
        .into_iter()
        .map(|(name, s, x, y, eps)| {
            let f = theta_flat_estimate(&s, &x, &y, eps, None, cfg).map_err(err)?;
            let half = theta_flat_estimate(&s, &x, &y, eps / 2.0, None, cfg).map_err(err)?;
            // Leading ε² term: v(0) ≈ v(ε/2) − (v(ε) − v(ε/2))/3.
            let step = f.value - half.value;
            let flat_limit = (half.value - step / 3.0, half.error * 4.0 / 3.0 + f.error / 3.0 + step.abs() / 3.0);
            let h = eta_estimate(&s, &x, &y, eps, cfg).map_err(err)?;
            let t = theta_estimate(&s, &x, &y, &ladder_for(&s, &x, &y).map_err(err)?, cfg).map_err(err)?;
            Ok(FlatRow { name, flat: (f.value, f.error), flat_limit, eta: (h.value, h.error), theta: (t.value, t.error_bar()) })
        })
        .collect()
}

fn ac5(cfg: &EstimatorConfig, rows: &[FlatRow]) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for r in rows {
        let gap = (r.flat.0 - r.eta.0).abs();
        ok &= gap <= r.flat.1 + r.eta.1;
        lines.push(format!("{}: ϑ♭={:.6}±{:.1e} η={:.6}±{:.1e}", r.name, r.flat.0, r.flat.1, r.eta.0, r.eta.1));
    }
    let c = ModelSpace::cone(PI).unwrap();
    let (o, y) = (c.vertex().unwrap(), c.point(&[PI / 2.0, 0.0]).unwrap());
    let f = theta_flat_estimate(&c, &o, &y, 0.1, None, cfg).map_err(err)?;
    ok &= !f.divergent && f.value.abs() <= 0.1;
    lines.push(format!("cone(π) vertex: ϑ♭={:.4} divergent={}", f.value, f.divergent));
    ensure(ok, lines.join(", "))
}

fn ac6(cfg: &EstimatorConfig, rows: &[FlatRow]) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for r in rows {
        // ϑ♭ is a limit ε → 0; at finite ε the uniform candidates sit O(ε²) above it.
        ok &= r.flat_limit.0 <= r.theta.0 + r.flat_limit.1 + r.theta.1;
        lines.push(format!("{}: ϑ♭(ε→0)={:.6}±{:.1e} ϑ⁺={:.6}", r.name, r.flat_limit.0, r.flat_limit.1, r.theta.0));
    }
    let (g, gx, gy) = gauss_pair(1.0);
    let (s, sx, sy) = sphere_pair(PI / 4.0);
    for (name, space, x, y) in [("gaussian(1,1)", g, gx, gy), ("sphere(1)", s, sx, sy)] {
        let curve = space.geodesic(&x, &y, 5).map_err(err)?;
        // The sampled action only sees pairs one segment apart, so ϑ* is
        // taken at that scale.
        let radius = space.dist(&x, &y) / 4.0;
        // ϑ* averaged over the curve (constant speed) by the trapezoid rule.
        let nodes = [0.0, 0.5, 1.0];
        let mut integral = 0.0;
        let mut bar: f64 = 0.0;
        for (i, a) in nodes.iter().enumerate() {
            let p = space.geodesic_point(&x, &y, *a).map_err(err)?;
            let ts = theta_star_estimate(&space, &p, radius, 3, None, cfg).map_err(err)?;
            let w = if i == 1 { 0.5 } else { 0.25 };
            integral += w * ts.value;
            bar = bar.max(ts.error);
        }
        let mut prev: Option<(f64, f64)> = None;
        for p in [1.0, 2.0, 4.0] {
            let e = action_decay_estimate(&space, &curve, p, None, cfg).map_err(err)?;
            ok &= !e.divergent && e.value <= integral + e.error_bar() + bar;
            if let Some((v, b)) = prev {
                ok &= e.value <= v + b + e.error_bar();
            }
            prev = Some((e.value, e.error_bar()));
            lines.push(format!("{name} Θ_{p}={:.5}", e.value));
        }
        lines.push(format!("{name} ∫ϑ*={integral:.5}"));
    }
    ensure(ok, lines.join(", "))
}

fn ac7(cfg: &EstimatorConfig) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for k in [-0.5, 1.0] {
        let (s, x, y) = gauss_pair(k);
        let v = speed_decay_estimate(&s, &x, [1.0, 0.0], None, cfg).map_err(err)?;
        ok &= (v.value - k).abs() <= 0.05 * k.abs();
        lines.push(format!("gaussian K={k}: speed {:.4}", v.value));
        let curve = s.geodesic(&x, &y, 5).map_err(err)?;
        for p in [1.0, 2.0] {
            let a = action_decay_estimate(&s, &curve, p, None, cfg).map_err(err)?;
            ok &= (a.value - k).abs() <= 0.05 * k.abs();
            lines.push(format!("action p={p} {:.4}", a.value));
        }
    }
    let (s, x, y) = sphere_pair(0.5);
    let v = speed_decay_estimate(&s, &x, [1.0, 0.0], None, cfg).map_err(err)?;
    ok &= (v.value - 1.0).abs() <= 0.1;
    lines.push(format!("sphere: speed {:.4}", v.value));
    let curve = s.geodesic(&x, &y, 5).map_err(err)?;
    for p in [1.0, 2.0] {
        let a = action_decay_estimate(&s, &curve, p, None, cfg).map_err(err)?;
        ok &= (a.value - 1.0).abs() <= 0.1;
        lines.push(format!("action p={p} {:.4}", a.value));
    }
    ensure(ok, lines.join(", "))
}

fn ac8(cfg: &EstimatorConfig) -> Check {
    const TOL: f64 = 0.02;
    let mut lines = Vec::new();
    let mut ok = true;
    let cases = [
        ("gaussian(1,1)", ModelSpace::gaussian(1, 1.0).unwrap(), vec![0.2], 1.0 + TOL),
        ("sphere(1)", ModelSpace::sphere(1.0).unwrap(), vec![1.0, 0.4], 1.0 + 0.09 + TOL),
        ("euclidean(2)", ModelSpace::euclidean(2).unwrap(), vec![0.3, -0.1], TOL),
    ];
    for (name, s, c, limit) in cases {
        let x = s.point(&c).unwrap();
        let f = robust_family(&s, &x, [1.0, 0.0], 0.3, cfg).map_err(err)?;
        ok &= f.defect <= limit && f.pass(TOL);
        lines.push(format!("{name}: defect {:.4} bound {:.4}", f.defect, f.bound));
    }
    ensure(ok, lines.join(", "))
}

fn random_measure(rng: &mut ChaCha8Rng, space: &ModelSpace, n: usize) -> DiscreteMeasure {
    let pts: Vec<Point> = (0..n).map(|_| space.point(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).unwrap()).collect();
    let disc = Discretization::from_cells(*space, pts, vec![1.0; n], 0.0).unwrap();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    DiscreteMeasure::new(Arc::new(disc), w).unwrap()
}

fn ac9() -> Check {
    let e = ModelSpace::euclidean(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_gap: f64 = 0.0;
    let mut worst_dual: f64 = 0.0;
    for _ in 0..100 {
        let mu = random_measure(&mut rng, &e, 64);
        let nu = random_measure(&mut rng, &e, 64);
        let exact = solve_exact(&mu, &nu, 2.0).map_err(err)?;
        let ent = solve_entropic(&mu, &nu, 2.0, &EntropicConfig::default()).map_err(err)?;
        worst_gap = worst_gap.max((ent.total_cost - exact.total_cost).abs() / exact.total_cost);
        let dual = exact.dual_objective().ok_or("exact plan without potentials")?;
        worst_dual = worst_dual.max((dual - exact.total_cost).abs() / exact.total_cost);
    }
    // Metric axioms on shared supports.
    let mut axioms = true;
    for _ in 0..20 {
        let pts: Vec<Point> = (0..24).map(|_| e.point(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).unwrap()).collect();
        let disc = Arc::new(Discretization::from_cells(e, pts, vec![1.0; 24], 0.0).unwrap());
        let m: Vec<DiscreteMeasure> = (0..3)
            .map(|_| DiscreteMeasure::new(disc.clone(), (0..24).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap())
            .collect();
        let w = |a: &DiscreteMeasure, b: &DiscreteMeasure| solve_exact(a, b, 2.0).unwrap().wasserstein();
        let (ab, ba, bc, ac, aa) = (w(&m[0], &m[1]), w(&m[1], &m[0]), w(&m[1], &m[2]), w(&m[0], &m[2]), w(&m[0], &m[0]));
        axioms &= aa < 1e-9 && (ab - ba).abs() < 1e-9 && ac <= ab + bc + 1e-9 && ab > 0.0;
    }
    ensure(
        worst_gap <= 1e-3 && worst_dual <= 1e-9 && axioms,
        format!("sinkhorn gap {worst_gap:.2e}, duality gap {worst_dual:.2e}, metric axioms {axioms}"),
    )
}

fn ac10() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    // Chapman–Kolmogorov on the sphere and a Gaussian space.
    let s = ModelSpace::sphere(1.0).unwrap();
    let g = ModelSpace::gaussian(2, 0.7).unwrap();
    for (space, disc, x) in [
        (s, Discretization::discretize(&s, 0.05, Extent::Full).unwrap(), s.point(&[1.0, 0.5]).unwrap()),
        (g, Discretization::discretize(&g, 0.06, Extent::Radius(3.0)).unwrap(), g.point(&[0.3, -0.2]).unwrap()),
    ] {
        let disc = Arc::new(disc);
        let h = HeatKernelEvaluator::new(space).with_mass_tolerance(1e-3);
        let direct = h.heat_row(0.2, &x, disc.clone()).map_err(err)?;
        let half = h.heat_row(0.1, &x, disc.clone()).map_err(err)?;
        let twice = h.dual_flow(0.1, &half).map_err(err)?;
        let tv = direct.total_variation(&twice).map_err(err)?;
        ok &= tv <= 0.01;
        lines.push(format!("{} CK TV {tv:.1e}", space.label()));
    }
    // Bessel series near the vertex against the vertex closed form.
    let c = ModelSpace::cone(1.2).unwrap();
    let h = HeatKernelEvaluator::new(c);
    let y = c.point(&[0.4, 0.1]).unwrap();
    let t: f64 = 0.05;
    let closed = (-0.16 / (4.0 * t)).exp() / (2.0 * 1.2 * t);
    let near = h.kernel(t, &c.point(&[1e-9, 0.7]).unwrap(), &y).map_err(err)?;
    let rel = (near - closed).abs() / closed;
    ok &= rel <= 1e-8;
    lines.push(format!("cone vertex limit {rel:.1e}"));
    // Mass before renormalization and the Euclidean second moment.
    let e = ModelSpace::euclidean(2).unwrap();
    let disc = Discretization::discretize(&e, 0.03, Extent::Radius(2.0)).unwrap();
    let he = HeatKernelEvaluator::new(e);
    let o = e.point(&[0.01, 0.01]).unwrap();
    let t: f64 = 0.03;
    let (mut mass, mut m2) = (0.0, 0.0);
    for (p, m) in disc.points().iter().zip(disc.cell_measures()) {
        let k = he.kernel(t, &o, p).map_err(err)? * m;
        mass += k;
        m2 += k * e.dist(&o, p).powi(2);
    }
    ok &= (mass - 1.0).abs() <= 1e-10 && (m2 / 2.0 - 2.0 * t).abs() <= 1e-3;
    lines.push(format!("mass {:.1e}, per-axis second moment {:.6} vs {:.6}", (mass - 1.0).abs(), m2 / 2.0, 2.0 * t));
    ensure(ok, lines.join(", "))
}

fn main() {
    let cfg = EstimatorConfig::default();
    let rows = flat_rows(&cfg);
    let results: Vec<(&str, Check)> = vec![
        ("AC1", ac1(&cfg)),
        ("AC2", ac2(&cfg)),
        ("AC3", ac3(&cfg)),
        ("AC4", ac4(&cfg)),
        ("AC5", rows.clone().and_then(|r| ac5(&cfg, &r))),
        ("AC6", rows.and_then(|r| ac6(&cfg, &r))),
        ("AC7", ac7(&cfg)),
        ("AC8", ac8(&cfg)),
        ("AC9", ac9()),
        ("AC10", ac10()),
    ];
    let mut failed = 0;
    for (id, r) in &results {
        match r {
            Ok(m) => println!("{id} PASS {m}"),
            Err(m) => {
                failed += 1;
                println!("{id} FAIL {m}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
