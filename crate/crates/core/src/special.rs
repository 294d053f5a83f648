//! Special functions used by the heat kernels and quadratures.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Orders at or above this use the uniform (Debye) expansion.
const DEBYE_MIN_ORDER: f64 = 30.0;
const DEBYE_TERMS: usize = 12;
/// Below this argument the large-argument expansion is never used.
const HANKEL_MIN_ARG: f64 = 25.0;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for l in 1..n {
        let lf = l as f64;
        let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over [a, b] with an `n`-point Gauss–Legendre rule.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

/// Σ_{l=0}^{n} c_l P_l(x) by the three-term recurrence.
pub fn legendre_sum(coeffs: &[f64], x: f64) -> f64 {
    let mut p0 = 1.0;
    let mut p1 = x;
    let mut acc = 0.0;
    for (l, &c) in coeffs.iter().enumerate() {
        let p = match l {
            0 => 1.0,
            1 => x,
            _ => {
                let lf = (l - 1) as f64;
                let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        acc += c * p;
    }
    acc
}

/// Exponentially scaled modified Bessel function e^{-z} I_ν(z), ν ≥ 0, z ≥ 0.
pub fn bessel_i_scaled(nu: f64, z: f64) -> f64 {
    assert!(nu >= 0.0 && z >= 0.0, "bessel_i_scaled({nu}, {z})");
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if nu >= DEBYE_MIN_ORDER {
        debye(nu, z)
    } else if z >= HANKEL_MIN_ARG.max(nu * nu) {
        hankel(nu, z)
    } else {
        power_series(nu, z)
    }
}

fn power_series(nu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    // Peak of the positive series: (k+1)(k+ν+1) ≈ z²/4.
    let kstar = {
        let b = nu + 2.0;
        let c = nu + 1.0 - q;
        let disc = (b * b - 4.0 * c).max(0.0);
        ((-b + disc.sqrt()) / 2.0).max(0.0).round()
    };
    let lz = (0.5 * z).ln();
    let log_peak = (2.0 * kstar + nu) * lz - ln_gamma(kstar + 1.0) - ln_gamma(kstar + nu + 1.0);
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = kstar;
    loop {
        term *= q / ((k + 1.0) * (k + nu + 1.0));
        sum += term;
        k += 1.0;
        if term < 1e-17 * sum {
            break;
        }
    }
    term = 1.0;
    k = kstar;
    while k > 0.0 {
        term *= k * (k + nu) / q;
        sum += term;
        k -= 1.0;
        if term < 1e-17 * sum {
            break;
        }
    }
    (log_peak - z + sum.ln()).exp()
}

fn hankel(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * z);
        if term.abs() > prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}

fn debye_polys() -> &'static Vec<Vec<f64>> {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        // u_{k+1}(p) = p²(1−p²)u_k'(p)/2 + (1/8)∫₀^p (1−5s²)u_k(s)ds
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS {
            let u = &polys[k];
            let mut next = vec![0.0; u.len() + 3];
            for (i, &c) in u.iter().enumerate() {
                if i >= 1 {
                    let d = c * i as f64;
                    next[i + 1] += 0.5 * d;
                    next[i + 3] -= 0.5 * d;
                }
                next[i + 1] += c / (8.0 * (i as f64 + 1.0));
                next[i + 3] -= 5.0 * c / (8.0 * (i as f64 + 3.0));
            }
            polys.push(next);
        }
        polys
    })
}

fn debye(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let s = (1.0 + z * z).sqrt();
    let p = 1.0 / s;
    // ν(η − z) with η = √(1+z²) + ln(z/(1+√(1+z²))), arranged to avoid cancellation.
    let expo = nu * (1.0 / (s + z) + (z / (1.0 + s)).ln());
    let mut sum = 0.0;
    let mut nu_pow = 1.0;
    for poly in debye_polys() {
        let val = poly.iter().rev().fold(0.0, |acc, &c| acc * p + c);
        sum += val / nu_pow;
        nu_pow *= nu;
    }
    (expo - 0.5 * (2.0 * PI * nu).ln() - 0.25 * (1.0 + z * z).ln()).exp() * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(32);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(62)).sum();
        assert!((m - 2.0 / 63.0).abs() < 1e-14);
    }

    #[test]
    fn first_debye_polynomials() {
        let u = debye_polys();
        let u1 = [0.0, 3.0 / 24.0, 0.0, -5.0 / 24.0];
        for (a, b) in u[1].iter().zip(u1.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        // u_2 = (81p² − 462p⁴ + 385p⁶)/1152
        let u2 = [0.0, 0.0, 81.0 / 1152.0, 0.0, -462.0 / 1152.0, 0.0, 385.0 / 1152.0];
        for (i, b) in u2.iter().enumerate() {
            assert!((u[2][i] - b).abs() < 1e-15, "coefficient {i}");
        }
    }

    #[test]
    fn bessel_known_values() {
        // I_0(1) = 1.2660658777520082, I_1(1) = 0.5651591039924851
        let i0 = bessel_i_scaled(0.0, 1.0) * 1f64.exp();
        assert!((i0 - 1.2660658777520082).abs() < 1e-14);
        let i1 = bessel_i_scaled(1.0, 1.0) * 1f64.exp();
        assert!((i1 - 0.5651591039924851).abs() < 1e-14);
        // I_{1/2}(z) = sqrt(2/(πz)) sinh z
        for &z in &[0.3, 4.0, 30.0, 500.0] {
            let exact = (2.0 / (PI * z)).sqrt() * 0.5 * (1.0 - (-2.0 * z).exp());
            let got = bessel_i_scaled(0.5, z);
            assert!(((got - exact) / exact).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn legendre_sum_matches_closed_forms() {
        let x = 0.37;
        let c = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert!((legendre_sum(&c, x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
    }
}
