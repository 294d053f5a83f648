use crate::error::{Error, Result};

/// Weighted least-squares fit of y = a√t + b t with weights 1/t².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderFit {
    pub a: f64,
    pub b: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub residual: f64,
}

/// Fit of y = bt + ct^{3/2} + dt² for pairs of matched measures with sharp
/// edges: the √t term vanishes and the edges leave a t^{3/2} layer. Returns
/// the fit (a = 0) and c.
pub fn fit_boundary_layer(rungs: &[(f64, f64)]) -> Result<(LadderFit, f64)> {
    let n = rungs.len();
    if n < 4 {
        return Err(Error::InvalidArgument("boundary ladder fit needs at least four rungs".into()));
    }
    for &(t, y) in rungs {
        if !(t > 0.0) || !y.is_finite() {
            return Err(Error::InvalidArgument(format!("bad rung (t={t}, y={y})")));
        }
    }
    // y/t = b + c√t + dt, columns scaled to unit size for conditioning.
    let s = rungs.iter().map(|r| r.0.sqrt()).fold(0.0, f64::max);
    let a = nalgebra::DMatrix::from_fn(n, 3, |i, k| (rungs[i].0.sqrt() / s).powi(k as i32));
    let z = nalgebra::DVector::from_fn(n, |i, _| rungs[i].1 / rungs[i].0);
    let ata = a.transpose() * &a;
    let inv = ata.try_inverse().ok_or_else(|| Error::InvalidArgument("degenerate ladder".into()))?;
    let beta = &inv * a.transpose() * &z;
    let res = &z - &a * &beta;
    let ss = res.norm_squared();
    let s2 = ss / (n - 3) as f64;
    Ok((
        LadderFit { a: 0.0, b: beta[0], stderr_a: 0.0, stderr_b: (s2 * inv[(0, 0)]).sqrt(), residual: (ss / n as f64).sqrt() },
        beta[1] / s,
    ))
}

pub fn fit_sqrt_linear(rungs: &[(f64, f64)]) -> Result<LadderFit> {
    let n = rungs.len();
    if n < 3 {
        return Err(Error::InvalidArgument("ladder fit needs at least three rungs".into()));
    }
    // Scaled by 1/t the model reads y/t = a/√t + b.
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, y) in rungs {
        if !(t > 0.0) || !y.is_finite() {
            return Err(Error::InvalidArgument(format!("bad rung (t={t}, y={y})")));
        }
        let u = 1.0 / t.sqrt();
        let z = y / t;
        s11 += u * u;
        s12 += u;
        s22 += 1.0;
        r1 += u * z;
        r2 += z;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 0.0) {
        return Err(Error::InvalidArgument("degenerate ladder".into()));
    }
    let a = (s22 * r1 - s12 * r2) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    let ss: f64 = rungs
        .iter()
        .map(|&(t, y)| {
            let e = y / t - a / t.sqrt() - b;
            e * e
        })
        .sum();
    let s2 = ss / (n - 2) as f64;
    Ok(LadderFit {
        a,
        b,
        stderr_a: (s2 * s22 / det).sqrt(),
        stderr_b: (s2 * s11 / det).sqrt(),
        residual: (ss / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_model() {
        let rungs: Vec<(f64, f64)> = (0..10).map(|k| {
            let t = 0.1 * 0.5f64.powi(k);
            (t, 0.3 * t.sqrt() + 1.7 * t)
        }).collect();
        let f = fit_sqrt_linear(&rungs).unwrap();
        assert!((f.a - 0.3).abs() < 1e-12 && (f.b - 1.7).abs() < 1e-10);
        assert!(f.stderr_a < 1e-10);
    }

    #[test]
    fn boundary_fit_recovers_edge_layer() {
        let rungs: Vec<(f64, f64)> = (0..8).map(|k| {
            let t = 1e-3 * 0.6f64.powi(k);
            (t, 1.3 * t - 4.0 * t.powf(1.5) + 20.0 * t * t)
        }).collect();
        let (f, c) = fit_boundary_layer(&rungs).unwrap();
        assert!((f.b - 1.3).abs() < 1e-9 && (c + 4.0).abs() < 1e-6 && f.stderr_b < 1e-8, "{f:?} {c}");
    }
}
