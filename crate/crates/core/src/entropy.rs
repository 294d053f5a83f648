//! Relative Boltzmann entropy S(μ) = ∫ u log u dm and its behavior along
//! Wasserstein geodesics.

use crate::error::{Error, Result};
use crate::transport::{DiscreteMeasure, Interpolation, WassersteinGeodesic};

/// Default step of the clustered endpoint samples.
pub const ENDPOINT_STEP: f64 = 0.02;

/// Σ wᵢ log(wᵢ/mᵢ) over the support; +∞ for measures flagged atomic.
pub fn entropy(mu: &DiscreteMeasure) -> f64 {
    if mu.is_atomic() {
        return f64::INFINITY;
    }
    let m = mu.discretization().cell_measures();
    mu.weights()
        .iter()
        .zip(m)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, mi)| w * (w / mi).ln())
        .sum()
}

/// One-sided endpoint derivative with a Richardson check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointDerivative {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct EntropyProfile {
    pub parameters: Vec<f64>,
    pub values: Vec<f64>,
    /// ∂⁺S at a = 0.
    pub start: EndpointDerivative,
    /// ∂⁻S at a = 1.
    pub end: EndpointDerivative,
}

impl EntropyProfile {
    pub fn value_at(&self, a: f64) -> Option<f64> {
        self.parameters.iter().position(|p| (p - a).abs() < 1e-12).map(|i| self.values[i])
    }
}

/// Forward derivative from samples at 0, h, 2h, 4h: second-order one-sided
/// differences at steps h and 2h, extrapolated, with their gap as error bar.
pub fn one_sided_derivative(s0: f64, s1: f64, s2: f64, s4: f64, h: f64) -> EndpointDerivative {
    let dh = (-3.0 * s0 + 4.0 * s1 - s2) / (2.0 * h);
    let d2h = (-3.0 * s0 + 4.0 * s2 - s4) / (4.0 * h);
    EndpointDerivative { value: (4.0 * dh - d2h) / 3.0, error: (dh - d2h).abs() }
}

fn sample_grid(n_samples: usize, h: f64) -> Vec<f64> {
    let mut a: Vec<f64> = (0..n_samples.max(2)).map(|i| i as f64 / (n_samples.max(2) - 1) as f64).collect();
    a.extend([0.0, h, 2.0 * h, 4.0 * h, 1.0 - 4.0 * h, 1.0 - 2.0 * h, 1.0 - h, 1.0]);
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    a
}

/// Entropy profile along a geodesic at `n_samples` uniform parameters plus the
/// clustered endpoint samples.
pub fn entropy_along_geodesic(geo: &WassersteinGeodesic, n_samples: usize) -> Result<EntropyProfile> {
    entropy_along_geodesic_with_step(geo, n_samples, ENDPOINT_STEP)
}

pub fn entropy_along_geodesic_with_step(geo: &WassersteinGeodesic, n_samples: usize, h: f64) -> Result<EntropyProfile> {
    if !(h > 0.0 && h <= 0.125) {
        return Err(Error::InvalidArgument(format!("endpoint step {h}")));
    }
    let s0 = entropy(&geo.plan.source);
    let s1 = entropy(&geo.plan.target);
    if !s0.is_finite() || !s1.is_finite() {
        return Err(Error::InfiniteEntropy);
    }
    let params = sample_grid(n_samples, h);
    let flow = match geo.rule {
        Interpolation::Lagrangian => Some(geo.lagrangian()?),
        Interpolation::Snapped => None,
    };
    let mut values = Vec::with_capacity(params.len());
    for &a in &params {
        values.push(match &flow {
            Some(f) => f.entropy_at(a)?,
            None => entropy(&geo.snapped(a)?),
        });
    }
    let at = |a: f64| values[params.iter().position(|p| (p - a).abs() < 1e-12).unwrap()];
    let start = one_sided_derivative(at(0.0), at(h), at(2.0 * h), at(4.0 * h), h);
    let back = one_sided_derivative(at(1.0), at(1.0 - h), at(1.0 - 2.0 * h), at(1.0 - 4.0 * h), h);
    let end = EndpointDerivative { value: -back.value, error: back.error };
    Ok(EntropyProfile { parameters: params, values, start, end })
}

/// (S(μ¹) − 2S(μ⁰) + S(μ⁻¹))/r².
pub fn robust_defect(mu_minus: &DiscreteMeasure, mu_0: &DiscreteMeasure, mu_plus: &DiscreteMeasure, r: f64) -> Result<f64> {
    let s = [entropy(mu_minus), entropy(mu_0), entropy(mu_plus)];
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InfiniteEntropy);
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("robust scale r = {r}")));
    }
    Ok((s[2] - 2.0 * s[1] + s[0]) / (r * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Discretization, Extent, ModelSpace};
    use std::sync::Arc;

    #[test]
    fn uniform_measure_entropy_is_minus_log_volume() {
        let e = ModelSpace::euclidean(2).unwrap();
        let d = Arc::new(Discretization::discretize(&e, 0.1, Extent::Radius(1.0)).unwrap());
        let mu = DiscreteMeasure::uniform(d, |p| p.coords()[0] < 0.0).unwrap();
        assert!((entropy(&mu) + 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unit_gaussian_entropy() {
        let e = ModelSpace::euclidean(1).unwrap();
        let d = Arc::new(Discretization::discretize(&e, 0.01, Extent::Radius(8.0)).unwrap());
        let mu = DiscreteMeasure::from_density(d, |p| (-0.5 * p.coords()[0].powi(2)).exp()).unwrap();
        assert!((entropy(&mu) + 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()).abs() < 0.01);
    }

    #[test]
    fn one_cell_and_atomic() {
        let e = ModelSpace::euclidean(1).unwrap();
        let d = Arc::new(Discretization::discretize(&e, 0.25, Extent::Radius(1.0)).unwrap());
        let m0 = d.cell_measures()[3];
        assert!((entropy(&DiscreteMeasure::cell_dirac(d.clone(), 3).unwrap()) + m0.ln()).abs() < 1e-14);
        assert_eq!(entropy(&DiscreteMeasure::atomic_dirac(d, 3).unwrap()), f64::INFINITY);
    }

    #[test]
    fn derivative_exact_on_cubics() {
        let f = |a: f64| 1.0 + 2.0 * a - 3.0 * a * a + 0.5 * a * a * a;
        let h = 0.02;
        let d = one_sided_derivative(f(0.0), f(h), f(2.0 * h), f(4.0 * h), h);
        assert!((d.value - 2.0).abs() < 1e-9, "{}", d.value);
    }
}
