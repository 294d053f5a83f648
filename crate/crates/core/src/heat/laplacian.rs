//! Finite-difference weighted Laplacian on grid discretizations.
//!
//! Neighboring cells i ~ j are joined by the conductance
//! c_ij = √(mᵢmⱼ)/d(xᵢ, xⱼ)², which reproduces the interface-length over
//! distance ratio of the flat, polar and spherical charts (with the e^{−f}
//! weight at the interface) to second order. L_f u_i = Σⱼ c_ij (uⱼ − uᵢ)/mᵢ is
//! then self-adjoint with respect to the cell measures and kills constants.

use crate::error::{Error, Result};
use crate::spaces::Discretization;
use crate::transport::DiscreteMeasure;
use nalgebra::{DMatrix, DVector};

/// Dense matrix exponentials are cubic; grids above this size are refused.
pub const LAPLACIAN_POINT_CAP: usize = 1500;

/// Conductance list (i, j, c_ij) with i < j.
fn conductances(disc: &Discretization) -> Result<Vec<(usize, usize, f64)>> {
    let grid = disc
        .grid()
        .ok_or_else(|| Error::InvalidArgument("weighted Laplacian needs a grid discretization".into()))?;
    let space = disc.space();
    let m = disc.cell_measures();
    let pts = disc.points();
    let mut out = Vec::new();
    for i in 0..disc.len() {
        for axis in 0..space.dim() {
            if let Some(j) = grid.neighbor(i, axis, 1) {
                if j == i {
                    continue;
                }
                let d = space.dist(&pts[i], &pts[j]);
                if d > 0.0 {
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    out.push((a, b, (m[i] * m[j]).sqrt() / (d * d)));
                }
            }
        }
    }
    out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    out.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    Ok(out)
}

/// Dense matrix of L_f acting on densities (row i: Σⱼ c_ij(uⱼ − uᵢ)/mᵢ).
pub fn weighted_laplacian(disc: &Discretization) -> Result<DMatrix<f64>> {
    let n = disc.len();
    if n > LAPLACIAN_POINT_CAP {
        return Err(Error::ResourceLimit { what: "Laplacian grid points", requested: n, cap: LAPLACIAN_POINT_CAP });
    }
    let m = disc.cell_measures();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for (i, j, c) in conductances(disc)? {
        l[(i, j)] += c / m[i];
        l[(j, i)] += c / m[j];
        l[(i, i)] -= c / m[i];
        l[(j, j)] -= c / m[j];
    }
    Ok(l)
}

/// exp(tL_f) applied to the density of μ (Padé scaling and squaring), returned
/// as a measure on the same grid. Boundaries are reflecting, periodic axes wrap.
pub fn discrete_laplacian_flow(disc: &std::sync::Arc<Discretization>, t: f64, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    if !std::sync::Arc::ptr_eq(disc, mu.discretization()) && disc.len() != mu.discretization().len() {
        return Err(Error::InvalidArgument("measure lives on another grid".into()));
    }
    if t == 0.0 {
        return Ok(mu.clone());
    }
    let l = weighted_laplacian(disc)?;
    let m = disc.cell_measures();
    let u0 = DVector::from_iterator(disc.len(), mu.weights().iter().zip(m).map(|(w, mi)| w / mi));
    // dwᵢ/dt = Σⱼ c_ij(uⱼ − uᵢ), i.e. du/dt = L_f u.
    let e = (l * t).exp();
    let u = e * u0;
    let w: Vec<f64> = u.iter().zip(m).map(|(ui, mi)| (ui * mi).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::TruncationError { factor: total });
    }
    DiscreteMeasure::new(disc.clone(), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::HeatKernelEvaluator;
    use crate::spaces::{Extent, ModelSpace};
    use std::sync::Arc;

    #[test]
    fn symmetric_in_cell_measure_inner_product() {
        for s in [ModelSpace::gaussian(2, 1.0).unwrap(), ModelSpace::cone(2.0).unwrap(), ModelSpace::sphere(1.0).unwrap()] {
            let d = Discretization::discretize(&s, 0.3, Extent::Radius(1.5)).unwrap();
            let l = weighted_laplacian(&d).unwrap();
            let n = d.len();
            let m = d.cell_measures();
            let u = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
            let v = DVector::from_fn(n, |i, _| (i as f64 * 0.11).cos());
            let lu = &l * &u;
            let lv = &l * &v;
            let a: f64 = (0..n).map(|i| lu[i] * v[i] * m[i]).sum();
            let b: f64 = (0..n).map(|i| u[i] * lv[i] * m[i]).sum();
            assert!((a - b).abs() < 1e-12 * (a.abs() + 1.0), "{}: {a} {b}", s.label());
            let ones = &l * DVector::from_element(n, 1.0);
            assert!(ones.amax() < 1e-9);
        }
    }

    #[test]
    fn euclidean_grid_matches_kernel() {
        let e = ModelSpace::euclidean(1).unwrap();
        let d = Arc::new(Discretization::discretize(&e, 0.01, Extent::Radius(1.0)).unwrap());
        let i = d.nearest(&e.point(&[0.005]).unwrap());
        let mu = DiscreteMeasure::cell_dirac(d.clone(), i).unwrap();
        let fd = discrete_laplacian_flow(&d, 0.01, &mu).unwrap();
        let exact = HeatKernelEvaluator::new(e).heat_row(0.01, &d.points()[i], d.clone()).unwrap();
        let tv = fd.total_variation(&exact).unwrap();
        assert!(tv <= 0.02, "{tv}");
    }

    #[test]
    fn constant_density_is_fixed() {
        let t = ModelSpace::flat_torus(1.0, 1.0).unwrap();
        let d = Arc::new(Discretization::discretize(&t, 0.1, Extent::Full).unwrap());
        let mu = DiscreteMeasure::from_density(d.clone(), |_| 1.0).unwrap();
        let out = discrete_laplacian_flow(&d, 0.3, &mu).unwrap();
        assert!(out.total_variation(&mu).unwrap() < 1e-10);
    }
}
