//! Log-domain entropic transport with geometric ε-annealing.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EntropicConfig {
    /// First ε as a fraction of the median cost.
    pub eps_start: f64,
    /// Last ε as a fraction of the median cost.
    pub eps_end: f64,
    pub stages: usize,
    /// Marginal error (L1) required at the final stage.
    pub marginal_tol: f64,
    /// Marginal error accepted before moving to the next stage.
    pub stage_tol: f64,
    pub max_iter: usize,
    /// Over-relaxation ω ∈ [1, 2) of the potential updates.
    pub relaxation: f64,
}

impl Default for EntropicConfig {
    fn default() -> Self {
        Self { eps_start: 0.1, eps_end: 1e-3, stages: 10, marginal_tol: 1e-9, stage_tol: 1e-6, max_iter: 100_000, relaxation: 1.8 }
    }
}

pub(crate) struct EntropicSolution {
    /// Dense plan, row-major.
    pub plan: Vec<f64>,
}

fn logsumexp(vals: impl Iterator<Item = f64>, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(vals);
    let mx = buf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + buf.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
}

pub(crate) fn sinkhorn(cost: &[f64], n: usize, m: usize, a: &[f64], b: &[f64], cfg: &EntropicConfig) -> Result<EntropicSolution> {
    let mut sorted: Vec<f64> = cost.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = sorted[sorted.len() / 2].max(sorted[sorted.len() - 1] * 1e-12).max(f64::MIN_POSITIVE);
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut buf = Vec::with_capacity(n.max(m));
    let mut iterations = 0usize;
    let stages = cfg.stages.max(1);
    let omega = cfg.relaxation;
    let mut eps = 0.0;
    for s in 0..stages {
        let frac = if stages == 1 { 1.0 } else { s as f64 / (stages - 1) as f64 };
        eps = median * cfg.eps_start * (cfg.eps_end / cfg.eps_start).powf(frac);
        let tol = if s + 1 == stages { cfg.marginal_tol } else { cfg.stage_tol };
        loop {
            for i in 0..n {
                let row = &cost[i * m..(i + 1) * m];
                let new = -eps * logsumexp((0..m).map(|j| lb[j] + (g[j] - row[j]) / eps), &mut buf);
                f[i] += omega * (new - f[i]);
            }
            for j in 0..m {
                let new = -eps * logsumexp((0..n).map(|i| la[i] + (f[i] - cost[i * m + j]) / eps), &mut buf);
                g[j] += omega * (new - g[j]);
            }
            iterations += 1;
            // With ω > 1 neither marginal is exact after an update.
            let mut err = 0.0;
            let mut cols = vec![0.0; m];
            for i in 0..n {
                let row = &cost[i * m..(i + 1) * m];
                let mut s = 0.0;
                for j in 0..m {
                    let p = ((f[i] + g[j] - row[j]) / eps + la[i] + lb[j]).exp();
                    s += p;
                    cols[j] += p;
                }
                err += (s - a[i]).abs();
            }
            err += cols.iter().zip(b).map(|(c, bj)| (c - bj).abs()).sum::<f64>();
            if err <= tol {
                break;
            }
            if iterations >= cfg.max_iter {
                return Err(Error::NonConvergence(format!("entropic solver: marginal error {err:.3e} after {iterations} iterations")));
            }
        }
    }
    let mut plan = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            plan[i * m + j] = ((f[i] + g[j] - cost[i * m + j]) / eps + la[i] + lb[j]).exp();
        }
    }
    Ok(EntropicSolution { plan })
}
