//! Monte Carlo residuals of the loop equations.
//!
//! All three orders come from the integration by parts identity E[Y] = 0
//! with
//!   Y = (β/2) Σ_{i≠j} (f_i - f_j)/(λ_i - λ_j) + Σ_{i,j} ∂₁T_t(λ_i, λ_j) f_i + Σ_i f'_i
//! for f vanishing at the ends of every B_h, and its derivatives after
//! perturbing T_t by -δ (k(x) + k(y)). With B = Y/N and M̃(k) = N(L_N(k) -
//! E L_N(k)):
//!   order 1: E[B] = 0
//!   order 2: E[L_N(f k₁') + B M̃(k₁)] = 0
//!   order 3: E[Σ_a L_N(f k_a') M̃(k_b) M̃(k_c) + B M̃(k₁) M̃(k₂) M̃(k₃)] = 0
//! where a runs over the three indices and {b, c} is its complement.

use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::functions::RealFunction;
use crate::interaction::decoupled_potential_deriv;
use crate::sampler::SampleBatch;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopResidual {
    pub order: usize,
    pub residual: f64,
    pub se: f64,
    pub n_samples: usize,
}

impl LoopResidual {
    /// residual / SE, 0 when both vanish.
    pub fn z(&self) -> f64 {
        if self.residual == 0.0 {
            0.0
        } else {
            self.residual / self.se
        }
    }
}

fn deriv(f: &dyn RealFunction, x: f64, what: &str) -> Result<f64> {
    f.deriv(x).ok_or_else(|| Error::Capability(format!("{what} has no derivative")))
}

/// B = Y/N for one configuration.
fn bracket(batch: &SampleBatch, mu: &EquilibriumMeasure, f: &dyn RealFunction, c: &[f64], labels: &[usize]) -> Result<f64> {
    let d = &batch.descriptor;
    let (beta, t, n) = (d.beta, d.t, c.len());
    let fv: Vec<f64> = c.iter().map(|&x| f.value(x)).collect();
    let mut y = 0.0;
    for i in 0..n {
        y += deriv(f, c[i], "test function")?;
        let u1 = if t == 0.0 {
            mu.potential.deriv(c[i])
        } else {
            (1.0 - t) * mu.potential.deriv(c[i]) + t * decoupled_potential_deriv(mu, c[i])
        };
        let mut cross = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let dx = c[i] - c[j];
            y += 0.5 * beta * (fv[i] - fv[j]) / dx;
            if t != 0.0 && labels[i] != labels[j] {
                cross += beta / dx;
            }
        }
        y += fv[i] * (-(n as f64) * u1 - t * cross);
    }
    Ok(y / n as f64)
}

fn labels_for(batch: &SampleBatch, mu: &EquilibriumMeasure, c: &[f64]) -> Vec<usize> {
    match &batch.descriptor.counts {
        Some(k) => k.iter().enumerate().flat_map(|(h, &m)| std::iter::repeat_n(h, m)).collect(),
        None => c.iter().map(|&x| mu.geometry.region_of(x).unwrap_or(usize::MAX)).collect(),
    }
}

/// Residual of the loop equation of the given order, estimated over the
/// batch, with its standard error. `ks` holds k₁ (order 2) or k₁, k₂, k₃
/// (order 3).
pub fn loop_residual(
    batch: &SampleBatch,
    mu: &EquilibriumMeasure,
    f: &dyn RealFunction,
    order: usize,
    ks: &[&dyn RealFunction],
) -> Result<LoopResidual> {
    let needed = match order {
        1 => 0,
        2 => 1,
        3 => 3,
        _ => return Err(Error::Precondition(format!("loop equations exist for orders 1 to 3, not {order}"))),
    };
    if ks.len() != needed {
        return Err(Error::Precondition(format!("order {order} needs {needed} functions k, got {}", ks.len())));
    }
    let kind = batch.descriptor.kind.as_str();
    if kind != "loggas" && kind != "gaussian_tridiagonal" {
        return Err(Error::Argument(format!("loop equations are not available for {kind} batches")));
    }
    if batch.len() < 2 {
        return Err(Error::Argument("need at least two configurations".into()));
    }
    for &(lo, hi) in &batch.descriptor.domain {
        for x in [lo, hi] {
            let v = f.value(x);
            if v.abs() > 1e-12 {
                return Err(Error::Precondition(format!("f({x}) = {v} but f must vanish at the ends of B_h")));
            }
        }
    }
    let n = batch.n() as f64;
    struct Row {
        b: f64,
        lk: Vec<f64>,
        lfk: Vec<f64>,
    }
    let rows = batch
        .configs
        .par_iter()
        .map(|c| {
            let labels = labels_for(batch, mu, c);
            let b = bracket(batch, mu, f, c, &labels)?;
            let lk = ks.iter().map(|k| c.iter().map(|&x| k.value(x)).sum::<f64>() / n).collect();
            let lfk = ks
                .iter()
                .map(|k| c.iter().map(|&x| Ok(f.value(x) * deriv(*k, x, "k")?)).sum::<Result<f64>>().map(|s| s / n))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Row { b, lk, lfk })
        })
        .collect::<Result<Vec<Row>>>()?;
    let ns = rows.len() as f64;
    let means: Vec<f64> = (0..ks.len()).map(|a| rows.iter().map(|r| r.lk[a]).sum::<f64>() / ns).collect();
    let z: Vec<f64> = rows
        .iter()
        .map(|r| {
            let m: Vec<f64> = r.lk.iter().zip(&means).map(|(l, e)| n * (l - e)).collect();
            match order {
                1 => r.b,
                2 => r.lfk[0] + r.b * m[0],
                _ => r.lfk[0] * m[1] * m[2] + r.lfk[1] * m[0] * m[2] + r.lfk[2] * m[0] * m[1] + r.b * m[0] * m[1] * m[2],
            }
        })
        .collect();
    let mean = z.iter().sum::<f64>() / ns;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ns - 1.0);
    Ok(LoopResidual { order, residual: mean, se: (var / ns).sqrt(), n_samples: rows.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::gaussian_measure;
    use crate::functions::{Poly, ValueOnly};
    use crate::sampler::sample_gaussian_tridiagonal;

    #[test]
    fn zero_function_gives_zero() {
        let g = gaussian_measure(2.0).unwrap();
        let b = sample_gaussian_tridiagonal(2.0, 8, 20, 1).unwrap();
        let zero = Poly(vec![0.0]);
        let r = loop_residual(&b, &g, &zero, 1, &[]).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.z(), 0.0);
        let k = Poly(vec![0.0, 1.0]);
        assert_eq!(loop_residual(&b, &g, &zero, 2, &[&k]).unwrap().residual, 0.0);
        assert!(loop_residual(&b, &g, &zero, 2, &[]).is_err());
        assert!(loop_residual(&b, &g, &ValueOnly(|x: f64| x), 1, &[]).is_err());
    }

    #[test]
    fn gaussian_moment_identities() {
        // tridiagonal draws are exact, so polynomial f is allowed on the line
        let g = gaussian_measure(2.0).unwrap();
        let b = sample_gaussian_tridiagonal(2.0, 16, 4000, 5).unwrap();
        for f in [Poly(vec![0.0, 1.0]), Poly(vec![1.0, 0.0, 0.0, 1.0])] {
            let r = loop_residual(&b, &g, &f, 1, &[]).unwrap();
            assert!(r.z().abs() < 3.5, "{r:?}");
            let k = Poly(vec![0.0, 0.0, 1.0]);
            let r = loop_residual(&b, &g, &f, 2, &[&k]).unwrap();
            assert!(r.z().abs() < 3.5, "{r:?}");
        }
        let (k1, k2, k3) = (Poly(vec![0.0, 1.0]), Poly(vec![0.0, 0.0, 1.0]), Poly(vec![0.5, 0.0, 0.0, 1.0]));
        let r = loop_residual(&b, &g, &Poly(vec![0.0, 1.0]), 3, &[&k1, &k2, &k3]).unwrap();
        assert!(r.z().abs() < 3.5, "{r:?}");
    }
}
