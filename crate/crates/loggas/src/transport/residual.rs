//! Monge–Ampère residual of the first-order vector field.
//!
//! For the density ρ_t of the fixed-filling model with two-body potential
//! T_t, a velocity field Y transports ρ_t exactly when
//!   R = div Y + Y · ∇log ρ_t + ∂_t log ρ_t
//! vanishes. With U_t = (1 - t) V + t Ṽ and c_ij = 1 on the same cut, 1 - t
//! across cuts,
//!   R = div Y + β Σ_{i<j} c_ij (Y_i - Y_j)/(λ_i - λ_j) - N Σ_i Y_i U_t'(λ_i)
//!       - ½ Σ_{i,j} W(λ_i, λ_j) + N Σ_i ∫ W(λ_i, ·) dμ - ∂_t log Z_t.
//! The last term does not depend on λ and is removed by centering over a
//! batch.

use super::field::TransportField;
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::interaction::{decoupled_potential_deriv, mean_interaction};
use crate::sampler::SampleBatch;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// R + ∂_t log Z_t for one configuration with the given cut labels.
pub fn monge_ampere_residual(field: &TransportField, mu: &EquilibriumMeasure, config: &[f64], labels: &[usize]) -> Result<f64> {
    let n = config.len();
    if labels.len() != n {
        return Err(Error::Argument("one label per particle is required".into()));
    }
    let rows = config
        .iter()
        .map(|&x| field.point_row(x).ok_or_else(|| Error::Domain(format!("configuration point {x} lies outside B"))).map(Some))
        .collect::<Result<Vec<_>>>()?;
    let ev = field.eval_config(&rows);
    let (nf, t, beta) = (n as f64, field.t, mu.beta());
    let y: Vec<f64> = (0..n).map(|i| (ev.y1[i] + ev.z[i * n..(i + 1) * n].iter().sum::<f64>() - nf * ev.zmean[i]) / nf).collect();
    let div: f64 =
        (0..n).map(|i| ev.dy1[i] + ev.dz1[i * n..(i + 1) * n].iter().sum::<f64>() + ev.dz2[i * n + i] - nf * ev.dzmean[i]).sum::<f64>()
            / nf;
    let mut r = div;
    for i in 0..n {
        for j in i + 1..n {
            let c = if labels[i] == labels[j] { 1.0 } else { 1.0 - t };
            r += beta * c * (y[i] - y[j]) / (config[i] - config[j]);
            if labels[i] != labels[j] {
                r -= beta * (config[i] - config[j]).abs().ln();
            }
        }
        let x = config[i];
        let u1 = (1.0 - t) * mu.potential.deriv(x) + t * decoupled_potential_deriv(mu, x);
        r += -nf * y[i] * u1 + nf * mean_interaction(mu, x);
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub n: usize,
    pub t: f64,
    /// Batch mean of the uncentered residual, an estimate of ∂_t log Z_t.
    pub mean: f64,
    /// Mean of |R - mean| over the batch.
    pub mean_abs_centered: f64,
    pub values: Vec<f64>,
}

/// Residuals over a constrained batch drawn at the field's t.
pub fn residual_statistics(field: &TransportField, mu: &EquilibriumMeasure, batch: &SampleBatch) -> Result<ResidualStats> {
    let counts = batch.descriptor.counts.as_ref().ok_or_else(|| Error::Argument("residuals need a constrained batch".into()))?;
    let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(h, &k)| std::iter::repeat_n(h, k)).collect();
    let values = batch.configs.par_iter().map(|c| monge_ampere_residual(field, mu, c, &labels)).collect::<Result<Vec<f64>>>()?;
    let m = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / m;
    let mean_abs_centered = values.iter().map(|v| (v - mean).abs()).sum::<f64>() / m;
    Ok(ResidualStats { n: batch.n(), t: field.t, mean, mean_abs_centered, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gaussian_measure, quartic_two_cut_measure};
    use crate::master_operator::XiContext;
    use crate::transport::build_vector_field;

    #[test]
    fn one_cut_residual_vanishes() {
        let mu = gaussian_measure(2.0).unwrap();
        let f = build_vector_field(&XiContext::new(&mu, 0.0).unwrap(), 8).unwrap();
        let r = monge_ampere_residual(&f, &mu, &[-1.0, 0.2, 1.5], &[0, 0, 0]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let mu = quartic_two_cut_measure().unwrap();
        let f = build_vector_field(&XiContext::new(&mu, 0.5).unwrap(), 32).unwrap();
        let cfg = [-1.6, -1.2, 1.1, 1.5];
        let n = cfg.len() as f64;
        let y = |c: &[f64]| -> Vec<f64> {
            let rows: Vec<_> = c.iter().map(|&x| f.point_row(x)).collect();
            let ev = f.eval_config(&rows);
            let m = c.len();
            (0..m).map(|i| (ev.y1[i] + ev.z[i * m..(i + 1) * m].iter().sum::<f64>() - n * ev.zmean[i]) / n).collect()
        };
        let h = 1e-6;
        let mut div = 0.0;
        for i in 0..cfg.len() {
            let (mut p, mut q) = (cfg.to_vec(), cfg.to_vec());
            p[i] += h;
            q[i] -= h;
            div += (y(&p)[i] - y(&q)[i]) / (2.0 * h);
        }
        // the residual with Y's divergence replaced by the finite difference
        let labels = [0, 0, 1, 1];
        let r = monge_ampere_residual(&f, &mu, &cfg, &labels).unwrap();
        let rows: Vec<_> = cfg.iter().map(|&x| f.point_row(x)).collect();
        let ev = f.eval_config(&rows);
        let m = cfg.len();
        let exact: f64 =
            (0..m).map(|i| ev.dy1[i] + ev.dz1[i * m..(i + 1) * m].iter().sum::<f64>() + ev.dz2[i * m + i] - n * ev.dzmean[i]).sum::<f64>()
                / n;
        assert!((exact - div).abs() < 1e-6 * div.abs().max(1.0), "{exact} {div}");
        assert!(r.is_finite());
    }
}
