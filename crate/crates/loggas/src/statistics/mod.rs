//! Observables of sampled configurations and comparison tests.

pub mod filling;
pub mod gaps;
pub mod ks;
pub mod loops;

pub use filling::{filling_counts, per_cut, FillingReport};
pub use gaps::{bulk_gaps, bulk_gaps_with, edge_rescale, transported_reference_gaps, Comparison, EdgeReport, GapReport};
pub use ks::{ks_band, ks_distance, ks_one_sample, ks_one_sample_band, ks_pvalue};
pub use loops::{loop_residual, LoopResidual};

use crate::equilibrium::EquilibriumMeasure;
use crate::sampler::SampleBatch;
use serde::{Deserialize, Serialize};

/// Mean, variance, standard error and a 20-bin histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    /// (left edge, count) per bin; the last bin is closed.
    pub histogram: Vec<(f64, usize)>,
    pub bin_width: f64,
}

impl Summary {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len();
        if n == 0 {
            return Summary { count: 0, mean: 0.0, variance: 0.0, se: 0.0, histogram: Vec::new(), bin_width: 0.0 };
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 { x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bins = 20;
        let w = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for v in x {
            counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
        }
        Summary {
            count: n,
            mean,
            variance,
            se: (variance / n as f64).sqrt(),
            histogram: counts.into_iter().enumerate().map(|(k, c)| (lo + k as f64 * w, c)).collect(),
            bin_width: w,
        }
    }
}

/// Fraction of sampled particles in B \ B^δ.
pub fn outside_fraction(batch: &SampleBatch, mu: &EquilibriumMeasure) -> f64 {
    let total = (batch.len() * batch.n()).max(1) as f64;
    let out = batch.configs.iter().flatten().filter(|&&x| !mu.geometry.in_b_delta(x)).count();
    out as f64 / total
}

/// Mean over configs of sup_φ |L_N(φ) - μ(φ)| over the 1-Lipschitz family
/// φ_c(x) = |x - c| (c on a grid of B) and sin(k x)/k, k = 1..4.
pub fn concentration(batch: &SampleBatch, mu: &EquilibriumMeasure) -> f64 {
    let (lo, hi) = (mu.geometry.enlargements[0].0, mu.geometry.enlargements.last().unwrap().1);
    let mut family: Vec<Box<dyn Fn(f64) -> f64 + Sync>> = Vec::new();
    for j in 0..=16 {
        let c = lo + (hi - lo) * j as f64 / 16.0;
        family.push(Box::new(move |x: f64| (x - c).abs()));
    }
    for k in 1..=4 {
        let k = k as f64;
        family.push(Box::new(move |x: f64| (k * x).sin() / k));
    }
    let means: Vec<f64> = family.iter().map(|phi| mu.integrate(phi)).collect();
    let n = batch.n() as f64;
    let sum: f64 = batch
        .configs
        .iter()
        .map(|c| family.iter().zip(&means).map(|(phi, m)| (c.iter().map(|&x| phi(x)).sum::<f64>() / n - m).abs()).fold(0.0, f64::max))
        .sum();
    sum / batch.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.histogram.iter().map(|b| b.1).sum::<usize>(), 4);
        assert_eq!(Summary::of(&[]).count, 0);
    }
}
