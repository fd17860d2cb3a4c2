//! Per-particle random-walk Metropolis over independent seeded chains.

use super::batch::{Diagnostics, SampleBatch};
use super::model::{particle_counts, LogGasModel, ModelDescriptor};
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TARGET_ACCEPTANCE: f64 = 0.3;
const ADAPT_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub n_samples: usize,
    /// Sweep budget per chain; a quarter is burn-in.
    pub n_sweeps: usize,
    pub seed: u64,
    pub chains: usize,
    /// Probability of a uniform proposal on the allowed windows instead of
    /// a Gaussian step. Defaults to 0.1 for free models with several
    /// windows (the only way to change filling fractions) and 0 otherwise.
    pub jump_probability: Option<f64>,
}

impl SamplerOptions {
    pub fn new(n_samples: usize, n_sweeps: usize, seed: u64) -> Self {
        SamplerOptions { n_samples, n_sweeps, seed, chains: 4, jump_probability: None }
    }
}

/// Integrated autocorrelation time with Sokal's adaptive window (c = 5).
pub fn integrated_autocorrelation(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for k in 1..n / 2 {
        let ck = c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += 2.0 * ck / c0;
        if k as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

struct ChainOut {
    configs: Vec<Vec<f64>>,
    accepted: usize,
    proposed: usize,
    tau: f64,
    thinning: usize,
    sweeps: usize,
    steps: Vec<f64>,
}

struct Chain<'a> {
    model: &'a LogGasModel,
    x: Vec<f64>,
    labels: Vec<usize>,
    steps: Vec<f64>,
    jump: f64,
    total_len: f64,
    rng: ChaCha8Rng,
    tried: Vec<usize>,
    took: Vec<usize>,
}

impl Chain<'_> {
    fn uniform_point(&mut self, label: usize) -> f64 {
        let m = self.model;
        if m.is_constrained() {
            let (lo, hi) = m.windows[label];
            return lo + (hi - lo) * self.rng.random::<f64>();
        }
        let mut u = self.total_len * self.rng.random::<f64>();
        for &(lo, hi) in &m.windows {
            if u <= hi - lo {
                return lo + u;
            }
            u -= hi - lo;
        }
        m.windows.last().unwrap().1
    }

    fn sweep(&mut self) -> (usize, usize) {
        let mut accepted = 0;
        for i in 0..self.x.len() {
            let li = self.labels[i];
            let jump = self.jump > 0.0 && self.rng.random::<f64>() < self.jump;
            let y = if jump {
                self.uniform_point(li)
            } else {
                let z: f64 = self.rng.sample(StandardNormal);
                self.x[i] + self.steps[li] * z
            };
            let r = self.model.log_accept_ratio(&self.x, &self.labels, i, y);
            let u: f64 = self.rng.random();
            let ok = r.is_finite() && (r >= 0.0 || u.ln() < r);
            if !jump {
                self.tried[li] += 1;
                self.took[li] += ok as usize;
            }
            if ok {
                self.labels[i] = self.model.label_at(&self.labels, i, y).unwrap();
                self.x[i] = y;
                accepted += 1;
            }
        }
        (accepted, self.x.len())
    }

    fn adapt(&mut self) {
        for h in 0..self.steps.len() {
            if self.tried[h] > 0 {
                let rate = self.took[h] as f64 / self.tried[h] as f64;
                let (lo, hi) = self.model.windows[h];
                self.steps[h] = (self.steps[h] * (2.0 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-9, hi - lo);
            }
            self.tried[h] = 0;
            self.took[h] = 0;
        }
    }

    fn observable(&self) -> (f64, f64) {
        let s2 = self.x.iter().map(|v| v * v).sum();
        let c0 = self.labels.iter().filter(|&&l| l == 0).count() as f64;
        (s2, c0)
    }

    fn stored(&self) -> Vec<f64> {
        let mut c = self.x.clone();
        match &self.model.counts {
            Some(counts) => {
                let mut start = 0;
                for &k in counts {
                    c[start..start + k].sort_by(f64::total_cmp);
                    start += k;
                }
            }
            None => c.sort_by(f64::total_cmp),
        }
        c
    }
}

fn run_chain(model: &LogGasModel, n_out: usize, n_sweeps: usize, seed: u64, stream: u64, jump: f64) -> Result<ChainOut> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let x = model.initial_config();
    let labels = model.labels(&x).ok_or_else(|| Error::Precondition("initial configuration leaves B".into()))?;
    let w = model.windows.len();
    let steps = model.windows.iter().map(|(lo, hi)| 0.5 * (hi - lo) / model.n as f64).collect();
    let mut ch = Chain {
        model,
        x,
        labels,
        steps,
        jump,
        total_len: model.windows.iter().map(|(lo, hi)| hi - lo).sum(),
        rng,
        tried: vec![0; w],
        took: vec![0; w],
    };
    let burn = n_sweeps / 4;
    let adapt_until = burn / 2;
    let mut obs = (Vec::new(), Vec::new());
    for s in 0..burn {
        ch.sweep();
        if s < adapt_until {
            if (s + 1) % ADAPT_EVERY == 0 {
                ch.adapt();
            }
        } else {
            let (a, b) = ch.observable();
            obs.0.push(a);
            obs.1.push(b);
        }
    }
    let mut tau = integrated_autocorrelation(&obs.0);
    if !model.is_constrained() && w > 1 {
        tau = tau.max(integrated_autocorrelation(&obs.1));
    }
    let budget = ((n_sweeps - burn) * 3 / 4).max(n_out);
    let thinning = (tau.ceil() as usize).max(budget / n_out.max(1)).max(1);
    let mut configs = Vec::with_capacity(n_out);
    let (mut accepted, mut proposed) = (0, 0);
    for _ in 0..n_out {
        for _ in 0..thinning {
            let (a, p) = ch.sweep();
            accepted += a;
            proposed += p;
        }
        let c = ch.stored();
        if let Some(counts) = &model.counts {
            let mut start = 0;
            for (h, &k) in counts.iter().enumerate() {
                let (lo, hi) = model.windows[h];
                if c[start..start + k].iter().any(|&v| v < lo || v > hi) {
                    return Err(Error::Data(format!("stored configuration leaves B_{h}")));
                }
                start += k;
            }
        }
        configs.push(c);
    }
    Ok(ChainOut { configs, accepted, proposed, tau, thinning, sweeps: burn + n_out * thinning, steps: ch.steps })
}

fn run_chains(model: &LogGasModel, opts: &SamplerOptions, stream_offset: u64) -> Result<Vec<ChainOut>> {
    if opts.n_samples == 0 {
        return Err(Error::Argument("n_samples must be positive".into()));
    }
    if opts.n_sweeps < 8 {
        return Err(Error::Argument("at least 8 sweeps are required".into()));
    }
    let chains = opts.chains.clamp(1, opts.n_samples);
    let jump = match opts.jump_probability {
        Some(p) if (0.0..1.0).contains(&p) => p,
        Some(p) => return Err(Error::Argument(format!("jump probability {p} outside [0, 1)"))),
        None if !model.is_constrained() && model.windows.len() > 1 => 0.1,
        None => 0.0,
    };
    (0..chains)
        .into_par_iter()
        .map(|c| {
            let n_out = opts.n_samples / chains + usize::from(c < opts.n_samples % chains);
            run_chain(model, n_out, opts.n_sweeps, opts.seed, stream_offset + c as u64, jump)
        })
        .collect()
}

fn diagnostics(outs: &[&ChainOut]) -> Diagnostics {
    let accepted: usize = outs.iter().map(|o| o.accepted).sum();
    let proposed: usize = outs.iter().map(|o| o.proposed).sum();
    let acceptance = if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 };
    let mut warnings = Vec::new();
    if !(0.1..=0.7).contains(&acceptance) {
        warnings.push(format!("acceptance rate {acceptance:.3} outside [0.1, 0.7] after adaptation"));
    }
    Diagnostics {
        acceptance,
        sweeps: outs.iter().map(|o| o.sweeps).max().unwrap_or(0),
        burn_in: 0,
        thinning: outs.iter().map(|o| o.thinning).max().unwrap_or(1),
        autocorrelation: outs.iter().map(|o| o.tau).fold(1.0, f64::max),
        chains: outs.len(),
        step_sizes: outs.iter().map(|o| o.steps.clone()).collect(),
        warnings,
    }
}

/// Draw configurations from the model. Chains use independent streams of
/// one seeded generator and are concatenated in chain order, so the batch
/// does not depend on the thread count.
pub fn sample_loggas(model: &LogGasModel, opts: &SamplerOptions) -> Result<SampleBatch> {
    let outs = run_chains(model, opts, 0)?;
    let mut diagnostics = diagnostics(&outs.iter().collect::<Vec<_>>());
    diagnostics.burn_in = opts.n_sweeps / 4;
    Ok(SampleBatch {
        descriptor: model.descriptor(),
        seed: opts.seed,
        configs: outs.into_iter().flat_map(|o| o.configs).collect(),
        diagnostics,
        provenance: None,
    })
}

/// Draw from the decoupled T_1 measure: each cut independently, as a
/// one-cut log-gas with N_h particles and potential Ṽ/ε_h on B_h.
pub fn sample_product_t1(mu: &EquilibriumMeasure, n: usize, opts: &SamplerOptions) -> Result<SampleBatch> {
    let counts = particle_counts(n, &mu.eps)?;
    let chains = opts.chains.clamp(1, opts.n_samples.max(1)) as u64;
    let mut per_cut = Vec::new();
    for (h, &k) in counts.iter().enumerate() {
        let m = LogGasModel::cut_factor(mu, h, k)?;
        per_cut.push(run_chains(&m, opts, h as u64 * chains)?);
    }
    let mut diag = diagnostics(&per_cut.iter().flatten().collect::<Vec<_>>());
    diag.burn_in = opts.n_sweeps / 4;
    let cut_configs: Vec<Vec<Vec<f64>>> = per_cut.into_iter().map(|outs| outs.into_iter().flat_map(|o| o.configs).collect()).collect();
    let configs = (0..opts.n_samples).map(|s| cut_configs.iter().flat_map(|c| c[s].iter().copied()).collect()).collect();
    Ok(SampleBatch {
        descriptor: ModelDescriptor {
            kind: "product_t1".into(),
            potential: mu.potential.clone(),
            n,
            beta: mu.beta(),
            t: 1.0,
            eps: Some(mu.eps.clone()),
            counts: Some(counts),
            domain: mu.geometry.enlargements.clone(),
        },
        seed: opts.seed,
        configs,
        diagnostics: diag,
        provenance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gaussian_measure, quartic_two_cut_measure};

    #[test]
    fn autocorrelation_of_white_noise_and_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let white: Vec<f64> = (0..20000).map(|_| rng.sample(StandardNormal)).collect();
        assert!((integrated_autocorrelation(&white) - 1.0).abs() < 0.15);
        let phi: f64 = 0.8;
        let mut x = 0.0;
        let ar: Vec<f64> = white
            .iter()
            .map(|e| {
                x = phi * x + e;
                x
            })
            .collect();
        let expect = (1.0 + phi) / (1.0 - phi);
        assert!((integrated_autocorrelation(&ar) - expect).abs() < 0.2 * expect);
    }

    #[test]
    fn same_seed_same_batch() {
        let mu = quartic_two_cut_measure().unwrap();
        let m = LogGasModel::unconstrained(&mu, 8).unwrap();
        let o = SamplerOptions::new(10, 80, 42);
        let a = sample_loggas(&m, &o).unwrap();
        let b = sample_loggas(&m, &o).unwrap();
        assert_eq!(a, b);
        let c = sample_loggas(&m, &SamplerOptions { seed: 43, ..o }).unwrap();
        assert_ne!(a.configs, c.configs);
        assert_eq!(a.len(), 10);
        assert!(a.configs.iter().all(|c| c.windows(2).all(|w| w[0] <= w[1])));
    }

    #[test]
    fn constrained_configs_stay_in_their_windows() {
        let mu = quartic_two_cut_measure().unwrap();
        let m = LogGasModel::constrained(&mu, 10, 0.5).unwrap();
        let b = sample_loggas(&m, &SamplerOptions::new(20, 200, 3)).unwrap();
        for s in 0..b.len() {
            for h in 0..2 {
                let (lo, hi) = mu.geometry.enlargements[h];
                let c = b.cut_slice(s, h).unwrap();
                assert_eq!(c.len(), 5);
                assert!(c.iter().all(|&v| v >= lo && v <= hi));
                assert!(c.windows(2).all(|w| w[0] <= w[1]));
            }
        }
        assert!((0.1..=0.7).contains(&b.diagnostics.acceptance), "{:?}", b.diagnostics);
    }

    #[test]
    fn gaussian_second_moment() {
        // N⁻¹ Σ λ² → ∫ x² dμ_sc = 1
        let g = gaussian_measure(2.0).unwrap();
        let m = LogGasModel::unconstrained(&g, 64).unwrap();
        let b = sample_loggas(&m, &SamplerOptions::new(200, 1200, 11)).unwrap();
        let s: Vec<f64> = b.configs.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / 64.0).collect();
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // at β = 2 the finite-N expectation is exactly 1 as well
        let se = (var * integrated_autocorrelation(&s) / n).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn product_sampler_counts() {
        let mu = quartic_two_cut_measure().unwrap();
        let b = sample_product_t1(&mu, 9, &SamplerOptions::new(6, 40, 5)).unwrap();
        assert_eq!(b.descriptor.counts, Some(vec![5, 4]));
        assert_eq!(b.len(), 6);
        for s in 0..6 {
            assert!(b.cut_slice(s, 0).unwrap().iter().all(|&v| v < 0.0));
            assert!(b.cut_slice(s, 1).unwrap().iter().all(|&v| v > 0.0));
        }
        assert!(sample_product_t1(&mu, 1, &SamplerOptions::new(2, 40, 5)).is_err());
    }
}
