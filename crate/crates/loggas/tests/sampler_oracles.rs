use loggas::equilibrium::{gaussian_measure, quartic_two_cut_measure, solve_equilibrium, SolveOptions};
use loggas::sampler::{
    integrated_autocorrelation, sample_gaussian_tridiagonal, sample_loggas, sample_product_t1, LogGasModel, SamplerOptions,
};
use loggas::statistics::{filling_counts, ks_band, ks_distance, ks_one_sample, Comparison};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

#[test]
fn single_particle_is_a_truncated_normal() {
    // N = 1, β = 2: density e^{-λ²/2} restricted to B = [-2.4, 2.4]
    let g = gaussian_measure(2.0).unwrap();
    let (lo, hi) = g.geometry.enlargements[0];
    let m = LogGasModel::unconstrained(&g, 1).unwrap();
    let b = sample_loggas(&m, &SamplerOptions::new(10_000, 40_000, 3)).unwrap();
    let draws = b.column(0);

    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let exact: Vec<f64> = std::iter::repeat_with(|| normal.sample(&mut rng)).filter(|x| (lo..=hi).contains(x)).take(10_000).collect();
    let d = ks_distance(&draws, &exact).unwrap();
    assert!(d < ks_band(draws.len(), exact.len(), 0.01), "KS {d}");
}

fn semicircle_cdf(x: f64) -> f64 {
    let x = x.clamp(-2.0, 2.0);
    0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
}

#[test]
fn tridiagonal_spectrum_follows_the_semicircle() {
    let b = sample_gaussian_tridiagonal(2.0, 256, 200, 4).unwrap();
    let all: Vec<f64> = b.configs.concat();
    let d = ks_one_sample(&all, semicircle_cdf).unwrap();
    assert!(d < 0.02, "KS {d}");
}

#[test]
fn free_filling_counts_follow_the_energy_curvature() {
    // P(d) ∝ exp(-κ d²/2) with κ = -d(C₁ - C₀)/dε₁ from two constrained solves
    let mu = quartic_two_cut_measure().unwrap();
    let mut c = Vec::new();
    for e in [0.49, 0.51] {
        let nu = solve_equilibrium(&mu.potential, Some(&[1.0 - e, e]), 2, &mu.edges(), &SolveOptions::default()).unwrap();
        c.push(nu.constants[1] - nu.constants[0]);
    }
    let kappa = -(c[1] - c[0]) / 0.02;
    let z: f64 = (-10i32..=10).map(|d| (-kappa * (d * d) as f64 / 2.0).exp()).sum();
    let expect = 1.0 - 1.0 / z;

    let m = LogGasModel::unconstrained(&mu, 128).unwrap();
    let b = sample_loggas(&m, &SamplerOptions::new(1000, 4000, 21)).unwrap();
    let r = filling_counts(&b, &mu).unwrap();
    let p = r.tails[0].1;
    let se = (expect * (1.0 - expect) / b.len() as f64).sqrt();
    assert!((p - expect).abs() < 4.0 * se, "observed {p}, predicted {expect} (κ = {kappa})");
    assert!(r.counts.iter().all(|c| c.iter().sum::<usize>() == 128));
}

#[test]
fn product_sampler_matches_decoupled_model() {
    let mu = quartic_two_cut_measure().unwrap();
    let n = 32;
    let prod = sample_product_t1(&mu, n, &SamplerOptions::new(400, 1200, 8)).unwrap();
    let joint = sample_loggas(&LogGasModel::constrained(&mu, n, 1.0).unwrap(), &SamplerOptions::new(400, 1200, 9)).unwrap();
    let mean_of = |b: &loggas::sampler::SampleBatch, h: usize| -> Vec<f64> {
        (0..b.len()).map(|s| b.cut_slice(s, h).unwrap().iter().sum::<f64>()).collect()
    };
    for h in 0..2 {
        let c = Comparison::new(&mean_of(&prod, h), &mean_of(&joint, h)).unwrap();
        assert!(c.pass, "cut {h}: {c:?}");
    }
    // the factors are independent
    let (a, b) = (mean_of(&prod, 0), mean_of(&prod, 1));
    let k = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / k, b.iter().sum::<f64>() / k);
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / k;
    let sa = (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / k).sqrt();
    let sb = (b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / k).sqrt();
    let corr = cov / (sa * sb);
    assert!(corr.abs() < 3.0 / k.sqrt(), "correlation {corr}");
    assert!(integrated_autocorrelation(&a) < 3.0);
}
