//! Tridiagonal β-Hermite model for the Gaussian ensemble with G = βx²/4.

use super::batch::{Diagnostics, SampleBatch};
use super::model::ModelDescriptor;
use crate::error::{Error, Result};
use crate::potentials::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};
use rayon::prelude::*;
use std::path::PathBuf;

/// Environment variable naming the directory of cached reference batches.
pub const CACHE_ENV: &str = "LOGGAS_REFERENCE_CACHE";

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (e[i] couples i and i + 1), by implicit QL. Sorted
/// ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::Argument("off-diagonal must be one shorter than the diagonal".into()));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Solver { message: "QL iteration did not converge".into(), residual: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn draw(beta: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let scale = (2.0 / (n as f64 * beta)).sqrt();
    let d: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * scale
        })
        .collect();
    let e = (1..n)
        .map(|k| {
            let chi2 = ChiSquared::new(beta * (n - k) as f64).map_err(|e| Error::Argument(e.to_string()))?;
            Ok(rng.sample(chi2).sqrt() / 2f64.sqrt() * scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    tridiagonal_eigenvalues(&d, &e)
}

/// Draw `n_samples` spectra of the β-Hermite matrix, scaled so that the
/// eigenvalue density is ∝ Π|Δ|^β exp(-N Σ βλ²/4).
pub fn sample_gaussian_tridiagonal(beta: f64, n: usize, n_samples: usize, seed: u64) -> Result<SampleBatch> {
    if !(beta > 0.0) || n == 0 || n_samples == 0 {
        return Err(Error::Argument("need beta > 0, N ≥ 1 and at least one sample".into()));
    }
    let configs = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            draw(beta, n, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch {
        descriptor: ModelDescriptor {
            kind: "gaussian_tridiagonal".into(),
            potential: Potential::gaussian(beta)?,
            n,
            beta,
            t: 0.0,
            eps: None,
            counts: None,
            domain: Vec::new(),
        },
        seed,
        configs,
        diagnostics: Diagnostics::exact(),
        provenance: None,
    })
}

/// Like [`sample_gaussian_tridiagonal`], reading and filling the cache
/// directory named by `LOGGAS_REFERENCE_CACHE` when it is set.
pub fn cached_gaussian_reference(beta: f64, n: usize, n_samples: usize, seed: u64) -> Result<SampleBatch> {
    let Some(dir) = std::env::var_os(CACHE_ENV).map(PathBuf::from) else {
        return sample_gaussian_tridiagonal(beta, n, n_samples, seed);
    };
    let path = dir.join(format!("gauss_b{beta}_n{n}_s{n_samples}_seed{seed}.lgb"));
    if let Ok(b) = SampleBatch::read(&path) {
        if b.descriptor.kind == "gaussian_tridiagonal" && b.descriptor.beta == beta && b.n() == n && b.len() == n_samples && b.seed == seed
        {
            return Ok(b);
        }
    }
    let b = sample_gaussian_tridiagonal(beta, n, n_samples, seed)?;
    std::fs::create_dir_all(&dir)?;
    b.write(&path)?;
    Ok(b)
}
