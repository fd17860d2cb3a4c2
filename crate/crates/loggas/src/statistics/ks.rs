//! Kolmogorov–Smirnov statistics and bands.

use crate::error::{Error, Result};

fn sorted(a: &[f64], what: &str) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::Argument(format!("{what} sample is empty")));
    }
    if a.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument(format!("{what} sample contains NaN")));
    }
    let mut v = a.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample statistic sup |F_a - F_b|. Tied values are consumed together
/// on both sides before the difference is taken.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a, "first")?;
    let b = sorted(b, "second")?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// One-sample statistic sup |F_n - F|.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let a = sorted(a, "")?;
    let n = a.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < a.len() {
        let x = a[i];
        let lo = i as f64 / n;
        while i < a.len() && a[i] == x {
            i += 1;
        }
        let f = cdf(x);
        d = d.max((f - lo).abs()).max((i as f64 / n - f).abs());
    }
    Ok(d)
}

/// Asymptotic critical coefficient c(α) = sqrt(-ln(α/2)/2); 1.628 at 1%.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Two-sample rejection threshold at level α.
pub fn ks_band(n: usize, m: usize, alpha: f64) -> f64 {
    ks_coefficient(alpha) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// One-sample rejection threshold at level α.
pub fn ks_one_sample_band(n: usize, alpha: f64) -> f64 {
    ks_coefficient(alpha) / (n as f64).sqrt()
}

/// Asymptotic p-value of a two-sample statistic d.
pub fn ks_pvalue(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n as f64 * m as f64) / (n + m) as f64;
    let l = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    if l < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k as f64 * l).powi(2)).exp();
        s += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_cases() {
        let a = [0.1, 0.5, 0.3];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&a, &[2.0, 3.0]).unwrap(), 1.0);
        assert!(ks_distance(&[], &a).is_err());
        assert!(ks_distance(&[f64::NAN], &a).is_err());
        // ties across samples do not create spurious jumps
        assert_eq!(ks_distance(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap(), 1.0 / 3.0);
        assert!((ks_coefficient(0.01) - 1.628).abs() < 1e-3);
    }

    #[test]
    fn same_distribution_within_band() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..10000).map(|_| r.random()).collect();
        let b: Vec<f64> = (0..10000).map(|_| r.random()).collect();
        let d = ks_distance(&a, &b).unwrap();
        assert!(d < ks_band(a.len(), b.len(), 0.01));
        assert!(ks_one_sample(&a, |x| x.clamp(0.0, 1.0)).unwrap() < ks_one_sample_band(a.len(), 0.01));
        assert!(ks_pvalue(d, a.len(), b.len()) > 0.01);
        let shifted: Vec<f64> = b.iter().map(|x| x + 0.05).collect();
        assert!(ks_distance(&a, &shifted).unwrap() > ks_band(a.len(), b.len(), 0.01));
    }
}
