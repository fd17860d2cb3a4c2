//! Filling-fraction counts, their tails, and the boundary-eigenvalue
//! classification.

use super::gaps::n_star;
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::geometry::SupportGeometry;
use crate::sampler::SampleBatch;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillingReport {
    pub n: usize,
    /// N_⋆ = N ε_⋆.
    pub n_star: Vec<f64>,
    /// N_⋆ mod 1, recorded because the limiting law depends on it.
    pub n_star_frac: Vec<f64>,
    pub floor: Vec<i64>,
    /// N(λ) per config.
    pub counts: Vec<Vec<usize>>,
    /// N(λ) - ⌊N_⋆⌋ per config.
    pub deviations: Vec<Vec<i64>>,
    /// Δ_h = [⌊N_⋆⌋]_{h-1} - [N(λ)]_{h-1} per config (Δ_0 = 0).
    pub delta: Vec<Vec<i64>>,
    /// Empirical pmf of the deviation vector.
    pub pmf: Vec<(Vec<i64>, f64)>,
    /// P(max_h |N_h(λ) - ⌊N_⋆,h⌋| ≥ K) for K = 1, 2, 3.
    pub tails: Vec<(usize, f64)>,
    /// ξ_h per config: α_h^- when Δ_h ≥ 0, α_{h-1}^+ otherwise.
    pub xi: Vec<Vec<f64>>,
    /// N^{2/3}(λ_i - ξ_h) for i = [⌊N_⋆⌋]_{h-1} + 1, per config.
    pub boundary: Vec<Vec<f64>>,
}

/// Particles of a sorted configuration split by neighbourhood U_h; the
/// per-cut index of global index i is i - [N(λ)]_{h-1}.
pub fn per_cut(config: &[f64], geometry: &SupportGeometry) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::new(); geometry.cut_count()];
    for &x in config {
        let h = geometry.region_of(x).ok_or_else(|| Error::Data(format!("particle {x} lies outside every U_h")))?;
        out[h].push(x);
    }
    Ok(out)
}

pub fn filling_counts(batch: &SampleBatch, mu: &EquilibriumMeasure) -> Result<FillingReport> {
    let n = batch.n();
    let g = &mu.geometry;
    let (ns, _) = n_star(mu, n);
    let floor: Vec<i64> = ns.iter().map(|v| (v + 1e-9).floor() as i64).collect();
    let n23 = (n as f64).powf(2.0 / 3.0);
    let mut rep = FillingReport {
        n,
        n_star_frac: ns.iter().zip(&floor).map(|(v, f)| (v - *f as f64).max(0.0)).collect(),
        n_star: ns,
        floor: floor.clone(),
        counts: Vec::new(),
        deviations: Vec::new(),
        delta: Vec::new(),
        pmf: Vec::new(),
        tails: Vec::new(),
        xi: Vec::new(),
        boundary: Vec::new(),
    };
    let mut pmf: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for c in &batch.configs {
        let mut sorted = c.clone();
        sorted.sort_by(f64::total_cmp);
        let counts: Vec<usize> = per_cut(&sorted, g)?.iter().map(Vec::len).collect();
        let dev: Vec<i64> = counts.iter().zip(&floor).map(|(&c, f)| c as i64 - f).collect();
        let mut delta = vec![0i64; counts.len()];
        let (mut fl, mut cn) = (0i64, 0i64);
        let mut xi = Vec::with_capacity(counts.len());
        let mut boundary = Vec::with_capacity(counts.len());
        for h in 0..counts.len() {
            if h > 0 {
                fl += floor[h - 1];
                cn += counts[h - 1] as i64;
            }
            delta[h] = fl - cn;
            let x = if delta[h] >= 0 { g.cuts[h].0 } else { g.cuts[h - 1].1 };
            xi.push(x);
            let i = fl as usize;
            boundary.push(if i < n { n23 * (sorted[i] - x) } else { f64::NAN });
        }
        *pmf.entry(dev.clone()).or_default() += 1;
        rep.counts.push(counts);
        rep.deviations.push(dev);
        rep.delta.push(delta);
        rep.xi.push(xi);
        rep.boundary.push(boundary);
    }
    let total = batch.len().max(1) as f64;
    rep.pmf = pmf.into_iter().map(|(k, v)| (k, v as f64 / total)).collect();
    rep.tails = (1..=3)
        .map(|k| {
            let hits = rep.deviations.iter().filter(|d| d.iter().any(|v| v.unsigned_abs() as usize >= k)).count();
            (k, hits as f64 / total)
        })
        .collect();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gaussian_measure, quartic_two_cut_measure};
    use crate::sampler::{sample_gaussian_tridiagonal, Diagnostics, ModelDescriptor};

    #[test]
    fn one_cut_is_degenerate() {
        let g = gaussian_measure(2.0).unwrap();
        let mut b = sample_gaussian_tridiagonal(2.0, 20, 10, 1).unwrap();
        for c in &mut b.configs {
            for x in c.iter_mut() {
                *x = x.clamp(-2.5, 2.5);
            }
        }
        let r = filling_counts(&b, &g).unwrap();
        assert!(r.counts.iter().all(|c| c == &vec![20]));
        assert!(r.delta.iter().all(|d| d == &vec![0]));
        assert!(r.xi.iter().all(|x| x[0] == g.geometry.cuts[0].0));
        assert_eq!(r.tails, vec![(1, 0.0), (2, 0.0), (3, 0.0)]);
    }

    #[test]
    fn two_cut_bookkeeping() {
        let mu = quartic_two_cut_measure().unwrap();
        let batch = SampleBatch {
            descriptor: ModelDescriptor {
                kind: "loggas".into(),
                potential: mu.potential.clone(),
                n: 4,
                beta: 1.0,
                t: 0.0,
                eps: None,
                counts: None,
                domain: mu.geometry.enlargements.clone(),
            },
            seed: 0,
            configs: vec![vec![-1.5, -1.2, 1.0, 1.4], vec![-1.5, 1.0, 1.2, 1.4], vec![-1.6, -1.5, -1.2, 1.4]],
            diagnostics: Diagnostics::exact(),
            provenance: None,
        };
        let r = filling_counts(&batch, &mu).unwrap();
        assert_eq!(r.floor, vec![2, 2]);
        assert_eq!(r.counts, vec![vec![2, 2], vec![1, 3], vec![3, 1]]);
        assert_eq!(r.delta, vec![vec![0, 0], vec![0, 1], vec![0, -1]]);
        let (a1m, a0p) = (mu.geometry.cuts[1].0, mu.geometry.cuts[0].1);
        assert_eq!(r.xi[1][1], a1m);
        assert_eq!(r.xi[2][1], a0p);
        // i = 3: the first particle of cut 1 unless cut 0 is overfull
        let n23 = 4f64.powf(2.0 / 3.0);
        assert!((r.boundary[2][1] - n23 * (-1.2 - a0p)).abs() < 1e-14);
        assert_eq!(r.tails, vec![(1, 2.0 / 3.0), (2, 0.0), (3, 0.0)]);
        for c in &batch.configs {
            let parts = per_cut(c, &mu.geometry).unwrap();
            let before = parts[0].len();
            for (i, x) in parts[1].iter().enumerate() {
                assert_eq!(*x, c[before + i]);
            }
        }
        let mut bad = batch.clone();
        bad.configs[0][0] = 10.0;
        assert!(filling_counts(&bad, &mu).is_err());
    }
}
