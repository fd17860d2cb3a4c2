//! Rescaled bulk gaps and edge fluctuations.

use super::ks::{ks_band, ks_distance};
use super::Summary;
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::sampler::SampleBatch;
use crate::transport::MonotoneMap;
use serde::{Deserialize, Serialize};

/// Result of comparing a sample against a reference sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ks: f64,
    /// Two-sample 1% threshold.
    pub band: f64,
    pub reference_size: usize,
    pub pass: bool,
}

impl Comparison {
    pub fn new(sample: &[f64], reference: &[f64]) -> Result<Self> {
        let ks = ks_distance(sample, reference)?;
        let band = ks_band(sample.len(), reference.len(), 0.01);
        Ok(Comparison { ks, band, reference_size: reference.len(), pass: ks < band })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub h: usize,
    /// Global 1-based index of the first gap's left particle.
    pub i: usize,
    pub m: usize,
    /// N ρ(E_k) (λ_{k+1} - λ_k), m per config.
    pub gaps: Vec<f64>,
    pub summary: Summary,
    pub comparison: Option<Comparison>,
}

/// N_⋆ = N ε and its partial sums [N_⋆]_{h-1} (0 for h = 0).
pub(crate) fn n_star(mu: &EquilibriumMeasure, n: usize) -> (Vec<f64>, Vec<f64>) {
    let ns: Vec<f64> = mu.eps.iter().map(|e| e * n as f64).collect();
    let mut before = vec![0.0; ns.len()];
    for h in 1..ns.len() {
        before[h] = before[h - 1] + ns[h - 1];
    }
    (ns, before)
}

fn check_bulk(mu: &EquilibriumMeasure, n: usize, h: usize, i: usize, eps: f64) -> Result<()> {
    let (ns, before) = n_star(mu, n);
    let local = i as f64 - before[h];
    let lo = eps * n as f64;
    if !(lo < local) {
        return Err(Error::Argument(format!("index {i} violates εN < i - [N_⋆]_{{h-1}}: {lo} ≥ {local} (h = {h}, ε = {eps})")));
    }
    if !(local < ns[h] - lo) {
        return Err(Error::Argument(format!(
            "index {i} violates i - [N_⋆]_{{h-1}} < N_⋆,h - εN: {local} ≥ {} (h = {h}, ε = {eps})",
            ns[h] - lo
        )));
    }
    Ok(())
}

fn sorted_config(c: &[f64]) -> Result<&[f64]> {
    if c.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Data("configuration is not globally sorted".into()));
    }
    Ok(c)
}

/// m consecutive rescaled gaps starting at global index i (1-based) in cut
/// h, with the bulk window width ε.
pub fn bulk_gaps_with(batch: &SampleBatch, mu: &EquilibriumMeasure, h: usize, i: usize, m: usize, eps: f64) -> Result<GapReport> {
    let n = batch.n();
    if h >= mu.cut_count() {
        return Err(Error::Argument(format!("no cut {h}")));
    }
    if m == 0 || i == 0 || i + m > n {
        return Err(Error::Argument(format!("gaps {i}..{} do not fit N = {n}", i + m)));
    }
    check_bulk(mu, n, h, i, eps)?;
    check_bulk(mu, n, h, i + m - 1, eps)?;
    let scale = (i..i + m).map(|k| Ok(n as f64 * mu.density(mu.classical_location(k, n)?))).collect::<Result<Vec<f64>>>()?;
    let mut gaps = Vec::with_capacity(batch.len() * m);
    for c in &batch.configs {
        let c = sorted_config(c)?;
        for (k, s) in (i..i + m).zip(&scale) {
            gaps.push(s * (c[k] - c[k - 1]));
        }
    }
    Ok(GapReport { h, i, m, summary: Summary::of(&gaps), gaps, comparison: None })
}

/// [`bulk_gaps_with`] at the default bulk width ε = 0.1.
pub fn bulk_gaps(batch: &SampleBatch, mu: &EquilibriumMeasure, h: usize, i: usize, m: usize) -> Result<GapReport> {
    bulk_gaps_with(batch, mu, h, i, m, 0.1)
}

impl GapReport {
    pub fn compare(&mut self, reference: &[f64]) -> Result<&Comparison> {
        self.comparison = Some(Comparison::new(&self.gaps, reference)?);
        Ok(self.comparison.as_ref().unwrap())
    }
}

/// Gaps of a Gaussian reference at local index j (1-based), pushed through
/// Φ: Φ'(μ_j)(μ_{j+1} - μ_j), then rescaled by `scale[k]` = N ρ(E_{i+k})
/// of the target.
pub fn transported_reference_gaps(reference: &SampleBatch, map: &MonotoneMap, j: usize, scale: &[f64]) -> Result<Vec<f64>> {
    let n = reference.n();
    if j == 0 || j + scale.len() > n {
        return Err(Error::Argument(format!("reference gaps {j}.. do not fit N = {n}")));
    }
    let mut out = Vec::with_capacity(reference.len() * scale.len());
    for c in &reference.configs {
        let c = sorted_config(c)?;
        for (k, s) in (j..j + scale.len()).zip(scale) {
            out.push(s * map.deriv(c[k - 1]) * (c[k] - c[k - 1]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub h: usize,
    pub m: usize,
    /// N^{2/3}(λ_{h,k} - α_{h,-}) for k = 1..m, m per config.
    pub values: Vec<f64>,
    /// Φ^h'(-2) used for the reference, once compared.
    pub edge_factor: Option<f64>,
    /// Φ^h'(-2) N^{2/3}(μ_k + 2), m per reference config.
    pub reference: Vec<f64>,
    pub comparison: Option<Comparison>,
}

/// Particles of cut h in config s: the stored block of a constrained batch,
/// those in U_h otherwise.
pub(crate) fn cut_particles(batch: &SampleBatch, mu: &EquilibriumMeasure, s: usize, h: usize) -> Vec<f64> {
    match batch.cut_slice(s, h) {
        Some(c) => c.to_vec(),
        None => batch.configs[s].iter().copied().filter(|&x| mu.geometry.region_of(x) == Some(h)).collect(),
    }
}

pub fn edge_rescale(batch: &SampleBatch, mu: &EquilibriumMeasure, h: usize, m: usize) -> Result<EdgeReport> {
    if h >= mu.cut_count() {
        return Err(Error::Argument(format!("no cut {h}")));
    }
    let n = batch.n() as f64;
    let alpha = mu.geometry.cuts[h].0;
    let mut values = Vec::with_capacity(batch.len() * m);
    for s in 0..batch.len() {
        let mut c = cut_particles(batch, mu, s, h);
        if c.len() < m {
            return Err(Error::Argument(format!("config {s} has {} particles in cut {h}, fewer than m = {m}", c.len())));
        }
        c.sort_by(f64::total_cmp);
        values.extend(c[..m].iter().map(|x| n.powf(2.0 / 3.0) * (x - alpha)));
    }
    Ok(EdgeReport { h, m, values, edge_factor: None, reference: Vec::new(), comparison: None })
}

impl EdgeReport {
    /// Compare the smallest rescaled particle against Φ'(-2) N^{2/3}(μ_1 + 2)
    /// from a Gaussian reference; N is the target's particle number.
    pub fn compare(&mut self, reference: &SampleBatch, map: &MonotoneMap, n: usize) -> Result<&Comparison> {
        let phi = map.left_slope();
        let scale = (n as f64).powf(2.0 / 3.0) * phi;
        self.reference = Vec::with_capacity(reference.len() * self.m);
        for c in &reference.configs {
            let c = sorted_config(c)?;
            if c.len() < self.m {
                return Err(Error::Argument("reference has too few particles".into()));
            }
            self.reference.extend(c[..self.m].iter().map(|x| scale * (x + 2.0)));
        }
        let first: Vec<f64> = self.values.iter().step_by(self.m).copied().collect();
        let rfirst: Vec<f64> = self.reference.iter().step_by(self.m).copied().collect();
        self.edge_factor = Some(phi);
        self.comparison = Some(Comparison::new(&first, &rfirst)?);
        Ok(self.comparison.as_ref().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gaussian_measure, quartic_two_cut_measure};
    use crate::sampler::sample_gaussian_tridiagonal;
    use crate::transport::monotone_transport;

    #[test]
    fn gaps_are_nonnegative_and_window_is_enforced() {
        let g = gaussian_measure(2.0).unwrap();
        let b = sample_gaussian_tridiagonal(2.0, 40, 30, 2).unwrap();
        let r = bulk_gaps(&b, &g, 0, 20, 3).unwrap();
        assert_eq!(r.gaps.len(), 90);
        assert!(r.gaps.iter().all(|&x| x >= 0.0));
        let e = bulk_gaps(&b, &g, 0, 2, 1).unwrap_err().to_string();
        assert!(e.contains("εN < i"), "{e}");
        let e = bulk_gaps(&b, &g, 0, 37, 1).unwrap_err().to_string();
        assert!(e.contains("< N_⋆,h - εN"), "{e}");
        let mu = quartic_two_cut_measure().unwrap();
        // index 20 of 40 sits at the end of cut 0
        assert!(bulk_gaps(&b, &mu, 0, 20, 1).is_err());
    }

    #[test]
    fn gaussian_mid_bulk_gap_has_unit_mean() {
        let g = gaussian_measure(2.0).unwrap();
        let b = sample_gaussian_tridiagonal(2.0, 256, 400, 8).unwrap();
        let r = bulk_gaps(&b, &g, 0, 128, 1).unwrap();
        assert!((r.summary.mean - 1.0).abs() < 3.0 * r.summary.se, "{:?}", r.summary);
    }

    #[test]
    fn identity_transport_reproduces_the_sample() {
        let g = gaussian_measure(2.0).unwrap();
        let b = sample_gaussian_tridiagonal(2.0, 64, 50, 1).unwrap();
        let id = monotone_transport(&g, &g).unwrap();
        let mut r = bulk_gaps(&b, &g, 0, 30, 2).unwrap();
        let scale: Vec<f64> = (30..32).map(|k| 64.0 * g.density(g.classical_location(k, 64).unwrap())).collect();
        let reference = transported_reference_gaps(&b, &id, 30, &scale).unwrap();
        for (a, c) in r.gaps.iter().zip(&reference) {
            assert!((a - c).abs() < 1e-8 * a.abs().max(1.0));
        }
        // Φ is the identity only up to interpolation error, so one tie may break
        assert!(r.compare(&reference).unwrap().ks <= 1.0 / 50.0 + 1e-12);
        let mut e = edge_rescale(&b, &g, 0, 3).unwrap();
        assert!(e.values.chunks(3).all(|c| c[0] <= c[1] && c[1] <= c[2]));
        assert!(e.compare(&b, &id, 64).unwrap().ks <= 1.0 / 50.0 + 1e-12);
        for (a, c) in e.values.iter().zip(&e.reference) {
            assert!((a - c).abs() < 1e-8);
        }
    }
}
