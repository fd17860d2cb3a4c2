//! Log-gas target densities: unconstrained V, and the fixed-filling
//! interpolation T_t with particles labelled by cut.

use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::interaction::decoupled_potential_unchecked;
use crate::potentials::Potential;
use serde::{Deserialize, Serialize};

/// Points closer than this are treated as coincident (log density -∞).
pub const COINCIDENCE: f64 = 1e-14;

/// Serializable description of what a batch was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    /// "loggas", "product_t1" or "gaussian_tridiagonal".
    pub kind: String,
    pub potential: Potential,
    pub n: usize,
    pub beta: f64,
    pub t: f64,
    /// Imposed filling fractions; `None` for free sampling.
    pub eps: Option<Vec<f64>>,
    /// Particles per cut for constrained models.
    pub counts: Option<Vec<usize>>,
    /// The windows B_h; empty when the whole line is allowed.
    pub domain: Vec<(f64, f64)>,
}

/// N_h = round(N ε_h), fixed up by largest remainder so that Σ N_h = N.
pub fn particle_counts(n: usize, eps: &[f64]) -> Result<Vec<usize>> {
    let total: f64 = eps.iter().sum();
    if eps.iter().any(|e| !(*e > 0.0)) || (total - 1.0).abs() > 1e-8 {
        return Err(Error::Argument(format!("filling fractions {eps:?} must be positive and sum to 1")));
    }
    let mut counts: Vec<usize> = eps.iter().map(|e| (e * n as f64).round() as usize).collect();
    let mut sum: usize = counts.iter().sum();
    while sum != n {
        // adjust the cut whose rounding was worst
        let err = |h: usize, c: usize| c as f64 - eps[h] * n as f64;
        if sum > n {
            let h = (0..counts.len()).filter(|&h| counts[h] > 0).max_by(|&a, &b| err(a, counts[a]).total_cmp(&err(b, counts[b]))).unwrap();
            counts[h] -= 1;
            sum -= 1;
        } else {
            let h = (0..counts.len()).min_by(|&a, &b| err(a, counts[a]).total_cmp(&err(b, counts[b]))).unwrap();
            counts[h] += 1;
            sum += 1;
        }
    }
    if let Some(h) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Argument(format!("cut {h} receives no particles at N = {n}")));
    }
    Ok(counts)
}

/// Target density ∝ exp(β Σ_{i<j} c_ij log|λ_i - λ_j| - s Σ_i U(λ_i)) on
/// the windows, with c_ij = 1 for particles of the same cut and 1 - t
/// otherwise, and U = (1 - t) V + t Ṽ. The prefactor s is N except for the
/// per-cut factors of the decoupled product.
#[derive(Debug, Clone)]
pub struct LogGasModel {
    pub beta: f64,
    pub n: usize,
    pub t: f64,
    pub windows: Vec<(f64, f64)>,
    /// Block sizes of a constrained model: particles are stored cut by cut.
    pub counts: Option<Vec<usize>>,
    pub scale: f64,
    /// Multiplier of the one-body potential, 1 except for product factors.
    pub potential_factor: f64,
    mu: EquilibriumMeasure,
    kind: &'static str,
}

impl LogGasModel {
    /// Free filling fractions with potential V on B = ∪ B_h.
    pub fn unconstrained(mu: &EquilibriumMeasure, n: usize) -> Result<Self> {
        check_n(n)?;
        if !mu.potential.confinement_check() {
            return Err(Error::Precondition("potential is not confining".into()));
        }
        Ok(LogGasModel {
            beta: mu.beta(),
            n,
            t: 0.0,
            windows: mu.geometry.enlargements.clone(),
            counts: None,
            scale: n as f64,
            potential_factor: 1.0,
            mu: mu.clone(),
            kind: "loggas",
        })
    }

    /// Fixed filling fractions `mu.eps`, two-body potential T_t.
    pub fn constrained(mu: &EquilibriumMeasure, n: usize, t: f64) -> Result<Self> {
        check_n(n)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Argument(format!("t must lie in [0, 1], got {t}")));
        }
        let counts = particle_counts(n, &mu.eps)?;
        Ok(LogGasModel {
            beta: mu.beta(),
            n,
            t,
            windows: mu.geometry.enlargements.clone(),
            counts: Some(counts),
            scale: n as f64,
            potential_factor: 1.0,
            mu: mu.clone(),
            kind: "loggas",
        })
    }

    /// The factor of the decoupled T_1 measure on cut h: n_h particles on
    /// B_h with potential Ṽ/ε_h.
    pub fn cut_factor(mu: &EquilibriumMeasure, h: usize, n_h: usize) -> Result<Self> {
        check_n(n_h)?;
        if h >= mu.cut_count() {
            return Err(Error::Argument(format!("no cut {h}")));
        }
        Ok(LogGasModel {
            beta: mu.beta(),
            n: n_h,
            t: 1.0,
            windows: vec![mu.geometry.enlargements[h]],
            counts: Some(vec![n_h]),
            scale: n_h as f64,
            potential_factor: 1.0 / mu.eps[h],
            mu: mu.clone(),
            kind: "product_t1",
        })
    }

    pub fn measure(&self) -> &EquilibriumMeasure {
        &self.mu
    }

    pub fn is_constrained(&self) -> bool {
        self.counts.is_some()
    }

    pub fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor {
            kind: self.kind.into(),
            potential: self.mu.potential.clone(),
            n: self.n,
            beta: self.beta,
            t: self.t,
            eps: self.counts.as_ref().map(|_| self.mu.eps.clone()),
            counts: self.counts.clone(),
            domain: self.windows.clone(),
        }
    }

    /// Window index of x, if any.
    pub fn window_of(&self, x: f64) -> Option<usize> {
        self.windows.iter().position(|&(lo, hi)| x >= lo && x <= hi)
    }

    /// Cut labels of the particles of a configuration: block labels for a
    /// constrained model, the containing window otherwise.
    pub fn labels(&self, x: &[f64]) -> Option<Vec<usize>> {
        match &self.counts {
            Some(c) => Some(c.iter().enumerate().flat_map(|(h, &k)| std::iter::repeat_n(h, k)).collect()),
            None => x.iter().map(|&v| self.window_of(v)).collect(),
        }
    }

    /// One-body potential U = (1 - t) V + t Ṽ, times the potential factor.
    pub fn one_body(&self, x: f64) -> f64 {
        let v = if self.t == 0.0 {
            self.mu.potential.value(x)
        } else if self.t == 1.0 {
            decoupled_potential_unchecked(&self.mu, x)
        } else {
            (1.0 - self.t) * self.mu.potential.value(x) + self.t * decoupled_potential_unchecked(&self.mu, x)
        };
        self.potential_factor * v
    }

    fn pair_weight(&self, a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else {
            1.0 - self.t
        }
    }

    fn admissible(&self, label: usize, x: f64) -> bool {
        match &self.counts {
            Some(_) => {
                let (lo, hi) = self.windows[label];
                x >= lo && x <= hi
            }
            None => self.window_of(x).is_some(),
        }
    }

    /// Unnormalized log density; -∞ outside the support of the model.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        if x.len() != self.n {
            return f64::NEG_INFINITY;
        }
        let Some(labels) = self.labels(x) else {
            return f64::NEG_INFINITY;
        };
        if x.iter().zip(&labels).any(|(&v, &l)| !self.admissible(l, v)) {
            return f64::NEG_INFINITY;
        }
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let d = (x[i] - x[j]).abs();
                if d < COINCIDENCE {
                    return f64::NEG_INFINITY;
                }
                s += self.beta * self.pair_weight(labels[i], labels[j]) * d.ln();
            }
            s -= self.scale * self.one_body(x[i]);
        }
        s
    }

    /// Label particle i would carry at position y.
    pub(crate) fn label_at(&self, labels: &[usize], i: usize, y: f64) -> Option<usize> {
        match &self.counts {
            Some(_) => Some(labels[i]),
            None => self.window_of(y),
        }
    }

    /// log π(x with x_i → y) - log π(x), in O(N).
    pub fn log_accept_ratio(&self, x: &[f64], labels: &[usize], i: usize, y: f64) -> f64 {
        let Some(ly) = self.label_at(labels, i, y) else {
            return f64::NEG_INFINITY;
        };
        if !self.admissible(ly, y) {
            return f64::NEG_INFINITY;
        }
        let li = labels[i];
        let mut s = 0.0;
        for j in 0..x.len() {
            if j == i {
                continue;
            }
            let d = (y - x[j]).abs();
            if d < COINCIDENCE {
                return f64::NEG_INFINITY;
            }
            s += self.beta * (self.pair_weight(ly, labels[j]) * d.ln() - self.pair_weight(li, labels[j]) * (x[i] - x[j]).abs().ln());
        }
        s - self.scale * (self.one_body(y) - self.one_body(x[i]))
    }

    /// Starting configuration at the classical locations of μ (per cut for
    /// constrained models), labelled consistently with `labels`.
    pub fn initial_config(&self) -> Vec<f64> {
        match &self.counts {
            Some(c) => {
                let cuts: Vec<usize> = if self.windows.len() == 1 {
                    let h = self.mu.geometry.enlargements.iter().position(|w| *w == self.windows[0]).unwrap_or(0);
                    vec![h]
                } else {
                    (0..c.len()).collect()
                };
                cuts.iter().zip(c).flat_map(|(&h, &k)| (0..k).map(move |i| self.mu.cut_quantile(h, (i as f64 + 0.5) / k as f64))).collect()
            }
            None => (0..self.n).map(|i| self.mu.quantile((i as f64 + 0.5) / self.n as f64).expect("p in (0, 1)")).collect(),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("N must be positive".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gaussian_measure, quartic_two_cut_measure};

    #[test]
    fn counts_round_and_sum() {
        assert_eq!(particle_counts(128, &[0.5, 0.5]).unwrap(), vec![64, 64]);
        assert_eq!(particle_counts(3, &[0.5, 0.5]).unwrap().iter().sum::<usize>(), 3);
        let c = particle_counts(10, &[0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(c.iter().sum::<usize>(), 10);
        assert!(particle_counts(2, &[0.9, 0.05, 0.05]).is_err());
    }

    fn direct(m: &LogGasModel, x: &[f64], labels: &[usize]) -> f64 {
        // independent evaluation of the T_t energy
        let mu = m.measure();
        let mut s = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                if i != j {
                    let w = if labels[i] == labels[j] { 1.0 } else { 1.0 - m.t };
                    s += 0.5 * m.beta * w * (x[i] - x[j]).abs().ln();
                }
            }
            let vt = mu.potential.value(x[i]) - crate::interaction::mean_interaction(mu, x[i]);
            s -= m.scale * ((1.0 - m.t) * mu.potential.value(x[i]) + m.t * vt);
        }
        s
    }

    #[test]
    fn accept_ratio_matches_density_difference() {
        let mu = quartic_two_cut_measure().unwrap();
        for t in [0.0, 0.4, 1.0] {
            let m = LogGasModel::constrained(&mu, 3, t).unwrap();
            let x = m.initial_config();
            let labels = m.labels(&x).unwrap();
            assert!((m.log_density(&x) - direct(&m, &x, &labels)).abs() < 1e-12);
            for (i, y) in [(0, -1.2), (1, -0.9), (2, 1.77)] {
                let mut x2 = x.clone();
                x2[i] = y;
                let d = m.log_density(&x2) - m.log_density(&x);
                assert!((m.log_accept_ratio(&x, &labels, i, y) - d).abs() < 1e-12, "t={t} i={i}");
            }
            // leaving the particle's own window is rejected
            assert_eq!(m.log_accept_ratio(&x, &labels, 0, 1.2), f64::NEG_INFINITY);
        }
        let free = LogGasModel::unconstrained(&mu, 3).unwrap();
        let x = free.initial_config();
        let labels = free.labels(&x).unwrap();
        let mut x2 = x.clone();
        x2[0] = 1.5;
        let d = free.log_density(&x2) - free.log_density(&x);
        assert!((free.log_accept_ratio(&x, &labels, 0, 1.5) - d).abs() < 1e-12);
        assert_eq!(free.log_accept_ratio(&x, &labels, 0, 0.0), f64::NEG_INFINITY);
        assert_eq!(free.log_accept_ratio(&x, &labels, 0, x[1]), f64::NEG_INFINITY);
    }

    #[test]
    fn initial_configs_are_admissible() {
        let g = gaussian_measure(2.0).unwrap();
        let m = LogGasModel::unconstrained(&g, 5).unwrap();
        assert!(m.log_density(&m.initial_config()).is_finite());
        let mu = quartic_two_cut_measure().unwrap();
        let f = LogGasModel::cut_factor(&mu, 1, 4).unwrap();
        let x = f.initial_config();
        assert!(x.iter().all(|&v| v > 0.7));
        assert!(f.log_density(&x).is_finite());
    }
}
