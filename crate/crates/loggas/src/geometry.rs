//! Cuts A_h, enlargements B_h, neighbourhoods U_h and the square-root
//! factors σ_h, σ attached to them.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Sizing knobs for the enlargements and neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// B_h margin as a fraction of min(half-gap, cut length).
    pub b_margin: f64,
    /// Outer extent of the first and last U_h, in units of the adjacent cut
    /// length.
    pub u_outer: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { b_margin: 0.1, u_outer: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportGeometry {
    /// A_h = [α_{h,-}, α_{h,+}].
    pub cuts: Vec<(f64, f64)>,
    /// B_h = [β_{h,-}, β_{h,+}].
    pub enlargements: Vec<(f64, f64)>,
    /// U_h, as the real-part window (lo, hi) of a vertical strip.
    pub neighborhoods: Vec<(f64, f64)>,
    /// B^δ_h = [β_{h,-} + δ, β_{h,+} - δ].
    pub delta: f64,
}

impl SupportGeometry {
    pub fn from_cuts(cuts: &[(f64, f64)], cfg: GeometryConfig) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::Argument("at least one cut is required".into()));
        }
        for (h, &(a, b)) in cuts.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) || b - a < 1e-6 {
                return Err(Error::Geometry(format!("cut {h} = [{a}, {b}] is degenerate")));
            }
            if h > 0 && a - cuts[h - 1].1 < 1e-6 {
                return Err(Error::Geometry(format!("cuts {} and {h} overlap or merge", h - 1)));
            }
        }
        let n = cuts.len();
        let mut mids = Vec::with_capacity(n + 1);
        let first_len = cuts[0].1 - cuts[0].0;
        let last_len = cuts[n - 1].1 - cuts[n - 1].0;
        mids.push(cuts[0].0 - cfg.u_outer * first_len);
        for h in 1..n {
            mids.push(0.5 * (cuts[h - 1].1 + cuts[h].0));
        }
        mids.push(cuts[n - 1].1 + cfg.u_outer * last_len);

        let mut enlargements = Vec::with_capacity(n);
        let mut margins = Vec::with_capacity(n);
        for (h, &(a, b)) in cuts.iter().enumerate() {
            let len = b - a;
            let mut half_gap = f64::INFINITY;
            if h > 0 {
                half_gap = half_gap.min(0.5 * (a - cuts[h - 1].1));
            }
            if h + 1 < n {
                half_gap = half_gap.min(0.5 * (cuts[h + 1].0 - b));
            }
            let m = cfg.b_margin * half_gap.min(len);
            margins.push(m);
            enlargements.push((a - m, b + m));
        }
        let delta = 0.5 * margins.iter().cloned().fold(f64::INFINITY, f64::min);
        let neighborhoods = (0..n).map(|h| (mids[h], mids[h + 1])).collect();
        Ok(SupportGeometry { cuts: cuts.to_vec(), enlargements, neighborhoods, delta })
    }

    pub fn cut_count(&self) -> usize {
        self.cuts.len()
    }

    pub fn genus(&self) -> usize {
        self.cuts.len() - 1
    }

    /// Index h with Re z inside U_h.
    pub fn region_of(&self, x: f64) -> Option<usize> {
        self.neighborhoods.iter().position(|&(lo, hi)| x > lo && x < hi)
    }

    pub fn region_of_checked(&self, x: f64) -> Result<usize> {
        self.region_of(x).ok_or_else(|| Error::Domain(format!("point {x} lies in no neighbourhood U_h")))
    }

    /// Index h with x in B_h.
    pub fn enlargement_of(&self, x: f64) -> Option<usize> {
        self.enlargements.iter().position(|&(lo, hi)| x >= lo && x <= hi)
    }

    pub fn in_b(&self, x: f64) -> bool {
        self.enlargement_of(x).is_some()
    }

    pub fn in_b_delta(&self, x: f64) -> bool {
        self.enlargements.iter().any(|&(lo, hi)| x >= lo + self.delta && x <= hi - self.delta)
    }

    pub fn cut_of(&self, x: f64) -> Option<usize> {
        self.cuts.iter().position(|&(a, b)| x >= a && x <= b)
    }

    /// σ_h(z) = sqrt(z - α_{h,-}) sqrt(z - α_{h,+}) with principal roots;
    /// analytic off A_h and ~ z at infinity.
    pub fn sigma_h(&self, h: usize, z: Complex64) -> Complex64 {
        let (a, b) = self.cuts[h];
        (z - a).sqrt() * (z - b).sqrt()
    }

    /// σ(z) = Π_h σ_h(z), ~ z^{g+1} at infinity.
    pub fn sigma(&self, z: Complex64) -> Complex64 {
        (0..self.cuts.len()).map(|h| self.sigma_h(h, z)).product()
    }

    /// Π_{h' ≠ h} σ_{h'}(x) for real x; real-valued off the other cuts.
    pub fn sigma_others_real(&self, h: usize, x: f64) -> f64 {
        let mut p = 1.0;
        for (k, &(a, b)) in self.cuts.iter().enumerate() {
            if k == h {
                continue;
            }
            let mag = ((x - a).abs() * (x - b).abs()).sqrt();
            p *= if x < a { -mag } else { mag };
        }
        p
    }

    /// Π_{h' ≠ h} |x - α_{h',-}|^{1/2} |x - α_{h',+}|^{1/2}.
    pub fn abs_sigma_others(&self, h: usize, x: f64) -> f64 {
        self.sigma_others_real(h, x).abs()
    }

    /// Sign relating the analytic factor S̃ of βG - V' = βπ S̃ σ to the
    /// positive density factor on cut h: S = spec_sign(h) · S̃.
    pub fn spec_sign(&self, h: usize) -> f64 {
        let right = self.genus() - h;
        if right % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cut() -> SupportGeometry {
        SupportGeometry::from_cuts(&[(-2.0, -1.0), (1.0, 2.5)], GeometryConfig::default()).unwrap()
    }

    #[test]
    fn nesting_invariants() {
        let g = two_cut();
        for h in 0..2 {
            let (a, b) = g.cuts[h];
            let (bl, br) = g.enlargements[h];
            let (ul, ur) = g.neighborhoods[h];
            assert!(ul < bl && bl < a && b < br && br < ur);
            assert!(bl + g.delta < a && b < br - g.delta);
        }
        assert_eq!(g.region_of(0.1), Some(1));
        assert_eq!(g.region_of(-0.1), Some(0));
        assert_eq!(g.region_of(100.0), None);
    }

    #[test]
    fn sigma_squares_to_edge_product() {
        let g = two_cut();
        for z in [Complex64::new(0.3, 0.7), Complex64::new(-3.0, -0.2), Complex64::new(1.5, 1e-3)] {
            let s = g.sigma(z);
            let p: Complex64 = g.cuts.iter().map(|&(a, b)| (z - a) * (z - b)).product();
            assert!((s * s - p).norm() < 1e-12 * p.norm());
        }
        // positive right of all cuts, ~ z^{g+1}
        let s = g.sigma(Complex64::new(1e6, 0.0));
        assert!(s.re > 0.0 && (s.re / 1e12 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn boundary_values_on_cuts_follow_parity() {
        let g = two_cut();
        // upper boundary value on cut 0 has Im sign (-1)^{g-h} = -1
        let s0 = g.sigma(Complex64::new(-1.5, 0.0));
        assert!(s0.im < 0.0 && s0.re.abs() < 1e-14);
        let s1 = g.sigma(Complex64::new(1.7, 0.0));
        assert!(s1.im > 0.0 && s1.re.abs() < 1e-14);
        let other = g.sigma_others_real(0, -1.5);
        assert!(other < 0.0);
    }

    #[test]
    fn rejects_merged_cuts() {
        assert!(SupportGeometry::from_cuts(&[(-1.0, 0.0), (0.0, 1.0)], GeometryConfig::default()).is_err());
        assert!(SupportGeometry::from_cuts(&[(1.0, 1.0)], GeometryConfig::default()).is_err());
    }
}
