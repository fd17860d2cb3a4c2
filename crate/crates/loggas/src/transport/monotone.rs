//! Monotone transport Φ = F_target⁻¹ ∘ F_source between one-cut measures.

use crate::cheb::ChebGrid;
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneMap {
    /// Grid on the source support.
    pub grid: ChebGrid,
    pub source_cdf: Vec<f64>,
    /// Target CDF at Φ(grid); equals `source_cdf` up to the inversion error.
    pub target_cdf: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

impl MonotoneMap {
    pub fn eval(&self, x: f64) -> f64 {
        self.grid.eval(&self.phi, x.clamp(self.grid.a, self.grid.b))
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.grid.eval(&self.dphi, x.clamp(self.grid.a, self.grid.b))
    }

    /// Φ' at the left end of the source support.
    pub fn left_slope(&self) -> f64 {
        self.dphi[0]
    }

    pub fn right_slope(&self) -> f64 {
        *self.dphi.last().unwrap()
    }

    pub fn is_increasing(&self) -> bool {
        self.phi.windows(2).all(|w| w[1] > w[0])
    }
}

const DEGREE: usize = 128;

fn build(
    (sa, sb): (f64, f64),
    (ta, tb): (f64, f64),
    src_cdf: impl Fn(f64) -> f64,
    src_density: impl Fn(f64) -> f64,
    src_edges: (f64, f64),
    tgt_cdf: impl Fn(f64) -> f64,
    tgt_quantile: impl Fn(f64) -> f64,
    tgt_density: impl Fn(f64) -> f64,
    tgt_edges: (f64, f64),
) -> Result<MonotoneMap> {
    let grid = ChebGrid::new(sa, sb, DEGREE);
    let m = grid.len();
    let mut source_cdf = Vec::with_capacity(m);
    let mut target_cdf = Vec::with_capacity(m);
    let mut phi = Vec::with_capacity(m);
    let mut dphi = Vec::with_capacity(m);
    for (j, &x) in grid.nodes.iter().enumerate() {
        let p = if j == 0 {
            0.0
        } else if j == m - 1 {
            1.0
        } else {
            src_cdf(x)
        };
        let y = if j == 0 {
            ta
        } else if j == m - 1 {
            tb
        } else {
            tgt_quantile(p)
        };
        source_cdf.push(p);
        target_cdf.push(tgt_cdf(y));
        phi.push(y);
        let d = if j == 0 {
            (src_edges.0 / tgt_edges.0).powf(2.0 / 3.0)
        } else if j == m - 1 {
            (src_edges.1 / tgt_edges.1).powf(2.0 / 3.0)
        } else {
            let rt = tgt_density(y);
            if !(rt > 0.0) {
                return Err(Error::Solver { message: format!("target density vanishes at {y}"), residual: rt });
            }
            src_density(x) / rt
        };
        dphi.push(d);
    }
    Ok(MonotoneMap { grid, source_cdf, target_cdf, phi, dphi })
}

/// Φ from the one-cut `source` to the one-cut `target`.
pub fn monotone_transport(source: &EquilibriumMeasure, target: &EquilibriumMeasure) -> Result<MonotoneMap> {
    if target.cut_count() != 1 {
        return Err(Error::Argument("target must be a one-cut measure".into()));
    }
    monotone_transport_to_cut(source, target, 0)
}

/// Φ from the one-cut `source` to the normalized component μ^{ε,h} of `target`.
pub fn monotone_transport_to_cut(source: &EquilibriumMeasure, target: &EquilibriumMeasure, h: usize) -> Result<MonotoneMap> {
    if source.cut_count() != 1 {
        return Err(Error::Argument("source must be a one-cut measure".into()));
    }
    if h >= target.cut_count() {
        return Err(Error::Argument(format!("target has no cut {h}")));
    }
    let eh = target.eps[h];
    build(
        source.geometry.cuts[0],
        target.geometry.cuts[h],
        |x| source.cut_cdf(0, x),
        |x| source.cut_density(0, x),
        (source.edge_coefficient(0, false), source.edge_coefficient(0, true)),
        |y| target.cut_cdf(h, y),
        |p| target.cut_quantile(h, p),
        |y| target.cut_density(h, y),
        (target.edge_coefficient(h, false) / eh, target.edge_coefficient(h, true) / eh),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gaussian_measure, quartic_two_cut_measure, solve_equilibrium};
    use crate::potentials::Potential;

    #[test]
    fn identity_map() {
        let g = gaussian_measure(2.0).unwrap();
        let m = monotone_transport(&g, &g).unwrap();
        for x in [-2.0, -1.3, 0.0, 0.7, 2.0] {
            assert!((m.eval(x) - x).abs() < 1e-10);
            assert!((m.deriv(x) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn affine_target() {
        let g = gaussian_measure(2.0).unwrap();
        // V = x²/(2 s²) at β = 2 has semicircle on [-2s, 2s]
        let s = 1.5;
        let p = Potential::polynomial(2.0, vec![0.0, 0.0, 0.5 / (s * s)]).unwrap();
        let t = solve_equilibrium(&p, None, 1, &[(-2.5, 2.5)], &Default::default()).unwrap();
        let m = monotone_transport(&g, &t).unwrap();
        for x in [-1.9, -0.2, 1.1] {
            assert!((m.eval(x) - s * x).abs() < 1e-9);
            assert!((m.deriv(x) - s).abs() < 1e-8);
        }
        assert!((m.left_slope() - s).abs() < 1e-8);
    }

    #[test]
    fn two_cut_component_edge_slope_matches_finite_differences() {
        let g = gaussian_measure(2.0).unwrap();
        let mu = quartic_two_cut_measure().unwrap();
        let m = monotone_transport_to_cut(&g, &mu, 1).unwrap();
        assert!(m.is_increasing());
        assert!((m.eval(-2.0) - mu.geometry.cuts[1].0).abs() < 1e-12);
        let h = 1e-4;
        let fd = (-m.eval(-2.0 + 2.0 * h) + 4.0 * m.eval(-2.0 + h) - 3.0 * m.eval(-2.0)) / (2.0 * h);
        assert!((fd - m.left_slope()).abs() < 1e-5 * m.left_slope(), "{fd} {}", m.left_slope());
        for (p, q) in m.source_cdf.iter().zip(&m.target_cdf) {
            assert!((p - q).abs() < 1e-8);
        }
        // Φ' from the density ratio agrees with the derivative of Φ's interpolant
        let d = m.grid.differentiate(&m.phi);
        for (a, b) in d.iter().zip(&m.dphi) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0));
        }
    }
}
