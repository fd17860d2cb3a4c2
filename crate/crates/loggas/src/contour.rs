//! Per-cut elliptic contours and trapezoid-rule nodes.

use crate::error::{Error, Result};
use crate::geometry::SupportGeometry;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: f64,
    /// Semi-axis along the real line.
    pub rx: f64,
    /// Semi-axis along the imaginary direction.
    pub ry: f64,
}

impl Ellipse {
    pub fn point(&self, theta: f64) -> Complex64 {
        Complex64::new(self.center + self.rx * theta.cos(), self.ry * theta.sin())
    }

    /// Counter-clockwise trapezoid nodes ξ_j and weights dξ_j.
    pub fn nodes(&self, n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut xi = Vec::with_capacity(n);
        let mut dxi = Vec::with_capacity(n);
        let h = 2.0 * PI / n as f64;
        for j in 0..n {
            let th = j as f64 * h;
            xi.push(self.point(th));
            dxi.push(Complex64::new(-self.rx * th.sin(), self.ry * th.cos()) * h);
        }
        (xi, dxi)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let u = (z.re - self.center) / self.rx;
        let v = z.im / self.ry;
        u * u + v * v < 1.0
    }

    /// Rough arc length between consecutive nodes.
    pub fn node_spacing(&self, n: usize) -> f64 {
        let (a, b) = (self.rx, self.ry);
        let perimeter = PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt());
        perimeter / n as f64
    }

    pub fn scaled(&self, factor: f64) -> Ellipse {
        Ellipse { center: self.center, rx: self.rx * factor, ry: self.ry * factor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub ellipses: Vec<Ellipse>,
    pub nodes: usize,
}

impl ContourSpec {
    /// Default contours: real semi-axis 1.5× the cut half-length, imaginary
    /// semi-axis 0.5×, shrunk if needed so the ellipse stays inside U_h.
    pub fn default_for(geom: &SupportGeometry, nodes: usize) -> Result<Self> {
        Self::with_factors(geom, nodes, 1.5, 0.5)
    }

    pub fn with_factors(geom: &SupportGeometry, nodes: usize, fx: f64, fy: f64) -> Result<Self> {
        if nodes < 64 || nodes % 2 != 0 {
            return Err(Error::Argument(format!("contour nodes must be even and >= 64, got {nodes}")));
        }
        let mut ellipses = Vec::with_capacity(geom.cut_count());
        for h in 0..geom.cut_count() {
            let (a, b) = geom.cuts[h];
            let center = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let (ulo, uhi) = geom.neighborhoods[h];
            let room = 0.9 * (center - ulo).min(uhi - center);
            let rx = (fx * half).min(room);
            let (blo, bhi) = geom.enlargements[h];
            let need = (center - blo).max(bhi - center);
            if rx <= need {
                return Err(Error::Geometry(format!("contour for cut {h} cannot enclose B_h inside U_h")));
            }
            ellipses.push(Ellipse { center, rx, ry: fy * half });
        }
        let spec = ContourSpec { ellipses, nodes };
        spec.validate(geom)?;
        Ok(spec)
    }

    pub fn validate(&self, geom: &SupportGeometry) -> Result<()> {
        if self.ellipses.len() != geom.cut_count() {
            return Err(Error::Geometry("one ellipse per cut is required".into()));
        }
        for (h, e) in self.ellipses.iter().enumerate() {
            let (a, b) = geom.cuts[h];
            let (ulo, uhi) = geom.neighborhoods[h];
            if !(e.center - e.rx < a && e.center + e.rx > b) {
                return Err(Error::Geometry(format!("ellipse {h} does not enclose its cut")));
            }
            if !(e.center - e.rx > ulo && e.center + e.rx < uhi) {
                return Err(Error::Geometry(format!("ellipse {h} leaves U_{h}")));
            }
            if e.ry <= 0.0 {
                return Err(Error::Geometry(format!("ellipse {h} is flat")));
            }
        }
        Ok(())
    }

    pub fn with_nodes(&self, nodes: usize) -> Self {
        ContourSpec { ellipses: self.ellipses.clone(), nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryConfig;

    #[test]
    fn trapezoid_is_exact_for_residues() {
        let e = Ellipse { center: 0.3, rx: 1.2, ry: 0.4 };
        let (xi, dxi) = e.nodes(128);
        let z0 = Complex64::new(0.5, 0.05);
        let s: Complex64 = xi.iter().zip(&dxi).map(|(x, d)| d / (x - z0)).sum();
        assert!((s - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn default_contours_are_valid() {
        let g = SupportGeometry::from_cuts(&[(-1.8, -0.8), (0.8, 1.8)], GeometryConfig::default()).unwrap();
        let c = ContourSpec::default_for(&g, 256).unwrap();
        assert_eq!(c.ellipses.len(), 2);
        assert!(ContourSpec::default_for(&g, 63).is_err());
    }
}
