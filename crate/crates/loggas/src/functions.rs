//! Test functions: real functions with optional derivatives, functions
//! analytic near the support, and the plateau window.

use crate::geometry::SupportGeometry;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A real function on (part of) the line.
pub trait RealFunction: Sync {
    fn value(&self, x: f64) -> f64;
    /// f'(x) if available.
    fn deriv(&self, _x: f64) -> Option<f64> {
        None
    }
}

/// A function analytic on a neighbourhood of the cuts, real on the real
/// axis.
pub trait AnalyticFunction: Sync {
    fn eval(&self, z: Complex64) -> Complex64;
}

/// Polynomial Σ c_k x^k.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }
}

impl RealFunction for Poly {
    fn value(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
    fn deriv(&self, x: f64) -> Option<f64> {
        Some(self.derivative().value(x))
    }
}

impl AnalyticFunction for Poly {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_c(z)
    }
}

/// Wraps a closure analytic near the cuts. Real values and derivatives come
/// from the complex extension (complex-step differentiation).
pub struct Analytic<F>(pub F);

impl<F: Fn(Complex64) -> Complex64 + Sync> AnalyticFunction for Analytic<F> {
    fn eval(&self, z: Complex64) -> Complex64 {
        (self.0)(z)
    }
}

impl<F: Fn(Complex64) -> Complex64 + Sync> RealFunction for Analytic<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(Complex64::new(x, 0.0)).re
    }
    fn deriv(&self, x: f64) -> Option<f64> {
        let h = 1e-30;
        Some((self.0)(Complex64::new(x, h)).im / h)
    }
}

/// Real closure with a derivative closure.
pub struct WithDeriv<F, D>(pub F, pub D);

impl<F: Fn(f64) -> f64 + Sync, D: Fn(f64) -> f64 + Sync> RealFunction for WithDeriv<F, D> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
    fn deriv(&self, x: f64) -> Option<f64> {
        Some((self.1)(x))
    }
}

/// Real closure without derivative information.
pub struct ValueOnly<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> RealFunction for ValueOnly<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

fn psi(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn psi_d(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        psi(s) / (s * s)
    }
}

/// C^∞ step: 0 for s ≤ 0, 1 for s ≥ 1.
pub fn smooth_step(s: f64) -> f64 {
    let (a, b) = (psi(s), psi(1.0 - s));
    a / (a + b)
}

pub fn smooth_step_deriv(s: f64) -> f64 {
    let (a, b) = (psi(s), psi(1.0 - s));
    let d = a + b;
    (psi_d(s) * b + a * psi_d(1.0 - s)) / (d * d)
}

/// Plateau window: 1 on B^δ, 0 outside B, C^∞ in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    windows: Vec<(f64, f64)>,
    delta: f64,
}

impl Plateau {
    pub fn new(geom: &SupportGeometry) -> Self {
        Plateau { windows: geom.enlargements.clone(), delta: geom.delta }
    }

    pub fn window(&self, x: f64) -> f64 {
        for &(lo, hi) in &self.windows {
            if x >= lo && x <= hi {
                return smooth_step((x - lo) / self.delta) * smooth_step((hi - x) / self.delta);
            }
        }
        0.0
    }

    pub fn window_deriv(&self, x: f64) -> f64 {
        for &(lo, hi) in &self.windows {
            if x >= lo && x <= hi {
                let (l, r) = ((x - lo) / self.delta, (hi - x) / self.delta);
                return (smooth_step_deriv(l) * smooth_step(r) - smooth_step(l) * smooth_step_deriv(r)) / self.delta;
            }
        }
        0.0
    }
}

/// Υ(f) on sample points: f times the plateau window.
pub fn plateau(values: &[f64], xs: &[f64], geom: &SupportGeometry) -> Vec<f64> {
    let w = Plateau::new(geom);
    values.iter().zip(xs).map(|(v, &x)| v * w.window(x)).collect()
}

/// Υ(f) as a function.
pub struct Truncated<'a, F: ?Sized> {
    pub f: &'a F,
    pub window: Plateau,
}

impl<'a, F: RealFunction + ?Sized> RealFunction for Truncated<'a, F> {
    fn value(&self, x: f64) -> f64 {
        let w = self.window.window(x);
        if w == 0.0 {
            0.0
        } else {
            w * self.f.value(x)
        }
    }
    fn deriv(&self, x: f64) -> Option<f64> {
        let w = self.window.window(x);
        if w == 0.0 {
            return Some(0.0);
        }
        Some(w * self.f.deriv(x)? + self.window.window_deriv(x) * self.f.value(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryConfig;

    #[test]
    fn plateau_window_shape() {
        let g = SupportGeometry::from_cuts(&[(-2.0, -1.0), (1.0, 2.0)], GeometryConfig::default()).unwrap();
        let p = Plateau::new(&g);
        let (lo, hi) = g.enlargements[1];
        assert_eq!(p.window(lo + g.delta), 1.0);
        assert_eq!(p.window(1.5), 1.0);
        assert_eq!(p.window(0.0), 0.0);
        assert_eq!(p.window(hi + 1e-9), 0.0);
        let mut prev = 0.0;
        for k in 0..=100 {
            let x = lo + g.delta * k as f64 / 100.0;
            let w = p.window(x);
            assert!(w >= prev);
            prev = w;
        }
        let x = lo + 0.3 * g.delta;
        let fd = (p.window(x + 1e-7) - p.window(x - 1e-7)) / 2e-7;
        assert!((fd - p.window_deriv(x)).abs() < 1e-5 * fd.abs().max(1.0));
    }

    #[test]
    fn complex_step_derivative() {
        let f = Analytic(|z: Complex64| z.sin() * z);
        let x: f64 = 0.7;
        assert!((f.deriv(x).unwrap() - (x.cos() * x + x.sin())).abs() < 1e-15);
        let p = Poly(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.value(2.0), 9.0);
        assert_eq!(p.deriv(2.0), Some(10.0));
    }
}
