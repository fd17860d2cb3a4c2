//! Cross-cut interaction W, the decoupled potential Ṽ and the interpolated
//! two-body potential T_t.

use crate::equilibrium::EquilibriumMeasure;
use crate::error::Result;
use crate::geometry::SupportGeometry;
use num_complex::Complex64;

/// W(x, y) = β log|x - y| for x, y in different neighbourhoods, 0 otherwise.
pub fn interaction_kernel(geom: &SupportGeometry, beta: f64, x: f64, y: f64) -> Result<f64> {
    let hx = geom.region_of_checked(x)?;
    let hy = geom.region_of_checked(y)?;
    Ok(if hx == hy { 0.0 } else { beta * (x - y).abs().ln() })
}

/// Analytic continuation of W to complex points of the neighbourhoods;
/// zero unless the two points lie over different U_h.
pub fn interaction_complex(geom: &SupportGeometry, beta: f64, x: Complex64, y: Complex64) -> Complex64 {
    let (hx, hy) = (geom.region_of(x.re), geom.region_of(y.re));
    if hx == hy {
        return Complex64::new(0.0, 0.0);
    }
    let d = if x.re > y.re { x - y } else { y - x };
    beta * d.ln()
}

/// ∫ W(x, y) dμ(y) for x in some U_h.
pub fn mean_interaction(mu: &EquilibriumMeasure, x: f64) -> f64 {
    let beta = mu.beta();
    let hx = mu.geometry.region_of(x);
    mu.quadrature_points().filter(|&(h, _, _)| Some(h) != hx).map(|(_, y, w)| w * beta * (x - y).abs().ln()).sum()
}

/// ∂_x ∫ W(x, y) dμ(y).
pub fn mean_interaction_deriv(mu: &EquilibriumMeasure, x: f64) -> f64 {
    let beta = mu.beta();
    let hx = mu.geometry.region_of(x);
    mu.quadrature_points().filter(|&(h, _, _)| Some(h) != hx).map(|(_, y, w)| w * beta / (x - y)).sum()
}

pub(crate) fn decoupled_potential_unchecked(mu: &EquilibriumMeasure, x: f64) -> f64 {
    mu.potential.value(x) - mean_interaction(mu, x)
}

/// Ṽ(x) = V(x) - ∫ W(x, y) dμ(y).
pub fn decoupled_potential(mu: &EquilibriumMeasure, x: f64) -> Result<f64> {
    mu.geometry.region_of_checked(x)?;
    mu.potential.evaluate(x, 0)?;
    Ok(decoupled_potential_unchecked(mu, x))
}

/// Ṽ'(x).
pub fn decoupled_potential_deriv(mu: &EquilibriumMeasure, x: f64) -> f64 {
    mu.potential.deriv(x) - mean_interaction_deriv(mu, x)
}

/// T_t(x, y) = (1 - t) T_0(x, y) + t T_1(x, y) with T_0 = -(V(x) + V(y)) and
/// T_1 = -(Ṽ(x) + Ṽ(y) + W(x, y)).
pub fn two_body(mu: &EquilibriumMeasure, t: f64, x: f64, y: f64) -> Result<f64> {
    let p = &mu.potential;
    let t0 = -(p.evaluate(x, 0)? + p.evaluate(y, 0)?);
    if t == 0.0 {
        return Ok(t0);
    }
    let w = interaction_kernel(&mu.geometry, mu.beta(), x, y)?;
    let t1 = -(decoupled_potential(mu, x)? + decoupled_potential(mu, y)? + w);
    Ok((1.0 - t) * t0 + t * t1)
}

/// ∂_1 T_t(x, y) for x ≠ y.
pub fn two_body_d1(mu: &EquilibriumMeasure, t: f64, x: f64, y: f64) -> f64 {
    let v1 = mu.potential.deriv(x);
    if t == 0.0 {
        return -v1;
    }
    let same = mu.geometry.region_of(x) == mu.geometry.region_of(y);
    let dw = if same { 0.0 } else { mu.beta() / (x - y) };
    -(1.0 - t) * v1 - t * (decoupled_potential_deriv(mu, x) + dw)
}
