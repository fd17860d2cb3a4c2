//! Quadrature rules used throughout the crate.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let pm1 = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (z * p - pm1) / (z * z - 1.0);
    (p, d)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|u| mid + half * u).collect(), w.iter().map(|v| v * half).collect())
}

/// Gauss–Chebyshev rule of the second kind on [a, b]: returns nodes y_k and
/// weights w_k with `sum w_k g(y_k) ≈ ∫ g(y) sqrt((y-a)(b-y)) dy`.
pub fn gauss_chebyshev2_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 1..=n {
        let th = k as f64 * PI / (n as f64 + 1.0);
        // ascending order
        nodes.push(mid - half * th.cos());
        weights.push(half * half * PI / (n as f64 + 1.0) * th.sin().powi(2));
    }
    (nodes, weights)
}

/// Double-exponential (tanh–sinh) quadrature of `f` over [a, b].
///
/// The integrand is handed the abscissa together with its distances to `a`
/// and `b`, computed without cancellation, so endpoint singularities such as
/// `log(x - a)` stay accurate.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let tmax = 4.0;
    let eval = |t: f64| -> f64 {
        let s = 0.5 * PI * t.sinh();
        let cosh_s = s.cosh();
        let w = 0.5 * PI * t.cosh() / (cosh_s * cosh_s);
        // 1 - tanh(s) and 1 + tanh(s) without cancellation
        let e = (-2.0 * s.abs()).exp();
        let small = 2.0 * e / (1.0 + e);
        let (da, db) = if s >= 0.0 { (half * (2.0 - small), half * small) } else { (half * small, half * (2.0 - small)) };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if da < db { a + da } else { b - db };
        let v = f(x, da, db);
        if v.is_finite() {
            v * w * half
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..8 {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while k as f64 * h <= tmax {
            let t = k as f64 * h;
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        let next = sum * h;
        let converged = (next - estimate).abs() <= tol * next.abs().max(1.0);
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_on(10, -1.0, 3.0);
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
        let exact = (3f64.powi(20) - 1.0) / 20.0;
        assert!((got - exact).abs() / exact < 1e-13);
    }

    #[test]
    fn chebyshev_second_kind_semicircle_mass() {
        let (_, w) = gauss_chebyshev2_on(16, -2.0, 2.0);
        let mass: f64 = w.iter().sum::<f64>() / (2.0 * PI);
        assert!((mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_log_endpoint() {
        // ∫_0^1 log(x) dx = -1
        let v = tanh_sinh(|_, da, _| da.ln(), 0.0, 1.0, 1e-14);
        assert!((v + 1.0).abs() < 1e-12, "{v}");
        // ∫_0^1 1/sqrt(1-x) dx = 2
        let v = tanh_sinh(|_, _, db| 1.0 / db.sqrt(), 0.0, 1.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-10, "{v}");
    }
}
