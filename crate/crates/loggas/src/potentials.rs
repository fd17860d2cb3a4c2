//! Analytic confining potentials.
//!
//! A [`Potential`] is a finite sum of closed-form analytic terms, evaluated at
//! real or complex points together with its derivatives.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One closed-form analytic term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    /// Σ c_k x^k.
    Polynomial { coefficients: Vec<f64> },
    /// coef · log(1 + x²), analytic in the strip |Im x| < 1.
    Log1pSquare { coef: f64 },
    /// coef · cosh(rate · x).
    Cosh { coef: f64, rate: f64 },
}

const LOG1P_SQUARE_MAX_ORDER: usize = 4;

impl Term {
    fn max_order(&self) -> Option<usize> {
        match self {
            Term::Polynomial { .. } | Term::Cosh { .. } => None,
            Term::Log1pSquare { .. } => Some(LOG1P_SQUARE_MAX_ORDER),
        }
    }

    fn eval(&self, z: Complex64, order: usize) -> Complex64 {
        match self {
            Term::Polynomial { coefficients } => poly_derivative(coefficients, z, order),
            Term::Log1pSquare { coef } => {
                let q = Complex64::new(1.0, 0.0) + z * z;
                let v = match order {
                    0 => q.ln(),
                    1 => 2.0 * z / q,
                    2 => 2.0 * (1.0 - z * z) / (q * q),
                    3 => 4.0 * z * (z * z - 3.0) / (q * q * q),
                    4 => -12.0 * (z.powi(4) - 6.0 * z * z + 1.0) / (q * q * q * q),
                    _ => unreachable!("order checked by caller"),
                };
                *coef * v
            }
            Term::Cosh { coef, rate } => {
                let arg = *rate * z;
                let base = if order % 2 == 0 { arg.cosh() } else { arg.sinh() };
                *coef * rate.powi(order as i32) * base
            }
        }
    }
}

fn poly_derivative(c: &[f64], z: Complex64, order: usize) -> Complex64 {
    if order >= c.len() {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (order..c.len()).rev() {
        // falling factorial k (k-1) ... (k-order+1)
        let mut f = 1.0;
        for j in 0..order {
            f *= (k - j) as f64;
        }
        acc = acc * z + c[k] * f;
    }
    acc
}

/// A closed interval bound that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Finite(f64),
    Named(InfName),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfName {
    #[serde(rename = "-inf")]
    NegInf,
    #[serde(rename = "inf")]
    PosInf,
}

impl Bound {
    pub fn value(self) -> f64 {
        match self {
            Bound::Finite(v) => v,
            Bound::Named(InfName::NegInf) => f64::NEG_INFINITY,
            Bound::Named(InfName::PosInf) => f64::INFINITY,
        }
    }

    pub fn from_value(v: f64) -> Bound {
        if v == f64::NEG_INFINITY {
            Bound::Named(InfName::NegInf)
        } else if v == f64::INFINITY {
            Bound::Named(InfName::PosInf)
        } else {
            Bound::Finite(v)
        }
    }
}

/// JSON form of a potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Polynomial {
        beta: f64,
        coefficients: Vec<f64>,
        #[serde(default = "whole_line")]
        domain: Vec<[Bound; 2]>,
        #[serde(default, skip_serializing_if = "is_zero")]
        shift: f64,
    },
    Terms {
        beta: f64,
        terms: Vec<Term>,
        #[serde(default = "whole_line")]
        domain: Vec<[Bound; 2]>,
        #[serde(default, skip_serializing_if = "is_zero")]
        shift: f64,
    },
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn whole_line() -> Vec<[Bound; 2]> {
    vec![[Bound::Named(InfName::NegInf), Bound::Named(InfName::PosInf)]]
}

/// Analytic one-body potential V with inverse temperature β and domain 𝒜.
///
/// `V(x) = Σ terms(x - shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub beta: f64,
    pub terms: Vec<Term>,
    pub domain: Vec<(f64, f64)>,
    pub shift: f64,
}

impl Potential {
    pub fn new(beta: f64, terms: Vec<Term>, domain: Vec<(f64, f64)>) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Argument(format!("beta must be positive, got {beta}")));
        }
        if terms.is_empty() {
            return Err(Error::Argument("potential needs at least one term".into()));
        }
        for t in &terms {
            let ok = match t {
                Term::Polynomial { coefficients } => coefficients.iter().all(|c| c.is_finite()),
                Term::Log1pSquare { coef } => coef.is_finite(),
                Term::Cosh { coef, rate } => coef.is_finite() && rate.is_finite(),
            };
            if !ok {
                return Err(Error::Argument("non-finite term parameter".into()));
            }
        }
        if domain.is_empty() {
            return Err(Error::Argument("empty domain".into()));
        }
        for (i, &(a, b)) in domain.iter().enumerate() {
            if a.is_nan() || b.is_nan() || a >= b {
                return Err(Error::Argument(format!("bad domain interval [{a}, {b}]")));
            }
            if i > 0 && domain[i - 1].1 >= a {
                return Err(Error::Argument("domain intervals must be disjoint and ordered".into()));
            }
        }
        Ok(Potential { beta, terms, domain, shift: 0.0 })
    }

    pub fn polynomial(beta: f64, coefficients: Vec<f64>) -> Result<Self> {
        Self::new(beta, vec![Term::Polynomial { coefficients }], vec![(f64::NEG_INFINITY, f64::INFINITY)])
    }

    /// G(λ) = βλ²/4, whose equilibrium measure is the semicircle on [-2, 2].
    pub fn gaussian(beta: f64) -> Result<Self> {
        Self::polynomial(beta, vec![0.0, 0.0, beta / 4.0])
    }

    /// The canonical two-cut example: V(x) = x⁴/4 − x² at β = 1.
    ///
    /// Its equilibrium measure is supported on [-a, -b] ∪ [b, a] with
    /// a = 2cos(π/8), b = 2sin(π/8).
    pub fn quartic_two_cut() -> Self {
        Self::polynomial(1.0, vec![0.0, 0.0, -1.0, 0.0, 0.25]).expect("valid constants")
    }

    /// The same potential translated by `s`: `x ↦ V(x - s)`.
    pub fn shifted(&self, s: f64) -> Self {
        let mut p = self.clone();
        p.shift += s;
        p.domain = p.domain.iter().map(|&(a, b)| (a + s, b + s)).collect();
        p
    }

    pub fn max_order(&self) -> Option<usize> {
        self.terms.iter().filter_map(Term::max_order).min()
    }

    pub fn in_domain(&self, x: f64) -> bool {
        self.domain.iter().any(|&(a, b)| x >= a && x <= b)
    }

    /// Order-th derivative at a real point.
    pub fn evaluate(&self, x: f64, order: usize) -> Result<f64> {
        if !self.in_domain(x) {
            return Err(Error::Domain(format!("x = {x} lies outside the potential's domain")));
        }
        self.check_order(order)?;
        Ok(self.eval_unchecked(Complex64::new(x, 0.0), order).re)
    }

    /// Order-th derivative at a complex point (analytic continuation).
    pub fn evaluate_complex(&self, z: Complex64, order: usize) -> Result<Complex64> {
        self.check_order(order)?;
        Ok(self.eval_unchecked(z, order))
    }

    fn check_order(&self, order: usize) -> Result<()> {
        match self.max_order() {
            Some(m) if order > m => Err(Error::Capability(format!("derivative order {order} exceeds supported maximum {m}"))),
            _ => Ok(()),
        }
    }

    /// Fast path for internal use where the domain and order are known valid.
    pub(crate) fn eval_unchecked(&self, z: Complex64, order: usize) -> Complex64 {
        let w = z - self.shift;
        self.terms.iter().map(|t| t.eval(w, order)).sum()
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        self.eval_unchecked(Complex64::new(x, 0.0), 0).re
    }

    pub(crate) fn deriv(&self, x: f64) -> f64 {
        self.eval_unchecked(Complex64::new(x, 0.0), 1).re
    }

    fn as_single_polynomial(&self) -> Option<Vec<f64>> {
        let mut acc: Vec<f64> = Vec::new();
        for t in &self.terms {
            match t {
                Term::Polynomial { coefficients } => {
                    if coefficients.len() > acc.len() {
                        acc.resize(coefficients.len(), 0.0);
                    }
                    for (a, c) in acc.iter_mut().zip(coefficients) {
                        *a += c;
                    }
                }
                _ => return None,
            }
        }
        Some(acc)
    }

    /// Growth hypothesis: liminf V(x)/(β log|x|) > 1 along every unbounded
    /// end of the domain.
    ///
    /// Polynomials are decided by degree and the sign of the leading
    /// coefficient. Other sums use an asymptotic-ratio test: the ratio is
    /// sampled at |x| = 1e50 and 1e100 and must exceed 1 + 1e-9 at the far
    /// point without decreasing between the two samples.
    pub fn confinement_check(&self) -> bool {
        let left = self.domain.first().map(|d| d.0 == f64::NEG_INFINITY).unwrap_or(false);
        let right = self.domain.last().map(|d| d.1 == f64::INFINITY).unwrap_or(false);
        if !left && !right {
            return true;
        }
        if let Some(c) = self.as_single_polynomial() {
            let deg = match c.iter().rposition(|&v| v != 0.0) {
                Some(d) if d >= 1 => d,
                _ => return false,
            };
            let lead = c[deg];
            let right_ok = lead > 0.0;
            let left_ok = if deg % 2 == 0 { lead > 0.0 } else { lead < 0.0 };
            return (!right || right_ok) && (!left || left_ok);
        }
        let ratio = |x: f64| -> f64 {
            let v = self.value(x);
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            v / (self.beta * x.abs().ln())
        };
        let side_ok = |sign: f64| -> bool {
            let near = ratio(sign * 1e50);
            let far = ratio(sign * 1e100);
            if far.is_nan() || near.is_nan() {
                return false;
            }
            far > 1.0 + 1e-9 && far >= near - 1e-9
        };
        (!right || side_ok(1.0)) && (!left || side_ok(-1.0))
    }

    pub fn to_spec(&self) -> PotentialSpec {
        let domain = self.domain.iter().map(|&(a, b)| [Bound::from_value(a), Bound::from_value(b)]).collect();
        match self.terms.as_slice() {
            [Term::Polynomial { coefficients }] => {
                PotentialSpec::Polynomial { beta: self.beta, coefficients: coefficients.clone(), domain, shift: self.shift }
            }
            _ => PotentialSpec::Terms { beta: self.beta, terms: self.terms.clone(), domain, shift: self.shift },
        }
    }

    pub fn from_spec(spec: PotentialSpec) -> Result<Self> {
        let (beta, terms, domain, shift) = match spec {
            PotentialSpec::Polynomial { beta, coefficients, domain, shift } => {
                (beta, vec![Term::Polynomial { coefficients }], domain, shift)
            }
            PotentialSpec::Terms { beta, terms, domain, shift } => (beta, terms, domain, shift),
        };
        let domain = domain.iter().map(|[a, b]| (a.value(), b.value())).collect();
        let mut p = Potential::new(beta, terms, domain)?;
        p.shift = shift;
        Ok(p)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("potential serializes")
    }
}

impl Serialize for Potential {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Potential {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = PotentialSpec::deserialize(d)?;
        Potential::from_spec(spec).map_err(serde::de::Error::custom)
    }
}
