//! The master operator Ξ of the loop equations and its contour-integral
//! inverse.
//!
//! For x in B_h,
//! `Ξf(x) = ∫ [β (f(x) - f(y))/(x - y) + ∂_1 T_t(x, y) f(x) + ∂_2 T_t(x, y) f(y)] dμ(y)`.
//! Splitting off the other cuts, `Ξf = D_h f + (1 - t) K f + c_t(f)` where
//! `D_h` only sees cut h and is inverted in closed form; the cross-cut part
//! K is handled by solving a small linear system on the quadrature nodes.

use crate::contour::ContourSpec;
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::functions::{AnalyticFunction, RealFunction};
use crate::interaction::decoupled_potential_deriv;
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone)]
struct CutData {
    xi: Vec<Complex64>,
    /// iσ_h(ξ_j) dξ_j.
    isd: Vec<Complex64>,
    theta: Matrix2<f64>,
    /// c¹ = Re(γ · K̃), c² = Re(η · K̃).
    gamma: Vec<Complex64>,
    eta: Vec<Complex64>,
    spacing: f64,
}

/// Everything Ξ and its inverse need for a fixed measure and t.
#[derive(Debug, Clone)]
pub struct XiContext {
    pub mu: EquilibriumMeasure,
    pub t: f64,
    pub contours: ContourSpec,
    cuts: Vec<CutData>,
    /// (cut, node, weight) of the μ-quadrature.
    quad: Vec<(usize, f64, f64)>,
    v1: Vec<f64>,
    vt1: Vec<f64>,
    /// Weights of c_t(f) = ∫ (-(1-t)V' - tṼ') f dμ on the quadrature nodes.
    ct: Vec<f64>,
    /// Evaluation rows at the quadrature nodes.
    rows: Vec<Vec<Complex64>>,
    coupling: Option<Coupling>,
}

impl XiContext {
    pub fn new(mu: &EquilibriumMeasure, t: f64) -> Result<Self> {
        Self::with_contours(mu, t, mu.contour.clone())
    }

    pub fn with_contours(mu: &EquilibriumMeasure, t: f64, contours: ContourSpec) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Argument(format!("t must lie in [0, 1], got {t}")));
        }
        contours.validate(&mu.geometry)?;
        let geom = &mu.geometry;
        let mut cuts = Vec::new();
        for (h, e) in contours.ellipses.iter().enumerate() {
            let (a, b) = geom.cuts[h];
            let (xi, dxi) = e.nodes(contours.nodes);
            let isd: Vec<Complex64> = xi.iter().zip(&dxi).map(|(&z, &d)| I * geom.sigma_h(h, z) * d).collect();
            let am: Vec<Complex64> = xi.iter().zip(&isd).map(|(&z, &s)| s / (z - a)).collect();
            let ap: Vec<Complex64> = xi.iter().zip(&isd).map(|(&z, &s)| s / (z - b)).collect();
            let ij_m: Complex64 = am.iter().sum();
            let ij_p: Complex64 = ap.iter().sum();
            let theta = Matrix2::new(ij_m.re, 1.0, ij_p.re, 1.0);
            let det = theta.determinant();
            if det.abs() < 1e-12 {
                return Err(Error::Geometry(format!("Θ system of cut {h} is singular (det = {det:e})")));
            }
            let inv = theta.try_inverse().expect("nonsingular");
            // Θ (c¹, c²) = (-iK_-, -iK_+) with iK_± = Σ isd K̃ / (ξ - α±)
            let gamma = am.iter().zip(&ap).map(|(m, p)| -(inv[(0, 0)] * m + inv[(0, 1)] * p)).collect();
            let eta = am.iter().zip(&ap).map(|(m, p)| -(inv[(1, 0)] * m + inv[(1, 1)] * p)).collect();
            cuts.push(CutData { xi, isd, theta, gamma, eta, spacing: e.node_spacing(contours.nodes) });
        }
        let quad: Vec<(usize, f64, f64)> = mu.quadrature_points().collect();
        let v1: Vec<f64> = quad.iter().map(|&(_, y, _)| mu.potential.deriv(y)).collect();
        let vt1: Vec<f64> = quad.iter().map(|&(_, y, _)| decoupled_potential_deriv(mu, y)).collect();
        let ct = quad.iter().enumerate().map(|(q, &(_, _, w))| w * (-(1.0 - t) * v1[q] - t * vt1[q])).collect();
        let mut ctx = XiContext { mu: mu.clone(), t, contours, cuts, quad, v1, vt1, ct, rows: Vec::new(), coupling: None };
        ctx.rows = ctx.quad.par_iter().map(|&(h, y, _)| ctx.eval_rows(h, y).0).collect();
        ctx.build_coupling()?;
        Ok(ctx)
    }

    pub fn beta(&self) -> f64 {
        self.mu.beta()
    }

    pub fn sigma(&self, z: Complex64) -> Complex64 {
        self.mu.geometry.sigma(z)
    }

    pub fn sigma_h(&self, h: usize, z: Complex64) -> Complex64 {
        self.mu.geometry.sigma_h(h, z)
    }

    /// Real Θ_h with rows (i∮σ_h/(ξ-α_{h,±}), 1).
    pub fn theta_matrix(&self, h: usize) -> [[f64; 2]; 2] {
        let t = &self.cuts[h].theta;
        [[t[(0, 0)], t[(0, 1)]], [t[(1, 0)], t[(1, 1)]]]
    }

    /// Solve Θ_h (c¹, c²) = targets.
    pub fn theta_solve(&self, h: usize, targets: (f64, f64)) -> Result<(f64, f64)> {
        let cut = self.cuts.get(h).ok_or_else(|| Error::Argument(format!("no cut {h}")))?;
        if cut.theta.determinant().abs() < 1e-12 {
            return Err(Error::Geometry(format!("Θ system of cut {h} is singular")));
        }
        let s = cut
            .theta
            .lu()
            .solve(&Vector2::new(targets.0, targets.1))
            .ok_or_else(|| Error::Geometry(format!("Θ system of cut {h} is singular")))?;
        Ok((s[0], s[1]))
    }

    /// μ-quadrature nodes as (cut, node, weight).
    pub fn quadrature(&self) -> &[(usize, f64, f64)] {
        &self.quad
    }

    /// ∂_1 T_t(x, y) for x ≠ y.
    fn d1t(&self, x: f64, hx: Option<usize>, vx: f64, vtx: f64, hy: usize, y: f64) -> f64 {
        let t = self.t;
        let dw = if hx != Some(hy) { self.beta() / (x - y) } else { 0.0 };
        -(1.0 - t) * vx - t * (vtx + dw)
    }

    /// ∂_2 T_t(x, y) at the quadrature node q.
    fn d2t(&self, x: f64, hx: Option<usize>, q: usize) -> f64 {
        let (hy, y, _) = self.quad[q];
        let t = self.t;
        let dw = if hx != Some(hy) { -self.beta() / (x - y) } else { 0.0 };
        -(1.0 - t) * self.v1[q] - t * (self.vt1[q] + dw)
    }

    /// Ξf at the points `xs`, by quadrature against μ.
    pub fn apply_xi(&self, f: &dyn RealFunction, xs: &[f64]) -> Result<Vec<f64>> {
        let fy: Vec<f64> = self.quad.iter().map(|&(_, y, _)| f.value(y)).collect();
        let scale = self.scale();
        xs.par_iter()
            .map(|&x| {
                let hx = self.mu.geometry.region_of(x);
                let fx = f.value(x);
                let vx = self.mu.potential.deriv(x);
                let vtx = if self.t > 0.0 { decoupled_potential_deriv(&self.mu, x) } else { 0.0 };
                let mut acc = 0.0;
                for (q, &(hy, y, w)) in self.quad.iter().enumerate() {
                    let d = x - y;
                    if d.abs() < 1e-7 * scale {
                        let (dx, dy) = match (f.deriv(x), f.deriv(y)) {
                            (Some(a), Some(b)) => (a, b),
                            _ => return Err(Error::Capability(format!("derivative needed at coincidence point {x}"))),
                        };
                        acc +=
                            w * (self.beta() * 0.5 * (dx + dy) + (-(1.0 - self.t) * vx - self.t * vtx) * fx + self.d2t(x, hx, q) * fy[q]);
                        continue;
                    }
                    acc += w * (self.beta() * (fx - fy[q]) / d + self.d1t(x, hx, vx, vtx, hy, y) * fx + self.d2t(x, hx, q) * fy[q]);
                }
                Ok(acc)
            })
            .collect()
    }

    fn scale(&self) -> f64 {
        let g = &self.mu.geometry;
        g.cuts[g.cut_count() - 1].1 - g.cuts[0].0
    }

    /// P(x) = Π_{h'≠h} σ_{h'}(x) · S̃(x) and its derivative, x real in U_h.
    fn p_factor(&self, h: usize, x: f64) -> (f64, f64) {
        let g = &self.mu.geometry;
        let so = g.sigma_others_real(h, x);
        let mut log_d = 0.0;
        for (k, &(a, b)) in g.cuts.iter().enumerate() {
            if k != h {
                log_d += 0.5 * (1.0 / (x - a) + 1.0 / (x - b));
            }
        }
        let z = Complex64::new(x, 0.0);
        let s = self.mu.s_analytic(z).re;
        let ds = self.mu.s_analytic_deriv(z).re;
        (so * s, so * s * log_d + so * ds)
    }

    fn check_resolution(&self, h: usize, x: f64) -> Result<()> {
        let cut = &self.cuts[h];
        let z = Complex64::new(x, 0.0);
        let dmin = cut.xi.iter().map(|&p| (p - z).norm()).fold(f64::INFINITY, f64::min);
        if dmin < cut.spacing {
            return Err(Error::Resolution(format!("x = {x} is within one node spacing of contour {h}")));
        }
        if !self.contours.ellipses[h].contains(z) {
            return Err(Error::Resolution(format!("x = {x} lies outside contour {h}")));
        }
        Ok(())
    }

    /// Linear maps from K̃ on contour h to f(x) and f'(x):
    /// f(x) = Re(row · K̃), f'(x) = Re(drow · K̃).
    pub(crate) fn eval_rows(&self, h: usize, x: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let cut = &self.cuts[h];
        let (a, b) = self.mu.geometry.cuts[h];
        let (alpha, other) = if (x - a).abs() <= (x - b).abs() { (a, b) } else { (b, a) };
        let (p, dp) = self.p_factor(h, x);
        let k = 2.0 * self.beta() * PI * PI;
        let m = k * (x - other) * p;
        let dm = k * (p + (x - other) * dp);
        let c: Vec<Complex64> = cut.xi.iter().zip(&cut.isd).map(|(&z, &s)| s / ((z - x) * (z - alpha))).collect();
        let dc: Vec<Complex64> = c.iter().zip(&cut.xi).map(|(&cj, &z)| cj / (z - x)).collect();
        let total: Complex64 = c.iter().sum();
        let dtotal: Complex64 = dc.iter().sum();
        let mut row = Vec::with_capacity(c.len());
        let mut drow = Vec::with_capacity(c.len());
        for j in 0..c.len() {
            let n = c[j] + total * cut.gamma[j];
            let dn = dc[j] + dtotal * cut.gamma[j];
            row.push(-n / m);
            drow.push(-(dn * m - n * dm) / (m * m));
        }
        (row, drow)
    }

    /// Precomputed evaluation rows for a fixed set of points.
    pub fn eval_plan(&self, xs: &[f64]) -> Result<EvalPlan> {
        let entries = xs
            .par_iter()
            .map(|&x| {
                let h = self.mu.geometry.region_of_checked(x)?;
                self.check_resolution(h, x)?;
                let (row, drow) = self.eval_rows(h, x);
                Ok((h, row, drow))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalPlan { entries })
    }

    fn build_coupling(&mut self) -> Result<()> {
        let ncut = self.mu.geometry.cut_count();
        if !(self.t < 1.0 && ncut > 1) {
            return Ok(());
        }
        let beta = self.beta();
        let nq = self.quad.len();
        // G_h[j][q] = -β w_q / (ξ_{h,j} - y_q) for y_q off cut h
        let g: Vec<Vec<Vec<Complex64>>> = self
            .cuts
            .iter()
            .enumerate()
            .map(|(h, cut)| {
                cut.xi
                    .iter()
                    .map(|&z| {
                        self.quad
                            .iter()
                            .map(|&(h2, y2, w2)| if h2 == h { Complex64::new(0.0, 0.0) } else { -beta * w2 / (z - y2) })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        // A = I + (1-t) Re(E G)
        let rows_eg: Vec<Vec<f64>> = self
            .quad
            .par_iter()
            .enumerate()
            .map(|(q, &(h, _, _))| {
                let row = &self.rows[q];
                (0..nq)
                    .map(|q2| {
                        if self.quad[q2].0 == h {
                            return 0.0;
                        }
                        row.iter().zip(&g[h]).map(|(r, gj)| r * gj[q2]).sum::<Complex64>().re
                    })
                    .collect()
            })
            .collect();
        let mut a = DMatrix::<f64>::identity(nq, nq);
        for q in 0..nq {
            for q2 in 0..nq {
                a[(q, q2)] += (1.0 - self.t) * rows_eg[q][q2];
            }
        }
        let lu = a.clone().lu();
        if lu.determinant().abs() < 1e-300 {
            return Err(Error::Solver { message: "cross-cut system for Ξ⁻¹ is singular".into(), residual: f64::NAN });
        }
        self.coupling = Some(Coupling { a, lu, g });
        Ok(())
    }

    fn contour_values(&self, k: &dyn AnalyticFunction) -> Vec<Vec<Complex64>> {
        self.cuts.iter().map(|c| c.xi.iter().map(|&z| k.eval(z)).collect()).collect()
    }

    /// Ξ⁻¹: f with Ξf = k + κ_h on B_h.
    pub fn invert_xi(&self, k: &dyn AnalyticFunction) -> Result<XiSolution<'_>> {
        self.invert_values(self.contour_values(k))
    }

    /// Ξ⁻¹ from the values of k at the contour nodes.
    pub(crate) fn invert_values(&self, kvals: Vec<Vec<Complex64>>) -> Result<XiSolution<'_>> {
        let ncut = self.mu.geometry.cut_count();
        let mut ktilde = kvals;
        let ek: Vec<f64> = self
            .quad
            .iter()
            .enumerate()
            .map(|(q, &(h, _, _))| self.rows[q].iter().zip(&ktilde[h]).map(|(r, kv)| r * kv).sum::<Complex64>().re)
            .collect();
        let u: Vec<f64> = match &self.coupling {
            Some(c) => {
                let u =
                    c.lu.solve(&DVector::from_vec(ek))
                        .ok_or(Error::Solver { message: "cross-cut system for Ξ⁻¹ is singular".into(), residual: f64::NAN })?;
                for h in 0..ncut {
                    for (j, gj) in c.g[h].iter().enumerate() {
                        let kf: Complex64 = gj.iter().zip(u.iter()).map(|(g, &uq)| g * uq).sum();
                        ktilde[h][j] -= (1.0 - self.t) * kf;
                    }
                }
                u.iter().cloned().collect()
            }
            None => ek,
        };
        let c1: Vec<f64> = (0..ncut).map(|h| self.cuts[h].gamma.iter().zip(&ktilde[h]).map(|(g, k)| g * k).sum::<Complex64>().re).collect();
        let c2: Vec<f64> = (0..ncut).map(|h| self.cuts[h].eta.iter().zip(&ktilde[h]).map(|(g, k)| g * k).sum::<Complex64>().re).collect();
        let ct: f64 = self.ct.iter().zip(&u).map(|(w, v)| w * v).sum();
        let kappa = c1.iter().map(|c| c + ct).collect();
        Ok(XiSolution { ctx: self, ktilde, c1, c2, kappa, node_values: u })
    }

    /// Weights ℓ with ∫ (Ξ⁻¹k)' dμ = Re Σ_{h,j} ℓ_{h,j} k(ξ_{h,j}).
    pub fn derivative_functional(&self) -> Vec<Vec<Complex64>> {
        let n = self.contours.nodes;
        let mut ell = vec![vec![Complex64::new(0.0, 0.0); n]; self.cuts.len()];
        let drows: Vec<Vec<Complex64>> = self.quad.par_iter().map(|&(h, y, _)| self.eval_rows(h, y).1).collect();
        for (q, &(h, _, w)) in self.quad.iter().enumerate() {
            for j in 0..n {
                ell[h][j] += w * drows[q][j];
            }
        }
        if let Some(c) = &self.coupling {
            let nq = self.quad.len();
            // d/du of -(1-t) Σ_q w_q Re(drow_q · (G u)_{h(q)})
            let mut wv = DVector::<f64>::zeros(nq);
            for (q, &(h, _, w)) in self.quad.iter().enumerate() {
                for q2 in 0..nq {
                    let s: Complex64 = drows[q].iter().zip(&c.g[h]).map(|(d, gj)| d * gj[q2]).sum();
                    wv[q2] += (1.0 - self.t) * w * s.re;
                }
            }
            let v = c.a.transpose().lu().solve(&wv).expect("coupling matrix is nonsingular");
            for (q, &(h, _, _)) in self.quad.iter().enumerate() {
                for j in 0..n {
                    ell[h][j] -= v[q] * self.rows[q][j];
                }
            }
        }
        ell
    }

    /// Contour nodes of cut h.
    pub fn contour_nodes(&self, h: usize) -> &[Complex64] {
        &self.cuts[h].xi
    }
}

/// Evaluation rows of Ξ⁻¹ solutions at fixed points.
#[derive(Debug, Clone)]
pub struct EvalPlan {
    entries: Vec<(usize, Vec<Complex64>, Vec<Complex64>)>,
}

#[derive(Debug, Clone)]
struct Coupling {
    a: DMatrix<f64>,
    lu: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    g: Vec<Vec<Vec<Complex64>>>,
}

/// Result of Ξ⁻¹: evaluable on each U_h inside its contour.
#[derive(Debug, Clone)]
pub struct XiSolution<'a> {
    ctx: &'a XiContext,
    ktilde: Vec<Vec<Complex64>>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    /// κ_h: Ξf = k + κ_h on B_h.
    pub kappa: Vec<f64>,
    /// f at the μ-quadrature nodes.
    pub node_values: Vec<f64>,
}

impl<'a> XiSolution<'a> {
    pub fn context(&self) -> &XiContext {
        self.ctx
    }

    fn parts(&self, h: usize, x: f64) -> (f64, f64, f64, f64) {
        let ctx = self.ctx;
        let cut = &ctx.cuts[h];
        let (a, b) = ctx.mu.geometry.cuts[h];
        let (alpha, other) = if (x - a).abs() <= (x - b).abs() { (a, b) } else { (b, a) };
        let c1 = Complex64::new(self.c1[h], 0.0);
        let mut n = Complex64::new(0.0, 0.0);
        let mut dn = Complex64::new(0.0, 0.0);
        for ((&z, &s), &kt) in cut.xi.iter().zip(&cut.isd).zip(&self.ktilde[h]) {
            let r = s * (kt + c1) / ((z - x) * (z - alpha));
            n += r;
            dn += r / (z - x);
        }
        let (p, dp) = ctx.p_factor(h, x);
        let k = 2.0 * ctx.beta() * PI * PI;
        let m = k * (x - other) * p;
        let dm = k * (p + (x - other) * dp);
        (n.re, dn.re, m, dm)
    }

    /// Values and derivatives at the points of a plan.
    pub fn eval_plan(&self, plan: &EvalPlan) -> (Vec<f64>, Vec<f64>) {
        plan.entries
            .iter()
            .map(|(h, row, drow)| {
                let kt = &self.ktilde[*h];
                let v: Complex64 = row.iter().zip(kt).map(|(r, k)| r * k).sum();
                let d: Complex64 = drow.iter().zip(kt).map(|(r, k)| r * k).sum();
                (v.re, d.re)
            })
            .unzip()
    }

    pub fn try_value(&self, x: f64) -> Result<f64> {
        let h = self.ctx.mu.geometry.region_of_checked(x)?;
        self.ctx.check_resolution(h, x)?;
        let (n, _, m, _) = self.parts(h, x);
        Ok(-n / m)
    }

    pub fn try_deriv(&self, x: f64) -> Result<f64> {
        let h = self.ctx.mu.geometry.region_of_checked(x)?;
        self.ctx.check_resolution(h, x)?;
        let (n, dn, m, dm) = self.parts(h, x);
        Ok(-(dn * m - n * dm) / (m * m))
    }

    /// Bracket of the inversion formula at (α_{h,-}, α_{h,+}); vanishes by
    /// the choice of c¹, c².
    pub fn edge_brackets(&self, h: usize) -> (f64, f64) {
        let cut = &self.ctx.cuts[h];
        let (a, b) = self.ctx.mu.geometry.cuts[h];
        let c1 = Complex64::new(self.c1[h], 0.0);
        let br = |x: f64| {
            cut.xi.iter().zip(&cut.isd).zip(&self.ktilde[h]).map(|((&z, &s), &kt)| s * (kt + c1) / (z - x)).sum::<Complex64>().re
                + self.c2[h]
        };
        (br(a), br(b))
    }
}

impl<'a> RealFunction for XiSolution<'a> {
    fn value(&self, x: f64) -> f64 {
        self.try_value(x).unwrap_or(f64::NAN)
    }
    fn deriv(&self, x: f64) -> Option<f64> {
        self.try_deriv(x).ok()
    }
}

/// Ξ⁻¹ with one automatic contour inflation when an evaluation point of
/// `check` falls within a node spacing of a contour.
pub fn invert_xi_checked(ctx: &XiContext, k: &dyn AnalyticFunction, check: &[f64]) -> Result<(XiContext, Vec<f64>, Vec<f64>)> {
    let attempt = |c: &XiContext| -> Result<(Vec<f64>, Vec<f64>)> {
        let sol = c.invert_xi(k)?;
        let vals = check.iter().map(|&x| sol.try_value(x)).collect::<Result<Vec<_>>>()?;
        Ok((vals, sol.kappa.clone()))
    };
    match attempt(ctx) {
        Ok((v, kappa)) => Ok((ctx.clone(), v, kappa)),
        Err(Error::Resolution(_)) => {
            let mut spec = ctx.contours.clone();
            for e in spec.ellipses.iter_mut() {
                *e = e.scaled(1.2);
            }
            let bigger = XiContext::with_contours(&ctx.mu, ctx.t, spec)?;
            let (v, kappa) = attempt(&bigger)?;
            Ok((bigger, v, kappa))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gaussian_measure, quartic_two_cut_measure};
    use crate::functions::Poly;
    use crate::quad::gauss_legendre_on;

    fn bdelta_grid(mu: &EquilibriumMeasure, n: usize) -> Vec<f64> {
        let g = &mu.geometry;
        g.enlargements
            .iter()
            .flat_map(|&(lo, hi)| {
                let (a, b) = (lo + g.delta, hi - g.delta);
                (0..=n).map(move |k| a + (b - a) * k as f64 / n as f64)
            })
            .collect()
    }

    #[test]
    fn gaussian_apply_examples() {
        let mu = gaussian_measure(2.0).unwrap();
        let ctx = XiContext::new(&mu, 0.0).unwrap();
        let xs = [-1.7, -0.3, 0.0, 0.9, 2.05];
        let zero = ctx.apply_xi(&Poly(vec![]), &xs).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        let lin = ctx.apply_xi(&Poly(vec![0.0, 1.0]), &xs).unwrap();
        for (x, v) in xs.iter().zip(&lin) {
            assert!((v - (1.0 - x * x)).abs() < 1e-12, "{x}: {v}");
        }
        let one = ctx.apply_xi(&Poly(vec![1.0]), &xs).unwrap();
        for (x, v) in xs.iter().zip(&one) {
            assert!((v + x).abs() < 1e-12);
        }
    }

    #[test]
    fn coincidence_needs_derivative() {
        let mu = gaussian_measure(2.0).unwrap();
        let ctx = XiContext::new(&mu, 0.0).unwrap();
        let y = ctx.quadrature()[5].1;
        let f = crate::functions::ValueOnly(|x: f64| x * x);
        assert!(matches!(ctx.apply_xi(&f, &[y]), Err(Error::Capability(_))));
        assert!(ctx.apply_xi(&Poly(vec![0.0, 0.0, 1.0]), &[y]).is_ok());
    }

    #[test]
    fn theta_entries_match_real_integral() {
        let g = unit_cut_measure();
        let ctx = XiContext::new(&g, 0.0).unwrap();
        let (a, b) = g.geometry.cuts[0];
        // ∫ sqrt((y-a)(b-y))/(y-a) dy with θ-substitution
        let (ts, ws) = gauss_legendre_on(64, 0.0, PI);
        let half = 0.5 * (b - a);
        let real: f64 = ts
            .iter()
            .zip(&ws)
            .map(|(&t, &w)| {
                let y = 0.5 * (a + b) - half * t.cos();
                w * half * t.sin() * ((y - a) * (b - y)).sqrt() / (y - a)
            })
            .sum();
        assert!((real - PI * half).abs() < 1e-12);
        let th = ctx.theta_matrix(0);
        assert!((th[0][0] - 2.0 * real).abs() < 1e-10);
        assert!((th[1][0] + 2.0 * real).abs() < 1e-10);
        assert_eq!(ctx.theta_solve(0, (0.0, 0.0)).unwrap(), (0.0, 0.0));
        let (p, q) = ctx.theta_solve(0, (0.3, -1.1)).unwrap();
        let (p2, q2) = ctx.theta_solve(0, (0.6, -2.2)).unwrap();
        assert!((p2 - 2.0 * p).abs() < 1e-14 && (q2 - 2.0 * q).abs() < 1e-14);
    }

    fn unit_cut_measure() -> EquilibriumMeasure {
        // semicircle on [-1, 1]
        let p = crate::potentials::Potential::polynomial(2.0, vec![0.0, 0.0, 2.0]).unwrap();
        crate::equilibrium::solve_equilibrium(&p, None, 1, &[(-0.8, 0.9)], &Default::default()).unwrap()
    }

    #[test]
    fn gaussian_inverse_recovers_linear_function() {
        let mu = gaussian_measure(2.0).unwrap();
        let ctx = XiContext::new(&mu, 0.0).unwrap();
        let sol = ctx.invert_xi(&Poly(vec![1.0, 0.0, -1.0])).unwrap();
        for x in [-2.1, -1.0, 0.0, 0.4, 1.99] {
            assert!((sol.try_value(x).unwrap() - x).abs() < 1e-10, "{x}");
            assert!((sol.try_deriv(x).unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(sol.kappa[0].abs() < 1e-10);
        let (l, r) = sol.edge_brackets(0);
        assert!(l.abs() < 1e-8 && r.abs() < 1e-8);
        let zero = ctx.invert_xi(&Poly(vec![0.0])).unwrap();
        assert_eq!(zero.try_value(0.3).unwrap(), 0.0);
        assert_eq!(zero.kappa[0], 0.0);
    }

    #[test]
    fn two_cut_round_trip() {
        let mu = quartic_two_cut_measure().unwrap();
        let xs = bdelta_grid(&mu, 30);
        for t in [0.0, 0.5, 1.0] {
            let ctx = XiContext::new(&mu, t).unwrap();
            let k = Poly(vec![0.0, 1.0]);
            let sol = ctx.invert_xi(&k).unwrap();
            let xi = ctx.apply_xi(&sol, &xs).unwrap();
            let mut worst: f64 = 0.0;
            for (x, v) in xs.iter().zip(&xi) {
                let h = mu.geometry.enlargement_of(*x).unwrap();
                worst = worst.max((v - x - sol.kappa[h]).abs());
            }
            assert!(worst < 1e-5, "t = {t}: {worst:e}");
            for h in 0..2 {
                let (l, r) = sol.edge_brackets(h);
                assert!(l.abs() < 1e-8 && r.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn derivative_functional_and_plan_agree_with_direct_evaluation() {
        let mu = quartic_two_cut_measure().unwrap();
        for t in [0.0, 0.7, 1.0] {
            let ctx = XiContext::new(&mu, t).unwrap();
            let k = Poly(vec![0.2, -1.0, 0.5, 0.3]);
            let sol = ctx.invert_xi(&k).unwrap();
            let direct: f64 = ctx.quadrature().iter().map(|&(_, y, w)| w * sol.try_deriv(y).unwrap()).sum();
            let ell = ctx.derivative_functional();
            let via: f64 =
                (0..2).map(|h| ctx.contour_nodes(h).iter().zip(&ell[h]).map(|(&z, l)| l * k.eval_c(z)).sum::<Complex64>().re).sum();
            assert!((direct - via).abs() < 1e-10 * direct.abs().max(1.0), "t = {t}: {direct} {via}");
            let xs = [-1.9, -1.2, 0.8, 1.5];
            let plan = ctx.eval_plan(&xs).unwrap();
            let (v, d) = sol.eval_plan(&plan);
            for (i, &x) in xs.iter().enumerate() {
                assert!((v[i] - sol.try_value(x).unwrap()).abs() < 1e-12);
                assert!((d[i] - sol.try_deriv(x).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn resolution_error_near_contour() {
        let mu = gaussian_measure(2.0).unwrap();
        let ctx = XiContext::new(&mu, 0.0).unwrap();
        let sol = ctx.invert_xi(&Poly(vec![0.0, 1.0])).unwrap();
        let edge = ctx.contours.ellipses[0].center + ctx.contours.ellipses[0].rx;
        assert!(matches!(sol.try_value(edge - 1e-4), Err(Error::Resolution(_))));
        let (c2, vals, _) = invert_xi_checked(&ctx, &Poly(vec![0.0, 1.0]), &[edge - 1e-4]).unwrap();
        assert!(c2.contours.ellipses[0].rx > ctx.contours.ellipses[0].rx);
        assert!(vals[0].is_finite());
    }
}
