//! Equilibrium measures with fixed or free filling fractions.
//!
//! The density on the union of cuts is written
//! `ρ(x) = S(x) Π_h |x - α_{h,-}|^{1/2} |x - α_{h,+}|^{1/2}`, where S is
//! positive on each cut. The analytic factor S̃ of `βG(z) - V'(z) =
//! βπ S̃(z) σ(z)` is recovered from contour integrals of `V'/σ` around the
//! cuts, and the edges are found by a damped Newton iteration on the
//! large-z decay conditions together with either the prescribed masses or
//! the equality of the Lagrange constants across cuts.

use crate::cheb::ChebGrid;
use crate::contour::{ContourSpec, Ellipse};
use crate::error::{Error, Result};
use crate::geometry::{GeometryConfig, SupportGeometry};
use crate::interaction;
use crate::potentials::Potential;
use crate::quad::{gauss_chebyshev2_on, gauss_legendre_on, tanh_sinh};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Degree of the per-cut Chebyshev–Lobatto representation of S.
    pub cheb_degree: usize,
    /// Gauss–Chebyshev nodes per cut for integrals against μ.
    pub quad_nodes: usize,
    /// Trapezoid nodes per contour.
    pub contour_nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub geometry: GeometryConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { cheb_degree: 64, quad_nodes: 64, contour_nodes: 256, tol: 1e-12, max_iter: 80, geometry: GeometryConfig::default() }
    }
}

/// Contour representation of the analytic factor S̃.
#[derive(Debug, Clone)]
pub(crate) struct SKernel {
    xi: Vec<Complex64>,
    coef: Vec<Complex64>,
    ellipses: Vec<Ellipse>,
    beta: f64,
}

impl SKernel {
    pub(crate) fn new(p: &Potential, geom: &SupportGeometry, contour: &ContourSpec) -> Self {
        let mut xi = Vec::new();
        let mut coef = Vec::new();
        for e in &contour.ellipses {
            let (nodes, dxi) = e.nodes(contour.nodes);
            for (z, dz) in nodes.into_iter().zip(dxi) {
                let c = p.eval_unchecked(z, 1) * dz / geom.sigma(z);
                xi.push(z);
                coef.push(c);
            }
        }
        SKernel { xi, coef, ellipses: contour.ellipses.clone(), beta: p.beta }
    }

    fn inside(&self, z: Complex64) -> bool {
        self.ellipses.iter().any(|e| e.contains(z))
    }

    /// S̃(z) for z enclosed by the contours.
    pub(crate) fn s_an(&self, z: Complex64) -> Complex64 {
        debug_assert!(self.inside(z));
        let s: Complex64 = self.xi.iter().zip(&self.coef).map(|(x, c)| c / (x - z)).sum();
        -s / (2.0 * PI * I) / (self.beta * PI)
    }

    pub(crate) fn s_an_deriv(&self, z: Complex64) -> Complex64 {
        let s: Complex64 = self.xi.iter().zip(&self.coef).map(|(x, c)| c / ((x - z) * (x - z))).sum();
        -s / (2.0 * PI * I) / (self.beta * PI)
    }

    /// (1/2πi) ∮ V'(ξ) ((ξ - c)/r)^k / σ(ξ) dξ over all contours.
    fn moment(&self, k: usize, c: f64, r: f64) -> f64 {
        let s: Complex64 = self.xi.iter().zip(&self.coef).map(|(x, cf)| cf * ((x - c) / r).powu(k as u32)).sum();
        (s / (2.0 * PI * I)).re
    }
}

/// Log-potential pieces ∫_{A_h} log|x - y| ρ(y) dy with endpoint-aware
/// double-exponential quadrature.
fn log_integral_cut(geom: &SupportGeometry, s_spec: &dyn Fn(usize, f64) -> f64, h: usize, x: f64) -> f64 {
    let (a, b) = geom.cuts[h];
    let tol = 1e-14;
    let rho = |y: f64, ya: f64, yb: f64| s_spec(h, y) * (ya * yb).sqrt() * geom.abs_sigma_others(h, y);
    if x > a && x < b {
        let left = tanh_sinh(|y, da, db| db.ln() * rho(y, da, (b - x) + db), a, x, tol);
        let right = tanh_sinh(|y, da, db| da.ln() * rho(y, (x - a) + da, db), x, b, tol);
        left + right
    } else {
        tanh_sinh(|y, da, db| (x - y).abs().ln() * rho(y, da, db), a, b, tol)
    }
}

fn log_potential_with(geom: &SupportGeometry, s_spec: &dyn Fn(usize, f64) -> f64, x: f64) -> f64 {
    (0..geom.cut_count()).map(|h| log_integral_cut(geom, s_spec, h, x)).sum()
}

struct Frame {
    geom: SupportGeometry,
    kernel: SKernel,
}

impl Frame {
    fn build(p: &Potential, cuts: &[(f64, f64)], opts: &SolveOptions) -> Result<Frame> {
        let geom = SupportGeometry::from_cuts(cuts, opts.geometry)?;
        let contour = contour_for(p, &geom, opts.contour_nodes)?;
        let kernel = SKernel::new(p, &geom, &contour);
        Ok(Frame { geom, kernel })
    }

    fn s_spec(&self, h: usize, x: f64) -> f64 {
        self.geom.spec_sign(h) * self.kernel.s_an(Complex64::new(x, 0.0)).re
    }

    fn masses(&self, n: usize) -> Vec<f64> {
        (0..self.geom.cut_count())
            .map(|h| {
                let (a, b) = self.geom.cuts[h];
                let (y, w) = gauss_chebyshev2_on(n, a, b);
                y.iter().zip(&w).map(|(&y, &w)| w * self.s_spec(h, y) * self.geom.abs_sigma_others(h, y)).sum()
            })
            .collect()
    }

    fn constants(&self, p: &Potential, n: usize) -> Vec<f64> {
        let s = |h: usize, y: f64| self.s_spec(h, y);
        let mean_v: f64 = (0..self.geom.cut_count())
            .map(|h| {
                let (a, b) = self.geom.cuts[h];
                let (y, w) = gauss_chebyshev2_on(n, a, b);
                y.iter().zip(&w).map(|(&y, &w)| w * self.s_spec(h, y) * self.geom.abs_sigma_others(h, y) * p.value(y)).sum::<f64>()
            })
            .sum();
        self.geom.cuts.iter().map(|&(a, _)| p.beta * log_potential_with(&self.geom, &s, a) - p.value(a) - mean_v).collect()
    }
}

/// Contours for a potential: the default ellipses, with the imaginary
/// semi-axis clamped inside the potential's strip of analyticity.
pub(crate) fn contour_for(p: &Potential, geom: &SupportGeometry, nodes: usize) -> Result<ContourSpec> {
    let mut spec = ContourSpec::default_for(geom, nodes)?;
    let strip = p
        .terms
        .iter()
        .map(|t| match t {
            crate::potentials::Term::Log1pSquare { .. } => 1.0,
            _ => f64::INFINITY,
        })
        .fold(f64::INFINITY, f64::min);
    for e in spec.ellipses.iter_mut() {
        e.ry = e.ry.min(0.5 * strip);
    }
    Ok(spec)
}

fn residual(p: &Potential, eps: Option<&[f64]>, edges: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    let cuts: Vec<(f64, f64)> = edges.chunks(2).map(|c| (c[0], c[1])).collect();
    let frame = Frame::build(p, &cuts, opts)?;
    let g1 = cuts.len();
    let c = 0.5 * (cuts[0].0 + cuts[g1 - 1].1);
    let r = 0.5 * (cuts[g1 - 1].1 - cuts[0].0);
    let mut out = Vec::with_capacity(2 * g1);
    for k in 0..g1 {
        out.push(frame.kernel.moment(k, c, r));
    }
    let masses = frame.masses(opts.quad_nodes);
    match eps {
        Some(e) => {
            for h in 0..g1 {
                out.push(masses[h] - e[h]);
            }
        }
        None => {
            if g1 > 1 {
                let consts = frame.constants(p, opts.quad_nodes);
                for h in 1..g1 {
                    out.push((consts[h] - consts[h - 1]) / p.beta);
                }
            }
            out.push(masses.iter().sum::<f64>() - 1.0);
        }
    }
    Ok(out)
}

fn edges_valid(edges: &[f64]) -> bool {
    edges.iter().all(|e| e.is_finite()) && edges.windows(2).all(|w| w[1] - w[0] > 1e-6)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Equilibrium measure μ_V^ε (or μ_V when `eps` is `None`) with
/// `cut_count` cuts, starting Newton from the cut guesses `init`.
pub fn solve_equilibrium(
    p: &Potential,
    eps: Option<&[f64]>,
    cut_count: usize,
    init: &[(f64, f64)],
    opts: &SolveOptions,
) -> Result<EquilibriumMeasure> {
    if !p.confinement_check() {
        return Err(Error::Precondition("potential fails the confinement hypothesis".into()));
    }
    if cut_count == 0 || init.len() != cut_count {
        return Err(Error::Argument(format!("init has {} cuts but cut_count is {cut_count}", init.len())));
    }
    if let Some(e) = eps {
        if e.len() != cut_count {
            return Err(Error::Argument("eps length must equal cut_count".into()));
        }
        if e.iter().any(|&v| !(v > 0.0 && v < 1.0 || (cut_count == 1 && v == 1.0))) {
            return Err(Error::Argument("filling fractions must lie in (0, 1)".into()));
        }
        if (e.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Argument("filling fractions must sum to 1".into()));
        }
    }
    let mut edges: Vec<f64> = init.iter().flat_map(|&(a, b)| [a, b]).collect();
    if !edges_valid(&edges) {
        return Err(Error::Argument("initial cuts must be ordered and disjoint".into()));
    }
    for (h, &(a, b)) in init.iter().enumerate() {
        if !p.in_domain(a) || !p.in_domain(b) {
            return Err(Error::Domain(format!("initial cut {h} leaves the potential's domain")));
        }
    }
    let n = edges.len();
    let scale = 0.5 * (edges[n - 1] - edges[0]);
    let tol = opts.tol * (1.0 + scale);
    let mut r = residual(p, eps, &edges, opts)?;
    let mut rn = norm(&r);
    let mut iter = 0;
    while rn > tol {
        if iter >= opts.max_iter {
            return Err(Error::Solver { message: format!("Newton stalled after {iter} iterations"), residual: rn });
        }
        iter += 1;
        let step = 1e-6 * scale;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut ep = edges.clone();
            let mut em = edges.clone();
            ep[j] += step;
            em[j] -= step;
            let rp = residual(p, eps, &ep, opts)?;
            let rm = residual(p, eps, &em, opts)?;
            for i in 0..n {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * step);
            }
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let d = jac.lu().solve(&rhs).ok_or(Error::Solver { message: "singular Newton Jacobian".into(), residual: rn })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial: Vec<f64> = edges.iter().zip(d.iter()).map(|(e, s)| e + lambda * s).collect();
            if edges_valid(&trial) && trial.iter().all(|&x| p.in_domain(x)) {
                if let Ok(rt) = residual(p, eps, &trial, opts) {
                    let tn = norm(&rt);
                    if tn < rn * (1.0 - 1e-4 * lambda) || tn <= tol {
                        edges = trial;
                        r = rt;
                        rn = tn;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if rn < 1e3 * tol {
                break;
            }
            return Err(Error::Solver { message: "line search failed".into(), residual: rn });
        }
    }
    let cuts: Vec<(f64, f64)> = edges.chunks(2).map(|c| (c[0], c[1])).collect();
    let frame = Frame::build(p, &cuts, opts)?;
    // S must stay positive across every cut.
    for h in 0..cut_count {
        let (a, b) = cuts[h];
        for k in 0..=200 {
            let x = a + (b - a) * k as f64 / 200.0;
            let s = frame.s_spec(h, x);
            if s <= 0.0 {
                return Err(Error::WrongCutCount(format!(
                    "S changes sign on cut {h} (S({x:.6}) = {s:.3e}); the {cut_count}-cut ansatz is invalid"
                )));
            }
        }
    }
    let masses = frame.masses(opts.quad_nodes);
    let eps_vec = match eps {
        Some(e) => e.to_vec(),
        None => masses.clone(),
    };
    EquilibriumMeasure::assemble(p.clone(), frame.geom.clone(), eps.is_some(), eps_vec, 0.0, opts, |h, x| frame.s_spec(h, x))
}

/// Rough cut locations from the local minima of V: each cut is centred at a
/// minimum, with a semicircle-like half-width from the local curvature.
pub fn guess_cuts(p: &Potential, cut_count: usize) -> Result<Vec<(f64, f64)>> {
    let (mut lo, mut hi) = (p.domain[0].0.max(-1e3), p.domain[p.domain.len() - 1].1.min(1e3));
    if !(lo.is_finite() && hi.is_finite()) {
        lo = -10.0;
        hi = 10.0;
    }
    let m = 4000;
    let xs: Vec<f64> = (0..=m).map(|k| lo + (hi - lo) * k as f64 / m as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| if p.in_domain(x) { p.value(x) } else { f64::INFINITY }).collect();
    let mut minima: Vec<(f64, f64)> = (1..m).filter(|&k| vs[k] < vs[k - 1] && vs[k] <= vs[k + 1]).map(|k| (xs[k], vs[k])).collect();
    minima.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    minima.truncate(cut_count);
    if minima.len() < cut_count {
        return Err(Error::Argument(format!(
            "found only {} local minima of V for {cut_count} cuts; pass an explicit initial guess",
            minima.len()
        )));
    }
    minima.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut cuts = Vec::new();
    for (k, &(x0, _)) in minima.iter().enumerate() {
        let c = p.evaluate(x0, 2).unwrap_or(1.0).max(1e-3);
        let mut half = 2.0 * (p.beta / (2.0 * c * cut_count as f64)).sqrt();
        if k > 0 {
            half = half.min(0.4 * (x0 - minima[k - 1].0));
        }
        if k + 1 < minima.len() {
            half = half.min(0.4 * (minima[k + 1].0 - x0));
        }
        cuts.push((x0 - half, x0 + half));
    }
    Ok(cuts)
}

/// Flatness report of the effective potential over a grid of B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    /// max over on-support grid points of |F - C_h|.
    pub max_on_support_violation: f64,
    /// max over B \ A grid points of (F - C_h)₊.
    pub max_off_support_violation: f64,
}

#[derive(Debug, Clone)]
pub struct CutQuadrature {
    pub nodes: Vec<f64>,
    /// Weights including the density: ∫ φ dμ over A_h ≈ Σ w φ(y).
    pub weights: Vec<f64>,
}

/// The equilibrium measure together with its geometry and constants.
#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    pub potential: Potential,
    pub geometry: SupportGeometry,
    pub eps: Vec<f64>,
    /// Whether the filling fractions were imposed.
    pub constrained: bool,
    /// C_{ε,h} for the two-body potential T_t.
    pub constants: Vec<f64>,
    /// Interpolation parameter of T_t = (1 - t) T_0 + t T_1.
    pub t: f64,
    pub options: SolveOptions,
    pub contour: ContourSpec,
    /// Positive density factor S sampled on Chebyshev–Lobatto grids of B_h.
    pub s_grids: Vec<ChebGrid>,
    pub s_values: Vec<Vec<f64>>,
    pub quadrature: Vec<CutQuadrature>,
    kernel: SKernel,
}

impl EquilibriumMeasure {
    fn assemble(
        potential: Potential,
        geometry: SupportGeometry,
        constrained: bool,
        eps: Vec<f64>,
        t: f64,
        opts: &SolveOptions,
        s_spec: impl Fn(usize, f64) -> f64,
    ) -> Result<Self> {
        let contour = contour_for(&potential, &geometry, opts.contour_nodes)?;
        let kernel = SKernel::new(&potential, &geometry, &contour);
        let mut s_grids = Vec::new();
        let mut s_values = Vec::new();
        let mut quadrature = Vec::new();
        for h in 0..geometry.cut_count() {
            let (bl, br) = geometry.enlargements[h];
            let grid = ChebGrid::new(bl, br, opts.cheb_degree);
            s_values.push(grid.nodes.iter().map(|&x| s_spec(h, x)).collect());
            s_grids.push(grid);
            let (a, b) = geometry.cuts[h];
            let (y, w) = gauss_chebyshev2_on(opts.quad_nodes, a, b);
            let weights = y.iter().zip(&w).map(|(&y, &w)| w * s_spec(h, y) * geometry.abs_sigma_others(h, y)).collect();
            quadrature.push(CutQuadrature { nodes: y, weights });
        }
        let mut mu = EquilibriumMeasure {
            potential,
            geometry,
            eps,
            constrained,
            constants: Vec::new(),
            t,
            options: *opts,
            contour,
            s_grids,
            s_values,
            quadrature,
            kernel,
        };
        let masses = mu.cut_masses();
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::Solver { message: "total mass differs from 1".into(), residual: (total - 1.0).abs() });
        }
        for (h, (m, e)) in masses.iter().zip(&mu.eps).enumerate() {
            if (m - e).abs() > 1e-8 {
                return Err(Error::Solver { message: format!("mass of cut {h} differs from eps"), residual: (m - e).abs() });
            }
        }
        mu.constants = mu.constants_for(t);
        Ok(mu)
    }

    /// The same measure, relabelled as the equilibrium measure of T_t.
    pub fn with_t(&self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Argument(format!("t must lie in [0, 1], got {t}")));
        }
        let mut m = self.clone();
        m.t = t;
        m.constants = m.constants_for(t);
        Ok(m)
    }

    pub fn beta(&self) -> f64 {
        self.potential.beta
    }

    pub fn cut_count(&self) -> usize {
        self.geometry.cut_count()
    }

    pub fn edges(&self) -> Vec<(f64, f64)> {
        self.geometry.cuts.clone()
    }

    /// Positive density factor S on cut h (interpolated, valid on B_h).
    pub fn s_factor(&self, h: usize, x: f64) -> f64 {
        self.s_grids[h].eval(&self.s_values[h], x)
    }

    /// S̃(z) at a complex point enclosed by the contours.
    pub fn s_analytic(&self, z: Complex64) -> Complex64 {
        self.kernel.s_an(z)
    }

    pub fn s_analytic_deriv(&self, z: Complex64) -> Complex64 {
        self.kernel.s_an_deriv(z)
    }

    pub fn density(&self, x: f64) -> f64 {
        match self.geometry.cut_of(x) {
            Some(h) => {
                let (a, b) = self.geometry.cuts[h];
                self.s_factor(h, x) * ((x - a) * (b - x)).sqrt() * self.geometry.abs_sigma_others(h, x)
            }
            None => 0.0,
        }
    }

    /// Density of the normalized cut-h component μ^{ε,h} = μ|_{A_h} / ε_h.
    pub fn cut_density(&self, h: usize, x: f64) -> f64 {
        let (a, b) = self.geometry.cuts[h];
        if x < a || x > b {
            return 0.0;
        }
        self.s_factor(h, x) * ((x - a) * (b - x)).sqrt() * self.geometry.abs_sigma_others(h, x) / self.eps[h]
    }

    pub fn cut_masses(&self) -> Vec<f64> {
        self.quadrature.iter().map(|q| q.weights.iter().sum()).collect()
    }

    /// ∫ φ dμ by the per-cut quadrature.
    pub fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.quadrature.iter().map(|q| q.nodes.iter().zip(&q.weights).map(|(&y, &w)| w * phi(y)).sum::<f64>()).sum()
    }

    /// Iterator over (cut, node, weight) of the μ-quadrature.
    pub fn quadrature_points(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.quadrature.iter().enumerate().flat_map(|(h, q)| q.nodes.iter().zip(&q.weights).map(move |(&y, &w)| (h, y, w)))
    }

    /// ∫ log|x - y| dμ(y).
    pub fn log_potential(&self, x: f64) -> f64 {
        let s = |h: usize, y: f64| self.s_factor(h, y);
        log_potential_with(&self.geometry, &s, x)
    }

    /// F_t(x) = β ∫log|x - y| dμ(y) + ∫ T_t(x, y) dμ(y).
    pub fn characterization_field(&self, t: f64, x: f64) -> f64 {
        let p = &self.potential;
        let base = p.beta * self.log_potential(x);
        let mean_v = self.integrate(|y| p.value(y));
        let t0 = -(p.value(x) + mean_v);
        if t == 0.0 {
            return base + t0;
        }
        let vt = interaction::decoupled_potential_unchecked(self, x);
        let mean_vt = self.integrate(|y| interaction::decoupled_potential_unchecked(self, y));
        let w_mean = interaction::mean_interaction(self, x);
        let t1 = -(vt + mean_vt + w_mean);
        base + (1.0 - t) * t0 + t * t1
    }

    fn constants_for(&self, t: f64) -> Vec<f64> {
        self.geometry.cuts.iter().map(|&(a, _)| self.characterization_field(t, a)).collect()
    }

    /// Effective potential T̃(x) = F_t(x) - C_h on B_h.
    pub fn effective_potential(&self, x: f64) -> Result<f64> {
        let h = self.geometry.enlargement_of(x).ok_or_else(|| Error::Domain(format!("x = {x} is outside B")))?;
        Ok(self.characterization_field(self.t, x) - self.constants[h])
    }

    /// G(z) = ∫ dμ(y)/(z - y) for z away from the support.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        let n = self.options.quad_nodes as f64;
        for (h, &(a, b)) in self.geometry.cuts.iter().enumerate() {
            let res = (b - a) / n;
            let dx = if z.re < a {
                a - z.re
            } else if z.re > b {
                z.re - b
            } else {
                0.0
            };
            if (dx * dx + z.im * z.im).sqrt() <= res {
                return Err(Error::Domain(format!("z = {z} is within quadrature resolution of cut {h}; use the boundary value")));
            }
        }
        Ok(self.quadrature_points().map(|(_, y, w)| w / (z - y)).sum())
    }

    /// Upper boundary value G(x + i0) for x on the support (T_0 form).
    pub fn stieltjes_boundary(&self, x: f64) -> Result<Complex64> {
        if self.geometry.cut_of(x).is_none() {
            return Err(Error::Domain(format!("x = {x} is not on the support")));
        }
        let z = Complex64::new(x, 0.0);
        let beta = self.beta();
        let v1 = self.potential.deriv(x);
        let s = self.kernel.s_an(z);
        Ok((v1 + beta * PI * s * self.geometry.sigma(z)) / beta)
    }

    /// Mass of μ below x.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for h in 0..self.cut_count() {
            let (a, b) = self.geometry.cuts[h];
            if x >= b {
                acc += self.eps[h];
            } else if x > a {
                let th = theta_of(a, b, x);
                acc += self.partial_mass_theta(h, th);
                break;
            } else {
                break;
            }
        }
        acc
    }

    /// ∫_{α_{h,-}}^{x(θ)} ρ with x(θ) = mid - half cos θ.
    fn partial_mass_theta(&self, h: usize, theta: f64) -> f64 {
        let (a, b) = self.geometry.cuts[h];
        let half = 0.5 * (b - a);
        let (ts, ws) = gauss_legendre_on(48, 0.0, theta);
        ts.iter().zip(&ws).map(|(&t, &w)| w * self.theta_integrand(h, t)).sum::<f64>() * half * half
    }

    fn theta_integrand(&self, h: usize, theta: f64) -> f64 {
        let (a, b) = self.geometry.cuts[h];
        let x = 0.5 * (a + b) - 0.5 * (b - a) * theta.cos();
        self.s_factor(h, x) * self.geometry.abs_sigma_others(h, x) * theta.sin().powi(2)
    }

    /// Smallest x with μ((-∞, x]) = p.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Argument(format!("probability {p} outside [0, 1]")));
        }
        let mut cum = 0.0;
        for h in 0..self.cut_count() {
            let (a, b) = self.geometry.cuts[h];
            if p <= cum + 1e-14 {
                return Ok(a);
            }
            let next = cum + self.eps[h];
            if (p - next).abs() <= 1e-12 || h + 1 == self.cut_count() && p >= next {
                return Ok(b);
            }
            if p < next {
                let target = p - cum;
                let th = self.invert_partial(h, target);
                let half = 0.5 * (b - a);
                return Ok(0.5 * (a + b) - half * th.cos());
            }
            cum = next;
        }
        Ok(self.geometry.cuts[self.cut_count() - 1].1)
    }

    fn invert_partial(&self, h: usize, target: f64) -> f64 {
        let (a, b) = self.geometry.cuts[h];
        let half = 0.5 * (b - a);
        let (mut lo, mut hi) = (0.0, PI);
        let mut th = 0.5 * PI;
        for _ in 0..200 {
            let f = self.partial_mass_theta(h, th) - target;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                hi = th;
            } else {
                lo = th;
            }
            let d = self.theta_integrand(h, th) * half * half;
            let newton = th - f / d;
            th = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 {
                break;
            }
        }
        th
    }

    /// CDF of the normalized cut component μ^{ε,h}.
    pub fn cut_cdf(&self, h: usize, x: f64) -> f64 {
        let (a, b) = self.geometry.cuts[h];
        if x <= a {
            0.0
        } else if x >= b {
            1.0
        } else {
            self.partial_mass_theta(h, theta_of(a, b, x)) / self.eps[h]
        }
    }

    /// Quantile of the normalized cut component μ^{ε,h}.
    pub fn cut_quantile(&self, h: usize, p: f64) -> f64 {
        let (a, b) = self.geometry.cuts[h];
        if p <= 0.0 {
            return a;
        }
        if p >= 1.0 {
            return b;
        }
        let th = self.invert_partial(h, p * self.eps[h]);
        0.5 * (a + b) - 0.5 * (b - a) * th.cos()
    }

    /// Coefficient k with ρ(x) ≈ k sqrt(|x - α|) at the edge α of cut h
    /// (`right` selects α_{h,+}).
    pub fn edge_coefficient(&self, h: usize, right: bool) -> f64 {
        let (a, b) = self.geometry.cuts[h];
        let x = if right { b } else { a };
        self.s_factor(h, x) * (b - a).sqrt() * self.geometry.abs_sigma_others(h, x)
    }

    /// Classical location E_i^{V,N}: the smallest E with ∫_{-∞}^E ρ = i/N.
    pub fn classical_location(&self, i: usize, n: usize) -> Result<f64> {
        if i == 0 || i > n {
            return Err(Error::Argument(format!("index {i} outside 1..={n}")));
        }
        self.quantile(i as f64 / n as f64)
    }

    /// Scan a grid of B and report the largest deviations from the
    /// characterization of the equilibrium measure under T_t.
    pub fn verify_characterization(&self) -> CharacterizationReport {
        let mut on = 0.0f64;
        let mut off = 0.0f64;
        for h in 0..self.cut_count() {
            let (a, b) = self.geometry.cuts[h];
            let (bl, br) = self.geometry.enlargements[h];
            let inner: Vec<f64> = (1..40).map(|k| a + (b - a) * k as f64 / 40.0).collect();
            let vals: Vec<f64> = inner.iter().map(|&x| self.characterization_field(self.t, x)).collect();
            let c = vals.iter().sum::<f64>() / vals.len() as f64;
            for v in &vals {
                on = on.max((v - c).abs());
            }
            let outer = (1..=10).map(|k| a - (a - bl) * k as f64 / 10.0).chain((1..=10).map(|k| b + (br - b) * k as f64 / 10.0));
            for x in outer {
                let v = self.characterization_field(self.t, x) - c;
                off = off.max(v.max(0.0));
            }
        }
        CharacterizationReport { max_on_support_violation: on, max_off_support_violation: off }
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            potential: self.potential.clone(),
            edges: self.geometry.cuts.clone(),
            eps: self.eps.clone(),
            constrained: self.constrained,
            constants: self.constants.clone(),
            t: self.t,
            options: self.options,
            s_samples: self
                .s_grids
                .iter()
                .zip(&self.s_values)
                .map(|(g, v)| SSamples { nodes: g.nodes.clone(), values: v.clone() })
                .collect(),
        }
    }

    pub fn from_file(f: MeasureFile) -> Result<Self> {
        let geometry = SupportGeometry::from_cuts(&f.edges, f.options.geometry)?;
        if f.s_samples.len() != geometry.cut_count() {
            return Err(Error::Data("one S sample set per cut is required".into()));
        }
        let grids: Vec<ChebGrid> = (0..geometry.cut_count())
            .map(|h| {
                let (bl, br) = geometry.enlargements[h];
                ChebGrid::new(bl, br, f.s_samples[h].values.len().saturating_sub(1).max(1))
            })
            .collect();
        for (g, s) in grids.iter().zip(&f.s_samples) {
            if g.len() != s.values.len() || g.nodes.iter().zip(&s.nodes).any(|(a, b)| (a - b).abs() > 1e-9) {
                return Err(Error::Data("S sample nodes do not match the geometry".into()));
            }
        }
        let vals: Vec<Vec<f64>> = f.s_samples.iter().map(|s| s.values.clone()).collect();
        let mut opts = f.options;
        opts.cheb_degree = grids[0].degree();
        let mu = Self::assemble(f.potential, geometry, f.constrained, f.eps, f.t, &opts, |h, x| grids[h].eval(&vals[h], x))?;
        Ok(mu)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("measure serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }
}

fn theta_of(a: f64, b: f64, x: f64) -> f64 {
    let u = ((2.0 * x - a - b) / (b - a)).clamp(-1.0, 1.0);
    (-u).acos()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SSamples {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

/// On-disk form of an equilibrium measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    pub potential: Potential,
    pub edges: Vec<(f64, f64)>,
    pub eps: Vec<f64>,
    pub constrained: bool,
    pub constants: Vec<f64>,
    pub t: f64,
    pub options: SolveOptions,
    pub s_samples: Vec<SSamples>,
}

pub fn stieltjes_transform(mu: &EquilibriumMeasure, z: Complex64) -> Result<Complex64> {
    mu.stieltjes(z)
}

pub fn effective_potential(mu: &EquilibriumMeasure, x: f64) -> Result<f64> {
    mu.effective_potential(x)
}

pub fn classical_location(mu: &EquilibriumMeasure, i: usize, n: usize) -> Result<f64> {
    mu.classical_location(i, n)
}

pub fn verify_characterization(mu: &EquilibriumMeasure) -> CharacterizationReport {
    mu.verify_characterization()
}

/// Semicircle law μ_G on [-2, 2] for the Gaussian potential.
pub fn gaussian_measure(beta: f64) -> Result<EquilibriumMeasure> {
    let g = Potential::gaussian(beta)?;
    solve_equilibrium(&g, None, 1, &[(-1.5, 1.7)], &SolveOptions::default())
}

/// Equilibrium measure of the canonical two-cut quartic, free filling
/// fractions.
pub fn quartic_two_cut_measure() -> Result<EquilibriumMeasure> {
    let p = Potential::quartic_two_cut();
    solve_equilibrium(&p, None, 2, &[(-1.9, -0.7), (0.7, 1.9)], &SolveOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn semicircle(x: f64) -> f64 {
        (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI)
    }

    #[test]
    fn gaussian_is_semicircle() {
        let mu = gaussian_measure(2.0).unwrap();
        let (a, b) = mu.geometry.cuts[0];
        assert!((a + 2.0).abs() < 1e-10 && (b - 2.0).abs() < 1e-10, "{a} {b}");
        for x in [-1.9, -0.5, 0.0, 1.2, 1.99] {
            assert!((mu.density(x) - semicircle(x)).abs() < 1e-10);
        }
        assert_eq!(mu.density(2.1), 0.0);
        let g = mu.stieltjes(Complex64::new(3.0, 0.0)).unwrap();
        assert!((g.re - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12 && g.im.abs() < 1e-14);
        let far = mu.stieltjes(Complex64::new(1e6, 0.0)).unwrap();
        assert!((far.re * 1e6 - 1.0).abs() < 1e-9);
        assert!(mu.stieltjes(Complex64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn boundary_value_gives_density() {
        let mu = gaussian_measure(2.0).unwrap();
        for x in [-1.5, 0.2, 1.7] {
            let g = mu.stieltjes_boundary(x).unwrap();
            assert!((-g.im / PI - semicircle(x)).abs() < 1e-10);
            assert!((g.re - x / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_effective_potential() {
        let mu = gaussian_measure(2.0).unwrap();
        let v = mu.effective_potential(2.1).unwrap();
        // closed form: -(x/2)sqrt(x^2-4) + 2 log((x + sqrt(x^2-4))/2)
        let x: f64 = 2.1;
        let r = (x * x - 4.0).sqrt();
        let expect = -0.5 * x * r + 2.0 * ((x + r) / 2.0).ln();
        assert!((v - expect).abs() < 1e-9, "{v} {expect}");
        assert!(mu.effective_potential(0.7).unwrap().abs() < 1e-9);
        assert!(mu.effective_potential(5.0).is_err());
    }

    #[test]
    fn quartic_edges_match_closed_form() {
        let mu = quartic_two_cut_measure().unwrap();
        let b = 2.0 * (PI / 8.0).sin();
        let a = 2.0 * (PI / 8.0).cos();
        let e = mu.edges();
        for (got, want) in [(e[0].0, -a), (e[0].1, -b), (e[1].0, b), (e[1].1, a)] {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        let m = mu.cut_masses();
        assert!((m[0] - 0.5).abs() < 1e-10 && (m[1] - 0.5).abs() < 1e-10);
        // ρ(x) = |x| sqrt((a²-x²)(x²-b²)) / π
        for x in [1.0f64, 1.5, -1.2] {
            let r = x.abs() * ((a * a - x * x) * (x * x - b * b)).sqrt() / PI;
            assert!((mu.density(x) - r).abs() < 1e-9);
        }
        assert!((mu.constants[0] - mu.constants[1]).abs() < 1e-9);
    }

    #[test]
    fn classical_locations() {
        let mu = gaussian_measure(2.0).unwrap();
        assert!(mu.classical_location(1, 2).unwrap().abs() < 1e-12);
        assert!((mu.classical_location(4, 4).unwrap() - 2.0).abs() < 1e-10);
        assert!(mu.classical_location(0, 4).is_err());
        let q = mu.classical_location(1, 4).unwrap();
        assert!((mu.cdf(q) - 0.25).abs() < 1e-12);
        let two = quartic_two_cut_measure().unwrap();
        assert!((two.classical_location(1, 2).unwrap() - two.edges()[0].1).abs() < 1e-12);
    }

    #[test]
    fn characterization_holds_for_both_two_body_potentials() {
        let mu = quartic_two_cut_measure().unwrap();
        let r0 = mu.verify_characterization();
        assert!(r0.max_on_support_violation < 1e-8 && r0.max_off_support_violation < 1e-8, "{r0:?}");
        let r1 = mu.with_t(1.0).unwrap().verify_characterization();
        assert!(r1.max_on_support_violation < 1e-8 && r1.max_off_support_violation < 1e-8, "{r1:?}");
    }

    #[test]
    fn constrained_solve_hits_masses() {
        let p = Potential::quartic_two_cut();
        let eps = [0.4, 0.6];
        let mu = solve_equilibrium(&p, Some(&eps), 2, &[(-1.9, -0.7), (0.7, 1.9)], &SolveOptions::default()).unwrap();
        let m = mu.cut_masses();
        assert!((m[0] - 0.4).abs() < 1e-10 && (m[1] - 0.6).abs() < 1e-10);
        let r = mu.verify_characterization();
        assert!(r.max_on_support_violation < 1e-8, "{r:?}");
    }

    #[test]
    fn json_round_trip() {
        let mu = quartic_two_cut_measure().unwrap();
        let back = EquilibriumMeasure::from_json(&mu.to_json()).unwrap();
        assert_eq!(back.edges(), mu.edges());
        assert!((back.density(1.3) - mu.density(1.3)).abs() < 1e-14);
    }

    #[test]
    fn one_cut_ansatz_fails_for_two_well_potential() {
        let p = Potential::quartic_two_cut();
        let r = solve_equilibrium(&p, None, 1, &[(-2.0, 2.0)], &SolveOptions::default());
        assert!(matches!(r, Err(Error::WrongCutCount(_)) | Err(Error::Solver { .. })), "{r:?}");
    }
}
