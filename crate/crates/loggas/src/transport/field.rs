//! The transport ansatz fields ẑ(·, y) = ½ Ξ⁻¹ W(·, y) and
//! ŷ₁ = (β/2 - 1) Ξ⁻¹(∫ ∂₁ẑ dμ), tabulated on Chebyshev tensor grids over B
//! and truncated by the plateau window in the first variable.

use crate::cheb::ChebGrid;
use crate::error::{Error, Result};
use crate::functions::Plateau;
use crate::geometry::SupportGeometry;
use crate::interaction::interaction_complex;
use crate::master_operator::XiContext;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportField {
    pub t: f64,
    pub geometry: SupportGeometry,
    /// Per-cut Chebyshev–Lobatto grids on B_h, used for both variables.
    pub grids: Vec<ChebGrid>,
    /// ẑ(x_a, y_b), indexed by global x-node then global y-node.
    pub zhat: Vec<Vec<f64>>,
    /// ∂₁ẑ(x_a, y_b).
    pub zhat_dx: Vec<Vec<f64>>,
    /// ∂₂ẑ(x_a, y_b).
    pub zhat_dy: Vec<Vec<f64>>,
    /// ∫ ẑ(x_a, y) dμ(y) and ∫ ∂₁ẑ(x_a, y) dμ(y).
    pub zmu: Vec<f64>,
    pub zmu_dx: Vec<f64>,
    /// ŷ₁ and ŷ₁' at the x-nodes.
    pub y1hat: Vec<f64>,
    pub y1hat_dx: Vec<f64>,
    pub plateau: Plateau,
    /// Start of each cut's block in the global node numbering.
    pub offsets: Vec<usize>,
}

/// Field quantities evaluated on one configuration λ.
#[derive(Debug, Clone)]
pub struct ConfigEval {
    /// z(λ_i, λ_j), ∂₁z(λ_i, λ_j), ∂₂z(λ_i, λ_j), row-major N × N.
    pub z: Vec<f64>,
    pub dz1: Vec<f64>,
    pub dz2: Vec<f64>,
    /// y₁(λ_i), y₁'(λ_i).
    pub y1: Vec<f64>,
    pub dy1: Vec<f64>,
    /// ∫ z(λ_i, y) dμ(y), ∫ ∂₁z(λ_i, y) dμ(y).
    pub zmean: Vec<f64>,
    pub dzmean: Vec<f64>,
}

/// Interpolation data for one point: cut, window and derivative, and the
/// barycentric row of the cut grid.
#[derive(Debug, Clone)]
pub struct PointRow {
    pub cut: usize,
    pub w: f64,
    pub dw: f64,
    pub row: Vec<f64>,
    pub drow: Vec<f64>,
}

impl TransportField {
    /// Field of identically zero data on the given geometry.
    pub fn zero(geometry: &SupportGeometry, t: f64, degree: usize) -> Self {
        let grids: Vec<ChebGrid> = geometry.enlargements.iter().map(|&(a, b)| ChebGrid::new(a, b, degree)).collect();
        let n: usize = grids.iter().map(|g| g.len()).sum();
        let mut offsets = vec![0];
        for g in &grids {
            offsets.push(offsets.last().unwrap() + g.len());
        }
        TransportField {
            offsets,
            t,
            geometry: geometry.clone(),
            grids,
            zhat: vec![vec![0.0; n]; n],
            zhat_dx: vec![vec![0.0; n]; n],
            zhat_dy: vec![vec![0.0; n]; n],
            zmu: vec![0.0; n],
            zmu_dx: vec![0.0; n],
            y1hat: vec![0.0; n],
            y1hat_dx: vec![0.0; n],
            plateau: Plateau::new(geometry),
        }
    }

    fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn node_count(&self) -> usize {
        self.grids.iter().map(|g| g.len()).sum()
    }

    /// Interpolation row for x, or `None` outside B.
    pub fn point_row(&self, x: f64) -> Option<PointRow> {
        let cut = self.geometry.enlargement_of(x)?;
        let g = &self.grids[cut];
        let (row, drow) = g.interp_rows_with_deriv(x);
        Some(PointRow { cut, w: self.plateau.window(x), dw: self.plateau.window_deriv(x), row, drow })
    }

    fn interp_1d(&self, vals: &[f64], p: &PointRow) -> f64 {
        let off = self.offsets()[p.cut];
        p.row.iter().enumerate().map(|(i, r)| r * vals[off + i]).sum()
    }

    /// y₁(x) = Υ(ŷ₁)(x) and its derivative.
    pub fn y1(&self, x: f64) -> (f64, f64) {
        match self.point_row(x) {
            None => (0.0, 0.0),
            Some(p) => {
                let v = self.interp_1d(&self.y1hat, &p);
                let dv = self.interp_1d(&self.y1hat_dx, &p);
                (p.w * v, p.dw * v + p.w * dv)
            }
        }
    }

    /// ∫ z(x, y) dμ(y) and ∫ ∂₁z(x, y) dμ(y).
    pub fn z_mean(&self, x: f64) -> (f64, f64) {
        match self.point_row(x) {
            None => (0.0, 0.0),
            Some(p) => {
                let v = self.interp_1d(&self.zmu, &p);
                let dv = self.interp_1d(&self.zmu_dx, &p);
                (p.w * v, p.dw * v + p.w * dv)
            }
        }
    }

    /// (z, ∂₁z, ∂₂z) at (x, y); zero outside B × B.
    pub fn z(&self, x: f64, y: f64) -> (f64, f64, f64) {
        match (self.point_row(x), self.point_row(y)) {
            (Some(px), Some(py)) => self.z_rows(&px, &py),
            _ => (0.0, 0.0, 0.0),
        }
    }

    pub fn z_rows(&self, px: &PointRow, py: &PointRow) -> (f64, f64, f64) {
        let off = &self.offsets;
        let (ox, oy) = (off[px.cut], off[py.cut]);
        let (mut v, mut dx, mut dy) = (0.0, 0.0, 0.0);
        for (a, ra) in px.row.iter().enumerate() {
            let (zr, zdx, zdy) = (&self.zhat[ox + a], &self.zhat_dx[ox + a], &self.zhat_dy[ox + a]);
            let mut sv = 0.0;
            let mut sdx = 0.0;
            let mut sdy = 0.0;
            for (b, rb) in py.row.iter().enumerate() {
                sv += rb * zr[oy + b];
                sdx += rb * zdx[oy + b];
                sdy += rb * zdy[oy + b];
            }
            v += ra * sv;
            dx += ra * sdx;
            dy += ra * sdy;
        }
        (px.w * v, px.dw * v + px.w * dx, px.w * dy)
    }

    /// Evaluate all field quantities on a configuration whose interpolation
    /// rows are `rows` (from [`TransportField::point_row`], `None` outside B).
    pub fn eval_config(&self, rows: &[Option<PointRow>]) -> ConfigEval {
        let n = rows.len();
        let nn = self.node_count();
        // stage 1: contract the second variable, m[a][j] = Σ_b ẑ[a][b] L_b(λ_j)
        let mut m = vec![0.0; nn * n];
        let mut mdx = vec![0.0; nn * n];
        let mut mdy = vec![0.0; nn * n];
        for (j, r) in rows.iter().enumerate() {
            let Some(p) = r else { continue };
            let o = self.offsets[p.cut];
            for a in 0..nn {
                let (zr, zdx, zdy) = (&self.zhat[a], &self.zhat_dx[a], &self.zhat_dy[a]);
                let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
                for (b, rb) in p.row.iter().enumerate() {
                    s += rb * zr[o + b];
                    sx += rb * zdx[o + b];
                    sy += rb * zdy[o + b];
                }
                m[a * n + j] = s;
                mdx[a * n + j] = sx;
                mdy[a * n + j] = sy;
            }
        }
        let mut out = ConfigEval {
            z: vec![0.0; n * n],
            dz1: vec![0.0; n * n],
            dz2: vec![0.0; n * n],
            y1: vec![0.0; n],
            dy1: vec![0.0; n],
            zmean: vec![0.0; n],
            dzmean: vec![0.0; n],
        };
        for (i, r) in rows.iter().enumerate() {
            let Some(p) = r else { continue };
            let o = self.offsets[p.cut];
            let (mut yv, mut ydv, mut zm, mut zdm) = (0.0, 0.0, 0.0, 0.0);
            for (a, ra) in p.row.iter().enumerate() {
                yv += ra * self.y1hat[o + a];
                ydv += ra * self.y1hat_dx[o + a];
                zm += ra * self.zmu[o + a];
                zdm += ra * self.zmu_dx[o + a];
            }
            out.y1[i] = p.w * yv;
            out.dy1[i] = p.dw * yv + p.w * ydv;
            out.zmean[i] = p.w * zm;
            out.dzmean[i] = p.dw * zm + p.w * zdm;
            for j in 0..n {
                if rows[j].is_none() {
                    continue;
                }
                let (mut v, mut dx, mut dy) = (0.0, 0.0, 0.0);
                for (a, ra) in p.row.iter().enumerate() {
                    let k = (o + a) * n + j;
                    v += ra * m[k];
                    dx += ra * mdx[k];
                    dy += ra * mdy[k];
                }
                out.z[i * n + j] = p.w * v;
                out.dz1[i * n + j] = p.dw * v + p.w * dx;
                out.dz2[i * n + j] = p.w * dy;
            }
        }
        out
    }

    /// Largest |z| and |y₁| over the grid nodes.
    pub fn sup_norm(&self) -> f64 {
        let z = self.zhat.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let y = self.y1hat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        z.max(y)
    }
}

/// Build the fields at the context's t on grids of the given degree.
pub fn build_vector_field(ctx: &XiContext, degree: usize) -> Result<TransportField> {
    let mu = &ctx.mu;
    let geom = &mu.geometry;
    let mut field = TransportField::zero(geom, ctx.t, degree);
    if geom.cut_count() == 1 {
        return Ok(field);
    }
    let beta = mu.beta();
    let nodes: Vec<f64> = field.grids.iter().flat_map(|g| g.nodes.iter().cloned()).collect();
    let n = nodes.len();
    let plan = ctx.eval_plan(&nodes)?;
    let ncut = geom.cut_count();
    let contour: Vec<Vec<Complex64>> = (0..ncut).map(|h| ctx.contour_nodes(h).to_vec()).collect();
    // columns: y-node b -> (values, x-derivatives) over x-nodes
    let cols = nodes
        .par_iter()
        .map(|&y| {
            let yc = Complex64::new(y, 0.0);
            let kv: Vec<Vec<Complex64>> =
                contour.iter().map(|c| c.iter().map(|&z| 0.5 * interaction_complex(geom, beta, z, yc)).collect()).collect();
            let sol = ctx.invert_values(kv)?;
            Ok(sol.eval_plan(&plan))
        })
        .collect::<Result<Vec<_>>>()?;
    for (b, (v, d)) in cols.iter().enumerate() {
        for a in 0..n {
            field.zhat[a][b] = v[a];
            field.zhat_dx[a][b] = d[a];
        }
    }
    let off = field.offsets.clone();
    for a in 0..n {
        for (h, g) in field.grids.iter().enumerate() {
            let seg = &field.zhat[a][off[h]..off[h + 1]];
            let dseg = g.differentiate(seg);
            field.zhat_dy[a][off[h]..off[h + 1]].copy_from_slice(&dseg);
        }
    }
    // μ-averages in the second variable
    let yrows: Vec<(f64, PointRow)> =
        ctx.quadrature().iter().map(|&(_, y, w)| (w, field.point_row(y).expect("support lies in B"))).collect();
    for a in 0..n {
        let (mut s, mut sd) = (0.0, 0.0);
        for (w, p) in &yrows {
            let o = off[p.cut];
            for (b, r) in p.row.iter().enumerate() {
                s += w * r * field.zhat[a][o + b];
                sd += w * r * field.zhat_dx[a][o + b];
            }
        }
        field.zmu[a] = s;
        field.zmu_dx[a] = sd;
    }
    if beta != 2.0 {
        // k₁(y) = ∫ ∂₁ẑ(x, y) dμ(x) = ½ Σ ℓ_{h,j} W(ξ_{h,j}, y), analytic in y
        let ell = ctx.derivative_functional();
        let k1 = |y: Complex64| -> Complex64 {
            let mut s = Complex64::new(0.0, 0.0);
            for (h, c) in contour.iter().enumerate() {
                for (j, &z) in c.iter().enumerate() {
                    s += ell[h][j] * interaction_complex(geom, beta, z, y);
                }
            }
            0.5 * s
        };
        let kv: Vec<Vec<Complex64>> = contour.par_iter().map(|c| c.iter().map(|&z| (beta / 2.0 - 1.0) * k1(z)).collect()).collect();
        let sol = ctx.invert_values(kv)?;
        let (v, d) = sol.eval_plan(&plan);
        field.y1hat = v;
        field.y1hat_dx = d;
    }
    if !field.sup_norm().is_finite() {
        return Err(Error::Solver { message: "transport field is not finite".into(), residual: f64::NAN });
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gaussian_measure, quartic_two_cut_measure};

    #[test]
    fn one_cut_field_vanishes() {
        let mu = gaussian_measure(2.0).unwrap();
        let ctx = XiContext::new(&mu, 0.0).unwrap();
        let f = build_vector_field(&ctx, 16).unwrap();
        assert_eq!(f.sup_norm(), 0.0);
    }

    #[test]
    fn two_cut_field_properties() {
        let mu = quartic_two_cut_measure().unwrap();
        let ctx = XiContext::new(&mu, 0.25).unwrap();
        let f = build_vector_field(&ctx, 64).unwrap();
        let coarse = build_vector_field(&ctx, 32).unwrap();
        assert!(f.sup_norm().is_finite() && f.sup_norm() > 0.0);
        let b = mu.geometry.enlargements.clone();
        assert_eq!(f.z(b[1].1 + 1e-3, 1.2), (0.0, 0.0, 0.0));
        assert_eq!(f.y1(b[0].0 - 1e-3), (0.0, 0.0));
        let pts = [-1.8, -1.3, -0.8, 0.79, 1.1, 1.6];
        for &x in &pts {
            for &y in &pts {
                let (a, c) = (f.z(x, y), coarse.z(x, y));
                assert!((a.0 - c.0).abs() < 1e-6 && (a.1 - c.1).abs() < 1e-6, "{x} {y}");
            }
            assert!((f.y1(x).0 - coarse.y1(x).0).abs() < 1e-6);
        }
        // same-cut kernel vanishes, so ẑ(·, y) for x, y in one cut is driven by the coupling only
        let (_, dz1, _) = f.z(1.1, 1.3);
        let fd = (f.z(1.1 + 1e-5, 1.3).0 - f.z(1.1 - 1e-5, 1.3).0) / 2e-5;
        assert!((dz1 - fd).abs() < 1e-6);
        let dz2 = f.z(1.1, 1.3).2;
        let fd2 = (f.z(1.1, 1.3 + 1e-5).0 - f.z(1.1, 1.3 - 1e-5).0) / 2e-5;
        assert!((dz2 - fd2).abs() < 1e-6);
        let cfg = [-1.7, -1.0, 0.9, 1.2, 1.75];
        let rows: Vec<_> = cfg.iter().map(|&x| f.point_row(x)).collect();
        let ev = f.eval_config(&rows);
        for (i, &x) in cfg.iter().enumerate() {
            assert!((ev.y1[i] - f.y1(x).0).abs() < 1e-13);
            assert!((ev.zmean[i] - f.z_mean(x).0).abs() < 1e-13);
            for (j, &y) in cfg.iter().enumerate() {
                let (v, d1, d2) = f.z(x, y);
                let k = i * cfg.len() + j;
                assert!((ev.z[k] - v).abs() < 1e-13 && (ev.dz1[k] - d1).abs() < 1e-12 && (ev.dz2[k] - d2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beta_two_has_no_first_order_drift() {
        let p = crate::potentials::Potential::polynomial(2.0, vec![0.0, 0.0, -2.0, 0.0, 0.5]).unwrap();
        let mu = crate::equilibrium::solve_equilibrium(&p, Some(&[0.5, 0.5]), 2, &[(-1.9, -0.7), (0.7, 1.9)], &Default::default()).unwrap();
        let ctx = XiContext::new(&mu, 0.5).unwrap();
        let f = build_vector_field(&ctx, 24).unwrap();
        assert!(f.y1hat.iter().all(|v| *v == 0.0));
    }
}
