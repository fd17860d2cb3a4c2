//! Chebyshev–Lobatto grids with barycentric interpolation and spectral
//! differentiation.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct ChebGrid {
    pub a: f64,
    pub b: f64,
    /// Nodes in ascending order.
    pub nodes: Vec<f64>,
    #[serde(skip)]
    bary: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
}

impl TryFrom<RawGrid> for ChebGrid {
    type Error = String;
    fn try_from(r: RawGrid) -> Result<Self, String> {
        if r.nodes.len() < 2 || !(r.b > r.a) {
            return Err("grid needs at least two nodes on a non-empty interval".into());
        }
        Ok(ChebGrid::new(r.a, r.b, r.nodes.len() - 1))
    }
}

impl PartialEq for ChebGrid {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.nodes == other.nodes
    }
}

impl ChebGrid {
    /// `n + 1` Lobatto points on [a, b].
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 1 && b > a);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut nodes = Vec::with_capacity(n + 1);
        let mut bary = Vec::with_capacity(n + 1);
        for j in 0..=n {
            // ascending: x_j = mid - half cos(j pi / n)
            let x = mid - half * (j as f64 * PI / n as f64).cos();
            nodes.push(x);
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            bary.push(w);
        }
        nodes[0] = a;
        nodes[n] = b;
        ChebGrid { a, b, nodes, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// Coefficients `c` such that `p(x) = Σ c_j v_j` for node values `v`.
    pub fn interp_row(&self, x: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.nodes.len()];
        for (j, &xj) in self.nodes.iter().enumerate() {
            if x == xj {
                row[j] = 1.0;
                return row;
            }
        }
        let mut total = 0.0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            let c = self.bary[j] / (x - xj);
            row[j] = c;
            total += c;
        }
        for c in row.iter_mut() {
            *c /= total;
        }
        row
    }

    /// Interpolation row and the row of its derivative at x.
    pub fn interp_rows_with_deriv(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.nodes.len();
        let mut row = vec![0.0; m];
        let mut drow = vec![0.0; m];
        if let Some(i) = self.nodes.iter().position(|&xj| xj == x) {
            row[i] = 1.0;
            let mut diag = 0.0;
            for j in 0..m {
                if j != i {
                    let v = (self.bary[j] / self.bary[i]) / (self.nodes[i] - self.nodes[j]);
                    drow[j] = v;
                    diag -= v;
                }
            }
            drow[i] = diag;
            return (row, drow);
        }
        let mut s = 0.0;
        let mut ds = 0.0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            let c = self.bary[j] / (x - xj);
            row[j] = c;
            s += c;
            ds -= c / (x - xj);
        }
        for j in 0..m {
            let c = row[j];
            drow[j] = (-c / (x - self.nodes[j]) * s - c * ds) / (s * s);
            row[j] = c / s;
        }
        (row, drow)
    }

    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            let d = x - xj;
            if d == 0.0 {
                return values[j];
            }
            let c = self.bary[j] / d;
            num += c * values[j];
            den += c;
        }
        num / den
    }

    /// Dense differentiation matrix, row-major.
    pub fn diff_matrix(&self) -> Vec<Vec<f64>> {
        let m = self.nodes.len();
        let mut d = vec![vec![0.0; m]; m];
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let v = (self.bary[j] / self.bary[i]) / (self.nodes[i] - self.nodes[j]);
                    d[i][j] = v;
                    diag -= v;
                }
            }
            d[i][i] = diag;
        }
        d
    }

    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        self.diff_matrix().iter().map(|row| row.iter().zip(values).map(|(a, b)| a * b).sum()).collect()
    }
}
