//! First-order N-particle flow: the linear ODE for X¹ driven by the fields
//! on a fixed configuration, integrated with RK4 over t ∈ [0, 1].

use super::field::{build_vector_field, ConfigEval, TransportField};
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::master_operator::XiContext;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fields at t = k / (2 steps), k = 0..=2 steps: the RK4 stage times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSchedule {
    pub steps: usize,
    pub fields: Vec<TransportField>,
}

impl FieldSchedule {
    pub fn zero(mu: &EquilibriumMeasure, steps: usize, degree: usize) -> Self {
        let fields = (0..=2 * steps).map(|k| TransportField::zero(&mu.geometry, k as f64 / (2 * steps) as f64, degree)).collect();
        FieldSchedule { steps, fields }
    }

    pub fn at(&self, t: f64) -> &TransportField {
        let k = (t * (2 * self.steps) as f64).round() as usize;
        &self.fields[k.min(2 * self.steps)]
    }
}

/// Build the fields at every RK4 stage time.
pub fn build_schedule(mu: &EquilibriumMeasure, steps: usize, degree: usize) -> Result<FieldSchedule> {
    if steps == 0 {
        return Err(Error::Argument("at least one RK4 step is required".into()));
    }
    let fields = (0..=2 * steps)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 / (2 * steps) as f64;
            let ctx = XiContext::new(mu, t)?;
            build_vector_field(&ctx, degree)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldSchedule { steps, fields })
}

fn check_config(mu: &EquilibriumMeasure, config: &[f64]) -> Result<()> {
    if let Some(x) = config.iter().find(|&&x| !mu.geometry.in_b(x)) {
        return Err(Error::Domain(format!("configuration point {x} lies outside B")));
    }
    if config.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("configuration must be sorted".into()));
    }
    Ok(())
}

/// Drift b and matrix A of the linear ODE dX/dt = b + A X.
fn coefficients(ev: &ConfigEval, n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let b = (0..n)
        .map(|i| {
            let s: f64 = ev.z[i * n..(i + 1) * n].iter().sum();
            ev.y1[i] + s - nf * ev.zmean[i]
        })
        .collect();
    let a = ev.dz2.iter().map(|v| v / nf).collect();
    (b, a)
}

/// X¹ for one configuration; X̂ = λ + X¹/N.
pub fn flow_first_order(schedule: &FieldSchedule, config: &[f64], mu: &EquilibriumMeasure) -> Result<Vec<f64>> {
    check_config(mu, config)?;
    let n = config.len();
    let rows: Vec<_> = config.iter().map(|&x| schedule.fields[0].point_row(x)).collect();
    let coef: Vec<(Vec<f64>, Vec<f64>)> = schedule.fields.iter().map(|f| coefficients(&f.eval_config(&rows), n)).collect();
    let rhs = |k: usize, x: &[f64]| -> Vec<f64> {
        let (b, a) = &coef[k];
        (0..n).map(|i| b[i] + (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>()).collect()
    };
    let h = 1.0 / schedule.steps as f64;
    let mut x = vec![0.0; n];
    for s in 0..schedule.steps {
        let k1 = rhs(2 * s, &x);
        let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = rhs(2 * s + 1, &x2);
        let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = rhs(2 * s + 1, &x3);
        let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = rhs(2 * s + 2, &x4);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(x)
}

/// Approximate transport map X̂ = Id + X¹/N applied to a configuration.
pub fn transport_config(schedule: &FieldSchedule, config: &[f64], mu: &EquilibriumMeasure) -> Result<Vec<f64>> {
    let x1 = flow_first_order(schedule, config, mu)?;
    let n = config.len() as f64;
    Ok(config.iter().zip(&x1).map(|(l, x)| l + x / n).collect())
}
