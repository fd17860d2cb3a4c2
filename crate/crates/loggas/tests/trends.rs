//! Quantities that shrink as N grows.

use loggas::equilibrium::quartic_two_cut_measure;
use loggas::master_operator::XiContext;
use loggas::sampler::{sample_loggas, LogGasModel, SamplerOptions};
use loggas::statistics::{concentration, outside_fraction};
use loggas::transport::{build_vector_field, residual_statistics, TransportField};

#[test]
fn empirical_measure_concentrates() {
    let mu = quartic_two_cut_measure().unwrap();
    let mut sup = Vec::new();
    for n in [32, 64, 128, 256] {
        let m = LogGasModel::constrained(&mu, n, 0.0).unwrap();
        let b = sample_loggas(&m, &SamplerOptions::new(100, 400, n as u64)).unwrap();
        sup.push(concentration(&b, &mu));
    }
    eprintln!("concentration {sup:?}");
    assert!(sup.windows(2).all(|w| w[1] < w[0]), "{sup:?}");
}

#[test]
fn particles_leave_the_plateau_less_often() {
    let mu = quartic_two_cut_measure().unwrap();
    let mut frac = Vec::new();
    for n in [32, 64, 128] {
        let m = LogGasModel::unconstrained(&mu, n).unwrap();
        let b = sample_loggas(&m, &SamplerOptions::new(200, 800, 7 + n as u64)).unwrap();
        frac.push(outside_fraction(&b, &mu));
    }
    eprintln!("outside fraction {frac:?}");
    assert!(frac.windows(2).all(|w| w[1] <= w[0]) && frac[2] < frac[0], "{frac:?}");
}

#[test]
fn monge_ampere_residual_decreases() {
    let mu = quartic_two_cut_measure().unwrap();
    let t = 0.5;
    let field = build_vector_field(&XiContext::new(&mu, t).unwrap(), 48).unwrap();
    let zero = TransportField::zero(&mu.geometry, t, 48);
    let mut with = Vec::new();
    let mut without = Vec::new();
    for n in [32, 128] {
        let m = LogGasModel::constrained(&mu, n, t).unwrap();
        let b = sample_loggas(&m, &SamplerOptions::new(200, 1000, 40 + n as u64)).unwrap();
        with.push(residual_statistics(&field, &mu, &b).unwrap().mean_abs_centered);
        without.push(residual_statistics(&zero, &mu, &b).unwrap().mean_abs_centered);
    }
    eprintln!("residual {with:?} without field {without:?}");
    assert!(with[1] < with[0]);
    assert!(with[0] < without[0] && with[1] < without[1]);
}
