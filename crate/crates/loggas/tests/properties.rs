use loggas::equilibrium::{gaussian_measure, quartic_two_cut_measure, solve_equilibrium, EquilibriumMeasure, SolveOptions};
use loggas::potentials::Potential;
use loggas::sampler::{particle_counts, sample_gaussian_tridiagonal, Diagnostics, ModelDescriptor, SampleBatch};
use loggas::statistics::{bulk_gaps, ks_distance, per_cut};
use proptest::prelude::*;
use std::sync::OnceLock;

fn two_cut() -> &'static EquilibriumMeasure {
    static MU: OnceLock<EquilibriumMeasure> = OnceLock::new();
    MU.get_or_init(|| quartic_two_cut_measure().unwrap())
}

fn gaussian() -> &'static EquilibriumMeasure {
    static MU: OnceLock<EquilibriumMeasure> = OnceLock::new();
    MU.get_or_init(|| gaussian_measure(2.0).unwrap())
}

fn batch_of(configs: Vec<Vec<f64>>, mu: &EquilibriumMeasure) -> SampleBatch {
    SampleBatch {
        descriptor: ModelDescriptor {
            kind: "loggas".into(),
            potential: mu.potential.clone(),
            n: configs.first().map_or(0, Vec::len),
            beta: mu.beta(),
            t: 0.0,
            eps: None,
            counts: None,
            domain: mu.geometry.enlargements.clone(),
        },
        seed: 0,
        configs,
        diagnostics: Diagnostics::exact(),
        provenance: None,
    }
}

proptest! {
    #[test]
    fn counts_sum_to_n(n in 2usize..500, w in prop::collection::vec(0.05f64..1.0, 1..5)) {
        let total: f64 = w.iter().sum();
        let eps: Vec<f64> = w.iter().map(|x| x / total).collect();
        if let Ok(c) = particle_counts(n, &eps) {
            prop_assert_eq!(c.iter().sum::<usize>(), n);
            for (k, e) in c.iter().zip(&eps) {
                prop_assert!((*k as f64 - e * n as f64).abs() < 1.0);
                prop_assert!(*k > 0);
            }
        }
    }

    #[test]
    fn ks_is_a_symmetric_distance(
        a in prop::collection::vec(-5.0f64..5.0, 1..60),
        b in prop::collection::vec(-5.0f64..5.0, 1..60),
    ) {
        let d = ks_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_distance(&b, &a).unwrap());
        prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        let far: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        prop_assert_eq!(ks_distance(&a, &far).unwrap(), 1.0);
    }

    #[test]
    fn batch_bytes_round_trip(
        configs in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..20),
        seed in any::<u64>(),
    ) {
        let mut b = batch_of(configs, two_cut());
        b.seed = seed;
        let back = SampleBatch::from_bytes(&b.to_bytes().unwrap()).unwrap();
        prop_assert_eq!(back, b);
    }

    #[test]
    fn per_cut_indexing_matches_global_order(
        left in prop::collection::vec(-1.8f64..-0.8, 0..10),
        right in prop::collection::vec(0.8f64..1.8, 0..10),
    ) {
        let mut c: Vec<f64> = left.iter().chain(&right).copied().collect();
        c.sort_by(f64::total_cmp);
        let parts = per_cut(&c, &two_cut().geometry).unwrap();
        prop_assert_eq!(parts[0].len(), left.len());
        let mut before = 0;
        for part in &parts {
            for (i, x) in part.iter().enumerate() {
                prop_assert_eq!(*x, c[before + i]);
            }
            before += part.len();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bulk_gaps_are_shift_invariant(s in -3.0f64..3.0) {
        let g = gaussian();
        let p = Potential::gaussian(2.0).unwrap().shifted(s);
        let moved = solve_equilibrium(&p, None, 1, &[(-1.5 + s, 1.7 + s)], &SolveOptions::default()).unwrap();
        let b = sample_gaussian_tridiagonal(2.0, 64, 20, 3).unwrap();
        let shifted = batch_of(b.configs.iter().map(|c| c.iter().map(|x| x + s).collect()).collect(), &moved);
        let r0 = bulk_gaps(&b, g, 0, 30, 4).unwrap();
        let r1 = bulk_gaps(&shifted, &moved, 0, 30, 4).unwrap();
        for (x, y) in r0.gaps.iter().zip(&r1.gaps) {
            prop_assert!((x - y).abs() < 1e-8, "{} {}", x, y);
        }
    }
}
