use num_complex::Complex64;
use pqc_core::circuits::CircuitTemplate;
use pqc_core::descriptors::{self, DescriptorConfig};
use pqc_core::Statevector;
use proptest::prelude::*;

fn state(n: usize) -> impl Strategy<Value = Statevector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| Statevector::from_amplitudes(v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn purity_form_matches_oracle_on_four_qubits(s in state(4)) {
        let q = descriptors::meyer_wallach_q(&s);
        let oracle = descriptors::meyer_wallach_q_oracle(&s).unwrap();
        prop_assert!((q - oracle).abs() < 1e-9, "{} vs {}", q, oracle);
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn purity_form_matches_oracle_on_other_sizes(n in 2usize..=6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1 << n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let s = Statevector::from_amplitudes(amps).unwrap();
        let q = descriptors::meyer_wallach_q(&s);
        prop_assert!((q - descriptors::meyer_wallach_q_oracle(&s).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn haar_bins_cover_unit_mass() {
    for dim in [2, 4, 16] {
        let total: f64 = (0..75).map(|i| descriptors::haar_bin_probability(i as f64 / 75.0, (i + 1) as f64 / 75.0, dim)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Closed form of the integral of (N-1)(1-F)^(N-2).
        let (lo, hi) = (0.2, 0.3);
        let want = (1.0f64 - lo).powi(dim as i32 - 1) - (1.0f64 - hi).powi(dim as i32 - 1);
        assert!((descriptors::haar_bin_probability(lo, hi, dim) - want).abs() < 1e-12);
    }
}

#[test]
fn entangling_capability_stays_in_unit_interval() {
    let cfg = DescriptorConfig { n_ent_samples: 40, ..Default::default() };
    for t in 1..=19 {
        for layers in [1, 2] {
            for seed in [1, 2] {
                let ent = descriptors::entangling_capability(
                    &CircuitTemplate::new(t, layers).unwrap(),
                    &DescriptorConfig { seed, ..cfg },
                )
                .unwrap();
                assert!((0.0..=1.0).contains(&ent), "template {t}: {ent}");
            }
        }
    }
}

#[test]
fn descriptors_are_reproducible_and_recorded() {
    let cfg = DescriptorConfig { n_fidelity_pairs: 400, n_ent_samples: 30, ..Default::default() };
    let t = CircuitTemplate::new(6, 1).unwrap();
    let a = descriptors::describe(&t, &cfg).unwrap();
    let b = descriptors::describe(&t, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.config, cfg);
    let other = descriptors::describe(&t, &DescriptorConfig { seed: 7, ..cfg }).unwrap();
    assert_ne!(a.expr, other.expr);
}

#[test]
fn csv_round_trip() {
    let cfg = DescriptorConfig { n_fidelity_pairs: 200, n_ent_samples: 10, ..Default::default() };
    let results: Vec<_> = [1, 4]
        .iter()
        .map(|&t| descriptors::describe(&CircuitTemplate::new(t, 1).unwrap(), &cfg).unwrap())
        .collect();
    let mut buf = Vec::new();
    descriptors::write_descriptors_csv(&mut buf, &results).unwrap();
    let rows = descriptors::read_descriptors_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].template_id, 4);
    assert_eq!(rows[1].expr_prime, results[1].expr_prime);
    assert_eq!(rows[0].n_pairs, 200);
}
