use pqc_core::circuits::{embed, Catalog, CircuitTemplate, N_TEMPLATES};
use proptest::prelude::*;

/// Templates with fixed (non-parameterized) gates in the layer body; a zero
/// second layer is not the identity for these.
const FIXED_GATE_TEMPLATES: [u32; 6] = [2, 9, 10, 11, 12, 15];

fn assert_close(a: &pqc_core::Statevector, b: &pqc_core::Statevector, tol: f64) -> Result<(), TestCaseError> {
    for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
        prop_assert!((x - y).norm() < tol, "{} vs {}", x, y);
    }
    Ok(())
}

#[test]
fn fixed_gate_list_matches_catalog() {
    let catalog = Catalog::bundled();
    let with_fixed: Vec<u32> = catalog
        .template_ids()
        .filter(|&t| catalog.layer(t).unwrap().iter().any(|g| g.slot.is_none()))
        .collect();
    assert_eq!(with_fixed, FIXED_GATE_TEMPLATES);
}

#[test]
fn every_slot_is_used_exactly_once() {
    for t in 1..=N_TEMPLATES {
        for layers in 1..=3 {
            let template = CircuitTemplate::new(t, layers).unwrap();
            let mut slots: Vec<usize> = template.gate_program().iter().filter_map(|g| g.slot).collect();
            slots.sort_unstable();
            assert_eq!(slots, (0..template.param_count()).collect::<Vec<_>>(), "template {t}, {layers} layers");
        }
    }
}

proptest! {
    #[test]
    fn zero_second_layer_is_identity(
        t in (1..=N_TEMPLATES).prop_filter("parameterized only", |t| !FIXED_GATE_TEMPLATES.contains(t)),
        seed_params in prop::collection::vec(-3.2f64..3.2, 40),
        features in (0.0f64..=1.0, 0.0f64..=1.0),
    ) {
        let one = CircuitTemplate::new(t, 1).unwrap();
        let two = CircuitTemplate::new(t, 2).unwrap();
        let p1 = &seed_params[..one.param_count()];
        let mut p2 = p1.to_vec();
        p2.resize(two.param_count(), 0.0);
        let f = Some([features.0, features.1]);
        assert_close(&one.run(p1, f).unwrap(), &two.run(&p2, f).unwrap(), 1e-12)?;
    }

    #[test]
    fn swapping_features_swaps_qubit_roles(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let s = embed([a, b]).unwrap();
        let t = embed([b, a]).unwrap();
        for (q, r) in [(0, 1), (2, 3), (1, 0), (3, 2)] {
            let x = s.reduced_density_matrix(q).unwrap();
            let y = t.reduced_density_matrix(r).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((x[i][j] - y[i][j]).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn layers_stack_the_single_layer_program() {
    for t in 1..=N_TEMPLATES {
        let one = CircuitTemplate::new(t, 1).unwrap();
        let three = CircuitTemplate::new(t, 3).unwrap();
        assert_eq!(three.gate_program().len(), 3 * one.gate_program().len());
        assert_eq!(three.param_count(), 3 * one.param_count());
        let n = one.gate_program().len();
        for (i, g) in three.gate_program().iter().enumerate() {
            let base = one.gate_program()[i % n];
            assert_eq!((g.kind, g.target, g.control), (base.kind, base.target, base.control));
        }
    }
}

#[test]
fn out_of_range_features_are_rejected() {
    assert!(embed([1.2, 0.5]).is_err());
    assert!(embed([0.5, -0.1]).is_err());
    assert!(CircuitTemplate::new(20, 1).is_err());
    assert!(CircuitTemplate::new(1, 0).is_err());
}
