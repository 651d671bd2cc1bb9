use proptest::prelude::*;
use qkinetic_core::cumulant::group_cumulant;
use qkinetic_core::lattice::{Kinetic, Model, ModelSpec};
use qkinetic_core::states::random_state;
use qkinetic_core::tensor::{kron, permute_particles, trace_norm, DensityOp};

fn model(d: usize, phi: Vec<f64>, eps: f64) -> Model {
    Model::new(ModelSpec::new(d, Kinetic::Laplacian, phi, eps).unwrap()).unwrap()
}

fn gap(a: &DensityOp, b: &DensityOp) -> f64 {
    trace_norm(&a.sub(b).unwrap())
}

fn phi_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_is_a_group(phi in phi_strategy(), seed in 0u64..1000, t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let m = model(3, phi, 0.5);
        let f = random_state(2, 3, seed, 1.0);
        let lhs = m.evolve(t1, &m.evolve(t2, &f).unwrap()).unwrap();
        let rhs = m.evolve(t1 + t2, &f).unwrap();
        prop_assert!(gap(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn flow_is_unitary_and_symmetric(phi in phi_strategy(), seed in 0u64..1000, t in -3.0f64..3.0) {
        let m = model(3, phi, 1.0);
        let f = random_state(2, 3, seed, 1.0);
        let g = m.evolve(t, &f).unwrap();
        prop_assert!((g.trace().re - 1.0).abs() <= 1e-12);
        prop_assert!((trace_norm(&g) - 1.0).abs() <= 1e-10);
        let swapped = m.evolve(t, &permute_particles(&f, &[1, 0]).unwrap()).unwrap();
        prop_assert!(gap(&swapped, &permute_particles(&g, &[1, 0]).unwrap()) <= 1e-12);
    }

    #[test]
    fn first_cumulant_is_the_flow(phi in phi_strategy(), seed in 0u64..1000, t in -2.0f64..2.0) {
        let m = model(2, phi, 1.0);
        let f = random_state(2, 2, seed, 1.0);
        let a1 = group_cumulant(&m, t, 2, &f).unwrap();
        prop_assert!(gap(&a1, &m.evolve(t, &f).unwrap()) <= 1e-12);
    }

    #[test]
    fn second_cumulant_on_products(phi in phi_strategy(), s1 in 0u64..1000, s2 in 0u64..1000, t in -2.0f64..2.0) {
        let m = model(2, phi, 1.0);
        let a = random_state(1, 2, s1, 1.0);
        let b = random_state(1, 2, s2, 1.0);
        let f = kron(&a, &b).unwrap();
        let a2 = group_cumulant(&m, t, 1, &f).unwrap();
        let factorized = kron(&m.evolve(t, &a).unwrap(), &m.evolve(t, &b).unwrap()).unwrap();
        let expected = m.evolve(t, &f).unwrap().sub(&factorized).unwrap();
        prop_assert!(gap(&a2, &expected) <= 1e-12);
    }
}
