mod common;

use joint_discord::quantum::{
    apply_local_unitary, partial_trace, rx, ry, rz, state_from_pauli, DensityMatrix, Mat2, PauliVector, Subsystem, C64,
};
use proptest::prelude::*;

use common::{random_state, rng};

fn unitary(a: f64, b: f64, g: f64) -> Mat2 {
    rz(a) * ry(b) * rz(g)
}

#[test]
fn unphysical_pauli_vector_is_flagged() {
    let mut comps = [0.0; 16];
    comps[0] = 1.0;
    comps[15] = 2.0;
    let cand = state_from_pauli(&PauliVector::new(comps)).unwrap();
    assert!(!cand.is_psd());
    assert!(cand.eigenvalues()[0] < 0.0);
    comps[0] = 0.9;
    assert!(state_from_pauli(&PauliVector::new(comps)).is_err());
}

#[test]
fn flips_on_both_qubits_map_ground_to_excited() {
    let rho = apply_local_unitary(&DensityMatrix::basis(0, 0), &rx(std::f64::consts::PI), &rx(std::f64::consts::PI))
        .unwrap();
    assert!((rho.element(3, 3).re - 1.0).abs() < 1e-12);
    let bad = Mat2::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    assert!(apply_local_unitary(&rho, &bad, &Mat2::identity()).is_err());
}

proptest! {
    #[test]
    fn pauli_round_trip(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random_state(&mut rng(seed), rank);
        let pv = rho.pauli_expectations();
        let back = state_from_pauli(&pv).unwrap();
        let diff = (back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
        let again = DensityMatrix::from_approx(*back.matrix()).unwrap().pauli_expectations();
        for (a, b) in pv.components().iter().zip(again.components()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_is_local_unitary_invariant(seed in any::<u64>(), rank in 1usize..=4, angles in prop::array::uniform6(-3.2f64..3.2)) {
        let rho = random_state(&mut rng(seed), rank);
        let ua = unitary(angles[0], angles[1], angles[2]);
        let ub = unitary(angles[3], angles[4], angles[5]);
        let rotated = apply_local_unitary(&rho, &ua, &ub).unwrap();
        prop_assert!((rho.entropy() - rotated.entropy()).abs() < 1e-10);
        prop_assert!((rho.purity() - rotated.purity()).abs() < 1e-12);
    }

    #[test]
    fn purity_and_reduced_states_are_valid(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random_state(&mut rng(seed), rank);
        let p = rho.purity();
        prop_assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&p));
        prop_assert!(rho.entropy() >= -1e-12 && rho.entropy() <= 2.0 + 1e-12);
        for keep in [Subsystem::Alice, Subsystem::Bob] {
            let q = partial_trace(&rho, keep);
            let m = q.matrix();
            prop_assert!(((m[(0, 0)] + m[(1, 1)]).re - 1.0).abs() < 1e-12);
            prop_assert!((m[(0, 1)] - m[(1, 0)].conj()).norm() < 1e-12);
            let [x, y, z] = q.bloch();
            prop_assert!(x * x + y * y + z * z <= 1.0 + 1e-10);
        }
    }
}
