use std::f64::consts::PI;

use fluxgate::fluxonium::{
    build_oscillator_rep, diagonalize_and_truncate, hamiltonian_at_flux, qubit_frequency, spectrum, DEFAULT_OSC_DIM,
};
use fluxgate::linalg::{hermiticity_defect, symmetry_defect, to_complex};
use fluxgate::{CircuitParams, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = CircuitParams> {
    (0.5f64..2.0, 0.5f64..1.5, 1.0f64..5.0).prop_map(|(e_c, e_l, e_j)| CircuitParams::new(e_c, e_l, e_j, PI).unwrap())
}

#[test]
fn reference_frequencies() {
    let wa = qubit_frequency(&CircuitParams::reference_a(), PI).unwrap();
    let wb = qubit_frequency(&CircuitParams::reference_b(), PI).unwrap();
    assert!((wa - 1.152).abs() < 1e-3, "{wa}");
    assert!((wb - 0.848).abs() < 1e-3, "{wb}");
}

#[test]
fn harmonic_limit_is_equally_spaced() {
    let p = CircuitParams::new(1.1, 0.7, 0.0, PI).unwrap();
    let rep = build_oscillator_rep(&p, 30).unwrap();
    let e = spectrum(&rep, &p, 1.3, 6).unwrap();
    for w in e.windows(2) {
        assert!((w[1] - w[0] - p.plasma_frequency()).abs() < 1e-12);
    }
}

#[test]
fn cos_sin_pythagoras_on_low_block() {
    let p = CircuitParams::reference_a();
    for dim in [30, 60] {
        let rep = build_oscillator_rep(&p, dim).unwrap();
        let s = &rep.cos_op * &rep.cos_op + &rep.sin_op * &rep.sin_op;
        let h = dim / 2;
        let block = s.view((0, 0), (h, h)).clone_owned() - DMatrix::<f64>::identity(h, h);
        assert!(block.amax() < 1e-8, "dim {dim}: {}", block.amax());
    }
}

#[test]
fn oscillator_basis_convergence() {
    for p in [CircuitParams::reference_a(), CircuitParams::reference_b()] {
        let w30 = spectrum(&build_oscillator_rep(&p, 30).unwrap(), &p, PI, 2).unwrap();
        let w40 = spectrum(&build_oscillator_rep(&p, 40).unwrap(), &p, PI, 2).unwrap();
        assert!(((w30[1] - w30[0]) - (w40[1] - w40[0])).abs() < 1e-6);
    }
}

#[test]
fn sweet_spot_is_flux_insensitive() {
    for p in [CircuitParams::reference_a(), CircuitParams::reference_b()] {
        let up = qubit_frequency(&p, PI + 1e-4).unwrap();
        let down = qubit_frequency(&p, PI - 1e-4).unwrap();
        assert!((up - down).abs() < 1e-9);
        let w = qubit_frequency(&p, PI).unwrap();
        assert!(up > w && down > w || up < w && down < w);
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(CircuitParams::new(0.0, 1.0, 1.0, PI).is_err());
    assert!(CircuitParams::new(1.0, 1.0, -1.0, PI).is_err());
    assert!(build_oscillator_rep(&CircuitParams::reference_a(), 5).is_err());
    let rep = build_oscillator_rep(&CircuitParams::reference_a(), 30).unwrap();
    assert!(hamiltonian_at_flux(&rep, &CircuitParams::reference_b(), PI).is_err());
    assert!(diagonalize_and_truncate(&rep, &CircuitParams::reference_a(), PI, 11).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_hermitian(p in params(), phi in 0.0f64..(2.0 * PI)) {
        let rep = build_oscillator_rep(&p, DEFAULT_OSC_DIM).unwrap();
        prop_assert!(symmetry_defect(&rep.phi_op) < 1e-12);
        prop_assert!(hermiticity_defect(&rep.n_op) < 1e-12);
        prop_assert!(symmetry_defect(&rep.cos_op) < 1e-12);
        prop_assert!(symmetry_defect(&rep.sin_op) < 1e-12);
        let h = hamiltonian_at_flux(&rep, &p, phi).unwrap();
        prop_assert!(symmetry_defect(&h) < 1e-12);
        let q = diagonalize_and_truncate(&rep, &p, phi, 5).unwrap();
        prop_assert!(hermiticity_defect(&q.n_elems) < 1e-12);
        prop_assert!(hermiticity_defect(&to_complex(&q.cos_elems)) < 1e-12);
        prop_assert!(q.energies.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(q.frequency() > 0.0);
    }

    #[test]
    fn canonical_commutator_on_low_block(p in params()) {
        let rep = build_oscillator_rep(&p, DEFAULT_OSC_DIM).unwrap();
        let phi = to_complex(&rep.phi_op);
        let c = &phi * &rep.n_op - &rep.n_op * &phi;
        let h = rep.dim / 2;
        let d = c.view((0, 0), (h, h)).clone_owned() - DMatrix::<C64>::identity(h, h) * C64::i();
        prop_assert!(d.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-9);
    }

    #[test]
    fn spectrum_is_parity_symmetric(p in params(), phi in 0.0f64..PI) {
        let rep = build_oscillator_rep(&p, DEFAULT_OSC_DIM).unwrap();
        let a = spectrum(&rep, &p, phi, 5).unwrap();
        let b = spectrum(&rep, &p, 2.0 * PI - phi, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn truncation_converges(p in params()) {
        let levels = |dim| spectrum(&build_oscillator_rep(&p, dim).unwrap(), &p, PI, 5).unwrap();
        let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let (a, b, c) = (levels(40), levels(50), levels(80));
        prop_assert!(gap(&b, &c) < gap(&a, &b) + 1e-12);
        // soft inductances (E_L < 0.75) need more oscillator states than the default
        if p.e_l >= 0.75 {
            prop_assert!(gap(&a, &b) < 1e-6);
        }
    }
}
