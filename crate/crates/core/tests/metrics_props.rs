use std::f64::consts::{FRAC_PI_2, PI, TAU};

use fluxgate::evolution::process_tomography;
use fluxgate::linalg::max_abs_c;
use fluxgate::metrics::{
    calibrate_z, coherent_fidelity, cz, entangling_power, extract_zeta, gate_fidelity_from_chi, ideal_gate, iswap,
    linear_entropy, swap, z_rotations,
};
use fluxgate::{ChiMatrix, FluxError, IdealGateSpec, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_unitary(seed: &[f64]) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |r, c| C64::new(seed[2 * (4 * r + c)], seed[2 * (4 * r + c) + 1])).qr().q()
}

fn su2(a: f64, b: f64, c: f64) -> DMatrix<C64> {
    let e = |x: f64| C64::from_polar(1.0, x);
    let (ca, sa) = ((0.5 * a).cos(), (0.5 * a).sin());
    DMatrix::from_row_slice(2, 2, &[e(b) * ca, -e(c) * sa, e(-c) * sa, e(-b) * ca])
}

fn local(v: &[f64]) -> DMatrix<C64> {
    su2(v[0], v[1], v[2]).kronecker(&su2(v[3], v[4], v[5]))
}

fn phase(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

#[test]
fn named_members_of_the_family() {
    let id = ideal_gate(IdealGateSpec::new(0.0, 0.0));
    assert!(max_abs_c(&(id - DMatrix::identity(4, 4))) < 1e-15);
    let root = ideal_gate(IdealGateSpec::sqrt_iswap_like(0.0));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((root[(1, 1)] - C64::new(r, 0.0)).norm() < 1e-15 && (root[(1, 2)] - C64::new(0.0, -r)).norm() < 1e-15);
    let sw = ideal_gate(IdealGateSpec::new(PI, PI));
    assert!(max_abs_c(&(sw - swap() * C64::new(0.0, -1.0))) < 1e-15);
}

#[test]
fn zeta_of_a_diagonal() {
    let u = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![phase(PI / 4.0), phase(0.0), phase(0.0), phase(PI / 4.0)]));
    assert!((extract_zeta(&u).unwrap() - 1.5 * PI).abs() < 1e-12);
    for k in 0..16 {
        let z = TAU * k as f64 / 16.0;
        let got = extract_zeta(&ideal_gate(IdealGateSpec::sqrt_iswap_like(z))).unwrap();
        let d = (got - z).rem_euclid(TAU);
        assert!(d.min(TAU - d) < 1e-12);
    }
}

#[test]
fn zeta_needs_populated_diagonal() {
    assert!(matches!(extract_zeta(&swap()), Err(FluxError::UndefinedPhase { .. })));
}

#[test]
fn identity_calibrates_to_identity() {
    let c = calibrate_z(&DMatrix::identity(4, 4)).unwrap();
    assert!(max_abs_c(&(c.u_prime - DMatrix::identity(4, 4))) < 1e-12);
    assert!(c.zeta.abs() < 1e-12);
}

#[test]
fn angle_error_is_quadratic() {
    let err = |eps: f64| 1.0 - coherent_fidelity(&ideal_gate(IdealGateSpec::new(FRAC_PI_2 + eps, 0.7)), 0.7);
    assert!(err(0.0).abs() < 1e-15);
    let ratio = err(2e-3) / err(1e-3);
    assert!((ratio - 4.0).abs() < 1e-6, "{ratio}");
}

#[test]
fn uniform_leak_costs_its_weight() {
    let p: f64 = 0.03;
    let u = ideal_gate(IdealGateSpec::sqrt_iswap_like(1.1)) * C64::new((1.0 - p).sqrt(), 0.0);
    assert!((coherent_fidelity(&u, 1.1) - (1.0 - p)).abs() < 1e-14);
}

#[test]
fn pure_channel_fidelities_are_one() {
    let chi = ChiMatrix::from_unitary(&cz());
    let (f_p, f_g) = gate_fidelity_from_chi(&chi, &chi);
    assert!((f_p - 1.0).abs() < 1e-12 && (f_g - 1.0).abs() < 1e-12);
}

#[test]
fn named_entangling_powers() {
    assert!((entangling_power(&cz()).unwrap() - 2.0 / 9.0).abs() < 1e-10);
    assert!((entangling_power(&iswap()).unwrap() - 2.0 / 9.0).abs() < 1e-10);
    assert!(entangling_power(&swap()).unwrap().abs() < 1e-10);
    for z in [0.0, FRAC_PI_2, PI, 1.5 * PI] {
        let p = entangling_power(&ideal_gate(IdealGateSpec::sqrt_iswap_like(z))).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 1e-10);
    }
    assert!(entangling_power(&(cz() * C64::new(0.9, 0.0))).is_err());
}

#[test]
fn entangling_power_matches_haar_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let haar_qubit = |rng: &mut ChaCha8Rng| {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        [C64::new(v[0] / n, v[1] / n), C64::new(v[2] / n, v[3] / n)]
    };
    let u = ideal_gate(IdealGateSpec::new(1.1, 0.4)) * cz();
    let n = 40_000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let (a, b) = (haar_qubit(&mut rng), haar_qubit(&mut rng));
        let input = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
        let out: [C64; 4] = std::array::from_fn(|r| (0..4).map(|c| u[(r, c)] * input[c]).sum());
        let s = linear_entropy(&out);
        sum += s;
        sq += s * s;
    }
    let mean = sum / n as f64;
    let sigma = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    let exact = entangling_power(&u).unwrap();
    assert!((mean - exact).abs() < 4.0 * sigma, "{mean} {exact} {sigma}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeta_is_z_rotation_invariant(
        seed in prop::collection::vec(-1.0f64..1.0, 32),
        angles in prop::collection::vec(-PI..PI, 5),
    ) {
        let u = random_unitary(&seed);
        prop_assume!((0..4).all(|k| u[(k, k)].norm() > 1e-3));
        let rotated = z_rotations(angles[0], angles[1]) * &u * z_rotations(angles[2], angles[3]) * phase(angles[4]);
        let (a, b) = (extract_zeta(&u).unwrap(), extract_zeta(&rotated).unwrap());
        let d = (a - b).rem_euclid(TAU);
        prop_assert!(d.min(TAU - d) < 1e-12);
    }

    #[test]
    fn calibration_round_trip(zeta in 0.0f64..TAU, angles in prop::collection::vec(-PI..PI, 5)) {
        let ideal = ideal_gate(IdealGateSpec::sqrt_iswap_like(zeta));
        let raw = z_rotations(angles[0], angles[1]) * &ideal * z_rotations(angles[2], angles[3]) * phase(angles[4]);
        let c = calibrate_z(&raw).unwrap();
        prop_assert!(max_abs_c(&(&c.u_prime - &ideal)) < 1e-10);
        prop_assert!(max_abs_c(&(c.post() * &raw * c.pre() - &c.u_prime)) < 1e-12);
        prop_assert!(c.u_prime[(1, 1)].arg().abs() < 1e-10 && c.u_prime[(2, 2)].arg().abs() < 1e-10);
    }

    #[test]
    fn calibration_is_idempotent(
        seed in prop::collection::vec(-1.0f64..1.0, 32),
        angles in prop::collection::vec(-PI..PI, 5),
        theta in 0.3f64..2.8,
    ) {
        // a perturbed member of the family, leaking a little out of the blocks
        let u = random_unitary(&seed);
        let target = ideal_gate(IdealGateSpec::new(theta, angles[4]));
        let raw = z_rotations(angles[0], angles[1]) * (target * C64::new(0.98, 0.0) + u * C64::new(0.02, 0.0))
            * z_rotations(angles[2], angles[3]);
        let once = calibrate_z(&raw).unwrap();
        let twice = calibrate_z(&once.u_prime).unwrap();
        prop_assert!(max_abs_c(&(&twice.u_prime - &once.u_prime)) < 1e-12);
        let d = (twice.zeta - once.zeta).rem_euclid(TAU);
        prop_assert!(d.min(TAU - d) < 1e-12);
    }

    #[test]
    fn fidelity_bounded_for_contractions(
        seed in prop::collection::vec(-1.0f64..1.0, 32),
        s in prop::collection::vec(0.0f64..1.0, 4),
        zeta in 0.0f64..TAU,
    ) {
        let u = random_unitary(&seed);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, s.iter().map(|&x| C64::new(x, 0.0))));
        let f = coherent_fidelity(&(u * d), zeta);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn entangling_power_is_local_invariant(
        seed in prop::collection::vec(-1.0f64..1.0, 32),
        l1 in prop::collection::vec(-PI..PI, 6),
        l2 in prop::collection::vec(-PI..PI, 6),
    ) {
        let u = random_unitary(&seed);
        let p = entangling_power(&u).unwrap();
        let q = entangling_power(&(local(&l1) * &u * local(&l2))).unwrap();
        prop_assert!((p - q).abs() < 1e-10);
        prop_assert!((-1e-12..=2.0 / 9.0 + 1e-12).contains(&p));
    }

    #[test]
    fn chi_fidelity_matches_coherent_for_unitaries(
        zeta in 0.0f64..TAU,
        theta in 0.0f64..PI,
        l in prop::collection::vec(-0.3f64..0.3, 6),
    ) {
        let u = local(&l) * ideal_gate(IdealGateSpec::new(theta, zeta));
        let chi_ideal = ChiMatrix::from_unitary(&ideal_gate(IdealGateSpec::sqrt_iswap_like(zeta)));
        let chi = process_tomography(|x: &DMatrix<C64>| Ok(&u * x * u.adjoint())).unwrap();
        let (_, f_g) = gate_fidelity_from_chi(&chi, &chi_ideal);
        prop_assert!((f_g - coherent_fidelity(&u, zeta)).abs() < 1e-8);
    }
}
