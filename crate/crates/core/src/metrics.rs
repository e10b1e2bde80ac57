//! Ideal gate family, phase calibration and fidelity figures.
//!
//! Two-qubit operators are 4×4 in the order `|00⟩, |01⟩, |10⟩, |11⟩` with
//! qubit A as the left label.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::evolution::ChiMatrix;
use crate::linalg::{trace_c, unitarity_defect};
use crate::{FluxError, Result, C64};

const PHASE_FLOOR: f64 = 1e-6;
const BLOCK_LEAK_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealGateSpec {
    /// Rotation angle inside the `{|01⟩, |10⟩}` block.
    pub theta: f64,
    /// Collective phase.
    pub zeta: f64,
}

impl IdealGateSpec {
    pub fn new(theta: f64, zeta: f64) -> Self {
        IdealGateSpec { theta, zeta }
    }

    /// The `√iSWAP`-like member with collective phase `zeta`.
    pub fn sqrt_iswap_like(zeta: f64) -> Self {
        IdealGateSpec { theta: FRAC_PI_2, zeta }
    }
}

/// Excitation-preserving target: `e^{−iζ/2}` on `|00⟩, |11⟩` and a
/// `cos θ/2`, `−i sin θ/2` rotation mixing `|01⟩, |10⟩`.
pub fn ideal_gate(spec: IdealGateSpec) -> DMatrix<C64> {
    let outer = C64::from_polar(1.0, -0.5 * spec.zeta);
    let c = C64::new((0.5 * spec.theta).cos(), 0.0);
    let s = C64::new(0.0, -(0.5 * spec.theta).sin());
    let z = C64::new(0.0, 0.0);
    DMatrix::from_row_slice(4, 4, &[outer, z, z, z, z, c, s, z, z, s, c, z, z, z, z, outer])
}

pub fn cz() -> DMatrix<C64> {
    let mut u = DMatrix::identity(4, 4);
    u[(3, 3)] = C64::new(-1.0, 0.0);
    u
}

pub fn iswap() -> DMatrix<C64> {
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let z = C64::new(0.0, 0.0);
    DMatrix::from_row_slice(4, 4, &[o, z, z, z, z, z, i, z, z, i, z, z, z, z, z, o])
}

pub fn swap() -> DMatrix<C64> {
    let o = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    DMatrix::from_row_slice(4, 4, &[o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o])
}

/// `diag(1, e^{i b}, e^{i a}, e^{i(a+b)})`: Z rotations by `a` on qubit A
/// and `b` on qubit B.
pub fn z_rotations(a: f64, b: f64) -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, b),
        C64::from_polar(1.0, a),
        C64::from_polar(1.0, a + b),
    ]))
}

fn wrap_2pi(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

const LABELS: [&str; 4] = ["00", "01", "10", "11"];

/// Diagonal phases `β_kl = arg⟨kl|U|kl⟩`.
pub fn diagonal_phases(u: &DMatrix<C64>) -> Result<[f64; 4]> {
    check_shape(u)?;
    let mut beta = [0.0; 4];
    for (k, b) in beta.iter_mut().enumerate() {
        let d = u[(k, k)];
        if d.norm() < PHASE_FLOOR {
            return Err(FluxError::UndefinedPhase { label: LABELS[k], magnitude: d.norm() });
        }
        *b = d.arg();
    }
    Ok(beta)
}

/// Collective phase `ζ = −β00 − β11 + β01 + β10`, wrapped to `[0, 2π)`.
pub fn extract_zeta(u: &DMatrix<C64>) -> Result<f64> {
    let b = diagonal_phases(u)?;
    Ok(wrap_2pi(-b[0] - b[3] + b[1] + b[2]))
}

fn check_shape(u: &DMatrix<C64>) -> Result<()> {
    if u.nrows() != 4 || u.ncols() != 4 {
        return Err(FluxError::invalid(format!("expected a 4x4 operator, got {}x{}", u.nrows(), u.ncols())));
    }
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(FluxError::invalid("operator has non-finite entries"));
    }
    Ok(())
}

/// Weight outside the excitation-preserving pattern, per column on average.
pub fn block_leakage(u: &DMatrix<C64>) -> f64 {
    let allowed = |r: usize, c: usize| r == c || (r == 1 && c == 2) || (r == 2 && c == 1);
    let mut w = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            if !allowed(r, c) {
                w += u[(r, c)].norm_sqr();
            }
        }
    }
    w / 4.0
}

/// Operator after local Z calibration, with the rotations that produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedGate {
    pub u_prime: DMatrix<C64>,
    /// `[pre_a, pre_b, post_a, post_b, global]` (rad):
    /// `u′ = e^{i·global}·Z(post_a, post_b)·u·Z(pre_a, pre_b)`.
    pub z_angles: [f64; 5],
    /// Diagonal phases of the raw operator.
    pub beta: [f64; 4],
    pub zeta: f64,
}

impl CalibratedGate {
    pub fn pre(&self) -> DMatrix<C64> {
        z_rotations(self.z_angles[0], self.z_angles[1])
    }

    /// Post rotation including the global phase.
    pub fn post(&self) -> DMatrix<C64> {
        z_rotations(self.z_angles[2], self.z_angles[3]) * C64::from_polar(1.0, self.z_angles[4])
    }
}

/// Brings `u` to the phase structure of [`ideal_gate`] with single-qubit Z
/// rotations before and after it and a global phase.
///
/// Diagonal phases become `−ζ/2, 0, 0, −ζ/2`. The remaining freedom (how a
/// rotation splits between before and after) rotates the two block
/// off-diagonals symmetrically onto `−π/2`.
pub fn calibrate_z(u: &DMatrix<C64>) -> Result<CalibratedGate> {
    let beta = diagonal_phases(u)?;
    let zeta = wrap_2pi(-beta[0] - beta[3] + beta[1] + beta[2]);
    let leak = block_leakage(u);
    if leak > BLOCK_LEAK_WARN {
        log::warn!("operator is far from excitation preserving (off-block weight {leak:.3}); calibration unreliable");
    }
    let gamma = -0.5 * zeta - beta[0];
    let x = -beta[1] - gamma; // total rotation on qubit B
    let y = -beta[2] - gamma; // total rotation on qubit A
    let (u12, u21) = (u[(1, 2)], u[(2, 1)]);
    let mut d = 0.0;
    if u12.norm() > 1e-12 && u21.norm() > 1e-12 {
        d = 0.5 * (u21 * u12.conj()).arg();
        let common = (u12 * C64::from_polar(1.0, gamma + 0.5 * (x + y) + d)).arg();
        if (common + FRAC_PI_2).cos() < 0.0 {
            d += PI;
        }
    }
    let (post_b, pre_b) = (0.5 * (x + d), 0.5 * (x - d));
    let (post_a, pre_a) = (0.5 * (y - d), 0.5 * (y + d));
    let z_angles = [pre_a, pre_b, post_a, post_b, gamma];
    let u_prime = z_rotations(post_a, post_b) * u * z_rotations(pre_a, pre_b) * C64::from_polar(1.0, gamma);
    Ok(CalibratedGate { u_prime, z_angles, beta, zeta })
}

/// `[Tr(u′†u′) + |Tr(U_ideal(π/2, ζ)† u′)|²] / 20`.
pub fn coherent_fidelity(u_prime: &DMatrix<C64>, zeta: f64) -> f64 {
    let ideal = ideal_gate(IdealGateSpec::sqrt_iswap_like(zeta));
    let norm = trace_c(&(u_prime.adjoint() * u_prime)).re;
    let overlap = trace_c(&(ideal.adjoint() * u_prime)).norm_sqr();
    (norm + overlap) / 20.0
}

/// `(F_p, F_g)` with `F_p = Tr(χ_ideal χ_sim)` and `F_g = (4F_p + Tr χ_sim)/5`.
pub fn gate_fidelity_from_chi(chi_sim: &ChiMatrix, chi_ideal: &ChiMatrix) -> (f64, f64) {
    let f_p = chi_ideal.overlap(chi_sim);
    (f_p, (4.0 * f_p + chi_sim.trace()) / 5.0)
}

fn pauli_eigenstates() -> [[C64; 2]; 6] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re, im);
    [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
        [c(r, 0.0), c(r, 0.0)],
        [c(r, 0.0), c(-r, 0.0)],
        [c(r, 0.0), c(0.0, r)],
        [c(r, 0.0), c(0.0, -r)],
    ]
}

/// Linear entropy `1 − Tr ρ_A²` of a two-qubit pure state.
pub fn linear_entropy(psi: &[C64; 4]) -> f64 {
    // ρ_A = M M† with M[k][l] = ψ[2k + l]
    let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                rho[i][j] += psi[2 * i + l] * psi[2 * j + l].conj();
            }
        }
    }
    let purity = rho[0][0].norm_sqr() + rho[1][1].norm_sqr() + 2.0 * rho[0][1].norm_sqr();
    1.0 - purity
}

fn apply(u: &DMatrix<C64>, a: &[C64; 2], b: &[C64; 2]) -> [C64; 4] {
    let input = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut out = [C64::new(0.0, 0.0); 4];
    for (r, o) in out.iter_mut().enumerate() {
        for (c, x) in input.iter().enumerate() {
            *o += u[(r, c)] * x;
        }
    }
    out
}

/// Mean linear entropy generated from product inputs (maximum 2/9).
///
/// The average is a degree-(2,2) polynomial in each factor, so the six Pauli
/// eigenstates per qubit (a 2-design) give it exactly.
pub fn entangling_power(u: &DMatrix<C64>) -> Result<f64> {
    check_shape(u)?;
    let defect = unitarity_defect(u);
    if defect > 1e-8 {
        return Err(FluxError::invalid(format!("entangling power needs a unitary (defect {defect:e})")));
    }
    let states = pauli_eigenstates();
    let mut acc = 0.0;
    for a in &states {
        for b in &states {
            acc += linear_entropy(&apply(u, a, b));
        }
    }
    Ok(acc / 36.0)
}

/// Closest unitary in Frobenius norm (polar factor).
pub fn nearest_unitary(u: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let svd = u.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(w), Some(v_t)) => Ok(w * v_t),
        _ => Err(FluxError::numerical("SVD failed")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub coherent_f: f64,
    pub f_p: f64,
    pub f_g: f64,
    pub leakage_total: f64,
    /// Entangling power of the polar (unitary) part of `u′`.
    pub entangling_power: f64,
    #[serde(rename = "zeta_rad")]
    pub zeta: f64,
}

impl FidelityReport {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("coherent_f", self.coherent_f), ("f_p", self.f_p), ("f_g", self.f_g)] {
            if !(-1e-9..=1.0 + 1e-9).contains(&f) {
                return Err(FluxError::numerical(format!("{name} = {f} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn named_members() {
        assert!(max_diff(&ideal_gate(IdealGateSpec::new(0.0, 0.0)), &DMatrix::identity(4, 4)) < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = ideal_gate(IdealGateSpec::new(FRAC_PI_2, 0.0));
        assert_abs_diff_eq!(g[(1, 1)].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(1, 2)].im, -s, epsilon = 1e-15);
        // SWAP up to the global phase −i
        let sw = ideal_gate(IdealGateSpec::new(PI, PI)) * C64::new(0.0, 1.0);
        assert!(max_diff(&sw, &swap()) < 1e-15);
    }

    #[test]
    fn zeta_of_diagonal() {
        let q = C64::from_polar(1.0, PI / 4.0);
        let o = C64::new(1.0, 0.0);
        let u = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![q, o, o, q]));
        assert_abs_diff_eq!(extract_zeta(&u).unwrap(), 1.5 * PI, epsilon = 1e-14);
    }

    #[test]
    fn zeta_of_ideal_grid() {
        for k in 0..16 {
            let z0 = k as f64 * TAU / 16.0;
            let z = extract_zeta(&ideal_gate(IdealGateSpec::sqrt_iswap_like(z0))).unwrap();
            assert_abs_diff_eq!(z, z0, epsilon = 1e-12);
        }
    }

    #[test]
    fn vanishing_diagonal_is_an_error() {
        assert!(matches!(extract_zeta(&iswap()), Err(FluxError::UndefinedPhase { label: "01", .. })));
    }

    #[test]
    fn identity_calibrates_to_itself() {
        let c = calibrate_z(&DMatrix::identity(4, 4)).unwrap();
        assert!(max_diff(&c.u_prime, &DMatrix::identity(4, 4)) < 1e-15);
        assert!(c.z_angles.iter().all(|a| a.abs() < 1e-15));
    }

    #[test]
    fn calibration_structure() {
        let u = z_rotations(0.3, -1.1) * ideal_gate(IdealGateSpec::sqrt_iswap_like(2.0)) * z_rotations(0.7, 0.2)
            * C64::from_polar(1.0, 0.4);
        let c = calibrate_z(&u).unwrap();
        assert_abs_diff_eq!(c.u_prime[(1, 1)].arg(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.u_prime[(2, 2)].arg(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.u_prime[(1, 2)].arg(), -FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(c.zeta, 2.0, epsilon = 1e-12);
        let rebuilt = c.post() * &u * c.pre();
        assert!(max_diff(&rebuilt, &c.u_prime) < 1e-14);
    }

    #[test]
    fn fidelity_special_cases() {
        let ideal = ideal_gate(IdealGateSpec::sqrt_iswap_like(0.9));
        assert_abs_diff_eq!(coherent_fidelity(&ideal, 0.9), 1.0, epsilon = 1e-14);
        let p: f64 = 0.013;
        assert_abs_diff_eq!(coherent_fidelity(&(&ideal * C64::new((1.0 - p).sqrt(), 0.0)), 0.9), 1.0 - p, epsilon = 1e-14);
    }

    #[test]
    fn fidelity_is_quadratic_in_angle_error() {
        let err = |eps: f64| 1.0 - coherent_fidelity(&ideal_gate(IdealGateSpec::new(FRAC_PI_2 + eps, 0.4)), 0.4);
        let (e1, e2) = (err(1e-3), err(2e-3));
        assert!((e2 / e1 - 4.0).abs() < 1e-3, "ratio {}", e2 / e1);
        // 1 − F = ε²/10 at leading order
        assert_abs_diff_eq!(e1, 1e-6 / 10.0, epsilon = 1e-10);
    }

    #[test]
    fn entangling_power_values() {
        assert_abs_diff_eq!(entangling_power(&cz()).unwrap(), 2.0 / 9.0, epsilon = 1e-10);
        assert_abs_diff_eq!(entangling_power(&iswap()).unwrap(), 2.0 / 9.0, epsilon = 1e-10);
        assert_abs_diff_eq!(entangling_power(&swap()).unwrap(), 0.0, epsilon = 1e-10);
        for z in [0.0, FRAC_PI_2, PI, 1.5 * PI] {
            let g = ideal_gate(IdealGateSpec::sqrt_iswap_like(z));
            assert_abs_diff_eq!(entangling_power(&g).unwrap(), 1.0 / 6.0, epsilon = 1e-10);
        }
        assert!(entangling_power(&(cz() * C64::new(0.9, 0.0))).is_err());
    }

    #[test]
    fn chi_fidelities_of_ideal() {
        let g = ideal_gate(IdealGateSpec::sqrt_iswap_like(1.0));
        let chi = ChiMatrix::from_unitary(&g);
        let (fp, fg) = gate_fidelity_from_chi(&chi, &chi);
        assert_abs_diff_eq!(fp, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(fg, 1.0, epsilon = 1e-13);
    }
}
