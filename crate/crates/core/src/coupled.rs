//! Two capacitively coupled fluxoniums with flux control on qubit B.
//!
//! Everything is expressed in the sweet-spot product basis
//! `|k⟩_A ⊗ |l⟩_B` (index `k·n_b + l`). Because `n̂_A ⊗ n̂_B` is a product of
//! two imaginary antisymmetric matrices, every Hamiltonian block is real
//! symmetric.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fluxonium::{hamiltonian_at_flux, OscillatorRep, TruncatedQubit, DEFAULT_N_LEVELS, DEFAULT_OSC_DIM};
use crate::linalg::{eigh, Eigh};
use crate::{FluxError, Result, C64};

/// Labels of the computational states in the order 00, 01, 10, 11.
pub const COMPUTATIONAL: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Overlaps closer than this make a label assignment ambiguous.
const AMBIGUITY_TOL: f64 = 1e-3;

/// Which qubit receives the flux pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FluxedQubit {
    A,
    B,
}

#[derive(Debug, Clone)]
pub struct TwoQubitSystem {
    pub qubit_a: TruncatedQubit,
    pub qubit_b: TruncatedQubit,
    pub j_c: f64,
    pub dim: usize,
    /// Full Hamiltonian at `φ_B = π`.
    pub h_pi: DMatrix<f64>,
    /// `I_A ⊗ cos φ̂_B`.
    pub c_ctrl: DMatrix<f64>,
    /// `I_A ⊗ sin φ̂_B`.
    pub s_ctrl: DMatrix<f64>,
    /// Dressed spectrum at the sweet spot, labelled by maximum overlap.
    pub sweet: DressedSpectrum,
}

/// Coupling used for the reference device (GHz).
pub const REFERENCE_J_C: f64 = 0.3;

impl TwoQubitSystem {
    /// Reference device: both reference qubits, 40 oscillator states, five
    /// levels each, `J_C = 0.3` GHz.
    pub fn reference() -> Result<Self> {
        let qa = TruncatedQubit::at_sweet_spot(&crate::CircuitParams::reference_a(), DEFAULT_OSC_DIM, DEFAULT_N_LEVELS)?;
        let qb = TruncatedQubit::at_sweet_spot(&crate::CircuitParams::reference_b(), DEFAULT_OSC_DIM, DEFAULT_N_LEVELS)?;
        Self::assemble(qa, qb, REFERENCE_J_C)
    }

    /// `H_A ⊗ I + I ⊗ H_B + J_C n̂_A ⊗ n̂_B` in the sweet-spot product basis.
    pub fn assemble(qubit_a: TruncatedQubit, qubit_b: TruncatedQubit, j_c: f64) -> Result<Self> {
        Self::assemble_with_flux_on(qubit_a, qubit_b, j_c, FluxedQubit::B)
    }

    pub fn assemble_with_flux_on(
        qubit_a: TruncatedQubit,
        qubit_b: TruncatedQubit,
        j_c: f64,
        fluxed: FluxedQubit,
    ) -> Result<Self> {
        if fluxed == FluxedQubit::A {
            return Err(FluxError::Unsupported(
                "flux control is only modelled on qubit B; qubit A stays at its sweet spot".into(),
            ));
        }
        if !j_c.is_finite() {
            return Err(FluxError::invalid("coupling J_C must be finite"));
        }
        for (name, q) in [("A", &qubit_a), ("B", &qubit_b)] {
            if (q.params.phi_ext - PI).abs() > 1e-12 {
                return Err(FluxError::invalid(format!(
                    "qubit {name} must be truncated at the sweet spot, got phi = {}",
                    q.params.phi_ext
                )));
            }
            if q.n_elems.nrows() != q.n_levels || q.cos_elems.nrows() != q.n_levels {
                return Err(FluxError::invalid(format!("qubit {name} matrix blocks do not match n_levels")));
            }
        }
        let (na, nb) = (qubit_a.n_levels, qubit_b.n_levels);
        let ia = DMatrix::<f64>::identity(na, na);
        let ib = DMatrix::<f64>::identity(nb, nb);

        let coupling = qubit_a.n_elems.kronecker(&qubit_b.n_elems) * C64::new(j_c, 0.0);
        let residual = coupling.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if residual > 1e-12 * j_c.abs().max(1.0) {
            return Err(FluxError::numerical(format!("coupling block not real (max imag {residual:e})")));
        }
        let mut h_pi = qubit_a.hamiltonian().kronecker(&ib) + ia.kronecker(&qubit_b.hamiltonian());
        h_pi += coupling.map(|z| z.re);
        let c_ctrl = ia.kronecker(&qubit_b.cos_elems);
        let s_ctrl = ia.kronecker(&qubit_b.sin_elems);

        let dim = na * nb;
        let eig = eigh(&h_pi)?;
        let labels = label_by_product_overlap(&eig, na, nb);
        let sweet = DressedSpectrum::new(PI, eig, labels);
        Ok(TwoQubitSystem { qubit_a, qubit_b, j_c, dim, h_pi, c_ctrl, s_ctrl, sweet })
    }

    pub fn e_j_b(&self) -> f64 {
        self.qubit_b.params.e_j
    }

    /// `H(φ) = H(π) − E_J,B (1 + cos φ) c_ctrl − E_J,B sin φ s_ctrl`.
    pub fn hamiltonian(&self, phi: f64) -> DMatrix<f64> {
        let ej = self.e_j_b();
        let mut h = self.h_pi.clone();
        h -= &self.c_ctrl * (ej * (1.0 + phi.cos()));
        h -= &self.s_ctrl * (ej * phi.sin());
        h
    }

    /// Rebuilds `H(φ)` from qubit B's full oscillator-basis Hamiltonian,
    /// projected onto the sweet-spot truncation. Independent of the control
    /// decomposition used by [`hamiltonian`](Self::hamiltonian).
    pub fn direct_hamiltonian(&self, rep_b: &OscillatorRep, phi: f64) -> Result<DMatrix<f64>> {
        let hb_full = hamiltonian_at_flux(rep_b, &self.qubit_b.params.with_flux(PI), phi)?;
        let v = &self.qubit_b.basis;
        let mut hb = v.transpose() * hb_full * v;
        for k in 0..self.qubit_b.n_levels {
            hb[(k, k)] -= self.qubit_b.ground_energy;
        }
        let (na, nb) = (self.qubit_a.n_levels, self.qubit_b.n_levels);
        let ia = DMatrix::<f64>::identity(na, na);
        let ib = DMatrix::<f64>::identity(nb, nb);
        let coupling = self.qubit_a.n_elems.kronecker(&self.qubit_b.n_elems).map(|z| z.re * self.j_c);
        Ok(self.qubit_a.hamiltonian().kronecker(&ib) + ia.kronecker(&hb) + coupling)
    }

    pub fn product_index(&self, k: usize, l: usize) -> usize {
        k * self.qubit_b.n_levels + l
    }

    /// Dressed computational states at the sweet spot as columns (00, 01, 10, 11).
    pub fn computational_basis(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.dim, 4);
        for (c, &(k, l)) in COMPUTATIONAL.iter().enumerate() {
            let idx = self.sweet.labels.index(k, l);
            p.set_column(c, &self.sweet.states.column(idx));
        }
        p
    }
}

/// Assignment of product labels `(k, l)` to eigenstate indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedLabels {
    pub n_a: usize,
    pub n_b: usize,
    /// `map[k·n_b + l]` is the eigenstate index carrying label `(k, l)`.
    pub map: Vec<usize>,
    /// Overlap magnitude behind each assignment.
    pub overlap: Vec<f64>,
}

impl DressedLabels {
    pub fn index(&self, k: usize, l: usize) -> usize {
        self.map[k * self.n_b + l]
    }

    pub fn overlap_of(&self, k: usize, l: usize) -> f64 {
        self.overlap[k * self.n_b + l]
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.map.len()];
        for &i in &self.map {
            if i >= seen.len() || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }
}

/// Greedy maximum-overlap matching. `overlap[(label, state)]` holds magnitudes.
fn greedy_assign(overlap: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    let n = overlap.nrows();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(n * n);
    for label in 0..n {
        for state in 0..n {
            pairs.push((label, state, overlap[(label, state)]));
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)));
    let mut map = vec![usize::MAX; n];
    let mut ov = vec![0.0; n];
    let mut taken = vec![false; n];
    for (label, state, w) in pairs {
        if map[label] == usize::MAX && !taken[state] {
            map[label] = state;
            ov[label] = w;
            taken[state] = true;
        }
    }
    for label in 0..n {
        let row = overlap.row(label);
        let mut best: Vec<f64> = row.iter().copied().collect();
        best.sort_by(|a, b| b.total_cmp(a));
        if best.len() > 1 && best[0] - best[1] < AMBIGUITY_TOL && best[0] > 0.1 {
            log::warn!("ambiguous dressed label {label}: overlaps {:.6} and {:.6}", best[0], best[1]);
        }
    }
    (map, ov)
}

fn label_by_product_overlap(eig: &Eigh, n_a: usize, n_b: usize) -> DressedLabels {
    let overlap = eig.vectors.map(f64::abs);
    let (map, overlap) = greedy_assign(&overlap);
    DressedLabels { n_a, n_b, map, overlap }
}

/// Eigensystem of `H(φ)` together with its product labels.
#[derive(Debug, Clone)]
pub struct DressedSpectrum {
    pub phi: f64,
    /// Absolute eigenvalues (GHz), ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, in the sweet-spot product basis.
    pub states: DMatrix<f64>,
    pub labels: DressedLabels,
}

impl DressedSpectrum {
    fn new(phi: f64, eig: Eigh, labels: DressedLabels) -> Self {
        DressedSpectrum { phi, energies: eig.values.iter().copied().collect(), states: eig.vectors, labels }
    }

    pub fn energy(&self, k: usize, l: usize) -> f64 {
        self.energies[self.labels.index(k, l)]
    }

    pub fn state(&self, k: usize, l: usize) -> nalgebra::DVectorView<'_, f64> {
        self.states.column(self.labels.index(k, l))
    }
}

/// Eigensystem of `H(φ)` labelled by maximum overlap with product states.
pub fn dressed_spectrum(sys: &TwoQubitSystem, phi: f64) -> Result<DressedSpectrum> {
    let eig = eigh(&sys.hamiltonian(phi))?;
    let labels = label_by_product_overlap(&eig, sys.qubit_a.n_levels, sys.qubit_b.n_levels);
    Ok(DressedSpectrum::new(phi, eig, labels))
}

/// Carries dressed labels by continuity along a sequence of fluxes.
///
/// Each new eigenvector inherits the label of the previous state it overlaps
/// most, and its sign is flipped to keep that overlap positive.
#[derive(Debug, Clone)]
pub struct LabelTracker<'a> {
    sys: &'a TwoQubitSystem,
    prev: DressedSpectrum,
    /// Smallest overlap between consecutive labelled states seen so far.
    pub min_overlap: f64,
}

impl<'a> LabelTracker<'a> {
    /// Starts from the sweet-spot labelling.
    pub fn new(sys: &'a TwoQubitSystem) -> Self {
        LabelTracker { sys, prev: sys.sweet.clone(), min_overlap: 1.0 }
    }

    pub fn starting_at(sys: &'a TwoQubitSystem, start: DressedSpectrum) -> Self {
        LabelTracker { sys, prev: start, min_overlap: 1.0 }
    }

    pub fn current(&self) -> &DressedSpectrum {
        &self.prev
    }

    pub fn advance(&mut self, phi: f64) -> Result<&DressedSpectrum> {
        let mut eig = eigh(&self.sys.hamiltonian(phi))?;
        let n = self.sys.dim;
        // rows: previous labels, columns: new eigenstates
        let mut prev_labelled = DMatrix::zeros(n, n);
        for label in 0..n {
            prev_labelled.set_column(label, &self.prev.states.column(self.prev.labels.map[label]));
        }
        let signed = prev_labelled.transpose() * &eig.vectors;
        let (map, overlap) = greedy_assign(&signed.map(f64::abs));
        for label in 0..n {
            let state = map[label];
            if signed[(label, state)] < 0.0 {
                eig.vectors.column_mut(state).neg_mut();
            }
            self.min_overlap = self.min_overlap.min(overlap[label]);
        }
        let labels = DressedLabels { n_a: self.prev.labels.n_a, n_b: self.prev.labels.n_b, map, overlap };
        self.prev = DressedSpectrum::new(phi, eig, labels);
        Ok(&self.prev)
    }
}

/// Dressed spectra along `phis`, labels carried by continuity from the sweet spot.
///
/// The walk from π to `phis[0]` and between consecutive entries is refined
/// so that no step exceeds `max_step` radians.
pub fn track_spectrum(sys: &TwoQubitSystem, phis: &[f64], max_step: f64) -> Result<Vec<DressedSpectrum>> {
    if max_step <= 0.0 {
        return Err(FluxError::invalid("tracking step must be positive"));
    }
    let mut tracker = LabelTracker::new(sys);
    let mut out = Vec::with_capacity(phis.len());
    let mut at = PI;
    for &phi in phis {
        let steps = ((phi - at).abs() / max_step).ceil().max(1.0) as usize;
        for s in 1..=steps {
            tracker.advance(at + (phi - at) * s as f64 / steps as f64)?;
        }
        at = phi;
        out.push(tracker.current().clone());
    }
    Ok(out)
}

/// Default tracking resolution (rad) for continuity labelling.
pub const TRACK_STEP: f64 = 1e-3 * PI;

fn tracked_at(sys: &TwoQubitSystem, phi: f64) -> Result<DressedSpectrum> {
    Ok(track_spectrum(sys, &[phi], TRACK_STEP)?.pop().expect("one point"))
}

/// Gap between the two eigenstates carrying the `|01⟩`, `|10⟩` content.
fn single_excitation_gap(sys: &TwoQubitSystem, phi: f64) -> Result<f64> {
    let eig = eigh(&sys.hamiltonian(phi))?;
    let i01 = sys.product_index(0, 1);
    let i10 = sys.product_index(1, 0);
    let mut weights: Vec<(usize, f64)> = (0..sys.dim)
        .map(|j| (j, eig.vectors[(i01, j)].powi(2) + eig.vectors[(i10, j)].powi(2)))
        .collect();
    weights.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok((eig.values[weights[0].0] - eig.values[weights[1].0]).abs())
}

/// Location of the `|01⟩`–`|10⟩` avoided crossing for `φ ∈ (π, 3π/2)`.
///
/// Returns the detuning from π (rad) and the minimal splitting (GHz).
pub fn find_level_crossing(sys: &TwoQubitSystem) -> Result<(f64, f64)> {
    let (phi, gap) = find_level_crossing_in(sys, PI, 1.5 * PI)?;
    Ok((phi - PI, gap))
}

/// Minimizes the `|01⟩`–`|10⟩` gap over the open window `(lo, hi)`.
/// Returns the absolute flux and the gap.
pub fn find_level_crossing_in(sys: &TwoQubitSystem, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if sys.qubit_b.frequency() >= sys.qubit_a.frequency() {
        return Err(FluxError::invalid("the fluxed qubit B must have the lower frequency"));
    }
    if !(hi > lo) {
        return Err(FluxError::invalid("empty crossing window"));
    }
    const GRID: usize = 400;
    let h = (hi - lo) / GRID as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 1..GRID {
        let g = single_excitation_gap(sys, lo + h * i as f64)?;
        if g < best.1 {
            best = (i, g);
        }
    }
    if best.0 <= 1 || best.0 >= GRID - 1 {
        return Err(FluxError::NoCrossing { lo, hi });
    }
    let (mut a, mut b) = (lo + h * (best.0 - 1) as f64, lo + h * (best.0 + 1) as f64);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = single_excitation_gap(sys, c)?;
    let mut fd = single_excitation_gap(sys, d)?;
    while (b - a).abs() > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = single_excitation_gap(sys, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = single_excitation_gap(sys, d)?;
        }
    }
    let phi = 0.5 * (a + b);
    Ok((phi, single_excitation_gap(sys, phi)?))
}

/// Analytic two-level description of the single-excitation subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelModel {
    /// Diagonal qubit-B frequency in the sweet-spot basis (GHz).
    pub omega_phi: f64,
    /// Off-diagonal qubit-B term (GHz).
    pub a_phi: f64,
    /// Effective exchange coupling (GHz).
    pub g: f64,
    /// Non-interacting `|10⟩`–`|01⟩` gap (GHz).
    pub delta_phi: f64,
    /// Mixing angle with `tan ϑ = a_φ / ω_φ`.
    pub theta_mix: f64,
    /// Ratio of the `|10⟩` to `|01⟩` amplitude in the ground state of the
    /// reduced Hamiltonian.
    pub lambda_amp: C64,
}

/// `(ω_φ, a_φ, Δ_φ)` of the uncoupled two-level description.
fn bare_two_level(qubit_a: &TruncatedQubit, qubit_b: &TruncatedQubit, phi: f64) -> (f64, f64, f64) {
    let ej = qubit_b.params.e_j;
    let omega_phi =
        qubit_b.frequency() - ej * (1.0 + phi.cos()) * (qubit_b.cos_elems[(1, 1)] - qubit_b.cos_elems[(0, 0)]);
    let a_phi = -2.0 * ej * phi.sin() * qubit_b.sin_elems[(0, 1)];
    let delta_phi = qubit_a.frequency() - (omega_phi * omega_phi + a_phi * a_phi).sqrt();
    (omega_phi, a_phi, delta_phi)
}

pub fn two_level_model(qubit_a: &TruncatedQubit, qubit_b: &TruncatedQubit, j_c: f64, phi: f64) -> Result<TwoLevelModel> {
    if !phi.is_finite() || !j_c.is_finite() {
        return Err(FluxError::invalid("flux and coupling must be finite"));
    }
    if (qubit_b.params.phi_ext - PI).abs() > 1e-12 {
        return Err(FluxError::invalid("qubit B matrix elements must be taken at the sweet spot"));
    }
    let (omega_phi, a_phi, delta_phi) = bare_two_level(qubit_a, qubit_b, phi);
    let g = (qubit_a.n_elems[(0, 1)] * qubit_b.n_elems[(0, 1)] * j_c).re;
    let theta_mix = (a_phi / omega_phi).atan();

    // Reduced Hamiltonian in (|01>, |10>) is -(Δ/2)σz + g cosϑ σx. Its ground
    // state is anti-aligned with the field direction at polar angle `polar`.
    let off = g * theta_mix.cos();
    let polar = off.atan2(-0.5 * delta_phi);
    let (v0, v1) = ((0.5 * polar).sin(), -(0.5 * polar).cos());
    let lambda_amp = C64::new(v1 / v0, 0.0);
    Ok(TwoLevelModel { omega_phi, a_phi, g, delta_phi, theta_mix, lambda_amp })
}

/// Detuning from π (rad, in `(0, π/2)`) where the two-level model's
/// non-interacting gap `Δ_φ` vanishes.
pub fn two_level_crossing(qubit_a: &TruncatedQubit, qubit_b: &TruncatedQubit) -> Result<f64> {
    if (qubit_b.params.phi_ext - PI).abs() > 1e-12 {
        return Err(FluxError::invalid("qubit B matrix elements must be taken at the sweet spot"));
    }
    let delta = |d: f64| bare_two_level(qubit_a, qubit_b, PI + d).2;
    let (mut lo, mut hi) = (1e-9, 0.5 * PI - 1e-9);
    let (f_lo, f_hi) = (delta(lo), delta(hi));
    if f_lo.signum() == f_hi.signum() {
        return Err(FluxError::NoCrossing { lo: PI + lo, hi: PI + hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if delta(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Numerical counterpart of `λ`: expansion of `|10⟩_π` in the tracked
/// instantaneous states, `⟨01_φ|10_π⟩ / ⟨10_φ|10_π⟩`.
pub fn mixing_amplitude(sys: &TwoQubitSystem, phi: f64) -> Result<C64> {
    let spec = tracked_at(sys, phi)?;
    let ten = sys.sweet.state(1, 0);
    let a10 = spec.state(1, 0).dot(&ten);
    let a01 = spec.state(0, 1).dot(&ten);
    if a10.abs() < 1e-12 {
        return Err(FluxError::numerical("|10> has no overlap with its tracked state"));
    }
    Ok(C64::new(a01 / a10, 0.0))
}

/// `E(11) − E(10) − E(01) + E(00)` at flux `phi` (GHz), continuity labels.
pub fn static_zz(sys: &TwoQubitSystem, phi: f64) -> Result<f64> {
    let spec = if (phi - PI).abs() < 1e-15 { sys.sweet.clone() } else { tracked_at(sys, phi)? };
    Ok(spec.energy(1, 1) - spec.energy(1, 0) - spec.energy(0, 1) + spec.energy(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxonium::{build_oscillator_rep, CircuitParams};

    fn reference(j_c: f64) -> TwoQubitSystem {
        let qa = TruncatedQubit::at_sweet_spot(&CircuitParams::reference_a(), 40, 5).unwrap();
        let qb = TruncatedQubit::at_sweet_spot(&CircuitParams::reference_b(), 40, 5).unwrap();
        TwoQubitSystem::assemble(qa, qb, j_c).unwrap()
    }

    #[test]
    fn noninteracting_spectrum_is_tensor_sum() {
        let sys = reference(0.0);
        let mut sums: Vec<f64> = Vec::new();
        for ea in &sys.qubit_a.energies {
            for eb in &sys.qubit_b.energies {
                sums.push(ea + eb);
            }
        }
        sums.sort_by(f64::total_cmp);
        for (x, y) in sums.iter().zip(&sys.sweet.energies) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(sys.sweet.labels.overlap.iter().all(|&o| (o - 1.0).abs() < 1e-12));
    }

    #[test]
    fn flux_on_a_is_rejected() {
        let qa = TruncatedQubit::at_sweet_spot(&CircuitParams::reference_a(), 40, 5).unwrap();
        let qb = TruncatedQubit::at_sweet_spot(&CircuitParams::reference_b(), 40, 5).unwrap();
        let err = TwoQubitSystem::assemble_with_flux_on(qa, qb, 0.3, FluxedQubit::A).unwrap_err();
        assert!(matches!(err, FluxError::Unsupported(_)));
    }

    #[test]
    fn off_sweet_spot_truncation_is_rejected() {
        let pa = CircuitParams::reference_a();
        let rep = build_oscillator_rep(&pa, 40).unwrap();
        let qa = crate::fluxonium::diagonalize_and_truncate(&rep, &pa, PI + 0.1, 5).unwrap();
        let qb = TruncatedQubit::at_sweet_spot(&CircuitParams::reference_b(), 40, 5).unwrap();
        assert!(TwoQubitSystem::assemble(qa, qb, 0.3).is_err());
    }

    #[test]
    fn decomposition_matches_direct_assembly() {
        let sys = reference(0.3);
        let rep_b = build_oscillator_rep(&CircuitParams::reference_b(), 40).unwrap();
        for i in 0..20 {
            let phi = PI - 0.2 * PI + 0.4 * PI * i as f64 / 19.0;
            let d = (sys.hamiltonian(phi) - sys.direct_hamiltonian(&rep_b, phi).unwrap()).amax();
            assert!(d < 1e-10, "phi = {phi}: {d:e}");
        }
    }

    #[test]
    fn sweet_spot_ordering_and_labels() {
        let sys = reference(0.3);
        let s = &sys.sweet;
        assert!(s.labels.is_bijection());
        assert!(s.energy(0, 0) < s.energy(0, 1) && s.energy(0, 1) < s.energy(1, 0));
        for &(k, l) in &COMPUTATIONAL {
            assert!(s.labels.overlap_of(k, l) > 0.7);
        }
    }

    #[test]
    fn noninteracting_gap_closes() {
        let sys = reference(0.0);
        let (_, gap) = find_level_crossing(&sys).unwrap();
        assert!(gap < 1e-6, "{gap:e}");
    }

    #[test]
    fn two_level_model_at_sweet_spot() {
        let sys = reference(0.3);
        let m = two_level_model(&sys.qubit_a, &sys.qubit_b, 0.3, PI).unwrap();
        assert!(m.a_phi.abs() < 1e-12);
        assert!((m.omega_phi - sys.qubit_b.frequency()).abs() < 1e-12);
        assert!((m.delta_phi - (sys.qubit_a.frequency() - sys.qubit_b.frequency())).abs() < 1e-12);
        assert!((m.delta_phi - 0.304).abs() < 1e-3);
        assert!(m.lambda_amp.norm() < 0.1);
    }

    #[test]
    fn static_zz_vanishes_without_coupling() {
        let sys = reference(0.0);
        assert!(static_zz(&sys, PI).unwrap().abs() < 1e-10);
        assert!(static_zz(&sys, PI + 0.03 * PI).unwrap().abs() < 1e-10);
    }

    #[test]
    fn tracking_rejects_bad_step() {
        let sys = reference(0.3);
        assert!(track_spectrum(&sys, &[PI], 0.0).is_err());
    }
}
