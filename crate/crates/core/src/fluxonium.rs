//! Single fluxonium: oscillator-basis representation, diagonalization and
//! truncation to a few-level qubit.
//!
//! The circuit Hamiltonian is
//! `H = 4 E_C n² + ½ E_L φ² − E_J cos(φ − φ_ext)`, written in the eigenbasis
//! of its `E_J = 0` part (a harmonic oscillator of frequency `√(8 E_C E_L)`).
//! The junction term is expanded as `cos φ̂ cos φ_ext + sin φ̂ sin φ_ext` so
//! that flux dependence enters through two fixed operators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, symmetric_fn};
use crate::{FluxError, Result, C64};

/// Default oscillator basis size.
pub const DEFAULT_OSC_DIM: usize = 40;
/// Default number of retained fluxonium levels.
pub const DEFAULT_N_LEVELS: usize = 5;

/// Energies of one fluxonium (all E/h in GHz) and its external flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub e_c: f64,
    pub e_l: f64,
    pub e_j: f64,
    /// Reduced external flux in radians; the sweet spot is π.
    pub phi_ext: f64,
}

impl CircuitParams {
    pub fn new(e_c: f64, e_l: f64, e_j: f64, phi_ext: f64) -> Result<Self> {
        let p = CircuitParams { e_c, e_l, e_j, phi_ext };
        p.validate()?;
        Ok(p)
    }

    /// Qubit A of the reference hardware (ω/2π ≈ 1.152 GHz at the sweet spot).
    pub fn reference_a() -> Self {
        CircuitParams { e_c: 1.5, e_l: 1.0, e_j: 3.8, phi_ext: PI }
    }

    /// Qubit B of the reference hardware (ω/2π ≈ 0.848 GHz at the sweet spot).
    pub fn reference_b() -> Self {
        CircuitParams { e_c: 0.9, e_l: 1.0, e_j: 3.0, phi_ext: PI }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.e_c, self.e_l, self.e_j, self.phi_ext].iter().all(|x| x.is_finite());
        if !finite || self.e_c <= 0.0 || self.e_l <= 0.0 || self.e_j < 0.0 {
            return Err(FluxError::invalid(format!(
                "circuit parameters need E_C > 0, E_L > 0, E_J >= 0 and finite flux, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Frequency of the `E_J = 0` oscillator, `√(8 E_C E_L)`.
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.e_c * self.e_l).sqrt()
    }

    pub fn with_flux(self, phi_ext: f64) -> Self {
        CircuitParams { phi_ext, ..self }
    }
}

/// Flux, charge, `cos φ̂` and `sin φ̂` in the first `dim` oscillator levels.
#[derive(Debug, Clone)]
pub struct OscillatorRep {
    pub dim: usize,
    pub e_c: f64,
    pub e_l: f64,
    pub phi_zpf: f64,
    pub n_zpf: f64,
    /// `φ̂ = φ_zpf (a + a†)`, real symmetric.
    pub phi_op: DMatrix<f64>,
    /// `n̂ = i n_zpf (a† − a)`, purely imaginary and Hermitian.
    pub n_op: DMatrix<C64>,
    pub cos_op: DMatrix<f64>,
    pub sin_op: DMatrix<f64>,
}

impl OscillatorRep {
    /// `√(8 E_C E_L) (a†a + ½)`, the `E_J = 0` Hamiltonian.
    ///
    /// Kept diagonal instead of squaring truncated `n̂` and `φ̂`; the two
    /// agree except in the topmost basis state, where the truncated product
    /// is wrong.
    pub fn oscillator_hamiltonian(&self) -> DMatrix<f64> {
        let w = (8.0 * self.e_c * self.e_l).sqrt();
        DMatrix::from_diagonal(&DVector::from_fn(self.dim, |k, _| w * (k as f64 + 0.5)))
    }
}

pub fn build_oscillator_rep(params: &CircuitParams, dim: usize) -> Result<OscillatorRep> {
    params.validate()?;
    if dim < 10 {
        return Err(FluxError::invalid(format!("oscillator basis needs at least 10 levels, got {dim}")));
    }
    let phi_zpf = (2.0 * params.e_c / params.e_l).powf(0.25);
    let n_zpf = (params.e_l / (32.0 * params.e_c)).powf(0.25);

    let mut phi_op = DMatrix::<f64>::zeros(dim, dim);
    let mut n_op = DMatrix::<C64>::zeros(dim, dim);
    for k in 1..dim {
        let s = (k as f64).sqrt();
        // <k-1| a |k> = sqrt(k)
        phi_op[(k - 1, k)] = phi_zpf * s;
        phi_op[(k, k - 1)] = phi_zpf * s;
        // i n_zpf (a† - a): <k|a†|k-1> = sqrt(k), <k-1|a|k> = sqrt(k)
        n_op[(k, k - 1)] = C64::new(0.0, n_zpf * s);
        n_op[(k - 1, k)] = C64::new(0.0, -n_zpf * s);
    }
    let cos_op = symmetric_fn(&phi_op, f64::cos)?;
    let sin_op = symmetric_fn(&phi_op, f64::sin)?;
    Ok(OscillatorRep { dim, e_c: params.e_c, e_l: params.e_l, phi_zpf, n_zpf, phi_op, n_op, cos_op, sin_op })
}

fn check_rep(rep: &OscillatorRep, params: &CircuitParams) -> Result<()> {
    params.validate()?;
    if rep.e_c != params.e_c || rep.e_l != params.e_l {
        return Err(FluxError::invalid(format!(
            "oscillator basis built for E_C={}, E_L={} but circuit has E_C={}, E_L={}",
            rep.e_c, rep.e_l, params.e_c, params.e_l
        )));
    }
    if rep.phi_op.nrows() != rep.dim || rep.cos_op.nrows() != rep.dim {
        return Err(FluxError::invalid("oscillator operators do not match the declared dimension"));
    }
    Ok(())
}

/// Full single-fluxonium Hamiltonian (GHz) at external flux `phi`.
pub fn hamiltonian_at_flux(rep: &OscillatorRep, params: &CircuitParams, phi: f64) -> Result<DMatrix<f64>> {
    check_rep(rep, params)?;
    if !phi.is_finite() {
        return Err(FluxError::invalid("flux must be finite"));
    }
    let mut h = rep.oscillator_hamiltonian();
    h -= &rep.cos_op * (params.e_j * phi.cos());
    h -= &rep.sin_op * (params.e_j * phi.sin());
    Ok(h)
}

/// The lowest fluxonium levels and operator matrix elements in their eigenbasis.
#[derive(Debug, Clone)]
pub struct TruncatedQubit {
    pub n_levels: usize,
    /// Ascending, relative to the ground state (GHz).
    pub energies: Vec<f64>,
    pub ground_energy: f64,
    pub n_elems: DMatrix<C64>,
    pub cos_elems: DMatrix<f64>,
    pub sin_elems: DMatrix<f64>,
    /// Eigenvectors (oscillator basis × n_levels) spanning the truncated space.
    pub basis: DMatrix<f64>,
    /// Circuit parameters with `phi_ext` set to the diagonalization flux.
    pub params: CircuitParams,
}

impl TruncatedQubit {
    /// `E(1) − E(0)` in GHz.
    pub fn frequency(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.energies))
    }

    /// Truncates the reference circuit at its sweet spot with default basis sizes.
    pub fn at_sweet_spot(params: &CircuitParams, osc_dim: usize, n_levels: usize) -> Result<Self> {
        let rep = build_oscillator_rep(params, osc_dim)?;
        diagonalize_and_truncate(&rep, params, PI, n_levels)
    }
}

pub fn diagonalize_and_truncate(
    rep: &OscillatorRep,
    params: &CircuitParams,
    phi: f64,
    n_levels: usize,
) -> Result<TruncatedQubit> {
    if n_levels < 2 || 3 * n_levels > rep.dim {
        return Err(FluxError::invalid(format!(
            "need 2 <= n_levels <= dim/3, got n_levels = {n_levels} with dim = {}",
            rep.dim
        )));
    }
    let h = hamiltonian_at_flux(rep, params, phi)?;
    let eig = eigh(&h)?;
    let v = eig.vectors.columns(0, n_levels).clone_owned();
    let ground = eig.values[0];
    let energies: Vec<f64> = (0..n_levels).map(|k| eig.values[k] - ground).collect();
    if energies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FluxError::numerical(format!("truncated spectrum not strictly ascending: {energies:?}")));
    }
    let vc = v.map(|x| C64::new(x, 0.0));
    let n_elems = vc.adjoint() * &rep.n_op * &vc;
    let cos_elems = v.transpose() * &rep.cos_op * &v;
    let sin_elems = v.transpose() * &rep.sin_op * &v;
    Ok(TruncatedQubit {
        n_levels,
        energies,
        ground_energy: ground,
        n_elems,
        cos_elems,
        sin_elems,
        basis: v,
        params: params.with_flux(phi),
    })
}

/// Lowest transition frequency (GHz) at flux `phi`, default basis size.
pub fn qubit_frequency(params: &CircuitParams, phi: f64) -> Result<f64> {
    let rep = build_oscillator_rep(params, DEFAULT_OSC_DIM)?;
    spectrum(&rep, params, phi, 2).map(|e| e[1] - e[0])
}

/// Lowest `count` absolute eigenvalues of the single-qubit Hamiltonian.
pub fn spectrum(rep: &OscillatorRep, params: &CircuitParams, phi: f64, count: usize) -> Result<Vec<f64>> {
    let h = hamiltonian_at_flux(rep, params, phi)?;
    let eig = eigh(&h)?;
    Ok(eig.values.iter().take(count).copied().collect())
}
