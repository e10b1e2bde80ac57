//! Time evolution of the coupled system under a flux pulse.
//!
//! The default integrator is a fourth-order commutator-free Magnus scheme:
//! every step is a product of two exact exponentials of real symmetric
//! Hamiltonian combinations. The plateau, where the Hamiltonian is constant,
//! is a single exact exponential. An adaptive Dormand–Prince 5(4) solver on
//! the Schrödinger equation serves as an independent cross-check.

mod lindblad;
mod rk;
mod tomography;
mod trajectory;
mod unitary;

use serde::{Deserialize, Serialize};

use crate::{FluxError, Result};

pub use lindblad::{
    computational_channel, propagate_lindblad, propagate_lindblad_all, Dissipation, LindbladSolver,
    RelaxationConvention,
};
pub use rk::{dopri5, RkStats};
pub use tomography::{pauli_basis, process_tomography, ChiMatrix};
pub use trajectory::{instantaneous_trajectory, TrajectoryPoint};
pub use unitary::{
    propagate_unitary, ramp_steps, segment_propagator, ConstantPropagator, PlateauFamily, PropagatorResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorMethod {
    PiecewiseExponential,
    AdaptiveRk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOptions {
    pub method: IntegratorMethod,
    /// Upper bound on the step (ns). The step actually used never exceeds
    /// `0.01·t_r` either.
    pub max_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Re-run at half step and report how much the projected operator moved.
    pub convergence_check: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            method: IntegratorMethod::PiecewiseExponential,
            max_step: 0.02,
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            convergence_check: false,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_step > 0.0) || !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(FluxError::invalid(format!("integrator step and tolerances must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Step used for a pulse with ramp time `t_r`.
    pub fn effective_step(&self, t_r: f64) -> f64 {
        self.max_step.min(0.01 * t_r)
    }

    pub fn halved(&self) -> Self {
        IntegratorOptions {
            max_step: 0.5 * self.max_step,
            rel_tol: 0.5 * self.rel_tol,
            abs_tol: 0.5 * self.abs_tol,
            convergence_check: false,
            ..*self
        }
    }
}
