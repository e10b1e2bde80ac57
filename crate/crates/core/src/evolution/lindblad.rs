//! Relaxation during the pulse.
//!
//! Each qubit decays through `c = |0⟩⟨1| / √T₁` acting on its sweet-spot
//! levels. The master equation is integrated by Strang splitting: half a
//! step of pure dissipation (solved exactly as an amplitude-damping Kraus
//! map), a full unitary step reusing the Magnus propagators, and another
//! half step of dissipation. The Kraus maps are exactly trace preserving.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::unitary::{ramp_steps, ConstantPropagator};
use super::IntegratorOptions;
use crate::coupled::TwoQubitSystem;
use crate::linalg::{hermiticity_defect, to_complex, trace_c};
use crate::pulse::PulseParams;
use crate::{FluxError, Result, C64};

const MAX_TRACE_DRIFT: f64 = 1e-8;

/// How the dissipator is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxationConvention {
    /// `c ρ c† − ½{c†c, ρ}`: the excited state lives exactly `T₁`.
    #[default]
    Standard,
    /// `2 c ρ c† − {c†c, ρ}`, i.e. twice the standard rate.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipation {
    /// Relaxation time of qubit A in µs (`f64::INFINITY` disables it).
    pub t1_a_us: f64,
    pub t1_b_us: f64,
    pub convention: RelaxationConvention,
}

impl Dissipation {
    pub fn uniform(t1_us: f64) -> Self {
        Dissipation { t1_a_us: t1_us, t1_b_us: t1_us, convention: RelaxationConvention::Standard }
    }

    pub fn none() -> Self {
        Self::uniform(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_a_us > 0.0) || !(self.t1_b_us > 0.0) {
            return Err(FluxError::invalid(format!("relaxation times must be positive, got {self:?}")));
        }
        Ok(())
    }

    /// Decay rates of the two qubits in 1/ns.
    pub fn rates(&self) -> (f64, f64) {
        let factor = match self.convention {
            RelaxationConvention::Standard => 1.0,
            RelaxationConvention::Literal => 2.0,
        };
        let rate = |t1_us: f64| if t1_us.is_infinite() { 0.0 } else { factor / (1e3 * t1_us) };
        (rate(self.t1_a_us), rate(self.t1_b_us))
    }
}

/// Exact amplitude damping of level 1 into level 0 of one tensor factor over
/// time `t`. `slow` selects the factor: true for qubit A (index `k·n_b + l`).
fn apply_decay(rho: &mut DMatrix<C64>, rate: f64, t: f64, n_a: usize, n_b: usize, on_a: bool) {
    if rate == 0.0 || t == 0.0 {
        return;
    }
    let survive = (-rate * t).exp();
    let keep = survive.sqrt();
    let transfer = -(-rate * t).exp_m1();
    let level = |i: usize| if on_a { i / n_b } else { i % n_b };
    // index with the decaying factor lowered from 1 to 0
    let raised = |i: usize| if on_a { i + n_b } else { i + 1 };
    let dim = n_a * n_b;
    let mut gained = Vec::new();
    for c in 0..dim {
        if level(c) != 0 {
            continue;
        }
        for r in 0..dim {
            if level(r) == 0 {
                gained.push((r, c, rho[(raised(r), raised(c))] * transfer));
            }
        }
    }
    for c in 0..dim {
        let sc = if level(c) == 1 { keep } else { 1.0 };
        for r in 0..dim {
            let sr = if level(r) == 1 { keep } else { 1.0 };
            let s = sr * sc;
            if s != 1.0 {
                rho[(r, c)] *= s;
            }
        }
    }
    for (r, c, v) in gained {
        rho[(r, c)] += v;
    }
}

/// Master-equation propagator for one pulse, reusable across initial states.
#[derive(Debug, Clone)]
pub struct LindbladSolver<'a> {
    sys: &'a TwoQubitSystem,
    rates: (f64, f64),
    up: Vec<DMatrix<C64>>,
    up_dt: f64,
    plateau_steps: usize,
    plateau_dt: f64,
    plateau_u: DMatrix<C64>,
}

impl<'a> LindbladSolver<'a> {
    pub fn new(
        sys: &'a TwoQubitSystem,
        pulse: &PulseParams,
        dissipation: &Dissipation,
        opts: &IntegratorOptions,
    ) -> Result<Self> {
        Self::with_plateau_step(sys, pulse, dissipation, opts, opts.effective_step(pulse.t_r))
    }

    /// Same, with an explicit splitting step on the plateau, where the
    /// Hamiltonian is constant and only the dissipator couples to it.
    pub fn with_plateau_step(
        sys: &'a TwoQubitSystem,
        pulse: &PulseParams,
        dissipation: &Dissipation,
        opts: &IntegratorOptions,
        plateau_step: f64,
    ) -> Result<Self> {
        pulse.validate()?;
        opts.validate()?;
        dissipation.validate()?;
        if !(plateau_step > 0.0) {
            return Err(FluxError::invalid("plateau step must be positive"));
        }
        let step = opts.effective_step(pulse.t_r);
        let up = ramp_steps(sys, pulse, step)?;
        let up_dt = pulse.plateau_start() / up.len() as f64;
        let plateau_steps = if pulse.t_p > 0.0 { (pulse.t_p / plateau_step).ceil().max(1.0) as usize } else { 0 };
        let plateau_dt = if plateau_steps > 0 { pulse.t_p / plateau_steps as f64 } else { 0.0 };
        let plateau_u =
            ConstantPropagator::new(&sys.hamiltonian(pulse.flux_at(pulse.plateau_start())))?.over(plateau_dt);
        Ok(LindbladSolver { sys, rates: dissipation.rates(), up, up_dt, plateau_steps, plateau_dt, plateau_u })
    }

    fn decay(&self, rho: &mut DMatrix<C64>, t: f64) {
        let (na, nb) = (self.sys.qubit_a.n_levels, self.sys.qubit_b.n_levels);
        apply_decay(rho, self.rates.0, t, na, nb, true);
        apply_decay(rho, self.rates.1, t, na, nb, false);
    }

    fn split_step(&self, rho: &mut DMatrix<C64>, u: &DMatrix<C64>, dt: f64) {
        self.decay(rho, 0.5 * dt);
        *rho = u * &*rho * u.adjoint();
        self.decay(rho, 0.5 * dt);
    }

    /// Evolves any operator (not necessarily a state) through the pulse.
    pub fn evolve(&self, rho0: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if rho0.nrows() != self.sys.dim || rho0.ncols() != self.sys.dim {
            return Err(FluxError::invalid(format!(
                "operator is {}x{}, system dimension is {}",
                rho0.nrows(),
                rho0.ncols(),
                self.sys.dim
            )));
        }
        let mut rho = rho0.clone();
        for u in &self.up {
            self.split_step(&mut rho, u, self.up_dt);
        }
        for _ in 0..self.plateau_steps {
            self.split_step(&mut rho, &self.plateau_u, self.plateau_dt);
        }
        for u in self.up.iter().rev() {
            self.split_step(&mut rho, &u.transpose(), self.up_dt);
        }
        let drift = (trace_c(&rho) - trace_c(rho0)).norm();
        if drift > MAX_TRACE_DRIFT {
            return Err(FluxError::numerical(format!("trace drifted by {drift:e} during Lindblad propagation")));
        }
        Ok(rho)
    }
}

fn validate_state(rho: &DMatrix<C64>) -> Result<()> {
    if hermiticity_defect(rho) > 1e-10 {
        return Err(FluxError::invalid("initial density matrix is not Hermitian"));
    }
    if (trace_c(rho) - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(FluxError::invalid("initial density matrix must have unit trace"));
    }
    let min_eig = SymmetricEigen::new(rho.clone()).eigenvalues.min();
    if min_eig < -1e-9 {
        return Err(FluxError::invalid(format!("initial density matrix is not positive (min eigenvalue {min_eig:e})")));
    }
    Ok(())
}

/// Evolves a density matrix through the pulse with relaxation.
pub fn propagate_lindblad(
    sys: &TwoQubitSystem,
    pulse: &PulseParams,
    dissipation: &Dissipation,
    rho0: &DMatrix<C64>,
    opts: &IntegratorOptions,
) -> Result<DMatrix<C64>> {
    validate_state(rho0)?;
    LindbladSolver::new(sys, pulse, dissipation, opts)?.evolve(rho0)
}

/// Evolves several operators in parallel through the same solver.
pub fn propagate_lindblad_all(solver: &LindbladSolver<'_>, inputs: &[DMatrix<C64>]) -> Result<Vec<DMatrix<C64>>> {
    inputs.par_iter().map(|rho| solver.evolve(rho)).collect()
}

/// The pulse as a channel on 4×4 operators in the dressed computational
/// basis: embed, evolve in the full space, project back.
pub fn computational_channel<'s>(
    solver: &'s LindbladSolver<'s>,
) -> impl Fn(&DMatrix<C64>) -> Result<DMatrix<C64>> + Sync + 's {
    let p = to_complex(&solver.sys.computational_basis());
    move |x: &DMatrix<C64>| {
        let embedded = &p * x * p.adjoint();
        let out = solver.evolve(&embedded)?;
        Ok(p.adjoint() * out * &p)
    }
}
