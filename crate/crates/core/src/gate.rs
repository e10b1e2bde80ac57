//! One pulse, end to end: propagate, project, calibrate, score.

use nalgebra::DMatrix;

use crate::coupled::TwoQubitSystem;
use crate::evolution::{
    computational_channel, process_tomography, propagate_unitary, ChiMatrix, Dissipation, IntegratorOptions,
    LindbladSolver, PropagatorResult,
};
use crate::metrics::{
    calibrate_z, coherent_fidelity, entangling_power, gate_fidelity_from_chi, ideal_gate, nearest_unitary,
    CalibratedGate, FidelityReport, IdealGateSpec,
};
use crate::pulse::PulseParams;
use crate::{Result, C64};

/// Everything computed for one pulse.
#[derive(Debug, Clone)]
pub struct GateOutcome {
    pub pulse: PulseParams,
    pub propagation: PropagatorResult,
    pub calibrated: CalibratedGate,
    pub report: FidelityReport,
    /// Process matrix of the calibrated channel (relaxation runs only).
    pub chi: Option<ChiMatrix>,
}

impl GateOutcome {
    pub fn coherent_error(&self) -> f64 {
        1.0 - self.report.coherent_f
    }

    pub fn gate_error(&self) -> f64 {
        1.0 - self.report.f_g
    }
}

/// Gate pipeline bound to one coupled system and integrator setting.
#[derive(Debug, Clone, Copy)]
pub struct GateSimulation<'a> {
    pub sys: &'a TwoQubitSystem,
    pub opts: IntegratorOptions,
}

impl<'a> GateSimulation<'a> {
    pub fn new(sys: &'a TwoQubitSystem, opts: IntegratorOptions) -> Self {
        GateSimulation { sys, opts }
    }

    /// Coherent evolution. For a unitary run `F_p`, `F_g` follow from the
    /// rank-one `χ` of the calibrated operator, so `F_g` equals the coherent
    /// fidelity.
    pub fn run(&self, pulse: &PulseParams) -> Result<GateOutcome> {
        let propagation = propagate_unitary(self.sys, pulse, &self.opts)?;
        let calibrated = calibrate_z(&propagation.u_sim)?;
        let coherent_f = coherent_fidelity(&calibrated.u_prime, calibrated.zeta);
        let chi_sim = ChiMatrix::from_unitary(&calibrated.u_prime);
        let chi_ideal = ChiMatrix::from_unitary(&ideal_gate(IdealGateSpec::sqrt_iswap_like(calibrated.zeta)));
        let (f_p, f_g) = gate_fidelity_from_chi(&chi_sim, &chi_ideal);
        let report = FidelityReport {
            coherent_f,
            f_p,
            f_g,
            leakage_total: propagation.total_leakage(),
            entangling_power: entangling_power(&nearest_unitary(&calibrated.u_prime)?)?,
            zeta: calibrated.zeta,
        };
        report.validate()?;
        Ok(GateOutcome { pulse: *pulse, propagation, calibrated, report, chi: None })
    }

    /// `1 − F` only; the optimizer objective.
    pub fn coherent_error(&self, pulse: &PulseParams) -> Result<f64> {
        let propagation = propagate_unitary(self.sys, pulse, &self.opts)?;
        let calibrated = calibrate_z(&propagation.u_sim)?;
        Ok(1.0 - coherent_fidelity(&calibrated.u_prime, calibrated.zeta))
    }

    /// Evolution with relaxation. The Z calibration and `ζ` come from the
    /// coherent run of the same pulse and are applied to the channel as
    /// `ρ ↦ D_post E(D_pre ρ D_pre†) D_post†` before tomography.
    pub fn run_with_relaxation(
        &self,
        pulse: &PulseParams,
        dissipation: &Dissipation,
        plateau_step: Option<f64>,
    ) -> Result<GateOutcome> {
        let mut outcome = self.run(pulse)?;
        let step = plateau_step.unwrap_or_else(|| self.opts.effective_step(pulse.t_r));
        let solver = LindbladSolver::with_plateau_step(self.sys, pulse, dissipation, &self.opts, step)?;
        let raw = computational_channel(&solver);
        let pre = outcome.calibrated.pre();
        let post = outcome.calibrated.post();
        let chi_sim = process_tomography(|x: &DMatrix<C64>| {
            let inner = raw(&(&pre * x * pre.adjoint()))?;
            Ok(&post * inner * post.adjoint())
        })?;
        let chi_ideal = ChiMatrix::from_unitary(&ideal_gate(IdealGateSpec::sqrt_iswap_like(outcome.calibrated.zeta)));
        let (f_p, f_g) = gate_fidelity_from_chi(&chi_sim, &chi_ideal);
        outcome.report.f_p = f_p;
        outcome.report.f_g = f_g;
        outcome.report.validate()?;
        outcome.chi = Some(chi_sim);
        Ok(outcome)
    }

    /// Change of the coherent fidelity when the step is halved.
    pub fn fidelity_drift(&self, pulse: &PulseParams) -> Result<f64> {
        let coarse = self.coherent_error(pulse)?;
        let fine = GateSimulation::new(self.sys, self.opts.halved()).coherent_error(pulse)?;
        Ok((coarse - fine).abs())
    }
}
