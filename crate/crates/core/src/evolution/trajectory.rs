//! State trajectories expressed in the instantaneous dressed basis.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::unitary::segment_propagator;
use super::IntegratorOptions;
use crate::coupled::{LabelTracker, TwoQubitSystem, TRACK_STEP};
use crate::pulse::PulseParams;
use crate::{FluxError, Result, C64};

const RESIDUAL_WARN: f64 = 0.01;

/// State at one output time, projected on `{|01⟩_φ(t), |10⟩_φ(t)}`.
///
/// The Bloch vector is not renormalized: its length is the population kept
/// inside the two-state subspace. `z = p01 − p10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub pop_01: f64,
    pub pop_10: f64,
    pub bloch_x: f64,
    pub bloch_y: f64,
    pub bloch_z: f64,
    pub residual: f64,
}

/// Evolves the dressed sweet-spot state `psi0 = (k, l)` through `pulse` and
/// samples it every `dt_out` ns (plus the final time).
pub fn instantaneous_trajectory(
    sys: &TwoQubitSystem,
    pulse: &PulseParams,
    psi0: (usize, usize),
    dt_out: f64,
    opts: &IntegratorOptions,
) -> Result<Vec<TrajectoryPoint>> {
    pulse.validate()?;
    opts.validate()?;
    if !(dt_out > 0.0) {
        return Err(FluxError::invalid(format!("output step must be positive, got {dt_out}")));
    }
    if psi0.0 >= sys.qubit_a.n_levels || psi0.1 >= sys.qubit_b.n_levels {
        return Err(FluxError::invalid(format!("label {psi0:?} outside the truncated space")));
    }
    let step = opts.effective_step(pulse.t_r);
    let total = pulse.duration();
    let n_out = ((total / dt_out) * (1.0 - 1e-12)).ceil() as usize;
    let mut times: Vec<f64> = (0..n_out).map(|k| k as f64 * dt_out).collect();
    times.push(total);

    let mut psi: DVector<C64> = sys.sweet.state(psi0.0, psi0.1).map(|x| C64::new(x, 0.0));
    let mut tracker = LabelTracker::new(sys);
    let mut out = Vec::with_capacity(times.len());
    let mut warned = false;
    let mut t_prev = 0.0;
    for &t in &times {
        if t > t_prev {
            psi = segment_propagator(sys, pulse, t_prev, t, step)? * psi;
        }
        let phi_prev = tracker.current().phi;
        let phi = pulse.flux_at(t);
        let refine = ((phi - phi_prev).abs() / TRACK_STEP).ceil().max(1.0) as usize;
        for s in 1..=refine {
            tracker.advance(phi_prev + (phi - phi_prev) * s as f64 / refine as f64)?;
        }
        let spec = tracker.current();
        let project = |v: nalgebra::DVectorView<'_, f64>| v.iter().zip(psi.iter()).map(|(a, z)| z * *a).sum::<C64>();
        let c01 = project(spec.state(0, 1));
        let c10 = project(spec.state(1, 0));
        let (p01, p10) = (c01.norm_sqr(), c10.norm_sqr());
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let residual = (norm - p01 - p10).max(0.0);
        if residual > RESIDUAL_WARN && !warned {
            log::warn!("two-state picture breaks down at t = {t:.3} ns: residual {residual:.4}");
            warned = true;
        }
        let coherence = c01.conj() * c10;
        out.push(TrajectoryPoint {
            t,
            pop_01: p01,
            pop_10: p10,
            bloch_x: 2.0 * coherence.re,
            bloch_y: 2.0 * coherence.im,
            bloch_z: p01 - p10,
            residual,
        });
        t_prev = t;
    }
    Ok(out)
}
