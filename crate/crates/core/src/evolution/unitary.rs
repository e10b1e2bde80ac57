use nalgebra::DMatrix;

use super::rk::dopri5;
use super::{IntegratorMethod, IntegratorOptions};
use crate::coupled::TwoQubitSystem;
use crate::linalg::{eigh, to_complex, unitarity_defect, Eigh};
use crate::pulse::PulseParams;
use crate::{FluxError, Result, C64, TWO_PI};

const SQRT3: f64 = 1.732_050_807_568_877_2;
// Gauss–Legendre nodes and the commutator-free fourth-order weights.
const NODE1: f64 = 0.5 - SQRT3 / 6.0;
const NODE2: f64 = 0.5 + SQRT3 / 6.0;
const W1: f64 = 0.25 - SQRT3 / 6.0;
const W2: f64 = 0.25 + SQRT3 / 6.0;

const MAX_UNITARITY_DEFECT: f64 = 1e-8;

/// `exp(−i 2π H t)` for a fixed Hamiltonian, reusable for any `t`.
#[derive(Debug, Clone)]
pub struct ConstantPropagator {
    eig: Eigh,
}

impl ConstantPropagator {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        Ok(ConstantPropagator { eig: eigh(h)? })
    }

    pub fn over(&self, t: f64) -> DMatrix<C64> {
        let v = &self.eig.vectors;
        let n = v.nrows();
        let left = DMatrix::from_fn(n, n, |r, c| C64::from_polar(v[(r, c)], -TWO_PI * self.eig.values[c] * t));
        left * to_complex(&v.transpose())
    }
}

fn exp_step(h: &DMatrix<f64>, dt: f64) -> Result<DMatrix<C64>> {
    crate::linalg::expm_neg_i(h, TWO_PI * dt)
}

/// One commutator-free Magnus step from `t` to `t + h`.
fn cf4_step(sys: &TwoQubitSystem, pulse: &PulseParams, t: f64, h: f64) -> Result<DMatrix<C64>> {
    let h1 = sys.hamiltonian(pulse.flux_at(t + NODE1 * h));
    let h2 = sys.hamiltonian(pulse.flux_at(t + NODE2 * h));
    let first = exp_step(&(&h1 * W2 + &h2 * W1), h)?;
    let second = exp_step(&(&h1 * W1 + &h2 * W2), h)?;
    Ok(second * first)
}

fn n_steps(len: f64, step: f64) -> usize {
    ((len / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Per-step propagators of the ramp-up segment `[0, t_r/2]`, in time order.
///
/// The ramp-down steps are the transposes of these in reverse order: the
/// ramp-down is the time mirror of the ramp-up and every Hamiltonian is real
/// symmetric.
pub fn ramp_steps(sys: &TwoQubitSystem, pulse: &PulseParams, step: f64) -> Result<Vec<DMatrix<C64>>> {
    let len = pulse.plateau_start();
    let n = n_steps(len, step);
    let h = len / n as f64;
    (0..n).map(|k| cf4_step(sys, pulse, k as f64 * h, h)).collect()
}

fn product(steps: &[DMatrix<C64>], dim: usize) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for s in steps {
        u = s * u;
    }
    u
}

/// Propagator from `t0` to `t1` (ns) integrated directly, splitting at the
/// plateau boundaries. Plateau pieces are exact exponentials.
pub fn segment_propagator(
    sys: &TwoQubitSystem,
    pulse: &PulseParams,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<DMatrix<C64>> {
    if !(t1 >= t0) || !(step > 0.0) {
        return Err(FluxError::invalid(format!("bad segment [{t0}, {t1}] with step {step}")));
    }
    let mut cuts = vec![t0];
    for b in [0.0, pulse.plateau_start(), pulse.plateau_end(), pulse.duration()] {
        if b > t0 && b < t1 {
            cuts.push(b);
        }
    }
    cuts.push(t1);
    let mut u = DMatrix::<C64>::identity(sys.dim, sys.dim);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let mid = 0.5 * (a + b);
        let constant = mid < 0.0
            || mid > pulse.duration()
            || (mid > pulse.plateau_start() && mid < pulse.plateau_end());
        if constant {
            u = exp_step(&sys.hamiltonian(pulse.flux_at(mid)), b - a)? * u;
        } else {
            let n = n_steps(b - a, step);
            let h = (b - a) / n as f64;
            for k in 0..n {
                u = cf4_step(sys, pulse, a + k as f64 * h, h)? * u;
            }
        }
    }
    Ok(u)
}

/// Full propagator and its projection on the sweet-spot computational states.
#[derive(Debug, Clone)]
pub struct PropagatorResult {
    pub u_full: DMatrix<C64>,
    /// `P† U P` with `P` the dressed `|00⟩, |01⟩, |10⟩, |11⟩` at π.
    pub u_sim: DMatrix<C64>,
    /// Population leaving the computational subspace, per initial state.
    pub leakage_per_state: [f64; 4],
    pub unitarity_defect: f64,
    /// `max |u_sim(step) − u_sim(step/2)|` when a convergence check ran.
    pub step_drift: Option<f64>,
}

impl PropagatorResult {
    pub fn from_full(sys: &TwoQubitSystem, u_full: DMatrix<C64>) -> Result<Self> {
        let p = to_complex(&sys.computational_basis());
        let u_sim = p.adjoint() * &u_full * &p;
        let mut leakage_per_state = [0.0; 4];
        for (k, leak) in leakage_per_state.iter_mut().enumerate() {
            let kept: f64 = u_sim.column(k).iter().map(|z| z.norm_sqr()).sum();
            *leak = (1.0 - kept).max(0.0);
        }
        let unitarity_defect = unitarity_defect(&u_full);
        if unitarity_defect > MAX_UNITARITY_DEFECT {
            return Err(FluxError::numerical(format!(
                "propagator unitarity defect {unitarity_defect:e} exceeds {MAX_UNITARITY_DEFECT:e}; reduce the step"
            )));
        }
        Ok(PropagatorResult { u_full, u_sim, leakage_per_state, unitarity_defect, step_drift: None })
    }

    pub fn total_leakage(&self) -> f64 {
        self.leakage_per_state.iter().sum::<f64>() / 4.0
    }
}

fn full_propagator(sys: &TwoQubitSystem, pulse: &PulseParams, opts: &IntegratorOptions, step: f64) -> Result<DMatrix<C64>> {
    match opts.method {
        IntegratorMethod::PiecewiseExponential => {
            let up = product(&ramp_steps(sys, pulse, step)?, sys.dim);
            let plateau = ConstantPropagator::new(&sys.hamiltonian(pulse.flux_at(pulse.plateau_start())))?;
            let down = up.transpose();
            Ok(down * plateau.over(pulse.t_p) * up)
        }
        IntegratorMethod::AdaptiveRk => interaction_picture_rk(sys, pulse, opts, step),
    }
}

/// Dormand–Prince on the interaction-picture propagator with respect to
/// `H(π)`. Only the control part `H(φ) − H(π)` drives `U_I`, which keeps the
/// explicit scheme accurate over many oscillation periods of the bare levels.
fn interaction_picture_rk(
    sys: &TwoQubitSystem,
    pulse: &PulseParams,
    opts: &IntegratorOptions,
    step: f64,
) -> Result<DMatrix<C64>> {
    let base = eigh(&sys.h_pi)?;
    let v = &base.vectors;
    let c = v.transpose() * &sys.c_ctrl * v;
    let s = v.transpose() * &sys.s_ctrl * v;
    let e = &base.values;
    let ej = sys.e_j_b();
    let n = sys.dim;
    let rhs = |t: f64, y: &DMatrix<C64>| {
        let phi = pulse.flux_at(t);
        let (a, b) = (-ej * (1.0 + phi.cos()), -ej * phi.sin());
        let h_i = DMatrix::from_fn(n, n, |m, k| {
            let amp = a * c[(m, k)] + b * s[(m, k)];
            C64::from_polar(amp, TWO_PI * (e[m] - e[k]) * t)
        });
        (h_i * y) * C64::new(0.0, -TWO_PI)
    };
    let mut u_i = DMatrix::<C64>::identity(n, n);
    let cuts = [0.0, pulse.plateau_start(), pulse.plateau_end(), pulse.duration()];
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            u_i = dopri5(rhs, w[0], w[1], u_i, step, opts.rel_tol, opts.abs_tol)?.0;
        }
    }
    let t = pulse.duration();
    let free = DMatrix::from_fn(n, n, |r, k| C64::from_polar(v[(r, k)], -TWO_PI * e[k] * t));
    Ok(free * u_i * to_complex(&v.transpose()))
}

/// Ramps for fixed `(t_r, A, δφ)`, reusable for any plateau length.
///
/// Varying only `t_p` costs one diagonal phase product per evaluation.
#[derive(Debug, Clone)]
pub struct PlateauFamily {
    up: DMatrix<C64>,
    plateau: ConstantPropagator,
}

impl PlateauFamily {
    pub fn new(sys: &TwoQubitSystem, template: &PulseParams, opts: &IntegratorOptions) -> Result<Self> {
        template.validate()?;
        opts.validate()?;
        let up = product(&ramp_steps(sys, template, opts.effective_step(template.t_r))?, sys.dim);
        let plateau = ConstantPropagator::new(&sys.hamiltonian(template.flux_at(template.plateau_start())))?;
        Ok(PlateauFamily { up, plateau })
    }

    pub fn propagator(&self, t_p: f64) -> DMatrix<C64> {
        self.up.transpose() * self.plateau.over(t_p) * &self.up
    }
}

/// Solves `i dU/dt = 2π H(t) U`, `U(0) = I`, over the whole pulse.
pub fn propagate_unitary(sys: &TwoQubitSystem, pulse: &PulseParams, opts: &IntegratorOptions) -> Result<PropagatorResult> {
    pulse.validate()?;
    opts.validate()?;
    let step = opts.effective_step(pulse.t_r);
    let mut result = PropagatorResult::from_full(sys, full_propagator(sys, pulse, opts, step)?)?;
    if opts.convergence_check {
        let finer_opts = opts.halved();
        let finer = PropagatorResult::from_full(sys, full_propagator(sys, pulse, &finer_opts, 0.5 * step)?)?;
        let drift = (&result.u_sim - &finer.u_sim).iter().map(|z| z.norm()).fold(0.0, f64::max);
        result.step_drift = Some(drift);
    }
    Ok(result)
}
