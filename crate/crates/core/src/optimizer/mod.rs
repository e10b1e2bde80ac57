//! Pulse optimization and parameter scans.
//!
//! Every restart, grid point and noise offset is an independent work item run
//! on the rayon pool; results are assembled in input order, so output is
//! identical for any pool width.

mod nelder_mead;

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupled::TwoQubitSystem;
use crate::evolution::{Dissipation, IntegratorOptions, PlateauFamily, PropagatorResult};
use crate::gate::GateSimulation;
use crate::metrics::{calibrate_z, coherent_fidelity, FidelityReport};
use crate::pulse::PulseParams;
use crate::{FluxError, Result};

pub use nelder_mead::{minimize, Minimum, NelderMeadOptions};

/// Closed interval for one pulse parameter; `min == max` pins it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Range { min: v, max: v }
    }

    pub fn is_fixed(&self) -> bool {
        self.min == self.max
    }

    fn at(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }

    fn unit(&self, v: f64) -> f64 {
        if self.is_fixed() {
            0.0
        } else {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `1 − F` of the calibrated coherent operator.
    #[default]
    CoherentError,
    /// `1 − F_g` with relaxation.
    GateErrorLindblad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizationSpec {
    /// Plateau detuning (rad), always pinned.
    pub delta_phi: f64,
    pub t_r: Range,
    pub t_p: Range,
    pub a_env: Range,
    pub objective: Objective,
    /// Required by [`Objective::GateErrorLindblad`].
    pub dissipation: Option<Dissipation>,
    pub restarts: usize,
    pub seed: u64,
    /// Cap on `t_r + t_p`; `t_p` is clipped to respect it.
    pub max_duration_ns: Option<f64>,
    /// First restart starts here instead of at a random point.
    pub initial: Option<PulseParams>,
    /// Plateau lengths tried at each start before the simplex runs
    /// (cheap: ramps are reused). 0 disables.
    pub plateau_prescan: usize,
    pub max_evals: usize,
    pub f_tol: f64,
    pub integrator: IntegratorOptions,
}

impl Default for OptimizationSpec {
    fn default() -> Self {
        OptimizationSpec {
            delta_phi: 0.0705 * std::f64::consts::PI,
            t_r: Range::new(2.0, 15.0),
            t_p: Range::new(0.0, 40.0),
            a_env: Range::new(4.0, 40.0),
            objective: Objective::CoherentError,
            dissipation: None,
            restarts: 8,
            seed: 0,
            max_duration_ns: None,
            initial: None,
            plateau_prescan: 161,
            max_evals: 600,
            f_tol: 1e-10,
            integrator: IntegratorOptions::default(),
        }
    }
}

impl OptimizationSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("t_r", self.t_r), ("t_p", self.t_p), ("a_env", self.a_env)] {
            if !r.min.is_finite() || !r.max.is_finite() || r.min > r.max {
                return Err(FluxError::invalid(format!("bounds for {name} must be finite with min <= max: {r:?}")));
            }
        }
        if self.t_r.min <= 0.0 || self.t_p.min < 0.0 || self.a_env.min <= 0.0 {
            return Err(FluxError::invalid("t_r and A must be positive and t_p non-negative"));
        }
        if !self.delta_phi.is_finite() {
            return Err(FluxError::invalid("delta_phi must be finite"));
        }
        if self.restarts == 0 {
            return Err(FluxError::invalid("at least one restart is required"));
        }
        if let Some(d) = self.max_duration_ns {
            if !(d > self.t_r.min) {
                return Err(FluxError::invalid(format!("max duration {d} ns leaves no room for t_r >= {}", self.t_r.min)));
            }
        }
        if self.objective == Objective::GateErrorLindblad {
            match &self.dissipation {
                Some(d) => d.validate()?,
                None => return Err(FluxError::invalid("the Lindblad objective needs relaxation times")),
            }
        }
        if !(self.f_tol > 0.0) || self.max_evals == 0 {
            return Err(FluxError::invalid("f_tol must be positive and max_evals nonzero"));
        }
        self.integrator.validate()
    }

    fn free(&self) -> Vec<usize> {
        [self.t_r, self.t_p, self.a_env].iter().enumerate().filter(|(_, r)| !r.is_fixed()).map(|(i, _)| i).collect()
    }

    fn ranges(&self) -> [Range; 3] {
        [self.t_r, self.t_p, self.a_env]
    }

    /// Point of the unit cube (free coordinates only) → pulse.
    fn decode(&self, u: &[f64]) -> PulseParams {
        let ranges = self.ranges();
        let mut v = [ranges[0].min, ranges[1].min, ranges[2].min];
        for (k, &i) in self.free().iter().enumerate() {
            v[i] = ranges[i].at(u[k]);
        }
        let mut p = PulseParams { t_r: v[0], t_p: v[1], a_env: v[2], delta_phi: self.delta_phi };
        if let Some(cap) = self.max_duration_ns {
            p.t_p = p.t_p.min(cap - p.t_r).max(0.0);
        }
        p
    }

    fn encode(&self, p: &PulseParams) -> Vec<f64> {
        let ranges = self.ranges();
        let v = [p.t_r, p.t_p, p.a_env];
        self.free().iter().map(|&i| ranges[i].unit(v[i])).collect()
    }
}

/// Summary of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub start: PulseParams,
    pub best: PulseParams,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub pulse: PulseParams,
    pub report: FidelityReport,
    /// Objective at `pulse`.
    pub error: f64,
    /// At least one restart met the simplex tolerance.
    pub converged: bool,
    pub restarts: Vec<RestartSummary>,
}

/// Objective value; failed evaluations (e.g. undefined phases) count as 1.
fn objective(sys: &TwoQubitSystem, spec: &OptimizationSpec, p: &PulseParams) -> f64 {
    if let Some(cap) = spec.max_duration_ns {
        if p.duration() > cap + 1e-12 {
            return 1.0 + (p.duration() - cap);
        }
    }
    let sim = GateSimulation::new(sys, spec.integrator);
    let value = match spec.objective {
        Objective::CoherentError => sim.coherent_error(p),
        Objective::GateErrorLindblad => {
            let d = spec.dissipation.expect("validated");
            sim.run_with_relaxation(p, &d, None).map(|o| o.gate_error())
        }
    };
    match value {
        Ok(v) => v,
        Err(e) => {
            log::debug!("objective failed at {p:?}: {e}");
            1.0
        }
    }
}

/// Coherent error of a calibrated full-space propagator.
fn error_of(sys: &TwoQubitSystem, u_full: nalgebra::DMatrix<crate::C64>) -> Result<(f64, f64, f64)> {
    let prop = PropagatorResult::from_full(sys, u_full)?;
    let cal = calibrate_z(&prop.u_sim)?;
    Ok((1.0 - coherent_fidelity(&cal.u_prime, cal.zeta), cal.zeta, prop.total_leakage()))
}

/// Best plateau on an even grid for fixed ramps.
fn prescan_plateau(sys: &TwoQubitSystem, spec: &OptimizationSpec, p: PulseParams) -> PulseParams {
    if spec.t_p.is_fixed() || spec.plateau_prescan < 2 {
        return p;
    }
    let hi = match spec.max_duration_ns {
        Some(cap) => spec.t_p.max.min(cap - p.t_r),
        None => spec.t_p.max,
    };
    if hi <= spec.t_p.min {
        return p;
    }
    let Ok(family) = PlateauFamily::new(sys, &p, &spec.integrator) else {
        return p;
    };
    let n = spec.plateau_prescan;
    let mut best = (f64::INFINITY, p.t_p);
    for k in 0..n {
        let t_p = spec.t_p.min + (hi - spec.t_p.min) * k as f64 / (n - 1) as f64;
        if let Ok((err, _, _)) = error_of(sys, family.propagator(t_p)) {
            if err < best.0 {
                best = (err, t_p);
            }
        }
    }
    PulseParams { t_p: best.1, ..p }
}

fn starts(spec: &OptimizationSpec) -> Vec<PulseParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_free = spec.free().len();
    (0..spec.restarts)
        .map(|r| {
            let u: Vec<f64> = (0..n_free).map(|_| rng.random::<f64>()).collect();
            match (r, spec.initial) {
                (0, Some(p)) => PulseParams { delta_phi: spec.delta_phi, ..p },
                _ => spec.decode(&u),
            }
        })
        .collect()
}

/// Multi-start bounded Nelder–Mead over the free pulse parameters.
///
/// Deterministic for a given spec (including seed). If no restart reaches
/// the simplex tolerance within `max_evals`, the best point found is still
/// returned with `converged = false`.
pub fn optimize_pulse(sys: &TwoQubitSystem, spec: &OptimizationSpec) -> Result<OptimizationOutcome> {
    spec.validate()?;
    let nm = NelderMeadOptions { f_tol: spec.f_tol, max_evals: spec.max_evals, ..Default::default() };
    let restarts: Vec<RestartSummary> = starts(spec)
        .into_par_iter()
        .map(|start| {
            let seeded = prescan_plateau(sys, spec, start);
            if spec.free().is_empty() {
                return RestartSummary {
                    start,
                    best: seeded,
                    error: objective(sys, spec, &seeded),
                    evals: 1,
                    converged: true,
                };
            }
            let best_seen = RefCell::new((f64::INFINITY, seeded));
            let m = minimize(
                |u| {
                    let p = spec.decode(u);
                    let v = objective(sys, spec, &p);
                    let mut b = best_seen.borrow_mut();
                    if v < b.0 {
                        *b = (v, p);
                    }
                    v
                },
                &spec.encode(&seeded),
                &nm,
            );
            let (error, best) = best_seen.into_inner();
            RestartSummary { start, best, error: error.min(m.f), evals: m.evals, converged: m.converged }
        })
        .collect();
    let winner = restarts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.error.total_cmp(&b.1.error).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r.clone())
        .expect("at least one restart");
    let sim = GateSimulation::new(sys, spec.integrator);
    let outcome = match spec.objective {
        Objective::CoherentError => sim.run(&winner.best)?,
        Objective::GateErrorLindblad => {
            sim.run_with_relaxation(&winner.best, &spec.dissipation.expect("validated"), None)?
        }
    };
    Ok(OptimizationOutcome {
        pulse: winner.best,
        report: outcome.report,
        error: winner.error,
        converged: restarts.iter().any(|r| r.converged),
        restarts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub pulse: PulseParams,
    pub error: f64,
    pub duration_ns: f64,
    pub zeta_rad: f64,
    pub leakage: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axes: Vec<Axis>,
    /// Row-major over the axes (last axis fastest).
    pub points: Vec<ScanPoint>,
}

impl ScanResult {
    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }
}

/// Optimized pulse at each detuning.
pub fn scan_detuning(sys: &TwoQubitSystem, delta_phis: &[f64], spec: &OptimizationSpec) -> Result<ScanResult> {
    let points = delta_phis
        .par_iter()
        .map(|&dphi| {
            let local = OptimizationSpec { delta_phi: dphi, ..*spec };
            let out = optimize_pulse(sys, &local)?;
            Ok(ScanPoint {
                pulse: out.pulse,
                error: out.error,
                duration_ns: out.pulse.duration(),
                zeta_rad: out.report.zeta,
                leakage: out.report.leakage_total,
                converged: out.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult { axes: vec![Axis { name: "delta_phi".into(), values: delta_phis.to_vec() }], points })
}

/// Coherent error on a `(δφ, t_p)` grid at fixed ramps, one propagation per
/// point. Points whose phases are undefined get error 1.
pub fn scan_2d(
    sys: &TwoQubitSystem,
    delta_phis: &[f64],
    t_ps: &[f64],
    t_r: f64,
    a_env: f64,
    opts: &IntegratorOptions,
) -> Result<ScanResult> {
    if t_ps.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(FluxError::invalid("plateau times must be finite and non-negative"));
    }
    let rows = delta_phis
        .par_iter()
        .map(|&dphi| {
            let template = PulseParams::new(t_r, 0.0, a_env, dphi)?;
            let family = PlateauFamily::new(sys, &template, opts)?;
            t_ps.iter()
                .map(|&t_p| {
                    let pulse = PulseParams { t_p, ..template };
                    let (error, zeta_rad, leakage) = match error_of(sys, family.propagator(t_p)) {
                        Ok(v) => v,
                        Err(FluxError::UndefinedPhase { .. }) => (1.0, f64::NAN, f64::NAN),
                        Err(e) => return Err(e),
                    };
                    Ok(ScanPoint { pulse, error, duration_ns: pulse.duration(), zeta_rad, leakage, converged: true })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        axes: vec![
            Axis { name: "delta_phi".into(), values: delta_phis.to_vec() },
            Axis { name: "t_p".into(), values: t_ps.to_vec() },
        ],
        points: rows.into_iter().flatten().collect(),
    })
}

/// Which pulse parameter a noise line perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLine {
    /// Shift the plateau detuning, `t_p` fixed.
    DeltaPhi,
    /// Shift the plateau time, `δφ` fixed.
    PlateauTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurve {
    /// `None` for coherent evolution.
    pub t1_us: Option<f64>,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurves {
    pub anchor: PulseParams,
    pub line: NoiseLine,
    pub offsets: Vec<f64>,
    pub curves: Vec<NoiseCurve>,
}

impl NoiseCurve {
    /// Extent of the contiguous region around the minimum where the error
    /// stays within `factor` times the minimum.
    pub fn valley_width(&self, offsets: &[f64], factor: f64) -> f64 {
        let Some((imin, &emin)) = self.errors.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) else {
            return 0.0;
        };
        let limit = factor * emin;
        let mut lo = imin;
        while lo > 0 && self.errors[lo - 1] <= limit {
            lo -= 1;
        }
        let mut hi = imin;
        while hi + 1 < self.errors.len() && self.errors[hi + 1] <= limit {
            hi += 1;
        }
        offsets[hi] - offsets[lo]
    }
}

/// Error along a line through `anchor`, coherent (`None`) and for each
/// relaxation time in `t1_us` (both qubits, standard convention). Each point
/// is recalibrated, mirroring how the gate would be tuned up.
pub fn noise_sensitivity(
    sys: &TwoQubitSystem,
    anchor: &PulseParams,
    line: NoiseLine,
    offsets: &[f64],
    t1_us: &[Option<f64>],
    opts: &IntegratorOptions,
) -> Result<NoiseCurves> {
    anchor.validate()?;
    let sim = GateSimulation::new(sys, *opts);
    let work: Vec<(usize, usize)> =
        (0..t1_us.len()).flat_map(|c| (0..offsets.len()).map(move |k| (c, k))).collect();
    let values = work
        .par_iter()
        .map(|&(c, k)| {
            let mut p = *anchor;
            match line {
                NoiseLine::DeltaPhi => p.delta_phi += offsets[k],
                NoiseLine::PlateauTime => p.t_p = (p.t_p + offsets[k]).max(0.0),
            }
            match t1_us[c] {
                None => sim.coherent_error(&p),
                Some(t1) => sim.run_with_relaxation(&p, &Dissipation::uniform(t1), None).map(|o| o.gate_error()),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let curves = t1_us
        .iter()
        .enumerate()
        .map(|(c, &t1)| NoiseCurve { t1_us: t1, errors: values[c * offsets.len()..(c + 1) * offsets.len()].to_vec() })
        .collect();
    Ok(NoiseCurves { anchor: *anchor, line, offsets: offsets.to_vec(), curves })
}
