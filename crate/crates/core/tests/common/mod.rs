#![allow(dead_code)]

use std::f64::consts::PI;

use fluxgate::coupled::REFERENCE_J_C;
use fluxgate::optimizer::{optimize_pulse, Range};
use fluxgate::{
    CircuitParams, GateSimulation, IntegratorOptions, OptimizationSpec, PulseParams, TruncatedQubit, TwoQubitSystem,
};

pub const T_R: f64 = 7.05;
pub const A_ENV: f64 = 16.741;

/// Plateau times and detunings (in units of π) of the four marked map points.
pub const FIG4: [(char, f64, f64); 4] = [('a', 25.85, 0.0705), ('b', 7.30, 0.0705), ('c', 12.05, 0.0674), ('d', 9.00, 0.07482)];

pub fn map_point(t_p: f64, dphi_over_pi: f64) -> PulseParams {
    PulseParams::new(T_R, t_p, A_ENV, dphi_over_pi * PI).unwrap()
}

pub fn system(n_levels: usize) -> TwoQubitSystem {
    let qa = TruncatedQubit::at_sweet_spot(&CircuitParams::reference_a(), 40, n_levels).unwrap();
    let qb = TruncatedQubit::at_sweet_spot(&CircuitParams::reference_b(), 40, n_levels).unwrap();
    TwoQubitSystem::assemble(qa, qb, REFERENCE_J_C).unwrap()
}

/// Coherent fidelity after a local re-optimization of `(t_p, A)` around
/// point b, in a basis of `n_levels` per qubit.
pub fn reoptimized_fidelity(n_levels: usize) -> f64 {
    let sys = system(n_levels);
    let start = map_point(7.30, 0.0705);
    let spec = OptimizationSpec {
        delta_phi: start.delta_phi,
        t_r: Range::fixed(T_R),
        t_p: Range::new(5.0, 10.0),
        a_env: Range::new(12.0, 22.0),
        initial: Some(start),
        restarts: 1,
        plateau_prescan: 0,
        max_evals: 80,
        integrator: IntegratorOptions { max_step: 0.05, ..Default::default() },
        ..Default::default()
    };
    let best = optimize_pulse(&sys, &spec).unwrap().pulse;
    GateSimulation::new(&sys, IntegratorOptions::default()).run(&best).unwrap().report.coherent_f
}
