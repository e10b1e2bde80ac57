//! One function per subcommand. Each writes its data files into the output
//! directory and reports which points, if any, did not converge.

use std::f64::consts::PI;

use anyhow::{Context, Result};
use fluxgate::coupled::{find_level_crossing, COMPUTATIONAL};
use fluxgate::evolution::instantaneous_trajectory;
use fluxgate::export::{complex_matrix_json, fmt_f64, spectrum_sweep, write_json, write_scan_csv, write_trajectory_csv};
use fluxgate::fluxonium::qubit_frequency;
use fluxgate::optimizer::{noise_sensitivity, optimize_pulse, scan_2d, Axis, NoiseCurve, NoiseCurves, ScanPoint};
use fluxgate::pulse::{validate_adiabaticity, Adiabaticity, AdiabaticityReport};
use fluxgate::{
    Dissipation, FidelityReport, GateSimulation, PulseParams, RelaxationConvention, ScanResult, TwoQubitSystem,
};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{PulseConfig, RunConfig};
use crate::output::OutputDir;

/// Entangling power below which a gate is reported as non-entangling.
pub const NON_ENTANGLING_P: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub point: usize,
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub points: usize,
    pub failures: Vec<Failure>,
}

impl Outcome {
    fn fail(&mut self, point: usize, label: impl Into<String>, reason: impl Into<String>) {
        let (label, reason) = (label.into(), reason.into());
        warn!("point {point} ({label}): {reason}");
        self.failures.push(Failure { point, label, reason });
    }
}

pub struct Run<'a> {
    pub config: &'a RunConfig,
    pub out: &'a OutputDir,
    pub strict: bool,
}

fn write_rows(path: &std::path::Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn spectrum(ctx: &Run, sys: &TwoQubitSystem) -> Result<Outcome> {
    let c = ctx.config;
    let phis: Vec<f64> = c.spectrum.phi_over_pi.values("spectrum.phi_over_pi")?.iter().map(|x| x * PI).collect();
    let labels = [COMPUTATIONAL.as_slice(), &[(0, 2), (2, 0)]].concat();
    let sweep = spectrum_sweep(sys, &phis, &labels)?;
    let omega_a = qubit_frequency(&c.qubit_a.params()?, PI)?;
    let mut header: Vec<String> = ["phi_over_pi", "omega_a_ghz", "omega_b_ghz"].map(String::from).to_vec();
    header.extend(labels.iter().map(|(k, l)| format!("e{k}{l}_ghz")));
    let mut rows = Vec::with_capacity(phis.len());
    for (phi, energies) in phis.iter().zip(&sweep.energies) {
        let mut row = vec![fmt_f64(phi / PI), fmt_f64(omega_a), fmt_f64(qubit_frequency(&c.qubit_b.params()?, *phi)?)];
        row.extend(energies.iter().map(|&e| fmt_f64(e)));
        rows.push(row);
    }
    write_rows(&ctx.out.path("spectrum.csv"), &header, &rows)?;
    let mut outcome = Outcome { points: phis.len(), ..Default::default() };
    match find_level_crossing(sys) {
        Ok((d, gap)) => {
            info!("|01>-|10> crossing at {:.5}π, splitting {:.2} MHz", d / PI, gap * 1e3);
            let crossing = serde_json::json!({ "delta_phi_over_pi": d / PI, "splitting_ghz": gap });
            write_json(&ctx.out.path("crossing.json"), &crossing)?;
        }
        Err(e) => outcome.fail(0, "crossing", e.to_string()),
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedFidelity {
    pub t1_us: f64,
    pub convention: RelaxationConvention,
    pub f_p: f64,
    pub f_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub pulse: PulseConfig,
    pub duration_ns: f64,
    pub report: FidelityReport,
    pub leakage_per_state: [f64; 4],
    pub unitarity_defect: f64,
    pub step_drift: Option<f64>,
    pub non_entangling: bool,
    pub adiabaticity: AdiabaticityReport,
    /// Projected computational block, row-major `[re, im]` pairs.
    pub u_sim: serde_json::Value,
    pub relaxation: Vec<RelaxedFidelity>,
}

pub fn gate(ctx: &Run, sys: &TwoQubitSystem) -> Result<Outcome> {
    let c = ctx.config;
    let pulse = c.pulse.params()?;
    let sim = GateSimulation::new(sys, c.integrator.options()?);
    let run = sim.run(&pulse)?;
    let g = find_level_crossing(sys).map(|(_, gap)| 0.5 * gap).unwrap_or(0.0);
    let adiabaticity =
        validate_adiabaticity(&pulse, g, sys.qubit_a.frequency().min(sys.qubit_b.frequency()));
    let mut relaxation = Vec::new();
    for d in c.dissipations()? {
        let r = sim.run_with_relaxation(&pulse, &d, None)?;
        info!("T1 = {} µs: F_g = {:.8}", d.t1_a_us, r.report.f_g);
        relaxation.push(RelaxedFidelity { t1_us: d.t1_a_us, convention: d.convention, f_p: r.report.f_p, f_g: r.report.f_g });
    }
    let report = GateReport {
        pulse: c.pulse,
        duration_ns: pulse.duration(),
        report: run.report,
        leakage_per_state: run.propagation.leakage_per_state,
        unitarity_defect: run.propagation.unitarity_defect,
        step_drift: run.propagation.step_drift,
        non_entangling: run.report.entangling_power < NON_ENTANGLING_P,
        adiabaticity,
        u_sim: complex_matrix_json(&run.propagation.u_sim),
        relaxation,
    };
    write_json(&ctx.out.path("gate.json"), &report)?;
    info!("coherent F = {:.10}, ζ = {:.6} rad", report.report.coherent_f, report.report.zeta);
    let mut outcome = Outcome { points: 1, ..Default::default() };
    if report.non_entangling {
        warn!("gate is non-entangling: P = {:.3e}", report.report.entangling_power);
        if ctx.strict {
            outcome.fail(0, "gate", format!("non-entangling, P = {:e}", report.report.entangling_power));
        }
    }
    if adiabaticity.verdict == Adiabaticity::Fail {
        warn!("pulse violates the adiabaticity window: {adiabaticity:?}");
        if ctx.strict {
            outcome.fail(0, "gate", "adiabaticity window violated");
        }
    }
    Ok(outcome)
}

fn failed_point(pulse: PulseParams) -> ScanPoint {
    ScanPoint { pulse, error: f64::NAN, duration_ns: pulse.duration(), zeta_rad: f64::NAN, leakage: f64::NAN, converged: false }
}

pub fn optimize(ctx: &Run, sys: &TwoQubitSystem) -> Result<Outcome> {
    let c = ctx.config;
    let dphis = c.optimize_detunings();
    let mut outcome = Outcome { points: dphis.len(), ..Default::default() };
    let mut points = Vec::with_capacity(dphis.len());
    for (i, &dphi) in dphis.iter().enumerate() {
        let spec = c.optimization_spec(dphi)?;
        let label = format!("delta_phi={:.6}π", dphi / PI);
        let point = match ctx.out.load_point::<_, ScanPoint>("optimize", i, &spec) {
            Some(p) => {
                info!("[{}/{}] {label}: reused stored result", i + 1, dphis.len());
                p
            }
            None => match optimize_pulse(sys, &spec) {
                Ok(o) => {
                    let p = ScanPoint {
                        pulse: o.pulse,
                        error: o.error,
                        duration_ns: o.pulse.duration(),
                        zeta_rad: o.report.zeta,
                        leakage: o.report.leakage_total,
                        converged: o.converged,
                    };
                    ctx.out.store_point("optimize", i, &spec, &p)?;
                    info!("[{}/{}] {label}: error {:.3e}, duration {:.3} ns", i + 1, dphis.len(), p.error, p.duration_ns);
                    p
                }
                Err(e) => {
                    outcome.fail(i, label.clone(), e.to_string());
                    points.push(failed_point(PulseParams { delta_phi: dphi, ..c.pulse.params()? }));
                    continue;
                }
            },
        };
        if !point.converged {
            outcome.fail(i, label, "optimizer did not converge");
        }
        points.push(point);
    }
    let scan = ScanResult { axes: vec![Axis { name: "delta_phi".into(), values: dphis }], points };
    write_scan_csv(&ctx.out.path("optimize.csv"), &scan)?;
    write_json(&ctx.out.path("optimize.json"), &scan)?;
    Ok(outcome)
}

pub fn scan2d(ctx: &Run, sys: &TwoQubitSystem) -> Result<Outcome> {
    let c = ctx.config;
    let dphis: Vec<f64> = c.scan2d.delta_phi_over_pi.values("scan2d.delta_phi_over_pi")?.iter().map(|x| x * PI).collect();
    let t_ps = c.scan2d.t_p_ns.values("scan2d.t_p_ns")?;
    let opts = c.integrator.options()?;
    let (t_r, a) = (c.pulse.t_r_ns, c.pulse.envelope_a);
    let mut outcome = Outcome { points: dphis.len() * t_ps.len(), ..Default::default() };
    let mut points = Vec::with_capacity(outcome.points);
    for (i, &dphi) in dphis.iter().enumerate() {
        let key = (dphi, t_ps.clone(), t_r, a, opts);
        let row = match ctx.out.load_point::<_, Vec<ScanPoint>>("scan2d", i, &key) {
            Some(r) => r,
            None => match scan_2d(sys, &[dphi], &t_ps, t_r, a, &opts) {
                Ok(s) => {
                    ctx.out.store_point("scan2d", i, &key, &s.points)?;
                    s.points
                }
                Err(e) => {
                    outcome.fail(i, format!("delta_phi={:.6}π", dphi / PI), e.to_string());
                    let template = PulseParams::new(t_r, 0.0, a, dphi)?;
                    t_ps.iter().map(|&t_p| failed_point(PulseParams { t_p, ..template })).collect()
                }
            },
        };
        let best = row.iter().map(|p| p.error).fold(f64::INFINITY, f64::min);
        info!("[{}/{}] delta_phi={:.6}π: best error {best:.3e}", i + 1, dphis.len(), dphi / PI);
        points.extend(row);
    }
    let scan = ScanResult {
        axes: vec![Axis { name: "delta_phi".into(), values: dphis }, Axis { name: "t_p".into(), values: t_ps }],
        points,
    };
    write_scan_csv(&ctx.out.path("scan2d.csv"), &scan)?;
    write_json(&ctx.out.path("scan2d.json"), &scan)?;
    Ok(outcome)
}

pub fn noise(ctx: &Run, sys: &TwoQubitSystem) -> Result<Outcome> {
    let c = ctx.config;
    let anchor = c.pulse.params()?;
    let (line, offsets) = c.noise.line()?;
    let opts = c.integrator.options()?;
    // the literal convention is the standard one at half the relaxation time
    let scale = match c.relaxation_convention {
        RelaxationConvention::Standard => 1.0,
        RelaxationConvention::Literal => 0.5,
    };
    let mut t1s: Vec<Option<f64>> = vec![None];
    t1s.extend(c.dissipations()?.iter().map(|d: &Dissipation| Some(d.t1_a_us)));
    let mut outcome = Outcome { points: t1s.len() * offsets.len(), ..Default::default() };
    let mut curves = Vec::with_capacity(t1s.len());
    for (i, &t1) in t1s.iter().enumerate() {
        let key = (anchor, line, offsets.clone(), t1, c.relaxation_convention, opts);
        let curve = match ctx.out.load_point::<_, NoiseCurve>("noise", i, &key) {
            Some(curve) => curve,
            None => {
                let effective = t1.map(|t| t * scale);
                match noise_sensitivity(sys, &anchor, line, &offsets, &[effective], &opts) {
                    Ok(mut r) => {
                        let mut curve = r.curves.remove(0);
                        curve.t1_us = t1;
                        ctx.out.store_point("noise", i, &key, &curve)?;
                        curve
                    }
                    Err(e) => {
                        outcome.fail(i, format!("t1_us={t1:?}"), e.to_string());
                        NoiseCurve { t1_us: t1, errors: vec![f64::NAN; offsets.len()] }
                    }
                }
            }
        };
        info!("curve {t1:?} µs: min error {:.3e}", curve.errors.iter().copied().fold(f64::INFINITY, f64::min));
        curves.push(curve);
    }
    let mut header = vec!["offset".to_string()];
    header.extend(curves.iter().map(|cv| match cv.t1_us {
        None => "error_unitary".to_string(),
        Some(t) => format!("error_t1_{t}us"),
    }));
    let to_user = |x: f64| if line == fluxgate::optimizer::NoiseLine::DeltaPhi { x / PI } else { x };
    let rows: Vec<Vec<String>> = offsets
        .iter()
        .enumerate()
        .map(|(k, &x)| std::iter::once(fmt_f64(to_user(x))).chain(curves.iter().map(|cv| fmt_f64(cv.errors[k]))).collect())
        .collect();
    write_rows(&ctx.out.path("noise.csv"), &header, &rows)?;
    write_json(&ctx.out.path("noise.json"), &NoiseCurves { anchor, line, offsets, curves })?;
    Ok(outcome)
}

pub fn trajectory(ctx: &Run, sys: &TwoQubitSystem) -> Result<Outcome> {
    let c = ctx.config;
    let pulse = c.pulse.params()?;
    let opts = c.integrator.options()?;
    let states = &c.trajectory.initial_states;
    let mut outcome = Outcome { points: states.len(), ..Default::default() };
    for (i, &(k, l)) in states.iter().enumerate() {
        match instantaneous_trajectory(sys, &pulse, (k, l), c.trajectory.dt_out_ns, &opts) {
            Ok(points) => write_trajectory_csv(&ctx.out.path(&format!("trajectory_{k}{l}.csv")), &points)?,
            Err(e) => outcome.fail(i, format!("|{k}{l}>"), e.to_string()),
        }
    }
    Ok(outcome)
}
