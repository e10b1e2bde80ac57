//! Run configuration: one JSON file, strict schema, units in the key names.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fluxgate::fluxonium::{DEFAULT_N_LEVELS, DEFAULT_OSC_DIM};
use fluxgate::optimizer::{NoiseLine, Range};
use fluxgate::{
    CircuitParams, Dissipation, IntegratorMethod, IntegratorOptions, OptimizationSpec, PulseParams, RelaxationConvention,
    TruncatedQubit, TwoQubitSystem,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub e_c_ghz: f64,
    pub e_l_ghz: f64,
    pub e_j_ghz: f64,
}

impl QubitConfig {
    fn from_params(p: CircuitParams) -> Self {
        QubitConfig { e_c_ghz: p.e_c, e_l_ghz: p.e_l, e_j_ghz: p.e_j }
    }

    /// Parameters at the sweet spot.
    pub fn params(&self) -> Result<CircuitParams> {
        Ok(CircuitParams::new(self.e_c_ghz, self.e_l_ghz, self.e_j_ghz, PI)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub osc_dim: usize,
    pub n_levels: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { osc_dim: DEFAULT_OSC_DIM, n_levels: DEFAULT_N_LEVELS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub t_r_ns: f64,
    pub t_p_ns: f64,
    pub envelope_a: f64,
    pub delta_phi_over_pi: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig { t_r_ns: 7.05, t_p_ns: 7.30, envelope_a: 16.741, delta_phi_over_pi: 0.0705 }
    }
}

impl PulseConfig {
    pub fn params(&self) -> Result<PulseParams> {
        Ok(PulseParams::new(self.t_r_ns, self.t_p_ns, self.envelope_a, self.delta_phi_over_pi * PI)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: IntegratorMethod,
    pub max_step_ns: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub convergence_check: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = IntegratorOptions::default();
        IntegratorConfig {
            method: d.method,
            max_step_ns: d.max_step,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            convergence_check: d.convergence_check,
        }
    }
}

impl IntegratorConfig {
    pub fn options(&self) -> Result<IntegratorOptions> {
        let o = IntegratorOptions {
            method: self.method,
            max_step: self.max_step_ns,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            convergence_check: self.convergence_check,
        };
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Detunings to optimize at; empty means the pulse block's detuning.
    pub delta_phi_over_pi: Vec<f64>,
    pub t_r_ns: Range,
    pub t_p_ns: Range,
    pub envelope_a: Range,
    pub max_duration_ns: Option<f64>,
    /// Start the first restart from the pulse block.
    pub start_from_pulse: bool,
    pub restarts: usize,
    pub max_evals: usize,
    pub plateau_prescan: usize,
    pub f_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = OptimizationSpec::default();
        OptimizerConfig {
            delta_phi_over_pi: Vec::new(),
            t_r_ns: d.t_r,
            t_p_ns: d.t_p,
            envelope_a: d.a_env,
            max_duration_ns: d.max_duration_ns,
            start_from_pulse: false,
            restarts: d.restarts,
            max_evals: d.max_evals,
            plateau_prescan: d.plateau_prescan,
            f_tol: d.f_tol,
        }
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            bail!(UsageError(format!("{name}: empty or non-finite range {self:?}")));
        }
        if self.points == 1 {
            return Ok(vec![self.start]);
        }
        if self.start == self.stop {
            bail!(UsageError(format!("{name}: zero-width range with {} points", self.points)));
        }
        let n = self.points - 1;
        Ok((0..=n).map(|k| self.start + (self.stop - self.start) * k as f64 / n as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub phi_over_pi: Grid,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { phi_over_pi: Grid { start: 1.0, stop: 1.1, points: 101 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scan2dConfig {
    pub delta_phi_over_pi: Grid,
    pub t_p_ns: Grid,
}

impl Default for Scan2dConfig {
    fn default() -> Self {
        Scan2dConfig {
            delta_phi_over_pi: Grid { start: 0.064, stop: 0.078, points: 40 },
            t_p_ns: Grid { start: 0.0, stop: 30.0, points: 40 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Exactly one of the two offset grids must be given.
    pub delta_phi_offset_over_pi: Option<Grid>,
    pub t_p_offset_ns: Option<Grid>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { delta_phi_offset_over_pi: Some(Grid { start: -2e-3, stop: 2e-3, points: 17 }), t_p_offset_ns: None }
    }
}

impl NoiseConfig {
    /// The perturbed line and its offsets in internal units (rad or ns).
    pub fn line(&self) -> Result<(NoiseLine, Vec<f64>)> {
        match (self.delta_phi_offset_over_pi, self.t_p_offset_ns) {
            (Some(g), None) => {
                Ok((NoiseLine::DeltaPhi, g.values("noise.delta_phi_offset_over_pi")?.iter().map(|x| x * PI).collect()))
            }
            (None, Some(g)) => Ok((NoiseLine::PlateauTime, g.values("noise.t_p_offset_ns")?)),
            _ => bail!(UsageError("noise: give exactly one of delta_phi_offset_over_pi, t_p_offset_ns".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    /// Dressed sweet-spot labels `(k, l)` to start from.
    pub initial_states: Vec<(usize, usize)>,
    pub dt_out_ns: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig { initial_states: vec![(0, 1), (1, 0)], dt_out_ns: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub qubit_a: QubitConfig,
    pub qubit_b: QubitConfig,
    pub j_c_ghz: f64,
    pub basis: BasisConfig,
    pub pulse: PulseConfig,
    pub integrator: IntegratorConfig,
    pub optimizer: OptimizerConfig,
    pub spectrum: SpectrumConfig,
    pub scan2d: Scan2dConfig,
    pub noise: NoiseConfig,
    pub trajectory: TrajectoryConfig,
    /// Relaxation times (both qubits) to evaluate in addition to coherent
    /// evolution.
    pub t1_us: Vec<f64>,
    pub relaxation_convention: RelaxationConvention,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            qubit_a: QubitConfig::from_params(CircuitParams::reference_a()),
            qubit_b: QubitConfig::from_params(CircuitParams::reference_b()),
            j_c_ghz: fluxgate::coupled::REFERENCE_J_C,
            basis: BasisConfig::default(),
            pulse: PulseConfig::default(),
            integrator: IntegratorConfig::default(),
            optimizer: OptimizerConfig::default(),
            spectrum: SpectrumConfig::default(),
            scan2d: Scan2dConfig::default(),
            noise: NoiseConfig::default(),
            trajectory: TrajectoryConfig::default(),
            t1_us: Vec::new(),
            relaxation_convention: RelaxationConvention::Standard,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Bad input from the user rather than a failed computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| anyhow::Error::new(UsageError(format!("config {}: {e}", path.display()))))
    }

    pub fn system(&self) -> Result<TwoQubitSystem> {
        let (a, b) = (self.qubit_a.params()?, self.qubit_b.params()?);
        let qa = TruncatedQubit::at_sweet_spot(&a, self.basis.osc_dim, self.basis.n_levels)?;
        let qb = TruncatedQubit::at_sweet_spot(&b, self.basis.osc_dim, self.basis.n_levels)?;
        Ok(TwoQubitSystem::assemble(qa, qb, self.j_c_ghz)?)
    }

    pub fn dissipations(&self) -> Result<Vec<Dissipation>> {
        self.t1_us
            .iter()
            .map(|&t1| {
                let d = Dissipation { convention: self.relaxation_convention, ..Dissipation::uniform(t1) };
                d.validate()?;
                Ok(d)
            })
            .collect()
    }

    /// Detunings of an optimize run, in rad.
    pub fn optimize_detunings(&self) -> Vec<f64> {
        if self.optimizer.delta_phi_over_pi.is_empty() {
            vec![self.pulse.delta_phi_over_pi * PI]
        } else {
            self.optimizer.delta_phi_over_pi.iter().map(|d| d * PI).collect()
        }
    }

    pub fn optimization_spec(&self, delta_phi: f64) -> Result<OptimizationSpec> {
        let o = &self.optimizer;
        let initial = if o.start_from_pulse {
            Some(PulseParams { delta_phi, ..self.pulse.params()? })
        } else {
            None
        };
        let spec = OptimizationSpec {
            delta_phi,
            t_r: o.t_r_ns,
            t_p: o.t_p_ns,
            a_env: o.envelope_a,
            restarts: o.restarts,
            seed: self.seed,
            max_duration_ns: o.max_duration_ns,
            initial,
            plateau_prescan: o.plateau_prescan,
            max_evals: o.max_evals,
            f_tol: o.f_tol,
            integrator: self.integrator.options()?,
            ..Default::default()
        };
        spec.validate()?;
        Ok(spec)
    }
}
