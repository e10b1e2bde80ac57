//! Flat-top Gaussian flux pulse on qubit B.
//!
//! The pulse ramps from the sweet spot π to `π + δφ` in `t_r/2`, holds for
//! `t_p`, and ramps back in another `t_r/2`. Each ramp is
//!
//! ```text
//! φ(t) = π + C δφ (exp[−A t̄ (t̄ − t_r) / t_r²] − 1),   C = 1 / (exp(A/4) − 1)
//! ```
//!
//! with `t̄ = t` on the way up and `t̄ = t − t_p` on the way down.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{FluxError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Total ramp time, up plus down (ns).
    pub t_r: f64,
    /// Plateau duration (ns).
    pub t_p: f64,
    /// Gaussian envelope parameter `A`.
    pub a_env: f64,
    /// Plateau detuning from π (rad); may be negative.
    pub delta_phi: f64,
}

impl PulseParams {
    pub fn new(t_r: f64, t_p: f64, a_env: f64, delta_phi: f64) -> Result<Self> {
        let p = PulseParams { t_r, t_p, a_env, delta_phi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t_r, self.t_p, self.a_env, self.delta_phi].iter().all(|x| x.is_finite());
        if !finite || self.t_r <= 0.0 || self.t_p < 0.0 || self.a_env <= 0.0 {
            return Err(FluxError::invalid(format!("pulse needs t_r > 0, t_p >= 0, A > 0, got {self:?}")));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.t_r + self.t_p
    }

    /// End of the ramp-up segment.
    pub fn plateau_start(&self) -> f64 {
        0.5 * self.t_r
    }

    /// Start of the ramp-down segment.
    pub fn plateau_end(&self) -> f64 {
        0.5 * self.t_r + self.t_p
    }

    fn normalization(&self) -> f64 {
        1.0 / (self.a_env / 4.0).exp_m1()
    }

    fn ramp(&self, tbar: f64) -> f64 {
        let x = -self.a_env * tbar * (tbar - self.t_r) / (self.t_r * self.t_r);
        PI + self.normalization() * self.delta_phi * x.exp_m1()
    }

    /// Flux at time `t` (ns). Outside `[0, t_r + t_p]` the flux idles at π.
    pub fn flux_at(&self, t: f64) -> f64 {
        if !(0.0..=self.duration()).contains(&t) {
            return PI;
        }
        if t <= self.plateau_start() {
            self.ramp(t)
        } else if t < self.plateau_end() {
            PI + self.delta_phi
        } else {
            self.ramp(t - self.t_p)
        }
    }

    /// Like [`flux_at`](Self::flux_at) but rejects times outside the pulse.
    pub fn flux_at_strict(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.duration()).contains(&t) {
            return Err(FluxError::invalid(format!("t = {t} ns outside pulse [0, {}]", self.duration())));
        }
        Ok(self.flux_at(t))
    }
}

/// Uniform time grid over a pulse with the flux at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSamples {
    pub times: Vec<f64>,
    pub flux: Vec<f64>,
}

/// Samples `[0, t_r + t_p]` with spacing `dt`; the last step is shortened to
/// land on the end time.
pub fn sample(params: &PulseParams, dt: f64) -> Result<PulseSamples> {
    params.validate()?;
    let total = params.duration();
    if !(dt > 0.0) || dt > total {
        return Err(FluxError::invalid(format!("sample spacing {dt} must be in (0, {total}]")));
    }
    let mut times = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        if t >= total * (1.0 - 1e-12) {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(total);
    let flux = times.iter().map(|&t| params.flux_at(t)).collect();
    Ok(PulseSamples { times, flux })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adiabaticity {
    /// Both inequalities hold with a factor-3 margin.
    Strict,
    /// Both inequalities hold, at least one without margin.
    Loose,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticityReport {
    pub verdict: Adiabaticity,
    /// `g/ħ` in rad/ns.
    pub coupling_rate: f64,
    /// `1/t_r` in 1/ns.
    pub ramp_rate: f64,
    /// `min(ω_A, ω_B)` in rad/ns.
    pub qubit_rate: f64,
}

const STRICT_MARGIN: f64 = 3.0;

/// Checks `g/ħ ≪ 1/t_r ≪ min(ω_A, ω_B)`. `g` and `omega_min` are in GHz
/// (E/h); both are converted to angular rates before comparing.
pub fn validate_adiabaticity(params: &PulseParams, g: f64, omega_min: f64) -> AdiabaticityReport {
    let coupling_rate = crate::TWO_PI * g.abs();
    let qubit_rate = crate::TWO_PI * omega_min;
    let ramp_rate = 1.0 / params.t_r;
    let verdict = if coupling_rate * STRICT_MARGIN < ramp_rate && ramp_rate * STRICT_MARGIN < qubit_rate {
        Adiabaticity::Strict
    } else if coupling_rate < ramp_rate && ramp_rate < qubit_rate {
        Adiabaticity::Loose
    } else {
        Adiabaticity::Fail
    };
    AdiabaticityReport { verdict, coupling_rate, ramp_rate, qubit_rate }
}
