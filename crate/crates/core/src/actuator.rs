//! Morphing servo: `K·ω_n²/(s² + 2ζω_n·s + ω_n²)·e^{−T_d·s}` with a slew
//! limit on the achieved output, discretized by exact zero-order hold.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::expm;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ActuatorError {
    #[error("time step must be positive and finite (got {0})")]
    InvalidStep(f64),
    #[error("time step {dt} s exceeds the transport delay {delay} s")]
    DelayUnresolved { dt: f64, delay: f64 },
    #[error("invalid servo model: {0}")]
    InvalidModel(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoModel {
    /// output units per command unit
    pub gain: f64,
    pub zeta: f64,
    /// rad/s
    pub omega_n: f64,
    /// s
    pub delay: f64,
    /// command units per second; the output moves at most `|K|·slew_limit`
    pub slew_limit: f64,
}

/// Servo travel per slew interval, degrees.
pub const SLEW_TRAVEL_DEG: f64 = 60.0;
/// Time for [`SLEW_TRAVEL_DEG`] of travel, s.
pub const SLEW_TIME: f64 = 0.11;

/// The identified thickness servo with delay, commands in degrees.
pub fn default_servo() -> ServoModel {
    ServoModel { gain: 0.01333, zeta: 0.45, omega_n: 2.0 * PI, delay: 0.05, slew_limit: SLEW_TRAVEL_DEG / SLEW_TIME }
}

impl ServoModel {
    pub fn validate(&self) -> Result<(), ActuatorError> {
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(ActuatorError::InvalidModel("damping ratio must be positive"));
        }
        if !(self.omega_n > 0.0 && self.omega_n.is_finite()) {
            return Err(ActuatorError::InvalidModel("natural frequency must be positive"));
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(ActuatorError::InvalidModel("delay must be non-negative"));
        }
        if !(self.slew_limit > 0.0) {
            return Err(ActuatorError::InvalidModel("slew limit must be positive"));
        }
        if !self.gain.is_finite() {
            return Err(ActuatorError::InvalidModel("gain must be finite"));
        }
        Ok(())
    }

    /// Same dynamics driven in σ units: unit gain, with the full servo
    /// throw of [`SLEW_TRAVEL_DEG`] mapped onto `sigma_range`.
    pub fn in_sigma_units(&self, sigma_range: f64) -> Self {
        Self { gain: 1.0, slew_limit: self.slew_limit * sigma_range / SLEW_TRAVEL_DEG, ..*self }
    }

    /// Output rate limit, output units per second.
    pub fn output_slew(&self) -> f64 {
        self.gain.abs() * self.slew_limit
    }

    /// Classical peak overshoot fraction of the undelayed lag.
    pub fn overshoot(&self) -> f64 {
        libm::exp(-PI * self.zeta / libm::sqrt(1.0 - self.zeta * self.zeta))
    }

    /// Delay-line length in samples at step `dt`.
    pub fn delay_samples(&self, dt: f64) -> usize {
        libm::ceil(self.delay / dt - 1e-6).max(0.0) as usize
    }

    /// Exact ZOH transition `(Φ, Γ)` of the position/velocity lag over `dt`.
    pub fn discretize(&self, dt: f64) -> ([[f64; 2]; 2], [f64; 2]) {
        let w2 = self.omega_n * self.omega_n;
        let aug =
            [[0.0, dt, 0.0], [-w2 * dt, -2.0 * self.zeta * self.omega_n * dt, self.gain * w2 * dt], [0.0, 0.0, 0.0]];
        let e = expm(&aug);
        ([[e[0][0], e[0][1]], [e[1][0], e[1][1]]], [e[0][2], e[1][2]])
    }
}

/// Limits the move from `prev` toward `proposed` to `limit·dt`. The bound
/// holds in floating point both as `|Δ| ≤ limit·dt` and as `|Δ|/dt ≤ limit`.
pub fn apply_slew(prev: f64, proposed: f64, dt: f64, limit: f64) -> f64 {
    let max = limit * dt;
    let d = proposed - prev;
    let mut out = if d > max {
        prev + max
    } else if d < -max {
        prev - max
    } else {
        proposed
    };
    while (out - prev).abs() > max || (out - prev).abs() / dt > limit {
        out = if out > prev { out.next_down() } else { out.next_up() };
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorState {
    pub position: f64,
    pub velocity: f64,
    pub output: f64,
    pending: VecDeque<f64>,
    dt: f64,
    phi: [[f64; 2]; 2],
    gamma: [f64; 2],
    slew: f64,
    /// steps on which the slew limit was active
    pub slew_events: usize,
}

impl ActuatorState {
    /// Servo at rest with `ceil(T_d/dt)` zero commands in flight.
    pub fn new(model: &ServoModel, dt: f64) -> Result<Self, ActuatorError> {
        model.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ActuatorError::InvalidStep(dt));
        }
        if model.delay > 0.0 && dt > model.delay * (1.0 + 1e-9) {
            return Err(ActuatorError::DelayUnresolved { dt, delay: model.delay });
        }
        let n = model.delay_samples(dt);
        let (phi, gamma) = model.discretize(dt);
        Ok(Self {
            position: 0.0,
            velocity: 0.0,
            output: 0.0,
            pending: core::iter::repeat_n(0.0, n).collect(),
            dt,
            phi,
            gamma,
            slew: model.output_slew(),
            slew_events: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delay_len(&self) -> usize {
        self.pending.len()
    }

    /// Accepts the command for `[t, t + dt)` and returns the output at
    /// `t + dt`.
    pub fn step(&mut self, command: f64) -> f64 {
        let u = if self.pending.is_empty() {
            command
        } else {
            self.pending.push_back(command);
            self.pending.pop_front().unwrap_or(0.0)
        };
        let (p, v) = (self.position, self.velocity);
        let np = self.phi[0][0] * p + self.phi[0][1] * v + self.gamma[0] * u;
        let nv = self.phi[1][0] * p + self.phi[1][1] * v + self.gamma[1] * u;
        let out = apply_slew(self.output, np, self.dt, self.slew);
        if out != np {
            self.slew_events += 1;
            self.velocity = (out - self.output) / self.dt;
        } else {
            self.velocity = nv;
        }
        self.position = out;
        self.output = out;
        out
    }
}

/// `(t, command, output)` sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub command: f64,
    pub output: f64,
}

/// Runs `commands` (one per step, held over `[t_k, t_k + dt)`) from rest.
/// Sample k is `(k·dt, c_k, y_k)` with `y_0 = 0`.
pub fn simulate_commands(model: &ServoModel, commands: &[f64], dt: f64) -> Result<Vec<TraceSample>, ActuatorError> {
    let mut st = ActuatorState::new(model, dt)?;
    let mut out = Vec::with_capacity(commands.len());
    for (k, &c) in commands.iter().enumerate() {
        out.push(TraceSample { t: k as f64 * dt, command: c, output: st.output });
        st.step(c);
    }
    Ok(out)
}

/// Step of size `amplitude` at t = 0 held for `duration`.
pub fn step_response_trace(
    model: &ServoModel,
    amplitude: f64,
    duration: f64,
    dt: f64,
) -> Result<Vec<TraceSample>, ActuatorError> {
    let n = libm::round(duration / dt) as usize;
    simulate_commands(model, &alloc::vec![amplitude; n], dt)
}

/// Frequency response `(Re, Im)` of the transfer function exactly as
/// printed in the identification write-up,
/// `0.01333/(s² − 1.838s + 1)·(1 − e^{−0.005s})` at `s = jω`. It is unstable
/// and has zero DC gain; kept for comparison only.
pub fn literal_transfer_response(omega: f64) -> (f64, f64) {
    let (dr, di) = (1.0 - omega * omega, -1.838 * omega);
    let (fr, fi) = (1.0 - libm::cos(0.005 * omega), libm::sin(0.005 * omega));
    let (nr, ni) = (0.01333 * fr, 0.01333 * fi);
    let den = dr * dr + di * di;
    ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_servo_parameters() {
        let s = default_servo();
        assert_eq!(s.zeta, 0.45);
        assert_eq!(s.omega_n, 2.0 * PI);
        assert_eq!(s.delay, 0.05);
        assert_eq!(s.gain, 0.01333);
        assert!((s.slew_limit - 545.4545).abs() < 1e-3);
        let sig = s.in_sigma_units(0.087);
        assert_eq!(sig.gain, 1.0);
        assert!((sig.slew_limit - 545.4545 * 0.087 / 60.0).abs() < 1e-6);
    }

    #[test]
    fn dc_gain_after_settling() {
        let s = default_servo();
        let settle = 10.0 / (s.zeta * s.omega_n);
        let tr = step_response_trace(&s, 3.0, settle + 1.0, 1e-3).unwrap();
        let last = tr.last().unwrap().output;
        assert!((last / (3.0 * s.gain) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_output_before_delay() {
        let s = default_servo();
        let dt = 1e-3;
        let tr = step_response_trace(&s, 1.0, 1.0, dt).unwrap();
        let last_zero = tr.iter().rev().find(|p| p.output == 0.0).unwrap().t;
        assert!((last_zero - s.delay).abs() <= dt + 1e-12, "{last_zero}");
        assert!(tr.iter().filter(|p| p.t < s.delay).all(|p| p.output == 0.0));
    }

    #[test]
    fn overshoot_matches_classical_formula() {
        let s = default_servo();
        // oracle: the analytic step response 1 − e^{−σt}(cos ω_d t + σ/ω_d sin ω_d t)
        // evaluated at its first peak t_p = π/ω_d
        let wd = s.omega_n * libm::sqrt(1.0 - s.zeta * s.zeta);
        let tp = PI / wd;
        let sig = s.zeta * s.omega_n;
        let y = 1.0 - libm::exp(-sig * tp) * (libm::cos(wd * tp) + sig / wd * libm::sin(wd * tp));
        let oracle = y - 1.0;
        assert!((oracle - s.overshoot()).abs() < 1e-12);
        assert!((s.overshoot() - 0.2053).abs() < 1e-4);

        let tr = step_response_trace(&s, 1.0, 5.0, 1e-3).unwrap();
        let peak = tr.iter().map(|p| p.output).fold(f64::MIN, f64::max);
        let os = peak / s.gain - 1.0;
        assert!((os / s.overshoot() - 1.0).abs() < 0.01, "{os}");
    }

    #[test]
    fn slew_saturation() {
        assert_eq!(apply_slew(0.0, 0.001, 0.01, 1.0), 0.001);
        assert_eq!(apply_slew(0.0, 5.0, 0.01, 1.0), 0.01);
        assert_eq!(apply_slew(0.0, -5.0, 0.01, 1.0), -0.01);
        assert_eq!(apply_slew(1.0, -5.0, 0.5, 2.0), 0.0);
    }

    #[test]
    fn invalid_steps_rejected() {
        let s = default_servo();
        assert!(ActuatorState::new(&s, 0.0).is_err());
        assert!(ActuatorState::new(&s, 0.1).is_err());
        assert_eq!(ActuatorState::new(&s, 1.0 / 120.0).unwrap().delay_len(), 6);
        assert_eq!(ActuatorState::new(&s, 1e-3).unwrap().delay_len(), 50);
    }

    #[test]
    fn literal_transfer_has_zero_dc_gain() {
        let (re, im) = literal_transfer_response(0.0);
        assert_eq!((re, im), (0.0, 0.0));
        let (re, im) = literal_transfer_response(1.0);
        assert!(re.is_finite() && im.is_finite());
    }

    #[test]
    fn halving_dt_converges() {
        // ramp-like command so ZOH differs between step sizes
        let s = ServoModel { delay: 0.0, ..default_servo() };
        let run = |dt: f64| {
            let n = libm::round(2.0 / dt) as usize;
            let cmds: Vec<f64> = (0..n).map(|k| libm::sin(3.0 * k as f64 * dt)).collect();
            simulate_commands(&s, &cmds, dt).unwrap().last().unwrap().output
        };
        let (a, b, c) = (run(4e-3), run(2e-3), run(1e-3));
        let ratio = (a - b).abs() / (b - c).abs();
        assert!(ratio > 1.8, "{ratio}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn output_rate_never_exceeds_limit(cmds in proptest::collection::vec(-60.0f64..60.0, 200)) {
                let s = ServoModel { slew_limit: 5.0, ..default_servo() };
                let dt = 0.01;
                let tr = simulate_commands(&s, &cmds, dt).unwrap();
                let lim = s.output_slew();
                for w in tr.windows(2) {
                    prop_assert!((w[1].output - w[0].output).abs() / dt <= lim);
                }
            }
        }
    }
}
