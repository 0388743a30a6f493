//! Time-domain identification of the morphing servo from multistep records:
//! first-order, second-order and second-order-with-delay transfer functions
//! fitted by simulation-error least squares.
//!
//! The gain enters the simulated output linearly, so for any candidate
//! dynamics it is solved in closed form; Levenberg–Marquardt works on the
//! log of the remaining parameters. A continuous delay is split into whole
//! samples plus a fractional ZOH sub-step, searched on a coarse grid and
//! refined by golden section.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuator::{simulate_commands, ActuatorError, ServoModel, TraceSample};
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::math::expm;
use crate::roots::golden_section;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SysidError {
    #[error("record needs at least two samples")]
    TooShort,
    #[error("sample times must be strictly increasing (sample {0})")]
    NonMonotoneTime(usize),
    #[error("sample spacing at sample {index} is {spacing} s, expected {expected} s")]
    NonUniform { index: usize, spacing: f64, expected: f64 },
    #[error("non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("output is constant; nothing to fit")]
    ConstantOutput,
    #[error("command is identically zero; gain is unidentifiable")]
    ZeroCommand,
    #[error("invalid stimulus: {0}")]
    InvalidStimulus(&'static str),
    #[error("sample rate must be positive, got {0} Hz")]
    InvalidRate(f64),
    #[error(transparent)]
    Actuator(#[from] ActuatorError),
}

/// Default camera frame rate, Hz.
pub const DEFAULT_RATE: f64 = 120.0;

/// Uniformly sampled `(t, command, output)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    /// Hz
    pub sample_rate: f64,
    pub samples: Vec<TraceSample>,
}

impl ResponseRecord {
    pub fn new(sample_rate: f64, samples: Vec<TraceSample>) -> Result<Self, SysidError> {
        let r = Self { sample_rate, samples };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), SysidError> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(SysidError::InvalidRate(self.sample_rate));
        }
        if self.samples.len() < 2 {
            return Err(SysidError::TooShort);
        }
        let dt = self.dt();
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.t.is_finite() && s.command.is_finite() && s.output.is_finite()) {
                return Err(SysidError::NonFinite(i));
            }
            if i > 0 {
                let spacing = s.t - self.samples[i - 1].t;
                if !(spacing > 0.0) {
                    return Err(SysidError::NonMonotoneTime(i));
                }
                if (spacing - dt).abs() > 1e-6 * dt.max(1.0) {
                    return Err(SysidError::NonUniform { index: i, spacing, expected: dt });
                }
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt()
    }

    pub fn commands(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.command).collect()
    }

    pub fn outputs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.output).collect()
    }
}

/// Multistep stimulus alternating `+A, −A, …` every `dwell` seconds, played
/// through `model` at `sample_rate`, with optional seeded Gaussian noise on
/// the output.
pub fn generate_multistep(
    amplitude: f64,
    steps: usize,
    dwell: f64,
    model: &ServoModel,
    noise_std: f64,
    seed: u64,
    sample_rate: f64,
) -> Result<ResponseRecord, SysidError> {
    if steps == 0 {
        return Err(SysidError::InvalidStimulus("at least one step is required"));
    }
    if !(dwell > 0.0) {
        return Err(SysidError::InvalidStimulus("dwell must be positive"));
    }
    if !(noise_std >= 0.0) {
        return Err(SysidError::InvalidStimulus("noise standard deviation must be non-negative"));
    }
    if !(sample_rate > 0.0) {
        return Err(SysidError::InvalidRate(sample_rate));
    }
    let per = libm::round(dwell * sample_rate) as usize;
    let commands: Vec<f64> =
        (0..steps).flat_map(|k| core::iter::repeat_n(if k % 2 == 0 { amplitude } else { -amplitude }, per)).collect();
    let mut samples = simulate_commands(model, &commands, 1.0 / sample_rate)?;
    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_std).map_err(|_| SysidError::InvalidStimulus("bad noise level"))?;
        for s in &mut samples {
            s.output += normal.sample(&mut rng);
        }
    }
    ResponseRecord::new(sample_rate, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStructure {
    FirstOrder,
    SecondOrder,
    SecondOrderDelay,
}

impl ModelStructure {
    pub const ALL: [ModelStructure; 3] = [Self::FirstOrder, Self::SecondOrder, Self::SecondOrderDelay];

    pub fn name(self) -> &'static str {
        match self {
            Self::FirstOrder => "first_order",
            Self::SecondOrder => "second_order",
            Self::SecondOrderDelay => "second_order_delay",
        }
    }
}

/// Fitted parameters. Unused fields of a structure are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParameters {
    pub gain: f64,
    /// s
    pub time_constant: Option<f64>,
    pub zeta: Option<f64>,
    /// rad/s
    pub omega_n: Option<f64>,
    /// s
    pub delay: Option<f64>,
}

impl FitParameters {
    pub fn natural_frequency_hz(&self) -> Option<f64> {
        self.omega_n.map(|w| w / (2.0 * core::f64::consts::PI))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub structure: ModelStructure,
    pub parameters: FitParameters,
    /// percent, `100·(1 − ‖y − ŷ‖/‖y − ȳ‖)`
    pub accuracy: f64,
    /// sum of squared output errors
    pub sse: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub multistarts: usize,
    pub seed: u64,
    /// delay search interval upper end, s
    pub max_delay: f64,
    /// coarse delay grid points over `[0, max_delay]`
    pub delay_grid: usize,
    /// golden-section tolerance, s
    pub delay_tol: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { multistarts: 8, seed: 0x5eed, max_delay: 0.5, delay_grid: 21, delay_tol: 1e-5, max_iterations: 200 }
    }
}

/// Unit-gain dynamics: first order `1/(τs + 1)` or second order
/// `ω²/(s² + 2ζωs + ω²)`, with output the first state.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Dynamics {
    First { tau: f64 },
    Second { zeta: f64, omega: f64 },
}

impl Dynamics {
    fn matrices(self) -> ([[f64; 2]; 2], [f64; 2]) {
        match self {
            Self::First { tau } => ([[-1.0 / tau, 0.0], [0.0, 0.0]], [1.0 / tau, 0.0]),
            Self::Second { zeta, omega } => ([[0.0, 1.0], [-omega * omega, -2.0 * zeta * omega]], [0.0, omega * omega]),
        }
    }

    /// Exact ZOH `(Φ, Γ)` over `h`.
    fn zoh(self, h: f64) -> ([[f64; 2]; 2], [f64; 2]) {
        let (a, b) = self.matrices();
        let aug = [[a[0][0] * h, a[0][1] * h, b[0] * h], [a[1][0] * h, a[1][1] * h, b[1] * h], [0.0, 0.0, 0.0]];
        let e = expm(&aug);
        ([[e[0][0], e[0][1]], [e[1][0], e[1][1]]], [e[0][2], e[1][2]])
    }
}

/// Unit-gain response `y_k` (state before step k) to ZOH commands delayed by
/// `delay`. Each sample interval is split at the fractional delay so the
/// input switches mid-step.
fn simulate_unit(dynamics: Dynamics, commands: &[f64], dt: f64, delay: f64, out: &mut Vec<f64>) {
    let shift = delay / dt;
    let n = libm::floor(shift + 1e-9) as usize;
    let frac = (shift - n as f64).max(0.0);
    let frac = if frac < 1e-9 { 0.0 } else { frac };
    let (pa, ga) = dynamics.zoh(frac * dt);
    let (pb, gb) = dynamics.zoh((1.0 - frac) * dt);
    let cmd = |i: isize| if i < 0 { 0.0 } else { commands[i as usize] };
    let mut x = [0.0f64; 2];
    let step = |x: &mut [f64; 2], p: &[[f64; 2]; 2], g: &[f64; 2], u: f64| {
        *x = [p[0][0] * x[0] + p[0][1] * x[1] + g[0] * u, p[1][0] * x[0] + p[1][1] * x[1] + g[1] * u];
    };
    out.clear();
    for k in 0..commands.len() {
        out.push(x[0]);
        let k = k as isize;
        if frac > 0.0 {
            step(&mut x, &pa, &ga, cmd(k - n as isize - 1));
        }
        step(&mut x, &pb, &gb, cmd(k - n as isize));
    }
}

/// Least-squares gain for a unit response and the resulting residual.
fn project(y: &[f64], unit: &[f64], resid: &mut Vec<f64>) -> f64 {
    let uu: f64 = unit.iter().map(|v| v * v).sum();
    let uy: f64 = unit.iter().zip(y).map(|(a, b)| a * b).sum();
    let k = if uu > 0.0 { uy / uu } else { 0.0 };
    resid.clear();
    resid.extend(y.iter().zip(unit).map(|(a, b)| a - k * b));
    k
}

fn dynamics_from(structure: ModelStructure, p: &[f64]) -> Dynamics {
    match structure {
        ModelStructure::FirstOrder => Dynamics::First { tau: libm::exp(p[0]) },
        _ => Dynamics::Second { zeta: libm::exp(p[0]), omega: libm::exp(p[1]) },
    }
}

struct Problem<'a> {
    y: &'a [f64],
    commands: &'a [f64],
    dt: f64,
    max_iterations: usize,
}

struct InnerFit {
    log_params: Vec<f64>,
    gain: f64,
    sse: f64,
    converged: bool,
}

impl Problem<'_> {
    fn sse(&self, structure: ModelStructure, p: &[f64], delay: f64) -> (f64, f64) {
        let mut unit = Vec::with_capacity(self.y.len());
        let mut r = Vec::with_capacity(self.y.len());
        simulate_unit(dynamics_from(structure, p), self.commands, self.dt, delay, &mut unit);
        let k = project(self.y, &unit, &mut r);
        (k, r.iter().map(|v| v * v).sum())
    }

    fn fit(&self, structure: ModelStructure, p0: &[f64], delay: f64) -> InnerFit {
        let mut unit = Vec::with_capacity(self.y.len());
        let residuals = |p: &[f64], out: &mut Vec<f64>| {
            if p.iter().any(|v| !(v.abs() < 30.0)) {
                out.clear();
                out.resize(self.y.len(), f64::NAN);
                return;
            }
            simulate_unit(dynamics_from(structure, p), self.commands, self.dt, delay, &mut unit);
            project(self.y, &unit, out);
        };
        let opts = LmOptions { max_iterations: self.max_iterations, cost_tol: 1e-14, ..LmOptions::default() };
        let rep = levenberg_marquardt(residuals, p0, &opts);
        let (gain, sse) = self.sse(structure, &rep.params, delay);
        InnerFit { log_params: rep.params, gain, sse, converged: rep.converged }
    }
}

/// Fit accuracy in percent.
pub fn fit_accuracy(y: &[f64], y_hat: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let num: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    100.0 * (1.0 - libm::sqrt(num / den))
}

/// Simulated output of fitted parameters for `commands` at step `dt`.
pub fn simulate_fit(params: &FitParameters, commands: &[f64], dt: f64) -> Vec<f64> {
    let dynamics = match (params.time_constant, params.zeta, params.omega_n) {
        (Some(tau), _, _) => Dynamics::First { tau },
        (_, Some(zeta), Some(omega)) => Dynamics::Second { zeta, omega },
        _ => return alloc::vec![0.0; commands.len()],
    };
    let mut out = Vec::with_capacity(commands.len());
    simulate_unit(dynamics, commands, dt, params.delay.unwrap_or(0.0), &mut out);
    out.iter_mut().for_each(|v| *v *= params.gain);
    out
}

fn starts(structure: ModelStructure, opts: &FitOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.multistarts.max(1))
        .map(|_| match structure {
            ModelStructure::FirstOrder => alloc::vec![rng.random_range(libm::log(0.02)..libm::log(3.0))],
            _ => alloc::vec![
                rng.random_range(libm::log(0.1)..libm::log(2.0)),
                rng.random_range(libm::log(0.5)..libm::log(40.0)),
            ],
        })
        .collect()
}

fn check(record: &ResponseRecord) -> Result<(Vec<f64>, Vec<f64>), SysidError> {
    record.validate()?;
    let y = record.outputs();
    let c = record.commands();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    if y.iter().all(|v| (v - mean).abs() <= 1e-15 * mean.abs().max(1e-300)) {
        return Err(SysidError::ConstantOutput);
    }
    if c.iter().all(|v| *v == 0.0) {
        return Err(SysidError::ZeroCommand);
    }
    Ok((y, c))
}

fn report(structure: ModelStructure, fit: &InnerFit, delay: Option<f64>, y: &[f64], c: &[f64], dt: f64) -> FitReport {
    let d = dynamics_from(structure, &fit.log_params);
    let parameters = match d {
        Dynamics::First { tau } => {
            FitParameters { gain: fit.gain, time_constant: Some(tau), zeta: None, omega_n: None, delay }
        }
        Dynamics::Second { zeta, omega } => {
            FitParameters { gain: fit.gain, time_constant: None, zeta: Some(zeta), omega_n: Some(omega), delay }
        }
    };
    let y_hat = simulate_fit(&parameters, c, dt);
    FitReport { structure, parameters, accuracy: fit_accuracy(y, &y_hat), sse: fit.sse, converged: fit.converged }
}

fn best_of(p: &Problem, structure: ModelStructure, seeds: &[Vec<f64>], delay: f64) -> InnerFit {
    let mut best: Option<InnerFit> = None;
    for s in seeds {
        let f = p.fit(structure, s, delay);
        if best.as_ref().is_none_or(|b| f.sse < b.sse) {
            best = Some(f);
        }
    }
    best.expect("at least one start")
}

/// Fits one structure to `record`.
pub fn fit(record: &ResponseRecord, structure: ModelStructure, opts: &FitOptions) -> Result<FitReport, SysidError> {
    let (y, c) = check(record)?;
    let dt = record.dt();
    let p = Problem { y: &y, commands: &c, dt, max_iterations: opts.max_iterations };
    match structure {
        ModelStructure::FirstOrder | ModelStructure::SecondOrder => {
            let f = best_of(&p, structure, &starts(structure, opts), 0.0);
            Ok(report(structure, &f, None, &y, &c, dt))
        }
        ModelStructure::SecondOrderDelay => {
            let nominal = best_of(&p, ModelStructure::SecondOrder, &starts(ModelStructure::SecondOrder, opts), 0.0);
            let (f, delay) = fit_delay(&p, nominal, record.duration(), opts);
            Ok(report(structure, &f, Some(delay), &y, &c, dt))
        }
    }
}

/// Delay search seeded by the delay-free fit, which is kept as the zero-delay
/// candidate so the result can only improve on it.
fn fit_delay(p: &Problem, nominal: InnerFit, duration: f64, opts: &FitOptions) -> (InnerFit, f64) {
    let s = ModelStructure::SecondOrderDelay;
    let hi = opts.max_delay.min(0.5 * duration).max(0.0);
    let mut best = (nominal, 0.0);
    let n = opts.delay_grid.max(2);
    let mut warm = best.0.log_params.clone();
    for i in 1..n {
        let d = hi * i as f64 / (n - 1) as f64;
        let f = p.fit(s, &warm, d);
        if f.sse < best.0.sse {
            warm = f.log_params.clone();
            best = (f, d);
        }
    }
    let step = hi / (n - 1) as f64;
    let (lo, up) = ((best.1 - step).max(0.0), (best.1 + step).min(hi));
    let seed = best.0.log_params.clone();
    let mut refined: Option<(InnerFit, f64)> = None;
    golden_section(
        |d| {
            let f = p.fit(s, &seed, d);
            let sse = f.sse;
            if refined.as_ref().is_none_or(|r| sse < r.0.sse) {
                refined = Some((f, d));
            }
            sse
        },
        lo,
        up,
        opts.delay_tol,
    );
    match refined {
        Some(r) if r.0.sse < best.0.sse => r,
        _ => best,
    }
}

/// All three structures on the same record.
pub fn fit_all(record: &ResponseRecord, opts: &FitOptions) -> Result<Vec<FitReport>, SysidError> {
    ModelStructure::ALL.iter().map(|s| fit(record, *s, opts)).collect()
}
