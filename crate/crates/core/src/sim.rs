//! Fixed-step RK4 integration of `ẋ = [A + B_σ·σ(t)]·x` along a powerline
//! profile, with σ(t) looked up from the morph schedule at the aircraft's
//! along-track position (advanced at `u0 + u`), plus the tracking metrics.
//!
//! This is the time-varying *linear* plant; no nonlinear equations of motion
//! are integrated.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuator::{ActuatorError, ActuatorState, ServoModel};
use crate::aero::{
    resolved_derivatives, synthetic_coefficient_model, trim_aircraft, AeroError, AircraftGeometry, CoefficientModel,
    DerivativeOptions, MorphMode, Plant, StabilityDerivatives, SyntheticAirfoil, SyntheticCalibration, TrimState,
};
use crate::controller::{phugoid_frequency, ControllerError, FrequencyConvention, MorphSchedule};
use crate::math::{mat_vec, Mat5, Vec5};
use crate::powerline::{PowerlineError, PowerlineProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("state diverged at t = {t:.3} s, x = {x:.2} m: {component} = {value:.3e} exceeds the divergence bound")]
    Diverged { t: f64, x: f64, component: &'static str, value: f64 },
    #[error("trajectory x-range [{first}, {last}] m does not match the profile [0, {length}] m")]
    RangeMismatch { first: f64, last: f64, length: f64 },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error(transparent)]
    Actuator(#[from] ActuatorError),
    #[error(transparent)]
    Powerline(#[from] PowerlineError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Aero(#[from] AeroError),
}

/// Perturbation state `(u, w, q, θ, h)` plus along-track position and time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LongitudinalState {
    /// s
    pub t: f64,
    /// m
    pub x: f64,
    /// m/s
    pub u: f64,
    /// m/s
    pub w: f64,
    /// rad/s
    pub q: f64,
    /// rad
    pub theta: f64,
    /// m
    pub h: f64,
}

impl LongitudinalState {
    pub fn vector(&self) -> Vec5 {
        [self.u, self.w, self.q, self.theta, self.h]
    }

    pub fn set_vector(&mut self, v: &Vec5) {
        [self.u, self.w, self.q, self.theta, self.h] = *v;
    }
}

/// Initial condition at the first tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryCondition {
    /// Pitched along the cable: θ(0) equals the wire slope at the tower.
    #[default]
    Tangent,
    /// All perturbations zero.
    Level,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorMode {
    /// σ achieved equals σ commanded.
    #[default]
    Ideal,
    /// σ commanded is filtered through the servo model.
    Servo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    /// m/s
    pub u0: f64,
    /// initial h perturbation, m
    pub initial_altitude_offset: f64,
    /// initial u perturbation, m/s
    pub initial_speed_offset: f64,
    pub entry: EntryCondition,
    pub actuator: ActuatorMode,
    /// servo in σ units, used when `actuator` is `Servo`
    pub servo: Option<ServoModel>,
    /// abort when any state component exceeds this magnitude
    pub divergence_bound: f64,
    /// along-track distance to simulate, m; `None` runs the whole profile
    pub horizon: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            u0: 25.0,
            initial_altitude_offset: 0.0,
            initial_speed_offset: 0.0,
            entry: EntryCondition::Tangent,
            actuator: ActuatorMode::Ideal,
            servo: None,
            divergence_bound: 1e4,
            horizon: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, profile: &PowerlineProfile) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::InvalidConfig("dt must be positive"));
        }
        if !(self.u0 > 0.0 && self.u0.is_finite()) {
            return Err(SimError::InvalidConfig("u0 must be positive"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(SimError::InvalidConfig("divergence bound must be positive"));
        }
        if let Some(h) = self.horizon {
            let first = profile.spans()[0].span_length;
            if !(h >= first - 1e-9) {
                return Err(SimError::InvalidConfig("horizon must cover at least one span"));
            }
            if h > profile.total_length() + 1e-9 {
                return Err(SimError::InvalidConfig("horizon exceeds the profile length"));
            }
        }
        if self.actuator == ActuatorMode::Servo && self.servo.is_none() {
            return Err(SimError::InvalidConfig("servo actuator mode needs a servo model"));
        }
        Ok(())
    }

    pub fn horizon_for(&self, profile: &PowerlineProfile) -> f64 {
        self.horizon.unwrap_or_else(|| profile.total_length())
    }
}

/// One row of the trajectory output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub state: LongitudinalState,
    pub sigma_cmd: f64,
    pub sigma_achieved: f64,
    /// whether the command in force was clamped to a morph bound
    pub saturated: bool,
    pub wire_height: f64,
    /// aircraft altitude minus wire height, m
    pub clearance: f64,
}

/// One classical RK4 step of `ẋ = M·x` (x augmented with along-track
/// position advancing at `u0 + u`).
pub fn rk4_step(m: &Mat5, s: &Vec5, u0: f64, dt: f64) -> (Vec5, f64) {
    let add = |a: &Vec5, b: &Vec5, k: f64| {
        let mut o = *a;
        for i in 0..5 {
            o[i] += k * b[i];
        }
        o
    };
    let k1 = mat_vec(m, s);
    let s2 = add(s, &k1, 0.5 * dt);
    let k2 = mat_vec(m, &s2);
    let s3 = add(s, &k2, 0.5 * dt);
    let k3 = mat_vec(m, &s3);
    let s4 = add(s, &k3, dt);
    let k4 = mat_vec(m, &s4);
    let mut out = *s;
    for i in 0..5 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let dx = dt * u0 + dt / 6.0 * (s[0] + 2.0 * s2[0] + 2.0 * s3[0] + s4[0]);
    (out, dx)
}

/// `n` RK4 steps at constant σ from `x0`.
pub fn propagate(plant: &Plant, sigma: f64, x0: &Vec5, dt: f64, n: usize) -> Vec5 {
    let m = plant.at(sigma);
    let mut s = *x0;
    for _ in 0..n {
        s = rk4_step(&m, &s, 0.0, dt).0;
    }
    s
}

const NAMES: [&str; 5] = ["u", "w", "q", "theta", "h"];

/// A resumable run: [`Simulation::advance_to`] can be called repeatedly and
/// produces the same samples as a single call to the final position.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    plant: &'a Plant,
    schedule: &'a MorphSchedule,
    profile: &'a PowerlineProfile,
    cfg: SimConfig,
    state: LongitudinalState,
    servo: Option<ActuatorState>,
    samples: Vec<TrajectorySample>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        plant: &'a Plant,
        schedule: &'a MorphSchedule,
        profile: &'a PowerlineProfile,
        cfg: SimConfig,
    ) -> Result<Self, SimError> {
        cfg.validate(profile)?;
        let mut state = LongitudinalState {
            h: cfg.initial_altitude_offset,
            u: cfg.initial_speed_offset,
            ..LongitudinalState::default()
        };
        if cfg.entry == EntryCondition::Tangent {
            state.theta = profile.spans()[0].slope(0.0)?;
        }
        let servo = match (cfg.actuator, cfg.servo) {
            (ActuatorMode::Servo, Some(m)) => Some(ActuatorState::new(&m, cfg.dt)?),
            _ => None,
        };
        let mut sim = Self { plant, schedule, profile, cfg, state, servo, samples: Vec::new() };
        let first = sim.sample()?;
        sim.samples.push(first);
        Ok(sim)
    }

    fn command(&self) -> (f64, bool) {
        match self.profile.locate(self.state.x) {
            Ok((span, local)) => {
                let cmds = self.schedule.spans.get(span).map(|s| s.commands.as_slice()).unwrap_or(&[]);
                let k = cmds.partition_point(|c| c.x <= local);
                if k == 0 {
                    (0.0, false)
                } else {
                    (cmds[k - 1].sigma, cmds[k - 1].saturated)
                }
            }
            Err(_) => (0.0, false),
        }
    }

    fn achieved(&self, cmd: f64) -> f64 {
        match &self.servo {
            Some(s) => s.output,
            None => cmd,
        }
    }

    fn sample(&self) -> Result<TrajectorySample, SimError> {
        let (cmd, saturated) = self.command();
        let wire = self.profile.wire_height(self.state.x.min(self.profile.total_length()))?;
        let h_ref = self.profile.spans()[0].tower_height;
        Ok(TrajectorySample {
            state: self.state,
            sigma_cmd: cmd,
            sigma_achieved: self.achieved(cmd),
            saturated,
            wire_height: wire,
            clearance: h_ref + self.state.h - wire,
        })
    }

    /// Steps until the along-track position reaches `x_target` (clamped to
    /// the configured horizon).
    pub fn advance_to(&mut self, x_target: f64) -> Result<(), SimError> {
        let target = x_target.min(self.cfg.horizon_for(self.profile));
        let dt = self.cfg.dt;
        while self.state.x < target {
            let (cmd, _) = self.command();
            let sigma = self.achieved(cmd);
            let m = self.plant.at(sigma);
            let (next, dx) = rk4_step(&m, &self.state.vector(), self.cfg.u0, dt);
            if let Some(s) = self.servo.as_mut() {
                s.step(cmd);
            }
            self.state.set_vector(&next);
            self.state.x += dx;
            self.state.t += dt;
            for (i, v) in next.iter().enumerate() {
                if !(v.abs() <= self.cfg.divergence_bound) {
                    return Err(SimError::Diverged {
                        t: self.state.t,
                        x: self.state.x,
                        component: NAMES[i],
                        value: *v,
                    });
                }
            }
            let smp = self.sample()?;
            self.samples.push(smp);
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        self.advance_to(self.cfg.horizon_for(self.profile))
    }

    pub fn state(&self) -> &LongitudinalState {
        &self.state
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<TrajectorySample> {
        self.samples
    }
}

/// Runs the whole configured horizon.
pub fn integrate(
    plant: &Plant,
    schedule: &MorphSchedule,
    profile: &PowerlineProfile,
    cfg: &SimConfig,
) -> Result<Vec<TrajectorySample>, SimError> {
    let mut sim = Simulation::new(plant, schedule, profile, *cfg)?;
    sim.run_to_end()?;
    Ok(sim.into_samples())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanMetrics {
    pub span: usize,
    /// evaluated length, m
    pub length: f64,
    pub length_under_1m: f64,
    pub fraction_under_1m: f64,
    pub mean_abs_clearance: f64,
    pub min_clearance: f64,
    pub max_clearance: f64,
    /// clearance where the wire sags lowest (span midpoint), if flown
    pub trough_clearance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingMetrics {
    /// `(x, clearance)`
    pub clearance: Vec<(f64, f64)>,
    pub total_length: f64,
    pub length_under_1m: f64,
    pub length_over_1m: f64,
    pub fraction_under_1m: f64,
    pub min_clearance: f64,
    pub max_clearance: f64,
    pub velocity: VelocityDeviation,
    /// samples flown under a clamped command
    pub saturated_samples: usize,
    pub spans: Vec<SpanMetrics>,
}

impl TrackingMetrics {
    /// Per-span trough class: `true` when |clearance| < 1 m at the wire's
    /// lowest point.
    pub fn trough_classes(&self) -> Vec<bool> {
        self.spans.iter().filter_map(|s| s.trough_clearance).map(|c| c.abs() < UNDER).collect()
    }

    /// Whether three consecutive span troughs go low/high/low or
    /// high/low/high.
    pub fn alternates(&self) -> bool {
        alternating(&self.trough_classes())
    }
}

/// Some window of three consecutive classes flips twice.
pub fn alternating(classes: &[bool]) -> bool {
    classes.windows(3).any(|w| w[0] != w[1] && w[1] != w[2])
}

/// Clearance at `x`, linearly interpolated between samples.
fn clearance_at(series: &[(f64, f64)], x: f64) -> Option<f64> {
    let k = series.partition_point(|p| p.0 < x);
    if k == 0 || k == series.len() {
        return None;
    }
    let ((x0, c0), (x1, c1)) = (series[k - 1], series[k]);
    Some(c0 + (c1 - c0) * (x - x0) / (x1 - x0))
}

const UNDER: f64 = 1.0;

/// Clearance statistics. Each sample owns the x-interval up to the next one
/// (left-point rule), so under + over = total by construction.
pub fn clearance_metrics(
    trajectory: &[TrajectorySample],
    profile: &PowerlineProfile,
    h_ref: f64,
) -> Result<TrackingMetrics, SimError> {
    let (first, last) = match (trajectory.first(), trajectory.last()) {
        (Some(f), Some(l)) => (f.state.x, l.state.x),
        _ => return Err(SimError::EmptyTrajectory),
    };
    let length = profile.total_length();
    let max_gap = trajectory.windows(2).map(|w| w[1].state.x - w[0].state.x).fold(0.0, f64::max);
    if first < -1e-9 || last > length + max_gap + 1e-9 || last <= first {
        return Err(SimError::RangeMismatch { first, last, length });
    }
    let mut clearance = Vec::with_capacity(trajectory.len());
    for s in trajectory {
        let wire = profile.wire_height(s.state.x.min(length))?;
        clearance.push((s.state.x, h_ref + s.state.h - wire));
    }
    let n_spans = profile.spans().len();
    let mut spans: Vec<SpanMetrics> = (0..n_spans)
        .map(|i| SpanMetrics {
            span: i,
            length: 0.0,
            length_under_1m: 0.0,
            fraction_under_1m: 0.0,
            mean_abs_clearance: 0.0,
            min_clearance: f64::INFINITY,
            max_clearance: f64::NEG_INFINITY,
            trough_clearance: clearance_at(
                &clearance,
                profile.tower_positions()[i] + 0.5 * profile.spans()[i].span_length,
            ),
        })
        .collect();
    let mut under = 0.0;
    let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in clearance.windows(2) {
        let (x0, c0) = w[0];
        let seg = w[1].0 - x0;
        let (span, _) = profile.locate(x0.min(length))?;
        let sm = &mut spans[span];
        sm.length += seg;
        sm.mean_abs_clearance += c0.abs() * seg;
        sm.min_clearance = sm.min_clearance.min(c0);
        sm.max_clearance = sm.max_clearance.max(c0);
        if c0.abs() < UNDER {
            under += seg;
            sm.length_under_1m += seg;
        }
        cmin = cmin.min(c0);
        cmax = cmax.max(c0);
    }
    let (_, c_last) = clearance[clearance.len() - 1];
    cmin = cmin.min(c_last);
    cmax = cmax.max(c_last);
    let spans: Vec<SpanMetrics> = spans
        .into_iter()
        .filter(|s| s.length > 0.0)
        .map(|mut s| {
            s.fraction_under_1m = s.length_under_1m / s.length;
            s.mean_abs_clearance /= s.length;
            s
        })
        .collect();
    let total = last - first;
    Ok(TrackingMetrics {
        clearance,
        total_length: total,
        length_under_1m: under,
        length_over_1m: total - under,
        fraction_under_1m: under / total,
        min_clearance: cmin,
        max_clearance: cmax,
        velocity: velocity_deviation(trajectory),
        saturated_samples: trajectory.iter().filter(|s| s.saturated).count(),
        spans,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityDeviation {
    /// u(t), m/s
    pub series: Vec<f64>,
    pub max_abs: f64,
    pub rms: f64,
}

pub fn velocity_deviation(trajectory: &[TrajectorySample]) -> VelocityDeviation {
    let series: Vec<f64> = trajectory.iter().map(|s| s.state.u).collect();
    let max_abs = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rms = if series.is_empty() {
        0.0
    } else {
        libm::sqrt(series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64)
    };
    VelocityDeviation { series, max_abs, rms }
}

/// `λ_ph = u0/ω_t(σ)`, m.
pub fn phugoid_wavelength(
    derivs: &StabilityDerivatives,
    sigma: f64,
    u0: f64,
    convention: FrequencyConvention,
) -> Result<f64, SimError> {
    let w = phugoid_frequency(derivs, sigma, convention)?;
    if !(w > 0.0) {
        return Err(ControllerError::NotOscillatory { sigma, radicand: 0.0 }.into());
    }
    Ok(u0 / w)
}

/// Wavelength of the aircraft reshaped to `sigma`, from derivatives resolved
/// on that shape (wingspan and chord enter through `geom`).
pub fn resolved_wavelength<M: CoefficientModel>(
    model: &M,
    geom: &AircraftGeometry,
    trim: &TrimState,
    sigma: f64,
    opts: &DerivativeOptions,
) -> Result<f64, SimError> {
    let d = resolved_derivatives(model, geom, trim, sigma, opts)?;
    phugoid_wavelength(&d, 0.0, geom.trim_speed, FrequencyConvention::Classical)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthPoint {
    pub wingspan: f64,
    pub chord: f64,
    pub sigma: f64,
    /// m
    pub wavelength: f64,
}

/// λ over a wingspan × chord × σ grid of the synthetic aircraft. Mass and
/// pitch inertia are those of `base`; wing area is `b·c`.
#[allow(clippy::too_many_arguments)]
pub fn wavelength_surface(
    airfoil: &SyntheticAirfoil,
    mode: MorphMode,
    calib: &SyntheticCalibration,
    base: &AircraftGeometry,
    wingspans: &[f64],
    chords: &[f64],
    sigmas: &[f64],
    opts: &DerivativeOptions,
) -> Result<Vec<WavelengthPoint>, SimError> {
    let mut out = Vec::with_capacity(wingspans.len() * chords.len() * sigmas.len());
    for &b in wingspans {
        for &c in chords {
            let geom = AircraftGeometry { wingspan: b, chord: c, wing_area: b * c, ..*base };
            let model = synthetic_coefficient_model(airfoil, mode, calib, &geom)?;
            let trim = trim_aircraft(&model, &geom)?;
            for &sigma in sigmas {
                let wavelength = resolved_wavelength(&model, &geom, &trim, sigma, opts)?;
                out.push(WavelengthPoint { wingspan: b, chord: c, sigma, wavelength });
            }
        }
    }
    Ok(out)
}
