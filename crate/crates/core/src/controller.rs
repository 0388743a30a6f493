//! Feedforward Phugoid–catenary frequency matching.
//!
//! The Phugoid approximation `ω_t(σ) = √(g·(−(Z_u + Z_uσ·σ))/Z_q)` is set
//! equal to the temporal frequency `u0·ω_s(x)` the aircraft sees when it
//! flies the catenary at constant speed, and the residual
//!
//! ```text
//! r(σ) = Z_u + Z_uσ(σ)·σ + Z_q·u0²·x²/(g·y(x)²)
//! ```
//!
//! is solved for the morph command σ*(x). Commands are rebuilt from the
//! upstream tower of every span.

use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::StabilityDerivatives;
use crate::powerline::{CatenarySpec, PowerlineError, PowerlineProfile};
use crate::roots::{bisect, newton};
use crate::GRAVITY;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("mode not oscillatory under current σ = {sigma} (radicand {radicand})")]
    NotOscillatory { sigma: f64, radicand: f64 },
    #[error("invalid matching context: {0}")]
    InvalidContext(&'static str),
    #[error(transparent)]
    Powerline(#[from] PowerlineError),
    #[error("span {span}, x = {x} m: {source}")]
    AtSample { span: usize, x: f64, source: Box<ControllerError> },
}

/// Sign handling for the Phugoid radicand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyConvention {
    /// `g·(−(Z_u + Z_uσ·σ))/Z_q`, the classical `√(−g·Z_u/u0)` form.
    #[default]
    Classical,
    /// `|g·(Z_u + Z_uσ·σ)/Z_q|` with the residual exactly as printed,
    /// `Z_uσ·σ − Z_q·u0²x²/(g·y²) + Z_u`.
    AbsoluteRadicand,
}

/// How `Z_uσ(σ)·σ` is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SensitivityModel {
    /// Constant `Z_uσ`, per unit σ.
    Constant { z_u_sigma: f64 },
    /// Samples `(σ, Z_u(σ))` of the resolved derivative, strictly increasing
    /// in σ; `Z_uσ(σ)·σ` is the secant `Z_u(σ) − Z_u(0)`. Piecewise linear,
    /// extended linearly beyond the ends.
    Curve { samples: Vec<(f64, f64)> },
}

impl SensitivityModel {
    fn validate(&self) -> Result<(), ControllerError> {
        match self {
            SensitivityModel::Constant { z_u_sigma } if !z_u_sigma.is_finite() => {
                Err(ControllerError::InvalidContext("Z_uσ must be finite"))
            }
            SensitivityModel::Curve { samples } => {
                if samples.len() < 2 {
                    return Err(ControllerError::InvalidContext("Z_u curve needs at least two samples"));
                }
                if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(ControllerError::InvalidContext("Z_u curve σ must be strictly increasing"));
                }
                if samples.iter().any(|(s, z)| !s.is_finite() || !z.is_finite()) {
                    return Err(ControllerError::InvalidContext("Z_u curve must be finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `(Z_u(σ) − Z_u(0), d/dσ)`
    fn increment(&self, sigma: f64) -> (f64, f64) {
        match self {
            SensitivityModel::Constant { z_u_sigma } => (z_u_sigma * sigma, *z_u_sigma),
            SensitivityModel::Curve { samples } => {
                let (v, d) = curve_eval(samples, sigma);
                (v - curve_eval(samples, 0.0).0, d)
            }
        }
    }
}

fn curve_eval(s: &[(f64, f64)], x: f64) -> (f64, f64) {
    let n = s.len();
    let k = s.partition_point(|p| p.0 <= x).clamp(1, n - 1) - 1;
    let (x0, y0) = s[k];
    let (x1, y1) = s[k + 1];
    let slope = (y1 - y0) / (x1 - x0);
    (y0 + slope * (x - x0), slope)
}

/// Everything the matching solve needs for one span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingContext {
    pub derivs: StabilityDerivatives,
    /// m/s
    pub u0: f64,
    pub catenary: CatenarySpec,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub sensitivity: SensitivityModel,
    pub convention: FrequencyConvention,
}

impl MatchingContext {
    /// Constant sensitivity taken from `derivs.z_u_sigma`.
    pub fn new(derivs: StabilityDerivatives, u0: f64, catenary: CatenarySpec, sigma_lo: f64, sigma_hi: f64) -> Self {
        Self {
            derivs,
            u0,
            catenary,
            sigma_lo,
            sigma_hi,
            sensitivity: SensitivityModel::Constant { z_u_sigma: derivs.z_u_sigma },
            convention: FrequencyConvention::Classical,
        }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        if self.derivs.z_q == 0.0 || !self.derivs.z_q.is_finite() {
            return Err(ControllerError::InvalidContext("Z_q must be non-zero"));
        }
        if !(self.u0 > 0.0) {
            return Err(ControllerError::InvalidContext("u0 must be positive"));
        }
        if !(self.sigma_lo < self.sigma_hi) {
            return Err(ControllerError::InvalidContext("σ_lo must be below σ_hi"));
        }
        self.sensitivity.validate()
    }

    pub fn with_catenary(&self, catenary: CatenarySpec) -> Self {
        Self { catenary, ..self.clone() }
    }

    /// `Z_u + Z_uσ(σ)·σ` and its σ-derivative.
    pub fn effective_z_u(&self, sigma: f64) -> (f64, f64) {
        let (inc, d) = self.sensitivity.increment(sigma);
        (self.derivs.z_u + inc, d)
    }

    pub fn frequency(&self, sigma: f64) -> Result<f64, ControllerError> {
        frequency_from(self.effective_z_u(sigma).0, self.derivs.z_q, sigma, self.convention)
    }
}

fn frequency_from(z_u_eff: f64, z_q: f64, sigma: f64, convention: FrequencyConvention) -> Result<f64, ControllerError> {
    let radicand = match convention {
        FrequencyConvention::Classical => GRAVITY * -z_u_eff / z_q,
        FrequencyConvention::AbsoluteRadicand => (GRAVITY * z_u_eff / z_q).abs(),
    };
    if !(radicand >= 0.0) {
        return Err(ControllerError::NotOscillatory { sigma, radicand });
    }
    Ok(libm::sqrt(radicand))
}

/// Phugoid frequency (rad/s) at constant sensitivity `derivs.z_u_sigma`.
pub fn phugoid_frequency(
    derivs: &StabilityDerivatives,
    sigma: f64,
    convention: FrequencyConvention,
) -> Result<f64, ControllerError> {
    frequency_from(derivs.z_u + derivs.z_u_sigma * sigma, derivs.z_q, sigma, convention)
}

/// `(ω_s, ω_t,required = u0·ω_s)` at span-local `x`.
pub fn matching_requirement(ctx: &MatchingContext, x: f64) -> Result<(f64, f64), ControllerError> {
    let ws = ctx.catenary.local_spatial_frequency(x)?;
    Ok((ws, ctx.u0 * ws))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Newton,
    Bisection,
    /// No root in the bracket; nearest bound returned.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSolution {
    pub sigma: f64,
    pub saturated: bool,
    /// residual at the returned σ
    pub residual: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

/// Residual tolerance of the matching solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Solves the matching residual for σ* at span-local `x`. Newton from σ = 0
/// (50 iterations), then bisection on `[σ_lo, σ_hi]`; results outside the
/// bounds are clamped and flagged.
pub fn required_sigma(ctx: &MatchingContext, x: f64) -> Result<SigmaSolution, ControllerError> {
    ctx.validate()?;
    let (_, w_req) = matching_requirement(ctx, x)?;
    let demand = ctx.derivs.z_q * w_req * w_req / GRAVITY;
    let residual = |s: f64| {
        let (z, dz) = ctx.effective_z_u(s);
        match ctx.convention {
            FrequencyConvention::Classical => (z + demand, dz),
            FrequencyConvention::AbsoluteRadicand => (z - demand, dz),
        }
    };
    let (lo, hi) = (ctx.sigma_lo, ctx.sigma_hi);
    let clamp = |s: f64, it: usize, method: SolveMethod| {
        let c = s.clamp(lo, hi);
        SigmaSolution { sigma: c, saturated: c != s, residual: residual(c).0, iterations: it, method }
    };
    if let Ok(root) = newton(residual, 0.0, RESIDUAL_TOL, 50) {
        return Ok(clamp(root.x, root.iterations, SolveMethod::Newton));
    }
    match bisect(|s| residual(s).0, lo, hi, RESIDUAL_TOL, 0.0, 200) {
        Ok(root) => Ok(clamp(root.x, root.iterations, SolveMethod::Bisection)),
        Err(_) => {
            let (rl, rh) = (residual(lo).0, residual(hi).0);
            let s = if rl.abs() <= rh.abs() { lo } else { hi };
            Ok(SigmaSolution {
                sigma: s,
                saturated: true,
                residual: residual(s).0,
                iterations: 0,
                method: SolveMethod::Bound,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphCommand {
    /// span-local position, m
    pub x: f64,
    pub sigma: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpanSchedule {
    pub span_length: f64,
    pub commands: Vec<MorphCommand>,
}

/// One line of the flattened schedule: a command or a tower reset marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub span: usize,
    pub x: f64,
    pub sigma: f64,
    pub saturated: bool,
    pub reset: bool,
}

/// Per-span command lists; a command holds until the next one, and each
/// span starts from σ = 0 at its upstream tower.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MorphSchedule {
    pub spans: Vec<SpanSchedule>,
}

impl MorphSchedule {
    /// Command in force at span-local `x` of `span`.
    pub fn sigma_at_local(&self, span: usize, x: f64) -> f64 {
        let Some(s) = self.spans.get(span) else { return 0.0 };
        let k = s.commands.partition_point(|c| c.x <= x);
        if k == 0 {
            0.0
        } else {
            s.commands[k - 1].sigma
        }
    }

    /// Command at global along-track `x`; 0 off the profile.
    pub fn sigma_at(&self, profile: &PowerlineProfile, x: f64) -> f64 {
        match profile.locate(x) {
            Ok((span, local)) => self.sigma_at_local(span, local),
            Err(_) => 0.0,
        }
    }

    pub fn saturation_count(&self) -> usize {
        self.spans.iter().flat_map(|s| &s.commands).filter(|c| c.saturated).count()
    }

    pub fn command_count(&self) -> usize {
        self.spans.iter().map(|s| s.commands.len()).sum()
    }

    /// Commands in order with a reset marker closing every span.
    pub fn entries(&self) -> Vec<ScheduleEntry> {
        let mut out = Vec::with_capacity(self.command_count() + self.spans.len());
        for (i, s) in self.spans.iter().enumerate() {
            out.extend(s.commands.iter().map(|c| ScheduleEntry {
                span: i,
                x: c.x,
                sigma: c.sigma,
                saturated: c.saturated,
                reset: false,
            }));
            out.push(ScheduleEntry { span: i, x: s.span_length, sigma: 0.0, saturated: false, reset: true });
        }
        out
    }

    /// Smallest and largest commanded σ.
    pub fn sigma_range(&self) -> Option<(f64, f64)> {
        let mut it = self.spans.iter().flat_map(|s| &s.commands).map(|c| c.sigma);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleOptions {
    /// command spacing, m
    pub dx: f64,
    /// σ is held at 0 until the demanded ω_t first exceeds this, rad/s
    pub frequency_floor: f64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self { dx: 0.5, frequency_floor: 0.0 }
    }
}

/// Commands at `x = Δx, 2Δx, …` from each span's upstream tower.
pub fn build_schedule(
    base: &MatchingContext,
    profile: &PowerlineProfile,
    opts: &ScheduleOptions,
) -> Result<MorphSchedule, ControllerError> {
    if !(opts.dx > 0.0) {
        return Err(ControllerError::InvalidContext("command spacing Δx must be positive"));
    }
    base.validate()?;
    let mut spans = Vec::with_capacity(profile.spans().len());
    for (i, span) in profile.spans().iter().enumerate() {
        let ctx = base.with_catenary(*span);
        let l = span.span_length;
        let n = libm::floor(l / opts.dx + 1e-9) as usize;
        let mut commands = Vec::with_capacity(n);
        let mut gated = true;
        for k in 1..=n {
            let x = (k as f64 * opts.dx).min(l);
            let at = |e: ControllerError| ControllerError::AtSample { span: i, x, source: Box::new(e) };
            if gated {
                let (_, w) = matching_requirement(&ctx, x).map_err(at)?;
                gated = !(w > opts.frequency_floor);
            }
            if gated {
                commands.push(MorphCommand { x, sigma: 0.0, saturated: false });
                continue;
            }
            let sol = required_sigma(&ctx, x).map_err(at)?;
            commands.push(MorphCommand { x, sigma: sol.sigma, saturated: sol.saturated });
        }
        spans.push(SpanSchedule { span_length: l, commands });
    }
    Ok(MorphSchedule { spans })
}
