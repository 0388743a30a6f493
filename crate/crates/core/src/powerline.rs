//! Powerline geometry: catenary spans, multi-span profiles, voltage classes
//! and the magnetic field around a conductor.
//!
//! Span-local coordinates run from the upstream tower (`x = 0`) to the
//! downstream tower (`x = L`). The raw catenary ordinate is
//! `y(x) = a·cosh((x − L/2)/a)` with `a = T0/(ρgA)`; it is smallest at
//! midspan. Ground-referenced wire height places both attachment points at
//! the tower height `H` with the sag hanging below:
//! `h_wire(x) = H − sag_depth + (y(x) − a)`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Permeability of free space, T·m/A.
pub const MU_0: f64 = 4.0e-7 * core::f64::consts::PI;

const X_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerlineError {
    #[error("x = {x} m lies outside the span [0, {span}] m")]
    OutOfSpan { x: f64, span: f64 },
    #[error("invalid catenary: {0}")]
    InvalidSpan(&'static str),
    #[error("sag fraction {0} must lie in (0, 0.5)")]
    InvalidSag(f64),
    #[error("catenary sag solve did not converge after {0} iterations")]
    SolverFailed(usize),
    #[error("distance to conductor must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("current must be non-negative, got {0} A")]
    NegativeCurrent(f64),
    #[error("unknown powerline class `{0}`")]
    UnknownClass(alloc::string::String),
    #[error("profile needs at least one span")]
    EmptyProfile,
    #[error("towers {index} and {next} differ in height ({left} m vs {right} m)")]
    TowerMismatch { index: usize, next: usize, left: f64, right: f64 },
    #[error("position {x} m lies outside the profile [0, {length}] m")]
    OutOfProfile { x: f64, length: f64 },
}

/// One powerline span between two towers of equal height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatenarySpec {
    /// Catenary parameter `T0/(ρgA)`, m.
    pub a: f64,
    /// Tower spacing `L`, m.
    pub span_length: f64,
    /// Height of the attachment points above ground, m.
    pub tower_height: f64,
    /// Sag depth divided by span length.
    pub sag_fraction: f64,
}

/// `cosh(u) − 1` without cancellation for small `u`.
fn cosh_m1(u: f64) -> f64 {
    let s = libm::sinh(0.5 * u);
    2.0 * s * s
}

/// Sag depth `a·(cosh(L/2a) − 1)` of a catenary with parameter `a`.
pub fn sag_depth_for(a: f64, span_length: f64) -> f64 {
    a * cosh_m1(span_length / (2.0 * a))
}

impl CatenarySpec {
    /// Builds a span from an explicit catenary parameter.
    pub fn new(a: f64, span_length: f64, tower_height: f64) -> Result<Self, PowerlineError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(PowerlineError::InvalidSpan("catenary parameter must be positive"));
        }
        if !(span_length > 0.0 && span_length.is_finite()) {
            return Err(PowerlineError::InvalidSpan("span length must be positive"));
        }
        let sag = sag_depth_for(a, span_length);
        if !(tower_height > sag) {
            return Err(PowerlineError::InvalidSpan("tower height must exceed the sag depth"));
        }
        Ok(Self { a, span_length, tower_height, sag_fraction: sag / span_length })
    }

    /// Builds a span whose sag depth equals `sag_fraction · span_length`.
    pub fn from_sag(span_length: f64, sag_fraction: f64, tower_height: f64) -> Result<Self, PowerlineError> {
        let a = solve_catenary_from_sag(span_length, sag_fraction)?;
        let mut spec = Self::new(a, span_length, tower_height)?;
        spec.sag_fraction = sag_fraction;
        Ok(spec)
    }

    pub fn sag_depth(&self) -> f64 {
        sag_depth_for(self.a, self.span_length)
    }

    fn check(&self, x: f64) -> Result<f64, PowerlineError> {
        if x.is_nan() || x < -X_SLACK || x > self.span_length + X_SLACK {
            return Err(PowerlineError::OutOfSpan { x, span: self.span_length });
        }
        Ok(x.clamp(0.0, self.span_length))
    }

    fn arg(&self, x: f64) -> f64 {
        (x - 0.5 * self.span_length) / self.a
    }

    /// Unshifted ordinate `a·cosh((x − L/2)/a)`.
    pub fn raw_ordinate(&self, x: f64) -> Result<f64, PowerlineError> {
        let x = self.check(x)?;
        Ok(self.a * libm::cosh(self.arg(x)))
    }

    /// Ground-referenced wire height at span-local `x`.
    pub fn wire_height(&self, x: f64) -> Result<f64, PowerlineError> {
        let x = self.check(x)?;
        Ok(self.tower_height - self.sag_depth() + self.a * cosh_m1(self.arg(x)))
    }

    /// `dh_wire/dx` at span-local `x`.
    pub fn slope(&self, x: f64) -> Result<f64, PowerlineError> {
        let x = self.check(x)?;
        Ok(libm::sinh(self.arg(x)))
    }

    /// Local radius of curvature `a·cosh²((x − L/2)/a)`.
    pub fn curvature_radius(&self, x: f64) -> Result<f64, PowerlineError> {
        let x = self.check(x)?;
        let c = libm::cosh(self.arg(x));
        Ok(self.a * c * c)
    }

    /// Local spatial frequency `x / y(x)`, rad/m, taken literally: no 2π
    /// factor. Zero at `x = 0`.
    pub fn local_spatial_frequency(&self, x: f64) -> Result<f64, PowerlineError> {
        let x = self.check(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(x / (self.a * libm::cosh(self.arg(x))))
    }
}

/// Catenary parameter `a` whose sag depth is `sag_fraction · L`.
///
/// Starts from the parabolic estimate `a₀ = L²/(8·sag)` and refines with
/// Newton's method to `|residual| < 1e−9·L`.
pub fn solve_catenary_from_sag(span_length: f64, sag_fraction: f64) -> Result<f64, PowerlineError> {
    if !(span_length > 0.0 && span_length.is_finite()) {
        return Err(PowerlineError::InvalidSpan("span length must be positive"));
    }
    if !(sag_fraction > 0.0 && sag_fraction < 0.5) {
        return Err(PowerlineError::InvalidSag(sag_fraction));
    }
    let target = sag_fraction * span_length;
    let mut a = span_length * span_length / (8.0 * target);
    const MAX_ITER: usize = 100;
    for _ in 0..MAX_ITER {
        let u = span_length / (2.0 * a);
        let f = a * cosh_m1(u) - target;
        if f.abs() < 1e-12 * span_length {
            return Ok(a);
        }
        let df = cosh_m1(u) - u * libm::sinh(u);
        let mut next = a - f / df;
        if !(next > 0.0) || !next.is_finite() {
            next = 0.5 * a;
        }
        if (next - a).abs() <= 1e-15 * a {
            a = next;
            break;
        }
        a = next;
    }
    let residual = a * cosh_m1(span_length / (2.0 * a)) - target;
    if residual.abs() < 1e-9 * span_length {
        Ok(a)
    } else {
        Err(PowerlineError::SolverFailed(MAX_ITER))
    }
}

/// Field of a long straight conductor, `B = μ0·I/(2πR)`, tesla.
pub fn wire_magnetic_field(current: f64, distance: f64) -> Result<f64, PowerlineError> {
    if !(distance > 0.0) {
        return Err(PowerlineError::NonPositiveDistance(distance));
    }
    if current < 0.0 {
        return Err(PowerlineError::NegativeCurrent(current));
    }
    Ok(MU_0 * current / (2.0 * core::f64::consts::PI * distance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VoltageClass {
    Lv,
    Mv,
    Hv,
    Ehv,
    Uhv,
}

impl VoltageClass {
    pub const ALL: [VoltageClass; 5] =
        [VoltageClass::Lv, VoltageClass::Mv, VoltageClass::Hv, VoltageClass::Ehv, VoltageClass::Uhv];

    pub fn label(self) -> &'static str {
        match self {
            VoltageClass::Lv => "LV",
            VoltageClass::Mv => "MV",
            VoltageClass::Hv => "HV",
            VoltageClass::Ehv => "EHV",
            VoltageClass::Uhv => "UHV",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VoltageClass::Lv => "Low voltage",
            VoltageClass::Mv => "Medium voltage",
            VoltageClass::Hv => "High voltage",
            VoltageClass::Ehv => "Extra high voltage",
            VoltageClass::Uhv => "Ultra high voltage",
        }
    }
}

impl fmt::Display for VoltageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for VoltageClass {
    type Err = PowerlineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        VoltageClass::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(t))
            .ok_or_else(|| PowerlineError::UnknownClass(t.into()))
    }
}

/// Closed range with an optional open upper end (`800+`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: Option<f64>,
}

impl Range {
    const fn closed(min: f64, max: f64) -> Self {
        Self { min, max: Some(max) }
    }

    const fn open(min: f64) -> Self {
        Self { min, max: None }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && self.max.is_none_or(|m| v <= m)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(m) => write!(f, "{}-{}", self.min, m),
            None => write!(f, "{}+", self.min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerlineClass {
    pub label: VoltageClass,
    pub voltage_kv: Range,
    pub height_m: Range,
    pub spacing_m: Range,
}

/// Pylon geometry by voltage class.
pub const POWERLINE_CLASSES: [PowerlineClass; 5] = [
    PowerlineClass {
        label: VoltageClass::Lv,
        voltage_kv: Range::closed(0.0, 1.0),
        height_m: Range::closed(10.0, 15.0),
        spacing_m: Range::closed(30.0, 50.0),
    },
    PowerlineClass {
        label: VoltageClass::Mv,
        voltage_kv: Range::closed(1.0, 69.0),
        height_m: Range::closed(15.0, 30.0),
        spacing_m: Range::closed(50.0, 150.0),
    },
    PowerlineClass {
        label: VoltageClass::Hv,
        voltage_kv: Range::closed(69.0, 230.0),
        height_m: Range::closed(30.0, 50.0),
        spacing_m: Range::closed(150.0, 400.0),
    },
    PowerlineClass {
        label: VoltageClass::Ehv,
        voltage_kv: Range::closed(230.0, 500.0),
        height_m: Range::closed(50.0, 80.0),
        spacing_m: Range::closed(300.0, 500.0),
    },
    PowerlineClass {
        label: VoltageClass::Uhv,
        voltage_kv: Range::open(800.0),
        height_m: Range::open(80.0),
        spacing_m: Range::open(500.0),
    },
];

pub fn class_lookup(label: &str) -> Result<PowerlineClass, PowerlineError> {
    let c: VoltageClass = label.parse()?;
    Ok(class_of(c))
}

pub fn class_of(c: VoltageClass) -> PowerlineClass {
    POWERLINE_CLASSES[c as usize]
}

/// First class (lowest voltage) whose pylon spacing range contains `spacing`.
pub fn class_for_spacing(spacing: f64) -> Option<PowerlineClass> {
    POWERLINE_CLASSES.iter().copied().find(|c| c.spacing_m.contains(spacing))
}

/// Consecutive spans sharing towers. `tower_positions[i]` is the upstream
/// tower of span `i`; the last entry is the final tower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerlineProfile {
    spans: Vec<CatenarySpec>,
    tower_positions: Vec<f64>,
}

impl PowerlineProfile {
    pub fn new(spans: Vec<CatenarySpec>) -> Result<Self, PowerlineError> {
        if spans.is_empty() {
            return Err(PowerlineError::EmptyProfile);
        }
        for (i, w) in spans.windows(2).enumerate() {
            let (l, r) = (w[0].tower_height, w[1].tower_height);
            if (l - r).abs() > 1e-9 {
                return Err(PowerlineError::TowerMismatch { index: i, next: i + 1, left: l, right: r });
            }
        }
        let mut tower_positions = Vec::with_capacity(spans.len() + 1);
        let mut x = 0.0;
        tower_positions.push(x);
        for s in &spans {
            x += s.span_length;
            tower_positions.push(x);
        }
        Ok(Self { spans, tower_positions })
    }

    /// `count` copies of the same span.
    pub fn uniform(span: CatenarySpec, count: usize) -> Result<Self, PowerlineError> {
        Self::new(alloc::vec![span; count])
    }

    pub fn spans(&self) -> &[CatenarySpec] {
        &self.spans
    }

    pub fn tower_positions(&self) -> &[f64] {
        &self.tower_positions
    }

    pub fn total_length(&self) -> f64 {
        *self.tower_positions.last().unwrap_or(&0.0)
    }

    /// Span index and span-local position for a global along-track position.
    /// A position exactly on an interior tower belongs to the downstream span.
    pub fn locate(&self, x: f64) -> Result<(usize, f64), PowerlineError> {
        let total = self.total_length();
        if x.is_nan() || x < -X_SLACK || x > total + X_SLACK {
            return Err(PowerlineError::OutOfProfile { x, length: total });
        }
        let x = x.clamp(0.0, total);
        let idx = match self.tower_positions.binary_search_by(|t| t.total_cmp(&x)) {
            Ok(i) => i.min(self.spans.len() - 1),
            Err(i) => i - 1,
        };
        Ok((idx, x - self.tower_positions[idx]))
    }

    pub fn wire_height(&self, x: f64) -> Result<f64, PowerlineError> {
        let (i, local) = self.locate(x)?;
        self.spans[i].wire_height(local)
    }
}
