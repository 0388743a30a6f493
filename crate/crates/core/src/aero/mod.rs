//! Shape-adaptive aerodynamics: coefficient models, polar tables, dimensional
//! stability derivatives and the `A`/`B_σ` matrices of the morphing plant
//! `ẋ = [A + B_σ·σ(t)]·x`.

mod coefficients;
mod derivatives;
mod polar;
mod span_morph;
mod synthetic;

pub use coefficients::{
    dimensional_forces, AeroCoefficients, AircraftGeometry, CoefficientModel, Coefficients, Envelope,
    EnvelopeViolation, Evaluation, Forces, ShiftedModel,
};
pub use derivatives::{
    derive_stability_matrices, linearize, resolved_derivatives, trim_aircraft, AltitudeRow, DerivativeOptions,
    Linearization, Plant, SigmaDifferencing, StabilityDerivatives, TrimState,
};
pub use polar::{PolarError, PolarRow, PolarTable, SpeedSlopes, TableModel};
pub use span_morph::{span_morph_moments, BodyRates, Inertias, SpanMorph};
pub use synthetic::{
    synthetic_coefficient_model, MorphMode, MorphSlopes, SyntheticAirfoil, SyntheticCalibration, SyntheticModel,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AeroError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("point (σ = {sigma}, α = {alpha_deg}°) lies outside the coefficient table")]
    OutsideTable { sigma: f64, alpha_deg: f64 },
    #[error("trim solve failed: {0}")]
    TrimFailed(&'static str),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("invalid calibration: {0}")]
    InvalidCalibration(&'static str),
    #[error("invalid plant: {0}")]
    InvalidPlant(&'static str),
    #[error("invalid airfoil designation `{0}`")]
    InvalidAirfoil(alloc::string::String),
    #[error(transparent)]
    Polar(#[from] PolarError),
}

#[cfg(test)]
pub(crate) use synthetic::tests as tests_support;
