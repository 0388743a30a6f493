use serde::{Deserialize, Serialize};

use super::AeroError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coefficients {
    pub cl: f64,
    pub cd: f64,
    pub cm: f64,
}

/// Lift, drag and moment coefficients as expansions in angle of attack,
/// relative speed change and the morph parameter μ:
///
/// ```text
/// C_L = C_L0 + C_Lα·α + C_LV·ΔV/V + C_Lμ·μ
/// C_D = C_D0 + C_Dα·α + C_Dα²·α² + C_DV·ΔV/V + C_Dμ·μ
/// C_m = C_m0 + C_mα·α + C_mV·ΔV/V + C_mμ·μ
/// ```
///
/// The `*_alpha_mu` and `*_v_mu` fields let the α and speed sensitivities
/// themselves move with μ (`C_Lα → C_Lα + C_Lαμ·μ`). Every coefficient stays
/// affine in μ for fixed α and ΔV/V. `cm_q`/`cm_q_mu` carry pitch damping,
/// which the quasi-steady expansion above has no slot for.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeroCoefficients {
    pub cl0: f64,
    pub cl_alpha: f64,
    pub cl_v: f64,
    pub cl_mu: f64,
    pub cd0: f64,
    pub cd_alpha: f64,
    pub cd_alpha2: f64,
    pub cd_v: f64,
    pub cd_mu: f64,
    pub cm0: f64,
    pub cm_alpha: f64,
    pub cm_v: f64,
    pub cm_mu: f64,
    pub cl_alpha_mu: f64,
    pub cd_alpha_mu: f64,
    pub cm_alpha_mu: f64,
    pub cl_v_mu: f64,
    pub cd_v_mu: f64,
    pub cm_v_mu: f64,
    pub cm_q: f64,
    pub cm_q_mu: f64,
}

/// Operating envelope for coefficient evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// rad
    pub max_alpha: f64,
    pub max_mu: f64,
}

impl Default for Envelope {
    fn default() -> Self {
        Self { max_alpha: 15f64.to_radians(), max_mu: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeViolation {
    Alpha { alpha: f64, limit: f64 },
    Mu { mu: f64, limit: f64 },
}

/// Coefficients plus a flag when the inputs left the envelope. The values are
/// still returned so a simulator can count saturation instead of stopping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub coefficients: Coefficients,
    pub warning: Option<EnvelopeViolation>,
}

impl AeroCoefficients {
    pub fn eval(&self, alpha: f64, dv_over_v: f64, mu: f64) -> Coefficients {
        let cl = self.cl0
            + (self.cl_alpha + self.cl_alpha_mu * mu) * alpha
            + (self.cl_v + self.cl_v_mu * mu) * dv_over_v
            + self.cl_mu * mu;
        let cd = self.cd0
            + (self.cd_alpha + self.cd_alpha_mu * mu) * alpha
            + self.cd_alpha2 * alpha * alpha
            + (self.cd_v + self.cd_v_mu * mu) * dv_over_v
            + self.cd_mu * mu;
        let cm = self.cm0
            + (self.cm_alpha + self.cm_alpha_mu * mu) * alpha
            + (self.cm_v + self.cm_v_mu * mu) * dv_over_v
            + self.cm_mu * mu;
        Coefficients { cl, cd, cm }
    }

    pub fn eval_checked(&self, alpha: f64, dv_over_v: f64, mu: f64, envelope: &Envelope) -> Evaluation {
        let warning = if alpha.abs() > envelope.max_alpha {
            Some(EnvelopeViolation::Alpha { alpha, limit: envelope.max_alpha })
        } else if mu.abs() > envelope.max_mu {
            Some(EnvelopeViolation::Mu { mu, limit: envelope.max_mu })
        } else {
            None
        };
        Evaluation { coefficients: self.eval(alpha, dv_over_v, mu), warning }
    }

    pub fn pitch_damping(&self, mu: f64) -> f64 {
        self.cm_q + self.cm_q_mu * mu
    }
}

/// Anything that can produce coefficients at `(α, ΔV/V, σ)`.
pub trait CoefficientModel {
    fn coefficients(&self, alpha: f64, dv_over_v: f64, sigma: f64) -> Result<Coefficients, AeroError>;

    /// `C_mq` at morph `sigma`, per unit `q·c/(2V)`.
    fn pitch_damping(&self, sigma: f64) -> Result<f64, AeroError>;

    /// Natural σ differencing step at `sigma`, if the model has one (a table
    /// grid interval).
    fn sigma_step(&self, _sigma: f64) -> Option<f64> {
        None
    }
}

impl CoefficientModel for AeroCoefficients {
    fn coefficients(&self, alpha: f64, dv_over_v: f64, sigma: f64) -> Result<Coefficients, AeroError> {
        Ok(self.eval(alpha, dv_over_v, sigma))
    }

    fn pitch_damping(&self, sigma: f64) -> Result<f64, AeroError> {
        Ok(AeroCoefficients::pitch_damping(self, sigma))
    }
}

impl<M: CoefficientModel + ?Sized> CoefficientModel for &M {
    fn coefficients(&self, alpha: f64, dv_over_v: f64, sigma: f64) -> Result<Coefficients, AeroError> {
        (**self).coefficients(alpha, dv_over_v, sigma)
    }

    fn pitch_damping(&self, sigma: f64) -> Result<f64, AeroError> {
        (**self).pitch_damping(sigma)
    }

    fn sigma_step(&self, sigma: f64) -> Option<f64> {
        (**self).sigma_step(sigma)
    }
}

/// A model re-centred on a morphed shape: `σ' = 0` here is `σ = offset`
/// in the inner model.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedModel<M> {
    pub inner: M,
    pub offset: f64,
}

impl<M: CoefficientModel> CoefficientModel for ShiftedModel<M> {
    fn coefficients(&self, alpha: f64, dv_over_v: f64, sigma: f64) -> Result<Coefficients, AeroError> {
        self.inner.coefficients(alpha, dv_over_v, sigma + self.offset)
    }

    fn pitch_damping(&self, sigma: f64) -> Result<f64, AeroError> {
        self.inner.pitch_damping(sigma + self.offset)
    }

    fn sigma_step(&self, sigma: f64) -> Option<f64> {
        self.inner.sigma_step(sigma + self.offset)
    }
}

/// Rigid airframe and trim point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftGeometry {
    /// b, m
    pub wingspan: f64,
    /// c, m
    pub chord: f64,
    /// S, m²
    pub wing_area: f64,
    /// kg
    pub mass: f64,
    /// I_yy, kg·m²
    pub pitch_inertia: f64,
    /// u0, m/s
    pub trim_speed: f64,
    /// θ0, rad
    pub trim_pitch: f64,
    /// α0, rad
    pub trim_alpha: f64,
    /// kg/m³
    pub air_density: f64,
}

impl AircraftGeometry {
    /// Rectangular wing (`S = b·c`) trimmed level (`θ0 = 0`) with `α0 = 0`
    /// until a trim solve fills it in.
    pub fn rectangular(
        wingspan: f64,
        chord: f64,
        mass: f64,
        pitch_inertia: f64,
        trim_speed: f64,
        air_density: f64,
    ) -> Self {
        Self {
            wingspan,
            chord,
            wing_area: wingspan * chord,
            mass,
            pitch_inertia,
            trim_speed,
            trim_pitch: 0.0,
            trim_alpha: 0.0,
            air_density,
        }
    }

    pub fn validate(&self) -> Result<(), AeroError> {
        let positive = [
            (self.wingspan, "wingspan must be positive"),
            (self.chord, "chord must be positive"),
            (self.wing_area, "wing area must be positive"),
            (self.mass, "mass must be positive"),
            (self.pitch_inertia, "pitch inertia must be positive"),
            (self.trim_speed, "trim speed must be positive"),
            (self.air_density, "air density must be positive"),
        ];
        for (v, msg) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AeroError::InvalidGeometry(msg));
            }
        }
        if !self.trim_pitch.is_finite() || !self.trim_alpha.is_finite() {
            return Err(AeroError::InvalidGeometry("trim angles must be finite"));
        }
        Ok(())
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.wingspan * self.wingspan / self.wing_area
    }

    pub fn dynamic_pressure(&self, speed: f64) -> f64 {
        0.5 * self.air_density * speed * speed
    }

    pub fn with_trim_alpha(mut self, alpha0: f64) -> Self {
        self.trim_alpha = alpha0;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forces {
    /// N
    pub lift: f64,
    /// N
    pub drag: f64,
    /// N·m
    pub moment: f64,
}

/// `L = ½ρV²S·C_L`, `D = ½ρV²S·C_D`, `M_A = ½ρV²S·c·C_m`.
pub fn dimensional_forces(geom: &AircraftGeometry, cl: f64, cd: f64, cm: f64, speed: f64) -> Forces {
    let qs = geom.dynamic_pressure(speed) * geom.wing_area;
    Forces { lift: qs * cl, drag: qs * cd, moment: qs * geom.chord * cm }
}
