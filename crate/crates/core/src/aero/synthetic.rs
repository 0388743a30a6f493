//! Analytic stand-in for precomputed airfoil polars: thin-airfoil camber
//! aerodynamics, a finite-wing lift slope and a parabolic drag polar, with
//! morph sensitivities either calibrated (thickness) or derived (camber).

use alloc::string::String;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::coefficients::{AeroCoefficients, AircraftGeometry, CoefficientModel, Coefficients};
use super::derivatives::trim_aircraft;
use super::AeroError;

/// NACA 4-digit section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAirfoil {
    /// max camber, fraction of chord
    pub camber: f64,
    /// camber position, fraction of chord
    pub camber_position: f64,
    /// thickness, fraction of chord
    pub thickness: f64,
}

impl SyntheticAirfoil {
    /// Parses `"2412"` or `"NACA2412"`.
    pub fn naca(designation: &str) -> Result<Self, AeroError> {
        let bad = || AeroError::InvalidAirfoil(String::from(designation));
        let d = designation.trim();
        let d = d.strip_prefix("NACA").or_else(|| d.strip_prefix("naca")).unwrap_or(d).trim();
        if d.len() != 4 || !d.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digit = |i: usize| f64::from(d.as_bytes()[i] - b'0');
        let camber = digit(0) / 100.0;
        let camber_position = digit(1) / 10.0;
        let thickness = (digit(2) * 10.0 + digit(3)) / 100.0;
        if thickness == 0.0 || (camber > 0.0 && camber_position == 0.0) {
            return Err(bad());
        }
        Ok(Self { camber, camber_position, thickness })
    }

    fn camber_slope(&self, x: f64) -> f64 {
        let (m, p) = (self.camber, self.camber_position);
        if m == 0.0 {
            0.0
        } else if x < p {
            2.0 * m / (p * p) * (p - x)
        } else {
            2.0 * m / ((1.0 - p) * (1.0 - p)) * (p - x)
        }
    }

    /// `∫₀^π dz/dx(θ)·w(θ) dθ` with `x = (1 − cosθ)/2`, composite Simpson
    /// split at the camber-line kink.
    fn camber_integral(&self, w: impl Fn(f64) -> f64) -> f64 {
        let f = |t: f64| self.camber_slope(0.5 * (1.0 - libm::cos(t))) * w(t);
        let tp = libm::acos(1.0 - 2.0 * self.camber_position);
        simpson(&f, 0.0, tp, 400) + simpson(&f, tp, PI, 400)
    }

    /// Zero-lift angle, rad.
    pub fn zero_lift_angle(&self) -> f64 {
        -self.camber_integral(|t| libm::cos(t) - 1.0) / PI
    }

    /// Thin-airfoil Fourier coefficient `A_n`, n ≥ 1.
    pub fn fourier(&self, n: u32) -> f64 {
        2.0 / PI * self.camber_integral(|t| libm::cos(n as f64 * t))
    }

    /// Quarter-chord pitching moment coefficient.
    pub fn cm_quarter_chord(&self) -> f64 {
        PI / 4.0 * (self.fourier(2) - self.fourier(1))
    }

    /// Section lift slope per rad with the usual thickness correction.
    pub fn section_lift_slope(&self) -> f64 {
        2.0 * PI * (1.0 + 0.77 * self.thickness)
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Finite-wing lift slope from a section slope (Helmbold).
pub fn helmbold(a0: f64, aspect_ratio: f64) -> f64 {
    let r = a0 / (PI * aspect_ratio);
    a0 / (libm::sqrt(1.0 + r * r) + r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphMode {
    /// σ is a change in thickness-to-chord ratio.
    #[default]
    Thickness,
    /// σ scales camber: camber → camber·(1 + σ).
    Camber,
}

/// Morph sensitivities evaluated at the trim angle of attack.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorphSlopes {
    pub cl_mu: f64,
    pub cd_mu: f64,
    pub cm_mu: f64,
    pub cl_alpha_mu: f64,
    pub cd_alpha_mu: f64,
    pub cm_alpha_mu: f64,
    pub cl_v_mu: f64,
    pub cd_v_mu: f64,
    pub cm_v_mu: f64,
    pub cm_q_mu: f64,
}

/// Airframe-level constants the section model cannot supply, plus the
/// thickness-mode morph slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCalibration {
    pub skin_friction: f64,
    /// wetted area / reference area
    pub wetted_ratio: f64,
    pub oswald_efficiency: f64,
    pub cl_v: f64,
    pub cd_v: f64,
    pub cm_v: f64,
    pub cm_alpha: f64,
    pub cm_q: f64,
    pub thickness_slopes: MorphSlopes,
    /// κ: morph contributions scale with `σ + κσ²/2`.
    pub stiffening: f64,
}

impl SyntheticCalibration {
    pub fn validate(&self) -> Result<(), AeroError> {
        if !(self.skin_friction > 0.0 && self.wetted_ratio > 0.0) {
            return Err(AeroError::InvalidCalibration("skin friction and wetted ratio must be positive"));
        }
        if !(self.oswald_efficiency > 0.0 && self.oswald_efficiency <= 1.0) {
            return Err(AeroError::InvalidCalibration("Oswald efficiency must be in (0, 1]"));
        }
        if !self.stiffening.is_finite() || self.stiffening < 0.0 {
            return Err(AeroError::InvalidCalibration("stiffening must be non-negative"));
        }
        Ok(())
    }
}

/// Coefficient model whose morph input is the shape `s(σ) = σ + κσ²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub coefficients: AeroCoefficients,
    pub mode: MorphMode,
    pub stiffening: f64,
}

impl SyntheticModel {
    pub fn shape(&self, sigma: f64) -> f64 {
        sigma + 0.5 * self.stiffening * sigma * sigma
    }
}

impl CoefficientModel for SyntheticModel {
    fn coefficients(&self, alpha: f64, dv_over_v: f64, sigma: f64) -> Result<Coefficients, AeroError> {
        Ok(self.coefficients.eval(alpha, dv_over_v, self.shape(sigma)))
    }

    fn pitch_damping(&self, sigma: f64) -> Result<f64, AeroError> {
        Ok(self.coefficients.pitch_damping(self.shape(sigma)))
    }
}

/// Builds the analytic model for `airfoil` on `geom`'s wing.
///
/// Baselines: `C_L0 = −a·α_L0` with `a` the Helmbold slope of the
/// thickness-corrected section slope; `C_D = C_Dp + k·C_L²` expanded in α
/// with `k = 1/(πeAR)` and `C_Dp = C_f·(1 + 2t + 60t⁴)·S_wet/S`;
/// `C_m0 = C_m,c/4`.
///
/// Thickness mode takes the calibrated slopes (quoted at trim α0) and
/// backs out the α = 0 values; camber mode differentiates the baselines with
/// respect to camber scale and uses no stiffening.
pub fn synthetic_coefficient_model(
    airfoil: &SyntheticAirfoil,
    mode: MorphMode,
    calib: &SyntheticCalibration,
    geom: &AircraftGeometry,
) -> Result<SyntheticModel, AeroError> {
    calib.validate()?;
    geom.validate()?;
    let t = airfoil.thickness;
    let a = helmbold(airfoil.section_lift_slope(), geom.aspect_ratio());
    let k = 1.0 / (PI * calib.oswald_efficiency * geom.aspect_ratio());
    let cl0 = -a * airfoil.zero_lift_angle();
    let cdp = calib.skin_friction * (1.0 + 2.0 * t + 60.0 * t * t * t * t) * calib.wetted_ratio;
    let mut c = AeroCoefficients {
        cl0,
        cl_alpha: a,
        cl_v: calib.cl_v,
        cd0: cdp + k * cl0 * cl0,
        cd_alpha: 2.0 * k * cl0 * a,
        cd_alpha2: k * a * a,
        cd_v: calib.cd_v,
        cm0: airfoil.cm_quarter_chord(),
        cm_alpha: calib.cm_alpha,
        cm_v: calib.cm_v,
        cm_q: calib.cm_q,
        ..AeroCoefficients::default()
    };
    match mode {
        MorphMode::Thickness => {
            let trim = trim_aircraft(&c, geom)?;
            let s = &calib.thickness_slopes;
            let a0 = trim.alpha;
            c.cl_alpha_mu = s.cl_alpha_mu;
            c.cd_alpha_mu = s.cd_alpha_mu;
            c.cm_alpha_mu = s.cm_alpha_mu;
            c.cl_mu = s.cl_mu - s.cl_alpha_mu * a0;
            c.cd_mu = s.cd_mu - s.cd_alpha_mu * a0;
            c.cm_mu = s.cm_mu - s.cm_alpha_mu * a0;
            c.cl_v_mu = s.cl_v_mu;
            c.cd_v_mu = s.cd_v_mu;
            c.cm_v_mu = s.cm_v_mu;
            c.cm_q_mu = s.cm_q_mu;
            Ok(SyntheticModel { coefficients: c, mode, stiffening: calib.stiffening })
        }
        MorphMode::Camber => {
            c.cl_mu = cl0;
            c.cm_mu = c.cm0;
            c.cd_mu = 2.0 * k * cl0 * cl0;
            c.cd_alpha_mu = 2.0 * k * cl0 * a;
            Ok(SyntheticModel { coefficients: c, mode, stiffening: 0.0 })
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::aero::{derive_stability_matrices, DerivativeOptions};

    /// The reference calibration as shipped in the bundled config.
    pub(crate) fn calibration() -> SyntheticCalibration {
        SyntheticCalibration {
            skin_friction: 0.0067,
            wetted_ratio: 2.04,
            oswald_efficiency: 0.8,
            cl_v: 0.4133,
            cd_v: 0.0,
            cm_v: 0.2334,
            cm_alpha: -0.5078,
            cm_q: -22.51,
            thickness_slopes: MorphSlopes {
                cl_mu: 1.0909,
                cd_mu: 0.0915,
                cm_mu: 0.0,
                cl_alpha_mu: 8.359,
                cd_alpha_mu: 2.246,
                cm_alpha_mu: 8.263,
                cl_v_mu: 0.0,
                cd_v_mu: 0.0,
                cm_v_mu: 2.199,
                cm_q_mu: -109.5,
            },
            stiffening: 5.0,
        }
    }

    pub(crate) fn reference_geometry() -> AircraftGeometry {
        AircraftGeometry::rectangular(1.4, 0.254, 3.0, 0.12, 25.0, 1.225)
    }

    /// Closed-form zero-lift angle of the two-parabola camber line.
    fn zero_lift_oracle(af: &SyntheticAirfoil) -> f64 {
        let (m, p) = (af.camber, af.camber_position);
        let f = |t: f64| (p - 0.5) * (libm::sin(t) - t) + 0.25 * (t + libm::sin(t) * libm::cos(t)) - 0.5 * libm::sin(t);
        let tp = libm::acos(1.0 - 2.0 * p);
        let fore = 2.0 * m / (p * p) * f(tp);
        let aft = 2.0 * m / ((1.0 - p) * (1.0 - p)) * (f(PI) - f(tp));
        -(fore + aft) / PI
    }

    #[test]
    fn naca_parsing() {
        let a = SyntheticAirfoil::naca("NACA2412").unwrap();
        assert_eq!((a.camber, a.camber_position, a.thickness), (0.02, 0.4, 0.12));
        assert!(SyntheticAirfoil::naca("24x2").is_err());
        assert!(SyntheticAirfoil::naca("2400").is_err());
        assert_eq!(SyntheticAirfoil::naca("0012").unwrap().zero_lift_angle(), 0.0);
    }

    #[test]
    fn naca2412_zero_lift_angle() {
        let a = SyntheticAirfoil::naca("2412").unwrap();
        let z = a.zero_lift_angle();
        assert!((z - zero_lift_oracle(&a)).abs() < 1e-10, "{z}");
        assert!((z.to_degrees() + 2.077).abs() < 0.01, "{}", z.to_degrees());
        assert!(a.cm_quarter_chord() < 0.0);
    }

    #[test]
    fn sigma_zero_matches_baseline() {
        let m = synthetic_coefficient_model(
            &SyntheticAirfoil::naca("2412").unwrap(),
            MorphMode::Thickness,
            &calibration(),
            &reference_geometry(),
        )
        .unwrap();
        let c = m.coefficients(0.03, 0.0, 0.0).unwrap();
        let base = AeroCoefficients { cl_mu: 0.0, cd_mu: 0.0, cm_mu: 0.0, ..m.coefficients }.eval(0.03, 0.0, 0.0);
        assert_eq!(c, base);
        assert!(m.coefficients.cd_mu + m.coefficients.cd_alpha_mu * 0.03 > 0.0);
    }

    #[test]
    fn calibrated_row_two_within_five_percent() {
        let g = reference_geometry();
        let m = synthetic_coefficient_model(
            &SyntheticAirfoil::naca("2412").unwrap(),
            MorphMode::Thickness,
            &calibration(),
            &g,
        )
        .unwrap();
        let lin = derive_stability_matrices(&m, &g, &DerivativeOptions::default()).unwrap();
        let b = lin.plant.b_sigma;
        assert!((b[1][0] / -3.960 - 1.0).abs() < 0.05, "{:?}", b[1]);
        assert!((b[1][1] / -15.336 - 1.0).abs() < 0.05, "{:?}", b[1]);
        assert_eq!(b[1][2], 0.0);
        assert!((b[0][0] / -0.332 - 1.0).abs() < 0.05, "{:?}", b[0]);
        assert!((b[2][2] / -160.32 - 1.0).abs() < 0.05, "{:?}", b[2]);
        // trim lift coefficient, weight over dynamic pressure times area
        assert!((lin.trim.coefficients.cl - 0.2162).abs() < 1e-3);
    }

    #[test]
    fn camber_mode_slopes_follow_baselines() {
        let g = reference_geometry();
        let m = synthetic_coefficient_model(
            &SyntheticAirfoil::naca("2412").unwrap(),
            MorphMode::Camber,
            &calibration(),
            &g,
        )
        .unwrap();
        let c = m.coefficients;
        assert_eq!(c.cl_mu, c.cl0);
        assert!(c.cd_mu > 0.0);
        assert_eq!(m.stiffening, 0.0);
        // doubling camber doubles the zero-α lift
        let l2 = m.coefficients(0.0, 0.0, 1.0).unwrap().cl;
        assert!((l2 - 2.0 * c.cl0).abs() < 1e-12);
    }
}
