use serde::{Deserialize, Serialize};

use super::coefficients::{AircraftGeometry, CoefficientModel, Coefficients, ShiftedModel};
use super::AeroError;
use crate::math::{is_finite_mat, mat_add_scaled, Mat5, ZERO5};
use crate::GRAVITY;

/// Dimensional longitudinal stability derivatives (per unit state, SI) and
/// their σ-sensitivities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StabilityDerivatives {
    pub x_u: f64,
    pub x_w: f64,
    pub x_q: f64,
    pub z_u: f64,
    pub z_w: f64,
    pub z_q: f64,
    pub m_u: f64,
    pub m_w: f64,
    pub m_q: f64,
    pub x_u_sigma: f64,
    pub x_w_sigma: f64,
    pub z_u_sigma: f64,
    pub z_w_sigma: f64,
    pub m_u_sigma: f64,
    pub m_w_sigma: f64,
    pub m_q_sigma: f64,
}

/// Kinematic row for `ḣ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltitudeRow {
    /// `ḣ = u·sinθ0 − w·cosθ0 + u0·cosθ0·θ`; at θ0 = 0 this is `u0·θ − w`.
    #[default]
    ClimbRate,
    /// `[cosθ0, sinθ0, 0, 0, 0]` as printed for the general state space.
    RangeRate,
}

impl AltitudeRow {
    pub fn row(self, theta0: f64, u0: f64) -> [f64; 5] {
        let (s, c) = (libm::sin(theta0), libm::cos(theta0));
        match self {
            AltitudeRow::ClimbRate => [s, -c, 0.0, u0 * c, 0.0],
            AltitudeRow::RangeRate => [c, s, 0.0, 0.0, 0.0],
        }
    }
}

/// The morphing plant `ẋ = [A + B_σ·σ]·x`, state `(u, w, q, θ, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub a: Mat5,
    pub b_sigma: Mat5,
}

impl Plant {
    /// Validates the fixed structure: θ̇ = q, and no σ-dependence in the
    /// kinematic rows.
    pub fn new(a: Mat5, b_sigma: Mat5) -> Result<Self, AeroError> {
        if !is_finite_mat(&a) || !is_finite_mat(&b_sigma) {
            return Err(AeroError::NonFinite("plant matrix entry"));
        }
        if a[3] != [0.0, 0.0, 1.0, 0.0, 0.0] {
            return Err(AeroError::InvalidPlant("θ row of A must be [0, 0, 1, 0, 0]"));
        }
        if b_sigma[3] != [0.0; 5] || b_sigma[4] != [0.0; 5] {
            return Err(AeroError::InvalidPlant("θ and h rows of B_σ must be zero"));
        }
        if a.iter().any(|r| r[4] != 0.0) {
            return Err(AeroError::InvalidPlant("no state may depend on h"));
        }
        Ok(Self { a, b_sigma })
    }

    /// The reference small-UAV trim plant at u0 = 25 m/s, θ0 = 0.
    pub fn reference(row: AltitudeRow) -> Self {
        let a = [
            [-0.074, -0.122, 0.0, -9.81, 0.0],
            [-1.535, -7.457, 25.0, 0.0, 0.0],
            [2.689, -5.850, -32.945, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0],
            row.row(0.0, 25.0),
        ];
        let b_sigma = [
            [-0.332, -2.096, 0.0, 0.0, 0.0],
            [-3.960, -15.336, 0.0, 0.0, 0.0],
            [25.329, 95.192, -160.32, 0.0, 0.0],
            [0.0; 5],
            [0.0; 5],
        ];
        Self { a, b_sigma }
    }

    pub fn at(&self, sigma: f64) -> Mat5 {
        mat_add_scaled(&self.a, &self.b_sigma, sigma)
    }

    pub fn derivatives(&self) -> StabilityDerivatives {
        let (a, b) = (&self.a, &self.b_sigma);
        StabilityDerivatives {
            x_u: a[0][0],
            x_w: a[0][1],
            x_q: a[0][2],
            z_u: a[1][0],
            z_w: a[1][1],
            z_q: a[1][2],
            m_u: a[2][0],
            m_w: a[2][1],
            m_q: a[2][2],
            x_u_sigma: b[0][0],
            x_w_sigma: b[0][1],
            z_u_sigma: b[1][0],
            z_w_sigma: b[1][1],
            m_u_sigma: b[2][0],
            m_w_sigma: b[2][1],
            m_q_sigma: b[2][2],
        }
    }

    /// The 4-state (u, w, q, θ) block of `A`.
    pub fn longitudinal_block(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row.copy_from_slice(&self.a[i][..4]);
        }
        m
    }
}

/// Assembles `A` and `B_σ` from derivatives at trim pitch `θ0` and speed `u0`.
pub fn linearize(d: &StabilityDerivatives, theta0: f64, u0: f64, row: AltitudeRow) -> Plant {
    let (s, c) = (libm::sin(theta0), libm::cos(theta0));
    let mut a = ZERO5;
    a[0] = [d.x_u, d.x_w, d.x_q, -GRAVITY * c, 0.0];
    a[1] = [d.z_u, d.z_w, d.z_q, -GRAVITY * s, 0.0];
    a[2] = [d.m_u, d.m_w, d.m_q, 0.0, 0.0];
    a[3] = [0.0, 0.0, 1.0, 0.0, 0.0];
    a[4] = row.row(theta0, u0);
    let mut b = ZERO5;
    b[0] = [d.x_u_sigma, d.x_w_sigma, 0.0, 0.0, 0.0];
    b[1] = [d.z_u_sigma, d.z_w_sigma, 0.0, 0.0, 0.0];
    b[2] = [d.m_u_sigma, d.m_w_sigma, d.m_q_sigma, 0.0, 0.0];
    Plant { a, b_sigma: b }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimState {
    /// α0, rad
    pub alpha: f64,
    /// N, along the body x axis
    pub thrust: f64,
    pub coefficients: Coefficients,
    pub iterations: usize,
}

/// Level (or steady climb at `θ0`) trim: Newton on `(α, T)` so that
///
/// ```text
/// q̄S·C_L(α) + T·sinα = m·g·cosθ0
/// T·cosα − q̄S·C_D(α) = m·g·sinθ0
/// ```
pub fn trim_aircraft<M: CoefficientModel>(model: &M, geom: &AircraftGeometry) -> Result<TrimState, AeroError> {
    geom.validate()?;
    let qs = geom.dynamic_pressure(geom.trim_speed) * geom.wing_area;
    let w = geom.mass * GRAVITY;
    let (st, ct) = (libm::sin(geom.trim_pitch), libm::cos(geom.trim_pitch));
    let c0 = model.coefficients(0.0, 0.0, 0.0)?;
    let h = 1e-5;
    let cla0 = (model.coefficients(h, 0.0, 0.0)?.cl - model.coefficients(-h, 0.0, 0.0)?.cl) / (2.0 * h);
    if !(cla0 > 0.0) {
        return Err(AeroError::TrimFailed("lift slope must be positive"));
    }
    let mut alpha = (w * ct / qs - c0.cl) / cla0;
    let mut thrust = qs * c0.cd + w * st;
    let limit = 15f64.to_radians();
    for it in 0..50 {
        let c = model.coefficients(alpha, 0.0, 0.0)?;
        let (sa, ca) = (libm::sin(alpha), libm::cos(alpha));
        let r1 = qs * c.cl + thrust * sa - w * ct;
        let r2 = thrust * ca - qs * c.cd - w * st;
        if !(r1.is_finite() && r2.is_finite()) {
            return Err(AeroError::NonFinite("trim residual"));
        }
        if r1.abs() < 1e-10 * w && r2.abs() < 1e-10 * w {
            if alpha.abs() > limit {
                return Err(AeroError::TrimFailed("trim angle of attack outside ±15°"));
            }
            return Ok(TrimState { alpha, thrust, coefficients: c, iterations: it });
        }
        let cp = model.coefficients(alpha + h, 0.0, 0.0)?;
        let cm = model.coefficients(alpha - h, 0.0, 0.0)?;
        let dcl = (cp.cl - cm.cl) / (2.0 * h);
        let dcd = (cp.cd - cm.cd) / (2.0 * h);
        let j11 = qs * dcl + thrust * ca;
        let j12 = sa;
        let j21 = -thrust * sa - qs * dcd;
        let j22 = ca;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(AeroError::TrimFailed("singular trim Jacobian"));
        }
        alpha -= (r1 * j22 - j12 * r2) / det;
        thrust -= (j11 * r2 - j21 * r1) / det;
        if alpha.abs() > 2.0 * limit {
            return Err(AeroError::TrimFailed("trim angle of attack diverged"));
        }
    }
    Err(AeroError::TrimFailed("no convergence in 50 iterations"))
}

/// How the σ-sensitivities are extracted from a coefficient model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SigmaDifferencing {
    /// `[D(h) − D(−h)]/(2h)`
    Central,
    /// Least-squares slope through `D(k·h)`, `k = −n..=n`.
    LeastSquares { half_width: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerivativeOptions {
    /// rad
    pub alpha_step: f64,
    pub speed_step: f64,
    /// `None` uses the model's own grid step, falling back to 1e−3.
    pub sigma_step: Option<f64>,
    pub sigma_differencing: SigmaDifferencing,
    pub altitude_row: AltitudeRow,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        Self {
            alpha_step: 1e-4,
            speed_step: 1e-3,
            sigma_step: None,
            sigma_differencing: SigmaDifferencing::Central,
            altitude_row: AltitudeRow::ClimbRate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub trim: TrimState,
    pub geometry: AircraftGeometry,
    pub derivatives: StabilityDerivatives,
    pub plant: Plant,
}

/// The nine σ-independent derivatives at morph `sigma`, trim angle fixed.
fn base_derivatives<M: CoefficientModel>(
    model: &M,
    geom: &AircraftGeometry,
    alpha0: f64,
    sigma: f64,
    opts: &DerivativeOptions,
) -> Result<[f64; 9], AeroError> {
    let u0 = geom.trim_speed;
    let qs = geom.dynamic_pressure(u0) * geom.wing_area;
    let k = qs / (geom.mass * u0);
    let km = qs * geom.chord / (geom.pitch_inertia * u0);
    let ha = opts.alpha_step;
    let hv = opts.speed_step;
    let c0 = model.coefficients(alpha0, 0.0, sigma)?;
    let diff = |p: Coefficients, m: Coefficients, h: f64| Coefficients {
        cl: (p.cl - m.cl) / (2.0 * h),
        cd: (p.cd - m.cd) / (2.0 * h),
        cm: (p.cm - m.cm) / (2.0 * h),
    };
    let ca = diff(model.coefficients(alpha0 + ha, 0.0, sigma)?, model.coefficients(alpha0 - ha, 0.0, sigma)?, ha);
    let cv = diff(model.coefficients(alpha0, hv, sigma)?, model.coefficients(alpha0, -hv, sigma)?, hv);
    let cmq = model.pitch_damping(sigma)?;
    let d = [
        -(cv.cd + 2.0 * c0.cd) * k,
        (c0.cl - ca.cd) * k,
        0.0,
        -(cv.cl + 2.0 * c0.cl) * k,
        -(ca.cl + c0.cd) * k,
        u0,
        cv.cm * km,
        ca.cm * km,
        cmq * (geom.chord / (2.0 * u0)) * qs * geom.chord / geom.pitch_inertia,
    ];
    if d.iter().any(|v| !v.is_finite()) {
        return Err(AeroError::NonFinite("stability derivative"));
    }
    Ok(d)
}

fn pack(d: [f64; 9], s: [f64; 9]) -> StabilityDerivatives {
    StabilityDerivatives {
        x_u: d[0],
        x_w: d[1],
        x_q: d[2],
        z_u: d[3],
        z_w: d[4],
        z_q: d[5],
        m_u: d[6],
        m_w: d[7],
        m_q: d[8],
        x_u_sigma: s[0],
        x_w_sigma: s[1],
        z_u_sigma: s[3],
        z_w_sigma: s[4],
        m_u_sigma: s[6],
        m_w_sigma: s[7],
        m_q_sigma: s[8],
    }
}

/// Derivatives of the aircraft reshaped to `sigma` (trim angle of the
/// unmorphed aircraft held), with σ-sensitivities taken about that shape.
pub fn resolved_derivatives<M: CoefficientModel>(
    model: &M,
    geom: &AircraftGeometry,
    trim: &TrimState,
    sigma: f64,
    opts: &DerivativeOptions,
) -> Result<StabilityDerivatives, AeroError> {
    let shifted = ShiftedModel { inner: model, offset: sigma };
    let d0 = base_derivatives(&shifted, geom, trim.alpha, 0.0, opts)?;
    let h = opts.sigma_step.or_else(|| shifted.sigma_step(0.0)).unwrap_or(1e-3);
    if !(h > 0.0) {
        return Err(AeroError::InvalidCalibration("σ differencing step must be positive"));
    }
    let mut slope = [0.0; 9];
    match opts.sigma_differencing {
        SigmaDifferencing::Central => {
            let p = base_derivatives(&shifted, geom, trim.alpha, h, opts)?;
            let m = base_derivatives(&shifted, geom, trim.alpha, -h, opts)?;
            for i in 0..9 {
                slope[i] = (p[i] - m[i]) / (2.0 * h);
            }
        }
        SigmaDifferencing::LeastSquares { half_width } => {
            let n = half_width.max(1) as i64;
            let mut kk = 0.0;
            for k in -n..=n {
                if k == 0 {
                    continue;
                }
                let dk = base_derivatives(&shifted, geom, trim.alpha, k as f64 * h, opts)?;
                for i in 0..9 {
                    slope[i] += k as f64 * (dk[i] - d0[i]);
                }
                kk += (k * k) as f64;
            }
            for s in &mut slope {
                *s /= h * kk;
            }
        }
    }
    Ok(pack(d0, slope))
}

/// Trims the aircraft and builds `A`, `B_σ` at σ = 0.
pub fn derive_stability_matrices<M: CoefficientModel>(
    model: &M,
    geom: &AircraftGeometry,
    opts: &DerivativeOptions,
) -> Result<Linearization, AeroError> {
    let trim = trim_aircraft(model, geom)?;
    let derivatives = resolved_derivatives(model, geom, &trim, 0.0, opts)?;
    let plant = linearize(&derivatives, geom.trim_pitch, geom.trim_speed, opts.altitude_row);
    Ok(Linearization { trim, geometry: geom.with_trim_alpha(trim.alpha), derivatives, plant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::AeroCoefficients;

    fn geom() -> AircraftGeometry {
        AircraftGeometry::rectangular(1.4, 0.254, 3.0, 0.12, 25.0, 1.225)
    }

    fn linear_model() -> AeroCoefficients {
        AeroCoefficients {
            cl0: 0.15,
            cl_alpha: 4.2,
            cl_v: 0.4,
            cl_mu: 1.1,
            cd0: 0.02,
            cd_alpha: 0.05,
            cd_alpha2: 0.8,
            cd_mu: 0.09,
            cm0: -0.03,
            cm_alpha: -0.5,
            cm_v: 0.23,
            cm_mu: 0.4,
            cl_alpha_mu: 8.0,
            cd_alpha_mu: 2.0,
            cm_alpha_mu: 8.0,
            cm_v_mu: 2.0,
            cm_q: -22.5,
            cm_q_mu: -110.0,
            ..Default::default()
        }
    }

    #[test]
    fn reference_plant_rows() {
        let p = Plant::reference(AltitudeRow::ClimbRate);
        assert_eq!(p.a[1], [-1.535, -7.457, 25.0, 0.0, 0.0]);
        assert_eq!(p.b_sigma[2], [25.329, 95.192, -160.32, 0.0, 0.0]);
        assert_eq!(p.b_sigma[3], [0.0; 5]);
        assert_eq!(p.b_sigma[4], [0.0; 5]);
        assert_eq!(p.a[4], [0.0, -1.0, 0.0, 25.0, 0.0]);
        assert_eq!(Plant::reference(AltitudeRow::RangeRate).a[4], [1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(Plant::new(p.a, p.b_sigma).is_ok());
        let d = p.derivatives();
        assert_eq!(linearize(&d, 0.0, 25.0, AltitudeRow::ClimbRate), p);
    }

    #[test]
    fn plant_structure_validated() {
        let p = Plant::reference(AltitudeRow::ClimbRate);
        let mut b = p.b_sigma;
        b[4][1] = 1.0;
        assert!(Plant::new(p.a, b).is_err());
        let mut a = p.a;
        a[3][3] = 0.5;
        assert!(Plant::new(a, p.b_sigma).is_err());
    }

    #[test]
    fn trim_balances_forces() {
        let m = linear_model();
        let g = geom();
        let t = trim_aircraft(&m, &g).unwrap();
        let qs = g.dynamic_pressure(25.0) * g.wing_area;
        let c = m.eval(t.alpha, 0.0, 0.0);
        assert!((qs * c.cl + t.thrust * libm::sin(t.alpha) - 3.0 * GRAVITY).abs() < 1e-8);
        assert!((t.thrust * libm::cos(t.alpha) - qs * c.cd).abs() < 1e-8);
        assert!(t.alpha > 0.0 && t.alpha < 0.05);
    }

    #[test]
    fn planted_sigma_slopes_recovered() {
        let m = linear_model();
        let g = geom();
        let lin = derive_stability_matrices(&m, &g, &DerivativeOptions::default()).unwrap();
        let a0 = lin.trim.alpha;
        let qs = g.dynamic_pressure(25.0) * g.wing_area;
        let k = qs / (3.0 * 25.0);
        let km = qs * g.chord / (g.pitch_inertia * 25.0);
        // independent closed forms for the affine model
        let cl_mu = m.cl_mu + m.cl_alpha_mu * a0;
        let cd_mu = m.cd_mu + m.cd_alpha_mu * a0;
        let expect = [
            (lin.derivatives.x_u_sigma, -(2.0 * cd_mu) * k),
            (lin.derivatives.x_w_sigma, (cl_mu - m.cd_alpha_mu) * k),
            (lin.derivatives.z_u_sigma, -(2.0 * cl_mu) * k),
            (lin.derivatives.z_w_sigma, -(m.cl_alpha_mu + cd_mu) * k),
            (lin.derivatives.m_u_sigma, m.cm_v_mu * km),
            (lin.derivatives.m_w_sigma, m.cm_alpha_mu * km),
            (lin.derivatives.m_q_sigma, m.cm_q_mu * (g.chord / 50.0) * qs * g.chord / g.pitch_inertia),
        ];
        for (got, want) in expect {
            assert!(((got - want) / want).abs() < 1e-6, "{got} vs {want}");
        }
        let p = lin.plant;
        assert_eq!(p.b_sigma[3], [0.0; 5]);
        assert_eq!(p.b_sigma[4], [0.0; 5]);
        assert_eq!(p.a[3], [0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.a[1][2], 25.0);
    }

    #[test]
    fn least_squares_slope_matches_central_on_affine_model() {
        let m = linear_model();
        let g = geom();
        let c = derive_stability_matrices(&m, &g, &DerivativeOptions::default()).unwrap();
        let opts = DerivativeOptions {
            sigma_differencing: SigmaDifferencing::LeastSquares { half_width: 2 },
            ..DerivativeOptions::default()
        };
        let l = derive_stability_matrices(&m, &g, &opts).unwrap();
        assert!((c.derivatives.z_u_sigma - l.derivatives.z_u_sigma).abs() < 1e-9);
        assert!((c.derivatives.m_q_sigma - l.derivatives.m_q_sigma).abs() < 1e-7);
    }

    /// Lift with a cubic σ term so central differences carry O(h²) error.
    struct Cubic;

    impl CoefficientModel for Cubic {
        fn coefficients(&self, alpha: f64, dv: f64, sigma: f64) -> Result<Coefficients, AeroError> {
            Ok(Coefficients {
                cl: 0.2 + 4.5 * alpha + 0.4 * dv + sigma + 30.0 * sigma * sigma * sigma,
                cd: 0.02 + 0.8 * alpha * alpha + 0.1 * sigma,
                cm: -0.5 * alpha,
            })
        }

        fn pitch_damping(&self, _sigma: f64) -> Result<f64, AeroError> {
            Ok(-20.0)
        }
    }

    #[test]
    fn central_difference_is_second_order() {
        let g = geom();
        let trim = trim_aircraft(&Cubic, &g).unwrap();
        let k = g.dynamic_pressure(25.0) * g.wing_area / (3.0 * 25.0);
        let exact = -2.0 * k; // d/dσ of −2·C_L·K at σ = 0
        let err = |h: f64| {
            let o = DerivativeOptions { sigma_step: Some(h), ..DerivativeOptions::default() };
            (resolved_derivatives(&Cubic, &g, &trim, 0.0, &o).unwrap().z_u_sigma - exact).abs()
        };
        let order = libm::log2(err(0.02) / err(0.01));
        assert!(order >= 1.9, "observed order {order}");
    }
}
