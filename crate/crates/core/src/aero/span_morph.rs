use serde::{Deserialize, Serialize};

/// Body-axis angular rates (p, q, r) in rad/s, or their derivatives in rad/s².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyRates {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

/// Principal moments of inertia of the unmorphed airframe, kg·m².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Inertias {
    pub ix: f64,
    pub iy: f64,
    pub iz: f64,
}

/// Symmetric span extension: two sliding masses `m_s` at `y0 + δy` either
/// side of the centreline, moving at `δẏ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpanMorph {
    /// kg
    pub sliding_mass: f64,
    /// m
    pub y0: f64,
    /// m
    pub dy: f64,
    /// m/s
    pub dy_dot: f64,
}

/// Rolling, pitching and yawing moment sums (N·m) for a span-morphing
/// airframe:
///
/// ```text
/// ΣL = ṗ·Ix0 + q·r·(Iz0 − Iy0) + 2·m_s·δẏ·(y0·p + δy·p)
/// ΣM = q̇·Iy0 + r·q·(Ix0 − Iz0)
/// ΣN = ṙ·Iz0 + p·q·(Iy0 − Ix0) + 2·m_s·δẏ·(y0·r + δy·r)
/// ```
pub fn span_morph_moments(rates: BodyRates, accels: BodyRates, inertia: Inertias, morph: SpanMorph) -> (f64, f64, f64) {
    let BodyRates { p, q, r } = rates;
    let k = 2.0 * morph.sliding_mass * morph.dy_dot;
    let l = accels.p * inertia.ix + q * r * (inertia.iz - inertia.iy) + k * (morph.y0 * p + morph.dy * p);
    let m = accels.q * inertia.iy + r * q * (inertia.ix - inertia.iz);
    let n = accels.r * inertia.iz + p * q * (inertia.iy - inertia.ix) + k * (morph.y0 * r + morph.dy * r);
    (l, m, n)
}
