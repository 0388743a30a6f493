use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::coefficients::{CoefficientModel, Coefficients};
use super::AeroError;

/// One node of a polar table as read from a file. `line` is the 1-based
/// source line used in diagnostics (0 when the row did not come from text).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarRow {
    pub sigma: f64,
    pub alpha_deg: f64,
    pub cl: f64,
    pub cd: f64,
    pub cm: f64,
    #[serde(default)]
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolarError {
    #[error("polar table has no rows")]
    Empty,
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("line {line}: duplicate node (σ = {sigma}, α = {alpha_deg}°), first seen on line {first_line}")]
    Duplicate { sigma: f64, alpha_deg: f64, line: usize, first_line: usize },
    #[error("line {line}: {axis} axis not strictly increasing ({value} after {previous})")]
    NonMonotone { axis: &'static str, line: usize, previous: f64, value: f64 },
    #[error("ragged grid: missing node (σ = {sigma}, α = {alpha_deg}°)")]
    MissingCell { sigma: f64, alpha_deg: f64 },
    #[error("grid needs at least two nodes along each axis (got {sigmas} σ × {alphas} α)")]
    TooSmall { sigmas: usize, alphas: usize },
    #[error("σ range [{lo}, {hi}] must contain 0")]
    SigmaRangeExcludesZero { lo: f64, hi: f64 },
}

/// Rectangular `(σ, α)` grid of lift, drag and moment coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarTable {
    pub family: alloc::string::String,
    sigmas: Vec<f64>,
    alphas_deg: Vec<f64>,
    /// σ-major: index `i·n_alpha + j`
    values: Vec<Coefficients>,
}

impl PolarTable {
    /// Validates rows given σ-major (all α for the first σ, then the next σ),
    /// both axes strictly increasing.
    pub fn from_rows(family: &str, rows: &[PolarRow]) -> Result<Self, PolarError> {
        if rows.is_empty() {
            return Err(PolarError::Empty);
        }
        for r in rows {
            if ![r.sigma, r.alpha_deg, r.cl, r.cd, r.cm].iter().all(|v| v.is_finite()) {
                return Err(PolarError::NonFinite { line: r.line });
            }
        }
        for (k, r) in rows.iter().enumerate() {
            if let Some(first) = rows[..k].iter().find(|p| p.sigma == r.sigma && p.alpha_deg == r.alpha_deg) {
                return Err(PolarError::Duplicate {
                    sigma: r.sigma,
                    alpha_deg: r.alpha_deg,
                    line: r.line,
                    first_line: first.line,
                });
            }
        }

        // split into σ blocks
        let mut blocks: Vec<&[PolarRow]> = Vec::new();
        let mut start = 0;
        for k in 1..=rows.len() {
            if k == rows.len() || rows[k].sigma != rows[start].sigma {
                blocks.push(&rows[start..k]);
                if k < rows.len() && rows[k].sigma < rows[start].sigma {
                    return Err(PolarError::NonMonotone {
                        axis: "sigma",
                        line: rows[k].line,
                        previous: rows[start].sigma,
                        value: rows[k].sigma,
                    });
                }
                start = k;
            }
        }
        for b in &blocks {
            for w in b.windows(2) {
                if w[1].alpha_deg <= w[0].alpha_deg {
                    return Err(PolarError::NonMonotone {
                        axis: "alpha",
                        line: w[1].line,
                        previous: w[0].alpha_deg,
                        value: w[1].alpha_deg,
                    });
                }
            }
        }

        let mut alphas: Vec<f64> = Vec::new();
        for r in rows {
            if !alphas.contains(&r.alpha_deg) {
                alphas.push(r.alpha_deg);
            }
        }
        alphas.sort_by(f64::total_cmp);
        let sigmas: Vec<f64> = blocks.iter().map(|b| b[0].sigma).collect();
        for b in &blocks {
            if let Some(a) = alphas.iter().find(|a| !b.iter().any(|r| r.alpha_deg == **a)) {
                return Err(PolarError::MissingCell { sigma: b[0].sigma, alpha_deg: *a });
            }
        }
        if sigmas.len() < 2 || alphas.len() < 2 {
            return Err(PolarError::TooSmall { sigmas: sigmas.len(), alphas: alphas.len() });
        }
        let (lo, hi) = (sigmas[0], sigmas[sigmas.len() - 1]);
        if lo > 0.0 || hi < 0.0 {
            return Err(PolarError::SigmaRangeExcludesZero { lo, hi });
        }
        let values =
            blocks.iter().flat_map(|b| b.iter().map(|r| Coefficients { cl: r.cl, cd: r.cd, cm: r.cm })).collect();
        Ok(Self { family: family.into(), sigmas, alphas_deg: alphas, values })
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn alphas_deg(&self) -> &[f64] {
        &self.alphas_deg
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigmas[0]
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigmas[self.sigmas.len() - 1]
    }

    pub fn node(&self, i: usize, j: usize) -> Coefficients {
        self.values[i * self.alphas_deg.len() + j]
    }

    /// Rows back out in σ-major order.
    pub fn rows(&self) -> Vec<PolarRow> {
        let mut out = Vec::with_capacity(self.values.len());
        for (i, &sigma) in self.sigmas.iter().enumerate() {
            for (j, &alpha_deg) in self.alphas_deg.iter().enumerate() {
                let c = self.node(i, j);
                out.push(PolarRow { sigma, alpha_deg, cl: c.cl, cd: c.cd, cm: c.cm, line: 0 });
            }
        }
        out
    }

    /// Smaller of the two σ intervals adjacent to `sigma` (one grid step).
    pub fn sigma_step_at(&self, sigma: f64) -> f64 {
        let s = &self.sigmas;
        let k = segment(s, sigma).unwrap_or(0);
        let mut h = s[k + 1] - s[k];
        if sigma == s[k] && k > 0 {
            h = h.min(s[k] - s[k - 1]);
        }
        if sigma == s[k + 1] && k + 2 < s.len() {
            h = h.min(s[k + 2] - s[k + 1]);
        }
        h
    }

    /// Bilinear interpolation; exact at nodes.
    pub fn interpolate(&self, sigma: f64, alpha_deg: f64) -> Option<Coefficients> {
        let i = segment(&self.sigmas, sigma)?;
        let j = segment(&self.alphas_deg, alpha_deg)?;
        let ts = (sigma - self.sigmas[i]) / (self.sigmas[i + 1] - self.sigmas[i]);
        let ta = (alpha_deg - self.alphas_deg[j]) / (self.alphas_deg[j + 1] - self.alphas_deg[j]);
        let c00 = self.node(i, j);
        let c01 = self.node(i, j + 1);
        let c10 = self.node(i + 1, j);
        let c11 = self.node(i + 1, j + 1);
        let mix = |a: f64, b: f64, c: f64, d: f64| {
            if ts == 0.0 && ta == 0.0 {
                return a;
            }
            (1.0 - ts) * ((1.0 - ta) * a + ta * b) + ts * ((1.0 - ta) * c + ta * d)
        };
        Some(Coefficients {
            cl: mix(c00.cl, c01.cl, c10.cl, c11.cl),
            cd: mix(c00.cd, c01.cd, c10.cd, c11.cd),
            cm: mix(c00.cm, c01.cm, c10.cm, c11.cm),
        })
    }
}

/// Index `k` with `axis[k] ≤ v ≤ axis[k+1]`, preferring the segment that
/// starts at `v` when `v` is a node.
fn segment(axis: &[f64], v: f64) -> Option<usize> {
    let n = axis.len();
    if !(v >= axis[0] && v <= axis[n - 1]) {
        return None;
    }
    let k = axis.partition_point(|&a| a <= v);
    Some(k.saturating_sub(1).min(n - 2))
}

/// Speed and pitch-rate sensitivities a `(σ, α)` table cannot carry.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedSlopes {
    pub cl_v: f64,
    pub cd_v: f64,
    pub cm_v: f64,
    pub cm_q: f64,
    pub cm_q_mu: f64,
}

/// A polar table used as a coefficient model; `α` in radians at the trait
/// boundary, degrees in the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    pub table: PolarTable,
    pub speed: SpeedSlopes,
}

impl CoefficientModel for TableModel {
    fn coefficients(&self, alpha: f64, dv_over_v: f64, sigma: f64) -> Result<Coefficients, AeroError> {
        let alpha_deg = alpha.to_degrees();
        let c = self.table.interpolate(sigma, alpha_deg).ok_or(AeroError::OutsideTable { sigma, alpha_deg })?;
        Ok(Coefficients {
            cl: c.cl + self.speed.cl_v * dv_over_v,
            cd: c.cd + self.speed.cd_v * dv_over_v,
            cm: c.cm + self.speed.cm_v * dv_over_v,
        })
    }

    fn pitch_damping(&self, sigma: f64) -> Result<f64, AeroError> {
        Ok(self.speed.cm_q + self.speed.cm_q_mu * sigma)
    }

    fn sigma_step(&self, sigma: f64) -> Option<f64> {
        Some(self.table.sigma_step_at(sigma))
    }
}
