//! Batch exploration over wingspan × chord × pylon span × sag: the ΔC_L,m
//! metric, the seeded per-trial pipeline, the least-squares trend search for
//! σ̂ and per-pylon-span trend tables.
//!
//! The per-trial pipeline is a pure function of (grid, config, cell index,
//! trial index), so cells may be run on any worker pool and sorted afterwards.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{
    derive_stability_matrices, synthetic_coefficient_model, AeroError, AircraftGeometry, CoefficientModel,
    DerivativeOptions, Linearization, MorphMode, Plant, SyntheticAirfoil, SyntheticCalibration, SyntheticModel,
};
use crate::controller::{
    build_schedule, ControllerError, FrequencyConvention, MatchingContext, MorphCommand, MorphSchedule,
    ScheduleOptions, SpanSchedule,
};
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::powerline::{class_for_spacing, CatenarySpec, PowerlineError, PowerlineProfile};
use crate::sim::{clearance_metrics, phugoid_wavelength, SimConfig, SimError, Simulation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(&'static str),
    #[error("empty trace")]
    EmptyTrace,
    #[error("σ and α traces differ in length ({sigma} vs {alpha})")]
    MismatchedTraces { sigma: usize, alpha: usize },
    #[error("no powerline class covers a {0} m pylon span")]
    NoTowerClass(f64),
    #[error("trend-search horizon must be positive, got {0} m")]
    InvalidHorizon(f64),
    #[error("trend target needs at least two samples with increasing x")]
    InvalidTarget,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Aero(#[from] AeroError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Powerline(#[from] PowerlineError),
}

/// Result of the ΔC_L,m evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaCl {
    pub value: f64,
    /// sample index of the σ peak (earliest on ties)
    pub index: usize,
    /// σ̄ = σ(t_m)
    pub sigma_bar: f64,
}

/// `C_L(α(t_m), σ̄) − C_L(α0, 0)` with `t_m` the earliest sample of maximum σ.
pub fn delta_cl_max<M: CoefficientModel>(
    sigma: &[f64],
    alpha: &[f64],
    model: &M,
    alpha0: f64,
) -> Result<DeltaCl, SweepError> {
    if sigma.is_empty() {
        return Err(SweepError::EmptyTrace);
    }
    if sigma.len() != alpha.len() {
        return Err(SweepError::MismatchedTraces { sigma: sigma.len(), alpha: alpha.len() });
    }
    let mut index = 0;
    for (i, &s) in sigma.iter().enumerate() {
        if s > sigma[index] {
            index = i;
        }
    }
    let sigma_bar = sigma[index];
    let morphed = model.coefficients(alpha[index], 0.0, sigma_bar)?.cl;
    let base = model.coefficients(alpha0, 0.0, 0.0)?.cl;
    Ok(DeltaCl { value: morphed - base, index, sigma_bar })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    /// m
    pub wingspans: Vec<f64>,
    /// m
    pub chords: Vec<f64>,
    /// m
    pub pylon_spans: Vec<f64>,
    /// sag depth over span length
    pub sag_fractions: Vec<f64>,
    pub trials_per_cell: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            wingspans: alloc::vec![1.0, 1.4, 1.8],
            chords: alloc::vec![0.203, 0.254, 0.305],
            pylon_spans: alloc::vec![40.0, 100.0, 300.0, 500.0],
            sag_fractions: alloc::vec![0.01, 0.02, 0.03, 0.04, 0.05],
            trials_per_cell: 25,
        }
    }
}

/// One (wingspan, chord, pylon span, sag) combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub wingspan: f64,
    pub chord: f64,
    pub pylon_span: f64,
    pub sag_fraction: f64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), SweepError> {
        let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !positive(&self.wingspans) {
            return Err(SweepError::InvalidGrid("wingspans must be a nonempty list of positive values"));
        }
        if !positive(&self.chords) {
            return Err(SweepError::InvalidGrid("chords must be a nonempty list of positive values"));
        }
        if !positive(&self.pylon_spans) {
            return Err(SweepError::InvalidGrid("pylon spans must be a nonempty list of positive values"));
        }
        if self.sag_fractions.is_empty() || !self.sag_fractions.iter().all(|s| *s > 0.0 && *s < 0.5) {
            return Err(SweepError::InvalidGrid("sag fractions must lie in (0, 0.5)"));
        }
        if self.trials_per_cell == 0 {
            return Err(SweepError::InvalidGrid("trials per cell must be at least 1"));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.wingspans.len() * self.chords.len() * self.pylon_spans.len() * self.sag_fractions.len()
    }

    pub fn case_count(&self) -> usize {
        self.cell_count() * self.trials_per_cell
    }

    /// Cells in key order: wingspan, then chord, pylon span, sag.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::with_capacity(self.cell_count());
        for &wingspan in &self.wingspans {
            for &chord in &self.chords {
                for &pylon_span in &self.pylon_spans {
                    for &sag_fraction in &self.sag_fractions {
                        out.push(CellKey { wingspan, chord, pylon_span, sag_fraction });
                    }
                }
            }
        }
        out
    }
}

/// The aircraft family swept over: everything except wingspan and chord.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftFamily {
    pub airfoil: SyntheticAirfoil,
    pub mode: MorphMode,
    pub calibration: SyntheticCalibration,
    /// kg
    pub mass: f64,
    /// kg·m²
    pub pitch_inertia: f64,
    /// kg/m³
    pub air_density: f64,
    pub derivatives: DerivativeOptions,
}

impl AircraftFamily {
    pub fn geometry(&self, wingspan: f64, chord: f64, u0: f64) -> AircraftGeometry {
        AircraftGeometry::rectangular(wingspan, chord, self.mass, self.pitch_inertia, u0, self.air_density)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub master_seed: u64,
    /// template for every trial; the initial offsets are overwritten by jitter
    pub sim: SimConfig,
    /// spans flown per trial
    pub spans: usize,
    /// jitter half-width on the initial u, as a fraction of u0
    pub speed_jitter: f64,
    /// jitter half-width on the initial h, m
    pub altitude_jitter: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub schedule: ScheduleOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            sim: SimConfig { dt: 0.01, ..SimConfig::default() },
            spans: 1,
            speed_jitter: 0.05,
            altitude_jitter: 0.5,
            sigma_lo: -0.032,
            sigma_hi: 0.055,
            schedule: ScheduleOptions::default(),
        }
    }
}

/// Tower height for a pylon span: middle of the height range of the lowest
/// voltage class whose spacing range covers it (lower bound when open).
pub fn tower_height_for_span(pylon_span: f64) -> Result<f64, SweepError> {
    let c = class_for_spacing(pylon_span).ok_or(SweepError::NoTowerClass(pylon_span))?;
    Ok(match c.height_m.max {
        Some(max) => 0.5 * (c.height_m.min + max),
        None => c.height_m.min,
    })
}

/// Everything a trial needs that does not depend on the trial index.
#[derive(Debug, Clone)]
pub struct PreparedCell {
    pub index: usize,
    pub key: CellKey,
    pub model: SyntheticModel,
    pub linearization: Linearization,
    pub profile: PowerlineProfile,
    pub schedule: MorphSchedule,
    /// λ_ph at σ = 0, m
    pub wavelength: f64,
}

pub fn prepare_cell(
    family: &AircraftFamily,
    cfg: &SweepConfig,
    index: usize,
    key: CellKey,
) -> Result<PreparedCell, SweepError> {
    let u0 = cfg.sim.u0;
    let geom = family.geometry(key.wingspan, key.chord, u0);
    let model = synthetic_coefficient_model(&family.airfoil, family.mode, &family.calibration, &geom)?;
    let linearization = derive_stability_matrices(&model, &geom, &family.derivatives)?;
    let tower = tower_height_for_span(key.pylon_span)?;
    let span = CatenarySpec::from_sag(key.pylon_span, key.sag_fraction, tower)?;
    let profile = PowerlineProfile::uniform(span, cfg.spans.max(1))?;
    let d = linearization.derivatives;
    let ctx = MatchingContext::new(d, u0, span, cfg.sigma_lo, cfg.sigma_hi);
    let schedule = build_schedule(&ctx, &profile, &cfg.schedule)?;
    let wavelength = phugoid_wavelength(&d, 0.0, u0, FrequencyConvention::Classical)?;
    Ok(PreparedCell { index, key, model, linearization, profile, schedule, wavelength })
}

/// Measurements from one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub delta_cl: f64,
    pub sigma_bar: f64,
    /// s
    pub t_peak: f64,
    pub clearance_fraction: f64,
    pub saturated_samples: usize,
}

/// Seeded initial `(u, h)` offsets for a trial. Each (cell, trial) pair owns
/// its own ChaCha stream of the master seed.
pub fn trial_jitter(cfg: &SweepConfig, cell_index: usize, trials_per_cell: usize, trial: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream((cell_index * trials_per_cell + trial) as u64);
    let du = cfg.speed_jitter * cfg.sim.u0 * rng.random_range(-1.0..=1.0);
    let dh = cfg.altitude_jitter * rng.random_range(-1.0..=1.0);
    (du, dh)
}

pub fn run_trial(
    cell: &PreparedCell,
    cfg: &SweepConfig,
    trials_per_cell: usize,
    trial: usize,
) -> Result<TrialMetrics, SweepError> {
    let (du, dh) = trial_jitter(cfg, cell.index, trials_per_cell, trial);
    let sim_cfg = SimConfig { initial_speed_offset: du, initial_altitude_offset: dh, horizon: None, ..cfg.sim };
    let plant = &cell.linearization.plant;
    let mut sim = Simulation::new(plant, &cell.schedule, &cell.profile, sim_cfg)?;
    sim.run_to_end()?;
    let traj = sim.into_samples();
    let alpha0 = cell.linearization.trim.alpha;
    let sigma: Vec<f64> = traj.iter().map(|s| s.sigma_achieved).collect();
    let alpha: Vec<f64> = traj.iter().map(|s| alpha0 + s.state.w / sim_cfg.u0).collect();
    let d = delta_cl_max(&sigma, &alpha, &cell.model, alpha0)?;
    let h_ref = cell.profile.spans()[0].tower_height;
    let m = clearance_metrics(&traj, &cell.profile, h_ref)?;
    Ok(TrialMetrics {
        delta_cl: d.value,
        sigma_bar: d.sigma_bar,
        t_peak: traj[d.index].state.t,
        clearance_fraction: m.fraction_under_1m,
        saturated_samples: m.saturated_samples,
    })
}

/// One output row; failures are recorded, never fatal to the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cell: usize,
    pub key: CellKey,
    pub trial: usize,
    /// λ_ph at σ = 0, m (NaN when the cell could not be prepared)
    pub wavelength: f64,
    pub outcome: Result<TrialMetrics, String>,
}

/// All trials of one cell.
pub fn run_cell(
    family: &AircraftFamily,
    cfg: &SweepConfig,
    grid: &SweepGrid,
    index: usize,
    key: CellKey,
) -> Vec<SweepResult> {
    let n = grid.trials_per_cell;
    match prepare_cell(family, cfg, index, key) {
        Ok(cell) => (0..n)
            .map(|trial| SweepResult {
                cell: index,
                key,
                trial,
                wavelength: cell.wavelength,
                outcome: run_trial(&cell, cfg, n, trial).map_err(|e| e.to_string()),
            })
            .collect(),
        Err(e) => {
            let msg = e.to_string();
            (0..n)
                .map(|trial| SweepResult { cell: index, key, trial, wavelength: f64::NAN, outcome: Err(msg.clone()) })
                .collect()
        }
    }
}

/// Restores key order after an out-of-order (parallel) collection.
pub fn sort_results(results: &mut [SweepResult]) {
    results.sort_by_key(|r| (r.cell, r.trial));
}

/// Sequential sweep; `on_cell(done, total)` is called after each cell.
pub fn run_sweep(
    family: &AircraftFamily,
    cfg: &SweepConfig,
    grid: &SweepGrid,
    mut on_cell: impl FnMut(usize, usize),
) -> Result<Vec<SweepResult>, SweepError> {
    grid.validate()?;
    let cells = grid.cells();
    let mut out = Vec::with_capacity(grid.case_count());
    for (i, key) in cells.iter().enumerate() {
        out.extend(run_cell(family, cfg, grid, i, *key));
        on_cell(i + 1, cells.len());
    }
    Ok(out)
}

/// What the trend search fits the altitude to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrendTarget {
    /// the wire height of the profile
    Wire,
    /// absolute altitude samples `(x, altitude)`, x increasing
    Altitude(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendOptions {
    pub knots_per_span: usize,
    /// spacing of the residual evaluation grid, m
    pub residual_spacing: f64,
    pub max_iterations: usize,
}

impl Default for TrendOptions {
    fn default() -> Self {
        Self { knots_per_span: 20, residual_spacing: 0.5, max_iterations: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    /// σ̂ knot values, span-major
    pub knots: Vec<f64>,
    pub schedule: MorphSchedule,
    /// sum of squared altitude errors at the returned knots, m²
    pub residual: f64,
    /// same at the frequency-matching initial guess
    pub initial_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Piecewise-constant schedule: knot `j` of a span holds from `j·L/N`.
pub fn knot_schedule(profile: &PowerlineProfile, knots: &[f64], per_span: usize) -> MorphSchedule {
    let spans = profile
        .spans()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let l = s.span_length;
            let commands = knots
                .get(i * per_span..((i + 1) * per_span).min(knots.len()))
                .unwrap_or(&[])
                .iter()
                .enumerate()
                .map(|(j, &sigma)| MorphCommand { x: j as f64 * l / per_span as f64, sigma, saturated: false })
                .collect();
            SpanSchedule { span_length: l, commands }
        })
        .collect();
    MorphSchedule { spans }
}

fn interpolate(series: &[(f64, f64)], x: f64) -> f64 {
    let k = series.partition_point(|p| p.0 < x).clamp(1, series.len() - 1);
    let ((x0, y0), (x1, y1)) = (series[k - 1], series[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Altitude errors on a fixed x grid over `[0, horizon]`.
fn altitude_errors(
    plant: &Plant,
    profile: &PowerlineProfile,
    cfg: &SimConfig,
    schedule: &MorphSchedule,
    target: &TrendTarget,
    grid: &[f64],
    out: &mut Vec<f64>,
) -> Result<(), SimError> {
    let mut sim = Simulation::new(plant, schedule, profile, *cfg)?;
    sim.run_to_end()?;
    let h_ref = profile.spans()[0].tower_height;
    let alt: Vec<(f64, f64)> = sim.samples().iter().map(|s| (s.state.x, h_ref + s.state.h)).collect();
    for &x in grid {
        let want = match target {
            TrendTarget::Wire => profile.wire_height(x)?,
            TrendTarget::Altitude(series) => interpolate(series, x),
        };
        out.push(interpolate(&alt, x) - want);
    }
    Ok(())
}

/// Least-squares search for piecewise-constant σ̂ knots minimising the
/// altitude error over `horizon`, started from `initial` sampled at the
/// knot midpoints. The returned residual never exceeds the initial one.
pub fn trend_search(
    plant: &Plant,
    profile: &PowerlineProfile,
    sim: &SimConfig,
    initial: &MorphSchedule,
    target: &TrendTarget,
    horizon: f64,
    opts: &TrendOptions,
) -> Result<TrendResult, SweepError> {
    if !(horizon > 0.0) {
        return Err(SweepError::InvalidHorizon(horizon));
    }
    if opts.knots_per_span == 0 || !(opts.residual_spacing > 0.0) {
        return Err(SweepError::InvalidGrid("trend search needs knots and a positive residual spacing"));
    }
    if let TrendTarget::Altitude(s) = target {
        if s.len() < 2 || s.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(SweepError::InvalidTarget);
        }
    }
    let cfg = SimConfig { horizon: Some(horizon), ..*sim };
    cfg.validate(profile)?;
    let n = opts.knots_per_span;
    let towers = profile.tower_positions();
    let covered = profile.spans().iter().enumerate().filter(|(i, _)| towers[*i] < horizon - 1e-9).count();
    let mut p0 = Vec::with_capacity(covered * n);
    for (i, s) in profile.spans().iter().take(covered).enumerate() {
        let dx = s.span_length / n as f64;
        p0.extend((0..n).map(|j| initial.sigma_at_local(i, (j as f64 + 0.5) * dx)));
    }
    let m = libm::floor(horizon / opts.residual_spacing) as usize;
    let grid: Vec<f64> = (0..=m).map(|k| k as f64 * opts.residual_spacing).collect();

    let mut failure = None;
    let residuals = |p: &[f64], out: &mut Vec<f64>| {
        let sched = knot_schedule(profile, p, n);
        if let Err(e) = altitude_errors(plant, profile, &cfg, &sched, target, &grid, out) {
            out.clear();
            out.resize(grid.len(), f64::NAN);
            failure.get_or_insert(e);
        }
    };
    let lm = LmOptions { max_iterations: opts.max_iterations, cost_tol: 1e-10, ..LmOptions::default() };
    let report = levenberg_marquardt(residuals, &p0, &lm);
    if !report.initial_cost.is_finite() {
        return Err(failure.map(SweepError::from).unwrap_or(SweepError::InvalidTarget));
    }
    Ok(TrendResult {
        schedule: knot_schedule(profile, &report.params, n),
        knots: report.params,
        residual: 2.0 * report.cost,
        initial_residual: 2.0 * report.initial_cost,
        iterations: report.iterations,
        converged: report.converged,
    })
}

/// One (wingspan, chord, sag) row of a pylon-span table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub wingspan: f64,
    pub chord: f64,
    pub sag_fraction: f64,
    pub trials: usize,
    pub failures: usize,
    /// max |ΔC_L,m| over successful trials
    pub max_abs_delta_cl: f64,
    pub mean_delta_cl: f64,
    pub mean_clearance_fraction: f64,
    /// m
    pub wavelength: f64,
    /// λ_ph over pylon span
    pub wavelength_ratio: f64,
}

impl TrendRow {
    pub fn wing_area(&self) -> f64 {
        self.wingspan * self.chord
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTable {
    pub pylon_span: f64,
    pub rows: Vec<TrendRow>,
}

/// Groups results by pylon span, then by (wingspan, chord, sag). Tables are
/// ordered by pylon span and rows by wingspan, chord, sag.
pub fn aggregate_trends(results: &[SweepResult]) -> Vec<TrendTable> {
    let mut sorted: Vec<&SweepResult> = results.iter().collect();
    let order = |r: &SweepResult| [r.key.pylon_span, r.key.wingspan, r.key.chord, r.key.sag_fraction];
    sorted.sort_by(|a, b| {
        order(a)
            .iter()
            .zip(order(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut tables: Vec<TrendTable> = Vec::new();
    for group in sorted.chunk_by(|a, b| order(a) == order(b)) {
        let k = group[0].key;
        let ok: Vec<&TrialMetrics> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let count = ok.len().max(1) as f64;
        let row = TrendRow {
            wingspan: k.wingspan,
            chord: k.chord,
            sag_fraction: k.sag_fraction,
            trials: group.len(),
            failures: group.len() - ok.len(),
            max_abs_delta_cl: if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|m| m.delta_cl.abs()).fold(0.0, f64::max)
            },
            mean_delta_cl: ok.iter().map(|m| m.delta_cl).sum::<f64>() / count,
            mean_clearance_fraction: ok.iter().map(|m| m.clearance_fraction).sum::<f64>() / count,
            wavelength: group[0].wavelength,
            wavelength_ratio: group[0].wavelength / k.pylon_span,
        };
        match tables.last_mut() {
            Some(t) if t.pylon_span == k.pylon_span => t.rows.push(row),
            _ => tables.push(TrendTable { pylon_span: k.pylon_span, rows: alloc::vec![row] }),
        }
    }
    tables
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Mixed,
}

/// Direction of max |ΔC_L,m| with wing area at one sag level. Rows of equal
/// area are averaged.
pub fn wing_area_trend(table: &TrendTable, sag_fraction: f64) -> Trend {
    let mut pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.sag_fraction == sag_fraction && r.max_abs_delta_cl.is_finite())
        .map(|r| (r.wing_area(), r.max_abs_delta_cl))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64, usize)> = Vec::new();
    for (a, v) in pts {
        match merged.last_mut() {
            Some(m) if (m.0 - a).abs() <= 1e-12 * a => {
                m.1 += v;
                m.2 += 1;
            }
            _ => merged.push((a, v, 1)),
        }
    }
    let vals: Vec<f64> = merged.iter().map(|m| m.1 / m.2 as f64).collect();
    if vals.len() >= 2 && vals.windows(2).all(|w| w[1] < w[0]) {
        Trend::Decreasing
    } else if vals.len() >= 2 && vals.windows(2).all(|w| w[1] > w[0]) {
        Trend::Increasing
    } else {
        Trend::Mixed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::tests_support::{calibration, reference_geometry};
    use crate::aero::{AeroCoefficients, AltitudeRow};
    use crate::sim::{integrate, EntryCondition};

    fn family() -> AircraftFamily {
        let g = reference_geometry();
        AircraftFamily {
            airfoil: SyntheticAirfoil::naca("2412").unwrap(),
            mode: MorphMode::Thickness,
            calibration: calibration(),
            mass: g.mass,
            pitch_inertia: g.pitch_inertia,
            air_density: g.air_density,
            derivatives: DerivativeOptions::default(),
        }
    }

    fn affine() -> AeroCoefficients {
        AeroCoefficients { cl0: 0.2, cl_alpha: 4.5, cl_mu: 1.1, cd0: 0.03, cm0: -0.02, ..Default::default() }
    }

    #[test]
    fn zero_sigma_gives_zero() {
        let a0 = 0.05;
        let d = delta_cl_max(&[0.0; 10], &[a0; 10], &affine(), a0).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.index, 0);
    }

    #[test]
    fn affine_peak_value() {
        let sigma = [0.0, 0.01, 0.04, 0.02, -0.01];
        let a0 = 0.05;
        let d = delta_cl_max(&sigma, &[a0; 5], &affine(), a0).unwrap();
        assert!((d.value - 1.1 * 0.04).abs() < 1e-12);
        assert_eq!(d.index, 2);
    }

    #[test]
    fn earliest_peak_wins() {
        let sigma = [0.0, 0.03, 0.01, 0.03];
        let alpha = [0.0, 0.1, 0.0, 0.2];
        let d = delta_cl_max(&sigma, &alpha, &affine(), 0.0).unwrap();
        assert_eq!(d.index, 1);
        assert!((d.value - (4.5 * 0.1 + 1.1 * 0.03)).abs() < 1e-12);
    }

    #[test]
    fn trace_errors() {
        assert_eq!(delta_cl_max(&[], &[], &affine(), 0.0), Err(SweepError::EmptyTrace));
        assert!(matches!(delta_cl_max(&[0.0], &[0.0, 0.0], &affine(), 0.0), Err(SweepError::MismatchedTraces { .. })));
    }

    #[test]
    fn default_grid_cardinality() {
        let g = SweepGrid::default();
        g.validate().unwrap();
        assert_eq!(g.case_count(), 4500);
        assert_eq!(g.cells().len(), 180);
        assert!(SweepGrid { trials_per_cell: 0, ..SweepGrid::default() }.validate().is_err());
        assert!(SweepGrid { sag_fractions: alloc::vec![0.6], ..SweepGrid::default() }.validate().is_err());
    }

    #[test]
    fn tower_heights_follow_class() {
        assert_eq!(tower_height_for_span(40.0).unwrap(), 12.5);
        assert_eq!(tower_height_for_span(100.0).unwrap(), 22.5);
        assert_eq!(tower_height_for_span(300.0).unwrap(), 40.0);
        assert_eq!(tower_height_for_span(500.0).unwrap(), 65.0);
        assert!(tower_height_for_span(10.0).is_err());
    }

    #[test]
    fn jitter_is_bounded_and_seeded() {
        let cfg = SweepConfig::default();
        let a = trial_jitter(&cfg, 3, 25, 7);
        assert_eq!(a, trial_jitter(&cfg, 3, 25, 7));
        assert_ne!(a, trial_jitter(&cfg, 3, 25, 8));
        assert_ne!(a, trial_jitter(&SweepConfig { master_seed: 1, ..cfg.clone() }, 3, 25, 7));
        for t in 0..200 {
            let (du, dh) = trial_jitter(&cfg, 0, 200, t);
            assert!(du.abs() <= 1.25 && dh.abs() <= 0.5);
        }
    }

    #[test]
    fn single_cell_sweep_is_deterministic() {
        let grid = SweepGrid {
            wingspans: alloc::vec![1.4],
            chords: alloc::vec![0.254],
            pylon_spans: alloc::vec![100.0],
            sag_fractions: alloc::vec![0.02],
            trials_per_cell: 1,
        };
        let cfg = SweepConfig::default();
        let mut calls = 0;
        let a = run_sweep(&family(), &cfg, &grid, |_, _| calls += 1).unwrap();
        let b = run_sweep(&family(), &cfg, &grid, |_, _| ()).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(calls, 1);
        assert_eq!(a, b);
        let m = a[0].outcome.as_ref().unwrap();
        assert!(m.delta_cl.is_finite() && m.sigma_bar <= cfg.sigma_hi);
        assert!((0.0..=1.0).contains(&m.clearance_fraction));
        assert!(a[0].wavelength > 0.0);
    }

    #[test]
    fn failing_cell_is_recorded() {
        let grid = SweepGrid {
            wingspans: alloc::vec![1.4],
            chords: alloc::vec![0.254],
            pylon_spans: alloc::vec![10.0],
            sag_fractions: alloc::vec![0.02],
            trials_per_cell: 3,
        };
        let r = run_sweep(&family(), &SweepConfig::default(), &grid, |_, _| ()).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|x| x.outcome.is_err() && x.wavelength.is_nan()));
        let t = aggregate_trends(&r);
        assert_eq!(t[0].rows[0].failures, 3);
    }

    fn planted(keys: &[(f64, f64, f64, f64)], trials: usize, f: impl Fn(&CellKey) -> f64) -> Vec<SweepResult> {
        let mut out = Vec::new();
        for (i, &(wingspan, chord, pylon_span, sag_fraction)) in keys.iter().enumerate() {
            let key = CellKey { wingspan, chord, pylon_span, sag_fraction };
            for trial in 0..trials {
                let scale = 1.0 - 0.1 * trial as f64;
                out.push(SweepResult {
                    cell: i,
                    key,
                    trial,
                    wavelength: 32.0,
                    outcome: Ok(TrialMetrics {
                        delta_cl: f(&key) * scale,
                        sigma_bar: 0.05,
                        t_peak: 1.0,
                        clearance_fraction: 0.5,
                        saturated_samples: 0,
                    }),
                });
            }
        }
        out
    }

    #[test]
    fn single_cell_gives_single_row() {
        let r = planted(&[(1.4, 0.254, 40.0, 0.02)], 4, |_| 0.3);
        let t = aggregate_trends(&r);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].rows.len(), 1);
        assert_eq!(t[0].rows[0].max_abs_delta_cl, 0.3);
        assert!((t[0].rows[0].mean_delta_cl - 0.3 * (1.0 - 0.15)).abs() < 1e-12);
        assert_eq!(t[0].rows[0].wavelength_ratio, 32.0 / 40.0);
    }

    #[test]
    fn planted_inverse_area_trend() {
        let grid = SweepGrid { trials_per_cell: 3, ..SweepGrid::default() };
        let keys: Vec<_> = grid.cells().iter().map(|k| (k.wingspan, k.chord, k.pylon_span, k.sag_fraction)).collect();
        let mut r = planted(&keys, 3, |k| 0.02 / (k.wingspan * k.chord));
        r.reverse();
        let tables = aggregate_trends(&r);
        assert_eq!(tables.len(), 4);
        for t in &tables {
            assert_eq!(t.rows.len(), 45);
            assert!(t.rows.iter().any(|row| row.sag_fraction == 0.02));
            assert_eq!(wing_area_trend(t, 0.02), Trend::Decreasing);
        }
        let flipped = planted(&keys, 1, |k| k.wingspan * k.chord);
        assert_eq!(wing_area_trend(&aggregate_trends(&flipped)[0], 0.03), Trend::Increasing);
    }

    fn trend_setup() -> (Plant, PowerlineProfile, SimConfig) {
        let plant = Plant::reference(AltitudeRow::ClimbRate);
        let profile = PowerlineProfile::uniform(CatenarySpec::from_sag(70.0, 0.02, 30.0).unwrap(), 1).unwrap();
        let cfg = SimConfig { dt: 0.01, entry: EntryCondition::Tangent, ..SimConfig::default() };
        (plant, profile, cfg)
    }

    #[test]
    fn trend_search_recovers_planted_knots() {
        let (plant, profile, cfg) = trend_setup();
        let n = 10;
        let truth: Vec<f64> = (0..n).map(|j| 0.01 + 0.03 * libm::sin(j as f64 * 0.7)).collect();
        let planted_sched = knot_schedule(&profile, &truth, n);
        let traj = integrate(&plant, &planted_sched, &profile, &cfg).unwrap();
        let target: Vec<(f64, f64)> = traj.iter().map(|s| (s.state.x, 30.0 + s.state.h)).collect();
        let ctx = MatchingContext::new(plant.derivatives(), 25.0, profile.spans()[0], -0.032, 0.055);
        let init = build_schedule(&ctx, &profile, &ScheduleOptions::default()).unwrap();
        let opts = TrendOptions { knots_per_span: n, ..TrendOptions::default() };
        let r = trend_search(&plant, &profile, &cfg, &init, &TrendTarget::Altitude(target), 70.0, &opts).unwrap();
        assert!(r.residual <= r.initial_residual);
        let err = r.knots.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.05 * 0.087, "max knot error {err}, knots {:?}", r.knots);
    }

    #[test]
    fn trend_search_on_wire_never_worsens() {
        let (plant, profile, cfg) = trend_setup();
        let ctx = MatchingContext::new(plant.derivatives(), 25.0, profile.spans()[0], -0.032, 0.055);
        let init = build_schedule(&ctx, &profile, &ScheduleOptions::default()).unwrap();
        let opts = TrendOptions { max_iterations: 5, ..TrendOptions::default() };
        let r = trend_search(&plant, &profile, &cfg, &init, &TrendTarget::Wire, 70.0, &opts).unwrap();
        assert_eq!(r.knots.len(), 20);
        assert!(r.residual <= r.initial_residual);
        assert!(matches!(
            trend_search(&plant, &profile, &cfg, &init, &TrendTarget::Wire, 0.0, &opts),
            Err(SweepError::InvalidHorizon(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reparameterisation_invariant(sig in proptest::collection::vec(-0.05f64..0.05, 1..40), k in 1usize..4) {
                let alpha: Vec<f64> = sig.iter().map(|s| 0.03 + s).collect();
                let base = delta_cl_max(&sig, &alpha, &affine(), 0.03).unwrap();
                // repeating each sample k times is a uniform time rescaling
                let s2: Vec<f64> = sig.iter().flat_map(|s| core::iter::repeat_n(*s, k)).collect();
                let a2: Vec<f64> = alpha.iter().flat_map(|s| core::iter::repeat_n(*s, k)).collect();
                let d = delta_cl_max(&s2, &a2, &affine(), 0.03).unwrap();
                prop_assert_eq!(d.value, base.value);
                prop_assert_eq!(d.index, base.index * k);
            }
        }
    }
}
