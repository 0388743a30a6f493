//! `plus simulate`: one multi-span tracking run.

use plus_core::controller::{build_schedule, MatchingContext};
use plus_core::sim::{
    clearance_metrics, phugoid_wavelength, ActuatorMode, SimConfig, SimError, Simulation, SpanMetrics, TrackingMetrics,
    TrajectorySample,
};
use plus_core::sweep::{trend_search, TrendTarget};
use serde::Serialize;

use super::{configured_profile, emit};
use crate::io::{write_json, write_schedule, write_trajectory};
use crate::plant::build_plant;
use crate::{CliError, Context, SimulateArgs};

/// Metrics without the per-sample series.
#[derive(Debug, Clone, Serialize)]
pub struct TrackingSummary {
    pub actuator: ActuatorMode,
    pub total_length: f64,
    pub length_under_1m: f64,
    pub length_over_1m: f64,
    pub fraction_under_1m: f64,
    pub min_clearance: f64,
    pub max_clearance: f64,
    pub max_abs_speed_deviation: f64,
    pub rms_speed_deviation: f64,
    pub saturated_samples: usize,
    /// `true` where a span's trough clearance is under 1 m
    pub trough_under_1m: Vec<bool>,
    pub alternating_troughs: bool,
    pub spans: Vec<SpanMetrics>,
}

impl TrackingSummary {
    fn new(actuator: ActuatorMode, m: &TrackingMetrics) -> Self {
        Self {
            actuator,
            total_length: m.total_length,
            length_under_1m: m.length_under_1m,
            length_over_1m: m.length_over_1m,
            fraction_under_1m: m.fraction_under_1m,
            min_clearance: m.min_clearance,
            max_clearance: m.max_clearance,
            max_abs_speed_deviation: m.velocity.max_abs,
            rms_speed_deviation: m.velocity.rms,
            saturated_samples: m.saturated_samples,
            trough_under_1m: m.trough_classes(),
            alternating_troughs: m.alternates(),
            spans: m.spans.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendSummary {
    pub residual: f64,
    pub initial_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub knots: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateMetrics {
    pub plant: String,
    /// m, at σ = 0
    pub phugoid_wavelength: Option<f64>,
    pub commands: usize,
    pub saturated_commands: usize,
    pub sigma_range: Option<(f64, f64)>,
    /// the configured actuator mode (the one written to trajectory.csv)
    pub tracking: TrackingSummary,
    /// the same schedule flown with the other actuator mode
    pub comparison: Result<TrackingSummary, String>,
    pub trend_search: Option<TrendSummary>,
}

fn fly(
    plant: &plus_core::aero::Plant,
    schedule: &plus_core::controller::MorphSchedule,
    profile: &plus_core::powerline::PowerlineProfile,
    cfg: SimConfig,
) -> (Vec<TrajectorySample>, Result<(), SimError>) {
    let mut sim = match Simulation::new(plant, schedule, profile, cfg) {
        Ok(s) => s,
        Err(e) => return (Vec::new(), Err(e)),
    };
    let r = sim.run_to_end();
    (sim.into_samples(), r)
}

pub fn run(ctx: &mut Context, args: &SimulateArgs) -> Result<(), CliError> {
    ctx.loaded.validate()?;
    let setup = build_plant(&ctx.loaded)?;
    let (span, profile) = configured_profile(&ctx.loaded)?;
    let c = ctx.loaded.config.clone();
    let sim_cfg = ctx.loaded.sim_config();
    sim_cfg.validate(&profile).map_err(|e| CliError::Config(ctx.loaded.error("simulation", e.to_string())))?;

    let matching = MatchingContext {
        sensitivity: setup.sensitivity.clone(),
        convention: c.controller.convention,
        ..MatchingContext::new(
            setup.derivatives,
            c.aircraft.trim_speed,
            span,
            c.controller.sigma_lo,
            c.controller.sigma_hi,
        )
    };
    let schedule = build_schedule(
        &matching,
        &profile,
        &plus_core::controller::ScheduleOptions { dx: c.controller.dx, frequency_floor: c.controller.frequency_floor },
    )
    .map_err(CliError::runtime)?;
    emit(ctx, "schedule.csv", |p| write_schedule(p, &schedule))?;

    let (traj, outcome) = fly(&setup.plant, &schedule, &profile, sim_cfg);
    emit(ctx, "trajectory.csv", |p| write_trajectory(p, &traj))?;
    outcome.map_err(CliError::runtime)?;
    let h_ref = c.powerline.tower_height;
    let metrics = clearance_metrics(&traj, &profile, h_ref).map_err(CliError::runtime)?;

    let other = match sim_cfg.actuator {
        ActuatorMode::Ideal => ActuatorMode::Servo,
        ActuatorMode::Servo => ActuatorMode::Ideal,
    };
    let (other_traj, other_outcome) = fly(&setup.plant, &schedule, &profile, SimConfig { actuator: other, ..sim_cfg });
    let comparison = other_outcome
        .and_then(|_| clearance_metrics(&other_traj, &profile, h_ref))
        .map(|m| TrackingSummary::new(other, &m))
        .map_err(|e| e.to_string());

    let trend = if args.trend_search {
        let horizon = sim_cfg.horizon_for(&profile);
        let r = trend_search(&setup.plant, &profile, &sim_cfg, &schedule, &TrendTarget::Wire, horizon, &c.trend_search)
            .map_err(CliError::runtime)?;
        emit(ctx, "trend_schedule.csv", |p| write_schedule(p, &r.schedule))?;
        Some(TrendSummary {
            residual: r.residual,
            initial_residual: r.initial_residual,
            iterations: r.iterations,
            converged: r.converged,
            knots: r.knots,
        })
    } else {
        None
    };

    let out = SimulateMetrics {
        plant: setup.description.clone(),
        phugoid_wavelength: phugoid_wavelength(&setup.derivatives, 0.0, c.aircraft.trim_speed, c.controller.convention)
            .ok(),
        commands: schedule.command_count(),
        saturated_commands: schedule.saturation_count(),
        sigma_range: schedule.sigma_range(),
        tracking: TrackingSummary::new(sim_cfg.actuator, &metrics),
        comparison,
        trend_search: trend,
    };
    emit(ctx, "metrics.json", |p| write_json(p, &out))?;

    println!("plant: {}", out.plant);
    if let Some(l) = out.phugoid_wavelength {
        println!("phugoid wavelength at sigma = 0: {l:.2} m");
    }
    print_summary(&out.tracking);
    if let Ok(s) = &out.comparison {
        print_summary(s);
    }
    if let Some(t) = &out.trend_search {
        println!(
            "trend search: residual {:.4} m^2 (initial {:.4}), {} iterations, converged {}",
            t.residual, t.initial_residual, t.iterations, t.converged
        );
    }
    println!("outputs in {}", ctx.out.root().display());
    Ok(())
}

fn print_summary(s: &TrackingSummary) {
    let troughs: Vec<&str> = s.trough_under_1m.iter().map(|&low| if low { "low" } else { "high" }).collect();
    println!(
        "{:?}: fraction under 1 m = {:.3}, clearance [{:.2}, {:.2}] m, troughs {} (alternating: {})",
        s.actuator,
        s.fraction_under_1m,
        s.min_clearance,
        s.max_clearance,
        troughs.join("/"),
        s.alternating_troughs
    );
}
