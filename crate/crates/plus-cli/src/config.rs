//! The run configuration: one JSON document with a section per module.
//! Every section has defaults, so `{}` is a valid (reference) config.

use std::fmt;
use std::path::{Path, PathBuf};

use plus_core::actuator::{default_servo, ServoModel};
use plus_core::aero::{
    AircraftGeometry, DerivativeOptions, MorphMode, MorphSlopes, SpeedSlopes, SyntheticAirfoil, SyntheticCalibration,
};
use plus_core::controller::FrequencyConvention;
use plus_core::sim::{ActuatorMode, SimConfig};
use plus_core::sweep::{AircraftFamily, SweepConfig, SweepGrid, TrendOptions};
use plus_core::sysid::{FitOptions, DEFAULT_RATE};
use serde::{Deserialize, Serialize};

/// A configuration problem, pointing at the file and (when known) the line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// dotted field path, e.g. `simulation.dt`
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.path.display())?;
        if let Some(l) = self.line {
            write!(f, ":{l}")?;
            if let Some(c) = self.column {
                write!(f, ":{c}")?;
            }
        }
        if let Some(field) = &self.field {
            write!(f, ": {field}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub aircraft: AircraftConfig,
    pub plant: PlantSource,
    pub powerline: PowerlineConfig,
    pub controller: ControllerConfig,
    pub actuator: ActuatorConfig,
    pub simulation: SimConfig,
    pub trend_search: TrendOptions,
    pub sweep: SweepSection,
    pub sysid: SysidConfig,
    pub wavelength_map: WavelengthMapConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AircraftConfig {
    /// NACA 4-digit designation
    pub airfoil: String,
    pub morph_mode: MorphMode,
    pub wingspan: f64,
    pub chord: f64,
    pub mass: f64,
    pub pitch_inertia: f64,
    pub trim_speed: f64,
    pub air_density: f64,
    pub calibration: SyntheticCalibration,
    pub derivatives: DerivativeOptions,
}

/// The calibration that reproduces the reference trim plant's morph
/// sensitivities on the reference aircraft.
pub fn reference_calibration() -> SyntheticCalibration {
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

impl Default for AircraftConfig {
    fn default() -> Self {
        Self {
            airfoil: "NACA2412".into(),
            morph_mode: MorphMode::Thickness,
            wingspan: 1.4,
            chord: 0.254,
            mass: 3.0,
            pitch_inertia: 0.12,
            trim_speed: 25.0,
            air_density: 1.225,
            calibration: reference_calibration(),
            derivatives: DerivativeOptions::default(),
        }
    }
}

impl AircraftConfig {
    pub fn geometry(&self) -> AircraftGeometry {
        AircraftGeometry::rectangular(
            self.wingspan,
            self.chord,
            self.mass,
            self.pitch_inertia,
            self.trim_speed,
            self.air_density,
        )
    }

    pub fn airfoil(&self) -> Result<SyntheticAirfoil, plus_core::aero::AeroError> {
        SyntheticAirfoil::naca(&self.airfoil)
    }

    pub fn family(&self) -> Result<AircraftFamily, plus_core::aero::AeroError> {
        Ok(AircraftFamily {
            airfoil: self.airfoil()?,
            mode: self.morph_mode,
            calibration: self.calibration,
            mass: self.mass,
            pitch_inertia: self.pitch_inertia,
            air_density: self.air_density,
            derivatives: self.derivatives,
        })
    }
}

/// Where the `A`, `B_σ` matrices come from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSource {
    /// the built-in reference trim plant
    #[default]
    Reference,
    /// a plant file (path relative to the config file)
    File { path: PathBuf },
    /// derived from the synthetic coefficient model of `aircraft`
    Synthetic,
    /// derived from a polar table CSV on the `aircraft` geometry
    Polar { path: PathBuf, speed_slopes: SpeedSlopes },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerlineConfig {
    pub span_length: f64,
    /// sag depth over span length
    pub sag_fraction: f64,
    pub tower_height: f64,
    pub spans: usize,
}

impl Default for PowerlineConfig {
    fn default() -> Self {
        Self { span_length: 70.0, sag_fraction: 0.02, tower_height: 30.0, spans: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// command spacing, m
    pub dx: f64,
    /// rad/s
    pub frequency_floor: f64,
    pub convention: FrequencyConvention,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            sigma_lo: -0.032,
            sigma_hi: 0.055,
            dx: 0.5,
            frequency_floor: 0.0,
            convention: FrequencyConvention::Classical,
        }
    }
}

/// The servo in degrees; the simulator drives it in σ units with the
/// full throw spread over the controller's σ range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorConfig {
    pub servo: ServoModel,
}

impl Default for ActuatorConfig {
    fn default() -> Self {
        Self { servo: default_servo() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid: SweepGrid,
    /// spans flown per trial
    pub spans: usize,
    /// s
    pub dt: f64,
    pub speed_jitter: f64,
    /// m
    pub altitude_jitter: f64,
    pub actuator: ActuatorMode,
}

impl Default for SweepSection {
    fn default() -> Self {
        let c = SweepConfig::default();
        Self {
            grid: SweepGrid::default(),
            spans: c.spans,
            dt: c.sim.dt,
            speed_jitter: c.speed_jitter,
            altitude_jitter: c.altitude_jitter,
            actuator: ActuatorMode::Ideal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SysidConfig {
    /// degrees
    pub amplitude: f64,
    pub steps: usize,
    /// s
    pub dwell: f64,
    pub noise_std: f64,
    /// Hz
    pub sample_rate: f64,
    pub fit: FitOptions,
}

impl Default for SysidConfig {
    fn default() -> Self {
        Self {
            amplitude: 3.0,
            steps: 6,
            dwell: 2.0,
            noise_std: 0.0,
            sample_rate: DEFAULT_RATE,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavelengthMapConfig {
    pub wingspans: Vec<f64>,
    pub chords: Vec<f64>,
    /// the map is evaluated at −σ_max, 0, +σ_max
    pub sigma_max: f64,
}

impl Default for WavelengthMapConfig {
    fn default() -> Self {
        Self { wingspans: vec![1.0, 1.4, 1.8], chords: vec![0.203, 0.254, 0.305], sigma_max: 0.14 }
    }
}

/// A loaded config together with its source text (for line lookups).
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub path: PathBuf,
    pub text: String,
}

impl LoadedConfig {
    pub fn defaults() -> Self {
        Self { config: Config::default(), path: PathBuf::from("<defaults>"), text: String::new() }
    }

    /// Resolves a path from the config relative to the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        match self.path.parent() {
            Some(dir) => dir.join(p),
            None => p.to_path_buf(),
        }
    }

    pub fn error(&self, field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.clone(),
            line: find_field_line(&self.text, field),
            column: None,
            field: Some(field.to_string()),
            message: message.into(),
        }
    }

    /// Simulation-facing SimConfig with the servo converted to σ units.
    pub fn sim_config(&self) -> SimConfig {
        let c = &self.config;
        let mut s = c.simulation;
        s.u0 = c.aircraft.trim_speed;
        if s.servo.is_none() {
            s.servo = Some(c.actuator.servo.in_sigma_units(c.controller.sigma_hi - c.controller.sigma_lo));
        }
        s
    }

    pub fn sweep_config(&self) -> SweepConfig {
        let c = &self.config;
        let mut sim = self.sim_config();
        sim.dt = c.sweep.dt;
        sim.actuator = c.sweep.actuator;
        sim.horizon = None;
        SweepConfig {
            master_seed: c.seed,
            sim,
            spans: c.sweep.spans,
            speed_jitter: c.sweep.speed_jitter,
            altitude_jitter: c.sweep.altitude_jitter,
            sigma_lo: c.controller.sigma_lo,
            sigma_hi: c.controller.sigma_hi,
            schedule: plus_core::controller::ScheduleOptions {
                dx: c.controller.dx,
                frequency_floor: c.controller.frequency_floor,
            },
        }
    }

    /// Field-level checks; the first failure is reported.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let checks: [(bool, &str, &str); 22] = [
            (pos(c.simulation.dt), "simulation.dt", "must be positive"),
            (pos(c.simulation.divergence_bound), "simulation.divergence_bound", "must be positive"),
            (
                c.simulation.horizon.is_none_or(|h| h >= c.powerline.span_length - 1e-9),
                "simulation.horizon",
                "must cover at least one span",
            ),
            (
                c.simulation.horizon.is_none_or(|h| h <= c.powerline.span_length * c.powerline.spans as f64 + 1e-9),
                "simulation.horizon",
                "exceeds the profile length",
            ),
            (pos(c.powerline.span_length), "powerline.span_length", "must be positive"),
            (
                c.powerline.sag_fraction > 0.0 && c.powerline.sag_fraction < 0.5,
                "powerline.sag_fraction",
                "must lie in (0, 0.5)",
            ),
            (c.powerline.tower_height.is_finite(), "powerline.tower_height", "must be finite"),
            (c.powerline.spans >= 1, "powerline.spans", "must be at least 1"),
            (c.controller.sigma_lo < c.controller.sigma_hi, "controller.sigma_hi", "must exceed sigma_lo"),
            (pos(c.controller.dx), "controller.dx", "must be positive"),
            (c.controller.frequency_floor >= 0.0, "controller.frequency_floor", "must be non-negative"),
            (pos(c.aircraft.wingspan), "aircraft.wingspan", "must be positive"),
            (pos(c.aircraft.chord), "aircraft.chord", "must be positive"),
            (pos(c.aircraft.mass), "aircraft.mass", "must be positive"),
            (pos(c.aircraft.pitch_inertia), "aircraft.pitch_inertia", "must be positive"),
            (pos(c.aircraft.trim_speed), "aircraft.trim_speed", "must be positive"),
            (pos(c.sweep.dt), "sweep.dt", "must be positive"),
            (c.sweep.spans >= 1, "sweep.spans", "must be at least 1"),
            (pos(c.sysid.dwell), "sysid.dwell", "must be positive"),
            (c.sysid.steps >= 1, "sysid.steps", "must be at least 1"),
            (pos(c.sysid.sample_rate), "sysid.sample_rate", "must be positive"),
            (c.sysid.noise_std >= 0.0, "sysid.noise_std", "must be non-negative"),
        ];
        for (ok, field, msg) in checks {
            if !ok {
                return Err(self.error(field, msg));
            }
        }
        if let Err(e) = c.aircraft.airfoil() {
            return Err(self.error("aircraft.airfoil", e.to_string()));
        }
        if let Err(e) = c.aircraft.calibration.validate() {
            return Err(self.error("aircraft.calibration", e.to_string()));
        }
        if let Err(e) = c.actuator.servo.validate() {
            return Err(self.error("actuator.servo", e.to_string()));
        }
        if let Err(e) = c.sweep.grid.validate() {
            return Err(self.error("sweep.grid", e.to_string()));
        }
        if c.trend_search.knots_per_span == 0 {
            return Err(self.error("trend_search.knots_per_span", "must be at least 1"));
        }
        let w = &c.wavelength_map;
        if w.wingspans.is_empty() || w.chords.is_empty() || !w.wingspans.iter().chain(&w.chords).all(|v| pos(*v)) {
            return Err(self.error("wavelength_map", "wingspans and chords must be nonempty positive lists"));
        }
        if !pos(w.sigma_max) {
            return Err(self.error("wavelength_map.sigma_max", "must be positive"));
        }
        Ok(())
    }
}

/// Line of `"leaf"` inside the object that follows each parent key in turn.
fn find_field_line(text: &str, dotted: &str) -> Option<usize> {
    let mut from = 0;
    for part in dotted.split('.') {
        let needle = format!("\"{part}\"");
        from += text[from..].find(&needle)?;
        from += needle.len();
    }
    Some(text[..from].matches('\n').count() + 1)
}

/// Reads, parses and validates a config file.
pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: None,
        column: None,
        field: None,
        message: format!("cannot read config: {e}"),
    })?;
    parse(path, text)
}

pub fn parse(path: &Path, text: String) -> Result<LoadedConfig, ConfigError> {
    let config: Config = serde_json::from_str(&text).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: Some(e.line()),
        column: Some(e.column()),
        field: None,
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })?;
    let loaded = LoadedConfig { config, path: path.to_path_buf(), text };
    loaded.validate()?;
    Ok(loaded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_reference() {
        let l = parse(Path::new("c.json"), "{}".into()).unwrap();
        assert_eq!(l.config, Config::default());
    }

    #[test]
    fn validation_names_field_and_line() {
        let text = "{\n  \"simulation\": {\n    \"dt\": 0.0\n  }\n}\n".to_string();
        let e = parse(Path::new("c.json"), text).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("simulation.dt"));
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().starts_with("c.json:3: simulation.dt"));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse(Path::new("c.json"), "{\n  \"seed\": 1,\n  \"bogus\": 2\n}".into()).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("unknown field"), "{}", e.message);
    }

    #[test]
    fn field_lookup_follows_nesting() {
        let t = "{\"a\": {\"dt\": 1},\n\"simulation\": {\n\"x\": 2,\n\"dt\": 3}}";
        assert_eq!(find_field_line(t, "simulation.dt"), Some(4));
        assert_eq!(find_field_line(t, "nope.dt"), None);
    }

    #[test]
    fn plant_sources_parse() {
        let p: PlantSource = serde_json::from_str(r#"{"source": "file", "path": "p.json"}"#).unwrap();
        assert_eq!(p, PlantSource::File { path: "p.json".into() });
        let p: PlantSource = serde_json::from_str(r#"{"source": "synthetic"}"#).unwrap();
        assert_eq!(p, PlantSource::Synthetic);
    }

    #[test]
    fn servo_is_converted_to_sigma_units() {
        let l = LoadedConfig::defaults();
        let s = l.sim_config().servo.unwrap();
        assert_eq!(s.gain, 1.0);
        assert!((s.slew_limit - (60.0 / 0.11) * 0.087 / 60.0).abs() < 1e-12);
    }
}
