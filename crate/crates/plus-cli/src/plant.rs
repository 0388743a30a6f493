//! Builds the plant and matching-controller inputs from the config's plant
//! source.

use plus_core::aero::{
    derive_stability_matrices, resolved_derivatives, synthetic_coefficient_model, CoefficientModel, Plant,
    StabilityDerivatives, TableModel, TrimState,
};
use plus_core::controller::SensitivityModel;

use crate::config::{LoadedConfig, PlantSource};
use crate::io::{read_plant, read_polar};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct PlantSetup {
    pub plant: Plant,
    pub derivatives: StabilityDerivatives,
    pub sensitivity: SensitivityModel,
    pub trim: Option<TrimState>,
    pub description: String,
}

/// Z_u sampled on σ nodes of a coefficient model; nodes where the
/// derivative cannot be resolved (e.g. at a table edge) are skipped.
fn z_u_curve<M: CoefficientModel>(
    model: &M,
    loaded: &LoadedConfig,
    trim: &TrimState,
    sigmas: &[f64],
) -> Option<SensitivityModel> {
    let a = &loaded.config.aircraft;
    let geom = a.geometry().with_trim_alpha(trim.alpha);
    let samples: Vec<(f64, f64)> = sigmas
        .iter()
        .filter_map(|&s| resolved_derivatives(model, &geom, trim, s, &a.derivatives).ok().map(|d| (s, d.z_u)))
        .collect();
    (samples.len() >= 2).then_some(SensitivityModel::Curve { samples })
}

pub fn build_plant(loaded: &LoadedConfig) -> Result<PlantSetup, CliError> {
    let c = &loaded.config;
    let a = &c.aircraft;
    let geom = a.geometry();
    let constant = |plant: Plant, description: String| {
        let d = plant.derivatives();
        PlantSetup {
            plant,
            derivatives: d,
            sensitivity: SensitivityModel::Constant { z_u_sigma: d.z_u_sigma },
            trim: None,
            description,
        }
    };
    match &c.plant {
        PlantSource::Reference => {
            Ok(constant(Plant::reference(a.derivatives.altitude_row), "reference trim plant (built in)".into()))
        }
        PlantSource::File { path } => {
            let p = loaded.resolve(path);
            let file = read_plant(&p).map_err(|e| CliError::Config(loaded.error("plant.path", format!("{e:#}"))))?;
            let plant = file
                .plant()
                .map_err(|e| CliError::Config(loaded.error("plant.path", format!("{}: {e:#}", p.display()))))?;
            Ok(constant(plant, format!("plant file {}", p.display())))
        }
        PlantSource::Synthetic => {
            let af = a.airfoil().map_err(|e| CliError::Config(loaded.error("aircraft.airfoil", e.to_string())))?;
            let model = synthetic_coefficient_model(&af, a.morph_mode, &a.calibration, &geom)
                .map_err(|e| CliError::Config(loaded.error("aircraft", e.to_string())))?;
            let lin = derive_stability_matrices(&model, &geom, &a.derivatives).map_err(CliError::runtime)?;
            let (lo, hi) = (c.controller.sigma_lo, c.controller.sigma_hi);
            let nodes: Vec<f64> = (0..=8).map(|k| lo + (hi - lo) * k as f64 / 8.0).collect();
            let sensitivity = z_u_curve(&model, loaded, &lin.trim, &nodes)
                .unwrap_or(SensitivityModel::Constant { z_u_sigma: lin.derivatives.z_u_sigma });
            Ok(PlantSetup {
                plant: lin.plant,
                derivatives: lin.derivatives,
                sensitivity,
                trim: Some(lin.trim),
                description: format!("synthetic {} ({:?} morphing)", a.airfoil, a.morph_mode),
            })
        }
        PlantSource::Polar { path, speed_slopes } => {
            let p = loaded.resolve(path);
            let table = read_polar(&p).map_err(|e| CliError::Config(loaded.error("plant.path", format!("{e:#}"))))?;
            let nodes = table.sigmas().to_vec();
            let model = TableModel { table, speed: *speed_slopes };
            let lin = derive_stability_matrices(&model, &geom, &a.derivatives).map_err(CliError::runtime)?;
            let sensitivity = z_u_curve(&model, loaded, &lin.trim, &nodes)
                .unwrap_or(SensitivityModel::Constant { z_u_sigma: lin.derivatives.z_u_sigma });
            Ok(PlantSetup {
                plant: lin.plant,
                derivatives: lin.derivatives,
                sensitivity,
                trim: Some(lin.trim),
                description: format!("polar table {}", p.display()),
            })
        }
    }
}
