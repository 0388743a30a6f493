//! `plus wavelength-map`: phugoid wavelength of the synthetic aircraft over
//! wingspan × chord at σ ∈ {−σ_max, 0, +σ_max}.

use plus_core::sim::{wavelength_surface, WavelengthPoint};

use super::emit;
use crate::{CliError, Context};

fn write_map(path: &std::path::Path, points: &[WavelengthPoint]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["wingspan_m", "chord_m", "wing_area_m2", "sigma", "lambda_ph_m"])?;
    for p in points {
        w.serialize((p.wingspan, p.chord, p.wingspan * p.chord, p.sigma, p.wavelength))?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    ctx.loaded.validate()?;
    let a = &ctx.loaded.config.aircraft;
    let m = &ctx.loaded.config.wavelength_map;
    let airfoil = a.airfoil().map_err(|e| CliError::Config(ctx.loaded.error("aircraft.airfoil", e.to_string())))?;
    let sigmas = [-m.sigma_max, 0.0, m.sigma_max];
    let points = wavelength_surface(
        &airfoil,
        a.morph_mode,
        &a.calibration,
        &a.geometry(),
        &m.wingspans,
        &m.chords,
        &sigmas,
        &a.derivatives,
    )
    .map_err(CliError::runtime)?;
    emit(ctx, "wavelength_map.csv", |p| write_map(p, &points))?;
    println!("{:>8} {:>8} {:>8} {:>10}", "span m", "chord m", "sigma", "lambda m");
    for p in &points {
        println!("{:>8.3} {:>8.3} {:>8.3} {:>10.2}", p.wingspan, p.chord, p.sigma, p.wavelength);
    }
    Ok(())
}
