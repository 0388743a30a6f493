//! `plus env`: catenary, powerline class table and conductor field queries.

use plus_core::powerline::{wire_magnetic_field, CatenarySpec, POWERLINE_CLASSES};
use serde::Serialize;

use super::emit;
use crate::io::{write_classes, write_json};
use crate::{CliError, Context, EnvArgs, EnvQuery};

#[derive(Debug, Clone, Serialize)]
pub struct CatenaryReport {
    pub span_length: f64,
    pub sag_fraction: f64,
    pub tower_height: f64,
    /// m
    pub a: f64,
    /// m
    pub sag_depth: f64,
    /// 1/m
    pub midspan_frequency: f64,
}

fn write_profile(path: &std::path::Path, span: &CatenarySpec, points: usize) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "wire_height", "slope", "spatial_frequency"])?;
    for k in 0..points {
        let x = span.span_length * k as f64 / (points - 1) as f64;
        w.serialize((x, span.wire_height(x)?, span.slope(x)?, span.local_spatial_frequency(x)?))?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(ctx: &mut Context, args: &EnvArgs) -> Result<(), CliError> {
    match &args.query {
        &EnvQuery::Catenary { span, sag, height, points } => {
            if points < 2 {
                return Err(CliError::Usage("--points must be at least 2".into()));
            }
            let c = CatenarySpec::from_sag(span, sag / 100.0, height).map_err(|e| CliError::Usage(e.to_string()))?;
            let report = CatenaryReport {
                span_length: span,
                sag_fraction: sag / 100.0,
                tower_height: height,
                a: c.a,
                sag_depth: c.sag_depth(),
                midspan_frequency: c.local_spatial_frequency(0.5 * span).map_err(CliError::runtime)?,
            };
            emit(ctx, "catenary.csv", |p| write_profile(p, &c, points))?;
            emit(ctx, "catenary.json", |p| write_json(p, &report))?;
            println!("a = {:.4} m", report.a);
            println!("sag depth = {:.4} m", report.sag_depth);
            println!("midspan spatial frequency = {:.6} 1/m", report.midspan_frequency);
        }
        EnvQuery::Classes => {
            emit(ctx, "powerline_classes.csv", write_classes)?;
            let show = |r: plus_core::powerline::Range| match r.max {
                Some(m) => format!("{}-{}", r.min, m),
                None => format!(">{}", r.min),
            };
            println!("{:<6} {:<16} {:>12} {:>10} {:>12}", "class", "name", "voltage kV", "height m", "spacing m");
            for c in POWERLINE_CLASSES {
                println!(
                    "{:<6} {:<16} {:>12} {:>10} {:>12}",
                    c.label.label(),
                    c.label.name(),
                    show(c.voltage_kv),
                    show(c.height_m),
                    show(c.spacing_m)
                );
            }
        }
        &EnvQuery::Field { current, distance } => {
            let b = wire_magnetic_field(current, distance).map_err(|e| CliError::Usage(e.to_string()))?;
            #[derive(Serialize)]
            struct Field {
                current: f64,
                distance: f64,
                flux_density_t: f64,
            }
            emit(ctx, "field.json", |p| write_json(p, &Field { current, distance, flux_density_t: b }))?;
            println!("B = {b:.6e} T ({:.3} uT)", b * 1e6);
        }
    }
    Ok(())
}
