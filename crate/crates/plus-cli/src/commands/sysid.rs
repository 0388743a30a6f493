//! `plus sysid`: multistep record generation and transfer-function fits.

use plus_core::sysid::{fit, fit_all, generate_multistep, simulate_fit, FitReport, ModelStructure, ResponseRecord};

use super::emit;
use crate::io::{read_record, write_json, write_traces};
use crate::{CliError, Context, StructureArg, SysidArgs};

fn structures(arg: StructureArg) -> Vec<ModelStructure> {
    match arg {
        StructureArg::All => ModelStructure::ALL.to_vec(),
        StructureArg::FirstOrder => vec![ModelStructure::FirstOrder],
        StructureArg::SecondOrder => vec![ModelStructure::SecondOrder],
        StructureArg::SecondOrderDelay => vec![ModelStructure::SecondOrderDelay],
    }
}

fn write_fits(path: &std::path::Path, fits: &[FitReport]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "structure",
        "gain",
        "time_constant_s",
        "zeta",
        "omega_n_rad_s",
        "omega_n_hz",
        "delay_s",
        "accuracy_pct",
        "sse",
        "converged",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for f in fits {
        let p = &f.parameters;
        w.write_record([
            f.structure.name().to_string(),
            p.gain.to_string(),
            opt(p.time_constant),
            opt(p.zeta),
            opt(p.omega_n),
            opt(p.natural_frequency_hz()),
            opt(p.delay),
            f.accuracy.to_string(),
            f.sse.to_string(),
            f.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(ctx: &mut Context, args: &SysidArgs) -> Result<(), CliError> {
    ctx.loaded.validate()?;
    let s = ctx.loaded.config.sysid;
    let record: ResponseRecord = match &args.record {
        Some(p) => read_record(p, s.sample_rate).map_err(|e| CliError::Usage(format!("{e:#}")))?,
        None => {
            let servo = ctx.loaded.config.actuator.servo;
            generate_multistep(s.amplitude, s.steps, s.dwell, &servo, s.noise_std, ctx.seed, s.sample_rate)
                .map_err(|e| CliError::Config(ctx.loaded.error("sysid", e.to_string())))?
        }
    };
    emit(ctx, "record.csv", |p| write_traces(p, &record.samples, &[]))?;

    // fit failures are all about the data (degenerate or malformed record)
    let fits = match args.structure {
        StructureArg::All => fit_all(&record, &s.fit),
        one => structures(one).into_iter().map(|m| fit(&record, m, &s.fit)).collect(),
    }
    .map_err(|e| match &args.record {
        Some(p) => CliError::Usage(format!("{}: {e}", p.display())),
        None => CliError::Config(ctx.loaded.error("sysid", e.to_string())),
    })?;
    emit(ctx, "sysid_fits.csv", |p| write_fits(p, &fits))?;
    emit(ctx, "sysid_fits.json", |p| write_json(p, &fits))?;

    let commands = record.commands();
    let dt = record.dt();
    let columns: Vec<(&str, Vec<f64>)> =
        fits.iter().map(|f| (f.structure.name(), simulate_fit(&f.parameters, &commands, dt))).collect();
    emit(ctx, "sysid_traces.csv", |p| write_traces(p, &record.samples, &columns))?;

    println!("{} samples at {} Hz", record.samples.len(), record.sample_rate);
    for f in &fits {
        let p = &f.parameters;
        let mut line = format!("{:<20} accuracy {:7.3} %  K = {:.4}", f.structure.name(), f.accuracy, p.gain);
        if let Some(t) = p.time_constant {
            line += &format!("  tau = {t:.4} s");
        }
        if let (Some(z), Some(hz)) = (p.zeta, p.natural_frequency_hz()) {
            line += &format!("  zeta = {z:.4}  f_n = {hz:.3} Hz");
        }
        if let Some(d) = p.delay {
            line += &format!("  T_d = {d:.4} s");
        }
        println!("{line}");
    }
    Ok(())
}
