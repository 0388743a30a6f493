//! File formats: CSV artifacts, the polar-table reader, the plant file and
//! response records.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use plus_core::actuator::TraceSample;
use plus_core::aero::{AltitudeRow, Plant, PolarRow, PolarTable};
use plus_core::controller::MorphSchedule;
use plus_core::math::Mat5;
use plus_core::powerline::POWERLINE_CLASSES;
use plus_core::sim::TrajectorySample;
use plus_core::sweep::{SweepResult, TrendTable};
use plus_core::sysid::{ResponseRecord, SysidError};
use serde::{Deserialize, Serialize};

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub const TRAJECTORY_HEADER: [&str; 11] =
    ["t", "x", "u", "w", "q", "theta", "h", "sigma_cmd", "sigma_achieved", "wire_height", "clearance"];

pub fn write_trajectory(path: &Path, traj: &[TrajectorySample]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for s in traj {
        let st = &s.state;
        w.serialize((
            st.t,
            st.x,
            st.u,
            st.w,
            st.q,
            st.theta,
            st.h,
            s.sigma_cmd,
            s.sigma_achieved,
            s.wire_height,
            s.clearance,
        ))?;
    }
    w.flush()?;
    Ok(())
}

/// Commands in order with a `reset` row closing every span.
pub fn write_schedule(path: &Path, schedule: &MorphSchedule) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["span", "x", "sigma", "saturated", "reset"])?;
    for e in schedule.entries() {
        w.serialize((e.span, e.x, e.sigma, e.saturated as u8, e.reset as u8))?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 9] = [
    "span_m",
    "chord_m",
    "pylon_span_m",
    "sag_pct",
    "trial",
    "delta_CL_m",
    "clearance_frac",
    "lambda_ph_m",
    "saturated_samples",
];

/// One row per trial; failed trials leave the measurement columns empty and
/// are listed in the failures file.
pub fn write_sweep(path: &Path, results: &[SweepResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for r in results {
        let k = &r.key;
        let opt = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
        let (d, c, s) = match &r.outcome {
            Ok(m) => (m.delta_cl.to_string(), m.clearance_fraction.to_string(), m.saturated_samples.to_string()),
            Err(_) => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            k.wingspan.to_string(),
            k.chord.to_string(),
            k.pylon_span.to_string(),
            (k.sag_fraction * 100.0).to_string(),
            r.trial.to_string(),
            d,
            c,
            opt(r.wavelength),
            s,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_failures(path: &Path, results: &[SweepResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["cell", "trial", "error"])?;
    for r in results {
        if let Err(e) = &r.outcome {
            w.serialize((r.cell, r.trial, e))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trends(path: &Path, tables: &[TrendTable]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "pylon_span_m",
        "span_m",
        "chord_m",
        "sag_pct",
        "trials",
        "failures",
        "max_abs_delta_CL_m",
        "mean_delta_CL_m",
        "mean_clearance_frac",
        "lambda_ph_m",
        "lambda_over_pylon_span",
    ])?;
    for t in tables {
        for r in &t.rows {
            w.serialize((
                t.pylon_span,
                r.wingspan,
                r.chord,
                r.sag_fraction * 100.0,
                r.trials,
                r.failures,
                r.max_abs_delta_cl,
                r.mean_delta_cl,
                r.mean_clearance_fraction,
                r.wavelength,
                r.wavelength_ratio,
            ))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `(t, command, output)` plus optional named model columns.
pub fn write_traces(path: &Path, samples: &[TraceSample], extra: &[(&str, Vec<f64>)]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t", "command", "output"];
    header.extend(extra.iter().map(|(n, _)| *n));
    w.write_record(&header)?;
    for (i, s) in samples.iter().enumerate() {
        let mut row = vec![s.t.to_string(), s.command.to_string(), s.output.to_string()];
        row.extend(extra.iter().map(|(_, v)| v[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_record(path: &Path, sample_rate: f64) -> Result<ResponseRecord> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut samples = Vec::new();
    for row in r.deserialize::<(f64, f64, f64)>() {
        let (t, command, output) = row.with_context(|| format!("{}", path.display()))?;
        samples.push(TraceSample { t, command, output });
    }
    ResponseRecord::new(sample_rate, samples).map_err(|e: SysidError| anyhow::anyhow!("{}: {e}", path.display()))
}

/// The powerline class table.
pub fn write_classes(path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "label",
        "name",
        "voltage_kv_min",
        "voltage_kv_max",
        "height_m_min",
        "height_m_max",
        "spacing_m_min",
        "spacing_m_max",
    ])?;
    let max = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in POWERLINE_CLASSES {
        w.write_record([
            c.label.label().to_string(),
            c.label.name().to_string(),
            c.voltage_kv.min.to_string(),
            max(c.voltage_kv.max),
            c.height_m.min.to_string(),
            max(c.height_m.max),
            c.spacing_m.min.to_string(),
            max(c.spacing_m.max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const POLAR_HEADER: [&str; 5] = ["sigma", "alpha_deg", "CL", "CD", "Cm"];

/// Reads a polar table CSV (`sigma,alpha_deg,CL,CD,Cm`, σ-major). Errors
/// name the offending source line.
pub fn read_polar(path: &Path) -> Result<PolarTable> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != POLAR_HEADER {
        bail!("{}:1: expected header `{}`, found `{}`", path.display(), POLAR_HEADER.join(","), header.join(","));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.with_context(|| path.display().to_string())?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 5 {
            bail!("{}:{line}: expected 5 fields, found {}", path.display(), rec.len());
        }
        let mut v = [0.0; 5];
        for (i, f) in rec.iter().enumerate() {
            v[i] = f.parse().with_context(|| {
                format!("{}:{line}: column `{}`: `{f}` is not a number", path.display(), POLAR_HEADER[i])
            })?;
        }
        rows.push(PolarRow { sigma: v[0], alpha_deg: v[1], cl: v[2], cd: v[3], cm: v[4], line });
    }
    let family = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    PolarTable::from_rows(&family, &rows).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

pub fn write_polar(path: &Path, table: &PolarTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(POLAR_HEADER)?;
    for r in table.rows() {
        w.serialize((r.sigma, r.alpha_deg, r.cl, r.cd, r.cm))?;
    }
    w.flush()?;
    Ok(())
}

/// Plant file: `A` rows for `(u, w, q, θ)` and optionally `h`, `B_σ` rows
/// for `(u, w, q)` and optionally the zero kinematic rows. A missing h-row
/// is filled from `altitude_row` at `(theta0, u0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantFile {
    #[serde(default)]
    pub description: String,
    pub u0: f64,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default)]
    pub altitude_row: AltitudeRow,
    pub a: Vec<[f64; 5]>,
    pub b_sigma: Vec<[f64; 5]>,
}

impl PlantFile {
    pub fn plant(&self) -> Result<Plant> {
        if !(4..=5).contains(&self.a.len()) {
            bail!("`a` needs 4 or 5 rows, found {}", self.a.len());
        }
        if !(3..=5).contains(&self.b_sigma.len()) {
            bail!("`b_sigma` needs 3 to 5 rows, found {}", self.b_sigma.len());
        }
        let mut a: Mat5 = [[0.0; 5]; 5];
        a[..self.a.len()].copy_from_slice(&self.a);
        if self.a.len() == 4 {
            a[4] = self.altitude_row.row(self.theta0, self.u0);
        }
        let mut b: Mat5 = [[0.0; 5]; 5];
        b[..self.b_sigma.len()].copy_from_slice(&self.b_sigma);
        Ok(Plant::new(a, b)?)
    }
}

pub fn read_plant(path: &Path) -> Result<PlantFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_file_fills_altitude_row() {
        let p = Plant::reference(AltitudeRow::ClimbRate);
        let f = PlantFile {
            description: String::new(),
            u0: 25.0,
            theta0: 0.0,
            altitude_row: AltitudeRow::ClimbRate,
            a: p.a[..4].to_vec(),
            b_sigma: p.b_sigma[..3].to_vec(),
        };
        assert_eq!(f.plant().unwrap(), p);
        let g = PlantFile { altitude_row: AltitudeRow::RangeRate, ..f.clone() };
        assert_eq!(g.plant().unwrap(), Plant::reference(AltitudeRow::RangeRate));
        let bad = PlantFile { a: p.a[..2].to_vec(), ..f };
        assert!(bad.plant().is_err());
    }

    #[test]
    fn polar_round_trip_and_line_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let mut text = String::from("sigma,alpha_deg,CL,CD,Cm\n");
        for s in [-0.1, 0.0, 0.1] {
            for a in [-2.0, 0.0, 2.0, 4.0] {
                text.push_str(&format!("{s},{a},{},{},{}\n", 0.2 + 0.1 * a + s, 0.02, -0.05));
            }
        }
        std::fs::write(&path, &text).unwrap();
        let t = read_polar(&path).unwrap();
        assert_eq!(t.sigmas(), [-0.1, 0.0, 0.1]);
        let out = dir.path().join("q.csv");
        write_polar(&out, &t).unwrap();
        assert_eq!(read_polar(&out).unwrap().rows(), t.rows());

        std::fs::write(&path, text.replace("\n0.1,2,", "\n0.1,x,")).unwrap();
        let e = read_polar(&path).unwrap_err().to_string();
        assert!(e.contains(":12:") && e.contains("alpha_deg"), "{e}");
        std::fs::write(&path, "sigma,alpha,CL,CD,Cm\n").unwrap();
        assert!(read_polar(&path).unwrap_err().to_string().contains("expected header"));
    }
}
