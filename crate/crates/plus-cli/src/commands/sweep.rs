//! `plus sweep`: the parallel parameter sweep with resumable partial output.
//!
//! Finished cells are appended to `sweep.partial.jsonl` (one JSON line per
//! cell after a header line describing the run). `--resume` reloads the
//! cells already there and runs only the rest; the final CSVs are written
//! from the union, sorted by (cell, trial), so they do not depend on the
//! worker count or on where a run was interrupted.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context as _;
use plus_core::sweep::{
    aggregate_trends, run_cell, sort_results, wing_area_trend, AircraftFamily, CellKey, SweepConfig, SweepGrid,
    SweepResult, Trend, TrialMetrics,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::emit;
use crate::io::{write_json, write_sweep, write_sweep_failures, write_trends};
use crate::{CliError, Context, SweepArgs};

pub const PARTIAL: &str = "sweep.partial.jsonl";

/// First line of the partial file; a resume must match it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PartialHeader {
    family: AircraftFamily,
    config: SweepConfig,
    grid: SweepGrid,
}

/// `SweepResult` with the NaN wavelength of an unprepared cell as `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredResult {
    cell: usize,
    key: CellKey,
    trial: usize,
    wavelength: Option<f64>,
    outcome: Result<TrialMetrics, String>,
}

impl From<&SweepResult> for StoredResult {
    fn from(r: &SweepResult) -> Self {
        Self {
            cell: r.cell,
            key: r.key,
            trial: r.trial,
            wavelength: r.wavelength.is_finite().then_some(r.wavelength),
            outcome: r.outcome.clone(),
        }
    }
}

impl From<StoredResult> for SweepResult {
    fn from(r: StoredResult) -> Self {
        Self {
            cell: r.cell,
            key: r.key,
            trial: r.trial,
            wavelength: r.wavelength.unwrap_or(f64::NAN),
            outcome: r.outcome,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct TrendVerdict {
    pylon_span: f64,
    sag_fraction: f64,
    trend: Trend,
}

#[derive(Debug, Clone, Serialize)]
struct SweepSummary {
    cells: usize,
    cases: usize,
    failures: usize,
    resumed_cells: usize,
    /// direction of max |ΔC_L,m| with wing area per pylon span and sag
    wing_area_trends: Vec<TrendVerdict>,
}

/// Cells already in the partial file. A truncated trailing line (an
/// interrupted write) is dropped; any other malformed content is an error.
fn load_partial(path: &Path, header: &PartialHeader) -> Result<BTreeMap<usize, Vec<SweepResult>>, CliError> {
    let f = File::open(path).map_err(|e| CliError::Usage(format!("cannot resume from {}: {e}", path.display())))?;
    let lines: Vec<String> = BufReader::new(f)
        .lines()
        .collect::<Result<_, _>>()
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Runtime)?;
    let Some(first) = lines.first() else {
        return Ok(BTreeMap::new());
    };
    let stored: PartialHeader = serde_json::from_str(first)
        .map_err(|e| CliError::Usage(format!("{}:1: not a sweep partial file: {e}", path.display())))?;
    if &stored != header {
        return Err(CliError::Usage(format!(
            "{} was written by a different sweep configuration or seed; remove it or rerun without --resume",
            path.display()
        )));
    }
    let mut done = BTreeMap::new();
    let last = lines.len() - 1;
    for (i, line) in lines.iter().enumerate().skip(1) {
        match serde_json::from_str::<Vec<StoredResult>>(line) {
            Ok(rows) if !rows.is_empty() => {
                let rows: Vec<SweepResult> = rows.into_iter().map(Into::into).collect();
                done.insert(rows[0].cell, rows);
            }
            Ok(_) => {}
            Err(_) if i == last => {}
            Err(e) => return Err(CliError::Usage(format!("{}:{}: corrupt partial line: {e}", path.display(), i + 1))),
        }
    }
    Ok(done)
}

/// Rewrites the partial file with the header and the cells in `done`.
fn rewrite_partial(
    path: &Path,
    header: &PartialHeader,
    done: &BTreeMap<usize, Vec<SweepResult>>,
) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    writeln!(w, "{}", serde_json::to_string(header)?)?;
    for rows in done.values() {
        append_cell(&mut w, rows)?;
    }
    w.flush()?;
    Ok(())
}

fn append_cell(w: &mut impl Write, rows: &[SweepResult]) -> anyhow::Result<()> {
    let stored: Vec<StoredResult> = rows.iter().map(Into::into).collect();
    writeln!(w, "{}", serde_json::to_string(&stored)?)?;
    Ok(())
}

pub fn run(ctx: &mut Context, args: &SweepArgs) -> Result<(), CliError> {
    ctx.loaded.validate()?;
    let family = ctx
        .loaded
        .config
        .aircraft
        .family()
        .map_err(|e| CliError::Config(ctx.loaded.error("aircraft", e.to_string())))?;
    let cfg = ctx.loaded.sweep_config();
    let grid = ctx.loaded.config.sweep.grid.clone();
    let header = PartialHeader { family: family.clone(), config: cfg.clone(), grid: grid.clone() };

    let partial = ctx.out.path(PARTIAL);
    let mut done = if args.resume && partial.exists() { load_partial(&partial, &header)? } else { BTreeMap::new() };
    rewrite_partial(&partial, &header, &done).map_err(CliError::Runtime)?;
    ctx.out.register(PARTIAL);
    let resumed = done.len();

    let cells = grid.cells();
    let total = cells.len();
    let mut todo: Vec<(usize, CellKey)> =
        cells.iter().copied().enumerate().filter(|(i, _)| !done.contains_key(i)).collect();
    if let Some(n) = args.stop_after_cells {
        todo.truncate(n);
    }
    eprintln!(
        "sweep: {} cells x {} trials on {} worker(s); {} cell(s) already done",
        total, grid.trials_per_cell, ctx.jobs, resumed
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs)
        .build()
        .context("cannot start the worker pool")
        .map_err(CliError::Runtime)?;
    let mut out = BufWriter::new(
        OpenOptions::new()
            .append(true)
            .open(&partial)
            .with_context(|| format!("cannot append to {}", partial.display()))
            .map_err(CliError::Runtime)?,
    );
    let chunk = (ctx.jobs * 4).max(8);
    for batch in todo.chunks(chunk) {
        let results: Vec<Vec<SweepResult>> =
            pool.install(|| batch.par_iter().map(|&(i, key)| run_cell(&family, &cfg, &grid, i, key)).collect());
        for rows in results {
            append_cell(&mut out, &rows).map_err(CliError::Runtime)?;
            done.insert(rows[0].cell, rows);
        }
        out.flush().context("writing partial results").map_err(CliError::Runtime)?;
        eprintln!("sweep: {}/{} cells", done.len(), total);
    }
    drop(out);

    if done.len() < total {
        eprintln!("sweep: stopped with {}/{} cells; rerun with --resume to finish", done.len(), total);
        return Ok(());
    }

    let mut results: Vec<SweepResult> = done.into_values().flatten().collect();
    sort_results(&mut results);
    let failures = results.iter().filter(|r| r.outcome.is_err()).count();
    emit(ctx, "sweep.csv", |p| write_sweep(p, &results))?;
    emit(ctx, "sweep_failures.csv", |p| write_sweep_failures(p, &results))?;
    let tables = aggregate_trends(&results);
    emit(ctx, "trends.csv", |p| write_trends(p, &tables))?;
    let wing_area_trends = tables
        .iter()
        .flat_map(|t| {
            grid.sag_fractions.iter().map(move |&s| TrendVerdict {
                pylon_span: t.pylon_span,
                sag_fraction: s,
                trend: wing_area_trend(t, s),
            })
        })
        .collect();
    let summary =
        SweepSummary { cells: total, cases: results.len(), failures, resumed_cells: resumed, wing_area_trends };
    emit(ctx, "sweep_summary.json", |p| write_json(p, &summary))?;
    println!("sweep: {} cases, {} failed; results in {}", results.len(), failures, ctx.out.root().display());
    Ok(())
}
