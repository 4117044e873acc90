//! The simulate, track, and evaluate commands.

use crate::config::{FilterKind, OutputFormat, RunConfig};
use crate::io::{parse_gaze_csv, write_series_csv, write_trace_csv, write_track_csv, TrackSummary};
use anyhow::{bail, Context, Result};
use gazeline_core::{
    simulate_linear_gaussian, simulate_reading, track_page, track_page_regular, ModelConfig,
    PageTrace, SimConfig, SimMode, StateVector, TrackResult, X_START,
};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Corpus shape for `simulate`.
#[derive(Debug, Clone, Copy)]
pub struct SimulateSpec {
    pub pages: usize,
    pub sim: SimConfig,
}

fn simulate_one(run: &RunConfig, sim: &SimConfig) -> Result<gazeline_core::SimulatedPage> {
    let page = match sim.mode {
        SimMode::Reading => simulate_reading(sim)?,
        SimMode::LinearGaussian => {
            let model = ModelConfig {
                delta_t: sim.delta_t,
                sigma_x: sim.sigma_x,
                sigma_y: sim.sigma_y,
                ..run.model
            };
            model.validate()?;
            let n = ((sim.n_lines as f64 * sim.seconds_per_line / sim.delta_t) as usize).max(2);
            let x0 = StateVector::new(X_START, run.model.reinit_x_velocity, 0.5, 0.0);
            simulate_linear_gaussian(
                sim,
                &model.process_model()?,
                &model.measurement_model()?,
                n,
                &x0,
            )?
        }
    };
    Ok(page)
}

/// Writes a corpus of `pages` simulated files, `page_000.csv` onward,
/// with per-page seeds derived from the master seed.
pub fn cmd_simulate(run: &RunConfig, spec: &SimulateSpec) -> Result<()> {
    if spec.pages < 1 {
        bail!("pages must be at least 1");
    }
    spec.sim.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    let out_dir = run
        .output
        .as_ref()
        .context("no output directory given (use --output)")?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for i in 0..spec.pages {
        let mut sim = spec.sim;
        sim.seed = spec.sim.seed.wrapping_add(i as u64);
        let page_id = format!("page_{i:03}");
        let mut page = simulate_one(run, &sim)?;
        page.trace.page_id = page_id.clone();
        let path = out_dir.join(format!("{page_id}.csv"));
        write_trace_csv(&path, &page.trace)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn track_with(run: &RunConfig, trace: &PageTrace) -> Result<TrackResult> {
    let result = match run.filter {
        FilterKind::Slip => track_page(trace, &run.model)?,
        FilterKind::Regular => track_page_regular(trace, &run.model)?,
    };
    if let Some(labels) = &trace.labels {
        let max_pred = result.predicted_lines.last().copied().unwrap_or(1);
        let max_truth = labels.iter().copied().max().unwrap_or(1);
        if max_pred != max_truth {
            log::warn!(
                "{}: detected {max_pred} line(s) but labels span {max_truth}",
                trace.page_id
            );
        }
    }
    Ok(result)
}

/// Tracks one gaze CSV: per-sample output to `--output` when given,
/// summary to stdout in the configured format.
pub fn cmd_track(run: &RunConfig) -> Result<()> {
    let input = run
        .input
        .as_ref()
        .context("no input file given (use --input)")?;
    let (trace, dropped) = parse_gaze_csv(input, &run.screen)?;
    if dropped > 0 {
        log::warn!(
            "{}: dropped {dropped} row(s) with unusable fields",
            input.display()
        );
    }
    let result = track_with(run, &trace)?;
    if let Some(out) = &run.output {
        write_track_csv(out, &trace, &result)?;
    }
    let summary = TrackSummary::from_result(&trace.page_id, &result);
    match run.format {
        OutputFormat::Json => println!("{}", summary.to_json()?),
        OutputFormat::Csv => print!("{}", summary.to_csv()),
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct EvalRow {
    page_id: String,
    accuracy: f64,
    n_resets: usize,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    pages: Vec<EvalRow>,
    mean_accuracy: f64,
}

fn evaluate_one(path: &Path, run: &RunConfig, out_dir: &Path) -> Result<EvalRow> {
    let (trace, dropped) = parse_gaze_csv(path, &run.screen)?;
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} row(s)", path.display());
    }
    let accuracy_needed = trace.labels.is_some();
    if !accuracy_needed {
        bail!("no line labels");
    }
    let result = track_with(run, &trace)?;
    write_series_csv(
        &out_dir.join(format!("{}_series.csv", trace.page_id)),
        &trace,
        &result,
    )?;
    Ok(EvalRow {
        page_id: trace.page_id.clone(),
        accuracy: result.accuracy.expect("labeled trace has accuracy"),
        n_resets: result.reset_indices.len(),
    })
}

/// Tracks every labeled `.csv` in the input directory, writes per-page
/// velocity/NIS series and an accuracy table to the output directory,
/// and reports the corpus mean. Unreadable pages are skipped with a
/// warning; the command fails only if every page fails.
pub fn cmd_evaluate(run: &RunConfig) -> Result<()> {
    let input = run
        .input
        .as_ref()
        .context("no input directory given (use --input)")?;
    let out_dir = run
        .output
        .as_ref()
        .context("no output directory given (use --output)")?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .csv files in {}", input.display());
    }
    let mut rows = Vec::new();
    for path in &files {
        match evaluate_one(path, run, out_dir) {
            Ok(row) => rows.push(row),
            Err(e) => log::warn!("skipping {}: {e:#}", path.display()),
        }
    }
    if rows.is_empty() {
        bail!("all {} page file(s) failed", files.len());
    }
    let mean = rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64;
    match run.format {
        OutputFormat::Csv => {
            let mut table = String::from("page_id,accuracy,n_resets\n");
            for r in &rows {
                table.push_str(&format!("{},{},{}\n", r.page_id, r.accuracy, r.n_resets));
            }
            fs::write(out_dir.join("accuracy.csv"), table)?;
            println!("mean_accuracy,{mean}");
        }
        OutputFormat::Json => {
            let report = EvalReport {
                pages: rows,
                mean_accuracy: mean,
            };
            fs::write(
                out_dir.join("accuracy.json"),
                serde_json::to_string_pretty(&report)?,
            )?;
            println!("{{\"mean_accuracy\": {mean}}}");
        }
    }
    Ok(())
}
