//! Gaze CSV reading and writing, track output, and summary records.
//!
//! Interchange CSV layout: header `t,x,y` with an optional `line`
//! column; UTF-8, `\n` line endings, shortest round-trip float
//! formatting (lossless through parse).

use crate::config::ScreenGeometry;
use anyhow::{bail, Context, Result};
use gazeline_core::{LineStat, Measurement, PageTrace, TrackResult};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Reads a gaze CSV into a trace, converting pixel coordinates to page
/// units via the text-region rectangle. Rows with non-finite or
/// unparseable coordinates are dropped; the count is returned alongside
/// the trace. Missing required columns and non-monotone timestamps are
/// errors.
pub fn parse_gaze_csv(path: &Path, screen: &ScreenGeometry) -> Result<(PageTrace, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?;
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let col_t = find("t");
    let col_x = find("x");
    let col_y = find("y");
    let col_line = find("line");
    let missing: Vec<&str> = [("t", col_t), ("x", col_x), ("y", col_y)]
        .iter()
        .filter(|(_, c)| c.is_none())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        bail!(
            "{}: missing required column(s): {}",
            path.display(),
            missing.join(", ")
        );
    }
    let (col_t, col_x, col_y) = (col_t.unwrap(), col_x.unwrap(), col_y.unwrap());

    let mut samples = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    let mut dropped = 0usize;
    let mut prev: Option<(f64, u64)> = None;
    for (idx, record) in reader.records().enumerate() {
        let row = idx as u64 + 2;
        let record = record.with_context(|| format!("{}: row {row}", path.display()))?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let t: f64 = match field(col_t).parse() {
            Ok(v) if f64::is_finite(v) => v,
            _ => {
                dropped += 1;
                continue;
            }
        };
        let x_raw: f64 = match field(col_x).parse() {
            Ok(v) if f64::is_finite(v) => v,
            _ => {
                dropped += 1;
                continue;
            }
        };
        let y_raw: f64 = match field(col_y).parse() {
            Ok(v) if f64::is_finite(v) => v,
            _ => {
                dropped += 1;
                continue;
            }
        };
        let line: Option<u32> = match col_line {
            Some(c) => match field(c).parse() {
                Ok(v) => Some(v),
                Err(_) => {
                    dropped += 1;
                    continue;
                }
            },
            None => None,
        };
        if let Some((pt, prow)) = prev {
            if t <= pt {
                bail!(
                    "{}: non-monotone timestamp at row {row}: {t} after {pt} (row {prow})",
                    path.display()
                );
            }
        }
        prev = Some((t, row));
        let (x, y) = screen.normalize(x_raw, y_raw);
        samples.push(Measurement::new(t, x, y));
        if let Some(l) = line {
            labels.push(l);
        }
    }
    if col_line.is_some() && labels.len() != samples.len() {
        bail!(
            "{}: line column present but not on every kept row",
            path.display()
        );
    }
    let page_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "page".to_string());
    let trace = PageTrace::new(samples, col_line.map(|_| labels), page_id)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok((trace, dropped))
}

/// Writes a trace as `t,x,y` CSV, adding a `line` column when the trace
/// is labeled.
pub fn write_trace_csv(path: &Path, trace: &PageTrace) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    match &trace.labels {
        Some(labels) => {
            writeln!(w, "t,x,y,line")?;
            for (m, l) in trace.samples.iter().zip(labels) {
                writeln!(w, "{},{},{},{}", m.t, m.z_x, m.z_y, l)?;
            }
        }
        None => {
            writeln!(w, "t,x,y")?;
            for m in &trace.samples {
                writeln!(w, "{},{},{}", m.t, m.z_x, m.z_y)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes per-sample track output: measurement, state estimate, NIS,
/// reset flag, and line numbers. One row per input sample.
pub fn write_track_csv(path: &Path, trace: &PageTrace, result: &TrackResult) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let labeled = trace.labels.is_some();
    write!(
        w,
        "t,z_x,z_y,x_hat,x_dot_hat,y_hat,y_dot_hat,nis,reset,predicted_line"
    )?;
    if labeled {
        write!(w, ",truth_line")?;
    }
    writeln!(w)?;
    let mut resets = result.reset_indices.iter().peekable();
    for (i, m) in trace.samples.iter().enumerate() {
        let s = &result.estimates[i];
        let reset = match resets.peek() {
            Some(&&r) if r == i => {
                resets.next();
                1
            }
            _ => 0,
        };
        write!(
            w,
            "{},{},{},{},{},{},{},{},{reset},{}",
            m.t,
            m.z_x,
            m.z_y,
            s.x,
            s.x_dot,
            s.y,
            s.y_dot,
            result.nis_series[i]
                .map(|v| v.to_string())
                .unwrap_or_default(),
            result.predicted_lines[i]
        )?;
        if let Some(labels) = &trace.labels {
            write!(w, ",{}", labels[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-line record in a track summary.
#[derive(Debug, Clone, Serialize)]
pub struct LineStatRecord {
    pub line: u32,
    pub dwell_seconds: f64,
    pub mean_x_velocity: f64,
    pub sample_count: usize,
    pub implied_seconds_per_line: Option<f64>,
}

impl From<&LineStat> for LineStatRecord {
    fn from(s: &LineStat) -> Self {
        Self {
            line: s.line,
            dwell_seconds: s.dwell_seconds,
            mean_x_velocity: s.mean_x_velocity,
            sample_count: s.sample_count,
            implied_seconds_per_line: s.implied_seconds_per_line(),
        }
    }
}

/// Whole-page track summary.
#[derive(Debug, Clone, Serialize)]
pub struct TrackSummary {
    pub page_id: String,
    pub accuracy: Option<f64>,
    pub n_resets: usize,
    pub line_stats: Vec<LineStatRecord>,
}

impl TrackSummary {
    pub fn from_result(page_id: &str, result: &TrackResult) -> Self {
        Self {
            page_id: page_id.to_string(),
            accuracy: result.accuracy,
            n_resets: result.reset_indices.len(),
            line_stats: result.line_stats.iter().map(LineStatRecord::from).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Key-value lines followed by a per-line table.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("page_id,{}\n", self.page_id));
        out.push_str(&format!(
            "accuracy,{}\n",
            self.accuracy.map(|a| a.to_string()).unwrap_or_default()
        ));
        out.push_str(&format!("n_resets,{}\n", self.n_resets));
        out.push_str("line,dwell_seconds,mean_x_velocity,sample_count,implied_seconds_per_line\n");
        for s in &self.line_stats {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.line,
                s.dwell_seconds,
                s.mean_x_velocity,
                s.sample_count,
                s.implied_seconds_per_line
                    .map(|v| v.to_string())
                    .unwrap_or_default()
            ));
        }
        out
    }
}

/// Writes the plot-ready per-sample series (`t,x_dot,nis`) used to
/// inspect velocity spikes and filter consistency.
pub fn write_series_csv(path: &Path, trace: &PageTrace, result: &TrackResult) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "t,x_dot,nis")?;
    for (i, m) in trace.samples.iter().enumerate() {
        writeln!(
            w,
            "{},{},{}",
            m.t,
            result.estimates[i].x_dot,
            result.nis_series[i]
                .map(|v| v.to_string())
                .unwrap_or_default()
        )?;
    }
    w.flush()?;
    Ok(())
}
