//! Whole-trace tracking: runs the slip filter over a page, converts
//! resets to line numbers, and computes accuracy and per-line statistics.

use crate::error::{Error, Result};
use crate::filter::{kf_step, slip_kf_step, two_point_init, StepOutput};
use crate::model::{Measurement, ModelConfig, StateVector};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Timestamped gaze measurements for one page, optionally labeled with
/// ground-truth line numbers (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct PageTrace {
    pub samples: Vec<Measurement>,
    pub labels: Option<Vec<u32>>,
    pub page_id: String,
}

impl PageTrace {
    /// Builds a trace, validating timestamp order and label shape.
    pub fn new(
        samples: Vec<Measurement>,
        labels: Option<Vec<u32>>,
        page_id: String,
    ) -> Result<Self> {
        for i in 1..samples.len() {
            if samples[i].t.is_nan()
                || samples[i - 1].t.is_nan()
                || samples[i].t <= samples[i - 1].t
            {
                return Err(Error::InvalidInput(format!(
                    "timestamps must be strictly increasing (sample {i}: {} after {})",
                    samples[i].t,
                    samples[i - 1].t
                )));
            }
        }
        if let Some(ref l) = labels {
            if l.len() != samples.len() {
                return Err(Error::InvalidInput(format!(
                    "label count {} does not match sample count {}",
                    l.len(),
                    samples.len()
                )));
            }
            if let Some(pos) = l.iter().position(|v| *v < 1) {
                return Err(Error::InvalidInput(format!(
                    "labels are 1-based; label at sample {pos} is 0"
                )));
            }
        }
        Ok(Self {
            samples,
            labels,
            page_id,
        })
    }
}

/// Per-line dwell and reading-velocity summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineStat {
    /// 1-based line number.
    pub line: u32,
    /// Time the line was active: sample_count * delta_t.
    pub dwell_seconds: f64,
    /// Mean filtered x-velocity over the line's samples, page-widths/s.
    pub mean_x_velocity: f64,
    /// Number of samples assigned to the line.
    pub sample_count: usize,
}

impl LineStat {
    /// Seconds to cross one page-width at the line's mean velocity,
    /// `1 / mean_x_velocity`; `None` when the mean is not positive.
    pub fn implied_seconds_per_line(&self) -> Option<f64> {
        (self.mean_x_velocity > 0.0).then(|| 1.0 / self.mean_x_velocity)
    }
}

/// Result of tracking one page.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    /// Per-sample filtered state, same length as the trace.
    pub estimates: Vec<StateVector>,
    /// Per-sample NIS; `None` for the two initialization samples and for
    /// reset samples, where no measurement update ran.
    pub nis_series: Vec<Option<f64>>,
    /// Sample indices at which the slip trigger fired, ascending.
    pub reset_indices: Vec<usize>,
    /// Per-sample 1-based predicted line numbers.
    pub predicted_lines: Vec<u32>,
    /// Fraction of samples whose predicted line matches the label;
    /// `None` when the trace is unlabeled.
    pub accuracy: Option<f64>,
    /// Per-line summaries in line order.
    pub line_stats: Vec<LineStat>,
}

fn annotate(err: Error, sample: usize) -> Error {
    match err {
        Error::InvalidConfig(m) => Error::InvalidConfig(format!("sample {sample}: {m}")),
        Error::InvalidInput(m) => Error::InvalidInput(format!("sample {sample}: {m}")),
        Error::InvalidState(m) => Error::InvalidState(format!("sample {sample}: {m}")),
        Error::FilterDivergence(m) => Error::FilterDivergence(format!("sample {sample}: {m}")),
    }
}

fn run(trace: &PageTrace, config: &ModelConfig, slip: bool) -> Result<TrackResult> {
    config.validate()?;
    let n = trace.samples.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "trace too short: need at least 3 samples, got {n}"
        )));
    }
    for i in 1..n {
        let dt = trace.samples[i].t - trace.samples[i - 1].t;
        if (dt - config.delta_t).abs() > 0.1 * config.delta_t {
            return Err(Error::InvalidInput(format!(
                "sample {i}: spacing {dt} is outside 10% of delta_t {}",
                config.delta_t
            )));
        }
    }

    let process = config.process_model()?;
    let meas = config.measurement_model()?;

    let mut state = two_point_init(
        &trace.samples[0],
        &trace.samples[1],
        config.delta_t,
        config.gamma,
    )?;
    let mut estimates = Vec::with_capacity(n);
    let mut nis_series = Vec::with_capacity(n);
    estimates.push(StateVector::new(
        trace.samples[0].z_x,
        state.x_hat.x_dot,
        trace.samples[0].z_y,
        state.x_hat.y_dot,
    ));
    estimates.push(state.x_hat);
    nis_series.push(None);
    nis_series.push(None);

    let mut reset_indices = Vec::new();
    for i in 2..n {
        let z = &trace.samples[i];
        let out: StepOutput = if slip {
            slip_kf_step(&state, z, &process, &meas, config)
        } else {
            kf_step(&state, z, &process, &meas)
        }
        .map_err(|e| annotate(e, i))?;
        if out.reset {
            reset_indices.push(i);
        }
        estimates.push(out.state.x_hat);
        nis_series.push(out.nis);
        state = out.state;
    }

    let predicted_lines = assign_lines(&reset_indices, n)?;
    let accuracy = match &trace.labels {
        Some(labels) => Some(line_detection_accuracy(&predicted_lines, labels)?),
        None => None,
    };
    let line_stats = compute_line_stats(&estimates, &predicted_lines, config.delta_t);

    Ok(TrackResult {
        estimates,
        nis_series,
        reset_indices,
        predicted_lines,
        accuracy,
        line_stats,
    })
}

/// Tracks a page with the slip filter.
///
/// Initializes from the first two samples (the first estimate mirrors
/// the first measurement with the initial velocities), then steps the
/// slip filter over the remaining samples, assigns line numbers from the
/// resets, and computes accuracy when the trace is labeled.
pub fn track_page(trace: &PageTrace, config: &ModelConfig) -> Result<TrackResult> {
    run(trace, config, true)
}

/// Tracks a page with the regular filter: no resets, every sample is
/// assigned to line 1. Useful as a denoising-only baseline.
pub fn track_page_regular(trace: &PageTrace, config: &ModelConfig) -> Result<TrackResult> {
    run(trace, config, false)
}

/// Converts reset indices to per-sample 1-based line numbers.
///
/// Line 1 runs until the first reset; the sample at which a reset fires
/// starts the next line (its re-initialized position is the new line's
/// left margin).
pub fn assign_lines(reset_indices: &[usize], n_samples: usize) -> Result<Vec<u32>> {
    for (i, &r) in reset_indices.iter().enumerate() {
        if r >= n_samples {
            return Err(Error::InvalidInput(format!(
                "reset index {r} out of range for {n_samples} samples"
            )));
        }
        if i > 0 && reset_indices[i - 1] >= r {
            return Err(Error::InvalidInput(format!(
                "reset indices must be strictly increasing at position {i}"
            )));
        }
    }
    let mut lines = Vec::with_capacity(n_samples);
    let mut line = 1u32;
    let mut next = 0;
    for k in 0..n_samples {
        if next < reset_indices.len() && k == reset_indices[next] {
            line += 1;
            next += 1;
        }
        lines.push(line);
    }
    Ok(lines)
}

/// Fraction of samples whose predicted line equals the ground truth.
pub fn line_detection_accuracy(predicted: &[u32], truth: &[u32]) -> Result<f64> {
    if predicted.is_empty() || truth.is_empty() {
        return Err(Error::InvalidInput("accuracy of empty sequences".into()));
    }
    if predicted.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} predicted vs {} truth",
            predicted.len(),
            truth.len()
        )));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predicted.len() as f64)
}

fn compute_line_stats(
    estimates: &[StateVector],
    predicted_lines: &[u32],
    delta_t: f64,
) -> Vec<LineStat> {
    let max_line = predicted_lines.last().copied().unwrap_or(0);
    let mut stats = Vec::with_capacity(max_line as usize);
    let mut start = 0;
    for line in 1..=max_line {
        let end = start
            + predicted_lines[start..]
                .iter()
                .take_while(|l| **l == line)
                .count();
        let count = end - start;
        let sum: f64 = estimates[start..end].iter().map(|s| s.x_dot).sum();
        stats.push(LineStat {
            line,
            dwell_seconds: count as f64 * delta_t,
            mean_x_velocity: sum / count as f64,
            sample_count: count,
        });
        start = end;
    }
    stats
}

/// Recomputes per-line statistics from a track result.
pub fn line_stats(result: &TrackResult, delta_t: f64) -> Vec<LineStat> {
    compute_line_stats(&result.estimates, &result.predicted_lines, delta_t)
}
