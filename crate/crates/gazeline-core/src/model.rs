//! Constant-velocity state-space model of reading eye-gaze.
//!
//! State ordering is fixed as `[x, x_dot, y, y_dot]`: horizontal position
//! (page-widths), horizontal velocity (page-widths/s), vertical position
//! (page-heights), vertical velocity (page-heights/s).

use crate::error::{Error, Result};
use crate::mat::{Mat2, Mat2x4, Mat4, Vec4};
use alloc::format;

/// Sampling interval of a 64 Hz gaze tracker, in seconds.
pub const DEFAULT_DELTA_T: f64 = 1.0 / 64.0;
/// Typical reading velocity: one fifth of a page-width per 3 seconds.
pub const DEFAULT_REINIT_X_VELOCITY: f64 = 0.2 / 3.0;
/// Default horizontal process-noise intensity; see [`ModelConfig`].
pub const DEFAULT_Q_X: f64 = 0.016384;
/// Default vertical process-noise intensity; see [`ModelConfig`].
pub const DEFAULT_Q_Y: f64 = 2.6214399999999994e-5;
/// Velocity-change fraction per sample used to derive the default q values.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.03;

/// Kinematic state `[x, x_dot, y, y_dot]` in normalized page units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    /// Horizontal position, page-widths (0 = left margin, 1 = right margin).
    pub x: f64,
    /// Horizontal velocity, page-widths per second.
    pub x_dot: f64,
    /// Vertical position, page-heights (0 = top, 1 = bottom).
    pub y: f64,
    /// Vertical velocity, page-heights per second.
    pub y_dot: f64,
}

impl StateVector {
    pub fn new(x: f64, x_dot: f64, y: f64, y_dot: f64) -> Self {
        Self { x, x_dot, y, y_dot }
    }

    pub fn to_array(self) -> Vec4 {
        [self.x, self.x_dot, self.y, self.y_dot]
    }

    pub fn from_array(v: Vec4) -> Self {
        Self {
            x: v[0],
            x_dot: v[1],
            y: v[2],
            y_dot: v[3],
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.x_dot.is_finite() && self.y.is_finite() && self.y_dot.is_finite()
    }
}

/// One timestamped gaze measurement in normalized page units.
///
/// Values outside [0, 1] are legal; the filter must not assume clipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Timestamp in seconds, strictly increasing within a trace.
    pub t: f64,
    /// Observed horizontal position, page-widths.
    pub z_x: f64,
    /// Observed vertical position, page-heights.
    pub z_y: f64,
}

impl Measurement {
    pub fn new(t: f64, z_x: f64, z_y: f64) -> Self {
        Self { t, z_x, z_y }
    }
}

/// Filter and trigger configuration.
///
/// The defaults model a 64 Hz tracker reading ordinary text: one line of
/// width 1 page-width every 15 s horizontally, 25 lines per page
/// vertically, process noise allowing a 3% velocity change per sample,
/// and measurement noise of 0.01 page-widths / 0.005 page-heights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Sampling interval in seconds (> 0).
    pub delta_t: f64,
    /// Horizontal process-noise intensity (>= 0).
    pub q_x: f64,
    /// Vertical process-noise intensity (>= 0).
    pub q_y: f64,
    /// Horizontal measurement-noise standard deviation, page-widths (> 0).
    pub sigma_x: f64,
    /// Vertical measurement-noise standard deviation, page-heights (> 0).
    pub sigma_y: f64,
    /// Initial covariance scale: P(0|0) = gamma * I (> 0).
    pub gamma: f64,
    /// Filtered x-velocity below which a slip reset fires (< 0).
    pub slip_threshold: f64,
    /// Horizontal velocity installed by a slip reset (> 0).
    pub reinit_x_velocity: f64,
    /// Minimum number of filter steps between slip resets. The
    /// initialization counts as the most recent reset, so triggers are
    /// also suppressed for this many steps at the start of a trace.
    pub refractory_samples: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            delta_t: DEFAULT_DELTA_T,
            q_x: DEFAULT_Q_X,
            q_y: DEFAULT_Q_Y,
            sigma_x: 0.01,
            sigma_y: 0.005,
            gamma: 1.0,
            slip_threshold: -0.5,
            reinit_x_velocity: DEFAULT_REINIT_X_VELOCITY,
            refractory_samples: 16,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.delta_t, "delta_t"),
            (self.sigma_x, "sigma_x"),
            (self.sigma_y, "sigma_y"),
            (self.gamma, "gamma"),
            (self.reinit_x_velocity, "reinit_x_velocity"),
        ];
        for (v, name) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (v, name) in [(self.q_x, "q_x"), (self.q_y, "q_y")] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.slip_threshold.is_nan() || self.slip_threshold >= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "slip_threshold must be negative, got {}",
                self.slip_threshold
            )));
        }
        Ok(())
    }

    /// Builds the process model (F, Q) for this configuration.
    pub fn process_model(&self) -> Result<ProcessModel> {
        ProcessModel::new(self.delta_t, self.q_x, self.q_y)
    }

    /// Builds the measurement model (H, R) for this configuration.
    pub fn measurement_model(&self) -> Result<MeasurementModel> {
        build_measurement_model(self.sigma_x, self.sigma_y)
    }
}

/// State transition matrix F and process noise covariance Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessModel {
    pub f: Mat4,
    pub q: Mat4,
}

impl ProcessModel {
    pub fn new(delta_t: f64, q_x: f64, q_y: f64) -> Result<Self> {
        Ok(Self {
            f: build_transition_matrix(delta_t)?,
            q: build_process_noise_cov(delta_t, q_x, q_y)?,
        })
    }
}

/// Measurement matrix H and measurement noise covariance R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    pub h: Mat2x4,
    pub r: Mat2,
}

/// Builds the constant-velocity transition matrix.
///
/// F is identity with `delta_t` coupling each position to its velocity:
/// `x(k+1) = x(k) + delta_t * x_dot(k)`, same for y.
pub fn build_transition_matrix(delta_t: f64) -> Result<Mat4> {
    if !delta_t.is_finite() || delta_t <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "delta_t must be positive, got {delta_t}"
        )));
    }
    let mut f = crate::mat::identity4(1.0);
    f[0][1] = delta_t;
    f[2][3] = delta_t;
    Ok(f)
}

/// Builds the block-diagonal process noise covariance.
///
/// Each axis contributes `[[dt^4/4, dt^3/2], [dt^3/2, dt^2]]` scaled by
/// its intensity, the covariance of a per-sample velocity kick propagated
/// through the kinematics.
pub fn build_process_noise_cov(delta_t: f64, q_x: f64, q_y: f64) -> Result<Mat4> {
    if !delta_t.is_finite() || delta_t <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "delta_t must be positive, got {delta_t}"
        )));
    }
    for (v, name) in [(q_x, "q_x"), (q_y, "q_y")] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "{name} must be non-negative, got {v}"
            )));
        }
    }
    let d2 = delta_t * delta_t;
    let d3 = d2 * delta_t;
    let d4 = d3 * delta_t;
    let mut q = [[0.0; 4]; 4];
    for (off, intensity) in [(0, q_x), (2, q_y)] {
        q[off][off] = d4 / 4.0 * intensity;
        q[off][off + 1] = d3 / 2.0 * intensity;
        q[off + 1][off] = d3 / 2.0 * intensity;
        q[off + 1][off + 1] = d2 * intensity;
    }
    Ok(q)
}

/// Builds the measurement model: H selects x and y, R = diag(sigma^2).
pub fn build_measurement_model(sigma_x: f64, sigma_y: f64) -> Result<MeasurementModel> {
    for (v, name) in [(sigma_x, "sigma_x"), (sigma_y, "sigma_y")] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(MeasurementModel {
        h: [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
        r: [[sigma_x * sigma_x, 0.0], [0.0, sigma_y * sigma_y]],
    })
}

/// Derives a process-noise intensity from a traversal-rate heuristic.
///
/// The mean velocity is `extent / traverse_seconds`; the intensity is
/// chosen so one sample's velocity noise is `noise_fraction` of that:
/// `sqrt(delta_t^2 * q) = v * noise_fraction`.
pub fn derive_noise_intensity(
    extent: f64,
    traverse_seconds: f64,
    noise_fraction: f64,
    delta_t: f64,
) -> Result<f64> {
    for (v, name) in [
        (extent, "extent"),
        (traverse_seconds, "traverse_seconds"),
        (noise_fraction, "noise_fraction"),
        (delta_t, "delta_t"),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let v = extent / traverse_seconds;
    let per_sample = v * noise_fraction / delta_t;
    Ok(per_sample * per_sample)
}
