//! Reading-gaze tracking with a constant-velocity Kalman filter.
//!
//! The crate estimates where on a page a reader is looking from noisy
//! eye-tracker fixation samples. A regular Kalman filter denoises the
//! gaze trajectory; the slip variant additionally watches the filtered
//! horizontal velocity and re-initializes the filter when it spikes
//! negative, which is the signature of a right-to-left line return.
//! Counting those resets yields the line the reader is on.
//!
//! Modules:
//! - [`model`]: state-space matrices (F, Q, H, R) and configuration
//! - [`filter`]: single filter iterations, two-point initialization, NIS
//! - [`tracker`]: whole-trace tracking, line assignment, accuracy, dwell
//! - [`simulate`]: synthetic reading traces with ground-truth labels
//!
//! Positions are normalized page units: x in page-widths (0 = left
//! margin, 1 = right margin), y in page-heights (0 = top), velocities in
//! page units per second. The crate is `no_std` (requires `alloc`).

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod filter;
mod mat;
pub mod model;
pub mod simulate;
pub mod tracker;

pub use error::{Error, Result};
pub use filter::{kf_step, nis, slip_kf_step, two_point_init, FilterState, StepOutput};
pub use mat::{Mat2, Mat2x4, Mat4, Mat4x2, Vec2, Vec4};
pub use model::{
    build_measurement_model, build_process_noise_cov, build_transition_matrix,
    derive_noise_intensity, Measurement, MeasurementModel, ModelConfig, ProcessModel, StateVector,
};
pub use simulate::{
    simulate_linear_gaussian, simulate_reading, SimConfig, SimMode, SimulatedPage, X_END, X_START,
};
pub use tracker::{
    assign_lines, line_detection_accuracy, line_stats, track_page, track_page_regular, LineStat,
    PageTrace, TrackResult,
};
