//! Synthetic gaze-trace generation: saccadic reading with line returns
//! and ground-truth labels, plus a plain linear-Gaussian mode for
//! filter-consistency checks.

use crate::error::{Error, Result};
use crate::model::{Measurement, MeasurementModel, ProcessModel, StateVector};
use crate::tracker::PageTrace;
use alloc::format;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

/// Leftmost fixation abscissa of a line, page widths.
pub const X_START: f64 = 0.02;
/// Rightmost fixation abscissa of a line, page widths.
pub const X_END: f64 = 0.98;

/// What `simulate` generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMode {
    /// Saccadic reading with line returns and labels.
    #[default]
    Reading,
    /// Draws from the filter's own linear-Gaussian model.
    LinearGaussian,
}

/// Simulation parameters. Positions are in page units, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_lines: usize,
    /// Mean reading duration per line, seconds.
    pub seconds_per_line: f64,
    /// Fractional standard deviation of per-line duration.
    pub line_time_jitter: f64,
    /// Mean fixation count per line (Poisson).
    pub saccades_per_line: f64,
    /// Within-fixation gaze jitter std, page widths.
    pub fixation_noise: f64,
    /// Horizontal measurement noise std, page widths.
    pub sigma_x: f64,
    /// Vertical measurement noise std, page heights.
    pub sigma_y: f64,
    /// Sample period, seconds.
    pub delta_t: f64,
    /// Duration of the right-to-left line-return sweep, seconds.
    pub return_duration: f64,
    pub seed: u64,
    pub mode: SimMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_lines: 25,
            seconds_per_line: 10.0,
            line_time_jitter: 0.1,
            saccades_per_line: 40.0,
            fixation_noise: 0.0,
            sigma_x: 0.01,
            sigma_y: 0.005,
            delta_t: 1.0 / 64.0,
            return_duration: 0.15,
            seed: 0,
            mode: SimMode::Reading,
        }
    }
}

impl SimConfig {
    /// Checks field ranges.
    pub fn validate(&self) -> Result<()> {
        if self.n_lines < 1 {
            return Err(Error::InvalidConfig("n_lines must be at least 1".into()));
        }
        for (v, name) in [
            (self.seconds_per_line, "seconds_per_line"),
            (self.saccades_per_line, "saccades_per_line"),
            (self.delta_t, "delta_t"),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (v, name) in [
            (self.line_time_jitter, "line_time_jitter"),
            (self.fixation_noise, "fixation_noise"),
            (self.sigma_x, "sigma_x"),
            (self.sigma_y, "sigma_y"),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !self.return_duration.is_finite() || self.return_duration < self.delta_t {
            return Err(Error::InvalidConfig(format!(
                "return_duration must be at least delta_t, got {}",
                self.return_duration
            )));
        }
        Ok(())
    }
}

/// One simulated page: the noisy labeled trace and the noiseless truth
/// states it was generated from, sample for sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPage {
    pub trace: PageTrace,
    pub truth: Vec<StateVector>,
}

/// Simulates one page of reading.
///
/// Each line is a sequence of piecewise-constant fixations advancing
/// from [`X_START`] to [`X_END`] at the line's ordinate, followed (except
/// on the last line) by a linear right-to-left return sweep that drops y
/// one line pitch. Sweep samples are labeled with the upcoming line.
/// Measurements add independent Gaussian noise to the truth positions;
/// truth velocities are backward differences. Deterministic given the seed.
pub fn simulate_reading(config: &SimConfig) -> Result<SimulatedPage> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let dt = config.delta_t;
    let sweep_n = libm::round(config.return_duration / dt).max(1.0) as usize;
    let pitch = 1.0 / config.n_lines as f64;
    let n_fix_dist = Poisson::new(config.saccades_per_line).expect("validated mean");
    let weight_dist = Gamma::new(4.0, 1.0).expect("constant shape");

    let mut xs_truth = Vec::new();
    let mut ys_truth = Vec::new();
    let mut labels: Vec<u32> = Vec::new();

    for line in 0..config.n_lines {
        let jitter: f64 = rng.sample(StandardNormal);
        let dur = config.seconds_per_line * (1.0 + config.line_time_jitter * jitter).max(0.2);
        let n_per = (libm::round(dur / dt) as usize).max(16 + sweep_n);
        let read_n = n_per - sweep_n;
        let y_line = (line as f64 + 0.5) * pitch;

        let n_fix = (n_fix_dist.sample(&mut rng) as usize).max(2);
        let mut weights = Vec::with_capacity(n_fix);
        for _ in 0..n_fix {
            let w: f64 = weight_dist.sample(&mut rng);
            weights.push(w.max(1e-3));
        }
        let total: f64 = weights.iter().sum();
        let mut boundaries = Vec::with_capacity(n_fix);
        let mut cum = 0.0;
        for w in &weights {
            cum += w;
            boundaries.push(libm::round(read_n as f64 * cum / total) as usize);
        }
        boundaries[n_fix - 1] = read_n;

        let mut xs: Vec<f64> = (0..n_fix)
            .map(|_| rng.random_range(X_START..=X_END))
            .collect();
        xs.sort_by(f64::total_cmp);
        xs[0] = X_START;
        xs[n_fix - 1] = X_END;
        for j in 1..n_fix {
            xs[j] = xs[j].max(xs[j - 1]);
        }

        let mut fix = 0;
        for s in 0..read_n {
            while fix + 1 < n_fix && s >= boundaries[fix] {
                fix += 1;
            }
            let wobble: f64 = rng.sample(StandardNormal);
            xs_truth.push(xs[fix] + config.fixation_noise * wobble);
            ys_truth.push(y_line);
            labels.push(line as u32 + 1);
        }

        if line + 1 < config.n_lines {
            for s in 1..=sweep_n {
                let frac = s as f64 / sweep_n as f64;
                xs_truth.push(X_END + (X_START - X_END) * frac);
                ys_truth.push(y_line + pitch * frac);
                labels.push(line as u32 + 2);
            }
        }
    }

    let n = xs_truth.len();
    let mut truth = Vec::with_capacity(n);
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let x_dot = if k == 0 {
            0.0
        } else {
            (xs_truth[k] - xs_truth[k - 1]) / dt
        };
        let y_dot = if k == 0 {
            0.0
        } else {
            (ys_truth[k] - ys_truth[k - 1]) / dt
        };
        truth.push(StateVector::new(xs_truth[k], x_dot, ys_truth[k], y_dot));
    }
    for k in 0..n {
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        samples.push(Measurement::new(
            k as f64 * dt,
            xs_truth[k] + config.sigma_x * nx,
            ys_truth[k] + config.sigma_y * ny,
        ));
    }

    let trace = PageTrace::new(samples, Some(labels), format!("sim-{}", config.seed))?;
    Ok(SimulatedPage { trace, truth })
}

/// Simulates `n` steps of the filter's own linear-Gaussian model from a
/// known initial state: x(k+1) = F x(k) + w, z(k) = H x(k) + v, with w
/// drawn in the discretized white-acceleration form (its covariance is
/// the canonical Q) and v from the diagonal of R. The returned trace is
/// unlabeled. Deterministic given the seed.
pub fn simulate_linear_gaussian(
    config: &SimConfig,
    model: &ProcessModel,
    meas: &MeasurementModel,
    n: usize,
    x0: &StateVector,
) -> Result<SimulatedPage> {
    config.validate()?;
    if n < 1 {
        return Err(Error::InvalidInput("need at least 1 step".into()));
    }
    if !x0.is_finite() {
        return Err(Error::InvalidState("initial state is not finite".into()));
    }
    let dt = config.delta_t;
    let sq_x = libm::sqrt(model.q[1][1]) / dt;
    let sq_y = libm::sqrt(model.q[3][3]) / dt;
    let r_x = libm::sqrt(meas.r[0][0]);
    let r_y = libm::sqrt(meas.r[1][1]);
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

    let mut truth = Vec::with_capacity(n);
    let mut samples = Vec::with_capacity(n);
    let mut x = *x0;
    for k in 0..n {
        truth.push(x);
        let mx: f64 = rng.sample(StandardNormal);
        let my: f64 = rng.sample(StandardNormal);
        samples.push(Measurement::new(
            k as f64 * dt,
            x.x + r_x * mx,
            x.y + r_y * my,
        ));
        let arr = x.to_array();
        let next = crate::mat::mul4v(&model.f, &arr);
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        x = StateVector::from_array([
            next[0] + dt * dt / 2.0 * sq_x * nx,
            next[1] + dt * sq_x * nx,
            next[2] + dt * dt / 2.0 * sq_y * ny,
            next[3] + dt * sq_y * ny,
        ]);
    }

    let trace = PageTrace::new(samples, None, format!("lg-{}", config.seed))?;
    Ok(SimulatedPage { trace, truth })
}
