//! Kalman filter iterations: the regular step, two-point initialization,
//! NIS, and the slip step with velocity-triggered re-initialization.

use crate::error::{Error, Result};
use crate::mat::{
    add4, finite4, identity4, mul24_24bt, mul24_4, mul24v, mul2v, mul4, mul42_2, mul42_42bt,
    mul42v, mul4_24bt, mul4_bt, mul4v, sub4, symmetrize4, Mat2, Mat4, Vec2,
};
use crate::model::{Measurement, MeasurementModel, ModelConfig, ProcessModel, StateVector};
use alloc::format;

const MAX_CONDITION: f64 = 1e12;
const MIN_DETERMINANT: f64 = 1e-300;

/// Posterior filter state after step `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    /// Current estimate x_hat(k|k).
    pub x_hat: StateVector,
    /// Current covariance P(k|k), kept symmetric.
    pub p: Mat4,
    /// Step index; 0 immediately after initialization.
    pub k: usize,
    /// Step index of the most recent (re-)initialization. Used by
    /// [`slip_kf_step`] to enforce the refractory window; initialization
    /// itself counts, so a fresh filter starts with the window active.
    pub last_reinit_k: usize,
}

impl FilterState {
    fn check_finite(&self) -> Result<()> {
        if !self.x_hat.is_finite() || !finite4(&self.p) {
            return Err(Error::InvalidState("non-finite filter state".into()));
        }
        Ok(())
    }
}

/// Output of one filter iteration.
///
/// The innovation-related fields are `None` when the step was a slip
/// re-initialization (no measurement update ran) and on steps where they
/// are not defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Posterior state at k+1.
    pub state: FilterState,
    /// Predicted measurement z_hat(k+1|k).
    pub predicted_measurement: Option<Vec2>,
    /// Innovation nu(k+1) = z(k+1) - z_hat(k+1|k).
    pub innovation: Option<Vec2>,
    /// Innovation covariance S(k+1).
    pub innovation_cov: Option<Mat2>,
    /// Normalized innovation squared for this step.
    pub nis: Option<f64>,
    /// True iff the slip trigger re-initialized the filter this step.
    pub reset: bool,
}

/// Initializes the filter from the first two measurements.
///
/// Position is taken from the second measurement, velocity from the
/// finite difference, and P(0|0) = gamma * I.
pub fn two_point_init(
    z1: &Measurement,
    z2: &Measurement,
    delta_t: f64,
    gamma: f64,
) -> Result<FilterState> {
    if !delta_t.is_finite() || delta_t <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "delta_t must be positive, got {delta_t}"
        )));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    for z in [z1, z2] {
        if !z.z_x.is_finite() || !z.z_y.is_finite() {
            return Err(Error::InvalidState("non-finite measurement".into()));
        }
    }
    Ok(FilterState {
        x_hat: StateVector::new(
            z2.z_x,
            (z2.z_x - z1.z_x) / delta_t,
            z2.z_y,
            (z2.z_y - z1.z_y) / delta_t,
        ),
        p: identity4(gamma),
        k: 0,
        last_reinit_k: 0,
    })
}

/// Inverts a 2x2 matrix, rejecting singular or ill-conditioned inputs.
fn invert_2x2(s: &Mat2) -> Result<Mat2> {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if !det.is_finite() || det.abs() < MIN_DETERMINANT {
        return Err(Error::FilterDivergence(format!(
            "singular innovation covariance (det = {det})"
        )));
    }
    let inv = [
        [s[1][1] / det, -s[0][1] / det],
        [-s[1][0] / det, s[0][0] / det],
    ];
    let norm = |m: &Mat2| {
        let r0 = m[0][0].abs() + m[0][1].abs();
        let r1 = m[1][0].abs() + m[1][1].abs();
        if r0 > r1 {
            r0
        } else {
            r1
        }
    };
    let condition = norm(s) * norm(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::FilterDivergence(format!(
            "ill-conditioned innovation covariance (condition estimate {condition:.3e})"
        )));
    }
    Ok(inv)
}

/// Runs one regular Kalman filter iteration.
///
/// Predict: `x(k+1|k) = F x(k|k)`, `P(k+1|k) = F P F^T + Q`. Update:
/// `S = H P(k+1|k) H^T + R`, `W = P(k+1|k) H^T S^-1`, then
/// `x(k+1|k+1) = x(k+1|k) + W nu` and `P(k+1|k+1) = P(k+1|k) - W S W^T`,
/// symmetrized. The output carries `nis = nu^T S^-1 nu`.
pub fn kf_step(
    state: &FilterState,
    z: &Measurement,
    process: &ProcessModel,
    meas: &MeasurementModel,
) -> Result<StepOutput> {
    state.check_finite()?;
    if !z.z_x.is_finite() || !z.z_y.is_finite() {
        return Err(Error::InvalidState(format!(
            "non-finite measurement ({}, {})",
            z.z_x, z.z_y
        )));
    }

    let x_pred = mul4v(&process.f, &state.x_hat.to_array());
    let p_pred = add4(
        &mul4_bt(&mul4(&process.f, &state.p), &process.f),
        &process.q,
    );

    let hp = mul24_4(&meas.h, &p_pred);
    let mut s = mul24_24bt(&hp, &meas.h);
    for (s_row, r_row) in s.iter_mut().zip(&meas.r) {
        for (sv, rv) in s_row.iter_mut().zip(r_row) {
            *sv += rv;
        }
    }
    let s_inv = invert_2x2(&s)?;

    let z_pred = mul24v(&meas.h, &x_pred);
    let nu = [z.z_x - z_pred[0], z.z_y - z_pred[1]];
    let w = mul42_2(&mul4_24bt(&p_pred, &meas.h), &s_inv);

    let correction = mul42v(&w, &nu);
    let x_post = [
        x_pred[0] + correction[0],
        x_pred[1] + correction[1],
        x_pred[2] + correction[2],
        x_pred[3] + correction[3],
    ];
    let p_post = symmetrize4(&sub4(&p_pred, &mul42_42bt(&mul42_2(&w, &s), &w)));

    let s_inv_nu = mul2v(&s_inv, &nu);
    let nis_value = nu[0] * s_inv_nu[0] + nu[1] * s_inv_nu[1];

    Ok(StepOutput {
        state: FilterState {
            x_hat: StateVector::from_array(x_post),
            p: p_post,
            k: state.k + 1,
            last_reinit_k: state.last_reinit_k,
        },
        predicted_measurement: Some(z_pred),
        innovation: Some(nu),
        innovation_cov: Some(s),
        nis: Some(nis_value),
        reset: false,
    })
}

/// Normalized innovation squared, `nu^T S^-1 nu`.
pub fn nis(innovation: &Vec2, innovation_cov: &Mat2) -> Result<f64> {
    let s = innovation_cov;
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if s[0][0].is_nan() || det.is_nan() || s[0][0] <= 0.0 || det <= 0.0 {
        return Err(Error::FilterDivergence(
            "innovation covariance not positive definite".into(),
        ));
    }
    let inv = invert_2x2(s)?;
    let s_inv_nu = mul2v(&inv, innovation);
    Ok(innovation[0] * s_inv_nu[0] + innovation[1] * s_inv_nu[1])
}

/// Runs one slip filter iteration.
///
/// If the current posterior x-velocity is strictly below
/// `config.slip_threshold`, the filter re-initializes instead of
/// stepping: position snaps to the incoming measurement, x-velocity to
/// `config.reinit_x_velocity`, y-velocity is carried over, and
/// P = gamma * I. Triggers within `config.refractory_samples` steps of
/// the last (re-)initialization are suppressed and the regular step runs,
/// so one physical line return cannot fire twice.
pub fn slip_kf_step(
    state: &FilterState,
    z: &Measurement,
    process: &ProcessModel,
    meas: &MeasurementModel,
    config: &ModelConfig,
) -> Result<StepOutput> {
    config.validate()?;
    state.check_finite()?;
    let refractory_over = state.k - state.last_reinit_k >= config.refractory_samples;
    if state.x_hat.x_dot < config.slip_threshold && refractory_over {
        if !z.z_x.is_finite() || !z.z_y.is_finite() {
            return Err(Error::InvalidState(format!(
                "non-finite measurement ({}, {})",
                z.z_x, z.z_y
            )));
        }
        return Ok(StepOutput {
            state: FilterState {
                x_hat: StateVector::new(z.z_x, config.reinit_x_velocity, z.z_y, state.x_hat.y_dot),
                p: identity4(config.gamma),
                k: state.k + 1,
                last_reinit_k: state.k + 1,
            },
            predicted_measurement: None,
            innovation: None,
            innovation_cov: None,
            nis: None,
            reset: true,
        });
    }
    kf_step(state, z, process, meas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::trace4;
    use crate::model::{build_measurement_model, ModelConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn default_models() -> (ProcessModel, MeasurementModel, ModelConfig) {
        let config = ModelConfig::default();
        (
            config.process_model().unwrap(),
            config.measurement_model().unwrap(),
            config,
        )
    }

    #[test]
    fn two_point_init_direct_substitution() {
        let s = two_point_init(
            &Measurement::new(0.0, 0.1, 0.2),
            &Measurement::new(0.1, 0.2, 0.2),
            0.1,
            1.0,
        )
        .unwrap();
        assert_eq!(s.x_hat.to_array(), [0.2, 1.0, 0.2, 0.0]);
        assert_eq!(s.p, identity4(1.0));
        assert_eq!(s.k, 0);
    }

    #[test]
    fn two_point_init_equal_measurements_give_zero_velocity() {
        let z = Measurement::new(0.0, 0.37, 0.81);
        let s = two_point_init(&z, &Measurement::new(0.1, 0.37, 0.81), 0.015625, 2.5).unwrap();
        assert_eq!(s.x_hat.x_dot, 0.0);
        assert_eq!(s.x_hat.y_dot, 0.0);
        assert_eq!(s.p, identity4(2.5));
    }

    #[test]
    fn two_point_init_rejects_bad_inputs() {
        let z = Measurement::new(0.0, 0.1, 0.1);
        assert!(two_point_init(&z, &z, 0.0, 1.0).is_err());
        assert!(two_point_init(&z, &z, 0.1, 0.0).is_err());
        assert!(two_point_init(&z, &Measurement::new(0.1, f64::NAN, 0.1), 0.1, 1.0).is_err());
    }

    #[test]
    fn near_perfect_measurement_snaps_to_observation() {
        let (process, _, config) = default_models();
        let meas = build_measurement_model(1e-9, 1e-9).unwrap();
        let state = FilterState {
            x_hat: StateVector::new(0.5, 0.067, 0.5, 0.003),
            p: identity4(0.01),
            k: 3,
            last_reinit_k: 0,
        };
        let z = Measurement::new(0.0625, 0.7, 0.4);
        let out = kf_step(&state, &z, &process, &meas).unwrap();
        assert_close(out.state.x_hat.x, 0.7, 1e-6);
        assert_close(out.state.x_hat.y, 0.4, 1e-6);
        let _ = config;
    }

    #[test]
    fn uninformative_measurement_keeps_prediction() {
        let (process, _, _) = default_models();
        let sigma = libm::sqrt(1e9);
        let meas = build_measurement_model(sigma, sigma).unwrap();
        let state = FilterState {
            x_hat: StateVector::new(0.5, 0.067, 0.5, 0.003),
            p: identity4(0.01),
            k: 0,
            last_reinit_k: 0,
        };
        let z = Measurement::new(0.0625, 0.9, 0.1);
        let out = kf_step(&state, &z, &process, &meas).unwrap();
        let x_pred = mul4v(&process.f, &state.x_hat.to_array());
        for (got, want) in out.state.x_hat.to_array().iter().zip(&x_pred) {
            assert_close(*got, *want, 1e-6);
        }
    }

    /// Worked single step at default parameters, frozen from an
    /// independent straight-line implementation of the same equations
    /// cross-checked against batch weighted least squares.
    #[test]
    fn kf_step_matches_precomputed_oracle() {
        let (process, meas, _) = default_models();
        let state = FilterState {
            x_hat: StateVector::new(0.5, 0.067, 0.5, 0.003),
            p: identity4(0.01),
            k: 0,
            last_reinit_k: 0,
        };
        let out = kf_step(
            &state,
            &Measurement::new(0.015625, 0.52, 0.50),
            &process,
            &meas,
        )
        .unwrap();

        let z_pred = out.predicted_measurement.unwrap();
        assert_close(z_pred[0], 0.501046875, 1e-15);
        assert_close(z_pred[1], 0.500046875, 1e-15);

        let nu = out.innovation.unwrap();
        assert_close(nu[0], 0.018953125000000015, 1e-15);
        assert_close(nu[1], -4.6875000000001776e-5, 1e-15);

        let s = out.innovation_cov.unwrap();
        assert_close(s[0][0], 0.010102441650390624, 1e-15);
        assert_close(s[1][1], 0.010027441406640625, 1e-15);
        assert_eq!(s[0][1], 0.0);
        assert_eq!(s[1][0], 0.0);

        let x = out.state.x_hat;
        assert_close(x.x, 0.5198123906511327, 1e-12);
        assert_close(x.x_dot, 0.06729319823552674, 1e-12);
        assert_close(x.y, 0.500000116866801, 1e-12);
        assert_close(x.y_dot, 0.002999269582259648, 1e-12);

        let p = out.state.p;
        assert_close(p[0][0], 9.901014028627225e-5, 1e-15);
        assert_close(p[0][1], 1.546965133859078e-6, 1e-15);
        assert_close(p[1][1], 0.010001582383551741, 1e-15);
        assert_close(p[2][2], 2.4937671039438475e-5, 1e-15);
        assert_close(p[2][3], 3.8955612818777083e-7, 1e-15);
        assert_close(p[3][3], 0.009997571673419716, 1e-15);
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert_eq!(p[i][j], 0.0);
            assert_eq!(p[j][i], 0.0);
        }
        assert_eq!(p[1][0], p[0][1]);

        assert_close(out.nis.unwrap(), 0.03555805352776356, 1e-12);
        assert!(!out.reset);
        assert_eq!(out.state.k, 1);
    }

    #[test]
    fn nis_direct_substitution() {
        assert_eq!(nis(&[0.0, 0.0], &[[1.0, 0.0], [0.0, 1.0]]).unwrap(), 0.0);
        assert_eq!(nis(&[1.0, 0.0], &[[1.0, 0.0], [0.0, 1.0]]).unwrap(), 1.0);
        assert_eq!(nis(&[1.0, 2.0], &[[4.0, 0.0], [0.0, 1.0]]).unwrap(), 4.25);
        assert!(nis(&[1.0, 1.0], &[[-1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(nis(&[1.0, 1.0], &[[1.0, 2.0], [2.0, 1.0]]).is_err());
    }

    #[test]
    fn slip_reset_reinitializes_from_measurement() {
        let (process, meas, mut config) = default_models();
        config.refractory_samples = 0;
        let state = FilterState {
            x_hat: StateVector::new(0.9, -0.6, 0.3, 0.003),
            p: identity4(1e-4),
            k: 100,
            last_reinit_k: 0,
        };
        let out = slip_kf_step(
            &state,
            &Measurement::new(2.0, 0.05, 0.3),
            &process,
            &meas,
            &config,
        )
        .unwrap();
        assert!(out.reset);
        assert_eq!(out.state.x_hat.x, 0.05);
        assert_eq!(out.state.x_hat.x_dot, 0.2 / 3.0);
        assert_eq!(out.state.x_hat.y, 0.3);
        assert_eq!(out.state.x_hat.y_dot, 0.003);
        assert_eq!(out.state.p, identity4(config.gamma));
        assert_eq!(out.state.k, 101);
        assert_eq!(out.state.last_reinit_k, 101);
        assert_eq!(out.predicted_measurement, None);
        assert_eq!(out.innovation, None);
        assert_eq!(out.innovation_cov, None);
        assert_eq!(out.nis, None);
    }

    #[test]
    fn slip_below_threshold_only_strictly() {
        let (process, meas, mut config) = default_models();
        config.refractory_samples = 0;
        let z = Measurement::new(2.0, 0.05, 0.3);
        // -0.4 does not trip the -0.5 threshold: identical to kf_step.
        let state = FilterState {
            x_hat: StateVector::new(0.9, -0.4, 0.3, 0.003),
            p: identity4(1e-4),
            k: 100,
            last_reinit_k: 0,
        };
        let slip = slip_kf_step(&state, &z, &process, &meas, &config).unwrap();
        let plain = kf_step(&state, &z, &process, &meas).unwrap();
        assert_eq!(slip, plain);
        assert!(!slip.reset);
        // Exactly at the threshold: still no reset.
        let state = FilterState {
            x_hat: StateVector::new(0.9, -0.5, 0.3, 0.003),
            p: identity4(1e-4),
            k: 100,
            last_reinit_k: 0,
        };
        let out = slip_kf_step(&state, &z, &process, &meas, &config).unwrap();
        assert!(!out.reset);
    }

    #[test]
    fn refractory_window_suppresses_early_triggers() {
        let (process, meas, config) = default_models();
        assert_eq!(config.refractory_samples, 16);
        let z = Measurement::new(2.0, 0.05, 0.3);
        let mut state = FilterState {
            x_hat: StateVector::new(0.9, -0.9, 0.3, 0.0),
            p: identity4(1.0),
            k: 10,
            last_reinit_k: 0,
        };
        let out = slip_kf_step(&state, &z, &process, &meas, &config).unwrap();
        assert!(
            !out.reset,
            "trigger inside the refractory window must not fire"
        );
        state.k = 16;
        let out = slip_kf_step(&state, &z, &process, &meas, &config).unwrap();
        assert!(out.reset, "trigger after the refractory window must fire");
    }

    #[test]
    fn slip_with_infinite_threshold_is_bitwise_kf() {
        let (process, meas, mut config) = default_models();
        config.slip_threshold = f64::NEG_INFINITY;
        config.validate().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut a = two_point_init(
            &Measurement::new(0.0, 0.1, 0.5),
            &Measurement::new(0.015625, 0.11, 0.5),
            config.delta_t,
            config.gamma,
        )
        .unwrap();
        let mut b = a;
        for i in 0..50 {
            let z = Measurement::new(
                (i + 2) as f64 * config.delta_t,
                rng.random_range(-1.0..2.0),
                rng.random_range(-1.0..2.0),
            );
            let out_slip = slip_kf_step(&a, &z, &process, &meas, &config).unwrap();
            let out_kf = kf_step(&b, &z, &process, &meas).unwrap();
            assert_eq!(out_slip, out_kf);
            a = out_slip.state;
            b = out_kf.state;
        }
    }

    #[test]
    fn update_never_increases_total_uncertainty() {
        let (process, meas, _) = default_models();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..200 {
            let mut p = [[0.0; 4]; 4];
            for row in p.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random_range(-0.5..0.5);
                }
            }
            let p = add4(&mul4_bt(&p, &p), &identity4(1e-6));
            let state = FilterState {
                x_hat: StateVector::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ),
                p,
                k: 0,
                last_reinit_k: 0,
            };
            let z = Measurement::new(
                0.1,
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let out = kf_step(&state, &z, &process, &meas).unwrap();
            let p_pred = add4(
                &mul4_bt(&mul4(&process.f, &state.p), &process.f),
                &process.q,
            );
            assert!(trace4(&out.state.p) <= trace4(&p_pred) + 1e-9);
        }
    }

    #[test]
    fn noiseless_constant_velocity_is_tracked_exactly() {
        let config = ModelConfig {
            q_x: 0.0,
            q_y: 0.0,
            ..ModelConfig::default()
        };
        let process = config.process_model().unwrap();
        let meas = config.measurement_model().unwrap();
        let dt = config.delta_t;
        let truth = |k: usize| {
            let t = k as f64 * dt;
            (0.1 + 0.067 * t, 0.3 + 0.01 * t)
        };
        let (x0, y0) = truth(0);
        let (x1, y1) = truth(1);
        let mut state = two_point_init(
            &Measurement::new(0.0, x0, y0),
            &Measurement::new(dt, x1, y1),
            dt,
            config.gamma,
        )
        .unwrap();
        for k in 2..100 {
            let (x, y) = truth(k);
            let out = kf_step(
                &state,
                &Measurement::new(k as f64 * dt, x, y),
                &process,
                &meas,
            )
            .unwrap();
            state = out.state;
            assert_close(state.x_hat.x, x, 1e-6);
            assert_close(state.x_hat.y, y, 1e-6);
        }
    }

    #[test]
    fn divergence_and_state_errors_are_reported() {
        let (process, meas, _) = default_models();
        let bad_state = FilterState {
            x_hat: StateVector::new(f64::NAN, 0.0, 0.0, 0.0),
            p: identity4(1.0),
            k: 0,
            last_reinit_k: 0,
        };
        let z = Measurement::new(0.1, 0.5, 0.5);
        assert!(matches!(
            kf_step(&bad_state, &z, &process, &meas),
            Err(Error::InvalidState(_))
        ));
        let state = FilterState {
            x_hat: StateVector::new(0.5, 0.0, 0.5, 0.0),
            p: identity4(1.0),
            k: 0,
            last_reinit_k: 0,
        };
        assert!(matches!(
            kf_step(
                &state,
                &Measurement::new(0.1, f64::INFINITY, 0.5),
                &process,
                &meas
            ),
            Err(Error::InvalidState(_))
        ));
        // Singular S: zero covariance everywhere.
        let zero_process = ProcessModel::new(1.0 / 64.0, 0.0, 0.0).unwrap();
        let zero_meas = MeasurementModel {
            h: meas.h,
            r: [[0.0, 0.0], [0.0, 0.0]],
        };
        let flat = FilterState {
            x_hat: StateVector::new(0.5, 0.0, 0.5, 0.0),
            p: [[0.0; 4]; 4],
            k: 0,
            last_reinit_k: 0,
        };
        assert!(matches!(
            kf_step(&flat, &z, &zero_process, &zero_meas),
            Err(Error::FilterDivergence(_))
        ));
        // Ill-conditioned S: wildly mismatched measurement variances.
        let skewed = MeasurementModel {
            h: meas.h,
            r: [[1e300, 0.0], [0.0, 1e-300]],
        };
        assert!(matches!(
            kf_step(&flat, &z, &zero_process, &skewed),
            Err(Error::FilterDivergence(_))
        ));
    }
}
