//! Tracking cascade: error-restricted backstepping produces commanded body
//! velocities from pose error, and an adaptive sliding-mode law turns velocity
//! error into body torque.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::vehicle::{coriolis_matrix, drag_matrix_from, jacobian_inverse, BodyVelocity, Torque, VehicleParams};
use crate::{Error, Result};

/// Form of the sway row of the backstepping law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackstepVariant {
    /// `u_d sin e_psi - v_d cos e_psi`: does not pass `v_d` through at zero error.
    AsPrinted,
    /// `u_d sin e_psi + v_d cos e_psi`: the usual rotation of the desired velocity.
    #[default]
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackstepGains {
    pub k: f64,
    pub k_z: f64,
    pub k_psi: f64,
    /// Fraction of `max_body_velocity` the restricted error may request.
    pub mu: f64,
    /// Saturate pose error through `restrict_error` before the backstepping law.
    /// When off, the raw error drives the law (plain backstepping).
    pub restrict_error: bool,
    pub variant: BackstepVariant,
}

impl Default for BackstepGains {
    fn default() -> Self {
        Self { k: 1.0, k_z: 1.0, k_psi: 1.0, mu: 0.5, restrict_error: true, variant: BackstepVariant::default() }
    }
}

impl BackstepGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k_z > 0.0 && self.k_psi > 0.0) || ![self.k, self.k_z, self.k_psi].iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidParameter("backstep: k, k_z, k_psi must be positive".into()));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidParameter(format!("backstep: mu must be in (0, 1], got {}", self.mu)));
        }
        Ok(())
    }
}

/// Sign of the switching term relative to the sliding variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchingVariant {
    /// `-K1 s - K2 |s|^r sign(s)`. With `e_v = v_c - v` this pushes away from
    /// the surface and relies on the model-based term to dominate.
    AsPrinted,
    /// `+K1 s + K2 |s|^r sign(s)`, which drives `s` toward zero for this
    /// error convention.
    #[default]
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcGains {
    pub lambda: f64,
    /// Rate in the error-acceleration approximation `d²e_v/dt² ≈ -k_accel de_v/dt`.
    pub k_accel: f64,
    pub k1: [f64; 4],
    pub k2: [f64; 4],
    pub r_exp: f64,
    pub eta: f64,
    pub gamma_adapt: f64,
    pub f_bound: f64,
    /// Relative error applied to every model estimate (0 = exact plant copy).
    pub model_error: f64,
    pub switching: SwitchingVariant,
}

impl Default for SmcGains {
    fn default() -> Self {
        Self {
            lambda: 6.0,
            k_accel: 12.0,
            k1: [20.0; 4],
            k2: [20.0; 4],
            r_exp: 0.5,
            eta: 0.1,
            gamma_adapt: 1.0,
            f_bound: 0.0,
            model_error: 0.0,
            switching: SwitchingVariant::default(),
        }
    }
}

impl SmcGains {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(format!("smc: {m}")));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive".into());
        }
        if !(self.k_accel > 0.0 && self.k_accel.is_finite()) {
            return bad("k_accel must be positive".into());
        }
        if !(self.r_exp > 0.0 && self.r_exp < 1.0) {
            return bad(format!("r_exp must be in (0, 1), got {}", self.r_exp));
        }
        if !(self.eta > 0.0 && self.f_bound >= 0.0 && self.gamma_adapt > 0.0) {
            return bad("eta and gamma_adapt must be positive, f_bound nonnegative".into());
        }
        let floor = self.eta + self.f_bound;
        if self.k1.iter().chain(&self.k2).any(|&k| !(k >= floor) || !k.is_finite()) {
            return bad(format!("k1 and k2 entries must be at least eta + f_bound = {floor}"));
        }
        if !(self.model_error > -1.0 && self.model_error.is_finite()) {
            return bad("model_error must exceed -1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SmcState {
    pub integral_ev: Vector4<f64>,
    /// `None` until the first step, so the first derivative estimate is zero.
    pub prev_ev: Option<Vector4<f64>>,
    pub tau_est: Vector4<f64>,
}

/// Controller-side copy of the plant model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEstimate {
    pub inertia: [f64; 4],
    pub drag_constant: [f64; 4],
    pub drag_linear_coeff: [f64; 4],
    pub gravity: [f64; 4],
    pub drag_abs: bool,
}

impl ModelEstimate {
    /// Every coefficient scaled by `1 + relative_error`.
    pub fn from_params(params: &VehicleParams, relative_error: f64) -> Self {
        let scale = |a: [f64; 4]| a.map(|x| x * (1.0 + relative_error));
        Self {
            inertia: scale(params.inertia_diagonal),
            drag_constant: scale(params.drag_constant),
            drag_linear_coeff: scale(params.drag_linear_coeff),
            gravity: scale(params.gravity_buoyancy),
            drag_abs: params.drag_abs,
        }
    }
}

/// `e_i / (|e_i| + 1) · mu · v_m_i`: bounded, odd and monotone in each axis.
pub fn restrict_error(e: &Vector4<f64>, mu: f64, max_body_velocity: &[f64; 4]) -> Vector4<f64> {
    Vector4::from_fn(|i, _| e[i] / (e[i].abs() + 1.0) * mu * max_body_velocity[i])
}

/// Error fed to the backstepping law under `gains`.
pub fn velocity_error(e: &Vector4<f64>, gains: &BackstepGains, max_body_velocity: &[f64; 4]) -> Vector4<f64> {
    if gains.restrict_error {
        restrict_error(e, gains.mu, max_body_velocity)
    } else {
        *e
    }
}

/// Body-frame velocity that follows the desired world-frame rate at heading `psi_d`.
pub fn desired_body_velocity(pdot_d: &Vector4<f64>, psi_d: f64) -> Vector4<f64> {
    jacobian_inverse(psi_d) * pdot_d
}

pub fn backstepping_velocity(v_e: &Vector4<f64>, psi: f64, v_desired: &Vector4<f64>, gains: &BackstepGains) -> Vector4<f64> {
    let (s, c) = psi.sin_cos();
    let (se, ce) = v_e[3].sin_cos();
    let (u_d, v_d, w_d, r_d) = (v_desired[0], v_desired[1], v_desired[2], v_desired[3]);
    let sway_ff = match gains.variant {
        BackstepVariant::AsPrinted => u_d * se - v_d * ce,
        BackstepVariant::Corrected => u_d * se + v_d * ce,
    };
    Vector4::new(
        gains.k * (v_e[0] * c + v_e[1] * s) + u_d * ce - v_d * se,
        gains.k * (-v_e[0] * s + v_e[1] * c) + sway_ff,
        w_d + gains.k_z * v_e[2],
        r_d + gains.k_psi * v_e[3],
    )
}

pub fn sliding_surface(e_v: &Vector4<f64>, e_v_dot: &Vector4<f64>, e_v_int: &Vector4<f64>, lambda: f64) -> Vector4<f64> {
    e_v_dot + e_v * (2.0 * lambda) + e_v_int * (lambda * lambda)
}

/// `sign(x) |x|^r` with `sign(0) = 0`.
pub fn signed_power(x: f64, r: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(r)
    }
}

/// Switching term for sliding variable `s`.
pub fn switching_term(s: &Vector4<f64>, gains: &SmcGains) -> Vector4<f64> {
    let sign = match gains.switching {
        SwitchingVariant::AsPrinted => -1.0,
        SwitchingVariant::Corrected => 1.0,
    };
    Vector4::from_fn(|i, _| sign * (gains.k1[i] * s[i] + gains.k2[i] * signed_power(s[i], gains.r_exp)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcOutput {
    pub torque: Torque,
    pub state: SmcState,
    pub surface: Vector4<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn smc_torque(
    v: &BodyVelocity,
    v_c: &Vector4<f64>,
    v_c_dot: &Vector4<f64>,
    psi: f64,
    state: &SmcState,
    est: &ModelEstimate,
    gains: &SmcGains,
    dt: f64,
) -> SmcOutput {
    let vel = v.to_vector();
    let e_v = v_c - vel;
    let e_v_dot = state.prev_ev.map_or_else(Vector4::zeros, |prev| (e_v - prev) / dt);
    let integral_ev = state.integral_ev + e_v * dt;
    let lambda = gains.lambda;
    let s = sliding_surface(&e_v, &e_v_dot, &integral_ev, lambda);

    let m = Matrix4::from_diagonal(&Vector4::from(est.inertia));
    let c = coriolis_matrix(psi, v.r, &est.inertia);
    let d = drag_matrix_from(v, &est.drag_constant, &est.drag_linear_coeff, est.drag_abs);
    let accel = v_c_dot - e_v_dot * (gains.k_accel / (2.0 * lambda)) + e_v * (lambda / 2.0);
    let major = m * accel + c * vel + d * vel + Vector4::from(est.gravity);

    let tau = major + state.tau_est + switching_term(&s, gains);
    SmcOutput {
        torque: Torque::from_vector(&tau),
        state: SmcState { integral_ev, prev_ev: Some(e_v), tau_est: state.tau_est + s * (gains.gamma_adapt * dt) },
        surface: s,
    }
}

/// Backstepping Lyapunov function `½‖e‖²`.
pub fn lyapunov_gamma0(e: &Vector4<f64>) -> f64 {
    0.5 * e.norm_squared()
}

/// Sliding-layer Lyapunov function `sᵀ M s / (4 lambda)`.
pub fn lyapunov_v2(s: &Vector4<f64>, params: &VehicleParams, lambda: f64) -> f64 {
    s.iter().zip(params.inertia_diagonal).map(|(si, m)| m * si * si).sum::<f64>() / (4.0 * lambda)
}
