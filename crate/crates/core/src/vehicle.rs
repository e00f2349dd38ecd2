//! Four-DOF (surge, sway, heave, yaw) rigid-body model of the vehicle.
//!
//! Kinematics map body velocity to world-frame pose rate through the planar
//! rotation `J(psi)`. Dynamics follow `M v' + C(v) v + D(v) v + g = tau` with a
//! diagonal inertia, an affine-in-velocity diagonal drag and a Coriolis matrix
//! built from the rotation derivative, `C = J^-1 M J' J^-1`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// World-frame position and heading. Heading is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub psi: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, z: f64, psi: f64) -> Self {
        Self { x, y, z, psi }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.z, self.psi)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|c| c.is_finite())
    }
}

/// Body-frame velocity: surge `u`, sway `v`, heave `w` and yaw rate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub r: f64,
}

impl BodyVelocity {
    pub const fn new(u: f64, v: f64, w: f64, r: f64) -> Self {
        Self { u, v, w, r }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.u, self.v, self.w, self.r)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|c| c.is_finite())
    }
}

/// Generalized force: three forces (N) and the yaw moment (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Torque {
    pub tau_x: f64,
    pub tau_y: f64,
    pub tau_z: f64,
    pub tau_n: f64,
}

impl Torque {
    pub const fn new(tau_x: f64, tau_y: f64, tau_z: f64, tau_n: f64) -> Self {
        Self { tau_x, tau_y, tau_z, tau_n }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.tau_x, self.tau_y, self.tau_z, self.tau_n)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Physical parameters of the vehicle.
///
/// Drag on axis `i` is `(drag_constant[i] + drag_linear_coeff[i] * v_i) * v_i`,
/// using the signed velocity unless `drag_abs` is set, in which case `|v_i|`
/// replaces `v_i` inside the coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub inertia_diagonal: [f64; 4],
    pub drag_constant: [f64; 4],
    pub drag_linear_coeff: [f64; 4],
    pub gravity_buoyancy: [f64; 4],
    pub max_body_velocity: [f64; 4],
    pub max_thruster_force: f64,
    pub drag_abs: bool,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            inertia_diagonal: [42.0, 153.0, 141.0, 100.0],
            drag_constant: [42.0, 319.0, 272.0, 33.0],
            drag_linear_coeff: [69.0, 245.0, 86.0, 4.0],
            gravity_buoyancy: [0.0; 4],
            max_body_velocity: [4.0, 4.0, 2.0, 1.0],
            max_thruster_force: 500.0,
            drag_abs: false,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .inertia_diagonal
            .iter()
            .chain(&self.drag_constant)
            .chain(&self.drag_linear_coeff)
            .chain(&self.gravity_buoyancy)
            .chain(&self.max_body_velocity);
        if !all.clone().all(|c| c.is_finite()) || !self.max_thruster_force.is_finite() {
            return Err(Error::InvalidParameter("vehicle parameters must be finite".into()));
        }
        if self.inertia_diagonal.iter().any(|&m| m <= 0.0) {
            return Err(Error::InvalidParameter("inertia_diagonal must be strictly positive".into()));
        }
        if self.drag_constant.iter().chain(&self.drag_linear_coeff).any(|&d| d < 0.0) {
            return Err(Error::InvalidParameter("drag coefficients must be nonnegative".into()));
        }
        if self.max_body_velocity.iter().any(|&m| m <= 0.0) {
            return Err(Error::InvalidParameter("max_body_velocity must be strictly positive".into()));
        }
        if self.max_thruster_force <= 0.0 {
            return Err(Error::InvalidParameter("max_thruster_force must be positive".into()));
        }
        Ok(())
    }

    pub fn inertia(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::from(self.inertia_diagonal))
    }

    pub fn gravity(&self) -> Vector4<f64> {
        Vector4::from(self.gravity_buoyancy)
    }
}

/// Rotation from body to world frame for heading `psi`.
pub fn jacobian(psi: f64) -> Matrix4<f64> {
    let (s, c) = psi.sin_cos();
    Matrix4::new(
        c, -s, 0.0, 0.0, //
        s, c, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Inverse of [`jacobian`]; the rotation block is orthonormal so this is the transpose.
pub fn jacobian_inverse(psi: f64) -> Matrix4<f64> {
    jacobian(psi).transpose()
}

/// `dJ/dpsi`: only the 2×2 rotation block depends on heading.
fn jacobian_derivative(psi: f64) -> Matrix4<f64> {
    let (s, c) = psi.sin_cos();
    let mut d = Matrix4::zeros();
    d[(0, 0)] = -s;
    d[(0, 1)] = -c;
    d[(1, 0)] = c;
    d[(1, 1)] = -s;
    d
}

/// World-frame pose rate `J(psi) v`.
pub fn kinematics(pose: &Pose, vel: &BodyVelocity) -> Vector4<f64> {
    jacobian(pose.psi) * vel.to_vector()
}

/// `J^-1 M (dJ/dpsi · r) J^-1`, evaluated analytically.
pub fn coriolis_matrix(psi: f64, r: f64, inertia_diagonal: &[f64; 4]) -> Matrix4<f64> {
    if r == 0.0 {
        return Matrix4::zeros();
    }
    let j_inv = jacobian_inverse(psi);
    let m = Matrix4::from_diagonal(&Vector4::from(*inertia_diagonal));
    j_inv * m * (jacobian_derivative(psi) * r) * j_inv
}

/// Diagonal drag matrix `diag(c_i + d_i v_i)`.
pub fn drag_matrix(vel: &BodyVelocity, params: &VehicleParams) -> Matrix4<f64> {
    drag_matrix_from(vel, &params.drag_constant, &params.drag_linear_coeff, params.drag_abs)
}

pub(crate) fn drag_matrix_from(
    vel: &BodyVelocity,
    constant: &[f64; 4],
    linear: &[f64; 4],
    drag_abs: bool,
) -> Matrix4<f64> {
    let v = vel.to_vector();
    let diag = Vector4::from_fn(|i, _| {
        let vi = if drag_abs { v[i].abs() } else { v[i] };
        constant[i] + linear[i] * vi
    });
    Matrix4::from_diagonal(&diag)
}

/// Body acceleration `M^-1 (tau - C v - D v - g)`.
pub fn acceleration(pose: &Pose, vel: &BodyVelocity, tau: &Torque, params: &VehicleParams) -> Vector4<f64> {
    let v = vel.to_vector();
    let c = coriolis_matrix(pose.psi, vel.r, &params.inertia_diagonal);
    let d = drag_matrix(vel, params);
    let net = tau.to_vector() - c * v - d * v - params.gravity();
    Vector4::from_fn(|i, _| net[i] / params.inertia_diagonal[i])
}

fn derivative(state: &(Vector4<f64>, Vector4<f64>), tau: &Torque, params: &VehicleParams) -> (Vector4<f64>, Vector4<f64>) {
    let pose = Pose::from_vector(&state.0);
    let vel = BodyVelocity::from_vector(&state.1);
    (kinematics(&pose, &vel), acceleration(&pose, &vel, tau, params))
}

/// One classical RK4 step of the coupled kinematics and dynamics with `tau`
/// held constant over the step.
pub fn integrate_step(
    pose: &Pose,
    vel: &BodyVelocity,
    tau: &Torque,
    dt: f64,
    params: &VehicleParams,
) -> (Pose, BodyVelocity) {
    debug_assert!(dt > 0.0);
    let y0 = (pose.to_vector(), vel.to_vector());
    let add = |y: &(Vector4<f64>, Vector4<f64>), k: &(Vector4<f64>, Vector4<f64>), h: f64| (y.0 + k.0 * h, y.1 + k.1 * h);

    let k1 = derivative(&y0, tau, params);
    let k2 = derivative(&add(&y0, &k1, dt / 2.0), tau, params);
    let k3 = derivative(&add(&y0, &k2, dt / 2.0), tau, params);
    let k4 = derivative(&add(&y0, &k3, dt), tau, params);

    let p = y0.0 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (dt / 6.0);
    let v = y0.1 + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (dt / 6.0);
    (Pose::from_vector(&p), BodyVelocity::from_vector(&v))
}
