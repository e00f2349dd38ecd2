//! Eight-thruster propulsion model: configuration matrix, normalization and
//! per-thruster health weights.
//!
//! All allocation works in normalized units. Forces are `T / T_m` and torques
//! are divided by the per-axis limits `tau_m = (2, 2, 4, 4.8) T_m`, so both live
//! in `[-1, 1]`. A damaged thruster `j` delivers `w_j` times its command.

use nalgebra::{SMatrix, SVector, Vector4};
use serde::{Deserialize, Serialize};

use crate::vehicle::Torque;
use crate::{Error, Result};

pub const THRUSTERS: usize = 8;

pub type Vector8 = SVector<f64, THRUSTERS>;
pub type Matrix4x8 = SMatrix<f64, 4, THRUSTERS>;

/// Normalized configuration matrix `B̄` mapping normalized forces to
/// normalized torques.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigMatrix(Matrix4x8);

impl ConfigMatrix {
    pub fn new() -> Self {
        let (a, b) = (5.0 / 24.0, 7.0 / 24.0);
        #[rustfmt::skip]
        let m = Matrix4x8::from_row_slice(&[
            0.5, 0.5, 0.0,  0.0,  0.0,  0.0,  0.0, 0.0,
            0.0, 0.0, 0.0,  0.0,  0.0,  0.0,  0.5, 0.5,
            0.0, 0.0, 0.25, 0.25, 0.25, 0.25, 0.0, 0.0,
            a,   -a,  0.0,  0.0,  0.0,  0.0,  -b,  b,
        ]);
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix4x8 {
        &self.0
    }

    /// `B̄ W`: columns scaled by thruster health.
    pub fn weighted(&self, weights: &WeightMatrix) -> Matrix4x8 {
        let mut m = self.0;
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= weights.0[j];
        }
        m
    }
}

impl Default for ConfigMatrix {
    fn default() -> Self {
        Self::new()
    }
}

/// Normalized thruster commands, every component in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedForces(Vector8);

impl NormalizedForces {
    pub fn new(t_bar: Vector8) -> Result<Self> {
        if t_bar.iter().all(|t| (-1.0..=1.0).contains(t)) {
            Ok(Self(t_bar))
        } else {
            Err(Error::InvalidParameter(format!("normalized forces outside [-1, 1]: {:?}", t_bar.as_slice())))
        }
    }

    /// Projects onto the box; non-finite entries become zero.
    pub fn saturating(t_bar: Vector8) -> Self {
        Self(t_bar.map(|t| if t.is_finite() { t.clamp(-1.0, 1.0) } else { 0.0 }))
    }

    pub fn zeros() -> Self {
        Self(Vector8::zeros())
    }

    pub fn as_vector(&self) -> &Vector8 {
        &self.0
    }
}

/// Raw allocator output that may leave the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnclampedForces(pub Vector8);

/// Per-thruster health weights, `1` healthy and `0` total power loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMatrix(Vector8);

impl WeightMatrix {
    pub fn healthy() -> Self {
        Self(Vector8::repeat(1.0))
    }

    pub fn new(w: Vector8) -> Result<Self> {
        if w.iter().all(|x| (0.0..=1.0).contains(x)) {
            Ok(Self(w))
        } else {
            Err(Error::InvalidParameter("thruster weights must lie in [0, 1]".into()))
        }
    }

    pub fn as_vector(&self) -> &Vector8 {
        &self.0
    }

    pub fn get(&self, thruster: usize) -> f64 {
        self.0[thruster - 1]
    }
}

impl Default for WeightMatrix {
    fn default() -> Self {
        Self::healthy()
    }
}

/// Normalized generalized force `tau / tau_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedTorque(pub Vector4<f64>);

impl NormalizedTorque {
    pub fn zeros() -> Self {
        Self(Vector4::zeros())
    }

    /// Componentwise clamp to `[-1, 1]`.
    pub fn saturate(&self) -> Self {
        Self(self.0.map(|t| t.clamp(-1.0, 1.0)))
    }
}

/// Per-axis torque limits for a maximum thruster force `T_m`.
pub fn torque_limits(max_thruster_force: f64) -> Result<Vector4<f64>> {
    if !(max_thruster_force > 0.0) || !max_thruster_force.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "maximum thruster force must be positive, got {max_thruster_force}"
        )));
    }
    Ok(Vector4::new(2.0, 2.0, 4.0, 4.8) * max_thruster_force)
}

pub fn normalize_torque(tau: &Torque, max_thruster_force: f64) -> Result<NormalizedTorque> {
    let limits = torque_limits(max_thruster_force)?;
    Ok(NormalizedTorque(tau.to_vector().component_div(&limits)))
}

pub fn denormalize_torque(tau_bar: &NormalizedTorque, max_thruster_force: f64) -> Result<Torque> {
    let limits = torque_limits(max_thruster_force)?;
    Ok(Torque::from_vector(&tau_bar.0.component_mul(&limits)))
}

/// Torque actually produced under damage: `B̄ W T̄`.
pub fn forces_to_torque(forces: &NormalizedForces, weights: &WeightMatrix) -> NormalizedTorque {
    NormalizedTorque(ConfigMatrix::new().weighted(weights) * forces.0)
}

/// Sets `w_j = 1 - loss_fraction` for the 1-based `thruster` index.
pub fn apply_fault(weights: &WeightMatrix, thruster: usize, loss_fraction: f64) -> Result<WeightMatrix> {
    if !(1..=THRUSTERS).contains(&thruster) {
        return Err(Error::InvalidParameter(format!("thruster index {thruster} outside 1..=8")));
    }
    if !(0.0..=1.0).contains(&loss_fraction) {
        return Err(Error::InvalidParameter(format!("loss fraction {loss_fraction} outside [0, 1]")));
    }
    let mut w = weights.0;
    w[thruster - 1] = 1.0 - loss_fraction;
    Ok(WeightMatrix(w))
}

/// A power-loss event: from `start_time` on, `thruster` keeps `1 - loss` of its force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEvent {
    pub thruster: usize,
    pub loss: f64,
    #[serde(default)]
    pub start_time: f64,
}

impl FaultEvent {
    pub fn validate(&self) -> Result<()> {
        apply_fault(&WeightMatrix::healthy(), self.thruster, self.loss)?;
        if !(self.start_time >= 0.0) {
            return Err(Error::InvalidParameter("fault start_time must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Health weights at time `t`. Events are applied in list order.
pub fn weights_at(t: f64, faults: &[FaultEvent]) -> Result<WeightMatrix> {
    faults
        .iter()
        .filter(|f| f.start_time <= t)
        .try_fold(WeightMatrix::healthy(), |w, f| apply_fault(&w, f.thruster, f.loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn forces(v: [f64; 8]) -> NormalizedForces {
        NormalizedForces::new(Vector8::from(v)).unwrap()
    }

    #[test]
    fn config_matrix_entries_and_rank() {
        let b = ConfigMatrix::new();
        let m = b.matrix();
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.5, 0., 0., 0., 0., 0., 0.]);
        assert_eq!(m[(3, 0)], 5.0 / 24.0);
        assert_eq!(m[(3, 7)], 7.0 / 24.0);
        assert_eq!(m.rank(1e-12), 4);
        for row in m.row_iter() {
            assert_abs_diff_eq!(row.abs().sum(), 1.0, epsilon = 1e-15);
        }
        let yaw = Vector8::from([1.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(m.row(3).dot(&yaw.transpose()), 1.0);
    }

    #[test]
    fn torque_limit_examples() {
        assert_eq!(torque_limits(1.0).unwrap(), Vector4::new(2.0, 2.0, 4.0, 4.8));
        assert_eq!(torque_limits(250.0).unwrap(), Vector4::new(500.0, 500.0, 1000.0, 1200.0));
        let ratio = torque_limits(37.5).unwrap() / 37.5;
        assert_abs_diff_eq!(ratio, torque_limits(1.0).unwrap(), epsilon = 1e-15);
        assert!(torque_limits(0.0).is_err());
        assert!(torque_limits(-3.0).is_err());
    }

    #[test]
    fn normalize_examples() {
        let limits = torque_limits(250.0).unwrap();
        let at_limit = normalize_torque(&Torque::from_vector(&limits), 250.0).unwrap();
        assert_eq!(at_limit.0, Vector4::repeat(1.0));
        assert_eq!(normalize_torque(&Torque::default(), 250.0).unwrap().0, Vector4::zeros());
        let x = normalize_torque(&Torque::new(500.0, 0.0, 0.0, 0.0), 250.0).unwrap();
        assert_eq!(x.0, Vector4::new(1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn forces_to_torque_examples() {
        let all = forces([1.0; 8]);
        assert_abs_diff_eq!(
            forces_to_torque(&all, &WeightMatrix::healthy()).0,
            Vector4::new(1.0, 1.0, 1.0, 0.0),
            epsilon = 1e-15
        );
        let yaw = forces([1.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0]);
        assert_abs_diff_eq!(
            forces_to_torque(&yaw, &WeightMatrix::healthy()).0,
            Vector4::new(0.0, 0.0, 0.0, 1.0),
            epsilon = 1e-15
        );
        let dead = WeightMatrix::new(Vector8::zeros()).unwrap();
        assert_eq!(forces_to_torque(&all, &dead).0, Vector4::zeros());
    }

    #[test]
    fn apply_fault_examples() {
        let w = apply_fault(&WeightMatrix::healthy(), 1, 0.2).unwrap();
        assert_abs_diff_eq!(w.get(1), 0.8, epsilon = 1e-15);
        assert!((2..=8).all(|j| w.get(j) == 1.0));

        let w = apply_fault(&WeightMatrix::healthy(), 8, 1.0).unwrap();
        assert_eq!(w.get(8), 0.0);

        assert_eq!(apply_fault(&WeightMatrix::healthy(), 3, 0.0).unwrap(), WeightMatrix::healthy());

        assert!(apply_fault(&WeightMatrix::healthy(), 0, 0.5).is_err());
        assert!(apply_fault(&WeightMatrix::healthy(), 9, 0.5).is_err());
        assert!(apply_fault(&WeightMatrix::healthy(), 2, 1.5).is_err());
    }

    #[test]
    fn faults_are_step_functions() {
        let faults = [FaultEvent { thruster: 1, loss: 1.0, start_time: 2.0 }];
        assert_eq!(weights_at(1.99, &faults).unwrap(), WeightMatrix::healthy());
        assert_eq!(weights_at(2.0, &faults).unwrap().get(1), 0.0);
    }

    fn box8() -> impl Strategy<Value = Vector8> {
        proptest::array::uniform8(-1.0f64..=1.0).prop_map(Vector8::from)
    }

    fn weights8() -> impl Strategy<Value = WeightMatrix> {
        proptest::array::uniform8(0.0f64..=1.0).prop_map(|w| WeightMatrix::new(Vector8::from(w)).unwrap())
    }

    proptest! {
        #[test]
        fn forces_to_torque_is_linear(a in -1.0f64..1.0, b in -1.0f64..1.0, t1 in box8(), t2 in box8(), w in weights8()) {
            let f = |t: Vector8| ConfigMatrix::new().weighted(&w) * t;
            let lhs = f(t1 * a + t2 * b);
            let rhs = f(t1) * a + f(t2) * b;
            prop_assert!((lhs - rhs).abs().max() < 1e-12);
        }

        #[test]
        fn achieved_torque_stays_in_unit_box(t in box8(), w in weights8()) {
            let tau = forces_to_torque(&NormalizedForces::new(t).unwrap(), &w);
            prop_assert!(tau.0.iter().all(|x| x.abs() <= 1.0 + 1e-12));
        }

        #[test]
        fn faults_commute_on_distinct_thrusters(i in 1usize..=8, j in 1usize..=8, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            prop_assume!(i != j);
            let h = WeightMatrix::healthy();
            let ij = apply_fault(&apply_fault(&h, i, a).unwrap(), j, b).unwrap();
            let ji = apply_fault(&apply_fault(&h, j, b).unwrap(), i, a).unwrap();
            prop_assert_eq!(ij, ji);
        }

        #[test]
        fn zero_loss_is_idempotent(i in 1usize..=8, w in weights8()) {
            let once = apply_fault(&w, i, 0.0).unwrap();
            prop_assert_eq!(apply_fault(&once, i, 0.0).unwrap(), once);
        }
    }
}
