//! Mapping a normalized torque demand onto the eight thrusters.
//!
//! The baseline is the weighted pseudo-inverse `W B̄ᵀ (B̄ W B̄ᵀ)⁻¹ τ̄_d`
//! followed by either T-approximation (componentwise clamp) or
//! S-approximation (uniform rescale). [`Allocator`] wraps these together with
//! the grasshopper search behind one interface used by the simulator.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::goa::{self, GoaParams};
use crate::thrusters::{forces_to_torque, ConfigMatrix, NormalizedForces, NormalizedTorque, UnclampedForces, Vector8, WeightMatrix};
use crate::{Error, Result};

/// Condition number above which `B̄ W B̄ᵀ` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Norms below this are treated as zero when measuring direction.
const ZERO_NORM: f64 = 1e-9;

/// Magnitude `‖τ̄_d − τ̄‖` and angle between demanded and achieved torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AllocationError {
    pub magnitude: f64,
    pub direction: f64,
}

impl AllocationError {
    pub fn weighted_sum(&self, magnitude_weight: f64, direction_weight: f64) -> f64 {
        magnitude_weight * self.magnitude + direction_weight * self.direction
    }
}

pub fn allocation_error(tau_d: &NormalizedTorque, tau: &NormalizedTorque) -> AllocationError {
    let magnitude = (tau_d.0 - tau.0).norm();
    let (nd, na) = (tau_d.0.norm(), tau.0.norm());
    let direction = if nd < ZERO_NORM || na < ZERO_NORM {
        0.0
    } else {
        // arccos of the normalized dot product, in the half-angle form that
        // stays accurate near 0 and π
        let (a, b) = (tau_d.0 / nd, tau.0 / na);
        2.0 * (a - b).norm().atan2((a + b).norm())
    };
    AllocationError { magnitude, direction }
}

pub fn weighted_pseudoinverse(tau_d: &NormalizedTorque, weights: &WeightMatrix) -> Result<UnclampedForces> {
    let b = ConfigMatrix::new();
    let bt = b.matrix().transpose();
    let gram: Matrix4<f64> = b.weighted(weights) * bt;

    let eig = SymmetricEigen::new(gram).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularAllocation { condition });
    }
    let solved = gram
        .cholesky()
        .ok_or(Error::SingularAllocation { condition })?
        .solve(&tau_d.0);
    let t = (bt * solved).component_mul(weights.as_vector());
    Ok(UnclampedForces(t))
}

/// `W B̄ᵀ (B̄ W B̄ᵀ)⁺ τ̄_d` with the Moore–Penrose inverse, defined for every
/// fault pattern. Equals [`weighted_pseudoinverse`] whenever that succeeds;
/// for rank-deficient patterns it returns the least-squares demand fit.
pub fn least_squares_pseudoinverse(tau_d: &NormalizedTorque, weights: &WeightMatrix) -> UnclampedForces {
    let b = ConfigMatrix::new();
    let bt = b.matrix().transpose();
    let gram: Matrix4<f64> = b.weighted(weights) * bt;
    let scale = gram.amax().max(f64::MIN_POSITIVE);
    let pinv = gram.pseudo_inverse(scale / MAX_CONDITION).unwrap_or_else(|_| Matrix4::zeros());
    UnclampedForces((bt * (pinv * tau_d.0)).component_mul(weights.as_vector()))
}

fn baseline_solution(tau_d: &NormalizedTorque, weights: &WeightMatrix) -> Result<UnclampedForces> {
    match weighted_pseudoinverse(tau_d, weights) {
        Err(Error::SingularAllocation { .. }) => Ok(least_squares_pseudoinverse(tau_d, weights)),
        other => other,
    }
}

/// Componentwise projection onto `[-1, 1]`.
pub fn t_approximation(raw: &UnclampedForces) -> NormalizedForces {
    NormalizedForces::saturating(raw.0)
}

/// Uniform rescale by the largest magnitude when it exceeds one.
pub fn s_approximation(raw: &UnclampedForces) -> NormalizedForces {
    let peak = raw.0.amax();
    if peak <= 1.0 {
        NormalizedForces::saturating(raw.0)
    } else {
        NormalizedForces::saturating(raw.0 / peak)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum AllocatorKind {
    #[serde(rename = "pinv-t")]
    PinvT,
    #[serde(rename = "pinv-s")]
    PinvS,
    #[default]
    #[serde(rename = "goa")]
    Goa,
}

impl AllocatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            AllocatorKind::PinvT => "pinv-t",
            AllocatorKind::PinvS => "pinv-s",
            AllocatorKind::Goa => "goa",
        }
    }
}

impl fmt::Display for AllocatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllocatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinv-t" => Ok(AllocatorKind::PinvT),
            "pinv-s" => Ok(AllocatorKind::PinvS),
            "goa" => Ok(AllocatorKind::Goa),
            other => Err(Error::InvalidParameter(format!(
                "unknown allocator `{other}` (expected pinv-t, pinv-s or goa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub forces: NormalizedForces,
    pub achieved: NormalizedTorque,
    pub error: AllocationError,
    /// Weighted objective of the returned forces.
    pub objective: f64,
    /// Swarm iterations spent; zero for the pseudo-inverse allocators.
    pub iterations: usize,
}

/// Stateful allocator used once per control step.
///
/// The pseudo-inverse allocators fall back to
/// [`least_squares_pseudoinverse`] when the fault pattern makes `B̄ W B̄ᵀ`
/// singular, so every pattern yields some allocation.
///
/// The swarm allocator keeps the previous step's best solution as a warm start
/// and derives a fresh RNG key per call from its seed and call counter.
#[derive(Debug, Clone)]
pub struct Allocator {
    kind: AllocatorKind,
    goa: GoaParams,
    previous: Option<Vector8>,
    calls: u64,
}

impl Allocator {
    pub fn new(kind: AllocatorKind, goa: GoaParams) -> Self {
        Self { kind, goa, previous: None, calls: 0 }
    }

    pub fn kind(&self) -> AllocatorKind {
        self.kind
    }

    pub fn allocate(&mut self, tau_d: &NormalizedTorque, weights: &WeightMatrix) -> Result<Allocation> {
        let (forces, iterations) = match self.kind {
            AllocatorKind::PinvT => (t_approximation(&baseline_solution(tau_d, weights)?), 0),
            AllocatorKind::PinvS => (s_approximation(&baseline_solution(tau_d, weights)?), 0),
            AllocatorKind::Goa => {
                let objective = goa::allocation_objective(*tau_d, *weights, &self.goa);
                let params = GoaParams { seed: goa::step_seed(self.goa.seed, self.calls), ..self.goa.clone() };
                let result = goa::optimize(&objective, &params, self.previous.as_ref())?;
                self.previous = Some(result.best_position);
                (NormalizedForces::saturating(result.best_position), self.goa.max_iterations)
            }
        };
        self.calls += 1;
        let achieved = forces_to_torque(&forces, weights);
        let error = allocation_error(tau_d, &achieved);
        Ok(Allocation {
            forces,
            achieved,
            error,
            objective: error.weighted_sum(self.goa.magnitude_weight, self.goa.direction_weight),
            iterations,
        })
    }
}
