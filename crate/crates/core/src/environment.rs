//! Environmental disturbances: a current-induced torque added at the actuator
//! and uniform noise on the measured pose.

use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::vehicle::Pose;
use crate::{Error, Result};

const CURRENT_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbSpec {
    pub currents: bool,
    pub noise: bool,
    /// Unset means "derive from the scenario seed".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Current amplitudes are drawn within this fraction of the nominal torque scale.
    pub amplitude_fraction: f64,
    pub noise_bound: f64,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        Self { currents: false, noise: false, seed: None, amplitude_fraction: 0.1, noise_bound: 0.1 }
    }
}

impl PerturbSpec {
    pub fn enabled() -> Self {
        Self { currents: true, noise: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.amplitude_fraction) {
            return Err(Error::InvalidParameter(format!(
                "perturb: amplitude_fraction must be in [0, 0.5], got {}",
                self.amplitude_fraction
            )));
        }
        if !(self.noise_bound >= 0.0 && self.noise_bound.is_finite()) {
            return Err(Error::InvalidParameter("perturb: noise_bound must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.currents || self.noise
    }
}

/// Generator for the current coefficients of a run.
pub fn current_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CURRENT_STREAM);
    rng
}

/// Generator for the measurement noise sequence of a run.
pub fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    rng
}

/// Per-axis constants of `A1 cos(w1 t) sin(w2 t) + A2 cos(w3 t) sin(w4 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurrentCoefficients {
    pub a1: [f64; 4],
    pub a2: [f64; 4],
    pub omega: [[f64; 4]; 4],
}

/// Draws amplitudes within `±amplitude_fraction · scale_i` and frequencies in
/// `[-1, 1]`, independently for each axis.
pub fn sample_current_coefficients(scale: &Vector4<f64>, amplitude_fraction: f64, rng: &mut impl Rng) -> CurrentCoefficients {
    let mut c = CurrentCoefficients::default();
    for axis in 0..4 {
        let bound = amplitude_fraction * scale[axis].abs();
        let mut amplitude = || if bound > 0.0 { rng.random_range(-bound..=bound) } else { 0.0 };
        c.a1[axis] = amplitude();
        c.a2[axis] = amplitude();
        for w in &mut c.omega[axis] {
            *w = rng.random_range(-1.0..=1.0);
        }
    }
    c
}

pub fn current_torque(t: f64, c: &CurrentCoefficients) -> Vector4<f64> {
    Vector4::from_fn(|i, _| {
        let w = c.omega[i];
        c.a1[i] * (w[0] * t).cos() * (w[1] * t).sin() + c.a2[i] * (w[2] * t).cos() * (w[3] * t).sin()
    })
}

/// Adds independent uniform noise in `[-bound, bound]` to each pose component.
pub fn perturb_position(p: &Pose, bound: f64, rng: &mut impl Rng) -> Pose {
    if bound == 0.0 {
        return *p;
    }
    let mut offset = || rng.random_range(-bound..=bound);
    Pose::new(p.x + offset(), p.y + offset(), p.z + offset(), p.psi + offset())
}
