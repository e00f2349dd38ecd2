use serde::{Deserialize, Serialize};

use crate::allocation::AllocatorKind;
use crate::control::{desired_body_velocity, BackstepGains, SmcGains};
use crate::environment::PerturbSpec;
use crate::goa::GoaParams;
use crate::sim::trajectory::TrajectorySpec;
use crate::thrusters::FaultEvent;
use crate::vehicle::{BodyVelocity, Pose, VehicleParams};
use crate::{Error, Result};

/// A complete, self-contained experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub dt: f64,
    pub seed: u64,
    pub allocator: AllocatorKind,
    pub trajectory: TrajectorySpec,
    pub initial_pose: Pose,
    /// Body velocity at `t = 0`. Unset means the desired body velocity at
    /// `t = 0`, so the vehicle starts moving with the reference.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_velocity: Option<BodyVelocity>,
    pub vehicle: VehicleParams,
    pub backstep: BackstepGains,
    pub smc: SmcGains,
    pub goa: GoaParams,
    pub faults: Vec<FaultEvent>,
    pub perturb: PerturbSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            dt: 0.01,
            seed: 0,
            allocator: AllocatorKind::Goa,
            trajectory: TrajectorySpec::helix(),
            initial_pose: Pose::new(0.0, 10.0, 0.0, 0.0),
            initial_velocity: None,
            vehicle: VehicleParams::default(),
            backstep: BackstepGains::default(),
            smc: SmcGains::default(),
            goa: GoaParams::default(),
            faults: Vec::new(),
            perturb: PerturbSpec::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        self.trajectory.validate()?;
        let ratio = self.trajectory.duration() / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "duration {} is not a multiple of dt {}",
                self.trajectory.duration(),
                self.dt
            )));
        }
        if !self.initial_pose.is_finite() || !self.initial_velocity.is_none_or(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("initial state must be finite".into()));
        }
        self.vehicle.validate()?;
        self.backstep.validate()?;
        self.smc.validate()?;
        self.goa.validate()?;
        self.faults.iter().try_for_each(FaultEvent::validate)?;
        self.perturb.validate()
    }

    /// Number of integration steps; the output holds one more row than this.
    pub fn steps(&self) -> usize {
        (self.trajectory.duration() / self.dt).round() as usize
    }

    pub fn start_velocity(&self) -> Result<BodyVelocity> {
        match self.initial_velocity {
            Some(v) => Ok(v),
            None => {
                let (pose, rate) = self.trajectory.desired_state(0.0)?;
                Ok(BodyVelocity::from_vector(&desired_body_velocity(&rate, pose.psi)))
            }
        }
    }

    pub fn goa_seed(&self) -> u64 {
        self.goa.seed.unwrap_or(self.seed)
    }

    pub fn perturb_seed(&self) -> u64 {
        self.perturb.seed.unwrap_or(self.seed)
    }

    /// Shortened copy for quick checks: a fifth of the duration at `dt = 0.02`.
    pub fn fast(mut self) -> Self {
        self.trajectory = self.trajectory.clone().with_duration(self.trajectory.duration() / 5.0);
        self.dt = 0.02;
        self
    }
}
