//! Desired trajectories: analytic pose and its time derivative.

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::vehicle::Pose;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// `x = R sin(ωt)`, `y = R − R cos(ωt)`, `z = climb·t`, `ψ = yaw_rate·t`.
    Helix { duration: f64, radius: f64, angular_rate: f64, climb_rate: f64, yaw_rate: f64 },
    /// `x = t`; `y` and `z` rise, hold, rise and hold over four equal segments;
    /// constant heading.
    Polyline3d { duration: f64, segment: f64, heading: f64 },
    /// Linear interpolation between waypoints `[x, y, z, psi]` at strictly
    /// increasing `times`, the first of which is 0.
    Piecewise { duration: f64, times: Vec<f64>, waypoints: Vec<[f64; 4]> },
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self::helix()
    }
}

impl TrajectorySpec {
    pub fn helix() -> Self {
        TrajectorySpec::Helix { duration: 50.0, radius: 10.0, angular_rate: 0.2, climb_rate: 0.5, yaw_rate: 0.2 }
    }

    pub fn polyline() -> Self {
        TrajectorySpec::Polyline3d { duration: 20.0, segment: 5.0, heading: 0.2 }
    }

    pub fn duration(&self) -> f64 {
        match self {
            TrajectorySpec::Helix { duration, .. }
            | TrajectorySpec::Polyline3d { duration, .. }
            | TrajectorySpec::Piecewise { duration, .. } => *duration,
        }
    }

    pub fn with_duration(mut self, d: f64) -> Self {
        match &mut self {
            TrajectorySpec::Helix { duration, .. }
            | TrajectorySpec::Polyline3d { duration, .. }
            | TrajectorySpec::Piecewise { duration, .. } => *duration = d,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("trajectory: {m}")));
        let d = self.duration();
        if !(d > 0.0 && d.is_finite()) {
            return bad("duration must be positive");
        }
        match self {
            TrajectorySpec::Helix { radius, angular_rate, climb_rate, yaw_rate, .. } => {
                if ![radius, angular_rate, climb_rate, yaw_rate].iter().all(|v| v.is_finite()) {
                    return bad("helix parameters must be finite");
                }
            }
            TrajectorySpec::Polyline3d { segment, heading, .. } => {
                if !(*segment > 0.0 && segment.is_finite() && heading.is_finite()) {
                    return bad("polyline segment must be positive");
                }
            }
            TrajectorySpec::Piecewise { times, waypoints, .. } => {
                if times.len() < 2 || times.len() != waypoints.len() {
                    return bad("piecewise needs at least two waypoints and one time per waypoint");
                }
                if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("piecewise times must start at 0 and increase strictly");
                }
                if waypoints.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("waypoints must be finite");
                }
            }
        }
        Ok(())
    }

    /// Desired pose and its rate at time `t`. At corners the rate of the
    /// segment starting at `t` is returned.
    pub fn desired_state(&self, t: f64) -> Result<(Pose, Vector4<f64>)> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(Error::TimeOutOfRange { time: t, duration });
        }
        Ok(match self {
            TrajectorySpec::Helix { radius, angular_rate, climb_rate, yaw_rate, .. } => {
                let (s, c) = (angular_rate * t).sin_cos();
                let pose = Pose::new(radius * s, radius - radius * c, climb_rate * t, yaw_rate * t);
                let rate = Vector4::new(radius * angular_rate * c, radius * angular_rate * s, *climb_rate, *yaw_rate);
                (pose, rate)
            }
            TrajectorySpec::Polyline3d { segment, heading, .. } => {
                let (h, dh) = staircase(t, *segment);
                (Pose::new(t, h, h, *heading), Vector4::new(1.0, dh, dh, 0.0))
            }
            TrajectorySpec::Piecewise { times, waypoints, .. } => {
                // Segment k covers [times[k], times[k+1]); past the last knot the
                // final waypoint is held.
                let k = times.partition_point(|&tk| tk <= t);
                if k >= times.len() {
                    let last = waypoints[waypoints.len() - 1];
                    (Pose::from_vector(&Vector4::from(last)), Vector4::zeros())
                } else {
                    let (t0, t1) = (times[k - 1], times[k]);
                    let (a, b) = (Vector4::from(waypoints[k - 1]), Vector4::from(waypoints[k]));
                    let rate = (b - a) / (t1 - t0);
                    (Pose::from_vector(&(a + rate * (t - t0))), rate)
                }
            }
        })
    }
}

/// Rise with unit slope over one segment, hold for one, rise again, then hold.
fn staircase(t: f64, seg: f64) -> (f64, f64) {
    if t < seg {
        (t, 1.0)
    } else if t < 2.0 * seg {
        (seg, 0.0)
    } else if t < 3.0 * seg {
        (t - seg, 1.0)
    } else {
        (2.0 * seg, 0.0)
    }
}
