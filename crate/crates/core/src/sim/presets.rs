//! Named scenarios for the helix and polyline fault experiments.
//!
//! `-goa` presets run the full cascade with swarm allocation; `-pinv` presets
//! use the clamped weighted pseudo-inverse. `-perturbed` adds currents and
//! position noise.

use crate::allocation::AllocatorKind;
use crate::environment::PerturbSpec;
use crate::sim::{Scenario, TrajectorySpec};
use crate::thrusters::FaultEvent;
use crate::vehicle::Pose;
use crate::{Error, Result};

const BASES: [&str; 3] = ["helix-single-T1", "poly-single-T8", "poly-double-T1T8"];

/// Every accepted preset name, in a stable order.
pub fn names() -> Vec<String> {
    let mut out = vec!["helix-nominal-goa".to_string()];
    for base in BASES {
        for alloc in ["goa", "pinv"] {
            out.push(format!("{base}-{alloc}"));
            out.push(format!("{base}-{alloc}-perturbed"));
        }
    }
    out
}

fn dead(thruster: usize) -> FaultEvent {
    FaultEvent { thruster, loss: 1.0, start_time: 0.0 }
}

pub fn preset(name: &str) -> Result<Scenario> {
    let unknown = || Error::UnknownPreset(name.to_string());
    let (rest, perturbed) = match name.strip_suffix("-perturbed") {
        Some(r) => (r, true),
        None => (name, false),
    };
    let (base, alloc) = rest.rsplit_once('-').ok_or_else(unknown)?;
    let allocator = match alloc {
        "goa" => AllocatorKind::Goa,
        "pinv" => AllocatorKind::PinvT,
        _ => return Err(unknown()),
    };

    let helix_start = Pose::new(0.0, 10.0, 0.0, 0.0);
    let poly_start = Pose::new(0.0, 2.5, 0.0, 0.0);
    let (trajectory, initial_pose, faults) = match base {
        "helix-nominal" if allocator == AllocatorKind::Goa && !perturbed => (TrajectorySpec::helix(), helix_start, vec![]),
        "helix-single-T1" => (TrajectorySpec::helix(), helix_start, vec![dead(1)]),
        "poly-single-T8" => (TrajectorySpec::polyline(), poly_start, vec![dead(8)]),
        "poly-double-T1T8" => (TrajectorySpec::polyline(), poly_start, vec![dead(1), dead(8)]),
        _ => return Err(unknown()),
    };

    let mut s = Scenario { allocator, trajectory, initial_pose, faults, ..Scenario::default() };
    if allocator == AllocatorKind::PinvT {
        // The pseudo-inverse baseline drives plain backstepping with the raw
        // pose error, as in a conventional cascade.
        s.backstep.restrict_error = false;
    }
    if perturbed {
        s.perturb = PerturbSpec::enabled();
    }
    Ok(s)
}
