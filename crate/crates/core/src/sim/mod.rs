//! Closed-loop simulation: trajectory, controller, allocator, disturbances and
//! plant stepped on a fixed grid.

mod metrics;
pub mod presets;
mod scenario;
pub mod trajectory;

use std::time::Instant;

use nalgebra::Vector4;

use crate::allocation::Allocator;
use crate::control::{
    backstepping_velocity, desired_body_velocity, lyapunov_gamma0, lyapunov_v2, smc_torque, velocity_error,
    ModelEstimate, SmcState,
};
use crate::environment::{current_rng, current_torque, noise_rng, perturb_position, sample_current_coefficients, CurrentCoefficients};
use crate::goa::GoaParams;
use crate::par::Execution;
use crate::thrusters::{denormalize_torque, normalize_torque, torque_limits, weights_at, Vector8};
use crate::vehicle::{integrate_step, BodyVelocity, Pose, Torque};
use crate::{Error, Result};

pub use metrics::{compare_runs, compute_metrics, Comparison, ComparisonRow, RunMetrics};
pub use scenario::Scenario;
pub use trajectory::TrajectorySpec;

/// Velocity magnitude beyond which the plant is considered to have blown up.
const DIVERGENCE_SPEED: f64 = 1e3;

/// Percentile of the rehearsal torque used to scale current amplitudes.
const CURRENT_SCALE_PERCENTILE: f64 = 0.95;

/// Everything recorded at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub desired: Pose,
    pub pose: Pose,
    pub measured: Pose,
    /// Desired minus measured pose, heading wrapped to (-π, π].
    pub error: Vector4<f64>,
    pub v_c: Vector4<f64>,
    pub velocity: BodyVelocity,
    pub tau_demand: Vector4<f64>,
    pub tau_achieved: Vector4<f64>,
    pub forces: Vector8,
    pub err_mag: f64,
    pub err_dir: f64,
    pub gamma0: f64,
    pub v2: f64,
    pub objective: f64,
    pub goa_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub records: Vec<StepRecord>,
    /// Time at which the plant state blew up; `records` stops one step earlier.
    pub diverged_at: Option<f64>,
    pub wall_clock_per_step: Option<f64>,
}

impl SimOutput {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Wraps an angle to (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a.rem_euclid(TAU);
    if w > PI { w - TAU } else { w }
}

/// Runs `scenario` to completion, or until the plant state blows up (see
/// [`SimOutput::diverged_at`]). Perturbed runs first rehearse the scenario
/// without disturbances to size the current amplitudes.
pub fn run_scenario(scenario: &Scenario) -> Result<SimOutput> {
    scenario.validate()?;
    let currents = if scenario.perturb.currents {
        let scale = current_scale(scenario)?;
        Some(sample_current_coefficients(&scale, scenario.perturb.amplitude_fraction, &mut current_rng(scenario.perturb_seed())))
    } else {
        None
    };
    simulate(scenario, currents.as_ref(), scenario.perturb.noise)
}

/// Runs independent scenarios, in parallel when `exec` asks for it.
pub fn run_batch(scenarios: &[Scenario], exec: Execution) -> Vec<Result<SimOutput>> {
    exec.map(scenarios, run_scenario)
}

fn current_scale(scenario: &Scenario) -> Result<Vector4<f64>> {
    // A diverged rehearsal still sizes the currents from the samples it recorded.
    let rehearsal = simulate(scenario, None, false)?;
    let limits = torque_limits(scenario.vehicle.max_thruster_force)?;
    Ok(Vector4::from_fn(|axis, _| {
        let mut mags: Vec<f64> = rehearsal.records.iter().map(|r| (r.tau_achieved[axis] * limits[axis]).abs()).collect();
        mags.sort_by(f64::total_cmp);
        let idx = ((mags.len() - 1) as f64 * CURRENT_SCALE_PERCENTILE).round() as usize;
        mags[idx]
    }))
}

fn simulate(scenario: &Scenario, currents: Option<&CurrentCoefficients>, noise: bool) -> Result<SimOutput> {
    let started = Instant::now();
    let dt = scenario.dt;
    let n = scenario.steps();
    let vehicle = &scenario.vehicle;
    let t_max = vehicle.max_thruster_force;
    let estimate = ModelEstimate::from_params(vehicle, scenario.smc.model_error);
    let goa = GoaParams { seed: Some(scenario.goa_seed()), ..scenario.goa.clone() };
    let mut allocator = Allocator::new(scenario.allocator, goa);
    let mut noise_source = noise.then(|| noise_rng(scenario.perturb_seed()));

    let mut pose = scenario.initial_pose;
    let mut vel = scenario.start_velocity()?;
    let mut smc = SmcState::default();
    let mut prev_vc: Option<Vector4<f64>> = None;
    let mut records = Vec::with_capacity(n + 1);
    let mut diverged_at = None;

    for k in 0..=n {
        let t = k as f64 * dt;
        let fail = |e: Error| Error::ScenarioFailed { time: t, source: Box::new(e) };

        let (desired, pdot_d) = scenario.trajectory.desired_state(t.min(scenario.trajectory.duration())).map_err(fail)?;
        let measured = match noise_source.as_mut() {
            Some(rng) => perturb_position(&pose, scenario.perturb.noise_bound, rng),
            None => pose,
        };
        let mut error = desired.to_vector() - measured.to_vector();
        error[3] = wrap_angle(error[3]);

        let v_e = velocity_error(&error, &scenario.backstep, &vehicle.max_body_velocity);
        let v_d = desired_body_velocity(&pdot_d, desired.psi);
        let v_c = backstepping_velocity(&v_e, measured.psi, &v_d, &scenario.backstep);
        let v_c_dot = prev_vc.map_or_else(Vector4::zeros, |p| (v_c - p) / dt);
        prev_vc = Some(v_c);

        let out = smc_torque(&vel, &v_c, &v_c_dot, measured.psi, &smc, &estimate, &scenario.smc, dt);
        smc = out.state;

        let tau_demand = normalize_torque(&out.torque, t_max).map_err(fail)?.saturate();
        let weights = weights_at(t, &scenario.faults).map_err(fail)?;
        let alloc = allocator.allocate(&tau_demand, &weights).map_err(fail)?;

        records.push(StepRecord {
            t,
            desired,
            pose,
            measured,
            error,
            v_c,
            velocity: vel,
            tau_demand: tau_demand.0,
            tau_achieved: alloc.achieved.0,
            forces: *alloc.forces.as_vector(),
            err_mag: alloc.error.magnitude,
            err_dir: alloc.error.direction,
            gamma0: lyapunov_gamma0(&error),
            v2: lyapunov_v2(&out.surface, vehicle, scenario.smc.lambda),
            objective: alloc.objective,
            goa_iterations: alloc.iterations,
        });

        if k == n {
            break;
        }
        let mut tau = denormalize_torque(&alloc.achieved, t_max).map_err(fail)?.to_vector();
        if let Some(c) = currents {
            tau += current_torque(t, c);
        }
        let (p, v) = integrate_step(&pose, &vel, &Torque::from_vector(&tau), dt, vehicle);
        if !p.is_finite() || !v.is_finite() || v.to_vector().amax() > DIVERGENCE_SPEED {
            diverged_at = Some(t + dt);
            break;
        }
        pose = p;
        vel = v;
    }

    let wall_clock_per_step = Some(started.elapsed().as_secs_f64() / records.len() as f64);
    Ok(SimOutput { records, diverged_at, wall_clock_per_step })
}
