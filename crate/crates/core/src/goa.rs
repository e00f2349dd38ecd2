//! Grasshopper optimization over a bounded box.
//!
//! Each iteration moves every agent to
//!
//! ```text
//! X_i = c · Σ_{j≠i} c·(ub − lb)/2 · s(d_ij) · (x_j − x_i)/d_ij + T
//! ```
//!
//! where `T` is the best position found so far, `s(r) = 0.5 e^{-r/1.5} − e^{-r}`
//! is the social force and `c` shrinks linearly from `c_max` to `c_min`. The
//! update is synchronous: all agents move from the same snapshot, which keeps
//! results identical whether fitness is evaluated sequentially or in parallel.
//!
//! Randomness is confined to initialization. Agent `i` draws its start point
//! from a ChaCha8 stream keyed by the run seed with stream id `i`, so growing the
//! swarm never perturbs the draws of existing agents.

use nalgebra::{SVector, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::allocation_error;
use crate::par::Execution;
use crate::thrusters::{ConfigMatrix, NormalizedTorque, Vector8, WeightMatrix};
use crate::{Error, Result};

const ATTRACTION: f64 = 0.5;
const LENGTH_SCALE: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoaParams {
    pub swarm_size: usize,
    pub max_iterations: usize,
    pub c_max: f64,
    pub c_min: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Unset means "derive from the scenario seed".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Map distances into `[2, 4)` before applying `s`, as the reference GOA
    /// implementation does. Off by default.
    pub distance_remap: bool,
    pub magnitude_weight: f64,
    pub direction_weight: f64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for GoaParams {
    fn default() -> Self {
        Self {
            swarm_size: 10,
            max_iterations: 100,
            c_max: 1.0,
            c_min: 0.00001,
            lower_bound: -1.0,
            upper_bound: 1.0,
            seed: None,
            distance_remap: false,
            magnitude_weight: 1.0,
            direction_weight: 1.0,
            execution: Execution::Sequential,
        }
    }
}

impl GoaParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("goa: {m}")));
        if self.swarm_size < 2 {
            return bad("swarm_size must be at least 2");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.c_min > 0.0 && self.c_min < self.c_max && self.c_max.is_finite()) {
            return bad("require 0 < c_min < c_max");
        }
        if !(self.lower_bound < self.upper_bound) || !self.lower_bound.is_finite() || !self.upper_bound.is_finite() {
            return bad("require lower_bound < upper_bound");
        }
        if !(self.magnitude_weight >= 0.0 && self.direction_weight >= 0.0) {
            return bad("objective weights must be nonnegative");
        }
        Ok(())
    }
}

/// Social interaction: repulsive below `3 ln 2`, weakly attractive above.
pub fn social_interaction(r: f64) -> f64 {
    ATTRACTION * (-r / LENGTH_SCALE).exp() - (-r).exp()
}

/// Linearly shrinking comfort-zone coefficient for iteration `l` of `max_l`.
pub fn comfort_coefficient(l: usize, max_l: usize, c_max: f64, c_min: f64) -> f64 {
    if l == 0 {
        return c_max;
    }
    if l == max_l {
        return c_min;
    }
    c_max - l as f64 * (c_max - c_min) / max_l as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent<const D: usize> {
    pub position: SVector<f64, D>,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState<const D: usize> {
    pub agents: Vec<Agent<D>>,
    pub best_position: SVector<f64, D>,
    pub best_fitness: f64,
    pub iteration: usize,
}

impl<const D: usize> SwarmState<D> {
    fn from_agents(agents: Vec<Agent<D>>) -> Self {
        let (best_position, best_fitness) = best_of(&agents);
        Self { agents, best_position, best_fitness, iteration: 0 }
    }

    /// Folds freshly evaluated agents in; the best only ever improves.
    fn absorb(&mut self, agents: Vec<Agent<D>>) {
        let (pos, fit) = best_of(&agents);
        if fit < self.best_fitness {
            self.best_position = pos;
            self.best_fitness = fit;
        }
        self.agents = agents;
        self.iteration += 1;
    }
}

/// Lowest fitness, ties to the lowest index. NaN fitness never wins.
fn best_of<const D: usize>(agents: &[Agent<D>]) -> (SVector<f64, D>, f64) {
    let mut best = 0;
    for (i, a) in agents.iter().enumerate().skip(1) {
        if a.fitness < agents[best].fitness || agents[best].fitness.is_nan() {
            best = i;
        }
    }
    (agents[best].position, agents[best].fitness)
}

/// Positions after one synchronous update with shrink factor `c`, attracted to
/// `state.best_position`.
pub fn swarm_update<const D: usize>(state: &SwarmState<D>, c: f64, params: &GoaParams) -> Vec<SVector<f64, D>> {
    let half_span = (params.upper_bound - params.lower_bound) / 2.0;
    let positions: Vec<_> = state.agents.iter().map(|a| a.position).collect();
    positions
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let mut social = SVector::<f64, D>::zeros();
            for (j, xj) in positions.iter().enumerate() {
                if i == j {
                    continue;
                }
                let delta = xj - xi;
                let dist = delta.norm();
                if dist == 0.0 {
                    continue;
                }
                let r = if params.distance_remap { 2.0 + dist % 2.0 } else { dist };
                social += delta * (c * half_span * social_interaction(r) / dist);
            }
            (social * c + state.best_position).map(|x| x.clamp(params.lower_bound, params.upper_bound))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoaResult<const D: usize> {
    pub best_position: SVector<f64, D>,
    pub best_fitness: f64,
    /// Best-so-far fitness after initialization and after each iteration.
    pub history: Vec<f64>,
}

/// Derives the ChaCha key for the `call`-th optimization of a run.
pub fn step_seed(seed: Option<u64>, call: u64) -> Option<u64> {
    // splitmix64 finalizer over (seed, call)
    let mut z = seed.unwrap_or(0) ^ call.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    Some(z ^ (z >> 31))
}

fn initial_position<const D: usize>(seed: u64, agent: usize, lb: f64, ub: f64) -> SVector<f64, D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent as u64);
    SVector::from_fn(|_, _| rng.random_range(lb..=ub))
}

/// Runs the full search loop. `warm_start`, when given, replaces agent 0.
pub fn optimize<const D: usize, F>(
    objective: &F,
    params: &GoaParams,
    warm_start: Option<&SVector<f64, D>>,
) -> Result<GoaResult<D>>
where
    F: Fn(&SVector<f64, D>) -> f64 + Sync,
{
    params.validate()?;
    let seed = params.seed.unwrap_or(0);
    let (lb, ub) = (params.lower_bound, params.upper_bound);
    let exec = params.execution;

    let evaluate = |positions: Vec<SVector<f64, D>>| -> Vec<Agent<D>> {
        let fitness = exec.map(&positions, |p| objective(p));
        positions.into_iter().zip(fitness).map(|(position, fitness)| Agent { position, fitness }).collect()
    };

    let start: Vec<_> = (0..params.swarm_size)
        .map(|i| match (i, warm_start) {
            (0, Some(w)) => w.map(|x| x.clamp(lb, ub)),
            _ => initial_position(seed, i, lb, ub),
        })
        .collect();
    let mut state = SwarmState::from_agents(evaluate(start));
    let mut history = Vec::with_capacity(params.max_iterations + 1);
    history.push(state.best_fitness);

    for l in 1..=params.max_iterations {
        let c = comfort_coefficient(l, params.max_iterations, params.c_max, params.c_min);
        let moved = swarm_update(&state, c, params);
        state.absorb(evaluate(moved));
        history.push(state.best_fitness);
    }

    Ok(GoaResult { best_position: state.best_position, best_fitness: state.best_fitness, history })
}

/// `T̄ ↦ w_m ‖e‖ + w_d ‖θ_e‖` for the achieved torque `B̄ W T̄`.
pub fn allocation_objective(
    tau_d: NormalizedTorque,
    weights: WeightMatrix,
    params: &GoaParams,
) -> impl Fn(&Vector8) -> f64 + Sync {
    let bw = ConfigMatrix::new().weighted(&weights);
    let (wm, wd) = (params.magnitude_weight, params.direction_weight);
    move |t: &Vector8| {
        let achieved: Vector4<f64> = bw * t;
        allocation_error(&tau_d, &NormalizedTorque(achieved)).weighted_sum(wm, wd)
    }
}
