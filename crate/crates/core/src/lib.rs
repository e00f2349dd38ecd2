//! Closed-loop simulation of an over-actuated 4-DOF underwater vehicle that
//! tracks a trajectory while one or more of its eight thrusters lose power.
//!
//! The control cascade is an error-restricted backstepping outer loop
//! ([`control::backstepping_velocity`]) feeding an adaptive sliding-mode inner
//! loop ([`control::smc_torque`]). The resulting torque demand is mapped onto
//! the thrusters either by a weighted pseudo-inverse with T-/S-approximation
//! ([`allocation`]) or by a grasshopper swarm search ([`goa`]) that minimizes
//! magnitude plus direction error of the achieved torque.
//!
//! Everything is deterministic given the scenario seed. Data-parallel work
//! (swarm evaluation, random-search baselines, scenario batches) runs on rayon
//! when the `parallel` feature is enabled and falls back to plain iteration
//! otherwise; see [`par::Execution`].

pub mod allocation;
pub mod bundle;
pub mod config;
pub mod control;
pub mod environment;
mod error;
pub mod goa;
pub mod par;
pub mod search;
pub mod sim;
pub mod thrusters;
pub mod vehicle;

pub use error::{Error, Result};
