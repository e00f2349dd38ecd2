//! Closed-loop properties of full preset runs.

use uvftc::allocation::{t_approximation, weighted_pseudoinverse};
use uvftc::goa::allocation_objective;
use uvftc::par::Execution;
use uvftc::sim::presets::preset;
use uvftc::sim::{compute_metrics, run_batch, run_scenario, SimOutput};
use uvftc::thrusters::{weights_at, NormalizedTorque};

fn run(name: &str) -> SimOutput {
    let mut out = run_scenario(&preset(name).unwrap()).unwrap();
    out.wall_clock_per_step = None;
    out
}

#[test]
fn normalized_signals_stay_in_the_unit_box() {
    for name in ["helix-single-T1-goa-perturbed", "poly-double-T1T8-goa"] {
        let out = run(name);
        for r in &out.records {
            assert!(r.forces.iter().all(|f| f.abs() <= 1.0), "{name} t={} forces {:?}", r.t, r.forces);
            assert!(r.tau_demand.iter().all(|f| f.abs() <= 1.0), "{name} t={} demand {:?}", r.t, r.tau_demand);
        }
    }
}

#[test]
fn measurement_noise_respects_its_bound() {
    let scenario = preset("poly-single-T8-goa-perturbed").unwrap();
    let bound = scenario.perturb.noise_bound;
    let out = run_scenario(&scenario).unwrap();
    let mut largest = 0.0f64;
    for r in &out.records {
        let d = r.measured.to_vector() - r.pose.to_vector();
        largest = largest.max(d.amax());
    }
    assert!(largest <= bound, "{largest}");
    assert!(largest > 0.5 * bound, "noise looks inactive: {largest}");
}

#[test]
fn fault_free_helix_settles() {
    let out = run("helix-nominal-goa");
    let t_end = out.records.last().unwrap().t;
    let tail: Vec<f64> = out
        .records
        .iter()
        .filter(|r| r.t >= t_end - 5.0)
        .map(|r| (r.desired.to_vector() - r.pose.to_vector()).fixed_rows::<3>(0).norm())
        .collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!(mean < 0.1, "mean error over the last 5 s: {mean}");
}

#[test]
fn lyapunov_functions_decay() {
    let out = run("helix-nominal-goa");
    let quarter = out.len() / 4;
    let mean = |rs: &[uvftc::sim::StepRecord], f: fn(&uvftc::sim::StepRecord) -> f64| {
        rs.iter().map(f).sum::<f64>() / rs.len() as f64
    };
    let (head, tail) = (&out.records[..quarter], &out.records[out.len() - quarter..]);
    assert!(mean(tail, |r| r.gamma0) < 0.1 * mean(head, |r| r.gamma0));
    assert!(mean(tail, |r| r.v2) < mean(head, |r| r.v2));
    assert!(out.records.iter().all(|r| r.gamma0 >= 0.0 && r.v2 >= 0.0));
}

/// Replays each recorded demand through the clamped pseudo-inverse and
/// compares its objective with the swarm's.
#[test]
fn swarm_allocation_matches_or_beats_clamped_pseudoinverse() {
    for name in ["helix-single-T1-goa", "poly-single-T8-goa"] {
        let scenario = preset(name).unwrap();
        let out = run_scenario(&scenario).unwrap();
        let mut better = 0;
        for r in &out.records {
            let weights = weights_at(r.t, &scenario.faults).unwrap();
            let tau = NormalizedTorque(r.tau_demand);
            let pinv = t_approximation(&weighted_pseudoinverse(&tau, &weights).unwrap());
            let pinv_objective = allocation_objective(tau, weights, &scenario.goa)(pinv.as_vector());
            if r.objective <= pinv_objective {
                better += 1;
            }
        }
        let fraction = better as f64 / out.len() as f64;
        println!("{name}: swarm objective <= pinv-T objective in {:.1}% of steps", 100.0 * fraction);
        assert!(fraction >= 0.95, "{name}: {fraction}");
    }
}

#[test]
fn runs_are_deterministic() {
    assert_eq!(run("poly-single-T8-goa-perturbed"), run("poly-single-T8-goa-perturbed"));
    let a = compute_metrics(&run("helix-single-T1-goa")).unwrap();
    let b = compute_metrics(&run("helix-single-T1-goa")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn batch_execution_modes_agree() {
    let scenarios: Vec<_> =
        ["helix-single-T1-goa", "poly-double-T1T8-pinv", "poly-single-T8-goa-perturbed"].iter().map(|n| preset(n).unwrap().fast()).collect();
    let strip = |v: Vec<uvftc::Result<SimOutput>>| -> Vec<SimOutput> {
        v.into_iter()
            .map(|o| {
                let mut o = o.unwrap();
                o.wall_clock_per_step = None;
                o
            })
            .collect()
    };
    let seq = strip(run_batch(&scenarios, Execution::Sequential));
    let par = strip(run_batch(&scenarios, Execution::Parallel));
    assert_eq!(seq, par);
}
