//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{SVector, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uvftc::allocation::{allocation_error, t_approximation, weighted_pseudoinverse};
use uvftc::bundle::write_series;
use uvftc::goa::{allocation_objective, comfort_coefficient, optimize, social_interaction, GoaParams};
use uvftc::par::Execution;
use uvftc::search::random_search;
use uvftc::sim::presets::{names, preset};
use uvftc::sim::{compute_metrics, run_scenario, RunMetrics, SimOutput};
use uvftc::thrusters::{apply_fault, forces_to_torque, ConfigMatrix, NormalizedTorque, WeightMatrix};
use uvftc::vehicle::{integrate_step, BodyVelocity, Pose, Torque, VehicleParams};

struct Run {
    output: SimOutput,
    metrics: RunMetrics,
    seconds: f64,
}

type Runs = BTreeMap<String, Run>;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn run_presets() -> Runs {
    let list = names();
    let results = Execution::preferred().map(&list, |name| {
        let scenario = preset(name).expect("preset resolves");
        let start = Instant::now();
        let output = run_scenario(&scenario).unwrap_or_else(|e| panic!("{name}: {e}"));
        let seconds = start.elapsed().as_secs_f64();
        let metrics = compute_metrics(&output).expect("non-empty run");
        Run { output, metrics, seconds }
    });
    list.into_iter().zip(results).collect()
}

fn vc(m: &RunMetrics) -> String {
    let v = m.signed_extreme_vc;
    format!("({:.4}, {:.4}, {:.4}, {:.4})", v[0], v[1], v[2], v[3])
}

fn desk_scale(runs: &Runs) -> Verdict {
    let (slowest, run) = runs.iter().max_by(|a, b| a.1.seconds.total_cmp(&b.1.seconds)).expect("presets exist");
    let dt_ok = runs.keys().all(|n| preset(n).unwrap().dt == 0.01);
    Verdict::new(
        run.seconds < 60.0 && dt_ok,
        format!("{} presets at dt = 0.01; slowest {slowest} took {:.2} s (limit 60 s)", runs.len(), run.seconds),
    )
}

fn saturation(runs: &Runs) -> Verdict {
    let goa = &runs["helix-single-T1-goa"].metrics;
    let pinv = &runs["helix-single-T1-pinv"].metrics;
    let goa_ok = goa.max_abs_vc[0] <= 2.05 && goa.max_abs_vc[1] <= 2.05;
    let pinv_ok = pinv.max_abs_vc[1] > 2.5;
    let diverged = runs["helix-single-T1-pinv"].output.diverged_at.map_or(String::new(), |t| format!(", diverged at {t:.2} s"));
    Verdict::new(
        goa_ok && pinv_ok,
        format!("goa v_c extremes {} (|u_c|, |v_c| <= 2.05); pinv {} (|v_c| > 2.5{diverged})", vc(goa), vc(pinv)),
    )
}

fn double_fault(runs: &Runs) -> Verdict {
    let single = &runs["poly-single-T8-goa"].metrics.max_abs_vc;
    let double = &runs["poly-double-T1T8-goa"].metrics.max_abs_vc;
    let ratios: Vec<f64> = (0..4).map(|i| double[i] / single[i]).collect();
    let goa_ok = ratios.iter().all(|&r| r <= 1.25);
    let pinv = &runs["poly-double-T1T8-pinv"].metrics;
    let exceeding = pinv.max_abs_vc.iter().filter(|&&v| v > 2.0).count();
    Verdict::new(
        goa_ok && exceeding >= 2,
        format!(
            "goa double/single |v_c| ratios ({:.3}, {:.3}, {:.3}, {:.3}) (each <= 1.25); pinv {} exceeds 2 on {exceeding} axes (need >= 2)",
            ratios[0],
            ratios[1],
            ratios[2],
            ratios[3],
            vc(pinv)
        ),
    )
}

fn convergence(runs: &Runs) -> Verdict {
    let mut failures = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for (name, run) in runs.iter().filter(|(n, _)| n.contains("-goa")) {
        let scale = if name.ends_with("-perturbed") { 2.0 } else { 1.0 };
        let m = &run.metrics;
        let (mean, last) = (m.mean_position_error_final_quarter, m.final_position_error);
        worst = (worst.0.max(mean / scale), worst.1.max(last / scale));
        if !(mean < 0.5 * scale && last < 0.25 * scale && run.output.diverged_at.is_none()) {
            failures.push(format!("{name} (mean {mean:.3} m, final {last:.3} m)"));
        }
    }
    let detail = if failures.is_empty() {
        format!("all GOA presets converge; worst normalized mean {:.4} m, final {:.4} m", worst.0, worst.1)
    } else {
        format!("not converged: {}", failures.join(", "))
    };
    Verdict::new(failures.is_empty(), detail)
}

/// Largest torque each axis can reach with the healthy thrusters.
fn axis_reach(weights: &WeightMatrix) -> Vector4<f64> {
    ConfigMatrix::new().weighted(weights).abs().column_sum()
}

fn allocation_oracle() -> Verdict {
    const INSTANCES: usize = 50;
    const SAMPLES: usize = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params = GoaParams::default();
    let mut within_oracle = 0;
    let mut beats_pinv = 0;
    let mut goa_seconds = 0.0;
    let mut worst_ratio = 0.0f64;
    for i in 0..INSTANCES {
        let dead = rng.random_range(1..=8);
        let weights = apply_fault(&WeightMatrix::healthy(), dead, 1.0).unwrap();
        let reach = axis_reach(&weights);
        let tau = NormalizedTorque(Vector4::from_fn(|k, _| rng.random_range(-0.8..=0.8f64).clamp(-reach[k], reach[k])));
        let objective = allocation_objective(tau, weights, &params);

        let start = Instant::now();
        let goa = optimize(&objective, &GoaParams { seed: Some(i as u64), ..params.clone() }, None).unwrap();
        goa_seconds += start.elapsed().as_secs_f64();

        let oracle = random_search(&objective, SAMPLES, -1.0, 1.0, 1000 + i as u64, Execution::preferred()).unwrap();
        worst_ratio = worst_ratio.max(goa.best_fitness / oracle.best_value);
        if goa.best_fitness <= 1.10 * oracle.best_value {
            within_oracle += 1;
        }
        let pinv = t_approximation(&weighted_pseudoinverse(&tau, &weights).unwrap());
        let pinv_objective = allocation_error(&tau, &forces_to_torque(&pinv, &weights)).weighted_sum(1.0, 1.0);
        if goa.best_fitness <= pinv_objective {
            beats_pinv += 1;
        }
    }
    let per_call_ms = goa_seconds / INSTANCES as f64 * 1e3;
    Verdict::new(
        within_oracle == INSTANCES && beats_pinv >= 45 && per_call_ms < 50.0,
        format!(
            "within 1.10x of random search in {within_oracle}/{INSTANCES} (worst ratio {worst_ratio:.3}); <= pinv-T objective in {beats_pinv}/{INSTANCES} (need 45); {per_call_ms:.2} ms per GOA call"
        ),
    )
}

fn pinv_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let b = ConfigMatrix::new();
    let worst = (0..1000)
        .map(|_| {
            let tau = NormalizedTorque(Vector4::from_fn(|_, _| rng.random_range(-1.0..=1.0)));
            let t = weighted_pseudoinverse(&tau, &WeightMatrix::healthy()).unwrap();
            (b.matrix() * t.0 - tau.0).norm()
        })
        .fold(0.0, f64::max);
    Verdict::new(worst < 1e-9, format!("max residual {worst:.3e} over 1000 demands (limit 1e-9)"))
}

fn integrator_order() -> Verdict {
    let params = VehicleParams::default();
    let pose = Pose::new(0.0, 0.0, 0.0, 0.3);
    // Positive velocities keep every drag coefficient positive over the run.
    let vel = BodyVelocity::new(1.0, 0.5, 0.4, 0.3);
    let tau = Torque::new(300.0, 200.0, 150.0, 40.0);
    let simulate = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let (mut p, mut v) = (pose, vel);
        for _ in 0..steps {
            (p, v) = integrate_step(&p, &v, &tau, dt, &params);
        }
        SVector::<f64, 8>::from_iterator(p.to_vector().iter().chain(v.to_vector().iter()).copied())
    };
    let reference = simulate(1e-4);
    let errors: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| (simulate(dt) - reference).norm()).collect();
    let orders = [(errors[0] / errors[1]).log2(), (errors[1] / errors[2]).log2()];
    Verdict::new(
        orders.iter().all(|&o| o >= 3.5),
        format!(
            "errors {:.3e}, {:.3e}, {:.3e}; observed orders {:.3}, {:.3} (need >= 3.5)",
            errors[0], errors[1], errors[2], orders[0], orders[1]
        ),
    )
}

fn lyapunov(runs: &Runs) -> Verdict {
    let out = &runs["helix-nominal-goa"].output;
    let dt = preset("helix-nominal-goa").unwrap().dt;
    let per_second = (1.0 / dt).round() as usize;
    let samples: Vec<f64> = out.records.iter().step_by(per_second).map(|r| r.gamma0).collect();
    let mut decreasing = true;
    let mut settled_at = None;
    for (k, pair) in samples.windows(2).enumerate() {
        if pair[0] < 0.01 {
            settled_at = Some(k);
            break;
        }
        decreasing &= pair[1] < pair[0];
    }
    let v2_start = out.records[0].v2;
    let v2_peak = out.records.iter().filter(|r| r.t >= 2.0).map(|r| r.v2).fold(0.0, f64::max);
    let settled = settled_at.is_some() || samples.last().is_some_and(|&g| g < 0.01);
    Verdict::new(
        decreasing && settled && v2_peak <= v2_start,
        format!(
            "gamma0 strictly decreasing at 1 s samples until < 0.01: {decreasing} (reached at t = {} s); max V2 after 2 s {v2_peak:.4e} vs V2(0) {v2_start:.4e}",
            settled_at.map_or("never".to_string(), |k| k.to_string())
        ),
    )
}

fn determinism(runs: &Runs) -> Verdict {
    let list: Vec<&String> = runs.keys().collect();
    let repeats = Execution::preferred().map(&list, |name| write_series(&run_scenario(&preset(name).unwrap()).unwrap()));
    let differing: Vec<&str> = list
        .iter()
        .zip(&repeats)
        .filter(|(name, again)| write_series(&runs[name.as_str()].output) != **again)
        .map(|(name, _)| name.as_str())
        .collect();
    Verdict::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} presets produced byte-identical series.csv on a second run", list.len())
        } else {
            format!("series differ for {}", differing.join(", "))
        },
    )
}

fn goa_units() -> Verdict {
    let s0 = social_interaction(0.0);
    let s_zero = social_interaction(3.0 * LN_2);
    let c_ends = (comfort_coefficient(0, 100, 1.0, 1e-5), comfort_coefficient(100, 100, 1.0, 1e-5));

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut monotone = 0;
    for i in 0..100u64 {
        let center = SVector::<f64, 8>::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let scale = SVector::<f64, 8>::from_fn(|_, _| rng.random_range(0.1..5.0));
        let ripple: f64 = rng.random_range(0.0..2.0);
        let objective = move |x: &SVector<f64, 8>| {
            let d = x - center;
            d.component_mul(&scale).dot(&d) + ripple * (3.0 * d.sum()).sin().powi(2)
        };
        let result = optimize(&objective, &GoaParams { seed: Some(i), ..GoaParams::default() }, None).unwrap();
        if result.history.windows(2).all(|w| w[1] <= w[0]) && result.history.len() == 101 {
            monotone += 1;
        }
    }
    let pass = (s0 + 0.5).abs() <= 1e-12 && s_zero.abs() <= 1e-12 && c_ends == (1.0, 1e-5) && monotone == 100;
    Verdict::new(
        pass,
        format!(
            "s(0) = {s0}, s(3 ln 2) = {s_zero:.3e}, c(0) = {}, c(L) = {}, monotone history on {monotone}/100 objectives",
            c_ends.0, c_ends.1
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let runs = run_presets();
    let verdicts = [
        desk_scale(&runs),
        saturation(&runs),
        double_fault(&runs),
        convergence(&runs),
        allocation_oracle(),
        pinv_exactness(),
        integrator_order(),
        lyapunov(&runs),
        determinism(&runs),
        goa_units(),
    ];
    for (i, v) in verdicts.iter().enumerate() {
        println!("criterion {:>2}: {}  {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    println!("acceptance: {passed}/{} criteria passed in {:.1} s", verdicts.len(), started.elapsed().as_secs_f64());
    if passed == verdicts.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
