//! Result bundles: a run directory holding `series.csv`, `metrics.json` and
//! `config.echo`.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so parsing
//! `series.csv` restores every stored double exactly, and `metrics.json` is
//! computed from the parsed series rather than the in-memory run.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector4;

use crate::config::echo;
use crate::sim::{compute_metrics, RunMetrics, Scenario, SimOutput, StepRecord};
use crate::thrusters::Vector8;
use crate::vehicle::{BodyVelocity, Pose};
use crate::{Error, Result};

pub const SERIES_FILE: &str = "series.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const CONFIG_FILE: &str = "config.echo";

/// Column names of `series.csv`, in order.
pub const COLUMNS: [&str; 47] = [
    "t", "x_d", "y_d", "z_d", "psi_d", "x", "y", "z", "psi", "e_x", "e_y", "e_z", "e_psi", "u_c", "v_c", "w_c", "r_c", "u",
    "v", "w", "r", "taubar_d_x", "taubar_d_y", "taubar_d_z", "taubar_d_n", "taubar_x", "taubar_y", "taubar_z", "taubar_n",
    "Tbar_1", "Tbar_2", "Tbar_3", "Tbar_4", "Tbar_5", "Tbar_6", "Tbar_7", "Tbar_8", "err_mag", "err_dir", "gamma0", "v2",
    "goa_obj", "x_m", "y_m", "z_m", "psi_m", "goa_iters",
];

fn row(r: &StepRecord) -> Vec<f64> {
    let mut v = Vec::with_capacity(COLUMNS.len());
    v.push(r.t);
    for p in [&r.desired, &r.pose] {
        v.extend([p.x, p.y, p.z, p.psi]);
    }
    v.extend(r.error.iter());
    v.extend(r.v_c.iter());
    v.extend(r.velocity.to_vector().iter());
    v.extend(r.tau_demand.iter());
    v.extend(r.tau_achieved.iter());
    v.extend(r.forces.iter());
    v.extend([r.err_mag, r.err_dir, r.gamma0, r.v2, r.objective]);
    v.extend([r.measured.x, r.measured.y, r.measured.z, r.measured.psi]);
    v.push(r.goa_iterations as f64);
    v
}

fn record(v: &[f64]) -> StepRecord {
    let pose = |i: usize| Pose::new(v[i], v[i + 1], v[i + 2], v[i + 3]);
    let vec4 = |i: usize| Vector4::from_column_slice(&v[i..i + 4]);
    StepRecord {
        t: v[0],
        desired: pose(1),
        pose: pose(5),
        error: vec4(9),
        v_c: vec4(13),
        velocity: BodyVelocity::from_vector(&vec4(17)),
        tau_demand: vec4(21),
        tau_achieved: vec4(25),
        forces: Vector8::from_column_slice(&v[29..37]),
        err_mag: v[37],
        err_dir: v[38],
        gamma0: v[39],
        v2: v[40],
        objective: v[41],
        measured: pose(42),
        goa_iterations: v[46] as usize,
    }
}

pub fn write_series(out: &SimOutput) -> String {
    let mut s = COLUMNS.join(",");
    s.push('\n');
    for r in &out.records {
        for (i, x) in row(r).iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{x}");
        }
        s.push('\n');
    }
    s
}

/// Parses `series.csv` text. Divergence and wall-clock cost are not stored
/// in the series and come back as `None`.
pub fn read_series(text: &str) -> Result<SimOutput> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Series("empty file".into()))?;
    if header.split(',').ne(COLUMNS) {
        return Err(Error::Series("header does not match the expected columns".into()));
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let values = line
            .split(',')
            .map(f64::from_str)
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| Error::Series(format!("row {}: {e}", n + 1)))?;
        if values.len() != COLUMNS.len() {
            return Err(Error::Series(format!("row {}: {} fields, expected {}", n + 1, values.len(), COLUMNS.len())));
        }
        records.push(record(&values));
    }
    Ok(SimOutput { records, diverged_at: None, wall_clock_per_step: None })
}

pub fn read_bundle_series(dir: &Path) -> Result<SimOutput> {
    let path = dir.join(SERIES_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    read_series(&text)
}

/// Writes the three bundle files into `dir` (created if missing) and returns
/// the metrics that were stored.
pub fn write_bundle(dir: &Path, scenario: &Scenario, out: &SimOutput) -> Result<RunMetrics> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let series = write_series(out);
    let mut metrics = compute_metrics(&read_series(&series)?)?;
    metrics.wall_clock_per_step_s = out.wall_clock_per_step;

    let write = |name: &str, contents: &str| {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    };
    write(SERIES_FILE, &series)?;
    write(METRICS_FILE, &(serde_json::to_string_pretty(&metrics)? + "\n"))?;
    write(CONFIG_FILE, &echo(scenario)?)?;
    Ok(metrics)
}

/// Figure panels that `plot_panel` can extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    /// Desired and true position.
    Trajectory,
    /// Tracking error.
    Errors,
    /// Commanded and actual body velocity.
    Velocities,
}

impl Panel {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Panel::Trajectory => &["t", "x_d", "y_d", "z_d", "x", "y", "z"],
            Panel::Errors => &["t", "e_x", "e_y", "e_z", "e_psi"],
            Panel::Velocities => &["t", "u_c", "v_c", "w_c", "r_c", "u", "v", "w", "r"],
        }
    }
}

impl FromStr for Panel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "trajectory" => Ok(Panel::Trajectory),
            "b" | "errors" => Ok(Panel::Errors),
            "c" | "velocities" => Ok(Panel::Velocities),
            _ => Err(Error::InvalidParameter(format!("unknown panel `{s}` (expected a, b or c)"))),
        }
    }
}

/// CSV slice of `out` holding the columns of `panel`.
pub fn plot_panel(out: &SimOutput, panel: Panel) -> String {
    let idx: Vec<usize> = panel.columns().iter().map(|c| COLUMNS.iter().position(|k| k == c).expect("known column")).collect();
    let mut s = panel.columns().join(",");
    s.push('\n');
    for r in &out.records {
        let values = row(r);
        let fields: Vec<String> = idx.iter().map(|&i| values[i].to_string()).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}
