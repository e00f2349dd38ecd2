use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::sim::{SimOutput, StepRecord};
use crate::{Error, Result};

/// Fraction of the run, counted from the end, over which settled tracking
/// error is averaged.
const SETTLED_FRACTION: f64 = 0.25;

/// Summary of one run. Everything except the wall-clock cost is a function of
/// the recorded series alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetrics {
    pub steps: usize,
    /// Time of the last recorded sample; short of the duration when the run diverged.
    pub end_time: f64,
    pub max_abs_vc: [f64; 4],
    /// Largest-magnitude commanded velocity per axis, with its sign.
    pub signed_extreme_vc: [f64; 4],
    pub mean_position_error_final_quarter: f64,
    pub rms_position_error_final_quarter: f64,
    pub final_position_error: f64,
    pub mean_allocation_magnitude_error: f64,
    pub mean_allocation_direction_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_per_step_s: Option<f64>,
}

impl PartialEq for RunMetrics {
    /// Wall-clock cost is not part of a run's identity.
    fn eq(&self, other: &Self) -> bool {
        self.steps == other.steps
            && self.end_time == other.end_time
            && self.max_abs_vc == other.max_abs_vc
            && self.signed_extreme_vc == other.signed_extreme_vc
            && self.mean_position_error_final_quarter == other.mean_position_error_final_quarter
            && self.rms_position_error_final_quarter == other.rms_position_error_final_quarter
            && self.final_position_error == other.final_position_error
            && self.mean_allocation_magnitude_error == other.mean_allocation_magnitude_error
            && self.mean_allocation_direction_error == other.mean_allocation_direction_error
    }
}

/// Straight-line distance between true and desired position.
pub fn position_error(r: &StepRecord) -> f64 {
    let d = r.desired.to_vector() - r.pose.to_vector();
    d.fixed_rows::<3>(0).norm()
}

pub fn compute_metrics(out: &SimOutput) -> Result<RunMetrics> {
    let recs = &out.records;
    let last = recs.last().ok_or_else(|| Error::Series("no samples".into()))?;

    let mut max_abs_vc = [0.0; 4];
    let mut signed_extreme_vc = [0.0f64; 4];
    for r in recs {
        for i in 0..4 {
            if r.v_c[i].abs() > max_abs_vc[i] {
                max_abs_vc[i] = r.v_c[i].abs();
                signed_extreme_vc[i] = r.v_c[i];
            }
        }
    }

    let settle_from = last.t * (1.0 - SETTLED_FRACTION);
    let settled: Vec<f64> = recs.iter().filter(|r| r.t >= settle_from).map(position_error).collect();
    let count = settled.len() as f64;
    let mean = |xs: &mut dyn Iterator<Item = f64>| xs.sum::<f64>() / recs.len() as f64;

    Ok(RunMetrics {
        steps: recs.len() - 1,
        end_time: last.t,
        max_abs_vc,
        signed_extreme_vc,
        mean_position_error_final_quarter: settled.iter().sum::<f64>() / count,
        rms_position_error_final_quarter: (settled.iter().map(|e| e * e).sum::<f64>() / count).sqrt(),
        final_position_error: position_error(last),
        mean_allocation_magnitude_error: mean(&mut recs.iter().map(|r| r.err_mag)),
        mean_allocation_direction_error: mean(&mut recs.iter().map(|r| r.err_dir)),
        wall_clock_per_step_s: out.wall_clock_per_step,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub metrics: RunMetrics,
    /// `max_abs_vc` minus that of the first run.
    pub max_abs_vc_delta: [f64; 4],
    /// Largest absolute difference of any commanded velocity sample against the first run.
    pub max_vc_series_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Aligns runs sharing a time grid; the first run is the reference. A run cut
/// short by divergence may cover only a prefix of the grid.
pub fn compare_runs(runs: &[(String, SimOutput)]) -> Result<Comparison> {
    let (ref_label, reference) = runs.first().ok_or_else(|| Error::Compare("no runs given".into()))?;
    let ref_metrics = compute_metrics(reference)?;
    let mut rows = Vec::with_capacity(runs.len());
    for (label, out) in runs {
        let same_grid = out.records.iter().zip(&reference.records).all(|(a, b)| a.t == b.t);
        if !same_grid {
            return Err(Error::Compare(format!("`{label}` does not share the time grid of `{ref_label}`")));
        }
        let metrics = compute_metrics(out)?;
        let max_abs_vc_delta = std::array::from_fn(|i| metrics.max_abs_vc[i] - ref_metrics.max_abs_vc[i]);
        let max_vc_series_delta = out
            .records
            .iter()
            .zip(&reference.records)
            .map(|(a, b)| (a.v_c - b.v_c).amax())
            .fold(0.0, f64::max);
        rows.push(ComparisonRow { label: label.clone(), metrics, max_abs_vc_delta, max_vc_series_delta });
    }
    Ok(Comparison { rows })
}

impl Comparison {
    /// Plain-text table: signed velocity extremes per axis plus tracking summary.
    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(3);
        let mut s = format!(
            "{:<width$}  {:>10} {:>10} {:>10} {:>11}  {:>10} {:>10} {:>10} {:>8}\n",
            "run", "u_c (m/s)", "v_c (m/s)", "w_c (m/s)", "r_c (rad/s)", "mean err", "final err", "alloc err", "end t"
        );
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                s,
                "{:<width$}  {:>10.4} {:>10.4} {:>10.4} {:>11.4}  {:>10.4} {:>10.4} {:>10.4} {:>8.2}",
                r.label,
                m.signed_extreme_vc[0],
                m.signed_extreme_vc[1],
                m.signed_extreme_vc[2],
                m.signed_extreme_vc[3],
                m.mean_position_error_final_quarter,
                m.final_position_error,
                m.mean_allocation_magnitude_error + m.mean_allocation_direction_error,
                m.end_time,
            );
        }
        s
    }
}
