//! CSV rendering. Floats use 17 significant digits so values round-trip
//! exactly; output is deterministic for identical inputs.

use std::fmt::Write;

use crate::dynamics::{StabilityVerdict, SweepCell, Trajectory};
use crate::response::SmoothedEquilibrium;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn prob_header(shape: &[usize]) -> Vec<String> {
    shape
        .iter()
        .enumerate()
        .flat_map(|(n, &k)| (0..k).map(move |i| format!("x{n}_{i}")))
        .collect()
}

fn join(cols: &[String]) -> String {
    let mut s = cols.join(",");
    s.push('\n');
    s
}

/// Columns: `t, x{n}_{i}…, distance, spectral_radius, classification`;
/// the last three are empty when unavailable.
pub fn trajectory_csv(traj: &Trajectory, verdict: Option<&StabilityVerdict>) -> String {
    let shape = traj.points[0].shape();
    let mut header = vec!["t".to_string()];
    header.extend(prob_header(&shape));
    header.extend(["distance", "spectral_radius", "classification"].map(String::from));
    let mut out = join(&header);
    let dists = traj.distances();
    for (row, (t, p)) in traj.times.iter().zip(&traj.points).enumerate() {
        let mut cols = vec![t.to_string()];
        cols.extend(p.flatten().into_iter().map(fmt_f64));
        cols.push(dists.as_ref().map_or(String::new(), |d| fmt_f64(d[row])));
        match verdict {
            Some(v) => {
                cols.push(fmt_f64(v.jacobian_spectral_radius));
                cols.push(v.classification.as_str().into());
            }
            None => cols.extend([String::new(), String::new()]),
        }
        out.push_str(&join(&cols));
    }
    out
}

/// Columns: `beta, x{n}_{i}…, residual, nash_gap`.
pub fn trace_csv(trace: &[SmoothedEquilibrium]) -> String {
    let Some(first) = trace.first() else {
        return "beta,residual,nash_gap\n".into();
    };
    let mut header = vec!["beta".to_string()];
    header.extend(prob_header(&first.point.shape()));
    header.extend(["residual", "nash_gap"].map(String::from));
    let mut out = join(&header);
    for eq in trace {
        let mut cols = vec![fmt_f64(eq.beta)];
        cols.extend(eq.point.flatten().into_iter().map(fmt_f64));
        cols.push(fmt_f64(eq.residual));
        cols.push(fmt_f64(eq.nash_gap));
        out.push_str(&join(&cols));
    }
    out
}

/// Columns: `beta, eta, x{n}_{i}… (equilibrium), residual, nash_gap,
/// final_distance, spectral_radius, operator_norm, classification, error`.
pub fn sweep_csv(cells: &[SweepCell], shape: &[usize]) -> String {
    let mut header = vec!["beta".to_string(), "eta".to_string()];
    header.extend(prob_header(shape));
    header.extend(
        [
            "residual",
            "nash_gap",
            "final_distance",
            "spectral_radius",
            "operator_norm",
            "classification",
            "error",
        ]
        .map(String::from),
    );
    let mut out = join(&header);
    let width: usize = shape.iter().sum();
    for c in cells {
        let mut cols = vec![fmt_f64(c.beta), fmt_f64(c.eta)];
        match &c.equilibrium {
            Some(eq) => {
                cols.extend(eq.point.flatten().into_iter().map(fmt_f64));
                cols.push(fmt_f64(eq.residual));
                cols.push(fmt_f64(eq.nash_gap));
            }
            None => cols.extend(std::iter::repeat_n(String::new(), width + 2)),
        }
        cols.push(c.final_distance.map_or(String::new(), fmt_f64));
        match &c.verdict {
            Some(v) => {
                cols.push(fmt_f64(v.jacobian_spectral_radius));
                cols.push(fmt_f64(v.jacobian_operator_norm));
                cols.push(v.classification.as_str().into());
            }
            None => cols.extend([String::new(), String::new(), String::new()]),
        }
        let mut err = String::new();
        if let Some(e) = &c.error {
            // quote and escape for CSV
            write!(err, "\"{}\"", e.replace('"', "\"\"")).expect("writing to a String");
        }
        cols.push(err);
        out.push_str(&join(&cols));
    }
    out
}
