//! Deterministic CSV and JSON emission.
//!
//! Every file starts with a provenance line carrying the full invocation.
//! CSV dialect: comma separator, `.` decimal point, header row, LF endings.
//! Floats are printed with the shortest round-trip representation, so equal
//! inputs produce byte-identical files.

use serde::Serialize;

use crate::filter::FilterTrajectory;
use crate::paths::{ObservationGrid, SamplePath};

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// `t,estimate,std_error` rows of a curve.
pub fn curve_csv(invocation: &str, times: &[f64], values: &[f64], std_errors: &[f64]) -> String {
    let mut out = format!("# {invocation}\nt,estimate,std_error\n");
    for ((t, v), s) in times.iter().zip(values).zip(std_errors) {
        out.push_str(&format!("{},{},{}\n", fmt(*t), fmt(*v), fmt(*s)));
    }
    out
}

/// Gridded trial record: `t, x, dz` with the state sampled at the grid time
/// and the increment over the step ending there. States are 1-based.
pub fn trial_csv(invocation: &str, path: &SamplePath, obs: &ObservationGrid) -> String {
    let mut out = format!("# {invocation}\nt,x,dz\n");
    for (k, dz) in obs.increments.iter().enumerate() {
        let t = (k + 1) as f64 * obs.dt;
        out.push_str(&format!(
            "{},{},{}\n",
            fmt(t),
            path.state_at(t) + 1,
            fmt(*dz)
        ));
    }
    out
}

/// Piecewise-constant trajectory record: the initial state at time zero, then
/// one row per jump. States are 1-based.
pub fn jumps_csv(invocation: &str, path: &SamplePath) -> String {
    let mut out = format!("# {invocation}\nt,state\n0,{}\n", path.initial_state + 1);
    for (t, target) in path.jump_times.iter().zip(&path.jump_targets) {
        out.push_str(&format!("{},{}\n", fmt(*t), target + 1));
    }
    out
}

/// Posterior trajectory: `t, pi_1..pi_d, dI`. The innovation column holds the
/// increment of the step starting at `t`; the final row leaves it empty.
pub fn filter_csv(invocation: &str, traj: &FilterTrajectory) -> String {
    let d = traj.posteriors[0].dim();
    let mut out = format!("# {invocation}\nt");
    for i in 1..=d {
        out.push_str(&format!(",pi_{i}"));
    }
    out.push_str(",dI\n");
    for (k, pi) in traj.posteriors.iter().enumerate() {
        out.push_str(&fmt(k as f64 * traj.dt));
        for x in 0..d {
            out.push_str(&format!(",{}", fmt(pi.get(x))));
        }
        match traj.innovations.get(k) {
            Some(di) => out.push_str(&format!(",{}\n", fmt(*di))),
            None => out.push_str(",\n"),
        }
    }
    out
}

/// JSON document with the invocation recorded as its first field.
pub fn json_report<T: Serialize>(invocation: &str, report: &T) -> String {
    #[derive(Serialize)]
    struct Envelope<'a, T: Serialize> {
        invocation: &'a str,
        #[serde(flatten)]
        report: &'a T,
    }
    let mut s =
        serde_json::to_string_pretty(&Envelope { invocation, report }).expect("reports serialize");
    s.push('\n');
    s
}
