//! CSV writers for evaluation artefacts.
//!
//! | file | header |
//! |---|---|
//! | `eval_stats.csv` | [`EVAL_STATS_HEADER`] |
//! | `probe_report.csv` | [`PROBE_HEADER`] |
//! | `action_histogram.csv` | [`HISTOGRAM_HEADER`] |
//! | `learning_curve.csv` | [`CURVE_HEADER`] |
//!
//! Eval statistics are one row per metric with mean and standard error.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::eval::{ActionHistogram, EvalStats, LearningCurve, PhaseSummary, ProbeReport};

pub const EVAL_STATS_HEADER: &str = "metric,n_episodes,mean,stderr";
pub const PROBE_HEADER: &str =
    "scenario,trials,prime_mean_moves,prime_first_collect_rate,helper_good_rate,helper_success_rate,helper_bad_avoidance";
pub const HISTOGRAM_HEADER: &str = "t,prime_move_freq,helper_move_freq";
pub const CURVE_HEADER: &str = "update,prime_collect_reward,helper_collect_reward,prime_smoothed,helper_smoothed";

pub fn eval_stats_csv(stats: &EvalStats) -> String {
    let mut out = format!("{EVAL_STATS_HEADER}\n");
    for (name, e) in [
        ("reward", stats.reward),
        ("prime_moves", stats.prime_moves),
        ("helper_moves", stats.helper_moves),
        ("prime_collect_reward", stats.prime_collect),
        ("helper_collect_reward", stats.helper_collect),
    ] {
        let _ = writeln!(out, "{name},{},{},{}", stats.n_episodes, e.mean, e.stderr);
    }
    out
}

pub fn probe_csv(report: &ProbeReport) -> String {
    let mut out = format!("{PROBE_HEADER}\n");
    for s in &report.scenarios {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.scenario.name(),
            s.trials,
            s.prime_mean_moves,
            s.prime_first_collect_rate,
            s.helper_good_rate,
            s.helper_success_rate,
            s.helper_bad_avoidance
        );
    }
    out
}

/// Helper column is zero throughout for a baseline histogram.
pub fn histogram_csv(h: &ActionHistogram) -> String {
    let mut out = format!("{HISTOGRAM_HEADER}\n");
    for (t, p) in h.prime.iter().enumerate() {
        let _ = writeln!(out, "{t},{p},{}", h.helper[t]);
    }
    out
}

/// Curve rows followed by `#`-prefixed phase summary lines.
pub fn curve_csv(curve: &LearningCurve, phases: &PhaseSummary) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for i in 0..curve.updates.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            curve.updates[i], curve.prime[i], curve.helper[i], curve.prime_smoothed[i], curve.helper_smoothed[i]
        );
    }
    let opt = |v: Option<u64>| v.map(|u| u.to_string()).unwrap_or_else(|| "none".into());
    let _ = writeln!(out, "# peak_update={}", opt(phases.peak_update));
    if let Some(p) = phases.peak {
        let _ = writeln!(out, "# peak_value={} start={} end={}", p.value, p.start, p.end);
    }
    let _ = writeln!(out, "# crossover_update={}", opt(phases.crossover_update));
    out
}

pub fn write_eval_stats(path: &Path, stats: &EvalStats) -> std::io::Result<()> {
    fs::write(path, eval_stats_csv(stats))
}

pub fn write_probe(path: &Path, report: &ProbeReport) -> std::io::Result<()> {
    fs::write(path, probe_csv(report))
}

pub fn write_histogram(path: &Path, h: &ActionHistogram) -> std::io::Result<()> {
    fs::write(path, histogram_csv(h))
}

pub fn write_curve(path: &Path, curve: &LearningCurve, phases: &PhaseSummary) -> std::io::Result<()> {
    fs::write(path, curve_csv(curve, phases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Estimate;

    #[test]
    fn eval_stats_rows() {
        let stats = EvalStats {
            n_episodes: 4,
            reward: Estimate { mean: 2.5, stderr: 0.5 },
            ..Default::default()
        };
        let text = eval_stats_csv(&stats);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], EVAL_STATS_HEADER);
        assert_eq!(lines[1], "reward,4,2.5,0.5");
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn histogram_has_one_row_per_step() {
        let h = ActionHistogram {
            episodes: 1,
            prime: vec![0.5; 100],
            helper: vec![0.0; 100],
        };
        let text = histogram_csv(&h);
        assert_eq!(text.lines().count(), 101);
        assert_eq!(text.lines().nth(1), Some("0,0.5,0"));
    }
}
