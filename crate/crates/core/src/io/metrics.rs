//! Per-update training log, one CSV row per gradient update.
//!
//! Columns: `update, episodes, mean_reward, mean_prime_moves,
//! mean_helper_moves, prime_collect_reward, helper_collect_reward,
//! prime_loss, helper_loss, prime_grad_norm, helper_grad_norm, eval_reward`.
//! Reward columns are per-episode means over the batch; empty cells mark
//! values that do not exist (no helper, no evaluation at that update).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::TrainError;
use crate::trainer::TrainMetrics;

pub const METRICS_HEADER: &str = "update,episodes,mean_reward,mean_prime_moves,mean_helper_moves,\
prime_collect_reward,helper_collect_reward,prime_loss,helper_loss,prime_grad_norm,\
helper_grad_norm,eval_reward";

/// A parsed metrics row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub update: u64,
    pub episodes: usize,
    pub mean_reward: f64,
    pub mean_prime_moves: f64,
    pub mean_helper_moves: f64,
    pub prime_collect_reward: f64,
    pub helper_collect_reward: f64,
    pub prime_loss: f64,
    pub helper_loss: Option<f64>,
    pub prime_grad_norm: f64,
    pub helper_grad_norm: Option<f64>,
    pub eval_reward: Option<f64>,
}

impl From<&TrainMetrics> for MetricsRow {
    fn from(m: &TrainMetrics) -> Self {
        Self {
            update: m.update,
            episodes: m.episodes,
            mean_reward: m.mean_reward(),
            mean_prime_moves: m.mean_prime_moves(),
            mean_helper_moves: m.mean_helper_moves(),
            prime_collect_reward: m.mean_prime_collect(),
            helper_collect_reward: m.mean_helper_collect(),
            prime_loss: m.prime_loss,
            helper_loss: m.helper_loss,
            prime_grad_norm: m.prime_grad_norm,
            helper_grad_norm: m.helper_grad_norm,
            eval_reward: m.eval_reward,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.update,
            self.episodes,
            self.mean_reward,
            self.mean_prime_moves,
            self.mean_helper_moves,
            self.prime_collect_reward,
            self.helper_collect_reward,
            self.prime_loss,
            opt(self.helper_loss),
            self.prime_grad_norm,
            opt(self.helper_grad_norm),
            opt(self.eval_reward),
        )
    }

    pub fn parse(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 12 {
            return Err(format!("expected 12 columns, found {}", f.len()));
        }
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} value {s:?}"))
        }
        fn maybe(s: &str, name: &str) -> Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, name).map(Some)
            }
        }
        Ok(Self {
            update: num(f[0], "update")?,
            episodes: num(f[1], "episodes")?,
            mean_reward: num(f[2], "mean_reward")?,
            mean_prime_moves: num(f[3], "mean_prime_moves")?,
            mean_helper_moves: num(f[4], "mean_helper_moves")?,
            prime_collect_reward: num(f[5], "prime_collect_reward")?,
            helper_collect_reward: num(f[6], "helper_collect_reward")?,
            prime_loss: num(f[7], "prime_loss")?,
            helper_loss: maybe(f[8], "helper_loss")?,
            prime_grad_norm: num(f[9], "prime_grad_norm")?,
            helper_grad_norm: maybe(f[10], "helper_grad_norm")?,
            eval_reward: maybe(f[11], "eval_reward")?,
        })
    }
}

pub struct MetricsWriter {
    out: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self, TrainError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{METRICS_HEADER}")?;
        Ok(Self { out })
    }

    /// Reopens an existing log for a resumed run, keeping only rows for
    /// updates before `updates_done`.
    pub fn resume(path: &Path, updates_done: u64) -> Result<Self, TrainError> {
        let kept: Vec<MetricsRow> = match path.exists() {
            true => read_metrics(path)?
                .into_iter()
                .filter(|r| r.update < updates_done)
                .collect(),
            false => Vec::new(),
        };
        let mut w = Self::create(path)?;
        for r in &kept {
            writeln!(w.out, "{}", r.to_csv())?;
        }
        Ok(w)
    }

    pub fn write(&mut self, m: &TrainMetrics) -> Result<(), TrainError> {
        writeln!(self.out, "{}", MetricsRow::from(m).to_csv())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), TrainError> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRow>, TrainError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == METRICS_HEADER => {}
        _ => return Err(TrainError::Metrics("missing or unexpected header row".into())),
    }
    lines
        .map(|(i, l)| MetricsRow::parse(l).map_err(|e| TrainError::Metrics(format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, TrainError> {
    parse_metrics(&std::fs::read_to_string(path)?)
}
