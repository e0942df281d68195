//! Flat `key = value` run configuration.
//!
//! Recognised keys (defaults in parentheses):
//!
//! | key | meaning |
//! |-----|---------|
//! | `hidden_size` (200) | LSTM units per agent |
//! | `gamma` (0.95) | discount |
//! | `epsilon` (0.05) | exploration rate during training |
//! | `batch_episodes` (100) | episodes per gradient update |
//! | `total_updates` (10000) | gradient updates |
//! | `seed` (0) | master seed |
//! | `baseline` (false) | train the prime alone |
//! | `clip_norm` (10) | global gradient-norm clip, or `none` |
//! | `learning_rate` (0.001) | Adam step size |
//! | `eval_every` (100) | periodic greedy evaluation interval, 0 = off |
//! | `eval_episodes` (100) | episodes per periodic evaluation |
//! | `checkpoint_every` (500) | checkpoint interval, 0 = only at the end |
//! | `final_eval_episodes` (1000) | episodes of the final evaluation |
//! | `probe_trials` (200) | trials per first-object probe scenario |
//! | `histogram_episodes` (1000) | episodes for the action histogram |
//! | `curve_window` (100) | smoothing window of the learning curve |
//! | `curve_margin` (0.5) | peak margin of the rise-peak-drop detector |
//! | `serve_port` (8080) | port of the play server |
//! | `step_timeout_ms` (0) | auto-`stay` timeout per human turn, 0 = off |
//! | `static_dir` (empty) | directory of the browser client |
//!
//! Blank lines and lines starting with `#` are ignored; unknown or repeated
//! keys are errors.

use std::collections::HashSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::ConfigError;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub checkpoint_every: u64,
    pub final_eval_episodes: usize,
    pub probe_trials: usize,
    pub histogram_episodes: usize,
    pub curve_window: usize,
    pub curve_margin: f64,
    pub serve_port: u16,
    pub step_timeout_ms: u64,
    pub static_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            checkpoint_every: 500,
            final_eval_episodes: 1000,
            probe_trials: 200,
            histogram_episodes: 1000,
            curve_window: 100,
            curve_margin: 0.5,
            serve_port: 8080,
            step_timeout_ms: 0,
            static_dir: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::Value {
            key: key.into(),
            value: value.into(),
        }),
    }
}

/// Splits `key = value` lines, rejecting duplicates.
fn entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim().to_string();
        if !seen.insert(key.clone()) {
            return Err(ConfigError::Invalid(format!("key {key:?} given twice")));
        }
        out.push((i + 1, key, value.trim().to_string()));
    }
    Ok(out)
}

impl TrainConfig {
    /// Applies one key; returns `false` if the key is not a training key.
    fn apply(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "hidden_size" => self.hidden_size = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "epsilon" => self.epsilon = parse_value(key, value)?,
            "batch_episodes" => self.batch_episodes = parse_value(key, value)?,
            "total_updates" => self.total_updates = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "baseline" => self.baseline = parse_bool(key, value)?,
            "clip_norm" => {
                self.clip_norm = match value {
                    "none" | "off" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "eval_every" => self.eval_every = parse_value(key, value)?,
            "eval_episodes" => self.eval_episodes = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        fn s(v: impl Display) -> String {
            v.to_string()
        }
        vec![
            ("hidden_size", s(self.hidden_size)),
            ("gamma", s(self.gamma)),
            ("epsilon", s(self.epsilon)),
            ("batch_episodes", s(self.batch_episodes)),
            ("total_updates", s(self.total_updates)),
            ("seed", s(self.seed)),
            ("baseline", s(self.baseline)),
            ("clip_norm", self.clip_norm.map_or_else(|| "none".to_string(), s)),
            ("learning_rate", s(self.learning_rate)),
            ("eval_every", s(self.eval_every)),
            ("eval_episodes", s(self.eval_episodes)),
        ]
    }

    pub fn render(&self) -> String {
        render_pairs(&self.pairs())
    }

    /// Parses training keys only.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = TrainConfig::default();
        for (line, key, value) in entries(text)? {
            if !cfg.apply(&key, &value)? {
                return Err(ConfigError::UnknownKey { line, key });
            }
        }
        cfg.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }
}

fn render_pairs(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (line, key, value) in entries(text)? {
            if cfg.train.apply(&key, &value)? {
                continue;
            }
            let k = key.as_str();
            let v = value.as_str();
            match k {
                "checkpoint_every" => cfg.checkpoint_every = parse_value(k, v)?,
                "final_eval_episodes" => cfg.final_eval_episodes = parse_value(k, v)?,
                "probe_trials" => cfg.probe_trials = parse_value(k, v)?,
                "histogram_episodes" => cfg.histogram_episodes = parse_value(k, v)?,
                "curve_window" => cfg.curve_window = parse_value(k, v)?,
                "curve_margin" => cfg.curve_margin = parse_value(k, v)?,
                "serve_port" => cfg.serve_port = parse_value(k, v)?,
                "step_timeout_ms" => cfg.step_timeout_ms = parse_value(k, v)?,
                "static_dir" => cfg.static_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
                _ => return Err(ConfigError::UnknownKey { line, key }),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// `default` selects the built-in configuration; anything else is a path.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        if path.as_os_str() == "default" {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train.validate().map_err(ConfigError::Invalid)?;
        if self.final_eval_episodes == 0 || self.probe_trials == 0 || self.histogram_episodes == 0 {
            return Err(ConfigError::Invalid("episode counts must be positive".into()));
        }
        if self.curve_window == 0 || self.curve_margin.is_nan() || self.curve_margin < 0.0 {
            return Err(ConfigError::Invalid(
                "curve_window must be positive and curve_margin non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut pairs = self.train.pairs();
        pairs.extend([
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("final_eval_episodes", self.final_eval_episodes.to_string()),
            ("probe_trials", self.probe_trials.to_string()),
            ("histogram_episodes", self.histogram_episodes.to_string()),
            ("curve_window", self.curve_window.to_string()),
            ("curve_margin", self.curve_margin.to_string()),
            ("serve_port", self.serve_port.to_string()),
            ("step_timeout_ms", self.step_timeout_ms.to_string()),
            (
                "static_dir",
                self.static_dir
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
        ]);
        render_pairs(&pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_match_experiment() {
        let c = RunConfig::default();
        assert_eq!(c.train.hidden_size, 200);
        assert_eq!(c.train.gamma, 0.95);
        assert_eq!(c.train.epsilon, 0.05);
        assert_eq!(c.train.batch_episodes, 100);
        assert_eq!(c.train.total_updates, 10_000);
        assert_eq!(c.train.learning_rate, 1e-3);
        assert_eq!(RunConfig::load(Path::new("default")).unwrap(), c);
    }

    #[test]
    fn parses_comments_and_overrides() {
        let c = RunConfig::parse("# tiny\nhidden_size = 16\nbaseline=true\nclip_norm = none\n\nstatic_dir = ui/dist\n").unwrap();
        assert_eq!(c.train.hidden_size, 16);
        assert!(c.train.baseline);
        assert_eq!(c.train.clip_norm, None);
        assert_eq!(c.static_dir, Some(PathBuf::from("ui/dist")));
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(matches!(
            RunConfig::parse("hiden_size = 3"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(RunConfig::parse("gamma = x"), Err(ConfigError::Value { .. })));
        assert!(matches!(RunConfig::parse("gamma = 1.5"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse("seed"), Err(ConfigError::Syntax { line: 1 })));
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(TrainConfig::parse("serve_port = 1").is_err());
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(
            hidden in 1usize..512,
            gamma in 0.01f64..0.99,
            eps in 0.0f64..1.0,
            seed in any::<u64>(),
            baseline in any::<bool>(),
            clip in proptest::option::of(0.1f64..100.0),
            lr in 1e-6f64..1e-1,
            window in 1usize..1000,
            port in any::<u16>(),
        ) {
            let mut c = RunConfig::default();
            c.train.hidden_size = hidden;
            c.train.gamma = gamma;
            c.train.epsilon = eps;
            c.train.seed = seed;
            c.train.baseline = baseline;
            c.train.clip_norm = clip;
            c.train.learning_rate = lr;
            c.curve_window = window;
            c.serve_port = port;
            prop_assert_eq!(RunConfig::parse(&c.render()).unwrap(), c.clone());
            prop_assert_eq!(TrainConfig::parse(&c.train.render()).unwrap(), c.train);
        }
    }
}
