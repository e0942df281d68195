//! Evaluation harness: summary statistics, the first-object probe, per-step
//! action histograms and learning-curve analysis.
//!
//! All episode sets are derived from a seed through per-episode random
//! streams, so every statistic is a pure function of (policies, seed).

use std::ops::Range;

use rand::Rng;

use crate::agent::PolicyNet;
use crate::env::{Lineup, ObjectClass, Role, SpawnScript, TaskSpec, EPISODE_STEPS, LEFT_CELL, OBJECTS_PER_EPISODE, RIGHT_CELL};
use crate::error::TrainError;
use crate::exec::Exec;
use crate::io::metrics::MetricsRow;
use crate::policy::{Controller, NetController, Still};
use crate::rng::{stream, Domain, EpisodeRng};
use crate::rollout::{run_episode, EpisodeRecord};

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalStats {
    pub n_episodes: usize,
    pub reward: Estimate,
    /// Non-`Stay` actions per episode.
    pub prime_moves: Estimate,
    pub helper_moves: Estimate,
    pub prime_collect: Estimate,
    pub helper_collect: Estimate,
}

pub fn summarize(records: &[EpisodeRecord]) -> EvalStats {
    let sums: Vec<_> = records.iter().map(EpisodeRecord::summary).collect();
    let est = |f: &dyn Fn(&crate::rollout::EpisodeSummary) -> f64| {
        Estimate::from_samples(&sums.iter().map(f).collect::<Vec<_>>())
    };
    EvalStats {
        n_episodes: records.len(),
        reward: est(&|s| s.total.as_f64()),
        prime_moves: est(&|s| s.prime_moves as f64),
        helper_moves: est(&|s| s.helper_moves as f64),
        prime_collect: est(&|s| s.prime_collect.as_f64()),
        helper_collect: est(&|s| s.helper_collect.as_f64()),
    }
}

/// Rolls out `n` episodes whose task, script and random stream come from
/// `setup(i)`; fresh controllers are built per episode.
pub fn run_many<P, H, FP, FH, S>(
    n: usize,
    lineup: Lineup,
    setup: S,
    make_prime: FP,
    make_helper: FH,
    exec: Exec,
) -> Result<Vec<EpisodeRecord>, TrainError>
where
    P: Controller,
    H: Controller,
    FP: Fn() -> P + Sync + Send,
    FH: Fn() -> H + Sync + Send,
    S: Fn(usize) -> (TaskSpec, SpawnScript, EpisodeRng) + Sync + Send,
{
    exec.try_map(n, |i| {
        let (task, script, mut rng) = setup(i);
        run_episode(task, script, lineup, &mut make_prime(), &mut make_helper(), &mut rng)
    })
}

/// Fresh random (task, script) for evaluation episode `i`.
pub fn eval_episode(seed: u64, domain: Domain, i: usize) -> (TaskSpec, SpawnScript, EpisodeRng) {
    let mut rng = stream(seed, domain, i as u64);
    let task = TaskSpec::sample(&mut rng);
    let script = SpawnScript::sample(&mut rng);
    (task, script, rng)
}

pub fn evaluate<P, H, FP, FH>(
    make_prime: FP,
    make_helper: FH,
    lineup: Lineup,
    n_episodes: usize,
    seed: u64,
    exec: Exec,
) -> Result<EvalStats, TrainError>
where
    P: Controller,
    H: Controller,
    FP: Fn() -> P + Sync + Send,
    FH: Fn() -> H + Sync + Send,
{
    let records = run_many(
        n_episodes,
        lineup,
        |i| eval_episode(seed, Domain::Eval, i),
        make_prime,
        make_helper,
        exec,
    )?;
    Ok(summarize(&records))
}

/// Trained networks of one run; `helper` is `None` for the baseline.
#[derive(Debug, Clone, Copy)]
pub struct Team<'a> {
    pub prime: &'a PolicyNet,
    pub helper: Option<&'a PolicyNet>,
}

impl<'a> Team<'a> {
    pub fn lineup(&self) -> Lineup {
        match self.helper {
            Some(_) => Lineup::Joint,
            None => Lineup::PrimeAlone,
        }
    }

    /// Greedy rollouts of the team over `setup`.
    pub fn run<S>(&self, n: usize, setup: S, exec: Exec) -> Result<Vec<EpisodeRecord>, TrainError>
    where
        S: Fn(usize) -> (TaskSpec, SpawnScript, EpisodeRng) + Sync + Send,
    {
        let prime = || NetController::greedy(self.prime);
        match self.helper {
            Some(h) => run_many(n, Lineup::Joint, setup, prime, || NetController::greedy(h), exec),
            None => run_many(n, Lineup::PrimeAlone, setup, prime, || Still, exec),
        }
    }
}

pub fn evaluate_team(team: Team<'_>, n_episodes: usize, seed: u64, exec: Exec) -> Result<EvalStats, TrainError> {
    let records = team.run(n_episodes, |i| eval_episode(seed, Domain::Eval, i), exec)?;
    Ok(summarize(&records))
}

/// Fraction of later good objects a helper must collect for a probe trial
/// to count as a success.
pub const HELPER_SUCCESS_RATE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeScenario {
    FirstGood,
    FirstBad,
}

impl ProbeScenario {
    pub const ALL: [ProbeScenario; 2] = [ProbeScenario::FirstGood, ProbeScenario::FirstBad];

    pub fn name(self) -> &'static str {
        match self {
            ProbeScenario::FirstGood => "first_object_good",
            ProbeScenario::FirstBad => "first_object_bad",
        }
    }

    fn index(self) -> u64 {
        match self {
            ProbeScenario::FirstGood => 0,
            ProbeScenario::FirstBad => 1,
        }
    }

    /// Goodness of objects 1..20, fixed per scenario and seed; at least one
    /// later object is good and at least one is bad.
    pub fn pattern(self, seed: u64) -> Vec<bool> {
        let mut rng = stream(seed, Domain::Probe, self.index() << 40);
        loop {
            let p: Vec<bool> = (1..OBJECTS_PER_EPISODE).map(|_| rng.random()).collect();
            if p.iter().any(|&g| g) && p.iter().any(|&g| !g) {
                return p;
            }
        }
    }

    /// Probe episode `i`: random task and first side, the first object's
    /// goodness fixed by the scenario and the rest by [`Self::pattern`].
    pub fn episode(self, seed: u64, pattern: &[bool], i: usize) -> (TaskSpec, SpawnScript, EpisodeRng) {
        let mut rng = stream(seed, Domain::Probe, ((self.index() + 1) << 40) | i as u64);
        let task = TaskSpec::sample(&mut rng);
        let first_cell = if rng.random::<bool>() { RIGHT_CELL } else { LEFT_CELL };
        let class_of = |good: bool| if good { task.good_class } else { task.bad_class() };
        let classes: Vec<ObjectClass> = std::iter::once(self == ProbeScenario::FirstGood)
            .chain(pattern.iter().copied())
            .map(class_of)
            .collect();
        let script = SpawnScript::periodic(first_cell, &classes).expect("valid probe script");
        (task, script, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: ProbeScenario,
    pub trials: usize,
    pub prime_mean_moves: f64,
    /// Fraction of trials in which the prime collected the first object.
    pub prime_first_collect_rate: f64,
    /// Mean over trials of the fraction of later good objects the helper collected.
    pub helper_good_rate: f64,
    /// Fraction of trials where that fraction reached [`HELPER_SUCCESS_RATE`].
    pub helper_success_rate: f64,
    /// Fraction of later bad objects the helper left alone.
    pub helper_bad_avoidance: f64,
}

pub fn score_probe(scenario: ProbeScenario, records: &[EpisodeRecord]) -> ScenarioReport {
    let n = records.len().max(1) as f64;
    let mut moves = 0.0;
    let mut first = 0.0;
    let mut good_rate = 0.0;
    let mut successes = 0.0;
    let (mut bad_total, mut bad_taken) = (0usize, 0usize);
    for rec in records {
        let s = rec.summary();
        moves += s.prime_moves as f64;
        if rec.collected_by(0) == Some(Role::Prime) {
            first += 1.0;
        }
        let (mut good_total, mut good_taken) = (0usize, 0usize);
        for (id, entry) in rec.script.entries().iter().enumerate().skip(1) {
            let by_helper = rec.collected_by(id) == Some(Role::Helper);
            if rec.task.is_good(entry.class) {
                good_total += 1;
                good_taken += usize::from(by_helper);
            } else {
                bad_total += 1;
                bad_taken += usize::from(by_helper);
            }
        }
        let rate = if good_total == 0 {
            1.0
        } else {
            good_taken as f64 / good_total as f64
        };
        good_rate += rate;
        if rate >= HELPER_SUCCESS_RATE {
            successes += 1.0;
        }
    }
    ScenarioReport {
        scenario,
        trials: records.len(),
        prime_mean_moves: moves / n,
        prime_first_collect_rate: first / n,
        helper_good_rate: good_rate / n,
        helper_success_rate: successes / n,
        helper_bad_avoidance: if bad_total == 0 {
            1.0
        } else {
            1.0 - bad_taken as f64 / bad_total as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub scenarios: Vec<ScenarioReport>,
}

impl ProbeReport {
    pub fn get(&self, scenario: ProbeScenario) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|s| s.scenario == scenario)
    }
}

/// Runs both first-object scenarios with `n_trials` joint episodes each.
pub fn probe_first_object<P, H, FP, FH>(
    make_prime: FP,
    make_helper: FH,
    n_trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<ProbeReport, TrainError>
where
    P: Controller,
    H: Controller,
    FP: Fn() -> P + Sync + Send,
    FH: Fn() -> H + Sync + Send,
{
    let mut scenarios = Vec::new();
    for scenario in ProbeScenario::ALL {
        let pattern = scenario.pattern(seed);
        let records = run_many(
            n_trials,
            Lineup::Joint,
            |i| scenario.episode(seed, &pattern, i),
            &make_prime,
            &make_helper,
            exec,
        )?;
        scenarios.push(score_probe(scenario, &records));
    }
    Ok(ProbeReport { scenarios })
}

/// Per-step move frequencies (fraction of episodes with a non-`Stay` action
/// at step `t`).
#[derive(Debug, Clone, PartialEq)]
pub struct ActionHistogram {
    pub episodes: usize,
    pub prime: Vec<f64>,
    pub helper: Vec<f64>,
}

impl ActionHistogram {
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let mut prime = vec![0.0; EPISODE_STEPS];
        let mut helper = vec![0.0; EPISODE_STEPS];
        for rec in records {
            for (t, a) in rec.prime_actions.iter().enumerate() {
                prime[t] += f64::from(u8::from(a.is_move()));
            }
            for (t, a) in rec.helper_actions.iter().enumerate() {
                helper[t] += f64::from(u8::from(a.is_move()));
            }
        }
        let n = records.len().max(1) as f64;
        prime.iter_mut().chain(helper.iter_mut()).for_each(|v| *v /= n);
        Self {
            episodes: records.len(),
            prime,
            helper,
        }
    }

    pub fn mean(series: &[f64], range: Range<usize>) -> f64 {
        let s = &series[range];
        if s.is_empty() {
            0.0
        } else {
            s.iter().sum::<f64>() / s.len() as f64
        }
    }

    /// Mean prime move frequency before and from step `split`.
    pub fn prime_early_late(&self, split: usize) -> (f64, f64) {
        (
            Self::mean(&self.prime, 0..split),
            Self::mean(&self.prime, split..self.prime.len()),
        )
    }
}

pub fn action_histogram<P, H, FP, FH>(
    make_prime: FP,
    make_helper: FH,
    lineup: Lineup,
    n_episodes: usize,
    seed: u64,
    exec: Exec,
) -> Result<ActionHistogram, TrainError>
where
    P: Controller,
    H: Controller,
    FP: Fn() -> P + Sync + Send,
    FH: Fn() -> H + Sync + Send,
{
    let records = run_many(
        n_episodes,
        lineup,
        |i| eval_episode(seed, Domain::Histogram, i),
        make_prime,
        make_helper,
        exec,
    )?;
    Ok(ActionHistogram::from_records(&records))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveConfig {
    /// Trailing moving-average window in updates.
    pub window: usize,
    /// How far the peak must rise above both endpoints.
    pub margin: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            window: 100,
            margin: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub value: f64,
    pub start: f64,
    pub end: f64,
}

/// Reward attributed to each agent's collections, per update.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub updates: Vec<u64>,
    pub prime: Vec<f64>,
    pub helper: Vec<f64>,
    pub prime_smoothed: Vec<f64>,
    pub helper_smoothed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    /// Rise-peak-drop of the prime-attributed curve, if present.
    pub peak: Option<Peak>,
    pub peak_update: Option<u64>,
    /// First update at which the helper's smoothed share overtakes the prime's.
    pub crossover_update: Option<u64>,
}

/// Trailing moving average; the first points average what is available.
pub fn smooth(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (i, &v) in series.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= series[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Finds the maximum of `series` and reports it when it exceeds both the
/// first and the last value by at least `margin`.
pub fn detect_rise_peak_drop(series: &[f64], margin: f64) -> Option<Peak> {
    let (&start, &end) = (series.first()?, series.last()?);
    let (index, value) = series
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    (value - start >= margin && value - end >= margin)
        .then_some(Peak {
            index,
            value,
            start,
            end,
        })
}

pub fn learning_curve(rows: &[MetricsRow], cfg: CurveConfig) -> Result<(LearningCurve, PhaseSummary), TrainError> {
    if rows.is_empty() {
        return Err(TrainError::Metrics("metrics log has no rows".into()));
    }
    if rows.windows(2).any(|w| w[1].update <= w[0].update) {
        return Err(TrainError::Metrics("update indices must increase".into()));
    }
    let updates: Vec<u64> = rows.iter().map(|r| r.update).collect();
    let prime: Vec<f64> = rows.iter().map(|r| r.prime_collect_reward).collect();
    let helper: Vec<f64> = rows.iter().map(|r| r.helper_collect_reward).collect();
    let prime_smoothed = smooth(&prime, cfg.window);
    let helper_smoothed = smooth(&helper, cfg.window);
    let peak = detect_rise_peak_drop(&prime_smoothed, cfg.margin);
    let crossover_update = prime_smoothed
        .iter()
        .zip(&helper_smoothed)
        .position(|(p, h)| h > p && *h > 0.0)
        .map(|i| updates[i]);
    let summary = PhaseSummary {
        peak,
        peak_update: peak.map(|p| updates[p.index]),
        crossover_update,
    };
    Ok((
        LearningCurve {
            updates,
            prime,
            helper,
            prime_smoothed,
            helper_smoothed,
        },
        summary,
    ))
}
