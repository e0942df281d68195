//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Environment variables:
//! - `FORAGE_SKIP_SMOKE=1` skips the desk-scale learning run (~10 min/seed).
//! - `FORAGE_LONG_RUN=<dir>` enables the full-size runs. Each of the six
//!   runs lives in `<dir>/{baseline,joint}_seed{0,1,2}` and is resumed from
//!   its checkpoint if one exists, so the suite can be restarted.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use forage::env::Lineup;
use forage::eval::{action_histogram, evaluate_team, learning_curve, probe_first_object, CurveConfig, EvalStats, ProbeScenario};
use forage::exec::Exec;
use forage::io::checkpoint::{load_checkpoint, Checkpoint};
use forage::io::config::RunConfig;
use forage::io::metrics::read_metrics;
use forage::policy::NetController;
use forage::trainer::{train, TrainConfig, TrainOptions, Trainer, CHECKPOINT_FILE, METRICS_FILE};

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, verdict: Verdict, name: &str, detail: String) {
        let tag = match verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                self.failures += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!("[{tag}] {name}: {detail}");
    }

    fn check(&mut self, ok: bool, name: &str, detail: String) {
        self.line(if ok { Verdict::Pass } else { Verdict::Fail }, name, detail);
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn smoke(report: &mut Report) {
    const NAME: &str = "desk-scale learning (baseline, H=64, 2000 updates)";
    if std::env::var_os("FORAGE_SKIP_SMOKE").is_some() {
        report.line(Verdict::Skip, NAME, "FORAGE_SKIP_SMOKE is set".into());
        return;
    }
    let start = Instant::now();
    let mut results = Vec::new();
    for seed in 0..3u64 {
        let config = TrainConfig {
            hidden_size: 64,
            total_updates: 2000,
            baseline: true,
            seed,
            eval_every: 0,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(config).unwrap();
        while !trainer.is_finished() {
            trainer.step().unwrap();
        }
        let stats = trainer.evaluate(500).unwrap();
        results.push(format!("seed {seed}: {:.2}", stats.reward.mean));
        if stats.reward.mean >= 4.0 {
            report.line(
                Verdict::Pass,
                NAME,
                format!("{} (>= 4.0 over 500 greedy episodes), {:.0} s", results.join(", "), secs(start.elapsed())),
            );
            return;
        }
    }
    report.line(Verdict::Fail, NAME, format!("{} (all < 4.0)", results.join(", ")));
}

struct LongRun {
    dir: PathBuf,
    checkpoint: Checkpoint,
    stats: EvalStats,
}

fn long_run(root: &Path, baseline: bool, seed: u64) -> LongRun {
    let dir = root.join(format!("{}_seed{seed}", if baseline { "baseline" } else { "joint" }));
    let run = RunConfig {
        train: TrainConfig {
            baseline,
            seed,
            ..TrainConfig::default()
        },
        ..RunConfig::default()
    };
    let ck_path = dir.join(CHECKPOINT_FILE);
    let existing = load_checkpoint(&ck_path).ok();
    let checkpoint = match existing {
        Some(ck) if ck.updates_done >= ck.config.total_updates => ck,
        Some(ck) => train(&run, &dir, TrainOptions { force: false, resume: Some(ck) }, |_| {}).unwrap().checkpoint,
        None => train(&run, &dir, TrainOptions { force: true, resume: None }, |_| {}).unwrap().checkpoint,
    };
    let trainer = Trainer::from_checkpoint(checkpoint.clone()).unwrap();
    let stats = evaluate_team(trainer.team(), 1000, seed, Exec::default()).unwrap();
    LongRun { dir, checkpoint, stats }
}

fn best_of(runs: Vec<LongRun>) -> LongRun {
    runs.into_iter()
        .max_by(|a, b| a.stats.reward.mean.total_cmp(&b.stats.reward.mean))
        .unwrap()
}

fn long_criteria(report: &mut Report) {
    const FULL: &str = "full reproduction (H=200, 10000 updates, best of 3 seeds)";
    const FIGS: &str = "figure shape checks on the joint long run";
    const PROBE: &str = "first-object probe on the joint long run";
    let Some(root) = std::env::var_os("FORAGE_LONG_RUN").map(PathBuf::from) else {
        for name in [FULL, FIGS, PROBE] {
            report.line(Verdict::Skip, name, "set FORAGE_LONG_RUN=<dir> to run (hours per seed)".into());
        }
        return;
    };
    let baseline = best_of((0..3).map(|s| long_run(&root, true, s)).collect());
    let joint = best_of((0..3).map(|s| long_run(&root, false, s)).collect());
    let (b, j) = (&baseline.stats, &joint.stats);
    let ok = (b.reward.mean - 5.99).abs() <= 1.0
        && (b.prime_moves.mean - 29.48).abs() <= 8.0
        && (j.reward.mean - 9.29).abs() <= 0.7
        && (j.prime_moves.mean - 3.98).abs() <= 3.0;
    report.check(
        ok,
        FULL,
        format!(
            "baseline reward {:.2} moves {:.2} (target 5.99±1, 29.48±8); joint reward {:.2} moves {:.2} (target 9.29±0.7, 3.98±3)",
            b.reward.mean, b.prime_moves.mean, j.reward.mean, j.prime_moves.mean
        ),
    );

    let trainer = Trainer::from_checkpoint(joint.checkpoint.clone()).unwrap();
    let team = trainer.team();
    let helper = team.helper.unwrap();
    let hist = action_histogram(
        || NetController::greedy(team.prime),
        || NetController::greedy(helper),
        Lineup::Joint,
        1000,
        joint.checkpoint.config.seed,
        Exec::default(),
    )
    .unwrap();
    let (early, late) = hist.prime_early_late(20);
    let rows = read_metrics(&joint.dir.join(METRICS_FILE)).unwrap();
    let (_, phases) = learning_curve(&rows, CurveConfig::default()).unwrap();
    report.check(
        early > late && phases.peak.is_some(),
        FIGS,
        format!(
            "prime move freq t<20 {early:.3} vs t>=20 {late:.3}; prime-attributed peak {:?} at update {:?}",
            phases.peak.map(|p| (p.start, p.value, p.end)),
            phases.peak_update
        ),
    );

    let probe = probe_first_object(
        || NetController::greedy(team.prime),
        || NetController::greedy(helper),
        200,
        joint.checkpoint.config.seed,
        Exec::default(),
    )
    .unwrap();
    let good = probe.get(ProbeScenario::FirstGood).unwrap();
    let bad = probe.get(ProbeScenario::FirstBad).unwrap();
    report.check(
        good.helper_success_rate >= 0.8 && bad.prime_mean_moves <= 2.0,
        PROBE,
        format!(
            "helper success in {:.0}% of first-good probes (need 80%); prime moves {:.2} in first-bad probes (need <= 2)",
            100.0 * good.helper_success_rate,
            bad.prime_mean_moves
        ),
    );
}

fn main() {
    // `cargo test` passes harness flags such as `--list`; only run the suite
    // for a plain invocation.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut report = Report { failures: 0 };

    let g = common::gradient_oracle(24, 2024);
    report.check(
        g.max_rel_error < 1e-5 && g.elapsed < Duration::from_secs(60),
        "gradient oracle",
        format!(
            "{} random networks, max relative error {:.2e} (< 1e-5), {:.2} s",
            g.cases,
            g.max_rel_error,
            secs(g.elapsed)
        ),
    );

    let e = common::env_equivalence(1000, 2024);
    report.check(
        e.mismatches == 0 && e.elapsed < Duration::from_secs(60),
        "environment oracle equivalence",
        format!("{} triples, {} mismatches, {:.2} s", e.triples, e.mismatches, secs(e.elapsed)),
    );

    let a = common::reward_accounting(10_000, 2024);
    report.check(
        a.violations == 0,
        "reward accounting",
        format!("{} random-policy episodes, {} violations, {:.2} s", a.episodes, a.violations, secs(a.elapsed)),
    );

    let d = common::determinism(16, 50, 20);
    report.check(
        d.repeat_identical && d.resume_identical,
        "determinism (H=16, 50 updates)",
        format!(
            "repeat identical: {}, resume from update 20 identical: {}, {:.1} s",
            d.repeat_identical,
            d.resume_identical,
            secs(d.elapsed)
        ),
    );

    smoke(&mut report);
    long_criteria(&mut report);

    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
}
