use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use forage::env::Lineup;
use forage::eval::{action_histogram, learning_curve, probe_first_object, CurveConfig, EvalStats, Team};
use forage::exec::Exec;
use forage::io::checkpoint::{load_checkpoint, Checkpoint};
use forage::io::config::RunConfig;
use forage::io::csv::{write_curve, write_eval_stats, write_histogram, write_probe};
use forage::io::metrics::read_metrics;
use forage::io::check_writable;
use forage::policy::{NetController, Still};
use forage::trainer::{train, TrainOptions, Trainer, METRICS_FILE};
use forage_serve::{router, serve, ServeConfig};

#[derive(Parser)]
#[command(name = "forage", version, about = "Prime/helper foraging: training, evaluation and play")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file, or `default`.
    #[arg(long, default_value = "default")]
    config: PathBuf,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a prime and helper (or the prime alone with --baseline).
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        baseline: bool,
        /// Output directory for config, metrics, checkpoint and eval stats.
        #[arg(long)]
        out: PathBuf,
        /// Resume from this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Allow reusing a non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Greedy evaluation of a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of episodes; defaults to `final_eval_episodes`.
        #[arg(long)]
        episodes: Option<usize>,
        /// Write eval_stats.csv and action_histogram.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// First-object probe of a joint checkpoint.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Directory for probe_report.csv.
        #[arg(long)]
        out: PathBuf,
        /// Trials per scenario; defaults to `probe_trials`.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        force: bool,
    },
    /// Reward-attribution learning curve from a metrics log.
    Curve {
        #[command(flatten)]
        common: Common,
        /// Metrics CSV; defaults to metrics.csv next to --checkpoint.
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Directory for learning_curve.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Play as the prime next to a trained helper over a WebSocket.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to `serve_port`.
        #[arg(long)]
        port: Option<u16>,
        /// Directory of the browser client; defaults to `static_dir`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config).with_context(|| format!("loading config {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn open_checkpoint(path: &Path) -> Result<Checkpoint> {
    load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn output_file(dir: &Path, name: &str, force: bool) -> Result<PathBuf> {
    let path = dir.join(name);
    check_writable(&path, force)?;
    Ok(path)
}

fn print_stats(stats: &EvalStats) {
    let row = |name: &str, e: forage::eval::Estimate| println!("{name:<22} {:>8.3} ± {:.3}", e.mean, e.stderr);
    println!("episodes               {}", stats.n_episodes);
    row("reward", stats.reward);
    row("prime moves", stats.prime_moves);
    row("helper moves", stats.helper_moves);
    row("prime-collected", stats.prime_collect);
    row("helper-collected", stats.helper_collect);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            common,
            baseline,
            out,
            checkpoint,
            force,
        } => {
            let mut cfg = load_config(&common)?;
            cfg.train.baseline |= baseline;
            let resume = checkpoint.as_deref().map(open_checkpoint).transpose()?;
            if let Some(ck) = &resume {
                if common.seed.is_some_and(|s| s != ck.config.seed) || (baseline && !ck.config.baseline) {
                    bail!("--seed and --baseline must match the checkpoint being resumed");
                }
            }
            let total = resume.as_ref().map_or(cfg.train.total_updates, |c| c.config.total_updates);
            let every = cfg.train.eval_every.max(1);
            let report = train(&cfg, &out, TrainOptions { force, resume }, |m| {
                if (m.update + 1) % every == 0 || m.update + 1 == total {
                    let eval = m.eval_reward.map(|r| format!(" eval {r:.2}")).unwrap_or_default();
                    eprintln!(
                        "update {:>6}/{total} reward {:.2} prime moves {:.1}{eval}",
                        m.update + 1,
                        m.mean_reward(),
                        m.mean_prime_moves()
                    );
                }
            })?;
            print_stats(&report.final_eval);
            println!("artifacts in {}", out.display());
        }
        Command::Eval {
            common,
            checkpoint,
            episodes,
            out,
            force,
        } => {
            let cfg = load_config(&common)?;
            let ck = open_checkpoint(&checkpoint)?;
            let seed = common.seed.unwrap_or(ck.config.seed);
            let trainer = Trainer::from_checkpoint(ck)?;
            let team = trainer.team();
            let n = episodes.unwrap_or(cfg.final_eval_episodes);
            let stats = forage::eval::evaluate_team(team, n, seed, Exec::default())?;
            print_stats(&stats);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let stats_path = output_file(&dir, "eval_stats.csv", force)?;
                let hist_path = output_file(&dir, "action_histogram.csv", force)?;
                write_eval_stats(&stats_path, &stats)?;
                let hist = histogram(team, cfg.histogram_episodes, seed)?;
                write_histogram(&hist_path, &hist)?;
                let (early, late) = hist.prime_early_late(20);
                println!("prime move frequency t<20 {early:.3}, t>=20 {late:.3}");
            }
        }
        Command::Probe {
            common,
            checkpoint,
            out,
            trials,
            force,
        } => {
            let cfg = load_config(&common)?;
            let ck = open_checkpoint(&checkpoint)?;
            let seed = common.seed.unwrap_or(ck.config.seed);
            let trainer = Trainer::from_checkpoint(ck)?;
            let team = trainer.team();
            let Some(helper) = team.helper else {
                bail!("the probe needs a joint checkpoint; {} is a baseline run", checkpoint.display());
            };
            std::fs::create_dir_all(&out)?;
            let path = output_file(&out, "probe_report.csv", force)?;
            let report = probe_first_object(
                || NetController::greedy(team.prime),
                || NetController::greedy(helper),
                trials.unwrap_or(cfg.probe_trials),
                seed,
                Exec::default(),
            )?;
            write_probe(&path, &report)?;
            for s in &report.scenarios {
                println!(
                    "{:<18} prime moves {:.2}, prime takes first {:.2}, helper good rate {:.2}, helper success {:.2}, bad avoided {:.2}",
                    s.scenario.name(),
                    s.prime_mean_moves,
                    s.prime_first_collect_rate,
                    s.helper_good_rate,
                    s.helper_success_rate,
                    s.helper_bad_avoidance
                );
            }
        }
        Command::Curve {
            common,
            metrics,
            checkpoint,
            out,
            force,
        } => {
            let cfg = load_config(&common)?;
            let path = match (metrics, checkpoint) {
                (Some(m), _) => m,
                (None, Some(ck)) => ck.parent().unwrap_or(Path::new(".")).join(METRICS_FILE),
                (None, None) => bail!("curve needs --metrics or --checkpoint"),
            };
            let rows = read_metrics(&path).with_context(|| format!("reading {}", path.display()))?;
            let (curve, phases) = learning_curve(
                &rows,
                CurveConfig {
                    window: cfg.curve_window,
                    margin: cfg.curve_margin,
                },
            )?;
            match phases.peak {
                Some(p) => println!(
                    "prime-attributed reward rises {:.2} -> {:.2} (update {}) -> {:.2}",
                    p.start,
                    p.value,
                    phases.peak_update.unwrap_or_default(),
                    p.end
                ),
                None => println!("no rise-peak-drop in the prime-attributed reward"),
            }
            match phases.crossover_update {
                Some(u) => println!("helper-attributed reward overtakes at update {u}"),
                None => println!("helper-attributed reward never overtakes"),
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                write_curve(&output_file(&dir, "learning_curve.csv", force)?, &curve, &phases)?;
            }
        }
        Command::Serve {
            common,
            checkpoint,
            port,
            static_dir,
        } => {
            let cfg = load_config(&common)?;
            let ck = open_checkpoint(&checkpoint)?;
            let Some(helper) = ck.helper else {
                bail!("serving needs a joint checkpoint with a helper; {} is a baseline run", checkpoint.display());
            };
            let config = ServeConfig {
                seed: common.seed.unwrap_or(ck.config.seed),
                step_timeout_ms: cfg.step_timeout_ms,
                static_dir: static_dir.or(cfg.static_dir),
            };
            let addr = SocketAddr::from(([0, 0, 0, 0], port.unwrap_or(cfg.serve_port)));
            let app = router(Arc::new(helper.policy), config);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(addr, app, |bound| eprintln!("listening on ws://{bound}/ws")))?;
        }
    }
    Ok(())
}

fn histogram(team: Team<'_>, episodes: usize, seed: u64) -> Result<forage::eval::ActionHistogram> {
    let prime = || NetController::greedy(team.prime);
    Ok(match team.helper {
        Some(h) => action_histogram(prime, || NetController::greedy(h), Lineup::Joint, episodes, seed, Exec::default())?,
        None => action_histogram(prime, || Still, Lineup::PrimeAlone, episodes, seed, Exec::default())?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
