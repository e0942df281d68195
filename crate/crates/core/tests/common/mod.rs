//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use forage::env::{Action, Env, Lineup, ObjectClass, SpawnEntry, SpawnScript, TaskSpec};
use forage::nn::{backward, episode_loss, finite_diff_network, forward_sequence, init_params, max_relative_error, td_targets, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deliberately plain simulator of the foraging rules, sharing no code with
/// `forage::env`. Rewards are in tenths.
pub struct RefEpisode {
    pub prime_obs: Vec<Vec<u8>>,
    pub helper_obs: Vec<Vec<u8>>,
    pub rewards: Vec<i32>,
    pub good_collected: usize,
    pub bad_collected: usize,
    pub prime_moves: usize,
}

struct RefObject {
    cell: usize,
    is_a: bool,
    spawn: usize,
    alive: bool,
}

fn delta(a: Action) -> i64 {
    match a {
        Action::Left => -1,
        Action::Right => 1,
        Action::Stay => 0,
    }
}

pub fn reference_episode(
    good_is_a: bool,
    script: &[(usize, usize, bool)],
    prime_actions: &[Action],
    helper_actions: Option<&[Action]>,
) -> RefEpisode {
    let mut prime: i64 = 1;
    let mut helper: Option<i64> = helper_actions.map(|_| 3);
    let mut objects: Vec<RefObject> = Vec::new();
    let mut out = RefEpisode {
        prime_obs: Vec::new(),
        helper_obs: Vec::new(),
        rewards: Vec::new(),
        good_collected: 0,
        bad_collected: 0,
        prime_moves: 0,
    };

    let spawn = |objects: &mut Vec<RefObject>, t: usize| {
        for &(time, cell, is_a) in script {
            if time == t {
                objects.push(RefObject { cell, is_a, spawn: time, alive: true });
            }
        }
    };
    let collect = |objects: &mut Vec<RefObject>, prime: i64, helper: Option<i64>, good: &mut usize, bad: &mut usize| -> i32 {
        let mut r = 0;
        for o in objects.iter_mut().filter(|o| o.alive) {
            let here = o.cell as i64 == prime || helper == Some(o.cell as i64);
            if here {
                o.alive = false;
                if o.is_a == good_is_a {
                    *good += 1;
                    r += 10;
                } else {
                    *bad += 1;
                    r -= 10;
                }
            }
        }
        r
    };
    let encode = |objects: &Vec<RefObject>, prime: i64, helper: Option<i64>, with_good: bool| -> Vec<u8> {
        let mut bits = Vec::new();
        for cell in 0..5usize {
            let obj = objects.iter().find(|o| o.alive && o.cell == cell);
            bits.push((prime == cell as i64) as u8);
            bits.push((helper == Some(cell as i64)) as u8);
            bits.push(obj.is_some() as u8);
            bits.push(obj.is_some_and(|o| o.is_a) as u8);
            bits.push(obj.is_some_and(|o| !o.is_a) as u8);
            if with_good {
                bits.push(obj.is_some_and(|o| o.is_a == good_is_a) as u8);
            }
        }
        bits
    };

    spawn(&mut objects, 0);
    let (mut good, mut bad) = (0, 0);
    let mut pending = collect(&mut objects, prime, helper, &mut good, &mut bad);
    out.prime_obs.push(encode(&objects, prime, helper, true));
    out.helper_obs.push(encode(&objects, prime, helper, false));

    for t in 1..=100usize {
        let pa = prime_actions[t - 1];
        prime = (prime + delta(pa)).clamp(0, 4);
        if let (Some(h), Some(acts)) = (helper.as_mut(), helper_actions) {
            *h = (*h + delta(acts[t - 1])).clamp(0, 4);
        }
        for o in objects.iter_mut() {
            if o.alive && o.spawn + 9 == t {
                o.alive = false;
            }
        }
        spawn(&mut objects, t);
        let mut r = pending + collect(&mut objects, prime, helper, &mut good, &mut bad);
        pending = 0;
        if pa != Action::Stay {
            r -= 1;
            out.prime_moves += 1;
        }
        out.rewards.push(r);
        out.prime_obs.push(encode(&objects, prime, helper, true));
        out.helper_obs.push(encode(&objects, prime, helper, false));
    }
    out.good_collected = good;
    out.bad_collected = bad;
    out
}

/// Random valid script. Half the time the standard schedule, otherwise
/// irregular gaps and a random start.
pub fn random_script(rng: &mut ChaCha8Rng) -> SpawnScript {
    if rng.random_bool(0.5) {
        return SpawnScript::sample(rng);
    }
    let mut gaps = Vec::with_capacity(19);
    for i in 0..19 {
        let prev_short = i > 0 && gaps[i - 1] == 4;
        gaps.push(if prev_short { 5 } else { rng.random_range(4..=5usize) });
    }
    let span: usize = gaps.iter().sum();
    let mut t = rng.random_range(0..=(99 - span));
    let mut cell = if rng.random_bool(0.5) { 0 } else { 4 };
    let mut entries = Vec::new();
    for i in 0..20 {
        let class = if rng.random_bool(0.5) { ObjectClass::A } else { ObjectClass::B };
        entries.push(SpawnEntry { time: t, cell, class });
        if let Some(gap) = gaps.get(i) {
            t += gap;
            cell = 4 - cell;
        }
    }
    SpawnScript::new(entries).expect("generator yields valid scripts")
}

/// Random action sequence; `stay_bias` in [0, 1] thins out moves.
pub fn random_actions(rng: &mut ChaCha8Rng, stay_bias: f64) -> Vec<Action> {
    (0..100)
        .map(|_| {
            if rng.random_bool(stay_bias) {
                Action::Stay
            } else {
                Action::ALL[rng.random_range(0..3)]
            }
        })
        .collect()
}

/// Spawn entries as plain tuples `(time, cell, is_a)`.
pub fn plain_entries(script: &SpawnScript) -> Vec<(usize, usize, bool)> {
    script
        .entries()
        .iter()
        .map(|e| (e.time, e.cell, e.class == ObjectClass::A))
        .collect()
}

pub struct AccountingCheck {
    pub episodes: usize,
    pub violations: usize,
    pub elapsed: Duration,
}

/// Uniform-random episodes through the rollout path; every episode's total
/// must equal `good − bad − 0.1·moves` as counted by the reference
/// simulator, and the per-agent attribution must add up.
pub fn reward_accounting(episodes: usize, seed: u64) -> AccountingCheck {
    use forage::policy::UniformRandom;
    use forage::rng::{stream, Domain};
    use forage::rollout::run_episode;

    let start = Instant::now();
    let mut violations = 0;
    for i in 0..episodes {
        let mut rng = stream(seed, Domain::Eval, i as u64);
        let task = TaskSpec::sample(&mut rng);
        let script = SpawnScript::sample(&mut rng);
        let lineup = if i % 5 == 4 { Lineup::PrimeAlone } else { Lineup::Joint };
        let rec = run_episode(task, script.clone(), lineup, &mut UniformRandom, &mut UniformRandom, &mut rng).unwrap();
        let s = rec.summary();
        let reference = reference_episode(
            task.good_class == ObjectClass::A,
            &plain_entries(&script),
            &rec.prime_actions,
            (lineup == Lineup::Joint).then_some(&rec.helper_actions[..]),
        );
        let counted = 10 * reference.good_collected as i64 - 10 * reference.bad_collected as i64 - reference.prime_moves as i64;
        let total = i64::from(s.total.tenths());
        let attributed = i64::from(s.prime_collect.tenths() + s.helper_collect.tenths()) - s.prime_moves as i64;
        if total != counted || attributed != total || s.good_collected != reference.good_collected {
            violations += 1;
        }
    }
    AccountingCheck {
        episodes,
        violations,
        elapsed: start.elapsed(),
    }
}

pub struct EnvCheck {
    pub triples: usize,
    pub mismatches: usize,
    pub elapsed: Duration,
}

/// Compares `forage::env` with [`reference_episode`] on random triples.
pub fn env_equivalence(triples: usize, seed: u64) -> EnvCheck {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for i in 0..triples {
        let task = TaskSpec::new(if rng.random_bool(0.5) { ObjectClass::A } else { ObjectClass::B });
        let script = random_script(&mut rng);
        let bias = rng.random_range(0.0..0.9);
        let prime = random_actions(&mut rng, bias);
        let helper = random_actions(&mut rng, bias);
        let lineup = if i % 4 == 3 { Lineup::PrimeAlone } else { Lineup::Joint };

        let (mut env, p0, h0) = Env::reset_with(task, script.clone(), lineup);
        let mut prime_obs = vec![p0.bits().to_vec()];
        let mut helper_obs = vec![h0.bits().to_vec()];
        let mut rewards = Vec::new();
        for t in 0..100 {
            let out = env.step(prime[t], helper[t]).expect("episode not done");
            rewards.push(out.reward.tenths());
            prime_obs.push(out.prime_obs.bits().to_vec());
            helper_obs.push(out.helper_obs.bits().to_vec());
            assert_eq!(out.done, t == 99);
        }

        let reference = reference_episode(
            task.good_class == ObjectClass::A,
            &plain_entries(&script),
            &prime,
            (lineup == Lineup::Joint).then_some(&helper[..]),
        );
        if reference.rewards != rewards || reference.prime_obs != prime_obs || reference.helper_obs != helper_obs {
            mismatches += 1;
        }
    }
    EnvCheck {
        triples,
        mismatches,
        elapsed: start.elapsed(),
    }
}

pub struct GradCheck {
    pub cases: usize,
    pub max_rel_error: f64,
    pub elapsed: Duration,
}

/// Denominator floor of the relative error; gradient components below it
/// are compared in absolute terms.
pub const GRAD_FLOOR: f64 = 1e-4;
pub const FD_STEP: f64 = 1e-5;

/// Loss with the TD targets held at their values for `net`, which is what
/// the backward pass differentiates.
fn fixed_target_loss(candidate: &Network<f64>, inputs: &[Vec<f64>], actions: &[Action], targets: &[f64]) -> f64 {
    let trace = forward_sequence(candidate, inputs).unwrap();
    trace
        .q
        .iter()
        .zip(actions)
        .zip(targets)
        .map(|((q, a), y)| (q[a.index()] - y).powi(2))
        .sum()
}

/// BPTT against central differences on random tiny networks in f64.
pub fn gradient_oracle(cases: usize, seed: u64) -> GradCheck {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let d = rng.random_range(1..=8usize);
        let h = rng.random_range(1..=8usize);
        let t = rng.random_range(1..=8usize);
        let mut net: Network<f64> = init_params(&mut rng, d, h);
        if case % 2 == 1 {
            // dense random values everywhere, biases included
            let flat: Vec<f64> = (0..net.num_params()).map(|_| rng.random_range(-0.8..0.8)).collect();
            net.load_flat(&flat).unwrap();
        }
        let inputs: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..d).map(|_| if case % 3 == 0 { rng.random_range(-1.0..1.0) } else { f64::from(rng.random_range(0..2u8)) }).collect())
            .collect();
        let actions: Vec<Action> = (0..t).map(|_| Action::ALL[rng.random_range(0..3)]).collect();
        let rewards: Vec<f64> = (0..t).map(|_| [-1.0, -0.1, 0.0, 0.9, 1.0][rng.random_range(0..5)]).collect();
        let gamma = 0.95;

        let trace = forward_sequence(&net, &inputs).unwrap();
        let (loss, grads) = backward(&net, &trace, &actions, &rewards, gamma).unwrap();
        let expected_loss = episode_loss(&trace.q, &actions, &rewards, gamma).unwrap();
        assert!((loss - expected_loss).abs() <= 1e-12 * expected_loss.abs().max(1.0));

        let targets = td_targets(&trace.q, &rewards, gamma);
        let fd = finite_diff_network(|n| fixed_target_loss(n, &inputs, &actions, &targets), &net, FD_STEP);
        worst = worst.max(max_relative_error(&grads, &fd, GRAD_FLOOR));
    }
    GradCheck {
        cases,
        max_rel_error: worst,
        elapsed: start.elapsed(),
    }
}

pub struct DeterminismCheck {
    pub repeat_identical: bool,
    pub resume_identical: bool,
    pub elapsed: Duration,
}

/// Two identical tiny `train` runs, plus a run resumed from an intermediate
/// checkpoint, compared byte for byte.
pub fn determinism(hidden: usize, updates: u64, split: u64) -> DeterminismCheck {
    use forage::io::checkpoint::{encode, save_checkpoint};
    use forage::io::config::RunConfig;
    use forage::trainer::{train, TrainConfig, TrainOptions, Trainer, CHECKPOINT_FILE, METRICS_FILE};

    let start = Instant::now();
    let run = RunConfig {
        train: TrainConfig {
            hidden_size: hidden,
            total_updates: updates,
            seed: 7,
            eval_every: 10,
            eval_episodes: 20,
            ..TrainConfig::default()
        },
        checkpoint_every: 0,
        final_eval_episodes: 20,
        ..RunConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    train(&run, &a, TrainOptions::default(), |_| {}).unwrap();
    train(&run, &b, TrainOptions::default(), |_| {}).unwrap();
    let bytes = |d: &std::path::Path| std::fs::read(d.join(CHECKPOINT_FILE)).unwrap();
    let repeat_identical = bytes(&a) == bytes(&b)
        && std::fs::read(a.join(METRICS_FILE)).unwrap() == std::fs::read(b.join(METRICS_FILE)).unwrap();

    let mut partial = Trainer::new(run.train.clone()).unwrap();
    for _ in 0..split {
        partial.step().unwrap();
    }
    std::fs::create_dir_all(&c).unwrap();
    save_checkpoint(&c.join(CHECKPOINT_FILE), &partial.checkpoint()).unwrap();
    let resume = forage::io::checkpoint::load_checkpoint(&c.join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(encode(&resume), encode(&partial.checkpoint()));
    train(&run, &c, TrainOptions { force: false, resume: Some(resume) }, |_| {}).unwrap();
    let resume_identical = bytes(&a) == bytes(&c);

    DeterminismCheck {
        repeat_identical,
        resume_identical,
        elapsed: start.elapsed(),
    }
}
