mod common;

use forage::env::{Action, Env, Lineup, ObjectClass, Observation, Role, SpawnScript, TaskSpec};
use forage::policy::{OracleForager, Still, UniformRandom};
use forage::rng::{stream, Domain};
use forage::rollout::run_episode;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn oracle_helper_on_all_good_script_scores_twenty() {
    let task = TaskSpec::new(ObjectClass::A);
    for first in [0, 4] {
        let script = SpawnScript::periodic(first, &[ObjectClass::A; 20]).unwrap();
        let mut rng = stream(0, Domain::Eval, 0);
        let rec = run_episode(task, script, Lineup::Joint, &mut Still, &mut OracleForager::new(Role::Helper), &mut rng).unwrap();
        let s = rec.summary();
        assert_eq!(s.total.tenths(), 200);
        assert_eq!(s.helper_collect.tenths(), 200);
    }
}

#[test]
fn all_bad_script_with_still_agents_scores_zero() {
    let task = TaskSpec::new(ObjectClass::B);
    let script = SpawnScript::periodic(4, &[ObjectClass::A; 20]).unwrap();
    let mut rng = stream(0, Domain::Eval, 0);
    let rec = run_episode(task, script, Lineup::Joint, &mut Still, &mut Still, &mut rng).unwrap();
    assert_eq!(rec.summary().total.tenths(), 0);
    assert_eq!(rec.expired.len(), 20);
}

#[test]
fn random_episodes_conserve_objects_and_account_rewards() {
    for i in 0..2000u64 {
        let mut rng = stream(3, Domain::Eval, i);
        let task = TaskSpec::sample(&mut rng);
        let script = SpawnScript::sample(&mut rng);
        let lineup = if i % 3 == 0 { Lineup::PrimeAlone } else { Lineup::Joint };
        let rec = run_episode(task, script, lineup, &mut UniformRandom, &mut UniformRandom, &mut rng).unwrap();
        let mut seen = vec![0u8; 20];
        for (_, c) in &rec.collections {
            seen[c.object] += 1;
        }
        for &id in &rec.expired {
            seen[id] += 1;
        }
        assert!(seen.iter().all(|&n| n == 1), "episode {i}: {seen:?}");
        let s = rec.summary();
        let expected = 10 * s.good_collected as i32 - 10 * s.bad_collected as i32 - s.prime_moves as i32;
        assert_eq!(s.total.tenths(), expected);
        assert_eq!(s.prime_collect + s.helper_collect + forage::env::Reward(-(s.prime_moves as i32)), s.total);
        assert_eq!(rec.rewards.len(), 100);
        if lineup == Lineup::PrimeAlone {
            assert_eq!(s.helper_collect.tenths(), 0);
            assert!(rec.helper_actions.is_empty());
        }
    }
}

#[test]
fn replaying_actions_reproduces_streams() {
    let mut rng = stream(8, Domain::Eval, 1);
    let task = TaskSpec::sample(&mut rng);
    let script = SpawnScript::sample(&mut rng);
    let rec = run_episode(task, script.clone(), Lineup::Joint, &mut UniformRandom, &mut UniformRandom, &mut rng).unwrap();
    let (mut env, mut p, mut h) = Env::reset(task, script);
    for t in 0..100 {
        assert_eq!(p, rec.prime_obs[t]);
        assert_eq!(h, rec.helper_obs[t]);
        let out = env.step(rec.prime_actions[t], rec.helper_actions[t]).unwrap();
        assert_eq!(out.reward, rec.rewards[t]);
        p = out.prime_obs;
        h = out.helper_obs;
    }
}

#[test]
fn reference_simulator_agrees_on_fixed_seed() {
    assert_eq!(common::env_equivalence(200, 99).mismatches, 0);
}

fn arb_script() -> impl Strategy<Value = SpawnScript> {
    any::<u64>().prop_map(|seed| common::random_script(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn arb_actions() -> impl Strategy<Value = Vec<Action>> {
    proptest::collection::vec(prop_oneof![Just(Action::Left), Just(Action::Right), Just(Action::Stay)], 100)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn script_text_round_trips(script in arb_script()) {
        prop_assert_eq!(SpawnScript::parse(&script.to_text()).unwrap(), script);
    }

    #[test]
    fn observations_decode_to_env_state(
        script in arb_script(),
        good_a in any::<bool>(),
        prime in arb_actions(),
        helper in arb_actions(),
    ) {
        let task = TaskSpec::new(if good_a { ObjectClass::A } else { ObjectClass::B });
        let (mut env, _, _) = Env::reset(task, script);
        for t in 0..100 {
            let out = env.step(prime[t], helper[t]).unwrap();
            if out.done {
                break;
            }
            for obs in [&out.prime_obs, &out.helper_obs] {
                prop_assert_eq!(obs.prime_pos(), Some(env.prime_pos()));
                prop_assert_eq!(obs.helper_pos(), env.helper_pos());
                for cell in 0..5 {
                    let view = obs.cell(cell);
                    let live = env.object_at(cell).map(|o| o.class);
                    prop_assert_eq!(view.object, live);
                    if obs.role() == Role::Prime {
                        prop_assert_eq!(view.good, Some(live.is_some_and(|k| task.is_good(k))));
                    }
                }
                let again = Observation::from_bits(obs.role(), obs.bits().to_vec()).unwrap();
                prop_assert_eq!(&again, obs);
            }
        }
    }

    #[test]
    fn helper_stream_is_task_independent(script in arb_script(), prime in arb_actions(), helper in arb_actions()) {
        let task = TaskSpec::new(ObjectClass::A);
        let (mut a, _, ha) = Env::reset(task, script.clone());
        let (mut b, _, hb) = Env::reset(task.flipped(), script);
        prop_assert_eq!(ha, hb);
        for t in 0..100 {
            let oa = a.step(prime[t], helper[t]).unwrap();
            let ob = b.step(prime[t], helper[t]).unwrap();
            prop_assert_eq!(oa.helper_obs, ob.helper_obs);
            prop_assert_eq!(oa.reward.tenths() + ob.reward.tenths() + 2 * i32::from(prime[t].is_move()),
                            0, "swapping the good class negates collection rewards");
        }
    }
}
