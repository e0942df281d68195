mod common;

use common::{env_equivalence, gradient_oracle};

#[test]
fn bptt_matches_finite_differences() {
    let check = gradient_oracle(30, 11);
    assert!(check.max_rel_error < 1e-5, "max relative error {:e}", check.max_rel_error);
}

#[test]
fn env_matches_reference_simulator() {
    let check = env_equivalence(300, 5);
    assert_eq!(check.mismatches, 0);
}

#[test]
fn random_episodes_balance_against_reference_counts() {
    let check = common::reward_accounting(2000, 21);
    assert_eq!(check.violations, 0);
}
