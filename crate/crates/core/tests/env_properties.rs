mod support;

use support::env_suite::run_suite;

#[test]
fn invariants_hold_over_ten_thousand_steps() {
    let steps = run_suite(400, 7).unwrap();
    assert!(steps >= 10_000, "only {steps} steps were checked");
}
