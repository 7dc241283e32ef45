// Differential tests for the assertion evaluator. The reference in
// tests/common is a per-bit three-valued interpreter written against the
// documented semantics, with no code shared with the packed-word evaluator.

mod common;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use svafix::hdl::parse_assertion;
use svafix::trace::{evaluate_assertion, CounterexampleTrace, Verdict};

#[test]
fn templates_cover_both_implications_and_past() {
    let templates = common::eval_templates();
    assert!(templates.len() >= 20);
    let texts: Vec<String> = templates
        .iter()
        .map(svafix::hdl::render_assertion)
        .collect();
    let joined = texts.join("\n");
    assert!(joined.contains("|->"));
    assert!(joined.contains("|=>"));
    for d in ["##0", "##1", "##2", "##3"] {
        assert!(joined.contains(d), "missing {d}");
    }
    assert!(joined.contains("$past"));
    assert!(joined.contains("$past(sig_a, 2)") || joined.contains("$past(a, 2)"));
}

#[test]
fn exhaustive_two_signal_traces_match_reference() {
    // All 5460 traces of two one-bit signals up to length 6, every template.
    let checks = common::exhaustive_two_signal_battle();
    assert!(checks >= 100_000, "only {checks} comparisons ran");
}

#[test]
fn random_wider_traces_match_reference() {
    common::random_wider_battle(2_000, 0x00e1);
}

#[test]
fn x_antecedent_is_vacuous_x_consequent_fails() {
    let a = parse_assertion("a |-> ##1 b").unwrap();
    let mut t = CounterexampleTrace::new("clk", 3);
    t.add_signal_vals(
        "a",
        1,
        &[
            svafix::trace::Val::all_x(1),
            svafix::trace::Val::known(1, 1),
            svafix::trace::Val::known(1, 0),
        ],
    );
    t.add_signal_vals(
        "b",
        1,
        &[
            svafix::trace::Val::known(1, 0),
            svafix::trace::Val::known(1, 0),
            svafix::trace::Val::all_x(1),
        ],
    );
    let r = evaluate_assertion(&a, &t).unwrap();
    assert_eq!(r.attempts[0].verdict, Verdict::Vacuous);
    assert_eq!(r.attempts[1].verdict, Verdict::Fail);
    assert!(!r.passed);
    assert_eq!(r.first_failing_cycle, Some(1));
}

#[test]
fn attempts_past_the_window_end_are_vacuous() {
    let a = parse_assertion("a |=> ##2 b").unwrap();
    let mut t = CounterexampleTrace::new("clk", 4);
    t.add_signal("a", 1, &[1, 1, 1, 1]);
    t.add_signal("b", 1, &[1, 1, 1, 1]);
    let r = evaluate_assertion(&a, &t).unwrap();
    // Total delay 3: only the attempt at cycle 0 completes.
    assert_eq!(r.attempts[0].verdict, Verdict::Pass);
    for at in &r.attempts[1..] {
        assert_eq!(at.verdict, Verdict::Vacuous, "attempt {}", at.start);
    }
    assert!(r.passed);
    assert!(r.covered);
}

#[test]
fn disable_iff_suppresses_failing_attempts() {
    let armed = parse_assertion("a |-> b").unwrap();
    let disarmed = parse_assertion("disable iff (rst) a |-> b").unwrap();
    let mut t = CounterexampleTrace::new("clk", 4);
    t.add_signal("a", 1, &[1, 1, 1, 1]);
    t.add_signal("b", 1, &[1, 0, 0, 1]);
    t.add_signal("rst", 1, &[0, 1, 1, 0]);
    assert!(!evaluate_assertion(&armed, &t).unwrap().passed);
    let r = evaluate_assertion(&disarmed, &t).unwrap();
    assert!(r.passed, "reset cycles must not count as failures");
    assert!(r.covered);
}

// X propagation spot checks that the battles hit only probabilistically.

#[test]
fn reduction_or_of_partially_known_nonzero_is_true() {
    // 4'b1xx0 reduced by | is 1 regardless of the x bits.
    let a = parse_assertion("(|s) |-> b").unwrap();
    let mut t = CounterexampleTrace::new("clk", 1);
    t.add_signal_vals("s", 4, &[svafix::trace::Val::new(4, 0b1000, 0b0110)]);
    t.add_signal("b", 1, &[1]);
    let r = evaluate_assertion(&a, &t).unwrap();
    assert_eq!(r.attempts[0].verdict, Verdict::Pass);
}

#[test]
fn equality_with_a_differing_known_bit_is_false_despite_x() {
    // 4'b1xx0 == 4'b0xx0 is 0: bit 3 differs and is known on both sides.
    let a = parse_assertion("(s == t) |-> b").unwrap();
    let mut tr = CounterexampleTrace::new("clk", 1);
    tr.add_signal_vals("s", 4, &[svafix::trace::Val::new(4, 0b1000, 0b0110)]);
    tr.add_signal_vals("t", 4, &[svafix::trace::Val::new(4, 0b0000, 0b0110)]);
    tr.add_signal("b", 1, &[0]);
    let r = evaluate_assertion(&a, &tr).unwrap();
    // Antecedent is known false, so the attempt is vacuous, not failing.
    assert_eq!(r.attempts[0].verdict, Verdict::Vacuous);
    assert!(r.passed);
}

#[test]
fn past_before_the_trace_start_is_x() {
    let a = parse_assertion("a |-> $past(a, 2)").unwrap();
    let mut t = CounterexampleTrace::new("clk", 3);
    t.add_signal("a", 1, &[1, 1, 1]);
    let r = evaluate_assertion(&a, &t).unwrap();
    // Cycles 0 and 1 look back past the start: consequent is x, which fails.
    assert_eq!(r.attempts[0].verdict, Verdict::Fail);
    assert_eq!(r.attempts[1].verdict, Verdict::Fail);
    assert_eq!(r.attempts[2].verdict, Verdict::Pass);
}

#[test]
fn shift_by_unknown_amount_is_all_x() {
    let a = parse_assertion("((s >> t) == 2'd1) |-> b").unwrap();
    let mut tr = CounterexampleTrace::new("clk", 1);
    tr.add_signal("s", 2, &[2]);
    tr.add_signal_vals("t", 2, &[svafix::trace::Val::new(2, 0, 0b01)]);
    tr.add_signal("b", 1, &[0]);
    let r = evaluate_assertion(&a, &tr).unwrap();
    assert_eq!(r.attempts[0].verdict, Verdict::Vacuous);
}

#[test]
fn mixed_width_comparison_extends_with_zeros() {
    // 2'd2 == 4'd2 after zero extension.
    let a = parse_assertion("(s == t) |-> b").unwrap();
    let mut tr = CounterexampleTrace::new("clk", 1);
    tr.add_signal("s", 2, &[2]);
    tr.add_signal("t", 4, &[2]);
    tr.add_signal("b", 1, &[1]);
    let r = evaluate_assertion(&a, &tr).unwrap();
    assert_eq!(r.attempts[0].verdict, Verdict::Pass);
}

#[test]
fn random_seed_sweep_is_stable_across_runs() {
    // The battles are deterministic for a fixed seed; a second run must
    // visit the same cases. Guards against platform-dependent RNG use.
    let mut r1 = ChaCha8Rng::seed_from_u64(77);
    let mut r2 = ChaCha8Rng::seed_from_u64(77);
    let sigs = vec![("s0".to_string(), 3), ("s1".to_string(), 1)];
    for _ in 0..50 {
        let a1 = common::random_eval_assertion(&mut r1, &sigs);
        let a2 = common::random_eval_assertion(&mut r2, &sigs);
        assert_eq!(
            svafix::hdl::render_assertion(&a1),
            svafix::hdl::render_assertion(&a2)
        );
    }
}
