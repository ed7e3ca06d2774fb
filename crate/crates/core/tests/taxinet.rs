use std::collections::BTreeSet;

use assumegen::assume::{build_assume, check_context, AssumeResult};
use assumegen::localspec::{concretize, satisfies_specs, synthesize_local_specs, SpecMode};
use assumegen::lts::{accepts, check_safety, compose, determinize, hide, Acceptance, Lts};
use assumegen::taxinet::*;
use assumegen::Action;

fn a(s: &str) -> Action {
    s.parse().unwrap()
}

fn set(xs: &[&str]) -> BTreeSet<Action> {
    xs.iter().map(|x| a(x)).collect()
}

fn assume_est(m: u32) -> AssumeResult {
    let cfg = DiscretizationConfig::new(m);
    build_assume(&m1(&cfg), &Lts::universal(), &est_alphabet(&cfg)).unwrap()
}

fn assume_full(m: u32) -> AssumeResult {
    let cfg = DiscretizationConfig::new(m);
    build_assume(&m1(&cfg), &Lts::universal(), &est_act_alphabet(&cfg)).unwrap()
}

/// Labels on which `s` moves into the error state.
fn err_labels(l: &Lts, s: u32) -> BTreeSet<Action> {
    l.successors(s)
        .iter()
        .filter(|&&(_, t)| l.is_err(t))
        .map(|&(lab, _)| l.action(lab.action_index().unwrap()).clone())
        .collect()
}

/// States entered by `label`.
fn entered_by(l: &Lts, label: &str) -> BTreeSet<u32> {
    let lab = l.label_of(&a(label)).unwrap();
    l.transitions()
        .filter(|&(_, x, _)| x == lab)
        .map(|(_, _, t)| t)
        .collect()
}

#[test]
fn m1_size_law() {
    for m in [2u32, 4, 6, 14, 30] {
        let l = m1(&DiscretizationConfig::new(m));
        assert_eq!(l.num_non_err_states(), 9 * (m * m + 3 * m + 1), "m={m}");
    }
    assert_eq!(m1(&DiscretizationConfig::new(2)).num_transitions(), 155);
}

#[test]
fn assumption_size_law() {
    for m in [2u32, 4, 6, 14, 30] {
        let r = assume_est(m);
        assert_eq!(r.stats.states, 3 * m + 1, "m={m}");
        assert!(r.assumption.lts.is_deterministic());
        assert!(!r.assumption.no_safe_context);
    }
}

#[test]
fn initial_self_loops() {
    let r = assume_est(2);
    let l = &r.assumption.lts;
    let init = l.initial();
    let loops: BTreeSet<Action> = l
        .successors(init)
        .iter()
        .filter(|&&(_, t)| t == init)
        .map(|&(lab, _)| l.action(lab.action_index().unwrap()).clone())
        .collect();
    assert_eq!(loops, set(&["est[0][2]", "est[1][0]", "est[2][1]"]));
}

#[test]
fn err_transitions_after_actual_22() {
    let r = assume_full(2);
    let l = &r.err_automaton.lts;
    let mut states = entered_by(l, "act[2][2]");
    if let Some(sink) = r.err_automaton.sink {
        states.remove(&sink);
    }
    assert!(!states.is_empty());
    for s in states {
        assert_eq!(
            err_labels(l, s),
            set(&[
                "est[0][0]",
                "est[0][1]",
                "est[0][2]",
                "est[1][0]",
                "est[1][1]",
                "est[2][1]"
            ])
        );
    }
}

#[test]
fn err_automaton_edges_into_err_are_estimates() {
    for r in [assume_est(2), assume_full(2), assume_full(4)] {
        let l = &r.err_automaton.lts;
        assert!(l.is_deterministic());
        for (_, lab, t) in l.transitions() {
            if l.is_err(t) {
                assert_eq!(l.action(lab.action_index().unwrap()).base(), "est");
            }
        }
    }
}

#[test]
fn local_spec_goldens() {
    let cfg = DiscretizationConfig::new(2);
    let r = assume_full(2);
    let specs = synthesize_local_specs(&r.err_automaton, &r.iface, SpecMode::Merged).unwrap();
    let s22 = specs.iter().find(|s| s.actual == a("act[2][2]")).unwrap();
    assert_eq!(s22.allowed, set(&["est[1][2]", "est[2][0]", "est[2][2]"]));
    let s20 = specs.iter().find(|s| s.actual == a("act[2][0]")).unwrap();
    let all: BTreeSet<Action> = cfg.states().map(SystemState::est).collect();
    let expected: BTreeSet<Action> = all
        .difference(&set(&["est[0][0]", "est[0][1]", "est[1][1]"]))
        .cloned()
        .collect();
    assert_eq!(s20.allowed, expected);
    assert_eq!(
        concretize(s22, &cfg).unwrap().to_string(),
        "(cte* ∈ [2.7,8) ∧ he* ∈ (11.66,35.0]) ⇒ ((cte∈[-2.7,2.7] ∧ he∈(11.66,35.0]) ∨ (cte∈[2.7,8) ∧ he∈[-11.67,11.66]) ∨ (cte∈[2.7,8) ∧ he∈(11.66,35.0]))"
    );
}

#[test]
fn per_state_specs_partition_estimates() {
    let r = assume_full(4);
    let est: BTreeSet<Action> = r.iface.estimates().into_iter().collect();
    let l = &r.err_automaton.lts;
    let specs = synthesize_local_specs(&r.err_automaton, &r.iface, SpecMode::PerState).unwrap();
    assert!(!specs.is_empty());
    for s in &specs {
        for q in &s.provenance {
            let id = l.states().find(|&x| &l.state_name(x) == q).unwrap();
            let blocked = err_labels(l, id);
            assert!(blocked.is_disjoint(&s.allowed));
            let union: BTreeSet<Action> = blocked.union(&s.allowed).cloned().collect();
            assert_eq!(union, est);
        }
    }
}

#[test]
fn optimistic_and_pessimistic_closed_loops() {
    let cfg = DiscretizationConfig::new(2);
    let m = m1(&cfg);
    assert!(check_safety(&compose(&m, &perfect_perception(&cfg))).safe);
    let closed = compose(&m, &worst_perception(&cfg));
    let v = check_safety(&closed);
    assert!(!v.safe);
    let trace = v.counterexample.unwrap();
    // the counterexample replays to the error state of the closed loop
    let visible: Vec<Action> = trace.actions().to_vec();
    assert!(matches!(accepts(&closed, &visible.into()), Acceptance::Violates { .. }));
}

#[test]
fn perception_versus_specs_and_assumption() {
    let cfg = DiscretizationConfig::new(2);
    let full = assume_full(2);
    let specs = synthesize_local_specs(&full.err_automaton, &full.iface, SpecMode::Merged).unwrap();
    assert!(satisfies_specs(&perfect_perception(&cfg), &full.iface, &specs));
    assert!(!satisfies_specs(&worst_perception(&cfg), &full.iface, &specs));
    assert!(check_context(&perfect_perception(&cfg), &full.assumption));
    assert!(!check_context(&worst_perception(&cfg), &full.assumption));
    // over estimates alone the perception must be judged inside the loop:
    // on its own it can emit any estimate sequence
    let est = assume_est(2);
    let m = m1(&cfg);
    assert!(!check_context(&perfect_perception(&cfg), &est.assumption));
    assert!(check_context(&compose(&m, &perfect_perception(&cfg)), &est.assumption));
    assert!(!check_context(&compose(&m, &worst_perception(&cfg)), &est.assumption));
}

#[test]
fn monitored_loop_is_safe() {
    for m in [2u32, 4, 6] {
        let cfg = DiscretizationConfig::new(m);
        let r = assume_est(m);
        let closed = compose(&r.assumption.lts, &compose(&m1(&cfg), &worst_perception(&cfg)));
        assert!(check_safety(&closed).safe, "m={m}");
    }
}

#[test]
fn estimates_follow_actuals() {
    let cfg = DiscretizationConfig::new(2);
    let iface = est_act_alphabet(&cfg).actions();
    for p in [perfect_perception(&cfg), worst_perception(&cfg)] {
        let closed = compose(&m1(&cfg), &p);
        let d = determinize(&hide(&closed, &iface));
        let kind = |s: u32| -> BTreeSet<&str> {
            d.successors(s)
                .iter()
                .map(|&(l, _)| d.action(l.action_index().unwrap()).base())
                .collect()
        };
        for (s, l, t) in d.transitions() {
            if d.is_err(t) {
                continue;
            }
            let base = d.action(l.action_index().unwrap()).base();
            assert_eq!(kind(s), BTreeSet::from([base]));
            let next = kind(t);
            if base == "act" {
                assert_eq!(next, BTreeSet::from(["est"]));
            } else {
                assert!(next.is_empty() || next == BTreeSet::from(["act"]));
            }
        }
    }
}
