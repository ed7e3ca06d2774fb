//! Property suites for the assumption and local-spec constructions on random
//! instances, each checked against a direct model-checking oracle.

use std::collections::BTreeMap;

use assumegen::assume::{build_assume, check_context, Tag};
use assumegen::localspec::{satisfies_specs, synthesize_local_specs, SpecMode};
use assumegen::lts::{accepts, check_safety, compose, Acceptance, Label, Lts};
use assumegen::random::{random_context, random_instance, random_m2, random_walk, Instance};
use assumegen::taxinet::{est_act_alphabet, est_alphabet, m1, DiscretizationConfig};
use assumegen::Action;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Direct reading of weakest-ness: `M↾Σ ∥ N ⊨ P`.
fn oracle(inst: &Instance, n: &Lts) -> bool {
    check_safety(&compose(&compose(&inst.m, &inst.p_err), n)).safe
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn assumption_guards_the_component(seed in any::<u64>()) {
        let inst = instance(seed);
        let r = build_assume(&inst.m, &inst.p_err, &inst.iface).unwrap();
        prop_assert!(r.assumption.lts.is_deterministic());
        prop_assert!(r.err_automaton.lts.is_deterministic());
        if !r.assumption.no_safe_context {
            let closed = compose(&r.assumption.lts, &compose(&inst.m, &inst.p_err));
            prop_assert!(check_safety(&closed).safe);
        }
        let e = &r.err_automaton.lts;
        for (_, l, t) in e.transitions() {
            if e.is_err(t) {
                let Label::Act(i) = l else { unreachable!() };
                prop_assert_eq!(inst.iface.tag(e.action(i)), Some(Tag::Estimate));
            }
        }
    }

    #[test]
    fn assumption_is_weakest(seed in any::<u64>()) {
        let inst = instance(seed);
        let r = build_assume(&inst.m, &inst.p_err, &inst.iface).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..50 {
            let n = random_context(&mut rng, &inst.iface, 4);
            prop_assert_eq!(check_context(&n, &r.assumption), oracle(&inst, &n));
        }
    }

    #[test]
    fn smaller_alphabet_gives_stronger_assumption(seed in any::<u64>()) {
        let inst = instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa1);
        let full = inst.iface.actions();
        let keep: Vec<Action> = full.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
        let small = inst.iface.restrict(|a, _| keep.contains(a));
        let a_small = build_assume(&inst.m, &inst.p_err, &small).unwrap();
        let a_big = build_assume(&inst.m, &inst.p_err, &inst.iface).unwrap();
        if a_small.assumption.no_safe_context {
            return Ok(());
        }
        for _ in 0..20 {
            let w = random_walk(&mut rng, &a_small.assumption.lts, &full, 8);
            prop_assert_eq!(accepts(&a_big.assumption.lts, &w), Acceptance::Accepted);
        }
    }
}

#[test]
fn taxinet_traces_are_monotone_in_the_alphabet() {
    let cfg = DiscretizationConfig::new(2);
    let m = m1(&cfg);
    let small = build_assume(&m, &Lts::universal(), &est_alphabet(&cfg)).unwrap();
    let big = build_assume(&m, &Lts::universal(), &est_act_alphabet(&cfg)).unwrap();
    let extra = est_act_alphabet(&cfg).actions();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let w = if i % 2 == 0 {
            random_walk(&mut rng, &small.assumption.lts, &[], 12)
        } else {
            random_walk(&mut rng, &small.assumption.lts, &extra, 12)
        };
        assert_eq!(accepts(&big.assumption.lts, &w), Acceptance::Accepted, "{w}");
    }
}

#[test]
fn local_specs_are_sound() {
    for max_cte in [2u32, 4] {
        let cfg = DiscretizationConfig::new(max_cte);
        let r = build_assume(&m1(&cfg), &Lts::universal(), &est_act_alphabet(&cfg)).unwrap();
        let specs = synthesize_local_specs(&r.err_automaton, &r.iface, SpecMode::Merged).unwrap();
        let pool: BTreeMap<Action, Vec<Action>> = specs
            .iter()
            .map(|s| (s.actual.clone(), s.allowed.iter().cloned().collect()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from(max_cte));
        let (mut passing, mut failing) = (0, 0);
        for _ in 0..2000 {
            if passing >= 100 && failing >= 20 {
                break;
            }
            let m2 = random_m2(&mut rng, &cfg, 3, Some((&pool, 0.97)));
            if satisfies_specs(&m2, &r.iface, &specs) {
                passing += 1;
                assert!(check_context(&m2, &r.assumption));
            } else {
                failing += 1;
            }
        }
        assert!(passing >= 100, "only {passing} passing instances");
    }
}

#[test]
fn weakest_check_sees_both_verdicts() {
    let (mut safe, mut unsafe_) = (0, 0);
    for seed in 0..200u64 {
        let inst = instance(seed);
        let r = build_assume(&inst.m, &inst.p_err, &inst.iface).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let n = random_context(&mut rng, &inst.iface, 4);
            let verdict = oracle(&inst, &n);
            assert_eq!(check_context(&n, &r.assumption), verdict, "seed {seed}");
            if verdict {
                safe += 1;
            } else {
                unsafe_ += 1;
            }
        }
    }
    assert!(safe > 500 && unsafe_ > 500, "safe={safe} unsafe={unsafe_}");
}
