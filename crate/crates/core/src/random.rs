//! Seeded generators of small random models for property testing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::action::{Action, Trace};
use crate::assume::{InterfaceAlphabet, Tag};
use crate::lts::{property_err, Lts, LtsBuilder};
use crate::taxinet::{DiscretizationConfig, SystemState};

/// Up to `max_states` states over `alphabet`, with optional τ steps and
/// error transitions; every state is reachable.
pub fn random_lts<R: Rng>(rng: &mut R, alphabet: &[Action], max_states: u32, tau: bool, err: bool) -> Lts {
    let n = rng.gen_range(1..=max_states);
    let mut b = LtsBuilder::with_alphabet(alphabet.iter().cloned());
    for _ in 0..n {
        b.add_state();
    }
    b.set_initial(0);
    // spanning tree first so everything is reachable
    for s in 1..n {
        let p = rng.gen_range(0..s);
        let a = &alphabet[rng.gen_range(0..alphabet.len())];
        b.add(p, a, s);
    }
    let extra = rng.gen_range(0..=2 * n);
    for _ in 0..extra {
        let s = rng.gen_range(0..n);
        let t = rng.gen_range(0..n);
        if tau && rng.gen_bool(0.15) {
            b.add_tau(s, t);
        } else {
            let a = &alphabet[rng.gen_range(0..alphabet.len())];
            b.add(s, a, t);
        }
    }
    if err {
        let k = rng.gen_range(1..=2);
        for _ in 0..k {
            let s = rng.gen_range(0..n);
            let e = b.err();
            if tau && rng.gen_bool(0.2) {
                b.add_tau(s, e);
            } else {
                let a = &alphabet[rng.gen_range(0..alphabet.len())];
                b.add(s, a, e);
            }
        }
    }
    b.build().expect("random LTS is well formed")
}

/// Deterministic safety property over `alphabet`.
pub fn random_property<R: Rng>(rng: &mut R, alphabet: &[Action], max_states: u32) -> Lts {
    let n = rng.gen_range(1..=max_states);
    let mut b = LtsBuilder::with_alphabet(alphabet.iter().cloned());
    for _ in 0..n {
        b.add_state();
    }
    b.set_initial(0);
    for s in 0..n {
        for a in alphabet {
            if rng.gen_bool(0.7) {
                b.add(s, a, rng.gen_range(0..n));
            }
        }
    }
    b.build().expect("random property is well formed").trim()
}

/// Context over exactly the actions of `iface`. In every state all actuals
/// are enabled, so the context never refuses what the component decides.
pub fn random_context<R: Rng>(rng: &mut R, iface: &InterfaceAlphabet, max_states: u32) -> Lts {
    let n = rng.gen_range(1..=max_states);
    let actions = iface.actions();
    let mut b = LtsBuilder::with_alphabet(actions.iter().cloned());
    for _ in 0..n {
        b.add_state();
    }
    b.set_initial(0);
    for s in 0..n {
        for a in &actions {
            let receptive = iface.tag(a) == Some(Tag::Actual);
            if receptive || rng.gen_bool(0.5) {
                b.add(s, a, rng.gen_range(0..n));
                if !receptive && rng.gen_bool(0.15) {
                    b.add(s, a, rng.gen_range(0..n));
                }
            }
        }
    }
    b.build().expect("random context is well formed")
}

/// Random tags over `actions`.
pub fn random_tags<R: Rng>(rng: &mut R, actions: &[Action], p_actual: f64) -> InterfaceAlphabet {
    let mut iface = InterfaceAlphabet::new();
    for a in actions {
        let tag = if rng.gen_bool(p_actual) {
            Tag::Actual
        } else {
            Tag::Estimate
        };
        iface.insert(a.clone(), tag);
    }
    iface
}

/// Component, property error LTS and interface of a random instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub m: Lts,
    pub p_err: Lts,
    pub iface: InterfaceAlphabet,
}

/// Instance with up to 6 states, an interface of 1 to 4 actions `x[i]`, one
/// internal action `h` and a property over up to 3 of these actions. Half of
/// the instances tag some interface actions as actuals.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let k = rng.gen_range(1..=4);
    let sigma: Vec<Action> = (0..k).map(|i| Action::indexed("x", [i])).collect();
    let mut alpha = sigma.clone();
    alpha.push(Action::new("h"));
    let with_err = rng.gen_bool(0.5);
    let m = random_lts(rng, &alpha, 6, true, with_err);
    let np = rng.gen_range(1..=alpha.len().min(3));
    let mut p_alpha: Vec<Action> = alpha.choose_multiple(rng, np).cloned().collect();
    p_alpha.sort();
    let p = random_property(rng, &p_alpha, 3);
    let p_actual = if rng.gen_bool(0.5) { 0.0 } else { 0.4 };
    let iface = random_tags(rng, &sigma, p_actual);
    Instance {
        m,
        p_err: property_err(&p),
        iface,
    }
}

/// Random walk of at most `len` steps on `a`, with actions of `extra` that
/// lie outside `α(a)` inserted at random positions.
pub fn random_walk<R: Rng>(rng: &mut R, a: &Lts, extra: &[Action], len: usize) -> Trace {
    let outside: Vec<&Action> = extra.iter().filter(|x| a.action_index(x).is_none()).collect();
    let mut s = a.initial();
    let mut out = Vec::new();
    for _ in 0..len {
        if !outside.is_empty() && rng.gen_bool(0.3) {
            out.push((*outside.choose(rng).unwrap()).clone());
            continue;
        }
        let Some(&(l, t)) = a.successors(s).choose(rng) else {
            break;
        };
        if let Some(i) = l.action_index() {
            out.push(a.action(i).clone());
        }
        s = t;
    }
    Trace(out)
}

/// Perception for the TaxiNet interface: from each of a few modes every
/// actual is accepted and followed by a nonempty random set of estimates.
/// With `bias`, estimates are drawn from the given per-actual pool with
/// probability `bias.1`.
pub fn random_m2<R: Rng>(
    rng: &mut R,
    cfg: &DiscretizationConfig,
    max_modes: u32,
    bias: Option<(&BTreeMap<Action, Vec<Action>>, f64)>,
) -> Lts {
    let modes = rng.gen_range(1..=max_modes);
    let states: Vec<SystemState> = cfg.states().collect();
    let all_est: Vec<Action> = states.iter().map(|s| s.est()).collect();
    let mut b = LtsBuilder::new();
    for _ in 0..modes {
        b.add_state();
    }
    b.set_initial(0);
    for p in 0..modes {
        for s in &states {
            let act = s.act();
            let wait = b.add_state();
            b.add(p, &act, wait);
            let pool: &[Action] = match bias {
                Some((allowed, prob)) if rng.gen_bool(prob) => match allowed.get(&act) {
                    Some(v) if !v.is_empty() => v,
                    _ => &all_est,
                },
                _ => &all_est,
            };
            let k = rng.gen_range(1..=pool.len().min(3));
            for e in pool.choose_multiple(rng, k) {
                b.add(wait, e, rng.gen_range(0..modes));
            }
        }
    }
    for s in &states {
        b.declare(s.est());
    }
    b.build().expect("random perception is well formed")
}
