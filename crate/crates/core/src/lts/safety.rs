use std::collections::VecDeque;

use serde::Serialize;

use super::{compose, determinize, Label, Lts, LtsBuilder, StateId, ERR};
use crate::action::{Action, Trace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SafetyVerdict {
    pub safe: bool,
    /// Shortest observable trace reaching the error state.
    pub counterexample: Option<Trace>,
}

/// Breadth-first search for the error state of `m`.
pub fn check_safety(m: &Lts) -> SafetyVerdict {
    if !m.has_err() {
        return SafetyVerdict {
            safe: true,
            counterexample: None,
        };
    }
    let n = m.num_states() as usize;
    let mut parent: Vec<Option<(StateId, Label)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([m.initial()]);
    seen[m.initial() as usize] = true;
    while let Some(s) = queue.pop_front() {
        if s == ERR {
            let mut trace: Vec<Action> = Vec::new();
            let mut cur = s;
            while let Some((p, l)) = parent[cur as usize] {
                if let Label::Act(i) = l {
                    trace.push(m.action(i).clone());
                }
                cur = p;
            }
            trace.reverse();
            return SafetyVerdict {
                safe: false,
                counterexample: Some(Trace(trace)),
            };
        }
        for &(l, t) in m.successors(s) {
            if !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = Some((s, l));
                queue.push_back(t);
            }
        }
    }
    SafetyVerdict {
        safe: true,
        counterexample: None,
    }
}

/// Error LTS of a safety property: every action of `α(p)` that the
/// (determinized) property refuses leads to the error state.
pub fn property_err(p: &Lts) -> Lts {
    let p = if p.is_deterministic() {
        p.clone()
    } else {
        determinize(p)
    };
    let shift = u32::from(p.has_err());
    let mut b = LtsBuilder::with_alphabet(p.alphabet().iter().cloned());
    b.require_err();
    for _ in 0..p.num_non_err_states() {
        b.add_state();
    }
    let map = |s: StateId, b: &mut LtsBuilder| if p.is_err(s) { b.err() } else { s - shift };
    let init = map(p.initial(), &mut b);
    b.set_initial(init);
    for s in p.states().filter(|&s| !p.is_err(s)) {
        let src = map(s, &mut b);
        let succ = p.successors(s);
        for i in 0..p.alphabet().len() as u32 {
            let mut any = false;
            for &(_, t) in succ.iter().filter(|&&(l, _)| l == Label::Act(i)) {
                any = true;
                let dst = map(t, &mut b);
                b.add_label(src, Label::Act(i), dst);
            }
            if !any {
                let e = b.err();
                b.add_label(src, Label::Act(i), e);
            }
        }
    }
    b.build().expect("property error LTS is well formed")
}

/// `m ⊨ p` via reachability of the error state in `m ∥ p_err`.
pub fn check_property(m: &Lts, p: &Lts) -> SafetyVerdict {
    check_safety(&compose(m, &property_err(p)))
}
