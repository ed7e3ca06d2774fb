use serde::Serialize;

use super::{Lts, StateId};
use crate::action::{Action, Trace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Acceptance {
    /// The trace can be performed without reaching the error state.
    Accepted,
    /// No run can perform the action at position `at`.
    Rejected { at: usize },
    /// The action at position `at` can lead to the error state.
    Violates { at: usize },
    /// The action at position `at` is outside the alphabet.
    OutOfAlphabet { at: usize, action: Action },
}

/// τ-closed set of states reachable by `trace`, or the outcome that stopped
/// the simulation early.
pub fn simulate(m: &Lts, trace: &[Action]) -> Result<Vec<StateId>, Acceptance> {
    let mut cur = m.tau_closure([m.initial()]);
    if cur.iter().any(|&s| m.is_err(s)) {
        return Err(Acceptance::Violates { at: 0 });
    }
    for (at, a) in trace.iter().enumerate() {
        let label = m
            .label_of(a)
            .ok_or_else(|| Acceptance::OutOfAlphabet { at, action: a.clone() })?;
        let next: Vec<StateId> = cur.iter().flat_map(|&s| m.successors_on(s, label)).collect();
        cur = m.tau_closure(next);
        if cur.iter().any(|&s| m.is_err(s)) {
            return Err(Acceptance::Violates { at });
        }
        if cur.is_empty() {
            return Err(Acceptance::Rejected { at });
        }
    }
    Ok(cur)
}

pub fn accepts(m: &Lts, trace: &Trace) -> Acceptance {
    match simulate(m, trace.actions()) {
        Ok(_) => Acceptance::Accepted,
        Err(e) => e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::LtsBuilder;

    fn t(s: &str) -> Trace {
        Trace(s.split_whitespace().map(|x| x.parse().unwrap()).collect())
    }

    #[test]
    fn outcomes() {
        let mut b = LtsBuilder::new();
        let s0 = b.add_state();
        let s1 = b.add_state();
        b.set_initial(s0);
        b.add(s0, &"a".parse().unwrap(), s1);
        b.add(s1, &"b".parse().unwrap(), s0);
        let e = b.err();
        b.add(s1, &"c".parse().unwrap(), e);
        let m = b.build().unwrap();
        assert_eq!(accepts(&m, &t("a b a")), Acceptance::Accepted);
        assert_eq!(accepts(&m, &t("a a")), Acceptance::Rejected { at: 1 });
        assert_eq!(accepts(&m, &t("a c")), Acceptance::Violates { at: 1 });
        assert!(matches!(accepts(&m, &t("z")), Acceptance::OutOfAlphabet { at: 0, .. }));
    }
}
