use serde::Serialize;

use super::{Lts, StateId};

/// Serializable view of an LTS; τ is written as `"tau"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LtsRecord {
    pub states: u32,
    pub initial: StateId,
    pub err: Option<StateId>,
    pub alphabet: Vec<String>,
    pub names: Vec<String>,
    pub transitions: Vec<(StateId, String, StateId)>,
}

pub fn to_record(m: &Lts) -> LtsRecord {
    LtsRecord {
        states: m.num_states(),
        initial: m.initial(),
        err: m.err(),
        alphabet: m.alphabet().iter().map(ToString::to_string).collect(),
        names: m.states().map(|s| m.state_name(s)).collect(),
        transitions: m.transitions().map(|(s, l, t)| (s, m.label_name(l), t)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::LtsBuilder;

    #[test]
    fn record_lists_everything() {
        let mut b = LtsBuilder::new();
        let s = b.add_state();
        b.set_initial(s);
        b.add_tau(s, s);
        let e = b.err();
        b.add(s, &"go".parse().unwrap(), e);
        let r = to_record(&b.build().unwrap());
        assert_eq!(r.states, 2);
        assert_eq!(r.err, Some(0));
        assert_eq!(r.initial, 1);
        assert_eq!(r.transitions, [(1, "tau".to_string(), 1), (1, "go".to_string(), 0)]);
    }
}
