use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{Label, Lts, LtsBuilder, StateId};

/// Subset construction over τ-closures.
///
/// Any subset containing the error state collapses to the error state. Two
/// subsets are identified when they agree after discarding members whose only
/// outgoing transitions are τ: such states contribute nothing observable once
/// the closure has been taken.
pub fn determinize(m: &Lts) -> Lts {
    let mut b = LtsBuilder::with_alphabet(m.alphabet().iter().cloned());
    let mut ids: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut queue: VecDeque<Vec<StateId>> = VecDeque::new();

    let kernel = |closure: Vec<StateId>| -> Option<Vec<StateId>> {
        if closure.iter().any(|&s| m.is_err(s)) {
            return None;
        }
        Some(
            closure
                .into_iter()
                .filter(|&s| {
                    let succ = m.successors(s);
                    succ.is_empty() || succ.iter().any(|(l, _)| !l.is_tau())
                })
                .collect(),
        )
    };
    let mut intern = |closure: Vec<StateId>, b: &mut LtsBuilder, queue: &mut VecDeque<_>| match kernel(closure) {
        None => b.err(),
        Some(k) => *ids.entry(k.clone()).or_insert_with(|| {
            queue.push_back(k);
            b.add_state()
        }),
    };

    let init = intern(m.tau_closure([m.initial()]), &mut b, &mut queue);
    b.set_initial(init);
    // builder ids are handed out in queue order
    let mut src: StateId = 0;
    while let Some(set) = queue.pop_front() {
        let mut by_label: BTreeMap<u32, Vec<StateId>> = BTreeMap::new();
        for &s in &set {
            for &(l, t) in m.successors(s) {
                if let Label::Act(i) = l {
                    by_label.entry(i).or_default().push(t);
                }
            }
        }
        for (i, targets) in by_label {
            let dst = intern(m.tau_closure(targets), &mut b, &mut queue);
            b.add_label(src, Label::Act(i), dst);
        }
        src += 1;
    }
    b.build().expect("subset construction is well formed")
}
