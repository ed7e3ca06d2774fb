use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{Label, Lts, LtsBuilder, StateId};

/// Parallel composition `a ∥ b`.
///
/// Shared observable actions synchronize; τ and unshared actions interleave.
/// Any product state with an error coordinate is the error state.
pub fn compose(a: &Lts, b: &Lts) -> Lts {
    compose_with_origin(a, b).0
}

/// Left-to-right fold of [`compose`]; the empty list yields [`Lts::universal`].
pub fn compose_all<'a>(parts: impl IntoIterator<Item = &'a Lts>) -> Lts {
    let mut it = parts.into_iter();
    match it.next() {
        None => Lts::universal(),
        Some(first) => it.fold(first.clone(), |acc, p| compose(&acc, p)),
    }
}

/// [`compose`] that also returns, for every state of the product, the pair of
/// component states it came from (`None` for the error state).
pub fn compose_with_origin(a: &Lts, b: &Lts) -> (Lts, Vec<Option<(StateId, StateId)>>) {
    let alphabet: Vec<_> = a
        .alphabet()
        .iter()
        .chain(b.alphabet())
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |x| alphabet.binary_search(x).expect("union") as u32;
    let a_to_u: Vec<u32> = a.alphabet().iter().map(pos).collect();
    let b_to_u: Vec<u32> = b.alphabet().iter().map(pos).collect();
    let a_in_b: Vec<Option<Label>> = a.alphabet().iter().map(|x| b.label_of(x)).collect();
    let b_shared: Vec<bool> = b.alphabet().iter().map(|x| a.action_index(x).is_some()).collect();

    let mut builder = LtsBuilder::with_alphabet(alphabet.iter().cloned());
    if a.has_err() || b.has_err() {
        builder.require_err();
    }
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut origin: Vec<(StateId, StateId)> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |p: (StateId, StateId), builder: &mut LtsBuilder, queue: &mut VecDeque<_>| {
        if a.is_err(p.0) || b.is_err(p.1) {
            return builder.err();
        }
        *ids.entry(p).or_insert_with(|| {
            queue.push_back(p);
            origin.push(p);
            builder.add_state()
        })
    };

    let init = intern((a.initial(), b.initial()), &mut builder, &mut queue);
    builder.set_initial(init);
    while let Some((s1, s2)) = queue.pop_front() {
        let src = intern((s1, s2), &mut builder, &mut queue);
        for &(l, t1) in a.successors(s1) {
            match l {
                Label::Tau => {
                    let dst = intern((t1, s2), &mut builder, &mut queue);
                    builder.add_label(src, Label::Tau, dst);
                }
                Label::Act(i) => {
                    let ul = Label::Act(a_to_u[i as usize]);
                    match a_in_b[i as usize] {
                        None => {
                            let dst = intern((t1, s2), &mut builder, &mut queue);
                            builder.add_label(src, ul, dst);
                        }
                        Some(bl) => {
                            for t2 in b.successors_on(s2, bl) {
                                let dst = intern((t1, t2), &mut builder, &mut queue);
                                builder.add_label(src, ul, dst);
                            }
                        }
                    }
                }
            }
        }
        for &(l, t2) in b.successors(s2) {
            let ul = match l {
                Label::Tau => Label::Tau,
                Label::Act(j) if b_shared[j as usize] => continue,
                Label::Act(j) => Label::Act(b_to_u[j as usize]),
            };
            let dst = intern((s1, t2), &mut builder, &mut queue);
            builder.add_label(src, ul, dst);
        }
    }

    let has_err = builder.has_err();
    let lts = builder.build().expect("product is well formed");
    let mut out = Vec::with_capacity(lts.num_states() as usize);
    if has_err {
        out.push(None);
    }
    out.extend(origin.into_iter().map(Some));
    (lts, out)
}
