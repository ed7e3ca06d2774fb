use super::{Label, Lts, LtsBuilder};
use crate::action::Action;

/// Projection `m ↾ keep`: actions outside `keep` become τ and the alphabet
/// shrinks to `α(m) ∩ keep`. States and their ids are unchanged.
pub fn hide(m: &Lts, keep: &[Action]) -> Lts {
    let kept: Vec<Action> = m.alphabet().iter().filter(|a| keep.contains(a)).cloned().collect();
    let mut b = LtsBuilder::with_alphabet(kept.iter().cloned());
    let remap: Vec<Label> = m
        .alphabet()
        .iter()
        .map(|a| match kept.binary_search(a) {
            Ok(i) => Label::Act(i as u32),
            Err(_) => Label::Tau,
        })
        .collect();
    let err_shift = u32::from(m.has_err());
    if m.has_err() {
        b.require_err();
    }
    for _ in 0..m.num_non_err_states() {
        b.add_state();
    }
    let to_builder = |s: u32, b: &mut LtsBuilder| if m.is_err(s) { b.err() } else { s - err_shift };
    let init = to_builder(m.initial(), &mut b);
    b.set_initial(init);
    for (s, l, t) in m.transitions() {
        let l = match l {
            Label::Tau => Label::Tau,
            Label::Act(i) => remap[i as usize],
        };
        let src = to_builder(s, &mut b);
        let dst = to_builder(t, &mut b);
        b.add_label(src, l, dst);
    }
    let out = b.build().expect("hiding preserves well-formedness");
    match m.names() {
        Some(n) => out.with_names(n.to_vec()),
        None => out,
    }
}
