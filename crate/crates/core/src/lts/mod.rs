//! Finite labeled transition systems and the operations over them.
//!
//! States are dense `u32` ids. When an LTS has an error state it is always
//! id 0, so absorption checks are a single comparison. Transitions are kept
//! sorted by `(source, label, target)` and deduplicated; labels index into an
//! alphabet that is sorted lexicographically on `(base, indices)`.

mod accepts;
mod aut;
mod compose;
mod determinize;
mod dot;
mod hide;
mod iso;
mod json;
mod safety;

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::action::Action;
pub use crate::action::Label;

pub use accepts::{accepts, simulate, Acceptance};
pub use aut::{from_aut, to_aut, AutError};
pub use compose::{compose, compose_all, compose_with_origin};
pub use determinize::determinize;
pub use dot::to_dot;
pub use hide::hide;
pub use iso::is_isomorphic;
pub use json::{to_record, LtsRecord};
pub use safety::{check_property, check_safety, property_err, SafetyVerdict};

pub type StateId = u32;

/// Reserved id of the error state in every LTS that has one.
pub const ERR: StateId = 0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LtsError {
    #[error("initial state was never set")]
    NoInitial,
    #[error("state {0} is out of range ({1} states)")]
    StateOutOfRange(StateId, u32),
    #[error("the error state has an outgoing transition")]
    ErrHasSuccessor,
}

/// A finite labeled transition system `(Q, Σ, δ, q0)` with an optional
/// distinguished error state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    alphabet: Vec<Action>,
    num_states: u32,
    initial: StateId,
    has_err: bool,
    offsets: Vec<u32>,
    edges: Vec<(Label, StateId)>,
    names: Option<Vec<String>>,
}

impl Lts {
    /// One state, empty alphabet, no transitions: the neutral element of `∥`
    /// and the trivially satisfied property.
    pub fn universal() -> Lts {
        let mut b = LtsBuilder::new();
        let s = b.add_state();
        b.set_initial(s);
        b.build().expect("single-state LTS is well formed")
    }

    pub fn alphabet(&self) -> &[Action] {
        &self.alphabet
    }

    pub fn action(&self, idx: u32) -> &Action {
        &self.alphabet[idx as usize]
    }

    pub fn action_index(&self, a: &Action) -> Option<u32> {
        self.alphabet.binary_search(a).ok().map(|i| i as u32)
    }

    pub fn label_of(&self, a: &Action) -> Option<Label> {
        self.action_index(a).map(Label::Act)
    }

    pub fn label_name(&self, l: Label) -> String {
        match l {
            Label::Tau => "tau".to_string(),
            Label::Act(i) => self.action(i).to_string(),
        }
    }

    pub fn num_states(&self) -> u32 {
        self.num_states
    }

    /// Number of states other than the error state.
    pub fn num_non_err_states(&self) -> u32 {
        self.num_states - u32::from(self.has_err)
    }

    pub fn num_transitions(&self) -> usize {
        self.edges.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn has_err(&self) -> bool {
        self.has_err
    }

    pub fn err(&self) -> Option<StateId> {
        self.has_err.then_some(ERR)
    }

    pub fn is_err(&self, s: StateId) -> bool {
        self.has_err && s == ERR
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        0..self.num_states
    }

    /// Outgoing `(label, target)` pairs of `s`, sorted by label then target.
    pub fn successors(&self, s: StateId) -> &[(Label, StateId)] {
        let lo = self.offsets[s as usize] as usize;
        let hi = self.offsets[s as usize + 1] as usize;
        &self.edges[lo..hi]
    }

    /// Targets of `s` under exactly `label`.
    pub fn successors_on(&self, s: StateId, label: Label) -> impl Iterator<Item = StateId> + '_ {
        let succ = self.successors(s);
        let start = succ.partition_point(|&(l, _)| l < label);
        succ[start..]
            .iter()
            .take_while(move |&&(l, _)| l == label)
            .map(|&(_, t)| t)
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, Label, StateId)> + '_ {
        self.states()
            .flat_map(move |s| self.successors(s).iter().map(move |&(l, t)| (s, l, t)))
    }

    pub fn state_name(&self, s: StateId) -> String {
        match &self.names {
            Some(n) => n[s as usize].clone(),
            None if self.is_err(s) => "ERROR".to_string(),
            None => s.to_string(),
        }
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn with_names(mut self, names: Vec<String>) -> Lts {
        assert_eq!(names.len(), self.num_states as usize);
        self.names = Some(names);
        self
    }

    pub fn has_tau(&self) -> bool {
        self.edges.iter().any(|(l, _)| l.is_tau())
    }

    /// No τ and at most one successor per `(state, action)`.
    pub fn is_deterministic(&self) -> bool {
        self.states().all(|s| {
            let succ = self.successors(s);
            succ.iter().all(|(l, _)| !l.is_tau()) && succ.windows(2).all(|w| w[0].0 != w[1].0)
        })
    }

    /// States reachable from the initial state, as a membership vector.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states as usize];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial as usize] = true;
        while let Some(s) = queue.pop_front() {
            for &(_, t) in self.successors(s) {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Closure of `set` under τ transitions, returned sorted.
    pub fn tau_closure(&self, set: impl IntoIterator<Item = StateId>) -> Vec<StateId> {
        let mut seen: BTreeSet<StateId> = BTreeSet::new();
        let mut stack: Vec<StateId> = Vec::new();
        for s in set {
            if seen.insert(s) {
                stack.push(s);
            }
        }
        while let Some(s) = stack.pop() {
            for t in self.successors_on(s, Label::Tau) {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Copy restricted to reachable states, renumbered in BFS order with
    /// successors visited in `(label, target)` order. The error state is kept
    /// (at id 0) only if reachable.
    pub fn trim(&self) -> Lts {
        let mut b = LtsBuilder::with_alphabet(self.alphabet.clone());
        let mut map: HashMap<StateId, StateId> = HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        let mut intern = |s: StateId, b: &mut LtsBuilder, queue: &mut VecDeque<StateId>| {
            if self.is_err(s) {
                return b.err();
            }
            *map.entry(s).or_insert_with(|| {
                queue.push_back(s);
                order.push(s);
                b.add_state()
            })
        };
        let init = intern(self.initial, &mut b, &mut queue);
        b.set_initial(init);
        while let Some(s) = queue.pop_front() {
            let src = intern(s, &mut b, &mut queue);
            for &(l, t) in self.successors(s) {
                let dst = intern(t, &mut b, &mut queue);
                b.add_label(src, l, dst);
            }
        }
        let err_kept = b.has_err();
        let names = self.names.as_ref().map(|names| {
            let mut out = Vec::new();
            if err_kept {
                out.push(names[ERR as usize].clone());
            }
            out.extend(order.iter().map(|&s| names[s as usize].clone()));
            out
        });
        let lts = b.build().expect("trim preserves well-formedness");
        match names {
            Some(n) => lts.with_names(n),
            None => lts,
        }
    }

    /// Same LTS with extra actions added to the alphabet.
    pub fn extend_alphabet<'a>(&self, extra: impl IntoIterator<Item = &'a Action>) -> Lts {
        let mut alphabet: BTreeSet<Action> = self.alphabet.iter().cloned().collect();
        alphabet.extend(extra.into_iter().cloned());
        let alphabet: Vec<Action> = alphabet.into_iter().collect();
        let remap: Vec<u32> = self
            .alphabet
            .iter()
            .map(|a| alphabet.binary_search(a).expect("superset") as u32)
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|&(l, t)| match l {
                Label::Tau => (Label::Tau, t),
                Label::Act(i) => (Label::Act(remap[i as usize]), t),
            })
            .collect();
        Lts {
            alphabet,
            edges,
            ..self.clone()
        }
    }
}

/// Incremental constructor for [`Lts`].
///
/// Builder state ids are dense from 0 in creation order. The error state is a
/// separate sentinel returned by [`LtsBuilder::err`]; if it is used (or
/// required), [`LtsBuilder::build`] places it at id 0 and shifts every other
/// state up by one. Use [`LtsBuilder::final_id`] to translate.
#[derive(Debug, Default)]
pub struct LtsBuilder {
    actions: Vec<Action>,
    index: HashMap<Action, u32>,
    num_states: u32,
    initial: Option<StateId>,
    err_used: bool,
    edges: Vec<(StateId, RawLabel, StateId)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum RawLabel {
    Tau,
    Act(u32),
}

const ERR_SENTINEL: StateId = u32::MAX;

impl LtsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder whose raw label ids coincide with positions in `alphabet`.
    pub fn with_alphabet(alphabet: impl IntoIterator<Item = Action>) -> Self {
        let mut b = Self::new();
        for a in alphabet {
            b.declare(a);
        }
        b
    }

    pub fn declare(&mut self, a: Action) -> u32 {
        if let Some(&i) = self.index.get(&a) {
            return i;
        }
        let i = self.actions.len() as u32;
        self.index.insert(a.clone(), i);
        self.actions.push(a);
        i
    }

    pub fn add_state(&mut self) -> StateId {
        let s = self.num_states;
        self.num_states += 1;
        s
    }

    pub fn num_states(&self) -> u32 {
        self.num_states
    }

    pub fn err(&mut self) -> StateId {
        self.err_used = true;
        ERR_SENTINEL
    }

    pub fn require_err(&mut self) {
        self.err_used = true;
    }

    pub fn has_err(&self) -> bool {
        self.err_used
    }

    pub fn set_initial(&mut self, s: StateId) {
        self.initial = Some(s);
    }

    pub fn add(&mut self, src: StateId, a: &Action, dst: StateId) {
        let i = match self.index.get(a) {
            Some(&i) => i,
            None => self.declare(a.clone()),
        };
        self.edges.push((src, RawLabel::Act(i), dst));
    }

    pub fn add_tau(&mut self, src: StateId, dst: StateId) {
        self.edges.push((src, RawLabel::Tau, dst));
    }

    /// Adds a transition whose label is an index into the builder's declared
    /// actions (or τ).
    pub fn add_label(&mut self, src: StateId, label: Label, dst: StateId) {
        let raw = match label {
            Label::Tau => RawLabel::Tau,
            Label::Act(i) => RawLabel::Act(i),
        };
        self.edges.push((src, raw, dst));
    }

    /// Id that builder state `s` will have in the built LTS.
    pub fn final_id(&self, s: StateId) -> StateId {
        if s == ERR_SENTINEL {
            ERR
        } else if self.err_used {
            s + 1
        } else {
            s
        }
    }

    pub fn build(self) -> Result<Lts, LtsError> {
        let shift = u32::from(self.err_used);
        let num_states = self.num_states + shift;
        let map = |s: StateId| -> Result<StateId, LtsError> {
            if s == ERR_SENTINEL {
                Ok(ERR)
            } else if s < self.num_states {
                Ok(s + shift)
            } else {
                Err(LtsError::StateOutOfRange(s, self.num_states))
            }
        };
        let initial = map(self.initial.ok_or(LtsError::NoInitial)?)?;

        let mut order: Vec<u32> = (0..self.actions.len() as u32).collect();
        order.sort_by(|&a, &b| self.actions[a as usize].cmp(&self.actions[b as usize]));
        let mut remap = vec![0u32; self.actions.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let alphabet: Vec<Action> = order.iter().map(|&i| self.actions[i as usize].clone()).collect();

        let mut edges: Vec<(StateId, Label, StateId)> = Vec::with_capacity(self.edges.len());
        for &(s, l, t) in &self.edges {
            let s = map(s)?;
            let t = map(t)?;
            if shift == 1 && s == ERR {
                return Err(LtsError::ErrHasSuccessor);
            }
            let l = match l {
                RawLabel::Tau => Label::Tau,
                RawLabel::Act(i) => Label::Act(remap[i as usize]),
            };
            edges.push((s, l, t));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut offsets = vec![0u32; num_states as usize + 1];
        for &(s, _, _) in &edges {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..num_states as usize {
            offsets[i + 1] += offsets[i];
        }
        Ok(Lts {
            alphabet,
            num_states,
            initial,
            has_err: self.err_used,
            offsets,
            edges: edges.into_iter().map(|(_, l, t)| (l, t)).collect(),
            names: None,
        })
    }
}
