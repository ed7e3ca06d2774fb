//! Weakest-assumption construction over an interface alphabet whose actions
//! are tagged as actuals or estimates.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{Action, Label};
use crate::lts::{check_safety, compose, determinize, hide, property_err, to_aut, Lts, LtsBuilder, StateId, ERR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Actual,
    Estimate,
}

/// The interface alphabet Σ with every action tagged.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceAlphabet {
    tags: BTreeMap<Action, Tag>,
}

impl InterfaceAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: Action, tag: Tag) {
        self.tags.insert(a, tag);
    }

    pub fn with(mut self, actions: impl IntoIterator<Item = Action>, tag: Tag) -> Self {
        for a in actions {
            self.insert(a, tag);
        }
        self
    }

    pub fn tag(&self, a: &Action) -> Option<Tag> {
        self.tags.get(a).copied()
    }

    pub fn contains(&self, a: &Action) -> bool {
        self.tags.contains_key(a)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// All actions, sorted.
    pub fn actions(&self) -> Vec<Action> {
        self.tags.keys().cloned().collect()
    }

    pub fn tagged(&self, tag: Tag) -> Vec<Action> {
        self.tags
            .iter()
            .filter(|(_, &t)| t == tag)
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub fn estimates(&self) -> Vec<Action> {
        self.tagged(Tag::Estimate)
    }

    pub fn actuals(&self) -> Vec<Action> {
        self.tagged(Tag::Actual)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Action, Tag)> {
        self.tags.iter().map(|(a, &t)| (a, t))
    }

    /// The sub-alphabet made of the actions satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(&Action, Tag) -> bool) -> Self {
        InterfaceAlphabet {
            tags: self
                .tags
                .iter()
                .filter(|(a, &t)| keep(a, t))
                .map(|(a, &t)| (a.clone(), t))
                .collect(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssumeError {
    #[error("interface action `{0}` is not in the component's alphabet")]
    InterfaceNotInComponent(Action),
    #[error("property action `{0}` is not in the component's alphabet")]
    PropertyNotInComponent(Action),
}

/// Least fixpoint that merges into the error state every state with a τ or
/// actual-tagged transition into the error set. Other transitions are kept;
/// surviving states keep their relative order.
pub fn backward_error_propagation(m: &Lts, iface: &InterfaceAlphabet) -> Lts {
    if !m.has_err() {
        return m.clone();
    }
    let n = m.num_states() as usize;
    let propagates: Vec<bool> = m.alphabet().iter().map(|a| iface.tag(a) == Some(Tag::Actual)).collect();
    let through = |l: Label| match l {
        Label::Tau => true,
        Label::Act(i) => propagates[i as usize],
    };
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for (s, l, t) in m.transitions() {
        if through(l) {
            preds[t as usize].push(s);
        }
    }
    let mut bad = vec![false; n];
    bad[ERR as usize] = true;
    let mut stack = vec![ERR];
    while let Some(t) = stack.pop() {
        for &s in &preds[t as usize] {
            if !bad[s as usize] {
                bad[s as usize] = true;
                stack.push(s);
            }
        }
    }

    let mut b = LtsBuilder::with_alphabet(m.alphabet().iter().cloned());
    b.require_err();
    let mut ids = vec![0; n];
    for s in m.states() {
        ids[s as usize] = if bad[s as usize] { b.err() } else { b.add_state() };
    }
    b.set_initial(ids[m.initial() as usize]);
    for (s, l, t) in m.transitions() {
        if !bad[s as usize] {
            b.add_label(ids[s as usize], l, ids[t as usize]);
        }
    }
    let out = b.build().expect("propagation preserves well-formedness");
    match m.names() {
        Some(names) => {
            let mut kept = vec![names[ERR as usize].clone()];
            kept.extend(
                m.states()
                    .filter(|&s| !bad[s as usize])
                    .map(|s| names[s as usize].clone()),
            );
            out.with_names(kept)
        }
        None => out,
    }
}

/// Deterministic automaton over Σ with an error state at id 0 and, if some
/// action was missing somewhere, a sink that accepts everything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrAutomaton {
    pub lts: Lts,
    pub sink: Option<StateId>,
}

/// The weakest assumption: the error automaton with its error state removed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assumption {
    pub lts: Lts,
    pub sink: Option<StateId>,
    /// Set when even the empty interaction leads to a violation; the
    /// assumption is then a single state with no transitions.
    pub no_safe_context: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssumeStats {
    pub states: u32,
    pub transitions: usize,
    pub wall_time_ms: u128,
    pub peak_mem_kb: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct AssumeResult {
    pub assumption: Assumption,
    pub err_automaton: ErrAutomaton,
    pub iface: InterfaceAlphabet,
    pub stats: AssumeStats,
}

/// `M' = (M ∥ P_err)↾Σ`, backward error propagation, determinization,
/// completion with a sink, then error removal.
pub fn build_assume(m: &Lts, p_err: &Lts, iface: &InterfaceAlphabet) -> Result<AssumeResult, AssumeError> {
    let start = Instant::now();
    for a in iface.actions() {
        if m.action_index(&a).is_none() {
            return Err(AssumeError::InterfaceNotInComponent(a));
        }
    }
    for a in p_err.alphabet() {
        if m.action_index(a).is_none() {
            return Err(AssumeError::PropertyNotInComponent(a.clone()));
        }
    }
    let sigma = iface.actions();
    let projected = hide(&compose(m, p_err), &sigma);
    let propagated = backward_error_propagation(&projected, iface);
    let det = determinize(&propagated);
    let err_automaton = complete_with_sink(&det);
    let assumption = remove_err(&err_automaton);
    let stats = AssumeStats {
        states: assumption.lts.num_states(),
        transitions: assumption.lts.num_transitions(),
        wall_time_ms: start.elapsed().as_millis(),
        peak_mem_kb: peak_rss_kb(),
    };
    Ok(AssumeResult {
        assumption,
        err_automaton,
        iface: iface.clone(),
        stats,
    })
}

/// Renumbers `d` in breadth-first order (error state first at id 0) and
/// sends every missing action of every non-error state to a sink.
fn complete_with_sink(d: &Lts) -> ErrAutomaton {
    let k = d.alphabet().len() as u32;
    let mut b = LtsBuilder::with_alphabet(d.alphabet().iter().cloned());
    b.require_err();
    let mut ids: HashMap<StateId, StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut sink: Option<StateId> = None;
    let mut sink_queued = false;
    let init = if d.is_err(d.initial()) {
        b.err()
    } else {
        let id = b.add_state();
        ids.insert(d.initial(), id);
        queue.push_back(Some(d.initial()));
        id
    };
    b.set_initial(init);
    let mut src: StateId = 0;
    while let Some(item) = queue.pop_front() {
        match item {
            None => {
                for i in 0..k {
                    b.add_label(src, Label::Act(i), src);
                }
            }
            Some(s) => {
                let mut present = vec![false; k as usize];
                for &(l, t) in d.successors(s) {
                    let Label::Act(i) = l else { unreachable!("determinized") };
                    present[i as usize] = true;
                    let dst = if d.is_err(t) {
                        b.err()
                    } else {
                        *ids.entry(t).or_insert_with(|| {
                            queue.push_back(Some(t));
                            b.add_state()
                        })
                    };
                    b.add_label(src, l, dst);
                }
                for i in (0..k).filter(|&i| !present[i as usize]) {
                    let dst = *sink.get_or_insert_with(|| b.add_state());
                    if !sink_queued {
                        sink_queued = true;
                        queue.push_back(None);
                    }
                    b.add_label(src, Label::Act(i), dst);
                }
            }
        }
        src += 1;
    }
    let n = b.num_states();
    let lts = b.build().expect("completion is well formed");
    let mut names = vec!["ERROR".to_string()];
    names.extend((0..n).map(|i| format!("Q{i}")));
    ErrAutomaton {
        lts: lts.with_names(names),
        sink: sink.map(|s| s + 1),
    }
}

fn remove_err(a: &ErrAutomaton) -> Assumption {
    let e = &a.lts;
    let mut b = LtsBuilder::with_alphabet(e.alphabet().iter().cloned());
    if e.is_err(e.initial()) {
        let s = b.add_state();
        b.set_initial(s);
        let lts = b.build().expect("single state").with_names(vec!["Q0".to_string()]);
        return Assumption {
            lts,
            sink: None,
            no_safe_context: true,
        };
    }
    for _ in 1..e.num_states() {
        b.add_state();
    }
    b.set_initial(e.initial() - 1);
    for (s, l, t) in e.transitions() {
        if !e.is_err(t) {
            b.add_label(s - 1, l, t - 1);
        }
    }
    let names = e.names().map(|n| n[1..].to_vec());
    let lts = b.build().expect("error removal is well formed");
    Assumption {
        lts: match names {
            Some(n) => lts.with_names(n),
            None => lts,
        },
        sink: a.sink.map(|s| s - 1),
        no_safe_context: false,
    }
}

/// `n ⊨ a`: `L(n↾α(a)) ⊆ L(a)`, decided by error reachability against the
/// complement of `a`. Actions of `a` that `n` lacks are blocked. No context
/// satisfies an assumption flagged `no_safe_context`.
pub fn check_context(n: &Lts, a: &Assumption) -> bool {
    !a.no_safe_context && trace_included(n, &a.lts)
}

/// `L(n↾α(a)) ⊆ L(a)` for a deterministic `a`.
pub fn trace_included(n: &Lts, a: &Lts) -> bool {
    let projected = hide(n, a.alphabet()).extend_alphabet(a.alphabet());
    check_safety(&compose(&projected, &property_err(a))).safe
}

/// Peak resident set size of this process, where the platform reports it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

/// Machine-readable record of one assumption run.
#[derive(Clone, Debug, Serialize)]
pub struct AssumeArtifact {
    pub alphabet: Vec<String>,
    pub tags: BTreeMap<String, Tag>,
    pub assumption: String,
    pub err_automaton: String,
    pub err_state: StateId,
    pub sink_state: Option<StateId>,
    pub no_safe_context: bool,
    pub stats: AssumeStats,
}

impl AssumeResult {
    pub fn artifact(&self) -> AssumeArtifact {
        AssumeArtifact {
            alphabet: self.iface.actions().iter().map(|a| a.to_string()).collect(),
            tags: self.iface.iter().map(|(a, t)| (a.to_string(), t)).collect(),
            assumption: to_aut(&self.assumption.lts),
            err_automaton: to_aut(&self.err_automaton.lts),
            err_state: ERR,
            sink_state: self.err_automaton.sink,
            no_safe_context: self.assumption.no_safe_context,
            stats: self.stats.clone(),
        }
    }
}
