//! Local, non-temporal perception specifications mined from an error
//! automaton over actuals and estimates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::action::{Action, Label};
use crate::assume::{ErrAutomaton, InterfaceAlphabet, Tag};
use crate::lts::{Lts, StateId};
use crate::taxinet::{DiscretizationConfig, Interval, SystemState};

/// `(s = actual) ⇒ ⋁_{e ∈ allowed} (s_est = e)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalSpec {
    pub actual: Action,
    pub allowed: BTreeSet<Action>,
    /// Names of the error-automaton states the spec was mined from.
    pub provenance: Vec<String>,
    /// Every estimate leads to the error state.
    pub fully_blocked: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecMode {
    /// One spec per actual; allowed sets from different states intersect.
    Merged,
    /// One spec per distinct `(actual, allowed)` pair.
    PerState,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LocalSpecError {
    #[error("state {state} has error transitions but is entered by non-actual `{label}`")]
    NotAlternating { state: String, label: String },
}

/// For each state `q` with error transitions on `E`, emits `Est − E` for every
/// actual leading into `q`.
pub fn synthesize_local_specs(
    a_err: &ErrAutomaton,
    iface: &InterfaceAlphabet,
    mode: SpecMode,
) -> Result<Vec<LocalSpec>, LocalSpecError> {
    let lts = &a_err.lts;
    let est: BTreeSet<Action> = iface.estimates().into_iter().collect();
    let mut blocked: BTreeMap<StateId, BTreeSet<Action>> = BTreeMap::new();
    for (s, l, t) in lts.transitions() {
        if lts.is_err(t) {
            if let Label::Act(i) = l {
                blocked.entry(s).or_default().insert(lts.action(i).clone());
            }
        }
    }
    let mut per_state: Vec<(Action, BTreeSet<Action>, StateId)> = Vec::new();
    for (_, l, t) in lts.transitions() {
        let Some(errs) = blocked.get(&t) else { continue };
        let label = lts.label_name(l);
        let actual = match l {
            Label::Act(i) if iface.tag(lts.action(i)) == Some(Tag::Actual) => lts.action(i).clone(),
            _ => {
                return Err(LocalSpecError::NotAlternating {
                    state: lts.state_name(t),
                    label,
                })
            }
        };
        let allowed: BTreeSet<Action> = est.difference(errs).cloned().collect();
        per_state.push((actual, allowed, t));
    }

    type Key = (Action, Option<BTreeSet<Action>>);
    let mut grouped: BTreeMap<Key, (BTreeSet<Action>, BTreeSet<StateId>)> = BTreeMap::new();
    for (actual, allowed, q) in per_state {
        let key = match mode {
            SpecMode::Merged => (actual, None),
            SpecMode::PerState => (actual, Some(allowed.clone())),
        };
        match grouped.get_mut(&key) {
            Some((acc, qs)) => {
                if mode == SpecMode::Merged {
                    *acc = acc.intersection(&allowed).cloned().collect();
                }
                qs.insert(q);
            }
            None => {
                grouped.insert(key, (allowed, BTreeSet::from([q])));
            }
        }
    }
    let mut specs: Vec<(Vec<u32>, Vec<StateId>, LocalSpec)> = grouped
        .into_iter()
        .map(|((actual, _), (allowed, qs))| {
            let qs: Vec<StateId> = qs.into_iter().collect();
            let spec = LocalSpec {
                fully_blocked: allowed.is_empty(),
                provenance: qs.iter().map(|&q| lts.state_name(q)).collect(),
                actual: actual.clone(),
                allowed,
            };
            (actual.indices().to_vec(), qs, spec)
        })
        .collect();
    specs.sort_by(|a, b| (&a.0, &a.1, &a.2.actual).cmp(&(&b.0, &b.1, &b.2.actual)));
    Ok(specs.into_iter().map(|(_, _, s)| s).collect())
}

/// Whether every actual of `m2` is only ever followed by estimates that all
/// specs for that actual allow.
pub fn satisfies_specs(m2: &Lts, iface: &InterfaceAlphabet, specs: &[LocalSpec]) -> bool {
    let mut allowed: BTreeMap<&Action, Vec<&BTreeSet<Action>>> = BTreeMap::new();
    for s in specs {
        allowed.entry(&s.actual).or_default().push(&s.allowed);
    }
    let reachable = m2.reachable();
    for (s, l, t) in m2.transitions() {
        if !reachable[s as usize] {
            continue;
        }
        let Label::Act(i) = l else { continue };
        let Some(sets) = allowed.get(m2.action(i)) else {
            continue;
        };
        for u in m2.tau_closure([t]) {
            for &(l2, _) in m2.successors(u) {
                let Label::Act(j) = l2 else { continue };
                let e = m2.action(j);
                if iface.tag(e) == Some(Tag::Estimate) && !sets.iter().all(|set| set.contains(e)) {
                    return false;
                }
            }
        }
    }
    true
}

/// A local spec with every discrete value replaced by its bin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalSpec {
    pub cte_est: Interval,
    pub he_est: Interval,
    pub allowed: Vec<(Interval, Interval)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConcretizeError {
    #[error("`{0}` does not name a system state of the configuration")]
    OutOfRange(Action),
}

fn bins(cfg: &DiscretizationConfig, a: &Action) -> Result<(Interval, Interval), ConcretizeError> {
    let s = SystemState::of_action(a)
        .filter(|s| (s.cte as usize) < cfg.cte_bins.len())
        .ok_or_else(|| ConcretizeError::OutOfRange(a.clone()))?;
    Ok((cfg.cte_bins[s.cte as usize].clone(), cfg.he_bins[s.he as usize].clone()))
}

pub fn concretize(spec: &LocalSpec, cfg: &DiscretizationConfig) -> Result<IntervalSpec, ConcretizeError> {
    let (cte_est, he_est) = bins(cfg, &spec.actual)?;
    let allowed = spec.allowed.iter().map(|e| bins(cfg, e)).collect::<Result<_, _>>()?;
    Ok(IntervalSpec {
        cte_est,
        he_est,
        allowed,
    })
}

impl fmt::Display for IntervalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(cte* ∈ {} ∧ he* ∈ {}) ⇒ (", self.cte_est, self.he_est)?;
        if self.allowed.is_empty() {
            f.write_str("false")?;
        }
        for (i, (c, h)) in self.allowed.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∨ ")?;
            }
            write!(f, "(cte∈{c} ∧ he∈{h})")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for LocalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |a: &Action| match SystemState::of_action(a) {
            Some(s) => s.to_string(),
            None => a.to_string(),
        };
        write!(f, "(s = {}) ⇒ (", show(&self.actual))?;
        if self.allowed.is_empty() {
            f.write_str("false")?;
        }
        for (i, e) in self.allowed.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∨ ")?;
            }
            write!(f, "s_est = {}", show(e))?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecRecord {
    pub actual: SystemState,
    pub allowed: Vec<SystemState>,
    pub provenance: Vec<String>,
    pub fully_blocked: bool,
    pub text: String,
    pub intervals: IntervalSpec,
    pub interval_text: String,
}

/// JSON-ready view of TaxiNet specs.
pub fn records(specs: &[LocalSpec], cfg: &DiscretizationConfig) -> Result<Vec<SpecRecord>, ConcretizeError> {
    specs
        .iter()
        .map(|s| {
            let intervals = concretize(s, cfg)?;
            let state = |a: &Action| SystemState::of_action(a).ok_or_else(|| ConcretizeError::OutOfRange(a.clone()));
            Ok(SpecRecord {
                actual: state(&s.actual)?,
                allowed: s.allowed.iter().map(state).collect::<Result<_, _>>()?,
                provenance: s.provenance.clone(),
                fully_blocked: s.fully_blocked,
                text: s.to_string(),
                interval_text: intervals.to_string(),
                intervals,
            })
        })
        .collect()
}
