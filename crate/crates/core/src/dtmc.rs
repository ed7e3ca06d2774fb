//! Probabilistic analysis of a monitored closed loop: a confusion profile for
//! perception, the product DTMC of M1, perception and monitor, and bounded
//! reachability by backward value iteration.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{Action, Label};
use crate::assume::ErrAutomaton;
use crate::lts::{Lts, StateId};
use crate::taxinet::{DiscretizationConfig, SystemState};

const ROW_TOLERANCE: f64 = 1e-9;

/// One line of a profiling table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub actual_cte: u32,
    pub actual_he: u32,
    pub est_cte: u32,
    pub est_he: u32,
    pub count: u64,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("malformed profile: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: state {state} is outside the discretization")]
    OutOfRange { row: usize, state: SystemState },
    #[error("actuals with zero total count: {}", list(.0))]
    ZeroTotal(Vec<SystemState>),
    #[error("actuals absent from the data: {}", list(.0))]
    Missing(Vec<SystemState>),
    #[error("distribution for {0} does not sum to 1")]
    NotStochastic(SystemState),
}

fn list(xs: &[SystemState]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Distribution over estimated states for every actual state.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionProfile {
    dist: BTreeMap<SystemState, Vec<(SystemState, f64)>>,
    /// Total sample count per actual; empty for synthetic profiles.
    pub samples: BTreeMap<SystemState, u64>,
}

impl ConfusionProfile {
    /// Builds a profile from explicit distributions, dropping zero entries.
    pub fn from_distributions(
        cfg: &DiscretizationConfig,
        dist: BTreeMap<SystemState, Vec<(SystemState, f64)>>,
    ) -> Result<Self, ProfileError> {
        let mut clean = BTreeMap::new();
        for (a, row) in dist {
            let mut merged: BTreeMap<SystemState, f64> = BTreeMap::new();
            for (e, p) in row {
                if !in_range(cfg, e) || !in_range(cfg, a) {
                    return Err(ProfileError::OutOfRange {
                        row: 0,
                        state: if in_range(cfg, a) { e } else { a },
                    });
                }
                if p > 0.0 {
                    *merged.entry(e).or_default() += p;
                }
            }
            let total: f64 = merged.values().sum();
            if (total - 1.0).abs() > ROW_TOLERANCE {
                return Err(ProfileError::NotStochastic(a));
            }
            clean.insert(a, merged.into_iter().collect());
        }
        let missing: Vec<SystemState> = cfg.states().filter(|s| !clean.contains_key(s)).collect();
        if !missing.is_empty() {
            return Err(ProfileError::Missing(missing));
        }
        Ok(ConfusionProfile {
            dist: clean,
            samples: BTreeMap::new(),
        })
    }

    /// Every actual is estimated correctly.
    pub fn identity(cfg: &DiscretizationConfig) -> Self {
        Self::with_accuracy(cfg, 1.0)
    }

    /// Every actual is estimated as any state with equal probability.
    pub fn uniform(cfg: &DiscretizationConfig) -> Self {
        Self::with_accuracy(cfg, 1.0 / cfg.num_states() as f64)
    }

    /// Correct estimate with probability `accuracy`; the remaining mass is
    /// spread evenly over the other states.
    pub fn with_accuracy(cfg: &DiscretizationConfig, accuracy: f64) -> Self {
        assert!((0.0..=1.0).contains(&accuracy));
        let states: Vec<SystemState> = cfg.states().collect();
        let wrong = if states.len() > 1 {
            (1.0 - accuracy) / (states.len() - 1) as f64
        } else {
            0.0
        };
        let dist = states
            .iter()
            .map(|&a| {
                let row = states
                    .iter()
                    .map(|&e| (e, if e == a { accuracy } else { wrong }))
                    .filter(|&(_, p)| p > 0.0)
                    .collect();
                (a, row)
            })
            .collect();
        ConfusionProfile {
            dist,
            samples: BTreeMap::new(),
        }
    }

    pub fn distribution(&self, actual: SystemState) -> Option<&[(SystemState, f64)]> {
        self.dist.get(&actual).map(Vec::as_slice)
    }

    pub fn probability(&self, actual: SystemState, est: SystemState) -> f64 {
        self.distribution(actual)
            .and_then(|d| d.iter().find(|&&(e, _)| e == est))
            .map_or(0.0, |&(_, p)| p)
    }

    /// Probability of the correct estimate.
    pub fn accuracy(&self, actual: SystemState) -> f64 {
        self.probability(actual, actual)
    }

    pub fn actuals(&self) -> impl Iterator<Item = SystemState> + '_ {
        self.dist.keys().copied()
    }
}

fn in_range(cfg: &DiscretizationConfig, s: SystemState) -> bool {
    s.cte <= cfg.max_cte && s.he <= 2
}

/// Relative frequencies of the rows, per actual.
pub fn estimate_profile(
    rows: impl IntoIterator<Item = ProfileRow>,
    cfg: &DiscretizationConfig,
) -> Result<ConfusionProfile, ProfileError> {
    let mut counts: BTreeMap<SystemState, BTreeMap<SystemState, u64>> = BTreeMap::new();
    for (i, r) in rows.into_iter().enumerate() {
        let a = SystemState {
            cte: r.actual_cte,
            he: r.actual_he,
        };
        let e = SystemState {
            cte: r.est_cte,
            he: r.est_he,
        };
        for s in [a, e] {
            if !in_range(cfg, s) {
                return Err(ProfileError::OutOfRange { row: i + 1, state: s });
            }
        }
        *counts.entry(a).or_default().entry(e).or_default() += r.count;
    }
    let zero: Vec<SystemState> = counts
        .iter()
        .filter(|(_, row)| row.values().sum::<u64>() == 0)
        .map(|(&a, _)| a)
        .collect();
    if !zero.is_empty() {
        return Err(ProfileError::ZeroTotal(zero));
    }
    let missing: Vec<SystemState> = cfg.states().filter(|s| !counts.contains_key(s)).collect();
    if !missing.is_empty() {
        return Err(ProfileError::Missing(missing));
    }
    let mut dist = BTreeMap::new();
    let mut samples = BTreeMap::new();
    for (a, row) in counts {
        let total: u64 = row.values().sum();
        let d = row
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .map(|(e, c)| (e, c as f64 / total as f64))
            .collect();
        dist.insert(a, d);
        samples.insert(a, total);
    }
    Ok(ConfusionProfile { dist, samples })
}

/// Reads a profile table with header `actual_cte,actual_he,est_cte,est_he,count`.
pub fn read_profile_csv<R: io::Read>(reader: R, cfg: &DiscretizationConfig) -> Result<ConfusionProfile, ProfileError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let rows: Vec<ProfileRow> = rdr.deserialize().collect::<Result<_, _>>()?;
    estimate_profile(rows, cfg)
}

/// Writes `rows` in the profile table format.
pub fn write_profile_csv<W: io::Write>(writer: W, rows: &[ProfileRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Error, PartialEq)]
pub enum DtmcError {
    #[error("row {row} sums to {sum}")]
    NotStochastic { row: u32, sum: f64 },
    #[error("transition from {row} to unknown state {to}")]
    UnknownState { row: u32, to: u32 },
    #[error("monitor alphabet differs from the estimates of the model; missing {missing:?}, extra {extra:?}")]
    MonitorAlphabet { missing: Vec<String>, extra: Vec<String> },
    #[error("monitor has no move from state {state} on {action}")]
    MonitorIncomplete { state: StateId, action: String },
    #[error("model response is not deterministic at state {0}")]
    Nondeterministic(String),
    #[error("model deadlocks at state {0}")]
    Deadlock(String),
    #[error("model refuses estimate {est} at state {state}")]
    EstimateRefused { state: String, est: String },
    #[error("no actual state is known at {0}")]
    NoActual(String),
    #[error("profile has no distribution for actual {0}")]
    MissingActual(SystemState),
    #[error("waiting state of the model is not determined by the actual state {0}")]
    AmbiguousActual(SystemState),
}

/// Sparse row-stochastic matrix with an initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct Dtmc {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    probs: Vec<f64>,
    initial: u32,
}

impl Dtmc {
    /// Duplicate targets within a row are merged; rows must sum to 1.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>, initial: u32) -> Result<Self, DtmcError> {
        let n = rows.len() as u32;
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut probs = Vec::new();
        for (i, row) in rows.into_iter().enumerate() {
            let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
            for (t, p) in row {
                if t >= n {
                    return Err(DtmcError::UnknownState { row: i as u32, to: t });
                }
                *merged.entry(t).or_default() += p;
            }
            let sum: f64 = merged.values().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE || merged.values().any(|&p| p < 0.0) {
                return Err(DtmcError::NotStochastic { row: i as u32, sum });
            }
            for (t, p) in merged {
                cols.push(t);
                probs.push(p);
            }
            row_ptr.push(cols.len());
        }
        assert!(initial < n.max(1), "initial state out of range");
        Ok(Dtmc {
            row_ptr,
            cols,
            probs,
            initial,
        })
    }

    pub fn num_states(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn num_transitions(&self) -> usize {
        self.cols.len()
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    /// Successors of `s` in ascending order.
    pub fn row(&self, s: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let r = self.row_ptr[s as usize]..self.row_ptr[s as usize + 1];
        self.cols[r.clone()].iter().copied().zip(self.probs[r].iter().copied())
    }

    pub fn is_absorbing(&self, s: u32) -> bool {
        self.row(s).all(|(t, _)| t == s)
    }
}

/// Probability of reaching `target` from the initial state within `n` steps.
pub fn bounded_reachability(d: &Dtmc, target: &[bool], n: usize) -> f64 {
    *reachability_curve(d, target, n).last().unwrap()
}

/// Entry `k` is the probability of reaching `target` within `k` steps, for
/// `k` in `0..=n`.
pub fn reachability_curve(d: &Dtmc, target: &[bool], n: usize) -> Vec<f64> {
    assert_eq!(target.len(), d.num_states());
    let mut x: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    let mut next = vec![0.0; x.len()];
    let mut curve = Vec::with_capacity(n + 1);
    curve.push(x[d.initial as usize]);
    for _ in 0..n {
        for s in 0..d.num_states() {
            next[s] = if target[s] {
                1.0
            } else {
                let mut acc = 0.0;
                for (t, p) in d.row(s as u32) {
                    acc += p * x[t as usize];
                }
                acc
            };
        }
        std::mem::swap(&mut x, &mut next);
        curve.push(x[d.initial as usize]);
    }
    curve
}

/// State of the monitored loop. `m1` is the model state waiting for the next
/// estimate and `q` the monitor state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MonitoredState {
    Abort,
    SafetyErr,
    /// Perception is about to estimate `actual`.
    Perceive {
        m1: StateId,
        actual: SystemState,
        q: StateId,
    },
    /// Estimate `est` was accepted by the monitor; the plant responds next.
    Respond {
        m1: StateId,
        actual: SystemState,
        est: SystemState,
        q: StateId,
    },
}

/// Closed loop of M1, a confusion profile and a monitor over the estimates.
/// Each control cycle takes two steps: estimate, then respond.
#[derive(Clone, Debug)]
pub struct MonitoredDtmc {
    pub dtmc: Dtmc,
    pub states: Vec<MonitoredState>,
}

pub const ABORT: u32 = 0;
pub const SAFETY_ERR: u32 = 1;

impl MonitoredDtmc {
    pub fn abort_target(&self) -> Vec<bool> {
        (0..self.states.len()).map(|i| i as u32 == ABORT).collect()
    }

    pub fn safety_err_target(&self) -> Vec<bool> {
        (0..self.states.len()).map(|i| i as u32 == SAFETY_ERR).collect()
    }

    /// Probability of abort within `n` steps, for `n` in `0..=horizon`.
    pub fn abort_curve(&self, horizon: usize) -> Vec<f64> {
        reachability_curve(&self.dtmc, &self.abort_target(), horizon)
    }
}

enum Landing {
    Waiting(StateId, SystemState),
    Err,
}

struct Stepper<'a> {
    m1: &'a Lts,
    est: BTreeSet<u32>,
}

impl Stepper<'_> {
    fn is_est(&self, l: Label) -> bool {
        matches!(l, Label::Act(i) if self.est.contains(&i))
    }

    /// Follows the unique non-estimate moves from `s` to the next state that
    /// reads an estimate.
    fn advance(&self, mut s: StateId, mut actual: Option<SystemState>) -> Result<Landing, DtmcError> {
        for _ in 0..=self.m1.num_states() {
            if self.m1.is_err(s) {
                return Ok(Landing::Err);
            }
            let succ = self.m1.successors(s);
            if succ.iter().any(|&(l, _)| self.is_est(l)) {
                if succ.iter().any(|&(l, _)| !self.is_est(l)) {
                    return Err(DtmcError::Nondeterministic(self.m1.state_name(s)));
                }
                let a = actual.ok_or_else(|| DtmcError::NoActual(self.m1.state_name(s)))?;
                return Ok(Landing::Waiting(s, a));
            }
            match succ {
                [] => return Err(DtmcError::Deadlock(self.m1.state_name(s))),
                [(l, t)] => {
                    if let Label::Act(i) = l {
                        if let Some(a) = SystemState::of_action(self.m1.action(*i)) {
                            actual = Some(a);
                        }
                    }
                    s = *t;
                }
                _ => return Err(DtmcError::Nondeterministic(self.m1.state_name(s))),
            }
        }
        Err(DtmcError::Nondeterministic(self.m1.state_name(s)))
    }

    fn respond(&self, w: StateId, est: &Action, actual: SystemState) -> Result<Landing, DtmcError> {
        let l = self.m1.label_of(est);
        let targets: Vec<StateId> = l.map(|l| self.m1.successors_on(w, l).collect()).unwrap_or_default();
        match targets[..] {
            [t] => self.advance(t, Some(actual)),
            [] => Err(DtmcError::EstimateRefused {
                state: self.m1.state_name(w),
                est: est.to_string(),
            }),
            _ => Err(DtmcError::Nondeterministic(self.m1.state_name(w))),
        }
    }
}

fn monitor_step(monitor: &Lts, q: StateId, est: &Action) -> Result<StateId, DtmcError> {
    monitor
        .label_of(est)
        .and_then(|l| monitor.successors_on(q, l).next())
        .ok_or_else(|| DtmcError::MonitorIncomplete {
            state: q,
            action: est.to_string(),
        })
}

/// Reachable product of `m1`, `profile` and `monitor`. The monitor reads each
/// estimate before the plant responds, so an estimate it rejects leads to
/// `ABORT` and is never acted on.
pub fn build_monitored_dtmc(
    m1: &Lts,
    profile: &ConfusionProfile,
    monitor: &ErrAutomaton,
    cfg: &DiscretizationConfig,
) -> Result<MonitoredDtmc, DtmcError> {
    let mon = &monitor.lts;
    let est_actions: BTreeSet<Action> = cfg.states().map(SystemState::est).collect();
    let mon_alpha: BTreeSet<Action> = mon.alphabet().iter().cloned().collect();
    if mon_alpha != est_actions {
        return Err(DtmcError::MonitorAlphabet {
            missing: est_actions.difference(&mon_alpha).map(ToString::to_string).collect(),
            extra: mon_alpha.difference(&est_actions).map(ToString::to_string).collect(),
        });
    }
    let stepper = Stepper {
        m1,
        est: est_actions.iter().filter_map(|a| m1.action_index(a)).collect(),
    };

    let mut states = vec![MonitoredState::Abort, MonitoredState::SafetyErr];
    let mut index: HashMap<MonitoredState, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |s: MonitoredState, states: &mut Vec<MonitoredState>, queue: &mut VecDeque<u32>| -> u32 {
        match s {
            MonitoredState::Abort => ABORT,
            MonitoredState::SafetyErr => SAFETY_ERR,
            _ => *index.entry(s).or_insert_with(|| {
                states.push(s);
                let id = states.len() as u32 - 1;
                queue.push_back(id);
                id
            }),
        }
    };

    let init = match stepper.advance(m1.initial(), None)? {
        Landing::Waiting(w, a) => MonitoredState::Perceive {
            m1: w,
            actual: a,
            q: mon.initial(),
        },
        Landing::Err => MonitoredState::SafetyErr,
    };
    let initial = intern(init, &mut states, &mut queue);

    let mut rows: Vec<Vec<(u32, f64)>> = vec![vec![(ABORT, 1.0)], vec![(SAFETY_ERR, 1.0)]];
    while let Some(id) = queue.pop_front() {
        let row = match states[id as usize] {
            MonitoredState::Perceive { m1: w, actual, q } => {
                let dist = profile.distribution(actual).ok_or(DtmcError::MissingActual(actual))?;
                let mut row = Vec::with_capacity(dist.len());
                for &(e, p) in dist {
                    let q2 = monitor_step(mon, q, &e.est())?;
                    let next = if mon.is_err(q2) {
                        MonitoredState::Abort
                    } else {
                        MonitoredState::Respond {
                            m1: w,
                            actual,
                            est: e,
                            q: q2,
                        }
                    };
                    row.push((intern(next, &mut states, &mut queue), p));
                }
                row
            }
            MonitoredState::Respond { m1: w, actual, est, q } => {
                let next = match stepper.respond(w, &est.est(), actual)? {
                    Landing::Waiting(w2, a2) => MonitoredState::Perceive { m1: w2, actual: a2, q },
                    Landing::Err => MonitoredState::SafetyErr,
                };
                vec![(intern(next, &mut states, &mut queue), 1.0)]
            }
            MonitoredState::Abort | MonitoredState::SafetyErr => unreachable!(),
        };
        debug_assert_eq!(rows.len(), id as usize);
        rows.push(row);
    }
    Ok(MonitoredDtmc {
        dtmc: Dtmc::from_rows(rows, initial)?,
        states,
    })
}

/// PRISM module over `pc`, `cte`, `he`, `cte_est`, `he_est` and `Q`, with
/// `Q = -1` the abort state. `pc` cycles through perceive (0), monitor (1)
/// and respond (2); `pc = 3` marks a safety error.
pub fn to_prism(
    d: &MonitoredDtmc,
    profile: &ConfusionProfile,
    monitor: &ErrAutomaton,
    cfg: &DiscretizationConfig,
) -> Result<String, DtmcError> {
    let mon = &monitor.lts;
    let offset = u32::from(mon.has_err());
    let qv = |q: StateId| -> i64 {
        if mon.is_err(q) {
            -1
        } else {
            i64::from(q - offset)
        }
    };
    let qmax = mon.num_states() as i64 - 1 - i64::from(offset);

    let mut waiting: BTreeMap<SystemState, StateId> = BTreeMap::new();
    let mut responses: BTreeMap<(SystemState, SystemState), Option<SystemState>> = BTreeMap::new();
    for (i, s) in d.states.iter().enumerate() {
        match *s {
            MonitoredState::Perceive { m1, actual, .. } => {
                if *waiting.entry(actual).or_insert(m1) != m1 {
                    return Err(DtmcError::AmbiguousActual(actual));
                }
            }
            MonitoredState::Respond { actual, est, .. } => {
                let (t, _) = d.dtmc.row(i as u32).next().unwrap();
                let next = match d.states[t as usize] {
                    MonitoredState::Perceive { actual, .. } => Some(actual),
                    _ => None,
                };
                responses.insert((actual, est), next);
            }
            _ => {}
        }
    }
    let start = d.states[d.dtmc.initial() as usize];
    let (c0, h0, q0) = match start {
        MonitoredState::Perceive { actual, q, .. } => (actual.cte, actual.he, qv(q)),
        _ => (cfg.center(), 0, 0),
    };

    let m = cfg.max_cte;
    let mut out = String::new();
    let _ = writeln!(out, "dtmc\n\nmodule TaxiNet");
    let _ = writeln!(out, "  pc : [0..3] init 0;");
    let _ = writeln!(out, "  cte : [0..{m}] init {c0};");
    let _ = writeln!(out, "  he : [0..2] init {h0};");
    let _ = writeln!(out, "  cte_est : [0..{m}] init 0;");
    let _ = writeln!(out, "  he_est : [0..2] init 0;");
    let _ = writeln!(out, "  Q : [-1..{qmax}] init {q0};\n");
    for a in waiting.keys() {
        let dist = profile.distribution(*a).ok_or(DtmcError::MissingActual(*a))?;
        let branches: Vec<String> = dist
            .iter()
            .map(|(e, p)| format!("{p}:(cte_est'={})&(he_est'={})&(pc'=1)", e.cte, e.he))
            .collect();
        let _ = writeln!(
            out,
            "  [] pc=0 & Q>=0 & cte={} & he={} -> {};",
            a.cte,
            a.he,
            branches.join(" + ")
        );
    }
    for q in mon.states().filter(|&q| !mon.is_err(q)) {
        for e in cfg.states() {
            let q2 = monitor_step(mon, q, &e.est())?;
            let _ = writeln!(
                out,
                "  [] pc=1 & Q={} & cte_est={} & he_est={} -> (Q'={})&(pc'=2);",
                qv(q),
                e.cte,
                e.he,
                qv(q2)
            );
        }
    }
    for ((a, e), next) in &responses {
        let update = match next {
            Some(n) => format!("(cte'={})&(he'={})&(pc'=0)", n.cte, n.he),
            None => "(pc'=3)".to_string(),
        };
        let _ = writeln!(
            out,
            "  [] pc=2 & Q>=0 & cte={} & he={} & cte_est={} & he_est={} -> {update};",
            a.cte, a.he, e.cte, e.he
        );
    }
    let _ = writeln!(
        out,
        "endmodule\n\nlabel \"abort\" = Q=-1;\nlabel \"safety_err\" = pc=3;"
    );
    Ok(out)
}
