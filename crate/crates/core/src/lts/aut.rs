//! Aldebaran (`.aut`) text format.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Lts, LtsBuilder, StateId};
use crate::action::ParseActionError;

#[derive(Debug, Error)]
pub enum AutError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Label {
        line: usize,
        #[source]
        source: ParseActionError,
    },
    #[error("state {0} out of range")]
    StateOutOfRange(u64),
    #[error("header declares {declared} transitions, found {found}")]
    TransitionCount { declared: usize, found: usize },
}

/// Renders `m` as `.aut`; τ is written `tau`.
pub fn to_aut(m: &Lts) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "des ({}, {}, {})",
        m.initial(),
        m.num_transitions(),
        m.num_states()
    );
    for (s, l, t) in m.transitions() {
        let _ = writeln!(out, "({s}, \"{}\", {t})", m.label_name(l));
    }
    out
}

/// Parses `.aut` text. `err` names the file state to treat as the error state;
/// remaining states keep their relative order.
pub fn from_aut(text: &str, err: Option<StateId>) -> Result<Lts, AutError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(AutError::Syntax {
        line: 1,
        msg: "missing header".into(),
    })?;
    let syntax = |line: usize, msg: &str| AutError::Syntax {
        line,
        msg: msg.to_string(),
    };
    let inner = header
        .strip_prefix("des")
        .map(str::trim)
        .and_then(|h| h.strip_prefix('('))
        .and_then(|h| h.strip_suffix(')'))
        .ok_or_else(|| syntax(hline, "expected `des (init, transitions, states)`"))?;
    let nums: Vec<u64> = inner
        .split(',')
        .map(|x| x.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| syntax(hline, "non-numeric header field"))?;
    let [init, ntrans, nstates] = nums[..] else {
        return Err(syntax(hline, "header needs three fields"));
    };
    if nstates == 0 || init >= nstates {
        return Err(AutError::StateOutOfRange(init));
    }
    if let Some(e) = err {
        if u64::from(e) >= nstates {
            return Err(AutError::StateOutOfRange(e.into()));
        }
    }

    let mut b = LtsBuilder::new();
    let mut ids = Vec::with_capacity(nstates as usize);
    for s in 0..nstates as u32 {
        ids.push(if Some(s) == err { b.err() } else { b.add_state() });
    }
    if err.is_some() {
        b.require_err();
    }
    b.set_initial(ids[init as usize]);
    let state = |x: &str, line: usize| -> Result<StateId, AutError> {
        let v: u64 = x.trim().parse().map_err(|_| syntax(line, "bad state id"))?;
        ids.get(v as usize).copied().ok_or(AutError::StateOutOfRange(v))
    };

    let mut found = 0;
    for (line, l) in lines {
        let body = l
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(|| syntax(line, "expected `(src, label, dst)`"))?;
        let first = body.find(',').ok_or_else(|| syntax(line, "missing label"))?;
        let last = body
            .rfind(',')
            .filter(|&i| i > first)
            .ok_or_else(|| syntax(line, "missing target"))?;
        let src = state(&body[..first], line)?;
        let dst = state(&body[last + 1..], line)?;
        let label = body[first + 1..last].trim();
        let label = label
            .strip_prefix('"')
            .and_then(|x| x.strip_suffix('"'))
            .unwrap_or(label);
        if label == "tau" || label == "i" {
            b.add_tau(src, dst);
        } else {
            let a = label.parse().map_err(|source| AutError::Label { line, source })?;
            b.add(src, &a, dst);
        }
        found += 1;
    }
    if found != ntrans as usize {
        return Err(AutError::TransitionCount {
            declared: ntrans as usize,
            found,
        });
    }
    b.build().map_err(|e| syntax(0, &e.to_string()))
}
