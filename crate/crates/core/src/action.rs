//! Observable actions and transition labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An observable event label such as `turn` or `est[1][0]`.
///
/// Actions order lexicographically on `(base, indices)`, which is the
/// canonical alphabet order used everywhere in the crate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    base: String,
    indices: Vec<u32>,
}

impl Action {
    pub fn new(base: impl Into<String>) -> Self {
        Action {
            base: base.into(),
            indices: Vec::new(),
        }
    }

    pub fn indexed(base: impl Into<String>, indices: impl IntoIterator<Item = u32>) -> Self {
        Action {
            base: base.into(),
            indices: indices.into_iter().collect(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        for i in &self.indices {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed action label `{0}`")]
pub struct ParseActionError(pub String);

impl FromStr for Action {
    type Err = ParseActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ParseActionError(s.to_string());
        let base_end = s.find('[').unwrap_or(s.len());
        let base = &s[..base_end];
        let mut chars = base.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Err(bad()),
        }
        if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            return Err(bad());
        }
        let mut indices = Vec::new();
        let mut rest = &s[base_end..];
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            if !rest.starts_with('[') {
                return Err(bad());
            }
            indices.push(rest[1..close].trim().parse::<u32>().map_err(|_| bad())?);
            rest = &rest[close + 1..];
        }
        Ok(Action::indexed(base, indices))
    }
}

/// A transition label: the internal action τ or an index into an LTS alphabet.
///
/// τ sorts before every observable label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Tau,
    Act(u32),
}

impl Label {
    pub fn is_tau(self) -> bool {
        matches!(self, Label::Tau)
    }

    pub fn action_index(self) -> Option<u32> {
        match self {
            Label::Tau => None,
            Label::Act(i) => Some(i),
        }
    }
}

/// A finite sequence of observable actions.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Trace(pub Vec<Action>);

impl Trace {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }
}

impl From<Vec<Action>> for Trace {
    fn from(v: Vec<Action>) -> Self {
        Trace(v)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
