use std::fmt::Write as _;

use crate::lts::{Label, Lts, StateId};

/// Canonical FSP text for `m` as a process called `name`.
///
/// The initial state is the main body, the error state prints as `ERROR`, and
/// deadlocks as `STOP`. Alphabet actions that label no transition are listed in
/// a `+{...}` extension. Only reachable states are printed.
pub fn print(m: &Lts, name: &str) -> String {
    let m = m.trim();
    if m.is_err(m.initial()) {
        return format!("{name} = ERROR.\n");
    }
    let mut order: Vec<StateId> = vec![m.initial()];
    order.extend(m.states().filter(|&s| s != m.initial() && !m.is_err(s)));
    let mut local = vec![String::new(); m.num_states() as usize];
    for (k, &s) in order.iter().enumerate() {
        local[s as usize] = if k == 0 {
            name.to_string()
        } else {
            format!("{name}_{k}")
        };
    }
    let target = |t: StateId| {
        if m.is_err(t) {
            "ERROR".to_string()
        } else {
            local[t as usize].clone()
        }
    };
    let mut out = String::new();
    for (k, &s) in order.iter().enumerate() {
        if k > 0 {
            out.push_str(",\n");
        }
        let _ = write!(out, "{} = ", local[s as usize]);
        let succ = m.successors(s);
        if succ.is_empty() {
            out.push_str("STOP");
            continue;
        }
        out.push('(');
        for (i, &(l, t)) in succ.iter().enumerate() {
            if i > 0 {
                out.push_str("\n  | ");
            }
            let _ = write!(out, "{} -> {}", m.label_name(l), target(t));
        }
        out.push(')');
    }
    let mut used = vec![false; m.alphabet().len()];
    for (_, l, _) in m.transitions() {
        if let Label::Act(i) = l {
            used[i as usize] = true;
        }
    }
    let unused: Vec<String> = m
        .alphabet()
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(a, _)| a.to_string())
        .collect();
    if !unused.is_empty() {
        let _ = write!(out, "\n+{{{}}}", unused.join(", "));
    }
    out.push_str(".\n");
    out
}
