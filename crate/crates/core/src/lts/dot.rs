use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Lts, StateId};

/// Graphviz rendering. Parallel edges are merged into one comma-separated
/// label and the error state is drawn as a red box.
pub fn to_dot(m: &Lts, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{name}\" {{");
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  __start [shape=point];");
    for s in m.states() {
        let label = m.state_name(s).replace('"', "\\\"");
        if m.is_err(s) {
            let _ = writeln!(out, "  s{s} [label=\"{label}\", shape=box, color=red];");
        } else {
            let _ = writeln!(out, "  s{s} [label=\"{label}\", shape=circle];");
        }
    }
    let _ = writeln!(out, "  __start -> s{};", m.initial());
    let mut grouped: BTreeMap<(StateId, StateId), Vec<String>> = BTreeMap::new();
    for (s, l, t) in m.transitions() {
        grouped.entry((s, t)).or_default().push(m.label_name(l));
    }
    for ((s, t), labels) in grouped {
        let _ = writeln!(out, "  s{s} -> s{t} [label=\"{}\"];", labels.join(", "));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::from_aut;

    #[test]
    fn merges_parallel_edges() {
        let m = from_aut("des (1, 2, 2)\n(1, \"a\", 0)\n(1, \"b\", 0)\n", Some(0)).unwrap();
        let d = to_dot(&m, "M");
        assert!(d.contains("s1 -> s0 [label=\"a, b\"];"));
        assert!(d.contains("s0 [label=\"ERROR\", shape=box, color=red];"));
    }
}
