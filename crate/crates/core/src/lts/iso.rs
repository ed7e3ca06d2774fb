use std::collections::HashMap;

use super::{Label, Lts, StateId};

/// Whether `a` and `b` are equal up to a renaming of states that maps initial
/// to initial and error to error. Alphabets must be identical.
pub fn is_isomorphic(a: &Lts, b: &Lts) -> bool {
    if a.alphabet() != b.alphabet()
        || a.num_states() != b.num_states()
        || a.num_transitions() != b.num_transitions()
        || a.has_err() != b.has_err()
    {
        return false;
    }
    let n = a.num_states() as usize;
    let ga = Graph::new(a);
    let gb = Graph::new(b);
    let (ca, cb) = refine(&ga, &gb);
    let mut hist: HashMap<u32, i64> = HashMap::new();
    for &c in &ca {
        *hist.entry(c).or_default() += 1;
    }
    for &c in &cb {
        *hist.entry(c).or_default() -= 1;
    }
    if hist.values().any(|&v| v != 0) {
        return false;
    }

    // assign states of `a` in ascending class size so forced choices come first
    let mut class_size: HashMap<u32, usize> = HashMap::new();
    for &c in &ca {
        *class_size.entry(c).or_default() += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| (class_size[&ca[s]], ca[s], s));
    let mut by_class: HashMap<u32, Vec<usize>> = HashMap::new();
    for (s, &c) in cb.iter().enumerate() {
        by_class.entry(c).or_default().push(s);
    }
    let mut fwd = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut ctx = Search {
        ga: &ga,
        gb: &gb,
        ca: &ca,
        by_class: &by_class,
        order: &order,
        fwd: &mut fwd,
        used: &mut used,
    };
    ctx.extend(0)
}

struct Graph {
    out: Vec<Vec<(Label, usize)>>,
    inc: Vec<Vec<(Label, usize)>>,
    init: usize,
    err: Option<usize>,
}

impl Graph {
    fn new(m: &Lts) -> Graph {
        let n = m.num_states() as usize;
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (s, l, t) in m.transitions() {
            out[s as usize].push((l, t as usize));
            inc[t as usize].push((l, s as usize));
        }
        Graph {
            out,
            inc,
            init: m.initial() as usize,
            err: m.err().map(|e: StateId| e as usize),
        }
    }
}

/// Joint colour refinement of both graphs so colours are comparable.
fn refine(ga: &Graph, gb: &Graph) -> (Vec<u32>, Vec<u32>) {
    let base = |g: &Graph, s: usize| u32::from(s == g.init) | (u32::from(Some(s) == g.err) << 1);
    let n = ga.out.len();
    let mut ca: Vec<u32> = (0..n).map(|s| base(ga, s)).collect();
    let mut cb: Vec<u32> = (0..n).map(|s| base(gb, s)).collect();
    let mut classes = 0;
    loop {
        type Sig = (u32, Vec<(Label, u32)>, Vec<(Label, u32)>);
        let sig = |g: &Graph, c: &[u32], s: usize| -> Sig {
            let mut o: Vec<_> = g.out[s].iter().map(|&(l, t)| (l, c[t])).collect();
            let mut i: Vec<_> = g.inc[s].iter().map(|&(l, t)| (l, c[t])).collect();
            o.sort_unstable();
            i.sort_unstable();
            (c[s], o, i)
        };
        let mut table: HashMap<Sig, u32> = HashMap::new();
        let mut next = |k: Sig| {
            let len = table.len() as u32;
            *table.entry(k).or_insert(len)
        };
        let na: Vec<u32> = (0..n).map(|s| next(sig(ga, &ca, s))).collect();
        let nb: Vec<u32> = (0..n).map(|s| next(sig(gb, &cb, s))).collect();
        let count = table.len();
        ca = na;
        cb = nb;
        if count == classes {
            return (ca, cb);
        }
        classes = count;
    }
}

struct Search<'a> {
    ga: &'a Graph,
    gb: &'a Graph,
    ca: &'a [u32],
    by_class: &'a HashMap<u32, Vec<usize>>,
    order: &'a [usize],
    fwd: &'a mut Vec<usize>,
    used: &'a mut Vec<bool>,
}

impl Search<'_> {
    fn extend(&mut self, depth: usize) -> bool {
        let Some(&u) = self.order.get(depth) else {
            return true;
        };
        let candidates = self.by_class[&self.ca[u]].clone();
        for v in candidates {
            if self.used[v] {
                continue;
            }
            self.fwd[u] = v;
            self.used[v] = true;
            if self.consistent(u, v) && self.extend(depth + 1) {
                return true;
            }
            self.fwd[u] = usize::MAX;
            self.used[v] = false;
        }
        false
    }

    /// Edges between `u` and already-mapped states agree with those of `v`.
    fn consistent(&self, u: usize, v: usize) -> bool {
        let mapped = |adj: &[(Label, usize)]| {
            let mut e: Vec<(Label, usize)> = adj
                .iter()
                .filter(|&&(_, x)| self.fwd[x] != usize::MAX)
                .map(|&(l, x)| (l, self.fwd[x]))
                .collect();
            e.sort_unstable();
            e
        };
        let image = |adj: &[(Label, usize)]| {
            let mut e: Vec<(Label, usize)> = adj.iter().filter(|&&(_, y)| self.used[y]).copied().collect();
            e.sort_unstable();
            e
        };
        mapped(&self.ga.out[u]) == image(&self.gb.out[v]) && mapped(&self.ga.inc[u]) == image(&self.gb.inc[v])
    }
}
