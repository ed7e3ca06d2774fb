use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::ast::*;
use super::{FspError, Pos};
use crate::action::Action;
use crate::lts::{compose_all, Lts, LtsBuilder, StateId};

type Env = BTreeMap<String, i64>;

/// Global declarations visible to every process.
#[derive(Default)]
struct Scope {
    consts: HashMap<String, i64>,
    ranges: HashMap<String, (i64, i64)>,
}

impl Scope {
    fn lookup(&self, env: &Env, name: &str, pos: Pos) -> Result<i64, FspError> {
        env.get(name)
            .or_else(|| self.consts.get(name))
            .copied()
            .ok_or_else(|| FspError::unbound(name, pos))
    }

    fn eval(&self, env: &Env, e: &Expr) -> Result<i64, FspError> {
        Ok(match e {
            Expr::Int(v) => *v,
            Expr::Var(name, pos) => self.lookup(env, name, *pos)?,
            Expr::Unary(UnOp::Neg, a) => -self.eval(env, a)?,
            Expr::Unary(UnOp::Not, a) => i64::from(self.eval(env, a)? == 0),
            Expr::Cond(c, a, b) => {
                if self.eval(env, c)? != 0 {
                    self.eval(env, a)?
                } else {
                    self.eval(env, b)?
                }
            }
            Expr::Binary(op, a, b, pos) => {
                let x = self.eval(env, a)?;
                // short-circuit so guards can protect partial expressions
                match op {
                    BinOp::And if x == 0 => return Ok(0),
                    BinOp::Or if x != 0 => return Ok(1),
                    _ => {}
                }
                let y = self.eval(env, b)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div | BinOp::Rem if y == 0 => {
                        return Err(FspError::DivisionByZero {
                            line: pos.line,
                            col: pos.col,
                        })
                    }
                    BinOp::Div => x / y,
                    BinOp::Rem => x % y,
                    BinOp::Eq => i64::from(x == y),
                    BinOp::Ne => i64::from(x != y),
                    BinOp::Lt => i64::from(x < y),
                    BinOp::Le => i64::from(x <= y),
                    BinOp::Gt => i64::from(x > y),
                    BinOp::Ge => i64::from(x >= y),
                    BinOp::And | BinOp::Or => i64::from(y != 0),
                }
            }
        })
    }

    fn range(&self, env: &Env, r: &RangeRef) -> Result<(i64, i64), FspError> {
        match r {
            RangeRef::Named(name, pos) => self
                .ranges
                .get(name)
                .copied()
                .ok_or_else(|| FspError::unbound(name, *pos)),
            RangeRef::Lit(lo, hi, pos) => {
                let (lo, hi) = (self.eval(env, lo)?, self.eval(env, hi)?);
                if lo > hi {
                    return Err(FspError::InvalidRange {
                        lo,
                        hi,
                        line: pos.line,
                        col: pos.col,
                    });
                }
                Ok((lo, hi))
            }
        }
    }

    /// Every ground instance of `pat` under `env`, each with the environment
    /// extended by the variables the pattern binds. `None` stands for τ.
    fn expand(&self, env: &Env, pat: &LabelPat) -> Result<Vec<(Option<Action>, Env)>, FspError> {
        let mut partial: Vec<(Vec<u32>, Env)> = vec![(Vec::new(), env.clone())];
        for idx in &pat.indices {
            let mut next = Vec::new();
            for (vals, env) in partial {
                let (values, bind): (Vec<i64>, Option<&str>) = match idx {
                    Index::Expr(Expr::Var(name, _))
                        if !env.contains_key(name)
                            && !self.consts.contains_key(name)
                            && self.ranges.contains_key(name) =>
                    {
                        let (lo, hi) = self.ranges[name];
                        ((lo..=hi).collect(), None)
                    }
                    Index::Expr(e) => (vec![self.eval(&env, e)?], None),
                    Index::Range(r) => {
                        let (lo, hi) = self.range(&env, r)?;
                        ((lo..=hi).collect(), None)
                    }
                    Index::Bind(v, r) => {
                        let (lo, hi) = self.range(&env, r)?;
                        ((lo..=hi).collect(), Some(v.as_str()))
                    }
                };
                for v in values {
                    let iv = u32::try_from(v).map_err(|_| FspError::IndexOutOfRange {
                        what: format!("index of `{}`", pat.base),
                        value: v,
                        lo: 0,
                        hi: i64::from(u32::MAX),
                        line: pat.pos.line,
                        col: pat.pos.col,
                    })?;
                    let mut env = env.clone();
                    if let Some(b) = bind {
                        env.insert(b.to_string(), v);
                    }
                    let mut vals = vals.clone();
                    vals.push(iv);
                    next.push((vals, env));
                }
            }
            partial = next;
        }
        Ok(partial
            .into_iter()
            .map(|(vals, env)| {
                let a = (pat.base != "tau" || !vals.is_empty()).then(|| Action::indexed(pat.base.clone(), vals));
                (a, env)
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Local(usize, Vec<i64>),
    Anon(usize, usize, Vec<(String, i64)>),
    Stop,
    Err,
}

struct Proc<'a> {
    scope: &'a Scope,
    def: &'a ProcessDef,
    /// Local definitions with the main body at index 0.
    locals: Vec<Local<'a>>,
    by_name: HashMap<&'a str, usize>,
    terms: Vec<&'a Term>,
    term_ids: HashMap<*const Term, usize>,
}

/// Name, index ranges, body and position of a local definition.
type Local<'a> = (&'a str, &'a [(String, RangeRef)], &'a Body, Pos);

impl<'a> Proc<'a> {
    fn new(scope: &'a Scope, def: &'a ProcessDef) -> Result<Self, FspError> {
        let mut locals: Vec<Local> = vec![(def.name.as_str(), &[], &def.body, def.pos)];
        for l in &def.locals {
            locals.push((l.name.as_str(), &l.params, &l.body, l.pos));
        }
        let mut by_name = HashMap::new();
        for (i, (name, _, _, pos)) in locals.iter().enumerate() {
            if by_name.insert(*name, i).is_some() {
                return Err(FspError::DuplicateProcess {
                    name: name.to_string(),
                    line: pos.line,
                    col: pos.col,
                });
            }
        }
        let mut terms = Vec::new();
        let mut term_ids = HashMap::new();
        for (_, _, body, _) in &locals {
            if let Body::Choice(ts) = body {
                for t in ts {
                    term_ids.insert(t as *const Term, terms.len());
                    terms.push(t);
                }
            }
        }
        Ok(Proc {
            scope,
            def,
            locals,
            by_name,
            terms,
            term_ids,
        })
    }

    fn resolve(&self, env: &Env, r: &ProcRef) -> Result<Key, FspError> {
        let mut seen: BTreeSet<(usize, Vec<i64>)> = BTreeSet::new();
        let mut env = env.clone();
        let mut r = r.clone();
        loop {
            let (name, args, pos) = match &r {
                ProcRef::Error => return Ok(Key::Err),
                ProcRef::Stop => return Ok(Key::Stop),
                ProcRef::Named(n, a, p) => (n, a, *p),
            };
            let &idx = self
                .by_name
                .get(name.as_str())
                .ok_or_else(|| FspError::unbound(name, pos))?;
            let (_, params, body, _) = self.locals[idx];
            if params.len() != args.len() {
                return Err(FspError::Arity {
                    name: name.clone(),
                    expected: params.len(),
                    found: args.len(),
                    line: pos.line,
                    col: pos.col,
                });
            }
            let mut vals = Vec::with_capacity(args.len());
            for ((pname, range), arg) in params.iter().zip(args) {
                let v = self.scope.eval(&env, arg)?;
                let (lo, hi) = self.scope.range(&env, range)?;
                if v < lo || v > hi {
                    return Err(FspError::IndexOutOfRange {
                        what: format!("parameter `{pname}` of `{name}`"),
                        value: v,
                        lo,
                        hi,
                        line: pos.line,
                        col: pos.col,
                    });
                }
                vals.push(v);
            }
            match body {
                Body::Alias(next @ ProcRef::Named(..)) => {
                    if !seen.insert((idx, vals.clone())) {
                        return Err(FspError::UnguardedRecursion {
                            name: name.clone(),
                            line: pos.line,
                            col: pos.col,
                        });
                    }
                    env = self.bind_params(idx, &vals);
                    r = next.clone();
                }
                Body::Alias(ProcRef::Error) => return Ok(Key::Err),
                _ => return Ok(Key::Local(idx, vals)),
            }
        }
    }

    fn bind_params(&self, idx: usize, vals: &[i64]) -> Env {
        self.locals[idx]
            .1
            .iter()
            .zip(vals)
            .map(|((n, _), &v)| (n.clone(), v))
            .collect()
    }

    /// Transitions leaving the position `pos` of `term` under `env`.
    fn step(&self, term: &Term, pos: usize, env: &Env, out: &mut Vec<(Option<Action>, Key)>) -> Result<(), FspError> {
        let uid = self.term_ids[&(term as *const Term)];
        // a guard that does not mention label-bound variables is decided
        // before expansion, so it can protect out-of-range indices
        let mut guard = if pos == 0 { term.guard.as_ref() } else { None };
        if let Some(g) = guard {
            match self.scope.eval(env, g) {
                Ok(0) => return Ok(()),
                Ok(_) => guard = None,
                Err(FspError::Unbound { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        for (a, env) in self.scope.expand(env, &term.labels[pos])? {
            if let Some(g) = guard {
                if self.scope.eval(&env, g)? == 0 {
                    continue;
                }
            }
            let next = if pos + 1 < term.labels.len() {
                Key::Anon(uid, pos + 1, env.into_iter().collect())
            } else {
                self.resolve(&env, &term.target)?
            };
            out.push((a, next));
        }
        Ok(())
    }

    fn successors(&self, key: &Key) -> Result<Vec<(Option<Action>, Key)>, FspError> {
        let mut out = Vec::new();
        match key {
            Key::Local(idx, vals) => {
                if let Body::Choice(terms) = self.locals[*idx].2 {
                    let env = self.bind_params(*idx, vals);
                    for t in terms {
                        self.step(t, 0, &env, &mut out)?;
                    }
                }
            }
            Key::Anon(uid, pos, env) => {
                let env: Env = env.iter().cloned().collect();
                self.step(self.terms[*uid], *pos, &env, &mut out)?;
            }
            Key::Stop | Key::Err => {}
        }
        Ok(out)
    }

    fn name_of(&self, key: &Key, anon: &mut usize) -> String {
        match key {
            Key::Local(idx, vals) => {
                let mut s = self.locals[*idx].0.to_string();
                for v in vals {
                    s.push_str(&format!("[{v}]"));
                }
                s
            }
            Key::Anon(..) => {
                *anon += 1;
                format!("{}.{}", self.def.name, anon)
            }
            Key::Stop => "STOP".to_string(),
            Key::Err => "ERROR".to_string(),
        }
    }

    fn elaborate(&self) -> Result<Lts, FspError> {
        let mut b = LtsBuilder::new();
        let mut ids: HashMap<Key, StateId> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut names: Vec<String> = Vec::new();
        let mut anon = 0usize;
        let mut intern = |k: Key, b: &mut LtsBuilder, queue: &mut VecDeque<Key>| {
            if k == Key::Err {
                return b.err();
            }
            if let Some(&id) = ids.get(&k) {
                return id;
            }
            let id = b.add_state();
            names.push(self.name_of(&k, &mut anon));
            ids.insert(k.clone(), id);
            queue.push_back(k);
            id
        };
        let main = ProcRef::Named(self.def.name.clone(), Vec::new(), self.def.pos);
        let init_key = self.resolve(&Env::new(), &main)?;
        let init = intern(init_key, &mut b, &mut queue);
        b.set_initial(init);
        let mut src: StateId = 0;
        while let Some(k) = queue.pop_front() {
            for (a, next) in self.successors(&k)? {
                let dst = intern(next, &mut b, &mut queue);
                match a {
                    None => b.add_tau(src, dst),
                    Some(a) => b.add(src, &a, dst),
                }
            }
            src += 1;
        }
        for pat in &self.def.alphabet_ext {
            for (a, _) in self.scope.expand(&Env::new(), pat)? {
                if let Some(a) = a {
                    b.declare(a);
                }
            }
        }
        let has_err = b.has_err();
        let lts = b.build().expect("elaborated process is well formed");
        let mut all = Vec::with_capacity(lts.num_states() as usize);
        if has_err {
            all.push("ERROR".to_string());
        }
        all.extend(names);
        Ok(lts.with_names(all))
    }
}

/// Elaborates declarations in order; composites compose left to right.
pub fn elaborate(decls: &[Decl]) -> Result<Vec<(String, Lts)>, FspError> {
    let mut scope = Scope::default();
    let mut out: Vec<(String, Lts)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut insert = |name: &str, pos: Pos, lts: Lts, out: &mut Vec<(String, Lts)>| {
        if index.insert(name.to_string(), out.len()).is_some() {
            return Err(FspError::DuplicateProcess {
                name: name.to_string(),
                line: pos.line,
                col: pos.col,
            });
        }
        out.push((name.to_string(), lts));
        Ok(())
    };
    for d in decls {
        match d {
            Decl::Const(name, e, _) => {
                let v = scope.eval(&Env::new(), e)?;
                scope.consts.insert(name.clone(), v);
            }
            Decl::Range(name, lo, hi, pos) => {
                let r = scope.range(&Env::new(), &RangeRef::Lit(lo.clone(), hi.clone(), *pos))?;
                scope.ranges.insert(name.clone(), r);
            }
            Decl::Process(p) => {
                let saved = scope.consts.clone();
                for (name, e) in &p.params {
                    let v = scope.eval(&Env::new(), e)?;
                    scope.consts.insert(name.clone(), v);
                }
                let lts = Proc::new(&scope, p)?.elaborate()?;
                scope.consts = saved;
                insert(&p.name, p.pos, lts, &mut out)?;
            }
            Decl::Composite(c) => {
                let mut parts = Vec::new();
                for (name, pos) in &c.parts {
                    let i = out
                        .iter()
                        .position(|(n, _)| n == name)
                        .ok_or_else(|| FspError::unbound(name, *pos))?;
                    parts.push(out[i].1.clone());
                }
                let lts = compose_all(parts.iter());
                insert(&c.name, c.pos, lts, &mut out)?;
            }
        }
    }
    Ok(out)
}
