use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::{FspError, Pos};

pub fn parse_decls(src: &str) -> Result<Vec<Decl>, FspError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        at: 0,
    };
    let mut decls = Vec::new();
    while p.peek() != &Tok::Eof {
        decls.push(p.decl()?);
    }
    Ok(decls)
}

fn is_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn is_lower(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.next();
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, FspError> {
        Err(FspError::syntax(
            self.pos(),
            &format!("expected {wanted}, found {}", self.peek().describe()),
        ))
    }

    fn expect(&mut self, t: Tok) -> Result<Pos, FspError> {
        if self.peek() == &t {
            Ok(self.next().1)
        } else {
            self.unexpected(&t.describe())
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), FspError> {
        match self.peek() {
            Tok::Ident(_) => match self.next() {
                (Tok::Ident(s), p) => Ok((s, p)),
                _ => unreachable!(),
            },
            _ => self.unexpected("an identifier"),
        }
    }

    fn upper_ident(&mut self) -> Result<(String, Pos), FspError> {
        match self.peek() {
            Tok::Ident(s) if is_upper(s) => self.ident(),
            _ => self.unexpected("a process name"),
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn decl(&mut self) -> Result<Decl, FspError> {
        let pos = self.pos();
        if self.keyword("const") {
            self.next();
            let (name, _) = self.ident()?;
            self.expect(Tok::Assign)?;
            let e = self.expr()?;
            return Ok(Decl::Const(name, e, pos));
        }
        if self.keyword("range") {
            self.next();
            let (name, _) = self.ident()?;
            self.expect(Tok::Assign)?;
            let lo = self.expr()?;
            self.expect(Tok::DotDot)?;
            let hi = self.expr()?;
            return Ok(Decl::Range(name, lo, hi, pos));
        }
        if self.eat(&Tok::BarBar) {
            let (name, pos) = self.upper_ident()?;
            self.expect(Tok::Assign)?;
            self.expect(Tok::LParen)?;
            let mut parts = vec![self.upper_ident()?];
            while self.eat(&Tok::BarBar) {
                parts.push(self.upper_ident()?);
            }
            self.expect(Tok::RParen)?;
            self.expect(Tok::Dot)?;
            return Ok(Decl::Composite(CompositeDef { name, parts, pos }));
        }
        self.process_def().map(Decl::Process)
    }

    fn process_def(&mut self) -> Result<ProcessDef, FspError> {
        let (name, pos) = self.upper_ident()?;
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                let (p, _) = self.upper_ident()?;
                self.expect(Tok::Assign)?;
                params.push((p, self.expr()?));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::Assign)?;
        let body = self.body()?;
        let mut locals = Vec::new();
        while self.eat(&Tok::Comma) {
            locals.push(self.local_def()?);
        }
        let mut alphabet_ext = Vec::new();
        if self.eat(&Tok::Plus) {
            self.expect(Tok::LBrace)?;
            if self.peek() != &Tok::RBrace {
                loop {
                    alphabet_ext.push(self.label()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(Tok::RBrace)?;
        }
        self.expect(Tok::Dot)?;
        Ok(ProcessDef {
            name,
            params,
            body,
            locals,
            alphabet_ext,
            pos,
        })
    }

    fn local_def(&mut self) -> Result<LocalDef, FspError> {
        let (name, pos) = self.upper_ident()?;
        let mut params = Vec::new();
        while self.eat(&Tok::LBrack) {
            let (v, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            params.push((v, self.range_ref()?));
            self.expect(Tok::RBrack)?;
        }
        self.expect(Tok::Assign)?;
        let body = self.body()?;
        Ok(LocalDef {
            name,
            params,
            body,
            pos,
        })
    }

    fn body(&mut self) -> Result<Body, FspError> {
        if self.eat(&Tok::LParen) {
            let mut terms = vec![self.term()?];
            while self.eat(&Tok::Bar) {
                terms.push(self.term()?);
            }
            self.expect(Tok::RParen)?;
            Ok(Body::Choice(terms))
        } else {
            Ok(Body::Alias(self.proc_ref()?))
        }
    }

    fn term(&mut self) -> Result<Term, FspError> {
        let guard = if self.keyword("when") {
            self.next();
            Some(self.expr()?)
        } else {
            None
        };
        let mut labels = vec![self.label()?];
        loop {
            self.expect(Tok::Arrow)?;
            match self.peek() {
                Tok::Ident(s) if is_lower(s) => labels.push(self.label()?),
                _ => break,
            }
        }
        let target = self.proc_ref()?;
        Ok(Term { guard, labels, target })
    }

    fn label(&mut self) -> Result<LabelPat, FspError> {
        let pos = self.pos();
        let base = match self.peek() {
            Tok::Ident(s) if is_lower(s) => self.ident()?.0,
            _ => return self.unexpected("an action label"),
        };
        let mut indices = Vec::new();
        while self.eat(&Tok::LBrack) {
            if matches!(self.peek(), Tok::Ident(_)) && self.peek2() == &Tok::Colon {
                let (v, _) = self.ident()?;
                self.next();
                indices.push(Index::Bind(v, self.range_ref()?));
            } else {
                let epos = self.pos();
                let e = self.expr()?;
                if self.eat(&Tok::DotDot) {
                    let hi = self.expr()?;
                    indices.push(Index::Range(RangeRef::Lit(e, hi, epos)));
                } else {
                    indices.push(Index::Expr(e));
                }
            }
            self.expect(Tok::RBrack)?;
        }
        Ok(LabelPat { base, indices, pos })
    }

    fn range_ref(&mut self) -> Result<RangeRef, FspError> {
        let pos = self.pos();
        let e = self.expr()?;
        if self.eat(&Tok::DotDot) {
            let hi = self.expr()?;
            return Ok(RangeRef::Lit(e, hi, pos));
        }
        match e {
            Expr::Var(name, p) => Ok(RangeRef::Named(name, p)),
            _ => Err(FspError::syntax(pos, "expected a range name or `lo..hi`")),
        }
    }

    fn proc_ref(&mut self) -> Result<ProcRef, FspError> {
        if self.keyword("ERROR") {
            self.next();
            return Ok(ProcRef::Error);
        }
        if self.keyword("STOP") {
            self.next();
            return Ok(ProcRef::Stop);
        }
        let (name, pos) = self.upper_ident()?;
        let mut args = Vec::new();
        while self.eat(&Tok::LBrack) {
            args.push(self.expr()?);
            self.expect(Tok::RBrack)?;
        }
        Ok(ProcRef::Named(name, args, pos))
    }

    fn expr(&mut self) -> Result<Expr, FspError> {
        let c = self.binary(0)?;
        if self.eat(&Tok::Question) {
            let a = self.expr()?;
            self.expect(Tok::Colon)?;
            let b = self.expr()?;
            return Ok(Expr::Cond(Box::new(c), Box::new(a), Box::new(b)));
        }
        Ok(c)
    }

    /// Precedence climbing; level 0 binds loosest.
    fn binary(&mut self, level: usize) -> Result<Expr, FspError> {
        const LEVELS: &[&[(Tok, BinOp)]] = &[
            &[(Tok::BarBar, BinOp::Or)],
            &[(Tok::AndAnd, BinOp::And)],
            &[(Tok::EqEq, BinOp::Eq), (Tok::Ne, BinOp::Ne)],
            &[
                (Tok::Lt, BinOp::Lt),
                (Tok::Le, BinOp::Le),
                (Tok::Gt, BinOp::Gt),
                (Tok::Ge, BinOp::Ge),
            ],
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
            &[
                (Tok::Star, BinOp::Mul),
                (Tok::Slash, BinOp::Div),
                (Tok::Percent, BinOp::Rem),
            ],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (t, op) in LEVELS[level] {
                if self.peek() == t {
                    let pos = self.next().1;
                    let rhs = self.binary(level + 1)?;
                    lhs = Expr::Binary(*op, Box::new(lhs), Box::new(rhs), pos);
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, FspError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Bang) {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Expr::Int(v))
            }
            Tok::Ident(_) => {
                let (s, p) = self.ident()?;
                Ok(Expr::Var(s, p))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.unexpected("an expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example_with_locals() {
        let d = parse_decls("range R = 0..1  P = (x[i:R] -> Q[i]), Q[i:0..1] = (done -> P).").unwrap();
        assert_eq!(d.len(), 2);
        let Decl::Process(p) = &d[1] else { panic!() };
        assert_eq!(p.locals.len(), 1);
        assert_eq!(p.locals[0].params.len(), 1);
    }

    #[test]
    fn precedence() {
        let d = parse_decls("const X = 1 + 2 * 3 == 7 && 1 ? 4 : 5").unwrap();
        let Decl::Const(_, Expr::Cond(c, _, _), _) = &d[0] else {
            panic!()
        };
        assert!(matches!(**c, Expr::Binary(BinOp::And, _, _, _)));
    }

    #[test]
    fn syntax_error_position() {
        let e = parse_decls("P = (a -> P\n | b -> ).").unwrap_err();
        assert_eq!(
            e,
            FspError::Syntax {
                line: 2,
                col: 9,
                msg: "expected a process name, found `)`".into()
            }
        );
    }

    #[test]
    fn composite_and_alphabet_extension() {
        let d = parse_decls("P = (a -> STOP)+{b, c[0..1]}. ||S = (P || P).").unwrap();
        let Decl::Process(p) = &d[0] else { panic!() };
        assert_eq!(p.alphabet_ext.len(), 2);
        assert!(matches!(&d[1], Decl::Composite(c) if c.parts.len() == 2));
    }
}
