use super::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Var(String, Pos),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>, Pos),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RangeRef {
    Named(String, Pos),
    Lit(Expr, Expr, Pos),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Index {
    /// `[e]`; a bare range name expands to every value of the range.
    Expr(Expr),
    /// `[lo..hi]`, expanded without binding a variable.
    Range(RangeRef),
    /// `[x:R]`, expanded with `x` bound to each value.
    Bind(String, RangeRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelPat {
    pub base: String,
    pub indices: Vec<Index>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProcRef {
    Named(String, Vec<Expr>, Pos),
    Error,
    Stop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub guard: Option<Expr>,
    pub labels: Vec<LabelPat>,
    pub target: ProcRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    Choice(Vec<Term>),
    Alias(ProcRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDef {
    pub name: String,
    pub params: Vec<(String, RangeRef)>,
    pub body: Body,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessDef {
    pub name: String,
    pub params: Vec<(String, Expr)>,
    pub body: Body,
    pub locals: Vec<LocalDef>,
    pub alphabet_ext: Vec<LabelPat>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeDef {
    pub name: String,
    pub parts: Vec<(String, Pos)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Const(String, Expr, Pos),
    Range(String, Expr, Expr, Pos),
    Process(ProcessDef),
    Composite(CompositeDef),
}
