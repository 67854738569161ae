use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::value::ValueType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ty {
    Int,
    Nat,
    Bool,
    Prop,
    Char,
    String,
    List(Box<Ty>),
    Array(Box<Ty>),
}

impl Ty {
    pub fn from_value_type(t: ValueType) -> Ty {
        let b = |t: Ty| Box::new(t);
        match t {
            ValueType::Int => Ty::Int,
            ValueType::Nat => Ty::Nat,
            ValueType::ListInt => Ty::List(b(Ty::Int)),
            ValueType::ArrayInt => Ty::Array(b(Ty::Int)),
            ValueType::ListNat => Ty::List(b(Ty::Nat)),
            ValueType::ArrayNat => Ty::Array(b(Ty::Nat)),
            ValueType::ListChar => Ty::List(b(Ty::Char)),
            ValueType::String => Ty::String,
        }
    }

    pub fn to_value_type(&self) -> Option<ValueType> {
        Some(match self {
            Ty::Int => ValueType::Int,
            Ty::Nat => ValueType::Nat,
            Ty::String => ValueType::String,
            Ty::List(inner) => match **inner {
                Ty::Int => ValueType::ListInt,
                Ty::Nat => ValueType::ListNat,
                Ty::Char => ValueType::ListChar,
                _ => return None,
            },
            Ty::Array(inner) => match **inner {
                Ty::Int => ValueType::ArrayInt,
                Ty::Nat => ValueType::ArrayNat,
                _ => return None,
            },
            _ => return None,
        })
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("Int"),
            Ty::Nat => f.write_str("Nat"),
            Ty::Bool => f.write_str("Bool"),
            Ty::Prop => f.write_str("Prop"),
            Ty::Char => f.write_str("Char"),
            Ty::String => f.write_str("String"),
            Ty::List(t) => write!(f, "List {}", Atomic(t)),
            Ty::Array(t) => write!(f, "Array {}", Atomic(t)),
        }
    }
}

struct Atomic<'a>(&'a Ty);

impl fmt::Display for Atomic<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            t @ (Ty::List(_) | Ty::Array(_)) => write!(f, "({t})"),
            t => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Iff,
    Implies,
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Mem,
    NotMem,
    Append,
    Cons,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quant {
    Forall,
    Exists,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// `∀ x ∈ xs, ...`
    In(Box<Expr>),
    /// `∀ i < n, ...`
    Lt(Box<Expr>),
    /// `∀ i ≤ n, ...`
    Le(Box<Expr>),
    /// `∀ x : T, ...` (not decidable)
    Type(Ty),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    Wild,
    Var(String),
    Int(i128),
    Bool(bool),
    Char(char),
    Str(String),
    Nil,
    Cons(Box<Pattern>, Box<Pattern>),
    List(Vec<Pattern>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub patterns: Vec<Pattern>,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i128),
    Str(String),
    Char(char),
    Bool(bool),
    /// Dotted path, resolved at evaluation time.
    Name(Vec<String>),
    List(Vec<Expr>),
    Array(Vec<Expr>),
    App(Box<Expr>, Vec<Expr>),
    Method(Box<Expr>, String),
    /// `e[i]!`
    Index(Box<Expr>, Box<Expr>),
    Lambda(Vec<String>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Match(Vec<Expr>, Vec<Arm>),
    Let(String, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Coe(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Quant(Quant, String, Domain, Box<Expr>),
    Ascribe(Box<Expr>, Ty),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    /// Splits a top-level conjunction `a ∧ b ∧ c` into its clauses.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match &e.kind {
                ExprKind::Bin(BinOp::And, l, r) => {
                    go(l, out);
                    go(r, out);
                }
                _ => out.push(e),
            }
        }
        go(self, &mut out);
        out
    }
}

/// A parsed `def`.
#[derive(Clone, Debug, PartialEq)]
pub struct DefSyntax {
    pub name: String,
    pub params: Vec<(String, Ty)>,
    pub ret: Ty,
    pub body: Expr,
    /// Byte range of the whole definition in its source.
    pub span: Span,
}
