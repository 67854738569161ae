use alloc::format;
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use super::ast::*;
use super::program::{Def, Program};
use crate::value::{Value, ValueType};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("evaluation ran out of fuel")]
    OutOfFuel,
    #[error("maximum recursion depth exceeded")]
    DepthExceeded,
    #[error("{0}")]
    Runtime(String),
    #[error("cannot decide: {0}")]
    Undecidable(String),
}

impl EvalError {
    /// Whether the error means "did not terminate within budget".
    pub fn is_divergence(&self) -> bool {
        matches!(self, EvalError::OutOfFuel | EvalError::DepthExceeded)
    }
}

fn rt<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Runtime(msg.into()))
}

/// Resource budget for one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Abstract evaluation steps; collection operations charge their size.
    pub fuel: u64,
    /// Maximum nesting of definition and lambda calls.
    pub max_depth: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            fuel: 2_000_000,
            max_depth: 100,
        }
    }
}

/// How unbounded quantifiers (`∀ x : Nat, ...`) are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Unbounded quantifiers are an error.
    Decide,
    /// Unbounded quantifiers are sampled; results the samples cannot settle
    /// become [`Truth::Unknown`].
    Sample,
}

/// Sample range used for `Nat` binders in [`Mode::Sample`]; `Int` binders use
/// the symmetric range.
pub const SAMPLE_BOUND: i128 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn from_opt(b: Option<bool>) -> Truth {
        match b {
            Some(true) => Truth::True,
            Some(false) => Truth::False,
            None => Truth::Unknown,
        }
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::True => "true",
            Truth::False => "false",
            Truth::Unknown => "unknown",
        })
    }
}

#[derive(Clone)]
pub(crate) enum V<'a> {
    Int(i128),
    Nat(i128),
    Bool(bool),
    Unknown,
    Char(char),
    Str(Rc<str>),
    List(Rc<Vec<V<'a>>>),
    Array(Rc<Vec<V<'a>>>),
    Fn(Rc<Func<'a>>),
}

pub(crate) enum Func<'a> {
    Closure {
        params: &'a [String],
        body: &'a Expr,
        env: Env<'a>,
        module: Option<&'a str>,
    },
    Def(&'a Def),
    Partial(V<'a>, Vec<V<'a>>),
    Builtin(&'a str, &'a str),
    Global(&'a str),
}

impl fmt::Display for V<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn seq(f: &mut fmt::Formatter<'_>, open: &str, items: &[V<'_>]) -> fmt::Result {
            f.write_str(open)?;
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]")
        }
        match self {
            V::Int(n) | V::Nat(n) => write!(f, "{n}"),
            V::Bool(b) => write!(f, "{b}"),
            V::Unknown => f.write_str("?"),
            V::Char(c) => write!(f, "{c:?}"),
            V::Str(s) => write!(f, "{:?}", &**s),
            V::List(xs) => seq(f, "[", xs),
            V::Array(xs) => seq(f, "#[", xs),
            V::Fn(_) => f.write_str("<fun>"),
        }
    }
}

type Env<'a> = Option<Rc<Node<'a>>>;

pub(crate) struct Node<'a> {
    name: &'a str,
    val: V<'a>,
    next: Env<'a>,
}

fn bind<'a>(env: &Env<'a>, name: &'a str, val: V<'a>) -> Env<'a> {
    Some(Rc::new(Node {
        name,
        val,
        next: env.clone(),
    }))
}

fn lookup<'a>(env: &Env<'a>, name: &str) -> Option<V<'a>> {
    let mut cur = env.as_ref();
    while let Some(node) = cur {
        if node.name == name {
            return Some(node.val.clone());
        }
        cur = node.next.as_ref();
    }
    None
}

/// Namespaces whose members are reachable as `Ns.member`.
pub(crate) const NAMESPACES: &[&str] = &["List", "Array", "String", "Nat", "Int", "Char"];

/// Namespaced functions that are not plain methods on their first argument.
const CONSTRUCTORS: &[(&str, &str, usize)] = &[
    ("List", "replicate", 2),
    ("List", "range", 1),
    ("Array", "range", 1),
    ("Array", "mkArray", 2),
    ("Array", "replicate", 2),
    ("Int", "ofNat", 1),
    ("String", "mk", 1),
    ("Char", "ofNat", 1),
];

pub(crate) const GLOBALS: &[(&str, usize)] = &[("min", 2), ("max", 2), ("decide", 1), ("id", 1)];

/// Number of explicit arguments a method takes besides its receiver.
pub(crate) fn method_arity(name: &str) -> Option<usize> {
    Some(match name {
        "length" | "size" | "isEmpty" | "reverse" | "head!" | "getLast!" | "back!" | "tail" | "sum"
        | "eraseDups" | "Nodup" | "toList" | "toArray" | "asString" | "data" | "front" | "back"
        | "isDigit" | "isAlpha" | "isLower" | "isUpper" | "isAlphanum" | "isWhitespace" | "toNat"
        | "toUpper" | "toLower" | "natAbs" | "succ" | "pred" => 0,
        "take" | "drop" | "map" | "filter" | "all" | "any" | "contains" | "elem" | "count" | "countP"
        | "Pairwise" | "Sorted" | "isPerm" | "Perm" | "get!" | "push" | "append" | "min" | "max" => 1,
        "getD" | "set" | "foldl" | "foldr" | "zipWith" => 2,
        _ => return None,
    })
}

/// Arity of `Ns.name` when used as a function, if it exists.
pub(crate) fn qualified_arity(ns: &str, name: &str) -> Option<usize> {
    if let Some(&(_, _, n)) = CONSTRUCTORS.iter().find(|(a, b, _)| *a == ns && *b == name) {
        return Some(n);
    }
    if !NAMESPACES.contains(&ns) {
        return None;
    }
    method_arity(name).map(|n| n + 1)
}

/// Position of the receiver among the arguments of `Ns.name a b ...`.
fn receiver_index(name: &str, argc: usize) -> usize {
    match name {
        "map" | "filter" | "foldl" | "foldr" | "Pairwise" | "Sorted" | "countP" | "count" | "elem" | "take"
        | "drop" => argc - 1,
        "zipWith" => 1,
        _ => 0,
    }
}

enum Callee<'a> {
    Value(V<'a>),
    Method(V<'a>, &'a str),
    Builtin(&'a str, &'a str),
    Global(&'a str),
}

pub(crate) struct Machine<'a> {
    prog: &'a Program,
    fuel: u64,
    depth: u32,
    max_depth: u32,
    mode: Mode,
}

impl<'a> Machine<'a> {
    pub(crate) fn new(prog: &'a Program, limits: Limits, mode: Mode) -> Self {
        Self {
            prog,
            fuel: limits.fuel,
            depth: 0,
            max_depth: limits.max_depth,
            mode,
        }
    }

    fn tick(&mut self, n: usize) -> Result<(), EvalError> {
        let n = n as u64 + 1;
        if self.fuel < n {
            self.fuel = 0;
            return Err(EvalError::OutOfFuel);
        }
        self.fuel -= n;
        Ok(())
    }

    pub(crate) fn eval_top(&mut self, e: &'a Expr, module: Option<&'a str>) -> Result<V<'a>, EvalError> {
        self.eval(e, &None, module)
    }

    fn eval(&mut self, e: &'a Expr, env: &Env<'a>, module: Option<&'a str>) -> Result<V<'a>, EvalError> {
        // `if`, `let` and `match` continue in place so that recursion through
        // them does not grow the native stack.
        let mut e = e;
        let mut env = env.clone();
        loop {
            self.tick(0)?;
            match &e.kind {
                ExprKind::If(c, t, f) => {
                    e = match truth(&self.eval(c, &env, module)?)? {
                        Some(true) => t,
                        Some(false) => f,
                        None => return Err(EvalError::Undecidable("branch condition".into())),
                    };
                }
                ExprKind::Let(name, value, body) => {
                    let v = self.eval(value, &env, module)?;
                    env = bind(&env, name, v);
                    e = body;
                }
                ExprKind::Match(scrutinees, arms) => {
                    let (body, local) = self.select_arm(scrutinees, arms, &env, module)?;
                    env = local;
                    e = body;
                }
                ExprKind::App(head, args) => return self.eval_app(head, args, &env, module),
                _ => return self.eval_leaf(e, &env, module),
            }
        }
    }

    #[inline(never)]
    fn select_arm(
        &mut self,
        scrutinees: &'a [Expr],
        arms: &'a [Arm],
        env: &Env<'a>,
        module: Option<&'a str>,
    ) -> Result<(&'a Expr, Env<'a>), EvalError> {
        let mut vals = Vec::with_capacity(scrutinees.len());
        for s in scrutinees {
            vals.push(self.eval(s, env, module)?);
        }
        'arms: for arm in arms {
            let mut local = env.clone();
            for (p, v) in arm.patterns.iter().zip(&vals) {
                match self.matches(p, v, &local)? {
                    Some(next) => local = next,
                    None => continue 'arms,
                }
            }
            return Ok((&arm.body, local));
        }
        rt("non-exhaustive match")
    }

    #[inline(never)]
    fn eval_app(
        &mut self,
        head: &'a Expr,
        args: &'a [Expr],
        env: &Env<'a>,
        module: Option<&'a str>,
    ) -> Result<V<'a>, EvalError> {
        let callee = match &head.kind {
            ExprKind::Name(segs) => self.resolve(segs, env, module)?,
            ExprKind::Method(recv, m) => Callee::Method(self.eval(recv, env, module)?, m),
            _ => Callee::Value(self.eval(head, env, module)?),
        };
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a, env, module)?);
        }
        self.call(callee, vals)
    }

    #[inline(never)]
    fn eval_leaf(&mut self, e: &'a Expr, env: &Env<'a>, module: Option<&'a str>) -> Result<V<'a>, EvalError> {
        match &e.kind {
            ExprKind::Int(n) => Ok(V::Nat(*n)),
            ExprKind::Str(s) => Ok(V::Str(s.as_str().into())),
            ExprKind::Char(c) => Ok(V::Char(*c)),
            ExprKind::Bool(b) => Ok(V::Bool(*b)),
            ExprKind::Name(segs) => {
                let callee = self.resolve(segs, env, module)?;
                self.force(callee)
            }
            ExprKind::List(items) | ExprKind::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for it in items {
                    out.push(self.eval(it, env, module)?);
                }
                Ok(if matches!(e.kind, ExprKind::List(_)) {
                    V::List(Rc::new(out))
                } else {
                    V::Array(Rc::new(out))
                })
            }
            ExprKind::Method(recv, m) => {
                let r = self.eval(recv, env, module)?;
                self.method(r, m, Vec::new())
            }
            ExprKind::Index(xs, i) => {
                let xs = self.eval(xs, env, module)?;
                let i = self.eval(i, env, module)?;
                self.method(xs, "get!", vec![i])
            }
            ExprKind::Lambda(params, body) => Ok(V::Fn(Rc::new(Func::Closure {
                params,
                body,
                env: env.clone(),
                module,
            }))),
            ExprKind::Not(inner) => Ok(from_truth(truth(&self.eval(inner, env, module)?)?.map(|b| !b))),
            ExprKind::Neg(inner) => match self.eval(inner, env, module)? {
                V::Int(n) | V::Nat(n) => Ok(V::Int(-n)),
                v => rt(format!("cannot negate {v}")),
            },
            ExprKind::Coe(inner) => match self.eval(inner, env, module)? {
                V::Nat(n) => Ok(V::Int(n)),
                v => Ok(v),
            },
            ExprKind::Ascribe(inner, ty) => {
                let v = self.eval(inner, env, module)?;
                self.coerce(v, ty)
            }
            ExprKind::Bin(op, l, r) => self.binary(*op, l, r, env, module),
            ExprKind::Quant(q, var, domain, body) => self.quantifier(*q, var, domain, body, env, module),
            ExprKind::If(..) | ExprKind::Let(..) | ExprKind::Match(..) | ExprKind::App(..) => {
                self.eval(e, env, module)
            }
        }
    }

    fn resolve(&mut self, segs: &'a [String], env: &Env<'a>, module: Option<&'a str>) -> Result<Callee<'a>, EvalError> {
        let (base, rest) = if let Some(v) = lookup(env, &segs[0]) {
            (v, &segs[1..])
        } else if let Some((def, used)) = self.prog.resolve_def(module, segs) {
            let base = if def.params.is_empty() {
                self.call_def(def, Vec::new())?
            } else {
                V::Fn(Rc::new(Func::Def(def)))
            };
            (base, &segs[used..])
        } else if segs.len() == 2 && qualified_arity(&segs[0], &segs[1]).is_some() {
            return Ok(Callee::Builtin(&segs[0], &segs[1]));
        } else if segs.len() == 1 && GLOBALS.iter().any(|(g, _)| *g == segs[0]) {
            return Ok(Callee::Global(&segs[0]));
        } else {
            return rt(format!("unknown identifier `{}`", segs.join(".")));
        };
        match rest.split_last() {
            None => Ok(Callee::Value(base)),
            Some((last, init)) => {
                let mut v = base;
                for m in init {
                    v = self.method(v, m, Vec::new())?;
                }
                Ok(Callee::Method(v, last))
            }
        }
    }

    fn force(&mut self, callee: Callee<'a>) -> Result<V<'a>, EvalError> {
        match callee {
            Callee::Value(v) => Ok(v),
            Callee::Method(v, m) => self.method(v, m, Vec::new()),
            Callee::Builtin(ns, m) => Ok(V::Fn(Rc::new(Func::Builtin(ns, m)))),
            Callee::Global(g) => Ok(V::Fn(Rc::new(Func::Global(g)))),
        }
    }

    fn call(&mut self, callee: Callee<'a>, args: Vec<V<'a>>) -> Result<V<'a>, EvalError> {
        match callee {
            Callee::Value(f) => self.apply(f, args),
            Callee::Method(v, m) => self.method(v, m, args),
            Callee::Builtin(ns, m) => self.apply(V::Fn(Rc::new(Func::Builtin(ns, m))), args),
            Callee::Global(g) => self.apply(V::Fn(Rc::new(Func::Global(g))), args),
        }
    }

    pub(crate) fn apply(&mut self, f: V<'a>, mut args: Vec<V<'a>>) -> Result<V<'a>, EvalError> {
        let V::Fn(func) = f else {
            return rt(format!("{f} is not a function"));
        };
        let arity = match &*func {
            Func::Closure { params, .. } => params.len(),
            Func::Def(d) => d.params.len(),
            Func::Partial(g, prev) => {
                let mut all = prev.clone();
                all.append(&mut args);
                return self.apply(g.clone(), all);
            }
            Func::Builtin(ns, m) => qualified_arity(ns, m).unwrap_or(0),
            Func::Global(g) => GLOBALS.iter().find(|(n, _)| n == g).map_or(0, |(_, a)| *a),
        };
        if args.len() < arity {
            return Ok(V::Fn(Rc::new(Func::Partial(V::Fn(func), args))));
        }
        let extra = args.split_off(arity);
        let result = match &*func {
            Func::Closure {
                params,
                body,
                env,
                module,
            } => {
                self.enter()?;
                let mut local = env.clone();
                for (p, a) in params.iter().zip(args) {
                    local = bind(&local, p, a);
                }
                let r = self.eval(body, &local, *module);
                self.depth -= 1;
                r?
            }
            Func::Def(d) => self.call_def(d, args)?,
            Func::Builtin(ns, m) => self.builtin(ns, m, args)?,
            Func::Global(g) => self.global(g, args)?,
            Func::Partial(..) => unreachable!(),
        };
        if extra.is_empty() {
            Ok(result)
        } else {
            self.apply(result, extra)
        }
    }

    fn enter(&mut self) -> Result<(), EvalError> {
        if self.depth >= self.max_depth {
            return Err(EvalError::DepthExceeded);
        }
        self.depth += 1;
        Ok(())
    }

    pub(crate) fn call_def(&mut self, def: &'a Def, args: Vec<V<'a>>) -> Result<V<'a>, EvalError> {
        if args.len() != def.params.len() {
            return rt(format!("`{}` expects {} arguments, got {}", def.name, def.params.len(), args.len()));
        }
        self.enter()?;
        let mut env: Env<'a> = None;
        for ((name, ty), a) in def.params.iter().zip(args) {
            let a = self.coerce(a, ty)?;
            env = bind(&env, name, a);
        }
        let r = self.eval(&def.body, &env, def.module.as_deref());
        self.depth -= 1;
        let r = r?;
        self.coerce(r, &def.ret)
    }

    fn builtin(&mut self, ns: &'a str, m: &'a str, mut args: Vec<V<'a>>) -> Result<V<'a>, EvalError> {
        match (ns, m) {
            ("List", "replicate") | ("Array", "mkArray") | ("Array", "replicate") => {
                let n = nat_arg(&args[0])?;
                self.tick(n)?;
                let items = vec![args[1].clone(); n];
                Ok(if ns == "List" {
                    V::List(Rc::new(items))
                } else {
                    V::Array(Rc::new(items))
                })
            }
            ("List", "range") | ("Array", "range") => {
                let n = nat_arg(&args[0])?;
                self.tick(n)?;
                let items = (0..n as i128).map(V::Nat).collect();
                Ok(if ns == "List" {
                    V::List(Rc::new(items))
                } else {
                    V::Array(Rc::new(items))
                })
            }
            ("Int", "ofNat") => match &args[0] {
                V::Nat(n) | V::Int(n) => Ok(V::Int(*n)),
                v => rt(format!("Int.ofNat expects a Nat, got {v}")),
            },
            ("String", "mk") => match &args[0] {
                V::List(cs) => chars_to_str(cs),
                v => rt(format!("String.mk expects a List Char, got {v}")),
            },
            ("Char", "ofNat") => {
                let n = nat_arg(&args[0])?;
                Ok(V::Char(u32::try_from(n).ok().and_then(char::from_u32).unwrap_or('\0')))
            }
            _ => {
                let idx = receiver_index(m, args.len());
                let recv = args.remove(idx);
                self.method(recv, m, args)
            }
        }
    }

    fn global(&mut self, g: &str, args: Vec<V<'a>>) -> Result<V<'a>, EvalError> {
        match g {
            "min" | "max" => {
                let ord = compare(&args[0], &args[1])?;
                let take_first = if g == "min" { ord != Ordering::Greater } else { ord != Ordering::Less };
                let (a, b) = (args[0].clone(), args[1].clone());
                Ok(unify_num(if take_first { a } else { b }, &args[0], &args[1]))
            }
            _ => Ok(args.into_iter().next().unwrap_or(V::Unknown)),
        }
    }

    fn coerce(&mut self, v: V<'a>, ty: &Ty) -> Result<V<'a>, EvalError> {
        Ok(match (ty, v) {
            (Ty::Int, V::Int(n) | V::Nat(n)) => V::Int(n),
            (Ty::Nat, V::Nat(n)) => V::Nat(n),
            (Ty::Nat, V::Int(n)) if n >= 0 => V::Nat(n),
            (Ty::Bool | Ty::Prop, v @ (V::Bool(_) | V::Unknown)) => v,
            (Ty::Char, v @ V::Char(_)) => v,
            (Ty::String, v @ V::Str(_)) => v,
            (Ty::List(t), V::List(xs)) => V::List(self.coerce_items(xs, t)?),
            (Ty::Array(t), V::Array(xs)) => V::Array(self.coerce_items(xs, t)?),
            (ty, v) => return rt(format!("type mismatch: {v} is not a {ty}")),
        })
    }

    fn coerce_items(&mut self, xs: Rc<Vec<V<'a>>>, ty: &Ty) -> Result<Rc<Vec<V<'a>>>, EvalError> {
        let already = xs.iter().all(|x| {
            matches!(
                (ty, x),
                (Ty::Int, V::Int(_))
                    | (Ty::Nat, V::Nat(_))
                    | (Ty::Char, V::Char(_))
                    | (Ty::String, V::Str(_))
                    | (Ty::Bool | Ty::Prop, V::Bool(_))
            )
        });
        if already {
            return Ok(xs);
        }
        self.tick(xs.len())?;
        let mut out = Vec::with_capacity(xs.len());
        for x in xs.iter() {
            out.push(self.coerce(x.clone(), ty)?);
        }
        Ok(Rc::new(out))
    }

    fn matches(&mut self, p: &'a Pattern, v: &V<'a>, env: &Env<'a>) -> Result<Option<Env<'a>>, EvalError> {
        Ok(match (p, v) {
            (Pattern::Wild, _) => Some(env.clone()),
            (Pattern::Var(x), v) => Some(bind(env, x, v.clone())),
            (Pattern::Int(n), V::Int(m) | V::Nat(m)) => (n == m).then(|| env.clone()),
            (Pattern::Bool(b), V::Bool(c)) => (b == c).then(|| env.clone()),
            (Pattern::Char(c), V::Char(d)) => (c == d).then(|| env.clone()),
            (Pattern::Str(s), V::Str(t)) => (s.as_str() == &**t).then(|| env.clone()),
            (Pattern::Nil, V::List(xs)) => xs.is_empty().then(|| env.clone()),
            (Pattern::Cons(h, t), V::List(xs)) => {
                if xs.is_empty() {
                    return Ok(None);
                }
                self.tick(xs.len())?;
                let Some(env) = self.matches(h, &xs[0], env)? else {
                    return Ok(None);
                };
                let rest = V::List(Rc::new(xs[1..].to_vec()));
                self.matches(t, &rest, &env)?
            }
            (Pattern::List(ps), V::List(xs)) => {
                if ps.len() != xs.len() {
                    return Ok(None);
                }
                let mut env = env.clone();
                for (p, x) in ps.iter().zip(xs.iter()) {
                    match self.matches(p, x, &env)? {
                        Some(e) => env = e,
                        None => return Ok(None),
                    }
                }
                Some(env)
            }
            (p, v) => return rt(format!("pattern {p:?} cannot match {v}")),
        })
    }

    fn binary(
        &mut self,
        op: BinOp,
        l: &'a Expr,
        r: &'a Expr,
        env: &Env<'a>,
        module: Option<&'a str>,
    ) -> Result<V<'a>, EvalError> {
        // Connectives short-circuit, but an unknown left side still looks at
        // the right side so that `unknown ∧ false` is false.
        match op {
            BinOp::And | BinOp::Or | BinOp::Implies => {
                let a = truth(&self.eval(l, env, module)?)?;
                let decisive = match op {
                    BinOp::And => Some(false),
                    BinOp::Or => Some(true),
                    _ => Some(false),
                };
                if a == decisive {
                    return Ok(V::Bool(op != BinOp::And));
                }
                let b = truth(&self.eval(r, env, module)?)?;
                return Ok(from_truth(match op {
                    BinOp::And => and3(a, b),
                    BinOp::Or => or3(a, b),
                    _ => or3(a.map(|x| !x), b),
                }));
            }
            BinOp::Iff => {
                let a = truth(&self.eval(l, env, module)?)?;
                let b = truth(&self.eval(r, env, module)?)?;
                return Ok(from_truth(match (a, b) {
                    (Some(x), Some(y)) => Some(x == y),
                    _ => None,
                }));
            }
            _ => {}
        }
        let a = self.eval(l, env, module)?;
        let b = self.eval(r, env, module)?;
        match op {
            BinOp::Eq => Ok(from_truth(self.equal(&a, &b)?)),
            BinOp::Ne => Ok(from_truth(self.equal(&a, &b)?.map(|x| !x))),
            BinOp::Lt => Ok(V::Bool(compare(&a, &b)? == Ordering::Less)),
            BinOp::Le => Ok(V::Bool(compare(&a, &b)? != Ordering::Greater)),
            BinOp::Gt => Ok(V::Bool(compare(&a, &b)? == Ordering::Greater)),
            BinOp::Ge => Ok(V::Bool(compare(&a, &b)? != Ordering::Less)),
            BinOp::Mem | BinOp::NotMem => {
                let found = self.contains(&b, &a)?;
                Ok(from_truth(if op == BinOp::Mem { found } else { found.map(|x| !x) }))
            }
            BinOp::Append => self.append(a, b),
            BinOp::Cons => match b {
                V::List(xs) => {
                    self.tick(xs.len())?;
                    let mut out = Vec::with_capacity(xs.len() + 1);
                    out.push(a);
                    out.extend(xs.iter().cloned());
                    Ok(V::List(Rc::new(out)))
                }
                b => rt(format!("cannot cons onto {b}")),
            },
            _ => arith(op, &a, &b),
        }
    }

    fn quantifier(
        &mut self,
        q: Quant,
        var: &'a str,
        domain: &'a Domain,
        body: &'a Expr,
        env: &Env<'a>,
        module: Option<&'a str>,
    ) -> Result<V<'a>, EvalError> {
        let (items, exhaustive): (Vec<V<'a>>, bool) = match domain {
            Domain::In(xs) => match self.eval(xs, env, module)? {
                V::List(xs) | V::Array(xs) => (xs.to_vec(), true),
                V::Str(s) => (s.chars().map(V::Char).collect(), true),
                v => return rt(format!("cannot quantify over {v}")),
            },
            Domain::Lt(n) | Domain::Le(n) => {
                let n = match self.eval(n, env, module)? {
                    V::Nat(n) | V::Int(n) => n,
                    v => return rt(format!("quantifier bound {v} is not a number")),
                };
                let hi = if matches!(domain, Domain::Le(_)) { n + 1 } else { n };
                if hi > self.fuel as i128 {
                    return Err(EvalError::OutOfFuel);
                }
                ((0..hi.max(0)).map(V::Nat).collect(), true)
            }
            Domain::Type(ty) => {
                if self.mode == Mode::Decide {
                    return Err(EvalError::Undecidable(format!("quantifier over all of `{ty}`")));
                }
                match ty {
                    Ty::Nat => ((0..=SAMPLE_BOUND).map(V::Nat).collect(), false),
                    Ty::Int => ((-SAMPLE_BOUND..=SAMPLE_BOUND).map(V::Int).collect(), false),
                    Ty::Bool | Ty::Prop => (vec![V::Bool(false), V::Bool(true)], true),
                    _ => return Err(EvalError::Undecidable(format!("cannot sample `{ty}`"))),
                }
            }
        };
        self.tick(items.len())?;
        let want = q == Quant::Exists;
        let mut unknown = !exhaustive;
        for item in items {
            let local = bind(env, var, item);
            match truth(&self.eval(body, &local, module)?)? {
                Some(b) if b == want => return Ok(V::Bool(want)),
                Some(_) => {}
                None => unknown = true,
            }
        }
        Ok(if unknown { V::Unknown } else { V::Bool(!want) })
    }

    fn equal(&mut self, a: &V<'a>, b: &V<'a>) -> Result<Option<bool>, EvalError> {
        Ok(match (a, b) {
            (V::Unknown, _) | (_, V::Unknown) => None,
            (V::Int(x) | V::Nat(x), V::Int(y) | V::Nat(y)) => Some(x == y),
            (V::Bool(x), V::Bool(y)) => Some(x == y),
            (V::Char(x), V::Char(y)) => Some(x == y),
            (V::Str(x), V::Str(y)) => Some(x == y),
            (V::List(xs), V::List(ys)) | (V::Array(xs), V::Array(ys)) => {
                if xs.len() != ys.len() {
                    return Ok(Some(false));
                }
                self.tick(xs.len())?;
                let mut result = Some(true);
                for (x, y) in xs.iter().zip(ys.iter()) {
                    match self.equal(x, y)? {
                        Some(false) => return Ok(Some(false)),
                        Some(true) => {}
                        None => result = None,
                    }
                }
                result
            }
            (a, b) => return rt(format!("cannot compare {a} with {b}")),
        })
    }

    fn contains(&mut self, xs: &V<'a>, x: &V<'a>) -> Result<Option<bool>, EvalError> {
        let items = match xs {
            V::List(xs) | V::Array(xs) => xs.clone(),
            V::Str(s) => Rc::new(s.chars().map(V::Char).collect()),
            v => return rt(format!("{v} is not a collection")),
        };
        self.tick(items.len())?;
        let mut result = Some(false);
        for y in items.iter() {
            match self.equal(x, y)? {
                Some(true) => return Ok(Some(true)),
                Some(false) => {}
                None => result = None,
            }
        }
        Ok(result)
    }

    fn append(&mut self, a: V<'a>, b: V<'a>) -> Result<V<'a>, EvalError> {
        match (a, b) {
            (V::Str(x), V::Str(y)) => {
                self.tick(x.len() + y.len())?;
                let mut s = String::from(&*x);
                s.push_str(&y);
                Ok(V::Str(s.into()))
            }
            (V::List(x), V::List(y)) => {
                self.tick(x.len() + y.len())?;
                Ok(V::List(Rc::new(x.iter().chain(y.iter()).cloned().collect())))
            }
            (V::Array(x), V::Array(y) | V::List(y)) => {
                self.tick(x.len() + y.len())?;
                Ok(V::Array(Rc::new(x.iter().chain(y.iter()).cloned().collect())))
            }
            (a, b) => rt(format!("cannot append {a} and {b}")),
        }
    }

    fn pred(&mut self, f: &V<'a>, args: Vec<V<'a>>) -> Result<Option<bool>, EvalError> {
        let v = self.apply(f.clone(), args)?;
        truth(&v)
    }

    fn method(&mut self, recv: V<'a>, m: &str, args: Vec<V<'a>>) -> Result<V<'a>, EvalError> {
        self.tick(0)?;
        let Some(arity) = method_arity(m) else {
            return rt(format!("unknown method `{m}`"));
        };
        if args.len() != arity {
            return rt(format!("`{m}` expects {arity} arguments, got {}", args.len()));
        }
        match recv {
            V::List(xs) => self.seq_method(xs, false, m, args),
            V::Array(xs) => self.seq_method(xs, true, m, args),
            V::Str(s) => self.str_method(s, m, args),
            V::Char(c) => char_method(c, m),
            V::Int(_) | V::Nat(_) => num_method(&recv, m, &args),
            v => rt(format!("no method `{m}` on {v}")),
        }
    }

    fn seq_method(&mut self, xs: Rc<Vec<V<'a>>>, array: bool, m: &str, args: Vec<V<'a>>) -> Result<V<'a>, EvalError> {
        let wrap = |items: Vec<V<'a>>| {
            if array {
                V::Array(Rc::new(items))
            } else {
                V::List(Rc::new(items))
            }
        };
        let n = xs.len();
        match m {
            "length" | "size" => Ok(V::Nat(n as i128)),
            "isEmpty" => Ok(V::Bool(n == 0)),
            "reverse" => {
                self.tick(n)?;
                Ok(wrap(xs.iter().rev().cloned().collect()))
            }
            "head!" | "front" => xs.first().cloned().map_or_else(|| rt("head! of an empty list"), Ok),
            "getLast!" | "back!" | "back" => xs.last().cloned().map_or_else(|| rt("getLast! of an empty list"), Ok),
            "tail" => {
                self.tick(n)?;
                Ok(wrap(xs.iter().skip(1).cloned().collect()))
            }
            "take" | "drop" => {
                let k = nat_arg(&args[0])?.min(n);
                self.tick(n)?;
                Ok(wrap(if m == "take" { xs[..k].to_vec() } else { xs[k..].to_vec() }))
            }
            "get!" => {
                let i = nat_arg(&args[0])?;
                xs.get(i).cloned().map_or_else(|| rt(format!("index {i} out of bounds for length {n}")), Ok)
            }
            "getD" => {
                let i = nat_arg(&args[0])?;
                Ok(xs.get(i).cloned().unwrap_or_else(|| args[1].clone()))
            }
            "set" => {
                let i = nat_arg(&args[0])?;
                self.tick(n)?;
                let mut out = xs.to_vec();
                if i < n {
                    out[i] = args[1].clone();
                }
                Ok(wrap(out))
            }
            "push" => {
                self.tick(n)?;
                let mut out = xs.to_vec();
                out.push(args[0].clone());
                Ok(wrap(out))
            }
            "append" => self.append(wrap(xs.to_vec()), args[0].clone()),
            "map" => {
                self.tick(n)?;
                let mut out = Vec::with_capacity(n);
                for x in xs.iter() {
                    out.push(self.apply(args[0].clone(), vec![x.clone()])?);
                }
                Ok(wrap(out))
            }
            "filter" => {
                self.tick(n)?;
                let mut out = Vec::new();
                for x in xs.iter() {
                    match self.pred(&args[0], vec![x.clone()])? {
                        Some(true) => out.push(x.clone()),
                        Some(false) => {}
                        None => return Err(EvalError::Undecidable("filter predicate".into())),
                    }
                }
                Ok(wrap(out))
            }
            "foldl" => {
                self.tick(n)?;
                let mut acc = args[1].clone();
                for x in xs.iter() {
                    acc = self.apply(args[0].clone(), vec![acc, x.clone()])?;
                }
                Ok(acc)
            }
            "foldr" => {
                self.tick(n)?;
                let mut acc = args[1].clone();
                for x in xs.iter().rev() {
                    acc = self.apply(args[0].clone(), vec![x.clone(), acc])?;
                }
                Ok(acc)
            }
            "all" | "any" => {
                self.tick(n)?;
                let want = m == "any";
                let mut result = Some(!want);
                for x in xs.iter() {
                    match self.pred(&args[0], vec![x.clone()])? {
                        Some(b) if b == want => return Ok(V::Bool(want)),
                        Some(_) => {}
                        None => result = None,
                    }
                }
                Ok(from_truth(result))
            }
            "contains" | "elem" => Ok(from_truth(self.contains(&wrap(xs.to_vec()), &args[0])?)),
            "count" => {
                self.tick(n)?;
                let mut k = 0;
                for x in xs.iter() {
                    if self.equal(x, &args[0])? == Some(true) {
                        k += 1;
                    }
                }
                Ok(V::Nat(k))
            }
            "countP" => {
                self.tick(n)?;
                let mut k = 0;
                for x in xs.iter() {
                    if self.pred(&args[0], vec![x.clone()])? == Some(true) {
                        k += 1;
                    }
                }
                Ok(V::Nat(k))
            }
            "sum" => {
                self.tick(n)?;
                let mut acc = V::Nat(0);
                for x in xs.iter() {
                    acc = arith(BinOp::Add, &acc, x)?;
                }
                Ok(acc)
            }
            "Pairwise" | "Sorted" => {
                self.tick(n * n)?;
                let mut result = Some(true);
                for i in 0..n {
                    for j in i + 1..n {
                        match self.pred(&args[0], vec![xs[i].clone(), xs[j].clone()])? {
                            Some(false) => return Ok(V::Bool(false)),
                            Some(true) => {}
                            None => result = None,
                        }
                    }
                }
                Ok(from_truth(result))
            }
            "isPerm" | "Perm" => {
                let ys = match &args[0] {
                    V::List(ys) | V::Array(ys) => ys.clone(),
                    v => return rt(format!("isPerm expects a list, got {v}")),
                };
                if ys.len() != n {
                    return Ok(V::Bool(false));
                }
                self.tick(n * n)?;
                let mut used = vec![false; n];
                for x in xs.iter() {
                    let mut found = false;
                    for (j, y) in ys.iter().enumerate() {
                        if !used[j] && self.equal(x, y)? == Some(true) {
                            used[j] = true;
                            found = true;
                            break;
                        }
                    }
                    if !found {
                        return Ok(V::Bool(false));
                    }
                }
                Ok(V::Bool(true))
            }
            "eraseDups" | "Nodup" => {
                self.tick(n * n)?;
                let mut out: Vec<V<'a>> = Vec::new();
                for x in xs.iter() {
                    let mut seen = false;
                    for y in &out {
                        if self.equal(x, y)? == Some(true) {
                            seen = true;
                            break;
                        }
                    }
                    if !seen {
                        out.push(x.clone());
                    }
                }
                if m == "Nodup" {
                    Ok(V::Bool(out.len() == n))
                } else {
                    Ok(wrap(out))
                }
            }
            "zipWith" => {
                let ys = match &args[1] {
                    V::List(ys) | V::Array(ys) => ys.clone(),
                    v => return rt(format!("zipWith expects a list, got {v}")),
                };
                self.tick(n)?;
                let mut out = Vec::new();
                for (x, y) in xs.iter().zip(ys.iter()) {
                    out.push(self.apply(args[0].clone(), vec![x.clone(), y.clone()])?);
                }
                Ok(wrap(out))
            }
            "toList" => Ok(V::List(xs)),
            "toArray" => Ok(V::Array(xs)),
            "asString" => chars_to_str(&xs),
            _ => rt(format!("no method `{m}` on {}", if array { "Array" } else { "List" })),
        }
    }

    fn str_method(&mut self, s: Rc<str>, m: &str, args: Vec<V<'a>>) -> Result<V<'a>, EvalError> {
        let chars = || s.chars().map(V::Char).collect::<Vec<_>>();
        match m {
            "length" => Ok(V::Nat(s.chars().count() as i128)),
            "isEmpty" => Ok(V::Bool(s.is_empty())),
            "toList" | "data" => {
                self.tick(s.len())?;
                Ok(V::List(Rc::new(chars())))
            }
            "front" => Ok(V::Char(s.chars().next().unwrap_or('A'))),
            "back" => Ok(V::Char(s.chars().last().unwrap_or('A'))),
            "push" => match &args[0] {
                V::Char(c) => {
                    self.tick(s.len())?;
                    let mut out = String::from(&*s);
                    out.push(*c);
                    Ok(V::Str(out.into()))
                }
                v => rt(format!("String.push expects a Char, got {v}")),
            },
            "append" => self.append(V::Str(s), args[0].clone()),
            "all" | "any" | "contains" | "count" | "countP" | "map" | "filter" | "foldl" | "foldr" => {
                let r = self.seq_method(Rc::new(chars()), false, m, args)?;
                match (m, r) {
                    ("map" | "filter", V::List(cs)) => chars_to_str(&cs),
                    (_, r) => Ok(r),
                }
            }
            _ => rt(format!("no method `{m}` on String")),
        }
    }
}

fn char_method<'a>(c: char, m: &str) -> Result<V<'a>, EvalError> {
    Ok(match m {
        "isDigit" => V::Bool(c.is_ascii_digit()),
        "isAlpha" => V::Bool(c.is_ascii_alphabetic()),
        "isLower" => V::Bool(c.is_ascii_lowercase()),
        "isUpper" => V::Bool(c.is_ascii_uppercase()),
        "isAlphanum" => V::Bool(c.is_ascii_alphanumeric()),
        "isWhitespace" => V::Bool(matches!(c, ' ' | '\t' | '\n' | '\r')),
        "toNat" => V::Nat(c as i128),
        "toUpper" => V::Char(c.to_ascii_uppercase()),
        "toLower" => V::Char(c.to_ascii_lowercase()),
        _ => return rt(format!("no method `{m}` on Char")),
    })
}

fn num_method<'a>(recv: &V<'a>, m: &str, args: &[V<'a>]) -> Result<V<'a>, EvalError> {
    let (n, nat) = match recv {
        V::Nat(n) => (*n, true),
        V::Int(n) => (*n, false),
        _ => unreachable!(),
    };
    let mk = |x: i128| if nat { V::Nat(x) } else { V::Int(x) };
    Ok(match m {
        "toNat" => V::Nat(n.max(0)),
        "natAbs" => V::Nat(n.abs()),
        "succ" => mk(n + 1),
        "pred" => mk(if nat { (n - 1).max(0) } else { n - 1 }),
        "min" | "max" => {
            let ord = compare(recv, &args[0])?;
            let first = if m == "min" { ord != Ordering::Greater } else { ord != Ordering::Less };
            unify_num(if first { recv.clone() } else { args[0].clone() }, recv, &args[0])
        }
        _ => return rt(format!("no method `{m}` on {}", if nat { "Nat" } else { "Int" })),
    })
}

fn unify_num<'a>(v: V<'a>, a: &V<'a>, b: &V<'a>) -> V<'a> {
    match v {
        V::Nat(n) if matches!(a, V::Int(_)) || matches!(b, V::Int(_)) => V::Int(n),
        v => v,
    }
}

fn chars_to_str<'a>(cs: &[V<'a>]) -> Result<V<'a>, EvalError> {
    let mut s = String::with_capacity(cs.len());
    for c in cs {
        match c {
            V::Char(c) => s.push(*c),
            v => return rt(format!("{v} is not a Char")),
        }
    }
    Ok(V::Str(s.into()))
}

fn nat_arg(v: &V<'_>) -> Result<usize, EvalError> {
    match v {
        V::Nat(n) | V::Int(n) if *n >= 0 => usize::try_from(*n).map_err(|_| EvalError::OutOfFuel),
        V::Int(_) => rt("expected a natural number"),
        v => rt(format!("expected a natural number, got {v}")),
    }
}

pub(crate) fn truth(v: &V<'_>) -> Result<Option<bool>, EvalError> {
    match v {
        V::Bool(b) => Ok(Some(*b)),
        V::Unknown => Ok(None),
        v => rt(format!("{v} is not a proposition")),
    }
}

fn from_truth<'a>(b: Option<bool>) -> V<'a> {
    b.map_or(V::Unknown, V::Bool)
}

pub(crate) fn to_truth(v: &V<'_>) -> Result<Truth, EvalError> {
    truth(v).map(Truth::from_opt)
}

fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

fn compare(a: &V<'_>, b: &V<'_>) -> Result<Ordering, EvalError> {
    Ok(match (a, b) {
        (V::Int(x) | V::Nat(x), V::Int(y) | V::Nat(y)) => x.cmp(y),
        (V::Char(x), V::Char(y)) => x.cmp(y),
        (V::Str(x), V::Str(y)) => x.cmp(y),
        (V::List(xs), V::List(ys)) | (V::Array(xs), V::Array(ys)) => {
            for (x, y) in xs.iter().zip(ys.iter()) {
                match compare(x, y)? {
                    Ordering::Equal => {}
                    o => return Ok(o),
                }
            }
            xs.len().cmp(&ys.len())
        }
        (a, b) => return rt(format!("cannot order {a} and {b}")),
    })
}

fn arith<'a>(op: BinOp, a: &V<'a>, b: &V<'a>) -> Result<V<'a>, EvalError> {
    let (x, y, nat) = match (a, b) {
        (V::Nat(x), V::Nat(y)) => (*x, *y, true),
        (V::Int(x) | V::Nat(x), V::Int(y) | V::Nat(y)) => (*x, *y, false),
        _ => return rt(format!("cannot apply {op:?} to {a} and {b}")),
    };
    let overflow = || EvalError::Runtime("arithmetic overflow".into());
    let r = match op {
        BinOp::Add => x.checked_add(y).ok_or_else(overflow)?,
        BinOp::Sub if nat => (x - y).max(0),
        BinOp::Sub => x.checked_sub(y).ok_or_else(overflow)?,
        BinOp::Mul => x.checked_mul(y).ok_or_else(overflow)?,
        BinOp::Div if y == 0 => 0,
        BinOp::Div => x.div_euclid(y),
        BinOp::Mod if y == 0 => x,
        BinOp::Mod => x.rem_euclid(y),
        BinOp::Pow => {
            if y < 0 {
                return rt("negative exponent");
            }
            let e = u32::try_from(y).map_err(|_| overflow())?;
            x.checked_pow(e).ok_or_else(overflow)?
        }
        _ => unreachable!("non-arithmetic operator"),
    };
    Ok(if nat { V::Nat(r) } else { V::Int(r) })
}

pub(crate) fn from_value<'a>(v: &Value) -> V<'a> {
    let ints = |xs: &[i64]| xs.iter().map(|&x| V::Int(x as i128)).collect::<Vec<_>>();
    let nats = |xs: &[u64]| xs.iter().map(|&x| V::Nat(x as i128)).collect::<Vec<_>>();
    match v {
        Value::Int(x) => V::Int(*x as i128),
        Value::Nat(x) => V::Nat(*x as i128),
        Value::ListInt(xs) => V::List(Rc::new(ints(xs))),
        Value::ArrayInt(xs) => V::Array(Rc::new(ints(xs))),
        Value::ListNat(xs) => V::List(Rc::new(nats(xs))),
        Value::ArrayNat(xs) => V::Array(Rc::new(nats(xs))),
        Value::ListChar(cs) => V::List(Rc::new(cs.iter().map(|&c| V::Char(c)).collect())),
        Value::String(s) => V::Str(s.as_str().into()),
    }
}

pub(crate) fn to_value(v: &V<'_>, ty: ValueType) -> Result<Value, EvalError> {
    let bad = || EvalError::Runtime(format!("result {v} does not fit {ty}"));
    let int = |x: &V<'_>| match x {
        V::Int(n) | V::Nat(n) => i64::try_from(*n).ok(),
        _ => None,
    };
    let nat = |x: &V<'_>| match x {
        V::Int(n) | V::Nat(n) => u64::try_from(*n).ok(),
        _ => None,
    };
    let items = |want_array: bool| match (v, want_array) {
        (V::List(xs), false) | (V::Array(xs), true) => Ok(xs.clone()),
        _ => Err(bad()),
    };
    Ok(match ty {
        ValueType::Int => Value::Int(int(v).ok_or_else(bad)?),
        ValueType::Nat => Value::Nat(nat(v).ok_or_else(bad)?),
        ValueType::ListInt | ValueType::ArrayInt => {
            let xs = items(ty.is_array())?;
            let out = xs.iter().map(int).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
            if ty.is_array() {
                Value::ArrayInt(out)
            } else {
                Value::ListInt(out)
            }
        }
        ValueType::ListNat | ValueType::ArrayNat => {
            let xs = items(ty.is_array())?;
            let out = xs.iter().map(nat).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
            if ty.is_array() {
                Value::ArrayNat(out)
            } else {
                Value::ListNat(out)
            }
        }
        ValueType::ListChar => {
            let xs = items(false)?;
            let out = xs
                .iter()
                .map(|x| match x {
                    V::Char(c) => Some(*c),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(bad)?;
            Value::ListChar(out)
        }
        ValueType::String => match v {
            V::Str(s) => Value::String(s.to_string()),
            _ => return Err(bad()),
        },
    })
}
