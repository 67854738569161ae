use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::*;
use super::eval::{from_value, method_arity, qualified_arity, to_truth, to_value, Machine, GLOBALS};
use super::parser::{parse_defs, parse_expr};
use super::{EvalError, Limits, Mode, ParseError, Truth};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
    #[error("{message} (at byte {offset})")]
    Check { offset: usize, message: String },
}

/// A checked top-level definition.
#[derive(Clone, Debug, PartialEq)]
pub struct Def {
    /// Fully qualified name, e.g. `cand1.sortSpec`.
    pub name: String,
    pub module: Option<String>,
    pub params: Vec<(String, Ty)>,
    pub ret: Ty,
    pub body: Expr,
    /// The definition's own source text.
    pub source: String,
}

/// A set of definitions, optionally grouped into modules. Names inside a
/// module resolve module-local definitions first, then global ones.
#[derive(Clone, Debug, Default)]
pub struct Program {
    defs: BTreeMap<String, Def>,
}

fn qualify(module: Option<&str>, name: &str) -> String {
    match module {
        Some(m) => format!("{m}.{name}"),
        None => name.to_string(),
    }
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses and checks `source`, adding its definitions under `module`.
    /// Nothing is added if any definition fails to check. Returns the
    /// qualified names defined.
    pub fn define(&mut self, module: Option<&str>, source: &str) -> Result<Vec<String>, CompileError> {
        let parsed = parse_defs(source)?;
        let mut staged = self.clone();
        let mut names = Vec::new();
        for d in parsed {
            let name = qualify(module, &d.name);
            if names.contains(&name) {
                return Err(CompileError::Check {
                    offset: d.span.start,
                    message: format!("`{}` is defined twice", d.name),
                });
            }
            let source = source[d.span.start..d.span.end].to_string();
            staged.defs.insert(
                name.clone(),
                Def {
                    name: name.clone(),
                    module: module.map(String::from),
                    params: d.params,
                    ret: d.ret,
                    body: d.body,
                    source,
                },
            );
            names.push(name);
        }
        for name in &names {
            let def = &staged.defs[name];
            let mut checker = Checker {
                prog: &staged,
                module,
                scope: def.params.iter().map(|(p, _)| p.clone()).collect(),
            };
            checker.expr(&def.body, None)?;
        }
        *self = staged;
        Ok(names)
    }

    pub fn get(&self, name: &str) -> Option<&Def> {
        self.defs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }

    /// Removes every definition of `module`.
    pub fn remove_module(&mut self, module: &str) {
        self.defs.retain(|_, d| d.module.as_deref() != Some(module));
    }

    /// Finds the definition named by the longest prefix of `segs`, looking in
    /// `module` first. Returns it with the number of segments consumed.
    pub(crate) fn resolve_def(&self, module: Option<&str>, segs: &[String]) -> Option<(&Def, usize)> {
        for k in (1..=segs.len()).rev() {
            let path = segs[..k].join(".");
            if let Some(m) = module {
                if let Some(d) = self.defs.get(&qualify(Some(m), &path)) {
                    return Some((d, k));
                }
            }
            if let Some(d) = self.defs.get(&path) {
                return Some((d, k));
            }
        }
        None
    }

    /// Parses and checks an expression in the scope of `module`.
    pub fn compile_expr(&self, src: &str, module: Option<&str>) -> Result<Expr, CompileError> {
        let e = parse_expr(src)?;
        Checker {
            prog: self,
            module,
            scope: Vec::new(),
        }
        .expr(&e, None)?;
        Ok(e)
    }

    /// Evaluates a closed proposition.
    pub fn eval_truth(&self, e: &Expr, module: Option<&str>, mode: Mode, limits: Limits) -> Result<Truth, EvalError> {
        let mut m = Machine::new(self, limits, mode);
        let v = m.eval_top(e, module)?;
        to_truth(&v)
    }

    /// Calls a definition on concrete arguments and converts its result to a
    /// [`Value`] of the definition's declared result type.
    pub fn call(&self, name: &str, args: &[Value], limits: Limits) -> Result<Value, EvalError> {
        let def = self.lookup(name)?;
        let Some(ty) = def.ret.to_value_type() else {
            return Err(EvalError::Runtime(format!("`{name}` returns {}, not a data value", def.ret)));
        };
        let mut m = Machine::new(self, limits, Mode::Decide);
        let v = m.call_def(def, args.iter().map(from_value).collect())?;
        to_value(&v, ty)
    }

    /// Calls a predicate definition on concrete arguments.
    pub fn call_truth(&self, name: &str, args: &[Value], mode: Mode, limits: Limits) -> Result<Truth, EvalError> {
        let def = self.lookup(name)?;
        let mut m = Machine::new(self, limits, mode);
        let v = m.call_def(def, args.iter().map(from_value).collect())?;
        to_truth(&v)
    }

    fn lookup(&self, name: &str) -> Result<&Def, EvalError> {
        self.defs
            .get(name)
            .ok_or_else(|| EvalError::Runtime(format!("unknown definition `{name}`")))
    }
}

struct Checker<'p> {
    prog: &'p Program,
    module: Option<&'p str>,
    scope: Vec<String>,
}

fn err<T>(e: &Expr, message: String) -> Result<T, CompileError> {
    Err(CompileError::Check {
        offset: e.span.start,
        message,
    })
}

/// Whether a literal argument can inhabit `ty`. Non-literals are accepted.
fn literal_fits(e: &Expr, ty: &Ty) -> bool {
    match (&e.kind, ty) {
        (ExprKind::Int(_), t) => matches!(t, Ty::Int | Ty::Nat),
        (ExprKind::Neg(inner), t) if matches!(inner.kind, ExprKind::Int(_)) => *t == Ty::Int,
        (ExprKind::Str(_), t) => *t == Ty::String,
        (ExprKind::Char(_), t) => *t == Ty::Char,
        (ExprKind::Bool(_), t) => matches!(t, Ty::Bool | Ty::Prop),
        (ExprKind::List(items), Ty::List(t)) | (ExprKind::Array(items), Ty::Array(t)) => {
            items.iter().all(|i| literal_fits(i, t))
        }
        (ExprKind::List(_) | ExprKind::Array(_), _) => false,
        _ => true,
    }
}

impl Checker<'_> {
    fn in_scope(&self, name: &str) -> bool {
        self.scope.iter().any(|s| s == name)
    }

    fn methods(&self, e: &Expr, segs: &[String]) -> Result<(), CompileError> {
        for m in segs {
            if method_arity(m).is_none() {
                return err(e, format!("unknown constant or method `{m}`"));
            }
        }
        Ok(())
    }

    fn name(&self, e: &Expr, segs: &[String], args: Option<&[Expr]>) -> Result<(), CompileError> {
        let argc = args.map_or(0, <[Expr]>::len);
        if self.in_scope(&segs[0]) {
            return self.methods(e, &segs[1..]);
        }
        if let Some((def, used)) = self.prog.resolve_def(self.module, segs) {
            if used == segs.len() {
                if argc > def.params.len() {
                    return err(
                        e,
                        format!("function `{}` expects {} arguments, got {argc}", def.name, def.params.len()),
                    );
                }
                if let Some(args) = args {
                    for (a, (p, ty)) in args.iter().zip(&def.params) {
                        if !literal_fits(a, ty) {
                            return err(a, format!("type mismatch: argument `{p}` of `{}` has type {ty}", def.name));
                        }
                    }
                }
            }
            return self.methods(e, &segs[used..]);
        }
        if segs.len() == 2 {
            if let Some(n) = qualified_arity(&segs[0], &segs[1]) {
                if argc > n {
                    return err(e, format!("`{}` expects {n} arguments, got {argc}", segs.join(".")));
                }
                return Ok(());
            }
        }
        if segs.len() == 1 && GLOBALS.iter().any(|(g, _)| *g == segs[0]) {
            return Ok(());
        }
        err(e, format!("unknown identifier `{}`", segs.join(".")))
    }

    fn scoped<R>(&mut self, names: impl IntoIterator<Item = String>, f: impl FnOnce(&mut Self) -> R) -> R {
        let before = self.scope.len();
        self.scope.extend(names);
        let r = f(self);
        self.scope.truncate(before);
        r
    }

    fn expr(&mut self, e: &Expr, args: Option<&[Expr]>) -> Result<(), CompileError> {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Char(_) | ExprKind::Bool(_) => Ok(()),
            ExprKind::Name(segs) => self.name(e, segs, args),
            ExprKind::List(items) | ExprKind::Array(items) => items.iter().try_for_each(|i| self.expr(i, None)),
            ExprKind::App(head, xs) => {
                self.expr(head, Some(xs))?;
                xs.iter().try_for_each(|x| self.expr(x, None))
            }
            ExprKind::Method(recv, m) => {
                if method_arity(m).is_none() {
                    return err(e, format!("unknown method `{m}`"));
                }
                self.expr(recv, None)
            }
            ExprKind::Index(xs, i) => {
                self.expr(xs, None)?;
                self.expr(i, None)
            }
            ExprKind::Lambda(params, body) => self.scoped(params.iter().cloned(), |c| c.expr(body, None)),
            ExprKind::If(c, t, f) => {
                self.expr(c, None)?;
                self.expr(t, None)?;
                self.expr(f, None)
            }
            ExprKind::Match(scrutinees, arms) => {
                scrutinees.iter().try_for_each(|s| self.expr(s, None))?;
                for arm in arms {
                    let mut vars = Vec::new();
                    for p in &arm.patterns {
                        pattern_vars(p, &mut vars);
                    }
                    self.scoped(vars, |c| c.expr(&arm.body, None))?;
                }
                Ok(())
            }
            ExprKind::Let(name, value, body) => {
                self.expr(value, None)?;
                self.scoped([name.clone()], |c| c.expr(body, None))
            }
            ExprKind::Not(x) | ExprKind::Neg(x) | ExprKind::Coe(x) | ExprKind::Ascribe(x, _) => self.expr(x, None),
            ExprKind::Bin(_, l, r) => {
                self.expr(l, None)?;
                self.expr(r, None)
            }
            ExprKind::Quant(_, var, domain, body) => {
                match domain {
                    Domain::In(d) | Domain::Lt(d) | Domain::Le(d) => self.expr(d, None)?,
                    Domain::Type(_) => {}
                }
                self.scoped([var.clone()], |c| c.expr(body, None))
            }
        }
    }
}

fn pattern_vars(p: &Pattern, out: &mut Vec<String>) {
    match p {
        Pattern::Var(v) => out.push(v.clone()),
        Pattern::Cons(h, t) => {
            pattern_vars(h, out);
            pattern_vars(t, out);
        }
        Pattern::List(ps) => ps.iter().for_each(|p| pattern_vars(p, out)),
        _ => {}
    }
}
