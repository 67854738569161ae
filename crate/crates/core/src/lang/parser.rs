use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;

/// Parses a sequence of `def`s.
pub fn parse_defs(src: &str) -> Result<Vec<DefSyntax>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut defs = Vec::new();
    while !p.at_end() {
        defs.push(p.def()?);
    }
    Ok(defs)
}

/// Parses a single expression spanning the whole input.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Parses a type such as `List Nat`.
pub fn parse_type(src: &str) -> Result<Ty, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(t)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    /// Placeholder counters for `(· op ·)` sections, one per open paren.
    cdots: Vec<usize>,
    /// `(line, col)` of enclosing `let`s: a token on a later line at or left
    /// of that column ends the bound expression.
    layout: Vec<(u32, u32)>,
}

fn binop(tok: &Tok) -> Option<(BinOp, u8, bool)> {
    // (operator, precedence, right-associative)
    Some(match tok {
        Tok::Iff => (BinOp::Iff, 20, false),
        Tok::Arrow => (BinOp::Implies, 25, true),
        Tok::Or => (BinOp::Or, 30, true),
        Tok::And => (BinOp::And, 35, true),
        Tok::Eq => (BinOp::Eq, 50, false),
        Tok::Ne => (BinOp::Ne, 50, false),
        Tok::Lt => (BinOp::Lt, 50, false),
        Tok::Le => (BinOp::Le, 50, false),
        Tok::Gt => (BinOp::Gt, 50, false),
        Tok::Ge => (BinOp::Ge, 50, false),
        Tok::Mem => (BinOp::Mem, 50, false),
        Tok::NotMem => (BinOp::NotMem, 50, false),
        Tok::Append => (BinOp::Append, 65, false),
        Tok::Plus => (BinOp::Add, 65, false),
        Tok::Minus => (BinOp::Sub, 65, false),
        Tok::Cons => (BinOp::Cons, 67, true),
        Tok::Star => (BinOp::Mul, 70, false),
        Tok::Slash => (BinOp::Div, 70, false),
        Tok::Percent => (BinOp::Mod, 70, false),
        Tok::Caret => (BinOp::Pow, 75, true),
        _ => return None,
    })
}

const NOT_PREC: u8 = 50;
const NEG_PREC: u8 = 75;

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        Ok(Self {
            src,
            toks: lex(src)?,
            pos: 0,
            cdots: Vec::new(),
            layout: Vec::new(),
        })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        t
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |t| t.start)
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn error(&self, message: &str) -> ParseError {
        let found = match self.peek() {
            Some(_) => {
                let t = &self.toks[self.pos];
                format!("{message} (found `{}`)", &self.src[t.start..t.end])
            }
            None => format!("{message} (found end of input)"),
        };
        ParseError::at(self.src, self.offset(), &found)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<Token, ParseError> {
        if self.peek() == Some(tok) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&format!("expected {what}"))),
        }
    }

    fn at_layout_boundary(&self) -> bool {
        match (self.layout.last(), self.toks.get(self.pos)) {
            (Some(&(line, col)), Some(t)) => t.line > line && t.col <= col,
            _ => false,
        }
    }

    fn span_from(&self, start: usize) -> Span {
        Span {
            start,
            end: self.prev_end(),
        }
    }

    fn def(&mut self) -> Result<DefSyntax, ParseError> {
        let start = self.expect(&Tok::Def, "`def`")?.start;
        let name = self.ident("a definition name")?;
        if name.contains('.') || name.ends_with('!') || name.ends_with('?') {
            return Err(ParseError::at(self.src, start, &format!("unsupported definition name `{name}`")));
        }
        let mut params = Vec::new();
        while self.eat(&Tok::LParen) {
            let mut names = Vec::new();
            while let Some(Tok::Ident(_)) = self.peek() {
                names.push(self.ident("a parameter name")?);
            }
            if names.is_empty() {
                return Err(self.error("expected a parameter name"));
            }
            self.expect(&Tok::Colon, "`:`")?;
            let ty = self.ty()?;
            self.expect(&Tok::RParen, "`)`")?;
            for n in names {
                params.push((n, ty.clone()));
            }
        }
        self.expect(&Tok::Colon, "`:` and a result type")?;
        let ret = self.ty()?;
        self.expect(&Tok::ColonEq, "`:=`")?;
        let body = self.expr()?;
        Ok(DefSyntax {
            name,
            params,
            ret,
            body,
            span: self.span_from(start),
        })
    }

    fn ty(&mut self) -> Result<Ty, ParseError> {
        if self.eat(&Tok::LParen) {
            let t = self.ty()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(t);
        }
        let name = self.ident("a type")?;
        Ok(match name.as_str() {
            "Int" => Ty::Int,
            "Nat" => Ty::Nat,
            "Bool" => Ty::Bool,
            "Prop" => Ty::Prop,
            "Char" => Ty::Char,
            "String" => Ty::String,
            "List" => Ty::List(Box::new(self.ty_atom()?)),
            "Array" => Ty::Array(Box::new(self.ty_atom()?)),
            _ => {
                self.pos -= 1;
                return Err(self.error("unsupported type"));
            }
        })
    }

    fn ty_atom(&mut self) -> Result<Ty, ParseError> {
        if self.peek() == Some(&Tok::LParen) {
            return self.ty();
        }
        let t = self.ty()?;
        if matches!(t, Ty::List(_) | Ty::Array(_)) {
            return Err(self.error("nested container types need parentheses"));
        }
        Ok(t)
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(0)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let start = self.offset();
        let mut lhs = self.prefix()?;
        loop {
            if self.at_layout_boundary() {
                break;
            }
            let Some((op, prec, right)) = self.peek().and_then(binop) else {
                break;
            };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(if right { prec } else { prec + 1 })?;
            lhs = Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), self.span_from(start));
            if prec == 50 && self.peek().and_then(binop).is_some_and(|(_, p, _)| p == 50) {
                return Err(self.error("comparison operators do not chain"));
            }
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                let e = self.binary(NOT_PREC)?;
                Ok(Expr::new(ExprKind::Not(Box::new(e)), self.span_from(start)))
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                let e = self.binary(NEG_PREC)?;
                Ok(Expr::new(ExprKind::Neg(Box::new(e)), self.span_from(start)))
            }
            Some(Tok::Fun | Tok::If | Tok::Match | Tok::Let | Tok::Forall | Tok::Exists) => self.leading(),
            _ => self.application(),
        }
    }

    /// Forms that extend as far right as possible.
    fn leading(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        let tok = self.bump().tok;
        let kind = match tok {
            Tok::Fun => {
                let mut params = Vec::new();
                loop {
                    match self.peek() {
                        Some(Tok::Ident(_)) => params.push(self.ident("a parameter")?),
                        Some(Tok::LParen) => {
                            self.pos += 1;
                            let mut names = Vec::new();
                            while let Some(Tok::Ident(_)) = self.peek() {
                                names.push(self.ident("a parameter")?);
                            }
                            if self.eat(&Tok::Colon) {
                                self.ty()?;
                            }
                            self.expect(&Tok::RParen, "`)`")?;
                            params.extend(names);
                        }
                        _ => break,
                    }
                }
                if params.is_empty() {
                    return Err(self.error("expected lambda parameters"));
                }
                self.expect(&Tok::FatArrow, "`=>`")?;
                ExprKind::Lambda(params, Box::new(self.expr()?))
            }
            Tok::If => {
                let c = self.expr()?;
                self.expect(&Tok::Then, "`then`")?;
                let t = self.expr()?;
                self.expect(&Tok::Else, "`else`")?;
                let e = self.expr()?;
                ExprKind::If(Box::new(c), Box::new(t), Box::new(e))
            }
            Tok::Match => {
                let mut scrutinees = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    scrutinees.push(self.expr()?);
                }
                self.expect(&Tok::With, "`with`")?;
                let mut arms = Vec::new();
                while self.eat(&Tok::Bar) {
                    let mut patterns = vec![self.pattern()?];
                    while self.eat(&Tok::Comma) {
                        patterns.push(self.pattern()?);
                    }
                    if patterns.len() != scrutinees.len() {
                        return Err(self.error("pattern count does not match the scrutinees"));
                    }
                    self.expect(&Tok::FatArrow, "`=>`")?;
                    let body = self.expr()?;
                    arms.push(Arm { patterns, body });
                }
                if arms.is_empty() {
                    return Err(self.error("expected match arms"));
                }
                ExprKind::Match(scrutinees, arms)
            }
            Tok::Let => {
                let let_tok = &self.toks[self.pos - 1];
                let anchor = (let_tok.line, let_tok.col);
                let name = self.ident("a binding name")?;
                if self.eat(&Tok::Colon) {
                    self.ty()?;
                }
                self.expect(&Tok::ColonEq, "`:=`")?;
                self.layout.push(anchor);
                let value = self.expr();
                self.layout.pop();
                let value = value?;
                if !self.eat(&Tok::Semi) {
                    self.eat(&Tok::In);
                }
                let body = self.expr()?;
                ExprKind::Let(name, Box::new(value), Box::new(body))
            }
            Tok::Forall | Tok::Exists => {
                let q = if tok == Tok::Forall { Quant::Forall } else { Quant::Exists };
                let parens = self.eat(&Tok::LParen);
                let var = self.ident("a bound variable")?;
                let domain = match self.peek() {
                    Some(Tok::Mem) => {
                        self.pos += 1;
                        Domain::In(Box::new(self.expr()?))
                    }
                    Some(Tok::Lt) => {
                        self.pos += 1;
                        Domain::Lt(Box::new(self.expr()?))
                    }
                    Some(Tok::Le) => {
                        self.pos += 1;
                        Domain::Le(Box::new(self.expr()?))
                    }
                    Some(Tok::Colon) => {
                        self.pos += 1;
                        Domain::Type(self.ty()?)
                    }
                    _ => return Err(self.error("expected `∈`, `<`, `≤` or a type ascription")),
                };
                if parens {
                    self.expect(&Tok::RParen, "`)`")?;
                }
                self.expect(&Tok::Comma, "`,`")?;
                ExprKind::Quant(q, var, domain, Box::new(self.expr()?))
            }
            _ => unreachable!("leading() called on a non-leading token"),
        };
        Ok(Expr::new(kind, self.span_from(start)))
    }

    fn starts_argument(&self) -> bool {
        matches!(
            self.peek(),
            Some(
                Tok::Ident(_)
                    | Tok::Num(_)
                    | Tok::Str(_)
                    | Tok::Char(_)
                    | Tok::True
                    | Tok::False
                    | Tok::LParen
                    | Tok::LBrack
                    | Tok::HashBrack
                    | Tok::Cdot
                    | Tok::Up
            )
        )
    }

    fn application(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        let head = self.postfix()?;
        let mut args = Vec::new();
        loop {
            if self.at_layout_boundary() {
                break;
            }
            if self.peek() == Some(&Tok::Fun) {
                args.push(self.leading()?);
                break;
            }
            if !self.starts_argument() {
                break;
            }
            args.push(self.postfix()?);
        }
        if args.is_empty() {
            Ok(head)
        } else {
            Ok(Expr::new(ExprKind::App(Box::new(head), args), self.span_from(start)))
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Dot) if self.toks[self.pos].start == self.prev_end() => {
                    self.pos += 1;
                    let name = self.ident("a method name after `.`")?;
                    for seg in name.split('.') {
                        e = Expr::new(ExprKind::Method(Box::new(e), seg.into()), self.span_from(start));
                    }
                }
                Some(Tok::LBrack) if self.toks[self.pos].start == self.prev_end() => {
                    self.pos += 1;
                    let idx = self.expr()?;
                    self.expect(&Tok::RBrack, "`]`")?;
                    let adjacent = self.toks.get(self.pos).is_some_and(|t| t.start == self.prev_end());
                    if !(adjacent && self.eat(&Tok::Not)) {
                        return Err(self.error("only `xs[i]!` indexing is supported"));
                    }
                    e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), self.span_from(start));
                }
                _ => return Ok(e),
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("expected an expression"));
        };
        let kind = match tok {
            Tok::Num(n) => {
                self.pos += 1;
                ExprKind::Int(n)
            }
            Tok::Str(s) => {
                self.pos += 1;
                ExprKind::Str(s)
            }
            Tok::Char(c) => {
                self.pos += 1;
                ExprKind::Char(c)
            }
            Tok::True => {
                self.pos += 1;
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.pos += 1;
                ExprKind::Bool(false)
            }
            Tok::Ident(s) => {
                if s == "_" {
                    return Err(self.error("`_` is only allowed in patterns and binders"));
                }
                self.pos += 1;
                ExprKind::Name(s.split('.').map(String::from).collect())
            }
            Tok::Cdot => {
                self.pos += 1;
                let Some(n) = self.cdots.last_mut() else {
                    return Err(ParseError::at(self.src, start, "`·` outside parentheses"));
                };
                *n += 1;
                ExprKind::Name(vec![format!("·{n}")])
            }
            Tok::Up => {
                self.pos += 1;
                ExprKind::Coe(Box::new(self.postfix()?))
            }
            Tok::LParen => {
                self.pos += 1;
                self.cdots.push(0);
                self.layout.push((u32::MAX, 0));
                let inner = self.paren_body();
                self.layout.pop();
                let holes = self.cdots.pop().unwrap_or(0);
                let inner = inner?;
                self.expect(&Tok::RParen, "`)`")?;
                if holes > 0 {
                    let params = (1..=holes).map(|i| format!("·{i}")).collect();
                    ExprKind::Lambda(params, Box::new(inner))
                } else {
                    return Ok(Expr::new(inner.kind, self.span_from(start)));
                }
            }
            Tok::LBrack | Tok::HashBrack => {
                self.pos += 1;
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrack) {
                    loop {
                        items.push(self.expr()?);
                        if self.eat(&Tok::Comma) {
                            continue;
                        }
                        self.expect(&Tok::RBrack, "`,` or `]`")?;
                        break;
                    }
                }
                if tok == Tok::LBrack {
                    ExprKind::List(items)
                } else {
                    ExprKind::Array(items)
                }
            }
            _ => return Err(self.error("expected an expression")),
        };
        Ok(Expr::new(kind, self.span_from(start)))
    }

    fn paren_body(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        let e = self.expr()?;
        if self.eat(&Tok::Colon) {
            let ty = self.ty()?;
            return Ok(Expr::new(ExprKind::Ascribe(Box::new(e), ty), self.span_from(start)));
        }
        if self.peek() == Some(&Tok::Comma) {
            return Err(self.error("tuples are not supported"));
        }
        Ok(e)
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let head = self.pattern_atom()?;
        if self.eat(&Tok::Cons) {
            let tail = self.pattern()?;
            return Ok(Pattern::Cons(Box::new(head), Box::new(tail)));
        }
        Ok(head)
    }

    fn pattern_atom(&mut self) -> Result<Pattern, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("expected a pattern"));
        };
        self.pos += 1;
        Ok(match tok {
            Tok::Ident(s) if s == "_" => Pattern::Wild,
            Tok::Ident(s) if !s.contains('.') => Pattern::Var(s),
            Tok::Num(n) => Pattern::Int(n),
            Tok::Minus => match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    Pattern::Int(-n)
                }
                _ => return Err(self.error("expected a number after `-`")),
            },
            Tok::True => Pattern::Bool(true),
            Tok::False => Pattern::Bool(false),
            Tok::Char(c) => Pattern::Char(c),
            Tok::Str(s) => Pattern::Str(s),
            Tok::LBrack => {
                if self.eat(&Tok::RBrack) {
                    Pattern::Nil
                } else {
                    let mut items = vec![self.pattern()?];
                    while self.eat(&Tok::Comma) {
                        items.push(self.pattern()?);
                    }
                    self.expect(&Tok::RBrack, "`]`")?;
                    Pattern::List(items)
                }
            }
            Tok::LParen => {
                let p = self.pattern()?;
                self.expect(&Tok::RParen, "`)`")?;
                p
            }
            _ => {
                self.pos -= 1;
                return Err(self.error("expected a pattern"));
            }
        })
    }
}

impl ParseError {
    pub(crate) fn at(src: &str, offset: usize, message: &str) -> Self {
        let offset = offset.min(src.len());
        let before = &src[..offset];
        let line = before.matches('\n').count() as u32 + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
        ParseError {
            offset,
            line,
            col,
            message: message.to_string(),
        }
    }
}
