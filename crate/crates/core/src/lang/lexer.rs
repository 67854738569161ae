use alloc::string::String;
use alloc::vec::Vec;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Possibly dotted identifier, e.g. `xs.reverse.length` or `List.range`.
    Ident(String),
    Num(i128),
    Str(String),
    Char(char),
    Def,
    Fun,
    If,
    Then,
    Else,
    Match,
    With,
    Let,
    In,
    True,
    False,
    Forall,
    Exists,
    LParen,
    RParen,
    LBrack,
    RBrack,
    HashBrack,
    Comma,
    Colon,
    ColonEq,
    FatArrow,
    Arrow,
    Iff,
    And,
    Or,
    Not,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Mem,
    NotMem,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Caret,
    Append,
    Cons,
    Bar,
    Dot,
    Cdot,
    Up,
    Semi,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "def" => Tok::Def,
        "fun" | "λ" => Tok::Fun,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "match" => Tok::Match,
        "with" => Tok::With,
        "let" => Tok::Let,
        "in" => Tok::In,
        "true" | "True" => Tok::True,
        "false" | "False" => Tok::False,
        _ => return None,
    })
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        src,
        pos: 0,
        line: 1,
        line_start: 0,
        out: Vec::new(),
    }
    .run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    line_start: usize,
    out: Vec<Token>,
}

impl Lexer<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::at(self.src, self.pos, message)
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        loop {
            self.skip_trivia()?;
            let Some(c) = self.peek() else { break };
            let start = self.pos;
            let line = self.line;
            let col = (self.src[self.line_start..start].chars().count() + 1) as u32;
            let tok = self.token(c)?;
            self.out.push(Token {
                tok,
                start,
                end: self.pos,
                line,
                col,
            });
        }
        Ok(self.out)
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match (self.peek(), self.peek2()) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('-'), Some('-')) => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                (Some('/'), Some('-')) => {
                    self.bump();
                    self.bump();
                    let mut depth = 1;
                    while depth > 0 {
                        match (self.bump(), self.peek()) {
                            (None, _) => return Err(self.error("unterminated block comment")),
                            (Some('-'), Some('/')) => {
                                self.bump();
                                depth -= 1;
                            }
                            (Some('/'), Some('-')) => {
                                self.bump();
                                depth += 1;
                            }
                            _ => {}
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn token(&mut self, c: char) -> Result<Tok, ParseError> {
        if ident_start(c) && c != 'λ' {
            return Ok(self.ident());
        }
        if c.is_ascii_digit() {
            let start = self.pos;
            while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                self.bump();
            }
            return self.src[start..self.pos]
                .parse()
                .map(Tok::Num)
                .map_err(|_| self.error("numeric literal out of range"));
        }
        if c == '"' {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    None => return Err(self.error("unterminated string literal")),
                    Some('"') => break,
                    Some('\\') => s.push(self.escape()?),
                    Some(ch) => s.push(ch),
                }
            }
            return Ok(Tok::Str(s));
        }
        if c == '\'' {
            self.bump();
            let ch = match self.bump() {
                Some('\\') => self.escape()?,
                Some(ch) => ch,
                None => return Err(self.error("unterminated character literal")),
            };
            if self.bump() != Some('\'') {
                return Err(self.error("unterminated character literal"));
            }
            return Ok(Tok::Char(ch));
        }
        self.bump();
        let next = self.peek();
        let two = |l: &mut Self, t: Tok| {
            l.bump();
            t
        };
        Ok(match (c, next) {
            ('(', _) => Tok::LParen,
            (')', _) => Tok::RParen,
            ('[', _) => Tok::LBrack,
            (']', _) => Tok::RBrack,
            ('#', Some('[')) => two(self, Tok::HashBrack),
            (',', _) => Tok::Comma,
            (':', Some('=')) => two(self, Tok::ColonEq),
            (':', Some(':')) => two(self, Tok::Cons),
            (':', _) => Tok::Colon,
            (';', _) => Tok::Semi,
            ('=', Some('>')) => two(self, Tok::FatArrow),
            ('=', Some('=')) => two(self, Tok::Eq),
            ('=', _) => Tok::Eq,
            ('-', Some('>')) => two(self, Tok::Arrow),
            ('→', _) => Tok::Arrow,
            ('↔', _) => Tok::Iff,
            ('<', Some('-')) if self.src[self.pos..].starts_with("->") => {
                self.bump();
                self.bump();
                Tok::Iff
            }
            ('∧', _) => Tok::And,
            ('&', Some('&')) => two(self, Tok::And),
            ('/', Some('\\')) => two(self, Tok::And),
            ('∨', _) => Tok::Or,
            ('|', Some('|')) => two(self, Tok::Or),
            ('\\', Some('/')) => two(self, Tok::Or),
            ('|', _) => Tok::Bar,
            ('¬', _) => Tok::Not,
            ('!', Some('=')) => two(self, Tok::Ne),
            ('!', _) => Tok::Not,
            ('≠', _) => Tok::Ne,
            ('<', Some('=')) => two(self, Tok::Le),
            ('<', _) => Tok::Lt,
            ('≤', _) => Tok::Le,
            ('>', Some('=')) => two(self, Tok::Ge),
            ('>', _) => Tok::Gt,
            ('≥', _) => Tok::Ge,
            ('∈', _) => Tok::Mem,
            ('∉', _) => Tok::NotMem,
            ('+', Some('+')) => two(self, Tok::Append),
            ('+', _) => Tok::Plus,
            ('-', _) => Tok::Minus,
            ('*', _) => Tok::Star,
            ('/', _) => Tok::Slash,
            ('%', _) => Tok::Percent,
            ('^', _) => Tok::Caret,
            ('.', _) => Tok::Dot,
            ('·', _) => Tok::Cdot,
            ('↑', _) => Tok::Up,
            ('∀', _) => Tok::Forall,
            ('∃', _) => Tok::Exists,
            ('λ', _) => Tok::Fun,
            _ => {
                self.pos -= c.len_utf8();
                return Err(self.error("unexpected character"));
            }
        })
    }

    fn ident(&mut self) -> Tok {
        let start = self.pos;
        loop {
            while matches!(self.peek(), Some(c) if ident_continue(c)) {
                self.bump();
            }
            // `head!`, `get?`: a trailing bang or question mark, but not `!=`.
            if matches!(self.peek(), Some('!' | '?')) && self.peek2() != Some('=') {
                self.bump();
            }
            if self.peek() == Some('.') && matches!(self.peek2(), Some(c) if ident_start(c)) {
                self.bump();
                continue;
            }
            break;
        }
        let text = &self.src[start..self.pos];
        keyword(text).unwrap_or_else(|| Tok::Ident(text.into()))
    }

    fn escape(&mut self) -> Result<char, ParseError> {
        match self.bump() {
            Some('n') => Ok('\n'),
            Some('t') => Ok('\t'),
            Some('\\') => Ok('\\'),
            Some('"') => Ok('"'),
            Some('\'') => Ok('\''),
            _ => Err(self.error("unknown escape sequence")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn dotted_names_and_bangs() {
        assert_eq!(
            toks("xs.reverse.length xs[0]! head! a != b"),
            vec![
                Tok::Ident("xs.reverse.length".into()),
                Tok::Ident("xs".into()),
                Tok::LBrack,
                Tok::Num(0),
                Tok::RBrack,
                Tok::Not,
                Tok::Ident("head!".into()),
                Tok::Ident("a".into()),
                Tok::Ne,
                Tok::Ident("b".into()),
            ]
        );
    }

    #[test]
    fn unicode_operators_and_comments() {
        assert_eq!(
            toks("¬ a ∧ b -- trailing\n∀ x ∈ xs, x ≤ 2 /- block -/ ↔ c"),
            vec![
                Tok::Not,
                Tok::Ident("a".into()),
                Tok::And,
                Tok::Ident("b".into()),
                Tok::Forall,
                Tok::Ident("x".into()),
                Tok::Mem,
                Tok::Ident("xs".into()),
                Tok::Comma,
                Tok::Ident("x".into()),
                Tok::Le,
                Tok::Num(2),
                Tok::Iff,
                Tok::Ident("c".into()),
            ]
        );
    }

    #[test]
    fn literals() {
        assert_eq!(
            toks(r#"'a' '\'' "x\ny" #[1]"#),
            vec![
                Tok::Char('a'),
                Tok::Char('\''),
                Tok::Str("x\ny".into()),
                Tok::HashBrack,
                Tok::Num(1),
                Tok::RBrack
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let t = lex("a\n  b").unwrap();
        assert_eq!((t[1].line, t[1].col), (2, 3));
    }
}
