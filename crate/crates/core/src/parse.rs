//! Recursive-descent parser for the ASCII surface syntax.
//!
//! Types: `Unit | Bool | T -> T | T * T | T + T | mu a. T | a`.
//! Terms: `unit | true | false | x | \x:T. t | t t | (t, t) | t.1 | t.2 |
//! inl t | inr t | case t of inl x -> t | inr x -> t | if t then t else t |
//! t; t | fix[T] t | fold[T] t | unfold[T] t`, with `_` for a context hole.
//! The Unicode forms `λ → ⊎ × μ` are accepted as well. `#` starts a comment.
//!
//! A binder that shadows a binder already in scope is renamed to a fresh
//! name, so parsed terms never contain shadowing.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::syntax::{
    check_lang, check_type_lang, fresh_name, name, Lang, LangError, Name, ObjType, ProgCtx, Term,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: {err}")]
    Lang { pos: Pos, err: LangError },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Lang { pos, .. } => *pos,
        }
    }
}

/// Source positions of parsed term nodes, keyed by node identity.
#[derive(Clone, Debug, Default)]
pub struct Spans(HashMap<usize, Pos>);

impl Spans {
    pub fn get(&self, t: &Term) -> Option<Pos> {
        self.0.get(&t.ptr_id()).copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Kw(&'static str),
    Sym(&'static str),
    Proj(u8),
    Eof,
}

const KEYWORDS: &[&str] = &[
    "unit", "true", "false", "inl", "inr", "case", "of", "if", "then", "else", "fix", "fold",
    "unfold", "mu", "Unit", "Bool",
];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |pos: Pos, msg: String| ParseError::Syntax { pos, msg };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            adv(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        if two == "->" {
            out.push((Tok::Sym("->"), pos));
            adv(2, &mut i, &mut col);
            continue;
        }
        if c == '.' && i + 1 < chars.len() && (chars[i + 1] == '1' || chars[i + 1] == '2') {
            let next_is_ident = i + 2 < chars.len() && (chars[i + 2].is_alphanumeric() || chars[i + 2] == '_');
            if !next_is_ident {
                out.push((Tok::Proj(if chars[i + 1] == '1' { 1 } else { 2 }), pos));
                adv(2, &mut i, &mut col);
                continue;
            }
        }
        let sym = match c {
            '\\' | 'λ' => Some("\\"),
            '→' => Some("->"),
            '⊎' | '+' => Some("+"),
            '×' | '*' => Some("*"),
            'μ' => Some("mu"),
            ':' => Some(":"),
            '.' => Some("."),
            '(' => Some("("),
            ')' => Some(")"),
            ',' => Some(","),
            ';' => Some(";"),
            '[' => Some("["),
            ']' => Some("]"),
            '|' => Some("|"),
            _ => None,
        };
        if let Some(s) = sym {
            if s == "mu" {
                out.push((Tok::Kw("mu"), pos));
            } else {
                out.push((Tok::Sym(s), pos));
            }
            adv(1, &mut i, &mut col);
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            col += i - start;
            let word: String = chars[start..i].iter().collect();
            if word == "_" {
                out.push((Tok::Sym("_"), pos));
            } else if let Some(k) = KEYWORDS.iter().find(|k| **k == word) {
                out.push((Tok::Kw(k), pos));
            } else {
                out.push((Tok::Ident(word), pos));
            }
            continue;
        }
        return Err(err(pos, format!("unexpected character `{c}`")));
    }
    let end = Pos { line, col };
    out.push((Tok::Eof, end));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    allow_hole: bool,
    /// Term binders in scope: original name and the name it was given.
    scope: Vec<(String, Name)>,
    used: BTreeSet<String>,
    spans: Spans,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str, allow_hole: bool) -> PResult<Parser> {
        let toks = lex(src)?;
        let used = toks
            .iter()
            .filter_map(|(t, _)| match t {
                Tok::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        Ok(Parser { toks, at: 0, allow_hole, scope: Vec::new(), used, spans: Spans::default() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Kw(k) | Tok::Sym(k) => format!("`{k}`"),
            Tok::Proj(n) => format!("`.{n}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(ParseError::Syntax { pos: self.pos(), msg: format!("{}, found {found}", msg.into()) })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail("expected an identifier"),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.fail("expected end of input")
        }
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<ObjType> {
        if self.is_kw("mu") {
            self.bump();
            let a = self.ident()?;
            self.expect_sym(".")?;
            let body = self.ty()?;
            return Ok(ObjType::mu(&a, body));
        }
        let lhs = self.ty_sum()?;
        if self.is_sym("->") {
            self.bump();
            let rhs = self.ty()?;
            return Ok(ObjType::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_sum(&mut self) -> PResult<ObjType> {
        let mut t = self.ty_prod()?;
        while self.is_sym("+") {
            self.bump();
            let r = self.ty_prod()?;
            t = ObjType::sum(t, r);
        }
        Ok(t)
    }

    fn ty_prod(&mut self) -> PResult<ObjType> {
        let mut t = self.ty_atom()?;
        while self.is_sym("*") {
            self.bump();
            let r = self.ty_atom()?;
            t = ObjType::prod(t, r);
        }
        Ok(t)
    }

    fn ty_atom(&mut self) -> PResult<ObjType> {
        match self.peek().clone() {
            Tok::Kw("Unit") => {
                self.bump();
                Ok(ObjType::unit())
            }
            Tok::Kw("Bool") => {
                self.bump();
                Ok(ObjType::bool())
            }
            Tok::Kw("mu") => self.ty(),
            Tok::Ident(a) => {
                self.bump();
                Ok(ObjType::tvar(&a))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ => self.fail("expected a type"),
        }
    }

    // ---- terms ----

    fn mark(&mut self, t: Term, pos: Pos) -> Term {
        self.spans.0.entry(t.ptr_id()).or_insert(pos);
        t
    }

    fn bind(&mut self, x: &str) -> Name {
        let shadowing = self.scope.iter().any(|(o, _)| o == x);
        let n = if shadowing {
            let used = &self.used;
            fresh_name(x, |c| used.contains(c))
        } else {
            name(x)
        };
        self.used.insert(n.to_string());
        self.scope.push((x.to_string(), n.clone()));
        n
    }

    fn unbind(&mut self) {
        self.scope.pop();
    }

    fn resolve(&self, x: &str) -> Name {
        self.scope
            .iter()
            .rev()
            .find(|(o, _)| o == x)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| name(x))
    }

    fn term(&mut self) -> PResult<Term> {
        let pos = self.pos();
        let lhs = self.term_open()?;
        if self.is_sym(";") {
            self.bump();
            let rhs = self.term()?;
            let t = Term::seq(lhs, rhs);
            return Ok(self.mark(t, pos));
        }
        Ok(lhs)
    }

    fn term_open(&mut self) -> PResult<Term> {
        let pos = self.pos();
        if self.is_sym("\\") {
            self.bump();
            let x = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.expect_sym(".")?;
            let n = self.bind(&x);
            let body = self.term();
            self.unbind();
            let t = Term::lam_named(n, ty, body?);
            return Ok(self.mark(t, pos));
        }
        if self.is_kw("if") {
            self.bump();
            let c = self.term()?;
            self.expect_kw("then")?;
            let a = self.term()?;
            self.expect_kw("else")?;
            let b = self.term()?;
            let t = Term::ite(c, a, b);
            return Ok(self.mark(t, pos));
        }
        if self.is_kw("case") {
            self.bump();
            let s = self.term()?;
            self.expect_kw("of")?;
            if self.is_sym("|") {
                self.bump();
            }
            self.expect_kw("inl")?;
            let x1 = self.ident()?;
            self.expect_sym("->")?;
            let n1 = self.bind(&x1);
            let b1 = self.term();
            self.unbind();
            let b1 = b1?;
            self.expect_sym("|")?;
            self.expect_kw("inr")?;
            let x2 = self.ident()?;
            self.expect_sym("->")?;
            let n2 = self.bind(&x2);
            let b2 = self.term();
            self.unbind();
            let t = Term::case_named(s, n1, b1, n2, b2?);
            return Ok(self.mark(t, pos));
        }
        self.term_app()
    }

    fn starts_prefix(&self) -> bool {
        match self.peek() {
            Tok::Ident(_) => true,
            Tok::Kw(k) => matches!(*k, "unit" | "true" | "false" | "inl" | "inr" | "fix" | "fold" | "unfold"),
            Tok::Sym(s) => matches!(*s, "(" | "_"),
            _ => false,
        }
    }

    fn term_app(&mut self) -> PResult<Term> {
        let pos = self.pos();
        let mut t = self.term_prefix()?;
        while self.starts_prefix() || self.starts_open() {
            let open = self.starts_open();
            let a = self.term_prefix()?;
            t = Term::app(t, a);
            t = self.mark(t, pos);
            if open {
                break;
            }
        }
        Ok(t)
    }

    /// Lambda, `if` and `case` extend as far right as possible; they are
    /// accepted unparenthesised as the last argument of a prefix operator or
    /// an application.
    fn starts_open(&self) -> bool {
        self.is_sym("\\") || self.is_kw("if") || self.is_kw("case")
    }

    fn term_prefix(&mut self) -> PResult<Term> {
        let pos = self.pos();
        let t = match self.peek().clone() {
            Tok::Kw("inl") => {
                self.bump();
                Term::inl(self.term_prefix()?)
            }
            Tok::Kw("inr") => {
                self.bump();
                Term::inr(self.term_prefix()?)
            }
            Tok::Kw(k @ ("fix" | "fold" | "unfold")) => {
                self.bump();
                self.expect_sym("[")?;
                let ty = self.ty()?;
                self.expect_sym("]")?;
                let a = self.term_prefix()?;
                match k {
                    "fix" => Term::fix(ty, a),
                    "fold" => Term::fold(ty, a),
                    _ => Term::unfold(ty, a),
                }
            }
            _ if self.starts_open() => return self.term_open(),
            _ => return self.term_postfix(),
        };
        Ok(self.mark(t, pos))
    }

    fn term_postfix(&mut self) -> PResult<Term> {
        let pos = self.pos();
        let mut t = self.term_atom()?;
        while let Tok::Proj(n) = self.peek().clone() {
            self.bump();
            t = if n == 1 { Term::proj1(t) } else { Term::proj2(t) };
            t = self.mark(t, pos);
        }
        Ok(t)
    }

    fn term_atom(&mut self) -> PResult<Term> {
        let pos = self.pos();
        let t = match self.peek().clone() {
            Tok::Kw("unit") => {
                self.bump();
                Term::unit()
            }
            Tok::Kw("true") => {
                self.bump();
                Term::tt()
            }
            Tok::Kw("false") => {
                self.bump();
                Term::ff()
            }
            Tok::Ident(x) => {
                self.bump();
                Term::var_named(self.resolve(&x))
            }
            Tok::Sym("_") => {
                if !self.allow_hole {
                    return self.fail("holes are only allowed in contexts");
                }
                self.bump();
                Term::hole()
            }
            Tok::Sym("(") => {
                self.bump();
                let a = self.term()?;
                if self.is_sym(",") {
                    self.bump();
                    let b = self.term()?;
                    self.expect_sym(")")?;
                    Term::pair(a, b)
                } else {
                    self.expect_sym(")")?;
                    return Ok(a);
                }
            }
            _ => return self.fail("expected a term"),
        };
        Ok(self.mark(t, pos))
    }
}

fn lang_error(spans: &Spans, err: LangError) -> ParseError {
    let at = match &err {
        LangError::Construct { at, .. } | LangError::BadType { at, .. } | LangError::Shape { at, .. } => at,
    };
    ParseError::Lang { pos: spans.get(at).unwrap_or_default(), err }
}

/// Parse a type and check it is admissible in `lang`.
pub fn parse_type(src: &str, lang: Lang) -> Result<ObjType, ParseError> {
    let t = parse_type_any(src)?;
    if let Err(why) = check_type_lang(lang, &t) {
        let err = LangError::BadType { ty: t.clone(), lang, why, at: Term::unit() };
        return Err(ParseError::Lang { pos: Pos { line: 1, col: 1 }, err });
    }
    Ok(t)
}

/// Parse a type without any language check (open types allowed).
pub fn parse_type_any(src: &str) -> Result<ObjType, ParseError> {
    let mut p = Parser::new(src, false)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parse a term together with the source position of every node.
pub fn parse_term_spanned(src: &str, lang: Lang, allow_hole: bool) -> Result<(Term, Spans), ParseError> {
    let mut p = Parser::new(src, allow_hole)?;
    let t = p.term()?;
    p.expect_eof()?;
    check_lang(lang, &t).map_err(|e| lang_error(&p.spans, e))?;
    Ok((t, p.spans))
}

pub fn parse_term(src: &str, lang: Lang) -> Result<Term, ParseError> {
    parse_term_spanned(src, lang, false).map(|(t, _)| t)
}

pub fn parse_ctx_spanned(src: &str, lang: Lang) -> Result<(ProgCtx, Spans), ParseError> {
    let (t, spans) = parse_term_spanned(src, lang, true)?;
    match ProgCtx::new(t) {
        Ok(c) => Ok((c, spans)),
        Err(e) => Err(ParseError::Syntax { pos: Pos { line: 1, col: 1 }, msg: e.to_string() }),
    }
}

pub fn parse_ctx(src: &str, lang: Lang) -> Result<ProgCtx, ParseError> {
    parse_ctx_spanned(src, lang).map(|(c, _)| c)
}

/// What to parse with [`parse`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Term,
    Type,
    Context,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Parsed {
    Term(Term),
    Type(ObjType),
    Context(ProgCtx),
}

pub fn parse(src: &str, kind: Kind, lang: Lang) -> Result<Parsed, ParseError> {
    match kind {
        Kind::Term => parse_term(src, lang).map(Parsed::Term),
        Kind::Type => parse_type(src, lang).map(Parsed::Type),
        Kind::Context => parse_ctx(src, lang).map(Parsed::Context),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        assert_eq!(
            parse_term("\\x:Bool. x", Lang::Fix).unwrap(),
            Term::lam("x", ObjType::bool(), Term::var("x"))
        );
        assert_eq!(
            parse_type("mu a. Unit + a", Lang::Iso).unwrap(),
            ObjType::mu("a", ObjType::sum(ObjType::unit(), ObjType::tvar("a")))
        );
        let e = parse_term("fold[mu a. Unit + a] (inl unit)", Lang::Equi).unwrap_err();
        assert!(e.to_string().contains("fold"), "{e}");
        assert!(parse_term("fix[Unit -> Unit] \\f:Unit -> Unit. f", Lang::Iso).is_err());
    }

    #[test]
    fn precedence() {
        let t = parse_type("Unit * Bool + Unit -> Unit", Lang::Fix).unwrap();
        assert_eq!(
            t,
            ObjType::arrow(
                ObjType::sum(ObjType::prod(ObjType::unit(), ObjType::bool()), ObjType::unit()),
                ObjType::unit()
            )
        );
        let t = parse_term("f x y", Lang::Fix).unwrap();
        assert_eq!(t, Term::app(Term::app(Term::var("f"), Term::var("x")), Term::var("y")));
        let t = parse_term("inl x.1", Lang::Fix).unwrap();
        assert_eq!(t, Term::inl(Term::proj1(Term::var("x"))));
        let t = parse_term("a; b; c", Lang::Fix).unwrap();
        assert_eq!(t, Term::seq(Term::var("a"), Term::seq(Term::var("b"), Term::var("c"))));
    }

    #[test]
    fn renames_shadowing() {
        let t = parse_term("\\x:Unit. \\x:Bool. x", Lang::Fix).unwrap();
        assert_eq!(t, Term::lam("x", ObjType::unit(), Term::lam("x_1", ObjType::bool(), Term::var("x_1"))));
    }

    #[test]
    fn unicode_forms() {
        let t = parse_type("μa.(Unit⊎(Bool×a))", Lang::Equi).unwrap();
        assert_eq!(t, ObjType::mu("a", ObjType::sum(ObjType::unit(), ObjType::prod(ObjType::bool(), ObjType::tvar("a")))));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_term("\\x:Unit.\n  (x, )", Lang::Fix).unwrap_err();
        assert_eq!(e.pos(), Pos { line: 2, col: 7 });
    }

    #[test]
    fn contexts() {
        let c = parse_ctx("if _ then unit else unit", Lang::Fix).unwrap();
        assert_eq!(c.term().holes(), 1);
        assert!(parse_ctx("(_, _)", Lang::Fix).is_err());
        assert!(parse_term("_", Lang::Fix).is_err());
    }
}
