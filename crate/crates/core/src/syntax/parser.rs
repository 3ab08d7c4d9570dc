//! Parser for the `.spi` source format.
//!
//! The format is line-oriented: a new top-level item starts on any
//! non-blank line whose first character is not whitespace, and item
//! continuation lines are indented. Items are `type` declarations,
//! `fun` rewrite equations, `signal` and `input` declarations, thread
//! definitions `A(x, ...) = P` (thread identifiers start with an upper
//! case letter), and at most one bare root program.
//!
//! `pause.K` and the internal choice `P + Q` (also written `P ⊕ Q`) are
//! sugar and are expanded during parsing; see the manual section of the
//! README for the expansions.

use crate::syntax::ast::{
    Alphabet, Continuation, CtorSig, DefTable, Expr, FunDef, FunEquation, Name, Pattern, Program,
    Rexp, ThreadDef, Type,
};
use crate::syntax::subst::shift_program;
use crate::syntax::symbols::Sym;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// Parsed source file: definitions, optional root program, declared
/// input alphabet.
#[derive(Debug, Clone)]
pub struct Module {
    pub defs: DefTable,
    pub root: Option<Program>,
    pub alphabet: Alphabet,
    pub next_tyvar: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Star,
    Underscore,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    ColonColon,
    Eq,
    Arrow,
    Pipe,
    ParOp,
    Choice,
    Bang,
    Dot,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Num(n) => format!("'{n}'"),
            Tok::Star => "'*'".into(),
            Tok::Underscore => "'_'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
            Tok::Colon => "':'".into(),
            Tok::ColonColon => "'::'".into(),
            Tok::Eq => "'='".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Pipe => "'|'".into(),
            Tok::ParOp => "'||'".into(),
            Tok::Choice => "'+'".into(),
            Tok::Bang => "'!'".into(),
            Tok::Dot => "'.'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Sp {
    tok: Tok,
    line: usize,
    col: usize,
}

const KEYWORDS: [&str; 14] = [
    "emit", "present", "else", "if", "match", "with", "new", "in", "pause", "type", "fun",
    "signal", "input", "nil",
];

fn is_reserved(name: &str) -> bool {
    KEYWORDS.contains(&name) || name == "unit" || name == "nat" || name == "Sig" || name == "List"
}

fn lex(item: &str, start_line: usize, errors: &mut Vec<ParseError>) -> Vec<Sp> {
    let mut toks = Vec::new();
    let mut line = start_line;
    let mut col = 0usize;
    let mut chars = item.chars().peekable();
    while let Some(c) = chars.next() {
        col += 1;
        let here = (line, col);
        match c {
            '\n' => {
                line += 1;
                col = 0;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        col = 0;
                        break;
                    }
                }
            }
            '(' => toks.push(sp(Tok::LParen, here)),
            ')' => toks.push(sp(Tok::RParen, here)),
            '{' => toks.push(sp(Tok::LBrace, here)),
            '}' => toks.push(sp(Tok::RBrace, here)),
            '[' => toks.push(sp(Tok::LBracket, here)),
            ']' => toks.push(sp(Tok::RBracket, here)),
            ',' => toks.push(sp(Tok::Comma, here)),
            ';' => toks.push(sp(Tok::Semi, here)),
            '*' => toks.push(sp(Tok::Star, here)),
            '!' => toks.push(sp(Tok::Bang, here)),
            '.' => toks.push(sp(Tok::Dot, here)),
            '=' => toks.push(sp(Tok::Eq, here)),
            '+' | '⊕' => toks.push(sp(Tok::Choice, here)),
            ':' => {
                if chars.peek() == Some(&':') {
                    chars.next();
                    col += 1;
                    toks.push(sp(Tok::ColonColon, here));
                } else {
                    toks.push(sp(Tok::Colon, here));
                }
            }
            '-' => {
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    toks.push(sp(Tok::Arrow, here));
                } else {
                    errors.push(err(here, "expected '->'"));
                }
            }
            '|' => {
                if chars.peek() == Some(&'|') {
                    chars.next();
                    col += 1;
                    toks.push(sp(Tok::ParOp, here));
                } else {
                    toks.push(sp(Tok::Pipe, here));
                }
            }
            c if c.is_ascii_digit() => {
                let mut s = String::from(c);
                while let Some(d) = chars.peek() {
                    if d.is_ascii_digit() {
                        s.push(*d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                toks.push(sp(Tok::Num(s), here));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(d) = chars.peek() {
                    if d.is_alphanumeric() || *d == '_' || *d == '\'' {
                        s.push(*d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                if s == "_" {
                    toks.push(sp(Tok::Underscore, here));
                } else {
                    toks.push(sp(Tok::Ident(s), here));
                }
            }
            other => errors.push(err(here, &format!("unexpected character '{other}'"))),
        }
    }
    toks
}

fn sp(tok: Tok, at: (usize, usize)) -> Sp {
    Sp {
        tok,
        line: at.0,
        col: at.1,
    }
}

fn err(at: (usize, usize), msg: &str) -> ParseError {
    ParseError {
        line: at.0,
        col: at.1,
        msg: msg.to_string(),
    }
}

#[derive(Debug)]
struct Item {
    toks: Vec<Sp>,
    line: usize,
}

fn split_items(src: &str, errors: &mut Vec<ParseError>) -> Vec<Item> {
    let mut items: Vec<(usize, String)> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if stripped.trim().is_empty() {
            if let Some(last) = items.last_mut() {
                last.1.push('\n');
            }
            continue;
        }
        let starts_item = !raw.starts_with(' ') && !raw.starts_with('\t');
        if starts_item || items.is_empty() {
            items.push((line_no, format!("{raw}\n")));
        } else {
            let last = items.last_mut().unwrap();
            last.1.push_str(raw);
            last.1.push('\n');
        }
    }
    items
        .into_iter()
        .map(|(line, text)| Item {
            toks: lex(&text, line, errors),
            line,
        })
        .collect()
}

enum ItemKind {
    TypeDecl,
    FunEq,
    SignalDecl,
    InputDecl,
    ThreadDef,
    RootProgram,
}

fn classify(item: &Item) -> ItemKind {
    match item.toks.first().map(|s| &s.tok) {
        Some(Tok::Ident(w)) if w == "type" => ItemKind::TypeDecl,
        Some(Tok::Ident(w)) if w == "fun" => ItemKind::FunEq,
        Some(Tok::Ident(w)) if w == "signal" => ItemKind::SignalDecl,
        Some(Tok::Ident(w)) if w == "input" => ItemKind::InputDecl,
        Some(Tok::Ident(w)) if w.chars().next().is_some_and(|c| c.is_uppercase()) => {
            // `A(x, y) = P` has an `=` at depth 0 right after the head's
            // closing parenthesis; a root call `A(e)` does not.
            let mut depth = 0i32;
            for (i, s) in item.toks.iter().enumerate() {
                match s.tok {
                    Tok::LParen | Tok::LBracket | Tok::LBrace => depth += 1,
                    Tok::RParen | Tok::RBracket | Tok::RBrace => {
                        depth -= 1;
                        if depth == 0 {
                            return if matches!(item.toks.get(i + 1).map(|s| &s.tok), Some(Tok::Eq))
                            {
                                ItemKind::ThreadDef
                            } else {
                                ItemKind::RootProgram
                            };
                        }
                    }
                    _ => {}
                }
            }
            ItemKind::RootProgram
        }
        _ => ItemKind::RootProgram,
    }
}

struct Cursor<'a> {
    toks: &'a [Sp],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Sp]) -> Self {
        Cursor { toks, pos: 0 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn at(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|s| (s.line, s.col))
            .unwrap_or((0, 0))
    }

    fn next(&mut self) -> Option<&'a Sp> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            let found = self
                .peek()
                .map(|t| t.describe())
                .unwrap_or_else(|| "end of item".into());
            Err(err(
                self.at(),
                &format!("expected {}, found {found}", tok.describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, (usize, usize)), ParseError> {
        let at = self.at();
        match self.next().map(|s| &s.tok) {
            Some(Tok::Ident(s)) => Ok((s.clone(), at)),
            other => Err(err(
                at,
                &format!(
                    "expected {what}, found {}",
                    other.map(|t| t.describe()).unwrap_or_else(|| "end of item".into())
                ),
            )),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

struct Parser {
    defs: DefTable,
    scopes: Vec<Vec<String>>,
    tyvar_counter: u32,
    sugar_counter: u32,
}

impl Parser {
    fn fresh_tyvar(&mut self) -> Type {
        self.tyvar_counter += 1;
        Type::Var(self.tyvar_counter)
    }

    fn fresh_hint(&mut self, base: &str) -> Sym {
        self.sugar_counter += 1;
        let name = format!("_{base}{}", self.sugar_counter);
        self.defs.interner.intern(&name)
    }

    fn resolve(&self, name: &str) -> Option<Name> {
        for (dist, frame) in self.scopes.iter().rev().enumerate() {
            if let Some(slot) = frame.iter().rposition(|n| n == name) {
                return Some(Name::Idx(dist as u16, slot as u16));
            }
        }
        let sym = self.defs.interner.get(name)?;
        if self.defs.signals.contains_key(&sym) {
            return Some(Name::Free(sym));
        }
        None
    }

    fn signal_ref(&mut self, cur: &mut Cursor) -> Result<Name, ParseError> {
        let (name, at) = cur.ident("a signal name")?;
        self.resolve(&name)
            .ok_or_else(|| err(at, &format!("unknown signal or variable '{name}'")))
    }

    // ---- types ----

    fn parse_type(&mut self, cur: &mut Cursor) -> Result<Type, ParseError> {
        let (name, at) = cur.ident("a type")?;
        match name.as_str() {
            "unit" => Ok(Type::Unit),
            "nat" => Ok(Type::Nat),
            "Sig" => {
                cur.expect(Tok::LParen)?;
                let inner = self.parse_type(cur)?;
                cur.expect(Tok::RParen)?;
                Ok(Type::sig(inner))
            }
            "List" => {
                cur.expect(Tok::LParen)?;
                let inner = self.parse_type(cur)?;
                cur.expect(Tok::RParen)?;
                Ok(Type::list(inner))
            }
            _ => {
                let sym = self
                    .defs
                    .interner
                    .get(&name)
                    .filter(|s| self.defs.types.contains_key(s))
                    .ok_or_else(|| err(at, &format!("unknown type '{name}'")))?;
                Ok(Type::Data(sym))
            }
        }
    }

    // ---- expressions ----

    fn parse_expr(&mut self, cur: &mut Cursor) -> Result<Expr, ParseError> {
        let head = self.parse_expr_atom(cur)?;
        if cur.eat(&Tok::ColonColon) {
            let tail = self.parse_expr(cur)?;
            Ok(Expr::Ctor(Sym::CONS, vec![head, tail]))
        } else {
            Ok(head)
        }
    }

    fn parse_expr_atom(&mut self, cur: &mut Cursor) -> Result<Expr, ParseError> {
        let at = cur.at();
        match cur.peek().cloned() {
            Some(Tok::Star) => {
                cur.next();
                Ok(Expr::Ctor(Sym::STAR, vec![]))
            }
            Some(Tok::Num(n)) => {
                cur.next();
                let sym = self.defs.interner.intern(&n);
                Ok(Expr::Ctor(sym, vec![]))
            }
            Some(Tok::LParen) => {
                cur.next();
                let e = self.parse_expr(cur)?;
                cur.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::LBracket) => {
                cur.next();
                let mut items = Vec::new();
                if !cur.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.parse_expr(cur)?);
                        if cur.eat(&Tok::Semi) {
                            continue;
                        }
                        cur.expect(Tok::RBracket)?;
                        break;
                    }
                }
                Ok(items
                    .into_iter()
                    .rev()
                    .fold(Expr::Ctor(Sym::NIL, vec![]), |acc, e| {
                        Expr::Ctor(Sym::CONS, vec![e, acc])
                    }))
            }
            Some(Tok::Ident(name)) if name == "nil" => {
                cur.next();
                Ok(Expr::Ctor(Sym::NIL, vec![]))
            }
            Some(Tok::Ident(name)) => {
                cur.next();
                if let Some(n) = self.resolve(&name) {
                    return Ok(Expr::Var(n));
                }
                let sym = self.defs.interner.get(&name);
                let is_ctor = sym.is_some_and(|s| self.defs.ctors.contains_key(&s) || s == Sym::CONS);
                let is_fun = sym.is_some_and(|s| self.defs.funs.contains_key(&s));
                if is_ctor || is_fun {
                    let sym = sym.unwrap();
                    let mut args = Vec::new();
                    if cur.eat(&Tok::LParen) {
                        if !cur.eat(&Tok::RParen) {
                            loop {
                                args.push(self.parse_expr(cur)?);
                                if cur.eat(&Tok::Comma) {
                                    continue;
                                }
                                cur.expect(Tok::RParen)?;
                                break;
                            }
                        }
                    }
                    if is_ctor {
                        let want = if sym == Sym::CONS {
                            2
                        } else {
                            self.defs.ctors[&sym].params.len()
                        };
                        if args.len() != want {
                            return Err(err(
                                at,
                                &format!(
                                    "constructor '{name}' expects {want} argument(s), found {}",
                                    args.len()
                                ),
                            ));
                        }
                        Ok(Expr::Ctor(sym, args))
                    } else {
                        let want = self.defs.funs[&sym].arity;
                        if args.len() != want {
                            return Err(err(
                                at,
                                &format!(
                                    "function '{name}' expects {want} argument(s), found {}",
                                    args.len()
                                ),
                            ));
                        }
                        Ok(Expr::App(sym, args))
                    }
                } else {
                    Err(err(at, &format!("unknown name '{name}'")))
                }
            }
            other => Err(err(
                at,
                &format!(
                    "expected an expression, found {}",
                    other.map(|t| t.describe()).unwrap_or_else(|| "end of item".into())
                ),
            )),
        }
    }

    fn parse_rexp(&mut self, cur: &mut Cursor) -> Result<Rexp, ParseError> {
        let head = self.parse_rexp_atom(cur)?;
        if cur.eat(&Tok::ColonColon) {
            let tail = self.parse_rexp(cur)?;
            Ok(Rexp::Ctor(Sym::CONS, vec![head, tail]))
        } else {
            Ok(head)
        }
    }

    fn parse_rexp_atom(&mut self, cur: &mut Cursor) -> Result<Rexp, ParseError> {
        if cur.eat(&Tok::Bang) {
            let n = self.signal_ref(cur)?;
            return Ok(Rexp::Deref(n));
        }
        if cur.peek() == Some(&Tok::LParen) {
            cur.next();
            let r = self.parse_rexp(cur)?;
            cur.expect(Tok::RParen)?;
            return Ok(r);
        }
        if cur.peek() == Some(&Tok::LBracket) {
            cur.next();
            let mut items = Vec::new();
            if !cur.eat(&Tok::RBracket) {
                loop {
                    items.push(self.parse_rexp(cur)?);
                    if cur.eat(&Tok::Semi) {
                        continue;
                    }
                    cur.expect(Tok::RBracket)?;
                    break;
                }
            }
            return Ok(items
                .into_iter()
                .rev()
                .fold(Rexp::Ctor(Sym::NIL, vec![]), |acc, e| {
                    Rexp::Ctor(Sym::CONS, vec![e, acc])
                }));
        }
        // Everything else coincides with the expression grammar; reuse it
        // by parsing an expression atom and converting.
        let e = self.parse_expr_atom_rexp(cur)?;
        Ok(e)
    }

    /// Expression atom in a dereference context: identical to
    /// `parse_expr_atom` except that constructor/function arguments may
    /// themselves dereference.
    fn parse_expr_atom_rexp(&mut self, cur: &mut Cursor) -> Result<Rexp, ParseError> {
        let at = cur.at();
        match cur.peek().cloned() {
            Some(Tok::Star) => {
                cur.next();
                Ok(Rexp::Ctor(Sym::STAR, vec![]))
            }
            Some(Tok::Num(n)) => {
                cur.next();
                let sym = self.defs.interner.intern(&n);
                Ok(Rexp::Ctor(sym, vec![]))
            }
            Some(Tok::Ident(name)) if name == "nil" => {
                cur.next();
                Ok(Rexp::Ctor(Sym::NIL, vec![]))
            }
            Some(Tok::Ident(name)) => {
                cur.next();
                if let Some(n) = self.resolve(&name) {
                    return Ok(Rexp::Var(n));
                }
                let sym = self.defs.interner.get(&name);
                let is_ctor = sym.is_some_and(|s| self.defs.ctors.contains_key(&s) || s == Sym::CONS);
                let is_fun = sym.is_some_and(|s| self.defs.funs.contains_key(&s));
                if is_ctor || is_fun {
                    let sym = sym.unwrap();
                    let mut args = Vec::new();
                    if cur.eat(&Tok::LParen) {
                        if !cur.eat(&Tok::RParen) {
                            loop {
                                args.push(self.parse_rexp(cur)?);
                                if cur.eat(&Tok::Comma) {
                                    continue;
                                }
                                cur.expect(Tok::RParen)?;
                                break;
                            }
                        }
                    }
                    if is_ctor {
                        Ok(Rexp::Ctor(sym, args))
                    } else {
                        Ok(Rexp::App(sym, args))
                    }
                } else {
                    Err(err(at, &format!("unknown name '{name}'")))
                }
            }
            other => Err(err(
                at,
                &format!(
                    "expected an argument, found {}",
                    other.map(|t| t.describe()).unwrap_or_else(|| "end of item".into())
                ),
            )),
        }
    }

    // ---- patterns ----

    fn parse_pattern(
        &mut self,
        cur: &mut Cursor,
        bound: &mut Vec<String>,
    ) -> Result<Pattern, ParseError> {
        let head = self.parse_pattern_atom(cur, bound)?;
        if cur.eat(&Tok::ColonColon) {
            let tail = self.parse_pattern(cur, bound)?;
            Ok(Pattern::Ctor(Sym::CONS, vec![head, tail]))
        } else {
            Ok(head)
        }
    }

    fn parse_pattern_atom(
        &mut self,
        cur: &mut Cursor,
        bound: &mut Vec<String>,
    ) -> Result<Pattern, ParseError> {
        let at = cur.at();
        match cur.peek().cloned() {
            Some(Tok::Underscore) => {
                cur.next();
                bound.push("_".into());
                Ok(Pattern::Var(self.defs.interner.intern("_")))
            }
            Some(Tok::Star) => {
                cur.next();
                Ok(Pattern::Ctor(Sym::STAR, vec![]))
            }
            Some(Tok::Num(n)) => {
                cur.next();
                let sym = self.defs.interner.intern(&n);
                Ok(Pattern::Ctor(sym, vec![]))
            }
            Some(Tok::LParen) => {
                cur.next();
                let p = self.parse_pattern(cur, bound)?;
                cur.expect(Tok::RParen)?;
                Ok(p)
            }
            Some(Tok::LBracket) => {
                cur.next();
                let mut items = Vec::new();
                if !cur.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.parse_pattern(cur, bound)?);
                        if cur.eat(&Tok::Semi) {
                            continue;
                        }
                        cur.expect(Tok::RBracket)?;
                        break;
                    }
                }
                Ok(items
                    .into_iter()
                    .rev()
                    .fold(Pattern::Ctor(Sym::NIL, vec![]), |acc, p| {
                        Pattern::Ctor(Sym::CONS, vec![p, acc])
                    }))
            }
            Some(Tok::Ident(name)) if name == "nil" => {
                cur.next();
                Ok(Pattern::Ctor(Sym::NIL, vec![]))
            }
            Some(Tok::Ident(name)) => {
                cur.next();
                let sym = self.defs.interner.get(&name);
                if let Some(sym) = sym.filter(|s| self.defs.ctors.contains_key(s)) {
                    let mut args = Vec::new();
                    if cur.eat(&Tok::LParen) {
                        if !cur.eat(&Tok::RParen) {
                            loop {
                                args.push(self.parse_pattern(cur, bound)?);
                                if cur.eat(&Tok::Comma) {
                                    continue;
                                }
                                cur.expect(Tok::RParen)?;
                                break;
                            }
                        }
                    }
                    let want = self.defs.ctors[&sym].params.len();
                    if args.len() != want {
                        return Err(err(
                            at,
                            &format!(
                                "constructor '{name}' expects {want} argument(s), found {}",
                                args.len()
                            ),
                        ));
                    }
                    Ok(Pattern::Ctor(sym, args))
                } else {
                    if bound.contains(&name) {
                        return Err(err(
                            at,
                            &format!("pattern variable '{name}' is not linear"),
                        ));
                    }
                    bound.push(name.clone());
                    let sym = self.defs.interner.intern(&name);
                    Ok(Pattern::Var(sym))
                }
            }
            other => Err(err(
                at,
                &format!(
                    "expected a pattern, found {}",
                    other.map(|t| t.describe()).unwrap_or_else(|| "end of item".into())
                ),
            )),
        }
    }

    // ---- programs ----

    fn parse_program(&mut self, cur: &mut Cursor) -> Result<Program, ParseError> {
        let mut acc = self.parse_par(cur)?;
        while cur.eat(&Tok::Choice) {
            let rhs = self.parse_par(cur)?;
            acc = self.desugar_choice(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_par(&mut self, cur: &mut Cursor) -> Result<Program, ParseError> {
        let mut acc = self.parse_unary(cur)?;
        while cur.eat(&Tok::ParOp) {
            let rhs = self.parse_unary(cur)?;
            acc = Program::Par(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn parse_unary(&mut self, cur: &mut Cursor) -> Result<Program, ParseError> {
        match cur.peek() {
            Some(Tok::Ident(w)) if w == "new" => {
                cur.next();
                let mut hints = Vec::new();
                let mut names = Vec::new();
                loop {
                    let (name, _) = cur.ident("a signal name")?;
                    hints.push(self.defs.interner.intern(&name));
                    names.push(name);
                    if cur.eat(&Tok::Comma) {
                        continue;
                    }
                    break;
                }
                let (in_kw, at) = cur.ident("'in'")?;
                if in_kw != "in" {
                    return Err(err(at, "expected 'in' after new"));
                }
                self.scopes.push(names);
                let body = self.parse_program(cur);
                self.scopes.pop();
                Ok(Program::New {
                    hints,
                    body: Box::new(body?),
                })
            }
            Some(Tok::Ident(w)) if w == "pause" => {
                cur.next();
                cur.expect(Tok::Dot)?;
                let k = self.parse_continuation(cur)?;
                Ok(self.desugar_pause(k))
            }
            _ => self.parse_atom(cur),
        }
    }

    fn parse_atom(&mut self, cur: &mut Cursor) -> Result<Program, ParseError> {
        let at = cur.at();
        match cur.peek().cloned() {
            Some(Tok::Num(n)) if n == "0" => {
                cur.next();
                Ok(Program::Nil)
            }
            Some(Tok::LParen) => {
                cur.next();
                let p = self.parse_program(cur)?;
                cur.expect(Tok::RParen)?;
                Ok(p)
            }
            Some(Tok::Ident(w)) if w == "emit" => {
                cur.next();
                let s = self.signal_ref(cur)?;
                let e = self.parse_expr(cur)?;
                Ok(Program::Emit(s, e))
            }
            Some(Tok::Ident(w)) if w == "present" => {
                cur.next();
                let s = self.signal_ref(cur)?;
                cur.expect(Tok::LParen)?;
                let (var, _) = cur.ident("a variable")?;
                cur.expect(Tok::RParen)?;
                cur.expect(Tok::LBrace)?;
                let hint = self.defs.interner.intern(&var);
                self.scopes.push(vec![var]);
                let body = self.parse_program(cur);
                self.scopes.pop();
                let body = body?;
                cur.expect(Tok::RBrace)?;
                let (else_kw, at) = cur.ident("'else'")?;
                if else_kw != "else" {
                    return Err(err(at, "expected 'else' after present body"));
                }
                let els = self.parse_continuation(cur)?;
                Ok(Program::Present {
                    signal: s,
                    hint,
                    body: Box::new(body),
                    els,
                })
            }
            Some(Tok::Ident(w)) if w == "if" => {
                cur.next();
                let left = self.signal_ref(cur)?;
                cur.expect(Tok::Eq)?;
                let right = self.signal_ref(cur)?;
                cur.expect(Tok::LBrace)?;
                let then_br = self.parse_program(cur)?;
                cur.expect(Tok::RBrace)?;
                let (else_kw, at) = cur.ident("'else'")?;
                if else_kw != "else" {
                    return Err(err(at, "expected 'else' in if"));
                }
                cur.expect(Tok::LBrace)?;
                let else_br = self.parse_program(cur)?;
                cur.expect(Tok::RBrace)?;
                Ok(Program::MatchSig {
                    left,
                    right,
                    then_br: Box::new(then_br),
                    else_br: Box::new(else_br),
                })
            }
            Some(Tok::Ident(w)) if w == "match" => {
                cur.next();
                let subject = self.parse_expr(cur)?;
                let (with_kw, at2) = cur.ident("'with'")?;
                if with_kw != "with" {
                    return Err(err(at2, "expected 'with' in match"));
                }
                let mut bound = Vec::new();
                let pattern = self.parse_pattern(cur, &mut bound)?;
                cur.expect(Tok::Arrow)?;
                let bound: Vec<String> = bound
                    .into_iter()
                    .enumerate()
                    .map(|(i, n)| if n == "_" { format!("_w{i}") } else { n })
                    .collect();
                self.scopes.push(bound);
                let then_br = self.parse_atom(cur);
                self.scopes.pop();
                let then_br = then_br?;
                cur.expect(Tok::Pipe)?;
                cur.expect(Tok::Underscore)?;
                cur.expect(Tok::Arrow)?;
                let else_br = self.parse_atom(cur)?;
                Ok(Program::MatchVal {
                    subject,
                    pattern,
                    then_br: Box::new(then_br),
                    else_br: Box::new(else_br),
                })
            }
            Some(Tok::Ident(name)) if name.chars().next().is_some_and(|c| c.is_uppercase()) => {
                cur.next();
                let sym = self
                    .defs
                    .interner
                    .get(&name)
                    .filter(|s| self.defs.threads.contains_key(s))
                    .ok_or_else(|| err(at, &format!("unknown thread identifier '{name}'")))?;
                cur.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if !cur.eat(&Tok::RParen) {
                    loop {
                        args.push(self.parse_expr(cur)?);
                        if cur.eat(&Tok::Comma) {
                            continue;
                        }
                        cur.expect(Tok::RParen)?;
                        break;
                    }
                }
                let want = self.defs.threads[&sym].params.len();
                if args.len() != want {
                    return Err(err(
                        at,
                        &format!(
                            "thread '{name}' expects {want} argument(s), found {}",
                            args.len()
                        ),
                    ));
                }
                Ok(Program::Call(sym, args))
            }
            other => Err(err(
                at,
                &format!(
                    "expected a program, found {}",
                    other.map(|t| t.describe()).unwrap_or_else(|| "end of item".into())
                ),
            )),
        }
    }

    fn parse_continuation(&mut self, cur: &mut Cursor) -> Result<Continuation, ParseError> {
        let at = cur.at();
        match cur.peek().cloned() {
            Some(Tok::Num(n)) if n == "0" => {
                cur.next();
                Ok(Continuation::Halt)
            }
            Some(Tok::Ident(name)) if name.chars().next().is_some_and(|c| c.is_uppercase()) => {
                cur.next();
                let sym = self
                    .defs
                    .interner
                    .get(&name)
                    .filter(|s| self.defs.threads.contains_key(s))
                    .ok_or_else(|| err(at, &format!("unknown thread identifier '{name}'")))?;
                cur.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if !cur.eat(&Tok::RParen) {
                    loop {
                        args.push(self.parse_rexp(cur)?);
                        if cur.eat(&Tok::Comma) {
                            continue;
                        }
                        cur.expect(Tok::RParen)?;
                        break;
                    }
                }
                let want = self.defs.threads[&sym].params.len();
                if args.len() != want {
                    return Err(err(
                        at,
                        &format!(
                            "thread '{name}' expects {want} argument(s), found {}",
                            args.len()
                        ),
                    ));
                }
                Ok(Continuation::Call(sym, args))
            }
            other => Err(err(
                at,
                &format!(
                    "expected a continuation (a call or 0), found {}",
                    other.map(|t| t.describe()).unwrap_or_else(|| "end of item".into())
                ),
            )),
        }
    }

    /// `P + Q` becomes
    /// `new c in (emit c 0 || emit c 1 || present c(x) { match x with 0 -> (P) | _ -> (Q) } else 0)`:
    /// the present statement picks one of the competing values, which is
    /// the whole content of an internal choice made within the instant.
    fn desugar_choice(&mut self, p: Program, q: Program) -> Program {
        let c_hint = self.fresh_hint("c");
        let x_hint = self.fresh_hint("x");
        let zero = self.defs.interner.intern("0");
        let one = self.defs.interner.intern("1");
        let p = shift_program(&p, 3, 0);
        let q = shift_program(&q, 2, 0);
        let chooser = Program::Present {
            signal: Name::Idx(0, 0),
            hint: x_hint,
            body: Box::new(Program::MatchVal {
                subject: Expr::Var(Name::Idx(0, 0)),
                pattern: Pattern::Ctor(zero, vec![]),
                then_br: Box::new(p),
                else_br: Box::new(q),
            }),
            els: Continuation::Halt,
        };
        Program::New {
            hints: vec![c_hint],
            body: Box::new(Program::par([
                Program::Emit(Name::Idx(0, 0), Expr::Ctor(zero, vec![])),
                Program::Emit(Name::Idx(0, 0), Expr::Ctor(one, vec![])),
                chooser,
            ])),
        }
    }

    /// `pause.K` becomes `new p in present p(z) { 0 } else K`: no value
    /// is ever emitted on the generated signal, so the continuation runs
    /// at the end of the instant.
    fn desugar_pause(&mut self, k: Continuation) -> Program {
        let p_hint = self.fresh_hint("p");
        let z_hint = self.fresh_hint("z");
        let k = crate::syntax::subst::shift_continuation(&k, 1, 0);
        Program::New {
            hints: vec![p_hint],
            body: Box::new(Program::Present {
                signal: Name::Idx(0, 0),
                hint: z_hint,
                body: Box::new(Program::Nil),
                els: k,
            }),
        }
    }
}

/// Parse a source file into a module, or report every positioned error.
pub fn parse(src: &str) -> Result<Module, Vec<ParseError>> {
    let mut errors = Vec::new();
    let items = split_items(src, &mut errors);
    let mut p = Parser {
        defs: DefTable::new(),
        scopes: Vec::new(),
        tyvar_counter: 0,
        sugar_counter: 0,
    };

    // Register the anonymous-wildcard hint eagerly so that slot hints
    // always resolve.
    p.defs.interner.intern("_");

    // Pass 1: type names.
    for item in &items {
        if matches!(classify(item), ItemKind::TypeDecl) {
            let mut cur = Cursor::new(&item.toks);
            cur.next();
            if let Ok((name, at)) = cur.ident("a type name") {
                if is_reserved(&name) {
                    errors.push(err(at, &format!("reserved type name '{name}'")));
                    continue;
                }
                let sym = p.defs.interner.intern(&name);
                if p.defs.types.insert(sym, Vec::new()).is_some() {
                    errors.push(err(at, &format!("duplicate type declaration '{name}'")));
                }
            }
        }
    }

    // Pass 2: constructor signatures, signal declarations, fun and
    // thread heads.
    for item in &items {
        let mut cur = Cursor::new(&item.toks);
        match classify(item) {
            ItemKind::TypeDecl => {
                if let Err(e) = parse_type_decl(&mut p, &mut cur) {
                    errors.push(e);
                }
            }
            ItemKind::SignalDecl => {
                cur.next();
                let r = (|| -> Result<(), ParseError> {
                    let (name, at) = cur.ident("a signal name")?;
                    if is_reserved(&name) {
                        return Err(err(at, &format!("reserved name '{name}'")));
                    }
                    cur.expect(Tok::Colon)?;
                    let ty = p.parse_type(&mut cur)?;
                    let sym = p.defs.interner.intern(&name);
                    if p.defs.signals.insert(sym, ty).is_some() {
                        return Err(err(at, &format!("duplicate signal declaration '{name}'")));
                    }
                    Ok(())
                })();
                if let Err(e) = r {
                    errors.push(e);
                }
            }
            ItemKind::FunEq => {
                cur.next();
                if let Ok((name, at)) = cur.ident("a function name") {
                    let sym = p.defs.interner.intern(&name);
                    let mut depth = 0i32;
                    let mut commas = 0usize;
                    let mut any = false;
                    for s in &item.toks[cur.pos..] {
                        match s.tok {
                            Tok::LParen | Tok::LBracket => {
                                if depth >= 1 {
                                    any = true;
                                }
                                depth += 1;
                            }
                            Tok::RParen | Tok::RBracket => {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                                any = true;
                            }
                            Tok::Comma if depth == 1 => {
                                commas += 1;
                                any = true;
                            }
                            _ if depth >= 1 => any = true,
                            _ => {}
                        }
                    }
                    let arity = if any || commas > 0 { commas + 1 } else { 0 };
                    let entry = p.defs.funs.entry(sym).or_insert_with(|| FunDef {
                        arity,
                        equations: Vec::new(),
                        param_types: Vec::new(),
                        result_type: Type::Var(0),
                    });
                    if entry.arity != arity {
                        errors.push(err(
                            at,
                            &format!("equation arity mismatch for function '{name}'"),
                        ));
                    }
                }
            }
            ItemKind::ThreadDef => {
                let r = (|| -> Result<(), ParseError> {
                    let (name, at) = cur.ident("a thread identifier")?;
                    let sym = p.defs.interner.intern(&name);
                    cur.expect(Tok::LParen)?;
                    let mut params = Vec::new();
                    let mut param_types = Vec::new();
                    if !cur.eat(&Tok::RParen) {
                        loop {
                            let (pname, _) = cur.ident("a parameter")?;
                            params.push(p.defs.interner.intern(&pname));
                            if cur.eat(&Tok::Colon) {
                                let t = p.parse_type(&mut cur)?;
                                param_types.push(t);
                            } else {
                                let t = p.fresh_tyvar();
                                param_types.push(t);
                            }
                            if cur.eat(&Tok::Comma) {
                                continue;
                            }
                            cur.expect(Tok::RParen)?;
                            break;
                        }
                    }
                    let def = ThreadDef {
                        params,
                        param_types,
                        body: Program::Nil,
                    };
                    if p.defs.threads.insert(sym, def).is_some() {
                        return Err(err(at, &format!("duplicate thread definition '{name}'")));
                    }
                    Ok(())
                })();
                if let Err(e) = r {
                    errors.push(e);
                }
            }
            _ => {}
        }
    }

    // Pass 3: bodies, equations, inputs, root.
    let mut root: Option<Program> = None;
    let mut alphabet = Alphabet::default();
    for item in &items {
        let mut cur = Cursor::new(&item.toks);
        match classify(item) {
            ItemKind::TypeDecl | ItemKind::SignalDecl => {}
            ItemKind::FunEq => {
                cur.next();
                let r = (|| -> Result<(), ParseError> {
                    let (name, _) = cur.ident("a function name")?;
                    let sym = p.defs.interner.intern(&name);
                    cur.expect(Tok::LParen)?;
                    let mut bound = Vec::new();
                    let mut patterns = Vec::new();
                    if !cur.eat(&Tok::RParen) {
                        loop {
                            patterns.push(p.parse_pattern(&mut cur, &mut bound)?);
                            if cur.eat(&Tok::Comma) {
                                continue;
                            }
                            cur.expect(Tok::RParen)?;
                            break;
                        }
                    }
                    cur.expect(Tok::Eq)?;
                    let bound: Vec<String> = bound
                        .into_iter()
                        .enumerate()
                        .map(|(i, n)| if n == "_" { format!("_w{i}") } else { n })
                        .collect();
                    p.scopes.push(bound);
                    let rhs = p.parse_expr(&mut cur);
                    p.scopes.pop();
                    let rhs = rhs?;
                    if !cur.done() {
                        return Err(err(cur.at(), "unexpected trailing tokens"));
                    }
                    p.defs
                        .funs
                        .get_mut(&sym)
                        .expect("fun head registered")
                        .equations
                        .push(FunEquation { patterns, rhs });
                    Ok(())
                })();
                if let Err(e) = r {
                    errors.push(e);
                }
            }
            ItemKind::InputDecl => {
                cur.next();
                let r = (|| -> Result<(), ParseError> {
                    let (name, at) = cur.ident("a signal name")?;
                    let sym = p
                        .defs
                        .interner
                        .get(&name)
                        .filter(|s| p.defs.signals.contains_key(s))
                        .ok_or_else(|| err(at, &format!("undeclared signal '{name}' in input")))?;
                    cur.expect(Tok::Colon)?;
                    loop {
                        let at = cur.at();
                        let e = p.parse_expr(&mut cur)?;
                        let v = e
                            .as_value()
                            .ok_or_else(|| err(at, "input values must be literal values"))?;
                        alphabet.pairs.push((sym, v));
                        if cur.eat(&Tok::Comma) {
                            continue;
                        }
                        break;
                    }
                    let _ = cur.eat(&Tok::Semi);
                    if !cur.done() {
                        return Err(err(cur.at(), "unexpected trailing tokens"));
                    }
                    Ok(())
                })();
                if let Err(e) = r {
                    errors.push(e);
                }
            }
            ItemKind::ThreadDef => {
                let r = (|| -> Result<(), ParseError> {
                    let (name, _) = cur.ident("a thread identifier")?;
                    let sym = p.defs.interner.intern(&name);
                    // Skip past the parameter list (already registered).
                    let mut depth = 0i32;
                    loop {
                        match cur.next().map(|s| &s.tok) {
                            Some(Tok::LParen) => depth += 1,
                            Some(Tok::RParen) => {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                            Some(_) => {}
                            None => return Err(err(cur.at(), "unterminated parameter list")),
                        }
                    }
                    cur.expect(Tok::Eq)?;
                    let params = p.defs.threads[&sym]
                        .params
                        .iter()
                        .map(|s| p.defs.name(*s).to_string())
                        .collect();
                    p.scopes.push(params);
                    let body = p.parse_program(&mut cur);
                    p.scopes.pop();
                    let body = body?;
                    if !cur.done() {
                        return Err(err(cur.at(), "unexpected trailing tokens"));
                    }
                    p.defs.threads.get_mut(&sym).unwrap().body = body;
                    Ok(())
                })();
                if let Err(e) = r {
                    errors.push(e);
                }
            }
            ItemKind::RootProgram => {
                let line = item.line;
                let r = (|| -> Result<Program, ParseError> {
                    let prog = p.parse_program(&mut cur)?;
                    if !cur.done() {
                        return Err(err(cur.at(), "unexpected trailing tokens"));
                    }
                    Ok(prog)
                })();
                match r {
                    Ok(prog) => {
                        if root.is_some() {
                            errors.push(ParseError {
                                line,
                                col: 1,
                                msg: "multiple root programs (only one bare program item is allowed)"
                                    .into(),
                            });
                        } else {
                            root = Some(prog);
                        }
                    }
                    Err(e) => errors.push(e),
                }
            }
        }
    }

    if errors.is_empty() {
        Ok(Module {
            defs: p.defs,
            root,
            alphabet,
            next_tyvar: p.tyvar_counter + 1,
        })
    } else {
        Err(errors)
    }
}

fn parse_type_decl(p: &mut Parser, cur: &mut Cursor) -> Result<(), ParseError> {
    cur.next();
    let (name, _) = cur.ident("a type name")?;
    let tysym = p.defs.interner.intern(&name);
    cur.expect(Tok::Eq)?;
    let mut ctors = Vec::new();
    loop {
        let (cname, at) = cur.ident("a constructor name")?;
        if ["nil", "cons"].contains(&cname.as_str()) {
            return Err(err(at, &format!("reserved constructor name '{cname}'")));
        }
        let csym = p.defs.interner.intern(&cname);
        let mut params = Vec::new();
        if cur.eat(&Tok::LParen) {
            if !cur.eat(&Tok::RParen) {
                loop {
                    params.push(p.parse_type(cur)?);
                    if cur.eat(&Tok::Comma) {
                        continue;
                    }
                    cur.expect(Tok::RParen)?;
                    break;
                }
            }
        }
        let sig = CtorSig {
            params,
            result: Type::Data(tysym),
        };
        if p.defs.ctors.insert(csym, sig).is_some() {
            return Err(err(at, &format!("duplicate constructor '{cname}'")));
        }
        ctors.push(csym);
        if cur.eat(&Tok::Pipe) {
            continue;
        }
        break;
    }
    if !cur.done() {
        return Err(err(cur.at(), "unexpected trailing tokens"));
    }
    p.defs.types.insert(tysym, ctors);
    Ok(())
}
