//! Recursive-descent parser for the ASCII formula grammar.
//!
//! ```text
//! formula := 'E' var '.' formula | 'A' var '.' formula | disj
//! disj    := conj ('|' conj)*
//! conj    := neg ('&' neg)*
//! neg     := '!' neg | '(' formula ')' | atom
//! atom    := term '=' term | term '!=' term | pred '(' term ')'
//!          | rel '(' var (',' var)* ')' | '#>=' int var '.' formula
//!          | 'true' | 'false'
//! term    := var | const | func '(' term ')' | func '^-1' '(' term ')'
//! ```
//!
//! Quantifiers and cardinality atoms extend to the end of the enclosing
//! scope, and may also start an operand of `!`, `&` or `|`.

use std::collections::BTreeMap;

use super::{Atom, Formula, Query, Signature, SignatureKind, Step, SymbolKind, Term, MAX_TERM_LEN};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Dot,
    LParen,
    RParen,
    Comma,
    Eq,
    Neq,
    Bang,
    Amp,
    Bar,
    CardGe,
    Inv,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| Error::Syntax {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
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
            advance(1, &mut i, &mut col);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let tok = if rest.starts_with("#>=") {
            advance(3, &mut i, &mut col);
            Tok::CardGe
        } else if rest.starts_with("^-1") {
            advance(3, &mut i, &mut col);
            Tok::Inv
        } else if rest.starts_with("!=") {
            advance(2, &mut i, &mut col);
            Tok::Neq
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
                col += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
                col += 1;
            }
            Tok::Int(chars[start..i].iter().collect())
        } else {
            let t = match c {
                '.' => Tok::Dot,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '=' => Tok::Eq,
                '!' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Bar,
                other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
            };
            advance(1, &mut i, &mut col);
            t
        };
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// Symbols seen while parsing without a declared signature.
#[derive(Default)]
struct Inferred {
    kinds: BTreeMap<String, SymbolKind>,
    order: Vec<String>,
}

impl Inferred {
    fn note(&mut self, name: &str, kind: SymbolKind) -> Result<()> {
        match self.kinds.get(name) {
            Some(k) if *k == kind => Ok(()),
            Some(k) => Err(Error::Formula(format!(
                "symbol `{name}` used both as {k:?} and as {kind:?}"
            ))),
            None => {
                self.kinds.insert(name.to_string(), kind);
                self.order.push(name.to_string());
                Ok(())
            }
        }
    }
}

enum Mode<'s> {
    Strict(&'s Signature),
    Infer(Inferred),
}

struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    mode: Mode<'s>,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        Error::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error_here(format!("expected {what}, found {}", describe(&other)))),
        }
    }

    fn is_constant(&self, name: &str) -> bool {
        match &self.mode {
            Mode::Strict(sig) => sig.is_constant(name),
            Mode::Infer(_) => false,
        }
    }

    fn starts_binder(&self) -> bool {
        match self.peek() {
            Tok::CardGe => true,
            Tok::Ident(q) if q == "E" || q == "A" => {
                matches!(self.peek_at(1), Tok::Ident(_)) && *self.peek_at(2) == Tok::Dot
            }
            _ => false,
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        if self.starts_binder() {
            self.binder()
        } else {
            self.disj()
        }
    }

    fn binder(&mut self) -> Result<Formula> {
        if *self.peek() == Tok::CardGe {
            self.bump();
            let k = match self.peek().clone() {
                Tok::Int(s) => {
                    let k: u64 = s.parse().map_err(|_| {
                        self.error_here(format!("cardinality bound `{s}` exceeds 2^64-1"))
                    })?;
                    if k == 0 {
                        return Err(self.error_here("cardinality bound must be positive"));
                    }
                    self.bump();
                    k
                }
                other => {
                    return Err(self.error_here(format!(
                        "expected cardinality bound, found {}",
                        describe(&other)
                    )))
                }
            };
            let var = self.bound_var()?;
            self.expect(Tok::Dot, "`.`")?;
            let body = self.formula()?;
            if !body.is_quantifier_free() {
                return Err(Error::Formula(format!(
                    "cardinality body over `{var}` must be quantifier-free"
                )));
            }
            let others: Vec<String> = body.free_vars().into_iter().filter(|v| *v != var).collect();
            if !others.is_empty() {
                return Err(Error::Formula(format!(
                    "cardinality body over `{var}` mentions other variable(s): {}",
                    others.join(", ")
                )));
            }
            if body.has_relational_atom() {
                return Err(Error::Formula(
                    "cardinality body must not contain relational atoms".into(),
                ));
            }
            return Ok(Formula::card(k, var, body));
        }
        let q = self.ident("quantifier")?;
        let var = self.bound_var()?;
        self.expect(Tok::Dot, "`.`")?;
        let body = self.formula()?;
        Ok(if q == "E" {
            Formula::exists(var, body)
        } else {
            Formula::forall(var, body)
        })
    }

    fn bound_var(&mut self) -> Result<String> {
        let v = self.ident("variable")?;
        if self.is_constant(&v) {
            return Err(self.error_here(format!("cannot bind constant `{v}`")));
        }
        Ok(v)
    }

    fn disj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conj()?];
        while *self.peek() == Tok::Bar {
            self.bump();
            parts.push(self.conj()?);
        }
        Ok(Formula::or(parts))
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.neg()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            parts.push(self.neg()?);
        }
        Ok(Formula::and(parts))
    }

    fn neg(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.neg()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ if self.starts_binder() => self.binder(),
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            other => {
                return Err(self.error_here(format!("expected atom, found {}", describe(&other))))
            }
        };
        if name == "true" {
            self.bump();
            return Ok(Formula::t());
        }
        if name == "false" {
            self.bump();
            return Ok(Formula::f());
        }
        if *self.peek_at(1) == Tok::LParen {
            match &self.mode {
                Mode::Strict(sig) => match sig.lookup(&name) {
                    Some(SymbolKind::Function) => {}
                    Some(SymbolKind::Predicate) => {
                        self.bump();
                        self.bump();
                        let t = self.term()?;
                        self.expect(Tok::RParen, "`)`")?;
                        return Ok(Formula::pred(name, t));
                    }
                    Some(SymbolKind::Relation(arity)) => {
                        self.bump();
                        let args = self.var_list()?;
                        if args.len() != arity {
                            return Err(Error::ArityMismatch {
                                name,
                                expected: arity,
                                found: args.len(),
                            });
                        }
                        return Ok(Formula::Atom(Atom::Rel(name, args)));
                    }
                    Some(SymbolKind::Constant) => {
                        return Err(self.error_here(format!("constant `{name}` applied")))
                    }
                    None => return Err(Error::UndeclaredSymbol(name)),
                },
                Mode::Infer(_) => {
                    // Decide between an application in term position and a
                    // predicate/relation atom after reading the arguments.
                    let save = self.pos;
                    self.bump();
                    self.bump();
                    let mut args = vec![self.term()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    let is_term = matches!(self.peek(), Tok::Eq | Tok::Neq) && args.len() == 1;
                    if !is_term {
                        if args.len() == 1 {
                            self.note(&name, SymbolKind::Predicate)?;
                            return Ok(Formula::pred(name, args.pop().unwrap()));
                        }
                        let mut vars = Vec::new();
                        for a in args {
                            match (a.is_bare(), a.var_name()) {
                                (true, Some(v)) => vars.push(v.to_string()),
                                _ => {
                                    return Err(Error::Formula(format!(
                                        "relation `{name}` takes variables only"
                                    )))
                                }
                            }
                        }
                        self.note(&name, SymbolKind::Relation(vars.len()))?;
                        return Ok(Formula::Atom(Atom::Rel(name, vars)));
                    }
                    self.pos = save;
                }
            }
        }
        let lhs = self.term()?;
        let negated = match self.peek() {
            Tok::Eq => false,
            Tok::Neq => true,
            other => {
                return Err(
                    self.error_here(format!("expected `=` or `!=`, found {}", describe(other)))
                )
            }
        };
        self.bump();
        let rhs = self.term()?;
        let eq = Formula::eq(lhs, rhs);
        Ok(if negated { Formula::not(eq) } else { eq })
    }

    fn note(&mut self, name: &str, kind: SymbolKind) -> Result<()> {
        if let Mode::Infer(inf) = &mut self.mode {
            inf.note(name, kind)?;
        }
        Ok(())
    }

    fn var_list(&mut self) -> Result<Vec<String>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut vars = vec![self.plain_var()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            vars.push(self.plain_var()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(vars)
    }

    fn plain_var(&mut self) -> Result<String> {
        let v = self.ident("variable")?;
        if let Mode::Strict(sig) = &self.mode {
            if sig.lookup(&v).is_some() {
                return Err(self.error_here(format!("expected variable, found symbol `{v}`")));
            }
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<Term> {
        // Collect the applied functions outermost first, then the base.
        let mut outer: Vec<Step> = Vec::new();
        loop {
            let name = self.ident("term")?;
            let inverse = if *self.peek() == Tok::Inv {
                self.bump();
                true
            } else {
                false
            };
            if *self.peek() == Tok::LParen {
                match &self.mode {
                    Mode::Strict(sig) => {
                        if !sig.is_function(&name) {
                            return Err(match sig.lookup(&name) {
                                None => Error::UndeclaredSymbol(name),
                                Some(_) => self.error_here(format!("`{name}` is not a function")),
                            });
                        }
                    }
                    Mode::Infer(_) => self.note(&name, SymbolKind::Function)?,
                }
                self.bump();
                outer.push(if inverse {
                    Step::inverse(name)
                } else {
                    Step::forward(name)
                });
                if outer.len() > MAX_TERM_LEN {
                    return Err(Error::Resource(format!(
                        "term longer than {MAX_TERM_LEN} steps"
                    )));
                }
                continue;
            }
            if inverse {
                return Err(self.error_here("expected `(` after `^-1`"));
            }
            let base = match &self.mode {
                Mode::Strict(sig) => match sig.lookup(&name) {
                    Some(SymbolKind::Constant) => Term::constant(name),
                    None => Term::var(name),
                    Some(_) => {
                        return Err(self.error_here(format!("`{name}` used as a term")));
                    }
                },
                Mode::Infer(_) => Term::var(name),
            };
            for _ in 0..outer.len() {
                self.expect(Tok::RParen, "`)`")?;
            }
            outer.reverse();
            return Ok(Term {
                base: base.base,
                steps: outer,
            }
            .canonicalize());
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(s) => format!("`{s}`"),
        Tok::Dot => "`.`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Neq => "`!=`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Bar => "`|`".into(),
        Tok::CardGe => "`#>=`".into(),
        Tok::Inv => "`^-1`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn parse_with<'s>(text: &str, mode: Mode<'s>) -> Result<(Formula, Mode<'s>)> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, mode };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", describe(p.peek()))));
    }
    Ok((f, p.mode))
}

/// Parse a formula against a declared signature.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Query> {
    let (f, _) = parse_with(text, Mode::Strict(sig))?;
    if sig.kind() == SignatureKind::UnaryFunctional && f.has_relational_atom() {
        return Err(Error::Formula(
            "relational atom under a unary-functional signature".into(),
        ));
    }
    Ok(Query::new(f))
}

/// Alias of [`parse_formula`].
pub fn parse_query(text: &str, sig: &Signature) -> Result<Query> {
    parse_formula(text, sig)
}

/// Parse a formula without a declared signature, inferring one from usage.
///
/// Applied names compared with `=` are functions; other one-argument
/// applications are monadic predicates, or unary relations when the formula
/// also has relational atoms of higher arity. Bare names are variables.
pub fn parse_formula_inferred(text: &str) -> Result<(Query, Signature)> {
    let (f, mode) = parse_with(text, Mode::Infer(Inferred::default()))?;
    let Mode::Infer(inf) = mode else {
        unreachable!()
    };
    let relational = inf
        .kinds
        .values()
        .any(|k| matches!(k, SymbolKind::Relation(_)));
    let mut sig = if relational {
        Signature::relational()
    } else {
        Signature::unary_functional()
    };
    for name in &inf.order {
        match inf.kinds[name] {
            SymbolKind::Function => sig.add_function(name)?,
            SymbolKind::Predicate if relational => sig.add_relation(name, 1)?,
            SymbolKind::Predicate => sig.add_predicate(name)?,
            SymbolKind::Relation(a) => sig.add_relation(name, a)?,
            SymbolKind::Constant => sig.add_constant(name)?,
        }
    }
    let f = if relational {
        let mut err = None;
        let g = f.map_atoms(&mut |a| match a {
            Atom::Pred(p, t) => match (t.is_bare(), t.var_name()) {
                (true, Some(v)) => Formula::Atom(Atom::Rel(p.clone(), vec![v.to_string()])),
                _ => {
                    err = Some(Error::Formula(format!(
                        "relation `{p}` takes variables only"
                    )));
                    Formula::Atom(a.clone())
                }
            },
            other => Formula::Atom(other.clone()),
        });
        if let Some(e) = err {
            return Err(e);
        }
        g
    } else {
        f
    };
    Ok((Query::new(f), sig))
}
