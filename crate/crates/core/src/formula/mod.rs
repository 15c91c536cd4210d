//! First-order formulas over relational and unary-functional signatures.
//!
//! One AST serves both worlds: relational atoms `R(x, y)` for structures of
//! bounded degree, and bijective atoms (equalities of bijective terms,
//! monadic predicates, cardinality statements) for structures whose unary
//! functions are permutations.

mod normal;
mod parse;
mod print;
mod signature;

use std::collections::BTreeSet;

pub use normal::{
    orient_equality, simplify, solve_for, substitute, to_disjoint_dnf, to_dnf, to_dnf_bounded,
    Conj, DisjointDnf, Dnf, Literal, Oriented, DEFAULT_DNF_LIMIT,
};
pub use parse::{parse_formula, parse_formula_inferred, parse_query};
pub use signature::{Signature, SignatureKind, SymbolKind};

/// Maximum number of hops in a bijective term.
pub const MAX_TERM_LEN: usize = 1 << 16;

/// Variable name used for the bound variable of cardinality atoms produced
/// by elimination.
pub const CARD_VAR: &str = "_y";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Forward,
    Inverse,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Forward => Sign::Inverse,
            Sign::Inverse => Sign::Forward,
        }
    }
}

/// One application of a unary function symbol or of its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub func: String,
    pub sign: Sign,
}

impl Step {
    pub fn forward(func: impl Into<String>) -> Self {
        Step {
            func: func.into(),
            sign: Sign::Forward,
        }
    }

    pub fn inverse(func: impl Into<String>) -> Self {
        Step {
            func: func.into(),
            sign: Sign::Inverse,
        }
    }

    fn cancels(&self, other: &Step) -> bool {
        self.func == other.func && self.sign != other.sign
    }
}

/// What a bijective term is applied to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    Var(String),
    Const(String),
    /// A domain element injected as a constant.
    Elem(u32),
}

impl Base {
    pub fn var(&self) -> Option<&str> {
        match self {
            Base::Var(v) => Some(v),
            _ => None,
        }
    }
}

/// A bijective term `f1^e1 ... fl^el (base)`.
///
/// `steps` is stored innermost first: `steps[0]` is applied to the base
/// before `steps[1]`, so `f(g^-1(x))` has steps `[g^-1, f]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub base: Base,
    pub steps: Vec<Step>,
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term {
            base: Base::Var(name.into()),
            steps: Vec::new(),
        }
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term {
            base: Base::Const(name.into()),
            steps: Vec::new(),
        }
    }

    pub fn elem(e: u32) -> Self {
        Term {
            base: Base::Elem(e),
            steps: Vec::new(),
        }
    }

    /// Apply one more step on the outside.
    pub fn apply(mut self, step: Step) -> Self {
        self.steps.push(step);
        self
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_bare(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn var_name(&self) -> Option<&str> {
        self.base.var()
    }

    /// Cancel every adjacent `f f^-1` / `f^-1 f` pair.
    pub fn canonicalize(&self) -> Term {
        Term {
            base: self.base.clone(),
            steps: cancel_steps(self.steps.iter().cloned()),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.steps.windows(2).all(|w| !w[0].cancels(&w[1]))
    }

    /// The word of the reciprocal function, as steps applied innermost first.
    pub fn inverse_steps(steps: &[Step]) -> Vec<Step> {
        steps
            .iter()
            .rev()
            .map(|s| Step {
                func: s.func.clone(),
                sign: s.sign.flip(),
            })
            .collect()
    }

    /// Replace the base by `inner`, i.e. compute `self[base := inner]`.
    pub fn compose_onto(&self, inner: &Term) -> Term {
        Term {
            base: inner.base.clone(),
            steps: cancel_steps(inner.steps.iter().chain(self.steps.iter()).cloned()),
        }
    }
}

fn cancel_steps(steps: impl Iterator<Item = Step>) -> Vec<Step> {
    let mut out: Vec<Step> = Vec::new();
    for s in steps {
        if out.last().is_some_and(|l| l.cancels(&s)) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// `s = t` between bijective terms; `τ(x) = c` is the case of a constant base.
    Eq(Term, Term),
    /// `U(τ(x))`.
    Pred(String, Term),
    /// `∃^{≥k} var. body`, a closed statement whose body mentions `var` only.
    Card {
        k: u64,
        var: String,
        body: Box<Formula>,
    },
    /// `R(x1, ..., xk)` over a relational signature.
    Rel(String, Vec<String>),
    True,
    False,
}

impl Atom {
    pub fn is_card(&self) -> bool {
        matches!(self, Atom::Card { .. })
    }

    /// Variables occurring free, in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut Vec<String>) {
        let mut push = |v: &str| {
            if !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        };
        match self {
            Atom::Eq(s, t) => {
                if let Some(v) = s.var_name() {
                    push(v);
                }
                if let Some(v) = t.var_name() {
                    push(v);
                }
            }
            Atom::Pred(_, t) => {
                if let Some(v) = t.var_name() {
                    push(v);
                }
            }
            Atom::Rel(_, args) => args.iter().for_each(|a| push(a)),
            Atom::Card { .. } | Atom::True | Atom::False => {}
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        match self {
            Atom::Eq(s, t) => s.var_name() == Some(v) || t.var_name() == Some(v),
            Atom::Pred(_, t) => t.var_name() == Some(v),
            Atom::Rel(_, args) => args.iter().any(|a| a == v),
            _ => false,
        }
    }

    pub fn canonicalize_terms(&self) -> Atom {
        match self {
            Atom::Eq(s, t) => Atom::Eq(s.canonicalize(), t.canonicalize()),
            Atom::Pred(p, t) => Atom::Pred(p.clone(), t.canonicalize()),
            Atom::Card { k, var, body } => Atom::Card {
                k: *k,
                var: var.clone(),
                body: Box::new(body.map_atoms(&mut |a| Formula::Atom(a.canonicalize_terms()))),
            },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Self {
        Formula::Atom(a)
    }

    pub fn t() -> Self {
        Formula::Atom(Atom::True)
    }

    pub fn f() -> Self {
        Formula::Atom(Atom::False)
    }

    pub fn eq(s: Term, t: Term) -> Self {
        Formula::Atom(Atom::Eq(s, t))
    }

    pub fn neq(s: Term, t: Term) -> Self {
        Formula::not(Formula::eq(s, t))
    }

    pub fn pred(p: impl Into<String>, t: Term) -> Self {
        Formula::Atom(Atom::Pred(p.into(), t))
    }

    pub fn rel(r: impl Into<String>, args: &[&str]) -> Self {
        Formula::Atom(Atom::Rel(
            r.into(),
            args.iter().map(|s| s.to_string()).collect(),
        ))
    }

    pub fn card(k: u64, var: impl Into<String>, body: Formula) -> Self {
        Formula::Atom(Atom::Card {
            k,
            var: var.into(),
            body: Box::new(body),
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn exists(v: impl Into<String>, f: Formula) -> Self {
        Formula::Exists(v.into(), Box::new(f))
    }

    pub fn forall(v: impl Into<String>, f: Formula) -> Self {
        Formula::Forall(v.into(), Box::new(f))
    }

    /// Conjunction, flattening nested conjunctions. An empty list is `true`.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::t(),
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction, flattening nested disjunctions. An empty list is `false`.
    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::f(),
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Formula::Atom(a) => {
                for v in a.free_vars() {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().for_each(|f| f.collect_free(bound, out))
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.free_vars().iter().any(|f| f == v)
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    pub fn has_relational_atom(&self) -> bool {
        self.any_atom(&mut |a| matches!(a, Atom::Rel(..)))
    }

    pub fn has_card_atom(&self) -> bool {
        self.any_atom(&mut |a| a.is_card())
    }

    pub fn any_atom(&self, pred: &mut impl FnMut(&Atom) -> bool) -> bool {
        match self {
            Formula::Atom(a) => pred(a),
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.any_atom(pred),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(|f| f.any_atom(pred)),
        }
    }

    /// Every atom in the formula, in left-to-right order.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
        }
    }

    /// Rebuild the formula with every atom replaced by `f(atom)`.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Formula) -> Formula {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Not(g) => Formula::not(g.map_atoms(f)),
            Formula::And(gs) => Formula::and(gs.iter().map(|g| g.map_atoms(f))),
            Formula::Or(gs) => Formula::or(gs.iter().map(|g| g.map_atoms(f))),
            Formula::Exists(v, g) => Formula::exists(v.clone(), g.map_atoms(f)),
            Formula::Forall(v, g) => Formula::forall(v.clone(), g.map_atoms(f)),
        }
    }

    /// Number of AST nodes, atoms and term steps included.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(a) => match a {
                Atom::Eq(s, t) => 1 + 1 + s.len() + 1 + t.len(),
                Atom::Pred(_, t) => 2 + t.len(),
                Atom::Card { body, .. } => 1 + body.size(),
                Atom::Rel(_, args) => 1 + args.len(),
                Atom::True | Atom::False => 1,
            },
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
        }
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(f) => f.quantifier_depth(),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().map(Formula::quantifier_depth).max().unwrap_or(0)
            }
            Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.quantifier_depth(),
        }
    }

    /// Names of all variables, bound or free.
    pub fn all_var_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_var_names(&mut out);
        out
    }

    fn collect_var_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(Atom::Card { var, body, .. }) => {
                out.insert(var.clone());
                body.collect_var_names(out);
            }
            Formula::Atom(a) => out.extend(a.free_vars()),
            Formula::Not(f) => f.collect_var_names(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_var_names(out)),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                out.insert(v.clone());
                f.collect_var_names(out);
            }
        }
    }
}

/// A formula together with its ordered list of free variables.
///
/// Answer tuples are reported in the order of `free`. The list may name
/// variables that no longer occur syntactically (after elimination, say).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub formula: Formula,
    pub free: Vec<String>,
}

impl Query {
    /// Wrap a formula, renaming bound variables apart and canonicalizing terms.
    pub fn new(formula: Formula) -> Self {
        let free = formula.free_vars();
        let formula = rename_bound(&formula, &free);
        Query { formula, free }
    }

    pub fn with_free(formula: Formula, free: Vec<String>) -> Self {
        Query { formula, free }
    }

    pub fn arity(&self) -> usize {
        self.free.len()
    }
}

/// Rename every bound variable to `v0, v1, ...` in binder pre-order,
/// skipping names used by free variables, and cancel inverse pairs in terms.
pub fn rename_bound(formula: &Formula, free: &[String]) -> Formula {
    let mut counter = 0usize;
    let mut scope: Vec<(String, String)> = Vec::new();
    rename_rec(formula, free, &mut counter, &mut scope)
}

fn fresh_name(free: &[String], counter: &mut usize) -> String {
    loop {
        let name = format!("v{}", *counter);
        *counter += 1;
        if !free.contains(&name) {
            return name;
        }
    }
}

fn rename_var(v: &str, scope: &[(String, String)]) -> String {
    scope
        .iter()
        .rev()
        .find(|(old, _)| old == v)
        .map(|(_, new)| new.clone())
        .unwrap_or_else(|| v.to_string())
}

fn rename_term(t: &Term, scope: &[(String, String)]) -> Term {
    let base = match &t.base {
        Base::Var(v) => Base::Var(rename_var(v, scope)),
        b => b.clone(),
    };
    Term {
        base,
        steps: cancel_steps(t.steps.iter().cloned()),
    }
}

fn rename_rec(
    f: &Formula,
    free: &[String],
    counter: &mut usize,
    scope: &mut Vec<(String, String)>,
) -> Formula {
    match f {
        Formula::Atom(a) => Formula::Atom(match a {
            Atom::Eq(s, t) => Atom::Eq(rename_term(s, scope), rename_term(t, scope)),
            Atom::Pred(p, t) => Atom::Pred(p.clone(), rename_term(t, scope)),
            Atom::Rel(r, args) => Atom::Rel(
                r.clone(),
                args.iter().map(|v| rename_var(v, scope)).collect(),
            ),
            Atom::Card { k, var, body } => {
                let new = fresh_name(free, counter);
                scope.push((var.clone(), new.clone()));
                let body = rename_rec(body, free, counter, scope);
                scope.pop();
                Atom::Card {
                    k: *k,
                    var: new,
                    body: Box::new(body),
                }
            }
            other => other.clone(),
        }),
        Formula::Not(g) => Formula::not(rename_rec(g, free, counter, scope)),
        Formula::And(gs) => Formula::and(gs.iter().map(|g| rename_rec(g, free, counter, scope))),
        Formula::Or(gs) => Formula::or(gs.iter().map(|g| rename_rec(g, free, counter, scope))),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let new = fresh_name(free, counter);
            scope.push((v.clone(), new.clone()));
            let body = rename_rec(g, free, counter, scope);
            scope.pop();
            if matches!(f, Formula::Exists(..)) {
                Formula::exists(new, body)
            } else {
                Formula::forall(new, body)
            }
        }
    }
}

/// Generates variable names not occurring in a given set.
#[derive(Debug, Clone)]
pub struct FreshNames {
    used: BTreeSet<String>,
    prefix: String,
    next: usize,
}

impl FreshNames {
    pub fn new(prefix: &str, used: BTreeSet<String>) -> Self {
        FreshNames {
            used,
            prefix: prefix.to_string(),
            next: 0,
        }
    }

    pub fn avoiding(prefix: &str, formula: &Formula) -> Self {
        Self::new(prefix, formula.all_var_names())
    }

    pub fn next_name(&mut self) -> String {
        loop {
            let name = format!("{}{}", self.prefix, self.next);
            self.next += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_cancels_adjacent_pairs() {
        let t = Term::var("x")
            .apply(Step::forward("f"))
            .apply(Step::inverse("f"));
        assert_eq!(t.canonicalize(), Term::var("x"));

        // f^-1 g g^-1 f (x), written outermost first
        let t = Term::var("x")
            .apply(Step::forward("f"))
            .apply(Step::inverse("g"))
            .apply(Step::forward("g"))
            .apply(Step::inverse("f"));
        assert_eq!(t.canonicalize(), Term::var("x"));

        let t = Term::var("x")
            .apply(Step::forward("f"))
            .apply(Step::forward("g"));
        assert_eq!(t.canonicalize(), t);
    }

    #[test]
    fn compose_substitutes_base() {
        // f(y)[y := f^-1(x)] = x
        let outer = Term::var("y").apply(Step::forward("f"));
        let inner = Term::var("x").apply(Step::inverse("f"));
        assert_eq!(outer.compose_onto(&inner), Term::var("x"));
    }

    #[test]
    fn free_vars_skip_bound_and_card() {
        let f = Formula::and([
            Formula::exists("y", Formula::eq(Term::var("y"), Term::var("x"))),
            Formula::card(2, "z", Formula::pred("U", Term::var("z"))),
            Formula::pred("U", Term::var("w")),
        ]);
        assert_eq!(f.free_vars(), vec!["x".to_string(), "w".to_string()]);
    }

    #[test]
    fn rename_avoids_free_names() {
        let f = Formula::exists("y", Formula::eq(Term::var("y"), Term::var("v0")));
        let q = Query::new(f);
        assert_eq!(q.free, vec!["v0".to_string()]);
        assert_eq!(
            q.formula,
            Formula::exists("v1", Formula::eq(Term::var("v1"), Term::var("v0")))
        );
    }
}
