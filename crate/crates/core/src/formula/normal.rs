//! Normal forms: DNF, disjoint DNF, substitution and equality orientation.

use std::collections::HashSet;
use std::fmt;

use super::{Atom, Base, Formula, Term};
use crate::error::{Error, Result};

/// Total weight (conjuncts plus atom sizes) beyond which DNF conversion
/// gives up.
pub const DEFAULT_DNF_LIMIT: usize = 1 << 22;

/// Conjunct count up to which absorption (`a ∨ (a ∧ b) = a`) is applied.
const ABSORB_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            atom,
            positive: true,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            positive: false,
        }
    }

    pub fn negated(&self) -> Literal {
        Literal {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }

    pub fn is_complement(&self, other: &Literal) -> bool {
        self.positive != other.positive && self.atom == other.atom
    }

    pub fn to_formula(&self) -> Formula {
        let a = Formula::Atom(self.atom.clone());
        if self.positive {
            a
        } else {
            Formula::not(a)
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.atom.mentions(v)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// A conjunction of literals, duplicates removed, in first-occurrence order.
pub type Conj = Vec<Literal>;

fn conj_to_formula(c: &Conj) -> Formula {
    Formula::and(c.iter().map(Literal::to_formula))
}

/// Add a literal to a conjunction. Returns `false` if the result is contradictory.
fn push_literal(c: &mut Conj, l: Literal) -> bool {
    if c.iter().any(|m| m.is_complement(&l)) {
        return false;
    }
    if !c.contains(&l) {
        c.push(l);
    }
    true
}

fn merge(a: &Conj, b: &Conj) -> Option<Conj> {
    let mut out = a.clone();
    for l in b {
        if !push_literal(&mut out, l.clone()) {
            return None;
        }
    }
    Some(out)
}

/// A disjunction of conjunctions of literals. No conjuncts means `false`;
/// an empty conjunct means `true`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Dnf {
    pub conjuncts: Vec<Conj>,
}

impl Dnf {
    pub fn is_false(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn to_formula(&self) -> Formula {
        Formula::or(self.conjuncts.iter().map(conj_to_formula))
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// A DNF whose conjuncts have pairwise disjoint solution sets on every
/// structure: any two conjuncts contain complementary literals.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DisjointDnf(pub Dnf);

impl DisjointDnf {
    pub fn conjuncts(&self) -> &[Conj] {
        &self.0.conjuncts
    }

    pub fn to_formula(&self) -> Formula {
        self.0.to_formula()
    }
}

fn dedup_conjuncts(cs: Vec<Conj>) -> Vec<Conj> {
    let mut seen: HashSet<Vec<Literal>> = HashSet::new();
    let mut out = Vec::with_capacity(cs.len());
    for c in cs {
        let mut key = c.clone();
        key.sort();
        if seen.insert(key) {
            out.push(c);
        }
    }
    out
}

/// Drop conjuncts that are supersets of another conjunct.
fn absorb(cs: Vec<Conj>) -> Vec<Conj> {
    if cs.len() > ABSORB_LIMIT || cs.len() < 2 {
        return cs;
    }
    let mut order: Vec<usize> = (0..cs.len()).collect();
    order.sort_by_key(|&i| cs[i].len());
    let mut keep = vec![true; cs.len()];
    for (pos, &i) in order.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        for &j in &order[pos + 1..] {
            if keep[j] && cs[i].iter().all(|l| cs[j].contains(l)) {
                keep[j] = false;
            }
        }
    }
    cs.into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

fn conj_weight(c: &Conj) -> usize {
    1 + c
        .iter()
        .map(|l| match &l.atom {
            Atom::Card { body, .. } => 1 + body.size(),
            _ => 1,
        })
        .sum::<usize>()
}

fn too_large(limit: usize) -> Error {
    Error::Resource(format!("DNF exceeds a size of {limit}"))
}

fn dnf_rec(f: &Formula, positive: bool, limit: usize) -> Result<Vec<Conj>> {
    match f {
        Formula::Atom(Atom::True) => Ok(if positive { vec![vec![]] } else { vec![] }),
        Formula::Atom(Atom::False) => Ok(if positive { vec![] } else { vec![vec![]] }),
        Formula::Atom(a) => Ok(vec![vec![Literal {
            atom: a.clone(),
            positive,
        }]]),
        Formula::Not(g) => dnf_rec(g, !positive, limit),
        Formula::And(parts) | Formula::Or(parts) => {
            let conjunctive = matches!(f, Formula::And(_)) == positive;
            if conjunctive {
                let mut acc: Vec<Conj> = vec![vec![]];
                for p in parts {
                    let d = dnf_rec(p, positive, limit)?;
                    let mut next = Vec::new();
                    let mut weight = 0;
                    for a in &acc {
                        for b in &d {
                            if let Some(m) = merge(a, b) {
                                weight += conj_weight(&m);
                                next.push(m);
                            }
                        }
                        if weight > limit {
                            return Err(too_large(limit));
                        }
                    }
                    acc = absorb(dedup_conjuncts(next));
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc)
            } else {
                let mut acc = Vec::new();
                let mut weight = 0;
                for p in parts {
                    let d = dnf_rec(p, positive, limit)?;
                    weight += d.iter().map(conj_weight).sum::<usize>();
                    if weight > limit {
                        return Err(too_large(limit));
                    }
                    acc.extend(d);
                }
                Ok(absorb(dedup_conjuncts(acc)))
            }
        }
        Formula::Exists(..) | Formula::Forall(..) => Err(Error::Formula(
            "DNF conversion needs a quantifier-free formula".into(),
        )),
    }
}

/// Convert a quantifier-free formula into an equivalent DNF.
///
/// Negations are pushed to the atoms (a negated cardinality atom stays a
/// literal). Duplicate literals and duplicate or absorbed conjuncts are
/// removed, and conjuncts holding a literal and its negation are dropped.
pub fn to_dnf(f: &Formula) -> Result<Dnf> {
    to_dnf_bounded(f, DEFAULT_DNF_LIMIT)
}

pub fn to_dnf_bounded(f: &Formula, limit: usize) -> Result<Dnf> {
    Ok(Dnf {
        conjuncts: dnf_rec(f, true, limit)?,
    })
}

/// `c ∧ ¬(l1 ∧ ... ∧ lm)` as pairwise disjoint conjuncts
/// `c ∧ l1 ∧ ... ∧ l(j-1) ∧ ¬lj`.
fn subtract(c: &Conj, d: &Conj, out: &mut Vec<Conj>) {
    if d.iter().any(|l| c.iter().any(|m| m.is_complement(l))) {
        out.push(c.clone());
        return;
    }
    let mut prefix = c.clone();
    for l in d {
        let mut cand = prefix.clone();
        if push_literal(&mut cand, l.negated()) {
            out.push(cand);
        }
        if !push_literal(&mut prefix, l.clone()) {
            break;
        }
    }
}

/// Rewrite a DNF so that its conjuncts are pairwise disjoint.
///
/// Conjunct `Di` is replaced by `Di ∧ ¬(D1 ∨ ... ∨ D(i-1))`, with each
/// negated conjunction expanded by the disjoint complement identity
/// `¬(l1 ∧ ... ∧ lm) ≡ ⋁j (l1 ∧ ... ∧ l(j-1) ∧ ¬lj)`.
pub fn to_disjoint_dnf(d: &Dnf) -> DisjointDnf {
    let mut out: Vec<Conj> = Vec::new();
    for (i, di) in d.conjuncts.iter().enumerate() {
        let mut pieces = vec![di.clone()];
        for dj in &d.conjuncts[..i] {
            let mut next = Vec::new();
            for p in &pieces {
                subtract(p, dj, &mut next);
            }
            pieces = next;
            if pieces.is_empty() {
                break;
            }
        }
        out.extend(pieces);
    }
    DisjointDnf(Dnf { conjuncts: out })
}

fn subst_term(t: &Term, v: &str, by: &Term) -> Term {
    match &t.base {
        Base::Var(x) if x == v => t.compose_onto(by),
        _ => t.canonicalize(),
    }
}

/// Replace a single atom's occurrences of `v` by `by`.
pub(crate) fn substitute_atom(a: &Atom, v: &str, by: &Term) -> Result<Atom> {
    Ok(match a {
        Atom::Eq(s, t) => Atom::Eq(subst_term(s, v, by), subst_term(t, v, by)),
        Atom::Pred(p, t) => Atom::Pred(p.clone(), subst_term(t, v, by)),
        Atom::Rel(r, args) => {
            if args.iter().any(|a| a == v) {
                match (by.is_bare(), by.var_name()) {
                    (true, Some(w)) => Atom::Rel(
                        r.clone(),
                        args.iter()
                            .map(|a| if a == v { w.to_string() } else { a.clone() })
                            .collect(),
                    ),
                    _ => {
                        return Err(Error::Formula(format!(
                            "cannot substitute `{by}` into relational atom `{a}`"
                        )))
                    }
                }
            } else {
                a.clone()
            }
        }
        other => other.clone(),
    })
}

fn subst_rec(f: &Formula, v: &str, by: &Term, binders: &mut Vec<String>) -> Result<Formula> {
    Ok(match f {
        Formula::Atom(a) => {
            if a.mentions(v) {
                if let Some(w) = by.var_name() {
                    if binders.iter().any(|b| b == w) {
                        return Err(Error::Formula(format!(
                            "substituting `{by}` for `{v}` would capture `{w}`"
                        )));
                    }
                }
            }
            Formula::Atom(substitute_atom(a, v, by)?)
        }
        Formula::Not(g) => Formula::not(subst_rec(g, v, by, binders)?),
        Formula::And(gs) => Formula::and(
            gs.iter()
                .map(|g| subst_rec(g, v, by, binders))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Or(gs) => Formula::or(
            gs.iter()
                .map(|g| subst_rec(g, v, by, binders))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Exists(w, g) | Formula::Forall(w, g) => {
            let body = if w == v {
                (**g).clone()
            } else {
                binders.push(w.clone());
                let b = subst_rec(g, v, by, binders);
                binders.pop();
                b?
            };
            if matches!(f, Formula::Exists(..)) {
                Formula::exists(w.clone(), body)
            } else {
                Formula::forall(w.clone(), body)
            }
        }
    })
}

/// Replace every free occurrence of `v` by the term `by`, re-canonicalizing
/// every term. Cardinality atoms are closed and left untouched.
pub fn substitute(f: &Formula, v: &str, by: &Term) -> Result<Formula> {
    subst_rec(f, v, by, &mut Vec::new())
}

fn fold_atom(a: &Atom) -> Formula {
    match a {
        Atom::Eq(s, t) => {
            let (s, t) = (s.canonicalize(), t.canonicalize());
            if s == t {
                return Formula::t();
            }
            match (&s.base, &t.base) {
                (Base::Elem(x), Base::Elem(y)) if s.steps.is_empty() && t.steps.is_empty() => {
                    if x == y {
                        Formula::t()
                    } else {
                        Formula::f()
                    }
                }
                _ => Formula::Atom(Atom::Eq(s, t)),
            }
        }
        other => Formula::Atom(other.canonicalize_terms()),
    }
}

/// Fold `true`/`false` through connectives and decide equalities between
/// syntactically identical terms.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::Atom(a) => fold_atom(a),
        Formula::Not(g) => match simplify(g) {
            Formula::Atom(Atom::True) => Formula::f(),
            Formula::Atom(Atom::False) => Formula::t(),
            Formula::Not(h) => *h,
            h => Formula::not(h),
        },
        Formula::And(gs) => {
            let mut out = Vec::with_capacity(gs.len());
            for g in gs {
                match simplify(g) {
                    Formula::Atom(Atom::True) => {}
                    Formula::Atom(Atom::False) => return Formula::f(),
                    h => out.push(h),
                }
            }
            Formula::and(out)
        }
        Formula::Or(gs) => {
            let mut out = Vec::with_capacity(gs.len());
            for g in gs {
                match simplify(g) {
                    Formula::Atom(Atom::False) => {}
                    Formula::Atom(Atom::True) => return Formula::t(),
                    h => out.push(h),
                }
            }
            Formula::or(out)
        }
        Formula::Exists(v, g) => Formula::exists(v.clone(), simplify(g)),
        Formula::Forall(v, g) => Formula::forall(v.clone(), simplify(g)),
    }
}

/// Result of orienting a bijective equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Oriented {
    /// `τ(x) = y` with `y` bare and `x ≠ y`.
    TwoVariables(Atom),
    /// Both sides over the same variable; returned unchanged.
    SameVariable(Atom),
    /// Not an equality between two variable-based terms.
    Other(Atom),
}

/// Bring `τ(x) = τ1(y)` into the form `τ1⁻¹τ(x) = y`.
pub fn orient_equality(a: &Atom) -> Oriented {
    match a {
        Atom::Eq(s, t) => match (s.var_name(), t.var_name()) {
            (Some(x), Some(y)) if x == y => Oriented::SameVariable(a.clone()),
            (Some(_), Some(y)) => {
                let solved = solve_for(s, t, y).expect("right side is over y");
                Oriented::TwoVariables(Atom::Eq(solved, Term::var(y)))
            }
            _ => Oriented::Other(a.clone()),
        },
        other => Oriented::Other(other.clone()),
    }
}

/// For `s = t` where exactly one side is over variable `y`, return `τ` with
/// `y = τ(other base)`.
pub fn solve_for(s: &Term, t: &Term, y: &str) -> Option<Term> {
    let (with_y, other) = match (s.var_name() == Some(y), t.var_name() == Some(y)) {
        (true, false) => (s, t),
        (false, true) => (t, s),
        _ => return None,
    };
    let inv = Term::inverse_steps(&with_y.steps);
    Some(
        Term {
            base: other.base.clone(),
            steps: other.steps.iter().cloned().chain(inv).collect(),
        }
        .canonicalize(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Step;

    fn p(name: &str) -> Formula {
        Formula::pred(name, Term::var("x"))
    }

    fn lit(name: &str, positive: bool) -> Literal {
        Literal {
            atom: Atom::Pred(name.into(), Term::var("x")),
            positive,
        }
    }

    #[test]
    fn distribution() {
        let f = Formula::and([Formula::or([p("a"), p("b")]), p("c")]);
        let d = to_dnf(&f).unwrap();
        assert_eq!(
            d.conjuncts,
            vec![
                vec![lit("a", true), lit("c", true)],
                vec![lit("b", true), lit("c", true)]
            ]
        );
    }

    #[test]
    fn contradiction_pruned() {
        let f = Formula::and([p("a"), Formula::not(p("a"))]);
        assert!(to_dnf(&f).unwrap().is_false());
    }

    #[test]
    fn de_morgan() {
        let f = Formula::not(Formula::and([p("a"), p("b")]));
        let d = to_dnf(&f).unwrap();
        assert_eq!(
            d.conjuncts,
            vec![vec![lit("a", false)], vec![lit("b", false)]]
        );
    }

    #[test]
    fn quantifier_rejected() {
        assert!(to_dnf(&Formula::exists("y", p("a"))).is_err());
    }

    #[test]
    fn disjoint_two_terms() {
        let d = to_dnf(&Formula::or([p("a"), p("b")])).unwrap();
        let dd = to_disjoint_dnf(&d);
        assert_eq!(
            dd.conjuncts(),
            &[vec![lit("a", true)], vec![lit("b", true), lit("a", false)]]
        );
    }

    #[test]
    fn disjoint_idempotent() {
        let d = Dnf {
            conjuncts: vec![vec![lit("a", true)], vec![lit("a", true)]],
        };
        assert_eq!(to_disjoint_dnf(&d).conjuncts(), &[vec![lit("a", true)]]);
    }

    #[test]
    fn orient_two_variables() {
        // f(x) = g(y)  ->  g^-1(f(x)) = y
        let a = Atom::Eq(
            Term::var("x").apply(Step::forward("f")),
            Term::var("y").apply(Step::forward("g")),
        );
        let want = Atom::Eq(
            Term::var("x")
                .apply(Step::forward("f"))
                .apply(Step::inverse("g")),
            Term::var("y"),
        );
        assert_eq!(orient_equality(&a), Oriented::TwoVariables(want));
        let xy = Atom::Eq(Term::var("x"), Term::var("y"));
        assert_eq!(orient_equality(&xy), Oriented::TwoVariables(xy.clone()));
        let same = Atom::Eq(
            Term::var("x").apply(Step::forward("f")),
            Term::var("x").apply(Step::forward("f")),
        );
        assert_eq!(orient_equality(&same), Oriented::SameVariable(same.clone()));
    }

    #[test]
    fn substitution_cases() {
        // f(y) = x [y := f^-1(x)]  ->  x = x
        let f = Formula::eq(Term::var("y").apply(Step::forward("f")), Term::var("x"));
        let by = Term::var("x").apply(Step::inverse("f"));
        assert_eq!(
            substitute(&f, "y", &by).unwrap(),
            Formula::eq(Term::var("x"), Term::var("x"))
        );

        // U(y) & y != x [y := g(x)]  ->  U(g(x)) & g(x) != x
        let f = Formula::and([
            Formula::pred("U", Term::var("y")),
            Formula::neq(Term::var("y"), Term::var("x")),
        ]);
        let gx = Term::var("x").apply(Step::forward("g"));
        assert_eq!(
            substitute(&f, "y", &gx).unwrap(),
            Formula::and([
                Formula::pred("U", gx.clone()),
                Formula::neq(gx.clone(), Term::var("x")),
            ])
        );

        let f = Formula::pred("U", Term::var("z"));
        assert_eq!(substitute(&f, "y", &gx).unwrap(), f);
    }

    #[test]
    fn substitution_detects_capture() {
        let f = Formula::exists("x", Formula::eq(Term::var("y"), Term::var("x")));
        assert!(substitute(&f, "y", &Term::var("x")).is_err());
    }
}
