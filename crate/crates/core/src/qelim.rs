//! Quantifier elimination for bijective structures, plus the model-checking
//! fast paths built on it.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::formula::solve_for;
use crate::formula::{substitute, to_dnf, Atom, Base, Conj, Dnf, Formula, Literal, Term, CARD_VAR};
use crate::structure::{count_satisfying, eval_qf, Assignment, BijStructure, Compiled};

/// Largest number of disequalities the all-negative case accepts.
pub const MAX_DISEQUALITIES: usize = 12;

/// Rough cap on the literals one elimination step may produce.
pub const MAX_EXPANSION: u64 = 1 << 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QeOptions {
    /// Drop contradictory disjuncts and fold trivially true or false literals.
    pub prune: bool,
}

impl Default for QeOptions {
    fn default() -> Self {
        QeOptions { prune: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseTag {
    PositiveEquality,
    AllNegative,
    Vacuous,
}

/// Trace of one elimination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationStep {
    pub var: String,
    pub case: CaseTag,
    /// The equality `y = τ(x)` used for substitution.
    pub witness: Option<Literal>,
    /// Number of disequalities `y ≠ τj(xj)`.
    pub k: usize,
    /// Generated `(h, P, Q)` triples, `P` and `Q` as bit masks over `0..k`.
    pub triples: Vec<(usize, u32, u32)>,
}

fn bijective_check(l: &Literal) -> Result<()> {
    if let Atom::Rel(..) = l.atom {
        return Err(Error::Unsupported(format!(
            "relational literal `{l}`; reduce the structure to a bijective one first"
        )));
    }
    Ok(())
}

/// Fold literals whose truth does not depend on the structure.
fn trivial(l: &Literal) -> Option<bool> {
    let v = match &l.atom {
        Atom::True => true,
        Atom::False => false,
        Atom::Eq(s, t) if s == t => true,
        Atom::Eq(s, t) => match (&s.base, &t.base) {
            (Base::Elem(a), Base::Elem(b)) if s.steps.is_empty() && t.steps.is_empty() => a == b,
            _ => return None,
        },
        _ => return None,
    };
    Some(v == l.positive)
}

/// For `τ(x) = τ'(y)` with `x ≠ y`, the term `σ(x)` with `y = σ(x)`.
pub(crate) fn two_variable_witness(a: &Atom, y: &str) -> Option<Term> {
    match a {
        Atom::Eq(s, t) => match (s.var_name(), t.var_name()) {
            (Some(u), Some(v)) if u != v && (u == y || v == y) => solve_for(s, t, y),
            _ => None,
        },
        _ => None,
    }
}

fn lit_eq(a: &Term, b: &Term) -> Literal {
    Literal::pos(Atom::Eq(a.clone(), b.clone()))
}

fn subst_literal(l: &Literal, y: &str, by: &Term) -> Result<Literal> {
    let f = substitute(&Formula::Atom(l.atom.clone()), y, by)?;
    match f {
        Formula::Atom(a) => Ok(Literal {
            atom: a.canonicalize_terms(),
            positive: l.positive,
        }),
        _ => unreachable!("substituting into an atom yields an atom"),
    }
}

/// Builder for a conjunction that folds constants and detects contradictions.
struct ConjBuilder {
    prune: bool,
    lits: Vec<Formula>,
    seen: Conj,
    dead: bool,
}

impl ConjBuilder {
    fn new(prune: bool) -> Self {
        ConjBuilder {
            prune,
            lits: Vec::new(),
            seen: Vec::new(),
            dead: false,
        }
    }

    fn literal(&mut self, l: Literal) {
        if self.dead {
            return;
        }
        if self.prune {
            match trivial(&l) {
                Some(true) => return,
                Some(false) => {
                    self.dead = true;
                    return;
                }
                None => {}
            }
            if self.seen.iter().any(|m| m.is_complement(&l)) {
                self.dead = true;
                return;
            }
            if self.seen.contains(&l) {
                return;
            }
            self.seen.push(l.clone());
        }
        self.lits.push(l.to_formula());
    }

    fn formula(&mut self, f: Formula) {
        if self.dead {
            return;
        }
        if self.prune {
            match f {
                Formula::Atom(Atom::True) => return,
                Formula::Atom(Atom::False) => {
                    self.dead = true;
                    return;
                }
                _ => {}
            }
        }
        self.lits.push(f);
    }

    fn finish(self) -> Formula {
        if self.dead {
            Formula::f()
        } else {
            Formula::and(self.lits)
        }
    }
}

/// Disjunction with optional folding of constant disjuncts and duplicates.
fn disjunction(parts: Vec<Formula>, prune: bool) -> Formula {
    if !prune {
        return Formula::or(parts);
    }
    let mut seen = HashSet::new();
    let mut out: Vec<Formula> = Vec::new();
    for p in parts {
        match p {
            Formula::Atom(Atom::True) => return Formula::t(),
            Formula::Atom(Atom::False) => {}
            p if !seen.insert(p.clone()) => {}
            p => out.push(p),
        }
    }
    Formula::or(out)
}

/// `∃y conj` for a conjunction of bijective literals, as a quantifier-free
/// formula over the remaining variables.
pub fn eliminate_one(conj: &[Literal], y: &str) -> Result<Formula> {
    eliminate_one_traced(conj, y, QeOptions::default()).map(|(f, _)| f)
}

pub fn eliminate_one_traced(
    conj: &[Literal],
    y: &str,
    opts: QeOptions,
) -> Result<(Formula, EliminationStep)> {
    let mut free_part: Vec<&Literal> = Vec::new();
    let mut psi: Vec<Literal> = Vec::new();
    let mut diseq: Vec<Term> = Vec::new();
    let mut witness: Option<(usize, Term, usize)> = None;
    for (i, l) in conj.iter().enumerate() {
        bijective_check(l)?;
        if !l.mentions(y) {
            free_part.push(l);
            continue;
        }
        match two_variable_witness(&l.atom, y) {
            Some(tau) => {
                if l.positive {
                    if witness.as_ref().is_none_or(|(len, _, _)| tau.len() < *len) {
                        witness = Some((tau.len(), tau, i));
                    }
                } else {
                    diseq.push(tau);
                }
            }
            _ => psi.push(l.clone()),
        }
    }

    let mut step = EliminationStep {
        var: y.to_string(),
        case: CaseTag::Vacuous,
        witness: None,
        k: 0,
        triples: Vec::new(),
    };
    let mut outer = ConjBuilder::new(opts.prune);
    for l in &free_part {
        outer.literal((*l).clone());
    }

    if let Some((_, tau, i)) = witness {
        step.case = CaseTag::PositiveEquality;
        step.witness = Some(conj[i].clone());
        for (j, l) in conj.iter().enumerate() {
            if j == i || !l.mentions(y) {
                continue;
            }
            outer.literal(subst_literal(l, y, &tau)?);
        }
        return Ok((outer.finish(), step));
    }

    let k = diseq.len();
    if k > MAX_DISEQUALITIES {
        return Err(Error::Resource(format!(
            "eliminating `{y}` needs {k} disequalities; at most {MAX_DISEQUALITIES} are supported"
        )));
    }
    step.case = if k == 0 && psi.is_empty() {
        CaseTag::Vacuous
    } else {
        CaseTag::AllNegative
    };
    step.k = k;

    // ψ(y) over the canonical card variable, and ψ(τj) for each j.
    let card_y = Term::var(CARD_VAR);
    let psi_card: Vec<Literal> = psi
        .iter()
        .map(|l| subst_literal(l, y, &card_y))
        .collect::<Result<_>>()?;
    let psi_body = {
        let mut b = ConjBuilder::new(opts.prune);
        for l in &psi_card {
            b.literal(l.clone());
        }
        b.finish()
    };
    let psi_at: Vec<Vec<Literal>> = diseq
        .iter()
        .map(|t| psi.iter().map(|l| subst_literal(l, y, t)).collect())
        .collect::<Result<_>>()?;
    let psi_formula = |j: usize| {
        let mut b = ConjBuilder::new(opts.prune);
        for l in &psi_at[j] {
            b.literal(l.clone());
        }
        b.finish()
    };

    let mut disjuncts = Vec::new();
    let full: u32 = (1u32 << k) - 1;
    for h in 0..=k {
        let card = Formula::card(h as u64 + 1, CARD_VAR, psi_body.clone());
        let mut p: u32 = 0;
        loop {
            // Q ranges over subsets of P with |Q| = h.
            let mut q: u32 = p;
            loop {
                if q.count_ones() as usize == h {
                    step.triples.push((h, p, q));
                    let mut c = ConjBuilder::new(opts.prune);
                    for j in (0..k).filter(|j| q >> j & 1 == 1) {
                        c.formula(psi_formula(j));
                    }
                    for i in (0..k).filter(|i| p >> i & 1 == 1) {
                        let opts_i: Vec<Formula> = (0..k)
                            .filter(|j| q >> j & 1 == 1)
                            .map(|j| {
                                let l = lit_eq(&diseq[i], &diseq[j]);
                                match (opts.prune, trivial(&l)) {
                                    (true, Some(true)) => Formula::t(),
                                    (true, Some(false)) => Formula::f(),
                                    _ => l.to_formula(),
                                }
                            })
                            .collect();
                        c.formula(disjunction(opts_i, opts.prune));
                    }
                    for j in (0..k).filter(|j| p >> j & 1 == 0) {
                        c.formula(not_formula(psi_formula(j), opts.prune));
                    }
                    c.formula(card.clone());
                    disjuncts.push(c.finish());
                }
                if q == 0 {
                    break;
                }
                q = (q - 1) & p;
            }
            if p == full {
                break;
            }
            p += 1;
        }
    }
    outer.formula(disjunction(disjuncts, opts.prune));
    Ok((outer.finish(), step))
}

fn not_formula(f: Formula, prune: bool) -> Formula {
    if prune {
        match f {
            Formula::Atom(Atom::True) => return Formula::f(),
            Formula::Atom(Atom::False) => return Formula::t(),
            Formula::Not(g) => return *g,
            _ => {}
        }
    }
    Formula::not(f)
}

/// Eliminate every quantifier, innermost first.
pub fn eliminate_all(phi: &Formula) -> Result<Formula> {
    eliminate_all_with(phi, QeOptions::default())
}

pub fn eliminate_all_with(phi: &Formula, opts: QeOptions) -> Result<Formula> {
    if phi.has_relational_atom() {
        return Err(Error::Unsupported(
            "relational atom in a bijective formula; run degree reduction first".into(),
        ));
    }
    let f = elim_rec(phi, opts)?;
    Ok(wrap_closed_atoms(&f))
}

fn elim_rec(phi: &Formula, opts: QeOptions) -> Result<Formula> {
    Ok(match phi {
        Formula::Atom(a) => Formula::Atom(a.canonicalize_terms()),
        Formula::Not(g) => Formula::not(elim_rec(g, opts)?),
        Formula::And(gs) => Formula::and(
            gs.iter()
                .map(|g| elim_rec(g, opts))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Or(gs) => Formula::or(
            gs.iter()
                .map(|g| elim_rec(g, opts))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Forall(y, g) => {
            let body = elim_rec(g, opts)?;
            Formula::not(exists_qf(y, &Formula::not(body), opts)?)
        }
        Formula::Exists(y, g) => {
            let body = elim_rec(g, opts)?;
            exists_qf(y, &body, opts)?
        }
    })
}

/// `∃y body` for quantifier-free `body`, pushing the quantifier through
/// disjunctions and past conjuncts not mentioning `y` first.
fn exists_qf(y: &str, body: &Formula, opts: QeOptions) -> Result<Formula> {
    match body {
        Formula::Or(gs) => {
            let parts = gs
                .iter()
                .map(|g| exists_qf(y, g, opts))
                .collect::<Result<Vec<_>>>()?;
            return Ok(disjunction(parts, opts.prune));
        }
        Formula::And(gs) if gs.iter().any(|g| !g.mentions(y)) => {
            let (with, without): (Vec<&Formula>, Vec<&Formula>) =
                gs.iter().partition(|g| g.mentions(y));
            let inner = exists_qf(y, &Formula::and(with.into_iter().cloned()), opts)?;
            let mut c = ConjBuilder::new(opts.prune);
            for g in without {
                c.formula(g.clone());
            }
            c.formula(inner);
            return Ok(c.finish());
        }
        _ => {}
    }
    if !body.mentions(y) {
        // ∃y over a y-free formula holds iff the domain is nonempty
        let mut c = ConjBuilder::new(opts.prune);
        c.formula(body.clone());
        c.formula(Formula::card(1, CARD_VAR, Formula::t()));
        return Ok(c.finish());
    }
    let dnf = to_dnf(body)?;
    let work: u64 = dnf
        .conjuncts
        .iter()
        .map(|c| {
            let k = c
                .iter()
                .filter(|l| !l.positive && two_variable_witness(&l.atom, y).is_some())
                .count() as u32;
            3u64.saturating_pow(k)
                .saturating_mul(u64::from(k + 1).pow(2))
        })
        .fold(0u64, u64::saturating_add);
    if work > MAX_EXPANSION {
        return Err(Error::Resource(format!(
            "eliminating `{y}` would expand to about {work} literals"
        )));
    }
    let parts = dnf
        .conjuncts
        .iter()
        .map(|c| eliminate_one_traced(c, y, opts).map(|(f, _)| f))
        .collect::<Result<Vec<_>>>()?;
    Ok(disjunction(parts, opts.prune))
}

/// Replace closed atoms other than cardinality atoms by `∃^{≥1}` statements.
fn wrap_closed_atoms(f: &Formula) -> Formula {
    f.map_atoms(&mut |a| match a {
        Atom::Eq(..) | Atom::Pred(..) if a.free_vars().is_empty() => {
            Formula::card(1, CARD_VAR, Formula::Atom(a.clone()))
        }
        other => Formula::Atom(other.clone()),
    })
}

/// True when every atom is a cardinality atom or a truth constant.
pub fn is_card_combination(f: &Formula) -> bool {
    f.is_quantifier_free()
        && !f.any_atom(&mut |a| !matches!(a, Atom::Card { .. } | Atom::True | Atom::False))
}

/// Decide a closed formula by elimination and memoized counting.
pub fn model_check(phi: &Formula, s: &BijStructure) -> Result<bool> {
    if let Some(v) = phi.free_vars().first() {
        return Err(Error::UnboundVariable(v.clone()));
    }
    let qf = eliminate_all(phi)?;
    eval_qf(s, &Assignment::new(), &qf)
}

/// `∃ȳ matrix` with a quantifier-free matrix in DNF.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sigma1Formula {
    pub prefix: Vec<String>,
    pub matrix: Dnf,
}

impl Sigma1Formula {
    pub fn new(prefix: Vec<String>, matrix: &Formula) -> Result<Self> {
        if !matrix.is_quantifier_free() {
            return Err(Error::Unsupported(
                "existential formula needs a quantifier-free matrix".into(),
            ));
        }
        if matrix.has_card_atom() {
            return Err(Error::Unsupported(
                "cardinality atom in an existential formula".into(),
            ));
        }
        if matrix.has_relational_atom() {
            return Err(Error::Unsupported(
                "relational atom in a bijective formula".into(),
            ));
        }
        Ok(Sigma1Formula {
            prefix,
            matrix: to_dnf(matrix)?,
        })
    }

    /// Peel a leading block of existential quantifiers.
    pub fn from_formula(f: &Formula) -> Result<Self> {
        let mut prefix = Vec::new();
        let mut cur = f;
        while let Formula::Exists(v, body) = cur {
            prefix.push(v.clone());
            cur = body;
        }
        if matches!(cur, Formula::Forall(..)) || !cur.is_quantifier_free() {
            return Err(Error::Unsupported(
                "not an existential formula with a quantifier-free matrix".into(),
            ));
        }
        Self::new(prefix, cur)
    }
}

/// Counters from one run of [`sigma1_model_check_stats`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Sigma1Stats {
    pub scans: u64,
    pub dropped_blocks: u64,
    pub expanded_blocks: u64,
}

pub fn sigma1_model_check(phi: &Sigma1Formula, s: &BijStructure) -> Result<bool> {
    sigma1_model_check_stats(phi, s).map(|(b, _)| b)
}

/// Decide `∃ȳ matrix` one variable at a time, innermost first. For each
/// variable the set `A` of elements satisfying its one-variable part is
/// computed; with more than `k` elements the disequalities are dropped,
/// otherwise the variable is replaced by each element of `A` in turn.
pub fn sigma1_model_check_stats(
    phi: &Sigma1Formula,
    s: &BijStructure,
) -> Result<(bool, Sigma1Stats)> {
    let mut stats = Sigma1Stats::default();
    let mut bound = phi.prefix.clone();
    bound.dedup();
    for conj in &phi.matrix.conjuncts {
        for l in conj {
            for v in l.atom.free_vars() {
                if !phi.prefix.contains(&v) {
                    return Err(Error::UnboundVariable(v));
                }
            }
        }
    }
    for conj in &phi.matrix.conjuncts {
        if sigma1_conj(conj, &phi.prefix, s, &mut stats)? {
            return Ok((true, stats));
        }
    }
    Ok((false, stats))
}

fn sigma1_conj(
    conj: &[Literal],
    vars: &[String],
    s: &BijStructure,
    stats: &mut Sigma1Stats,
) -> Result<bool> {
    let Some((y, rest)) = vars.split_last() else {
        for l in conj {
            if !eval_qf(s, &Assignment::new(), &l.to_formula())? {
                return Ok(false);
            }
        }
        return Ok(true);
    };
    if !conj.iter().any(|l| l.mentions(y)) {
        if s.size() == 0 {
            return Ok(false);
        }
        return sigma1_conj(conj, rest, s, stats);
    }
    let mut others: Vec<Literal> = Vec::new();
    let mut psi: Vec<Literal> = Vec::new();
    let mut diseq: Vec<Term> = Vec::new();
    let mut witness: Option<(usize, Term)> = None;
    for (i, l) in conj.iter().enumerate() {
        if !l.mentions(y) {
            others.push(l.clone());
            continue;
        }
        match two_variable_witness(&l.atom, y) {
            Some(tau) => {
                if l.positive {
                    if witness.as_ref().is_none_or(|(_, w)| tau.len() < w.len()) {
                        witness = Some((i, tau));
                    }
                } else {
                    diseq.push(tau);
                }
            }
            _ => psi.push(l.clone()),
        }
    }
    if let Some((i, tau)) = witness {
        let mut next = others;
        for (j, l) in conj.iter().enumerate() {
            if j != i && l.mentions(y) {
                next.push(subst_literal(l, y, &tau)?);
            }
        }
        return sigma1_conj(&next, rest, s, stats);
    }
    let body = Formula::and(psi.iter().map(Literal::to_formula));
    let compiled = Compiled::new(s, &body, &[y.as_str()])?;
    let k = diseq.len();
    let mut a_set = Vec::new();
    let mut steps = 0u64;
    for a in 0..s.size() as u32 {
        if compiled.eval(s, &[a], &mut steps) {
            a_set.push(a);
            if a_set.len() > k {
                break;
            }
        }
    }
    stats.scans += 1;
    if a_set.len() > k {
        stats.dropped_blocks += 1;
        return sigma1_conj(&others, rest, s, stats);
    }
    stats.expanded_blocks += 1;
    for &a in &a_set {
        let mut next = others.clone();
        for tau in &diseq {
            next.push(Literal::neg(Atom::Eq(tau.clone(), Term::elem(a))));
        }
        if sigma1_conj(&next, rest, s, stats)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Number of distinct cardinality atoms in a formula.
pub fn distinct_card_atoms(f: &Formula) -> usize {
    let mut keys = std::collections::BTreeSet::new();
    f.any_atom(&mut |a| {
        if let Atom::Card { var, body, .. } = a {
            keys.insert(crate::structure::card_key(var, body));
        }
        false
    });
    keys.len()
}

/// Number of distinct cardinality bodies, which bounds the scans
/// [`model_check`] performs.
pub fn count_scans_needed(f: &Formula, s: &BijStructure) -> Result<u64> {
    let mut total = 0u64;
    let mut err = None;
    f.any_atom(&mut |a| {
        if let Atom::Card { var, body, .. } = a {
            if let Err(e) = count_satisfying(s, var, body) {
                err = Some(e);
                return true;
            }
            total += 1;
        }
        false
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}
