//! Naive reference evaluator. Quantifiers iterate over the whole domain and
//! cardinality atoms count; nothing is shared with elimination or
//! enumeration.

pub mod random;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::formula::{Atom, Base, Formula, Query, Sign, Term};
use crate::reduction::RelStructure;
use crate::structure::{BijStructure, Elem};

/// Default limit on evaluation nodes.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// What the oracle needs from a structure.
pub trait OracleStructure {
    fn domain_size(&self) -> usize;
    fn apply(&self, func: &str, sign: Sign, e: Elem) -> Result<Elem>;
    fn constant(&self, name: &str) -> Result<Elem>;
    fn unary(&self, pred: &str, e: Elem) -> Result<bool>;
    fn related(&self, rel: &str, args: &[Elem]) -> Result<bool>;
}

impl OracleStructure for BijStructure {
    fn domain_size(&self) -> usize {
        self.size()
    }

    fn apply(&self, func: &str, sign: Sign, e: Elem) -> Result<Elem> {
        let f = self
            .func_index(func)
            .ok_or_else(|| Error::UndeclaredSymbol(func.into()))?;
        let table = match sign {
            Sign::Forward => self.forward(f),
            Sign::Inverse => self.inverse(f),
        };
        Ok(table[e as usize])
    }

    fn constant(&self, name: &str) -> Result<Elem> {
        self.const_value(name)
            .ok_or_else(|| Error::UndeclaredSymbol(name.into()))
    }

    fn unary(&self, pred: &str, e: Elem) -> Result<bool> {
        let p = self
            .pred_index(pred)
            .ok_or_else(|| Error::UndeclaredSymbol(pred.into()))?;
        Ok(self.holds(p, e))
    }

    fn related(&self, rel: &str, _: &[Elem]) -> Result<bool> {
        Err(Error::Unsupported(format!(
            "relational atom `{rel}` over a bijective structure"
        )))
    }
}

impl OracleStructure for RelStructure {
    fn domain_size(&self) -> usize {
        self.size()
    }

    fn apply(&self, func: &str, _: Sign, _: Elem) -> Result<Elem> {
        Err(Error::Unsupported(format!(
            "function `{func}` over a relational structure"
        )))
    }

    fn constant(&self, name: &str) -> Result<Elem> {
        Err(Error::UndeclaredSymbol(name.into()))
    }

    fn unary(&self, pred: &str, e: Elem) -> Result<bool> {
        self.related(pred, &[e])
    }

    fn related(&self, rel: &str, args: &[Elem]) -> Result<bool> {
        let r = self
            .relation(rel)
            .ok_or_else(|| Error::UndeclaredSymbol(rel.into()))?;
        if r.arity != args.len() {
            return Err(Error::ArityMismatch {
                name: rel.into(),
                expected: r.arity,
                found: args.len(),
            });
        }
        Ok(r.tuples().any(|t| t == args))
    }
}

/// Satisfying assignments of a query, tuples in the order of `vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub vars: Vec<String>,
    pub tuples: BTreeSet<Vec<Elem>>,
    /// Set for closed queries.
    pub truth: Option<bool>,
}

struct Eval<'a, S: ?Sized> {
    s: &'a S,
    env: Vec<(String, Elem)>,
    nodes: u64,
    budget: u64,
}

impl<S: OracleStructure + ?Sized> Eval<'_, S> {
    fn lookup(&self, v: &str) -> Result<Elem> {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|&(_, e)| e)
            .ok_or_else(|| Error::UnboundVariable(v.into()))
    }

    fn term(&self, t: &Term) -> Result<Elem> {
        let mut e = match &t.base {
            Base::Var(v) => self.lookup(v)?,
            Base::Const(c) => self.s.constant(c)?,
            Base::Elem(e) => {
                if *e as usize >= self.s.domain_size() {
                    return Err(Error::Formula(format!("domain constant @{e} out of range")));
                }
                *e
            }
        };
        for st in &t.steps {
            e = self.s.apply(&st.func, st.sign, e)?;
        }
        Ok(e)
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Resource(format!(
                "oracle budget of {} evaluation nodes exceeded",
                self.budget
            )));
        }
        Ok(())
    }

    fn with<T>(&mut self, v: &str, e: Elem, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        self.env.push((v.to_string(), e));
        let out = f(self);
        self.env.pop();
        out
    }

    fn holds(&mut self, f: &Formula) -> Result<bool> {
        self.tick()?;
        match f {
            Formula::Atom(a) => self.atom(a),
            Formula::Not(g) => Ok(!self.holds(g)?),
            Formula::And(gs) => {
                for g in gs {
                    if !self.holds(g)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(gs) => {
                for g in gs {
                    if self.holds(g)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Exists(v, g) => {
                for e in 0..self.s.domain_size() as Elem {
                    if self.with(v, e, |me| me.holds(g))? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Forall(v, g) => {
                for e in 0..self.s.domain_size() as Elem {
                    if !self.with(v, e, |me| me.holds(g))? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    fn atom(&mut self, a: &Atom) -> Result<bool> {
        match a {
            Atom::True => Ok(true),
            Atom::False => Ok(false),
            Atom::Eq(l, r) => Ok(self.term(l)? == self.term(r)?),
            Atom::Pred(p, t) => {
                let e = self.term(t)?;
                self.s.unary(p, e)
            }
            Atom::Rel(r, args) => {
                let vals = args
                    .iter()
                    .map(|v| self.lookup(v))
                    .collect::<Result<Vec<_>>>()?;
                self.s.related(r, &vals)
            }
            Atom::Card { k, var, body } => {
                let mut count = 0u64;
                for e in 0..self.s.domain_size() as Elem {
                    if self.with(var, e, |me| me.holds(body))? {
                        count += 1;
                    }
                }
                Ok(count >= *k)
            }
        }
    }
}

/// Exhaustively evaluate `q` over `s` with the default budget.
pub fn brute_force<S: OracleStructure + ?Sized>(q: &Query, s: &S) -> Result<OracleResult> {
    brute_force_with_budget(q, s, DEFAULT_BUDGET)
}

pub fn brute_force_with_budget<S: OracleStructure + ?Sized>(
    q: &Query,
    s: &S,
    budget: u64,
) -> Result<OracleResult> {
    for v in q.formula.free_vars() {
        if !q.free.contains(&v) {
            return Err(Error::UnboundVariable(v));
        }
    }
    let n = s.domain_size() as u64;
    let assignments = n.checked_pow(q.free.len() as u32).unwrap_or(u64::MAX);
    if assignments > budget {
        return Err(Error::Resource(format!(
            "{assignments} assignments exceed the oracle budget of {budget}"
        )));
    }
    let mut ev = Eval {
        s,
        env: Vec::new(),
        nodes: 0,
        budget,
    };
    let k = q.free.len();
    let mut tuples = BTreeSet::new();
    let mut tuple = vec![0 as Elem; k];
    for idx in 0..assignments {
        // last variable varies fastest
        let mut rem = idx;
        for slot in tuple.iter_mut().rev() {
            *slot = (rem % n) as Elem;
            rem /= n;
        }
        ev.env = q.free.iter().cloned().zip(tuple.iter().copied()).collect();
        if ev.holds(&q.formula)? {
            tuples.insert(tuple.clone());
        }
    }
    let truth = (k == 0).then_some(!tuples.is_empty());
    Ok(OracleResult {
        vars: q.free.clone(),
        tuples,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Signature};
    use crate::reduction::load_rel_structure;
    use crate::structure::load_structure;

    fn sig() -> Signature {
        Signature::bijective(&["f"], &["U"], &[]).unwrap()
    }

    #[test]
    fn desk_examples() {
        let s = load_structure("domain 3\nperm f 1 2 0\npred U 0 1\n").unwrap();
        let q = parse_formula("E x. f(x) = x", &sig()).unwrap();
        assert_eq!(brute_force(&q, &s).unwrap().truth, Some(false));
        let q = parse_formula("x != y", &sig()).unwrap();
        assert_eq!(brute_force(&q, &s).unwrap().tuples.len(), 6);
        let q = parse_formula("#>=2 x. U(x)", &sig()).unwrap();
        assert_eq!(brute_force(&q, &s).unwrap().truth, Some(true));
        let q = parse_formula("#>=3 x. U(x)", &sig()).unwrap();
        assert_eq!(brute_force(&q, &s).unwrap().truth, Some(false));
    }

    #[test]
    fn relational_atoms() {
        let s = load_rel_structure("domain 4\nrel E 2\n0 1\n1 2\n2 3\nend\n").unwrap();
        let q = parse_formula("E x. E y. E(x, y)", s.signature()).unwrap();
        assert_eq!(brute_force(&q, &s).unwrap().truth, Some(true));
        let q = parse_formula("E y. E(x, y) & E(y, z)", s.signature()).unwrap();
        let r = brute_force(&q, &s).unwrap();
        let want: BTreeSet<Vec<Elem>> = [vec![0, 2], vec![1, 3]].into_iter().collect();
        assert_eq!(r.tuples, want);
    }

    #[test]
    fn budget_enforced() {
        let s = load_structure("domain 3\nperm f 1 2 0\npred U 0 1\n").unwrap();
        let q = parse_formula("E y. E z. f(y) = z", &sig()).unwrap();
        assert!(matches!(
            brute_force_with_budget(&q, &s, 3),
            Err(Error::Resource(_))
        ));
        let q = parse_formula("x = y", &sig()).unwrap();
        assert!(matches!(
            brute_force_with_budget(&q, &s, 8),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn empty_domain() {
        let s = load_structure("domain 0\nperm f\npred U\n").unwrap();
        let q = parse_formula("A x. U(x)", &sig()).unwrap();
        assert_eq!(brute_force(&q, &s).unwrap().truth, Some(true));
        let q = parse_formula("U(x)", &sig()).unwrap();
        assert!(brute_force(&q, &s).unwrap().tuples.is_empty());
    }
}
