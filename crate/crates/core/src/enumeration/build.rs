//! Construction of cursor trees from constraint lists.
//!
//! A constraint is any quantifier-free formula. Variables are removed last
//! first: by substitution when a positive equality `y = τ(x)` is available,
//! by splitting a constraint that mixes `y` with other variables into
//! pairwise disjoint branches, and otherwise by the nested loop over
//! `Q2 = {b : Ψ2(b)}` against the disequalities `y ≠ τi(x)`.

use std::rc::Rc;
use std::time::Instant;

use super::cursors::{
    AppendConst, Cursor, Decorate, Empty, List, Lookahead, NestedLoop, Single, Union,
};
use super::{ir, Enumerator, StepMeter};
use crate::error::{Error, Result};
use crate::formula::{simplify, to_disjoint_dnf, to_dnf, Atom, Formula, Literal, Query};
use crate::qelim::eliminate_all;
use crate::structure::{
    compile_node, count_satisfying, node_cost, BijStructure, CBase, CNode, CTerm, Compiled, Elem,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Split mixed constraints lazily, one at a time.
    #[default]
    Lazy,
    /// Convert the eliminated formula to a disjoint DNF up front.
    DisjointDnf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumOptions {
    pub strategy: Strategy,
    /// Keep every gap in the meter.
    pub record_gaps: bool,
}

fn meter(opts: EnumOptions) -> StepMeter {
    if opts.record_gaps {
        StepMeter::recording()
    } else {
        StepMeter::new()
    }
}

struct Ctx<'a> {
    s: &'a BijStructure,
    m: StepMeter,
}

/// Per-slot candidate elements, with the one-slot constraints that cut
/// them down. `None` leaves the slot unrestricted.
#[derive(Clone)]
struct Domains {
    sets: Vec<Option<Rc<Vec<Elem>>>>,
    unary: Vec<Rc<Vec<CNode>>>,
}

impl Domains {
    fn new(k: usize) -> Self {
        Domains {
            sets: vec![None; k],
            unary: (0..k).map(|_| Rc::new(Vec::new())).collect(),
        }
    }

    fn truncate(&self, k: usize) -> Self {
        Domains {
            sets: self.sets[..k].to_vec(),
            unary: self.unary[..k].to_vec(),
        }
    }
}

fn flatten_into(n: CNode, out: &mut Vec<CNode>) -> bool {
    match n {
        CNode::Const(b) => b,
        CNode::And(parts) => parts.into_iter().all(|p| flatten_into(p, out)),
        other => {
            out.push(other);
            true
        }
    }
}

impl Ctx<'_> {
    fn build(&mut self, vars: &[String], cons: Vec<Formula>) -> Result<Box<dyn Cursor>> {
        if vars.len() > 64 {
            return Err(Error::Resource("more than 64 free variables".into()));
        }
        let slots: Vec<&str> = vars.iter().map(String::as_str).collect();
        let mut nodes = Vec::with_capacity(cons.len());
        for c in &cons {
            nodes.push(ir::normalize(self.s, &compile_node(self.s, c, &slots)?));
        }
        self.build_ir(vars.len(), nodes, Domains::new(vars.len()))
    }

    /// Cursor over slots `0..k` for a conjunction of constraints mentioning
    /// only those slots, within the candidate sets of `dom`.
    fn build_ir(
        &mut self,
        k: usize,
        cons: Vec<CNode>,
        mut dom: Domains,
    ) -> Result<Box<dyn Cursor>> {
        let mut all = Vec::with_capacity(cons.len());
        for c in cons {
            if !flatten_into(c, &mut all) {
                return Ok(Box::new(Empty));
            }
        }
        all.sort();
        all.dedup();
        self.m.tick(all.len() as u64);
        for l in &all {
            if let CNode::Not(m) = l {
                if all.binary_search(m).is_ok() {
                    return Ok(Box::new(Empty));
                }
            }
        }
        let mut list = Vec::new();
        let mut fresh: Vec<Vec<CNode>> = vec![Vec::new(); k];
        for c in all {
            let mask = ir::slot_mask(&c);
            if mask == 0 {
                if !self.eval_closed(&c) {
                    return Ok(Box::new(Empty));
                }
            } else if mask.is_power_of_two() {
                fresh[mask.trailing_zeros() as usize].push(c);
            } else {
                list.push(c);
            }
        }
        for (i, new) in fresh.into_iter().enumerate() {
            if new.is_empty() {
                continue;
            }
            let items = self.filter(i, dom.sets[i].as_deref().map(Vec::as_slice), &new)?;
            if items.is_empty() {
                return Ok(Box::new(Empty));
            }
            dom.sets[i] = Some(Rc::new(items));
            let mut u = (*dom.unary[i]).clone();
            u.extend(new);
            dom.unary[i] = Rc::new(u);
        }
        let Some(y) = k.checked_sub(1) else {
            return Ok(Box::new(Single { done: false }));
        };
        let ybit = 1u64 << y;
        if y == 0 {
            let items = self.candidates(0, &dom);
            return Ok(Box::new(List { items, pos: 0 }));
        }
        let masks: Vec<u64> = list.iter().map(ir::slot_mask).collect();

        // a positive equality y = τ(x) determines y
        let mut witness: Option<(usize, CTerm)> = None;
        for (i, c) in list.iter().enumerate() {
            if masks[i] & ybit == 0 {
                continue;
            }
            if let Some(tau) = ir::witness(c, y) {
                if witness
                    .as_ref()
                    .is_none_or(|(_, w)| tau.tables.len() < w.tables.len())
                {
                    witness = Some((i, tau));
                }
            }
        }
        if let Some((i, tau)) = witness {
            let rest = list
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c)
                .chain(dom.unary[y].iter())
                .map(|c| ir::subst(self.s, c, y, &tau))
                .collect();
            let child = self.build_ir(y, rest, dom.truncate(y))?;
            return Ok(Box::new(Decorate { child, term: tau }));
        }

        // branch on one atom of the smallest compound constraint mixing y;
        // the two sides are disjoint and a positive equality pins y
        let split = (0..list.len())
            .filter(|&i| {
                masks[i] & ybit != 0
                    && !ir::is_literal(&list[i])
                    && ir::guarded(&list[i], y).is_none()
            })
            .min_by_key(|&i| ir::size(&list[i]));
        if let Some(i) = split {
            let mut rest = list;
            let c = rest.remove(i);
            let atom = ir::split_atom(&c, y)
                .ok_or_else(|| Error::Formula("mixed constraint without an atom".into()))?;
            let mut parts = Vec::with_capacity(2);
            for val in [true, false] {
                let mut cons = rest.clone();
                cons.push(ir::assign(&c, &atom, val));
                cons.push(if val {
                    atom.clone()
                } else {
                    ir::mk_not(atom.clone())
                });
                let child = self.build_ir(k, cons, dom.clone())?;
                let la = Lookahead::new(child, k, self.s, &mut self.m);
                if !la.is_empty() {
                    parts.push(la);
                }
            }
            return Ok(Box::new(Union { parts, idx: 0 }));
        }

        // all-negative case
        let mut psi1 = Vec::new();
        let mut diseq: Vec<ir::Guarded> = Vec::new();
        for (i, c) in list.into_iter().enumerate() {
            if masks[i] & ybit == 0 {
                psi1.push(c);
            } else {
                match ir::guarded(&c, y) {
                    Some(g) => diseq.push(g),
                    None => return Err(Error::Formula("unexpected mixed constraint".into())),
                }
            }
        }
        let q2 = self.candidates(y, &dom);
        let inner = dom.truncate(y);
        let r = diseq.len();
        if q2.len() <= r {
            let mut parts = Vec::new();
            for &b in &q2 {
                let mut cons = psi1.clone();
                for g in &diseq {
                    let eq = ir::mk_eq(self.s, g.tau.clone(), ir::elem_term(b));
                    cons.push(ir::mk_or([g.escape.clone(), ir::mk_not(eq)]));
                }
                let child = self.build_ir(y, cons, inner.clone())?;
                let app: Box<dyn Cursor> = Box::new(AppendConst { child, value: b });
                let la = Lookahead::new(app, k, self.s, &mut self.m);
                if !la.is_empty() {
                    parts.push(la);
                }
            }
            return Ok(Box::new(Union { parts, idx: 0 }));
        }
        let forbidden = diseq
            .into_iter()
            .map(|g| {
                let escape = match g.escape {
                    CNode::Const(false) => None,
                    e => Some(Compiled::from_node(e)),
                };
                (escape, g.tau)
            })
            .collect();
        let child = self.build_ir(y, psi1, inner)?;
        Ok(Box::new(NestedLoop::new(child, q2, forbidden, &mut self.m)))
    }

    fn eval_closed(&mut self, c: &CNode) -> bool {
        let mut steps = 1;
        let ok = Compiled::from_node(c.clone()).eval(self.s, &[], &mut steps);
        self.m.tick(steps);
        ok
    }

    /// Candidate elements of slot `i`; the whole domain when unrestricted.
    fn candidates(&mut self, i: usize, dom: &Domains) -> Vec<Elem> {
        match &dom.sets[i] {
            Some(set) => {
                self.m.tick(set.len() as u64);
                set.to_vec()
            }
            None => {
                self.m.tick(self.s.size() as u64);
                (0..self.s.size() as Elem).collect()
            }
        }
    }

    /// Elements of `base` (or of the domain) satisfying every constraint
    /// with slot `i` set to them, ascending. The constraints mention no
    /// other slot. Without a base, the members of a bare positive predicate
    /// are scanned when one is present.
    fn filter(&mut self, i: usize, base: Option<&[Elem]>, cons: &[CNode]) -> Result<Vec<Elem>> {
        let s = self.s;
        let mut best = base;
        if best.is_none() {
            for c in cons {
                if let CNode::Pred(p, t) = c {
                    if t.tables.is_empty() && t.base == CBase::Slot(i) {
                        let ms = s.members(*p as usize);
                        if best.is_none_or(|b| ms.len() < b.len()) {
                            best = Some(ms);
                        }
                    }
                }
            }
        }
        let mut cons = cons.to_vec();
        cons.sort_by_key(node_cost);
        let compiled = Compiled::from_node(ir::mk_and(cons));
        let mut steps = 0u64;
        let mut out = Vec::new();
        let mut vals = vec![0 as Elem; i + 1];
        let mut test = |a: Elem, steps: &mut u64| {
            vals[i] = a;
            *steps += 1;
            if compiled.eval(s, &vals, steps) {
                out.push(a);
            }
        };
        match best {
            Some(ms) => ms.iter().for_each(|&a| test(a, &mut steps)),
            None => (0..s.size() as Elem).for_each(|a| test(a, &mut steps)),
        }
        self.m.tick(steps);
        Ok(out)
    }
}

fn finish<'s>(
    s: &'s BijStructure,
    vars: Vec<String>,
    ctx_result: Result<Box<dyn Cursor>>,
    m: StepMeter,
    start: Instant,
) -> Result<Enumerator<'s>> {
    Ok(Enumerator::new(s, vars, ctx_result?, m, start.elapsed()))
}

/// Enumerate the elements satisfying a one-variable quantifier-free formula,
/// materialized by one domain scan.
pub fn from_linear_scan<'s>(
    s: &'s BijStructure,
    phi: &Formula,
    var: &str,
) -> Result<Enumerator<'s>> {
    if let Some(v) = phi.free_vars().into_iter().find(|v| v != var) {
        return Err(Error::Formula(format!(
            "linear scan over `{var}` but the formula also mentions `{v}`"
        )));
    }
    if !phi.is_quantifier_free() {
        return Err(Error::Formula(
            "linear scan needs a quantifier-free formula".into(),
        ));
    }
    let start = Instant::now();
    let mut ctx = Ctx {
        s,
        m: StepMeter::new(),
    };
    let cursor = ctx.build(&[var.to_string()], vec![phi.clone()]);
    finish(s, vec![var.to_string()], cursor, ctx.m, start)
}

/// Concatenate enumerators with pairwise disjoint solution sets.
pub fn disjoint_union<'s>(
    s: &'s BijStructure,
    parts: Vec<Enumerator<'s>>,
) -> Result<Enumerator<'s>> {
    let start = Instant::now();
    let mut m = StepMeter::new();
    let mut vars: Option<Vec<String>> = None;
    let mut las = Vec::new();
    for p in parts {
        if !std::ptr::eq(p.structure(), s) {
            return Err(Error::Unsupported(
                "union of enumerators over different structures".into(),
            ));
        }
        let (pv, cursor, pm) = p.into_parts();
        match &vars {
            Some(v) if *v != pv => {
                return Err(Error::Unsupported(
                    "union of enumerators with different variables".into(),
                ))
            }
            _ => vars = Some(pv.clone()),
        }
        m.tick(pm.precompute_steps());
        let la = Lookahead::new(cursor, pv.len(), s, &mut m);
        if !la.is_empty() {
            las.push(la);
        }
    }
    let cursor: Box<dyn Cursor> = Box::new(Union { parts: las, idx: 0 });
    finish(s, vars.unwrap_or_default(), Ok(cursor), m, start)
}

/// Enumerate the solutions over `vars` of a conjunction of bijective literals.
pub fn enum_conjunction<'s>(
    s: &'s BijStructure,
    conj: &[Literal],
    vars: &[String],
) -> Result<Enumerator<'s>> {
    for l in conj {
        if let Atom::Rel(..) = l.atom {
            return Err(Error::Unsupported(format!("relational literal `{l}`")));
        }
    }
    let start = Instant::now();
    let mut ctx = Ctx {
        s,
        m: StepMeter::new(),
    };
    let cursor = ctx.build(vars, conj.iter().map(Literal::to_formula).collect());
    finish(s, vars.to_vec(), cursor, ctx.m, start)
}

/// Replace cardinality atoms by their truth value in `s`.
fn fold_cards(f: &Formula, s: &BijStructure) -> Result<Formula> {
    let mut err = None;
    let out = f.map_atoms(&mut |a| match a {
        Atom::Card { k, var, body } => match count_satisfying(s, var, body) {
            Ok(c) if c >= *k => Formula::t(),
            Ok(_) => Formula::f(),
            Err(e) => {
                err = Some(e);
                Formula::f()
            }
        },
        other => Formula::Atom(other.clone()),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(simplify(&out)),
    }
}

/// Enumerate `φ(S)` for a bijective query.
pub fn enum_query<'s>(s: &'s BijStructure, q: &Query) -> Result<Enumerator<'s>> {
    enum_query_with(s, q, EnumOptions::default())
}

pub fn enum_query_with<'s>(
    s: &'s BijStructure,
    q: &Query,
    opts: EnumOptions,
) -> Result<Enumerator<'s>> {
    if q.formula.has_relational_atom() {
        return Err(Error::Unsupported(
            "relational atom in a bijective query; reduce the structure first".into(),
        ));
    }
    for v in q.formula.free_vars() {
        if !q.free.contains(&v) {
            return Err(Error::UnboundVariable(v));
        }
    }
    let start = Instant::now();
    let qf = eliminate_all(&q.formula)?;
    let folded = fold_cards(&qf, s)?;
    let mut ctx = Ctx { s, m: meter(opts) };
    let cursor = match opts.strategy {
        Strategy::Lazy => ctx.build(&q.free, vec![folded]),
        Strategy::DisjointDnf => (|| {
            let dnf = to_disjoint_dnf(&to_dnf(&folded)?);
            let mut parts = Vec::new();
            for c in dnf.conjuncts() {
                let child = ctx.build(&q.free, c.iter().map(Literal::to_formula).collect())?;
                let la = Lookahead::new(child, q.free.len(), s, &mut ctx.m);
                if !la.is_empty() {
                    parts.push(la);
                }
            }
            Ok(Box::new(Union { parts, idx: 0 }) as Box<dyn Cursor>)
        })(),
    };
    finish(s, q.free.clone(), cursor, ctx.m, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::measure_delay;
    use crate::formula::{parse_formula, to_dnf, Signature};
    use crate::structure::load_structure;
    use std::collections::BTreeSet;

    fn sig() -> Signature {
        Signature::bijective(&["f", "g"], &["U", "V"], &[]).unwrap()
    }

    fn collect(e: Enumerator<'_>) -> Vec<Vec<Elem>> {
        e.collect()
    }

    #[test]
    fn linear_scan_examples() {
        let s = load_structure("domain 4\nperm f 0 1 2 3\nperm g 0 1 2 3\npred U 0 1\npred V\n")
            .unwrap();
        let q = parse_formula("U(x)", &sig()).unwrap();
        assert_eq!(
            collect(from_linear_scan(&s, &q.formula, "x").unwrap()),
            vec![vec![0], vec![1]]
        );
        let q = parse_formula("x != x", &sig()).unwrap();
        assert!(collect(from_linear_scan(&s, &q.formula, "x").unwrap()).is_empty());
        let s =
            load_structure("domain 3\nperm f 0 2 1\nperm g 0 1 2\npred U 0 1\npred V\n").unwrap();
        let q = parse_formula("f(x) = x & U(x)", &sig()).unwrap();
        assert_eq!(
            collect(from_linear_scan(&s, &q.formula, "x").unwrap()),
            vec![vec![0]]
        );
        let q = parse_formula("f(x) = y", &sig()).unwrap();
        assert!(from_linear_scan(&s, &q.formula, "x").is_err());
    }

    #[test]
    fn union_examples() {
        let s =
            load_structure("domain 3\nperm f 0 1 2\nperm g 0 1 2\npred U 0\npred V 1\n").unwrap();
        let e = disjoint_union(&s, vec![]).unwrap();
        assert!(collect(e).is_empty());
        let a = from_linear_scan(&s, &parse_formula("U(x)", &sig()).unwrap().formula, "x").unwrap();
        let b = from_linear_scan(&s, &parse_formula("V(x)", &sig()).unwrap().formula, "x").unwrap();
        assert_eq!(
            collect(disjoint_union(&s, vec![a, b]).unwrap()),
            vec![vec![0], vec![1]]
        );
    }

    fn conj(text: &str) -> (Vec<Literal>, Vec<String>) {
        let q = parse_formula(text, &sig()).unwrap();
        let c = to_dnf(&q.formula).unwrap().conjuncts.remove(0);
        let mut vars = q.free;
        vars.sort();
        (c, vars)
    }

    #[test]
    fn conjunction_case_two() {
        let s = load_structure("domain 4\nperm f 0 1 2 3\nperm g 0 1 2 3\npred U 0 1\npred V\n")
            .unwrap();
        let (c, vars) = conj("U(x) & f(x) != y");
        let got: BTreeSet<Vec<Elem>> = collect(enum_conjunction(&s, &c, &vars).unwrap())
            .into_iter()
            .collect();
        let want: BTreeSet<Vec<Elem>> = [[0, 1], [0, 2], [0, 3], [1, 0], [1, 2], [1, 3]]
            .iter()
            .map(|t| t.to_vec())
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn conjunction_case_one() {
        let s = load_structure("domain 3\nperm f 1 2 0\nperm g 0 1 2\npred U\npred V\n").unwrap();
        let (c, vars) = conj("y = f(x)");
        let got = collect(enum_conjunction(&s, &c, &vars).unwrap());
        assert_eq!(got, vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
    }

    #[test]
    fn small_q2_uses_union() {
        let s =
            load_structure("domain 4\nperm f 1 2 3 0\nperm g 0 1 2 3\npred U 2\npred V\n").unwrap();
        let (c, vars) = conj("U(y) & y != f(x) & y != x");
        let got = collect(enum_conjunction(&s, &c, &vars).unwrap());
        assert_eq!(got, vec![vec![0, 2], vec![3, 2]]);
    }

    #[test]
    fn query_examples() {
        let s = load_structure("domain 3\nperm f 1 2 0\nperm g 0 1 2\npred U 2\npred V\n").unwrap();
        let q = parse_formula("E y. f(y) = x & U(y)", &sig()).unwrap();
        assert_eq!(collect(enum_query(&s, &q).unwrap()), vec![vec![0]]);
        let q = parse_formula("E x. V(x)", &sig()).unwrap();
        assert!(collect(enum_query(&s, &q).unwrap()).is_empty());
        let q = parse_formula("E x. U(x)", &sig()).unwrap();
        assert_eq!(
            collect(enum_query(&s, &q).unwrap()),
            vec![Vec::<Elem>::new()]
        );
        let q = parse_formula("x != y", &sig()).unwrap();
        let got = collect(enum_query(&s, &q).unwrap());
        assert_eq!(got.len(), 6);
        assert!(got.iter().all(|t| t[0] != t[1]));
    }

    #[test]
    fn strategies_agree() {
        let s = load_structure(
            "domain 5\nperm f 1 2 3 4 0\nperm g 1 0 3 2 4\npred U 0 2 3\npred V 1 3\n",
        )
        .unwrap();
        let texts = [
            "(U(x) | f(x) = y) & !(V(y) & g(y) = x)",
            "E z. (f(z) = x | g(z) = y) & z != x & U(z)",
            "A z. (z = x | z = y | !V(z))",
            "x != y & (y != z | U(x)) & f(z) != x",
        ];
        for t in texts {
            let q = parse_formula(t, &sig()).unwrap();
            let lazy: Vec<_> = collect(enum_query(&s, &q).unwrap());
            let dnf: Vec<_> = collect(
                enum_query_with(
                    &s,
                    &q,
                    EnumOptions {
                        strategy: Strategy::DisjointDnf,
                        record_gaps: false,
                    },
                )
                .unwrap(),
            );
            let a: BTreeSet<_> = lazy.iter().cloned().collect();
            let b: BTreeSet<_> = dnf.iter().cloned().collect();
            assert_eq!(a.len(), lazy.len(), "duplicates in {t}");
            assert_eq!(b.len(), dnf.len(), "duplicates in {t}");
            assert_eq!(a, b, "{t}");
        }
    }

    #[test]
    fn exhaustion_is_idempotent() {
        let s = load_structure("domain 4\nperm f 1 2 3 0\nperm g 0 1 2 3\npred U 0 1\npred V\n")
            .unwrap();
        let q = parse_formula("U(x) & f(x) != y", &sig()).unwrap();
        let mut e = enum_query(&s, &q).unwrap();
        while e.advance() {}
        for _ in 0..100 {
            assert!(!e.advance());
        }
        assert!(e.meter().idle_max() <= 1);
    }

    #[test]
    fn delay_report() {
        let s = load_structure("domain 3\nperm f 1 2 0\nperm g 0 1 2\npred U\npred V\n").unwrap();
        let q = parse_formula("U(x)", &sig()).unwrap();
        let r = measure_delay(enum_query(&s, &q).unwrap());
        assert_eq!(r.tuples, 0);
        assert_eq!(r.max_gap, r.final_gap);
    }
}
