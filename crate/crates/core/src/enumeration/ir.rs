//! Compiled constraints over value slots. Substitution, folding and DNF work
//! on table indices, so the builder never goes back to named formulas.

use crate::structure::{eval_term_c, BijStructure, CBase, CNode, CTerm, Elem};

fn push_table(tables: &mut Vec<u32>, t: u32) {
    if tables.last() == Some(&(t ^ 1)) {
        tables.pop();
    } else {
        tables.push(t);
    }
}

fn term_mask(t: &CTerm) -> u64 {
    match t.base {
        CBase::Slot(i) => 1 << i,
        CBase::Elem(_) => 0,
    }
}

/// Bit `i` is set when slot `i` occurs.
pub(crate) fn slot_mask(n: &CNode) -> u64 {
    match n {
        CNode::Eq(l, r) => term_mask(l) | term_mask(r),
        CNode::Pred(_, t) => term_mask(t),
        CNode::Const(_) => 0,
        CNode::Not(m) => slot_mask(m),
        CNode::And(ms) | CNode::Or(ms) => ms.iter().fold(0, |a, m| a | slot_mask(m)),
    }
}

pub(crate) fn is_literal(n: &CNode) -> bool {
    match n {
        CNode::Eq(..) | CNode::Pred(..) => true,
        CNode::Not(m) => matches!(**m, CNode::Eq(..) | CNode::Pred(..)),
        _ => false,
    }
}

/// Solve `y·A = t` (either side) for slot `y`, when `t` does not start at `y`.
pub(crate) fn witness(n: &CNode, y: usize) -> Option<CTerm> {
    let CNode::Eq(l, r) = n else { return None };
    let ys = CBase::Slot(y);
    let (a, other) = match (l.base == ys, r.base == ys) {
        (true, false) => (l, r),
        (false, true) => (r, l),
        _ => return None,
    };
    let mut tau = other.clone();
    for &t in a.tables.iter().rev() {
        push_table(&mut tau.tables, t ^ 1);
    }
    Some(tau)
}

fn ground(s: &BijStructure, t: &CTerm) -> Option<Elem> {
    match t.base {
        CBase::Elem(_) => {
            let mut st = 0;
            Some(eval_term_c(t, s, &[], &mut st))
        }
        CBase::Slot(_) => None,
    }
}

pub(crate) fn elem_term(e: Elem) -> CTerm {
    CTerm {
        base: CBase::Elem(e),
        tables: Vec::new(),
    }
}

/// `l = r` with a common tail of hops removed and ground sides decided.
pub(crate) fn mk_eq(s: &BijStructure, mut l: CTerm, mut r: CTerm) -> CNode {
    while let (Some(a), Some(b)) = (l.tables.last(), r.tables.last()) {
        if a != b {
            break;
        }
        l.tables.pop();
        r.tables.pop();
    }
    if l == r {
        return CNode::Const(true);
    }
    if let (Some(a), Some(b)) = (ground(s, &l), ground(s, &r)) {
        return CNode::Const(a == b);
    }
    if l > r {
        std::mem::swap(&mut l, &mut r);
    }
    CNode::Eq(l, r)
}

fn mk_pred(s: &BijStructure, p: u32, t: CTerm) -> CNode {
    match ground(s, &t) {
        Some(e) => CNode::Const(s.holds(p as usize, e)),
        None => CNode::Pred(p, t),
    }
}

/// Negation pushed down to atoms.
pub(crate) fn mk_not(n: CNode) -> CNode {
    match n {
        CNode::Const(b) => CNode::Const(!b),
        CNode::Not(m) => *m,
        CNode::And(ms) => mk_junction(false, ms.into_iter().map(mk_not)),
        CNode::Or(ms) => mk_junction(true, ms.into_iter().map(mk_not)),
        m => CNode::Not(Box::new(m)),
    }
}

fn mk_junction(is_and: bool, parts: impl IntoIterator<Item = CNode>) -> CNode {
    let mut out = Vec::new();
    for p in parts {
        match p {
            CNode::Const(b) if b == is_and => {}
            CNode::Const(b) => return CNode::Const(b),
            CNode::And(ms) if is_and => out.extend(ms),
            CNode::Or(ms) if !is_and => out.extend(ms),
            m => out.push(m),
        }
    }
    match out.len() {
        0 => CNode::Const(is_and),
        1 => out.pop().unwrap(),
        _ if is_and => CNode::And(out),
        _ => CNode::Or(out),
    }
}

pub(crate) fn mk_and(parts: impl IntoIterator<Item = CNode>) -> CNode {
    mk_junction(true, parts)
}

pub(crate) fn mk_or(parts: impl IntoIterator<Item = CNode>) -> CNode {
    mk_junction(false, parts)
}

fn subst_term(t: &CTerm, sub: Option<(usize, &CTerm)>) -> CTerm {
    match sub {
        Some((y, tau)) if t.base == CBase::Slot(y) => {
            let mut out = tau.clone();
            for &tb in &t.tables {
                push_table(&mut out.tables, tb);
            }
            out
        }
        _ => {
            let mut out = CTerm {
                base: t.base.clone(),
                tables: Vec::with_capacity(t.tables.len()),
            };
            for &tb in &t.tables {
                push_table(&mut out.tables, tb);
            }
            out
        }
    }
}

fn rebuild(s: &BijStructure, n: &CNode, sub: Option<(usize, &CTerm)>) -> CNode {
    match n {
        CNode::Eq(l, r) => mk_eq(s, subst_term(l, sub), subst_term(r, sub)),
        CNode::Pred(p, t) => mk_pred(s, *p, subst_term(t, sub)),
        CNode::Const(b) => CNode::Const(*b),
        CNode::Not(m) => mk_not(rebuild(s, m, sub)),
        CNode::And(ms) => mk_junction(true, ms.iter().map(|m| rebuild(s, m, sub))),
        CNode::Or(ms) => mk_junction(false, ms.iter().map(|m| rebuild(s, m, sub))),
    }
}

/// Bring a freshly compiled node into negation normal form.
pub(crate) fn normalize(s: &BijStructure, n: &CNode) -> CNode {
    rebuild(s, n, None)
}

/// Replace slot `y` by `tau`.
pub(crate) fn subst(s: &BijStructure, n: &CNode, y: usize, tau: &CTerm) -> CNode {
    if slot_mask(n) & (1 << y) == 0 {
        return n.clone();
    }
    rebuild(s, n, Some((y, tau)))
}

/// A clause `G(x) ∨ y ≠ τ(x)` with `G` free of `y`: the value `τ(x)` is
/// forbidden for `y` unless the escape `G` holds.
#[derive(Clone, Debug)]
pub(crate) struct Guarded {
    pub(crate) escape: CNode,
    pub(crate) tau: CTerm,
}

/// Read a mixing constraint as a guarded disequality on slot `y`.
pub(crate) fn guarded(n: &CNode, y: usize) -> Option<Guarded> {
    let ybit = 1u64 << y;
    let (escape, lit): (Vec<&CNode>, Vec<&CNode>) = match n {
        CNode::Or(ms) => ms.iter().partition(|m| slot_mask(m) & ybit == 0),
        m => (Vec::new(), vec![m]),
    };
    let [CNode::Not(eq)] = lit.as_slice() else {
        return None;
    };
    let tau = witness(eq, y)?;
    Some(Guarded {
        escape: mk_or(escape.into_iter().cloned()),
        tau,
    })
}

pub(crate) fn size(n: &CNode) -> usize {
    match n {
        CNode::Not(m) => size(m),
        CNode::And(ms) | CNode::Or(ms) => 1 + ms.iter().map(size).sum::<usize>(),
        _ => 1,
    }
}

/// An atom of `n` to branch on: an equality tying `y` to another slot when
/// there is one, else any atom on `y`.
pub(crate) fn split_atom(n: &CNode, y: usize) -> Option<CNode> {
    fn walk(n: &CNode, y: usize, mixing: bool) -> Option<&CNode> {
        match n {
            CNode::Eq(..) | CNode::Pred(..) => {
                let m = slot_mask(n);
                let ok = m & (1 << y) != 0 && (!mixing || m != 1 << y);
                ok.then_some(n)
            }
            CNode::Const(_) => None,
            CNode::Not(m) => walk(m, y, mixing),
            CNode::And(ms) | CNode::Or(ms) => ms.iter().find_map(|m| walk(m, y, mixing)),
        }
    }
    walk(n, y, true).or_else(|| walk(n, y, false)).cloned()
}

/// `n` with every occurrence of `atom` fixed to `val`.
pub(crate) fn assign(n: &CNode, atom: &CNode, val: bool) -> CNode {
    if n == atom {
        return CNode::Const(val);
    }
    match n {
        CNode::Not(m) => mk_not(assign(m, atom, val)),
        CNode::And(ms) => mk_junction(true, ms.iter().map(|m| assign(m, atom, val))),
        CNode::Or(ms) => mk_junction(false, ms.iter().map(|m| assign(m, atom, val))),
        m => m.clone(),
    }
}
