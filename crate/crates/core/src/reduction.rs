//! Relational structures of bounded degree and their interpretation into
//! bijective structures.
//!
//! Element layout of the reduced domain: originals `0..n`, then the copy
//! `(x, h)` at `n + x·d + (h − 1)`, then one element per stored tuple.

use std::fmt::Write as _;

use crate::enumeration::{enum_query, Enumerator};
use crate::error::{Error, Result};
use crate::formula::{Atom, Formula, FreshNames, Query, Signature, SignatureKind, Step, Term};
use crate::structure::{BijStructure, Elem};

/// Name of the predicate marking original elements.
pub const DOMAIN_PRED: &str = "D";
/// Name of the permutation cycling each element through its copies.
pub const CYCLE_FN: &str = "g";

pub fn tuple_pred(rel: &str) -> String {
    format!("T_{rel}")
}

pub fn position_fn(j: usize) -> String {
    format!("f{j}")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    /// Tuples in stored order, flattened.
    pub data: Vec<Elem>,
}

impl Relation {
    pub fn len(&self) -> usize {
        self.data.len() / self.arity
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[Elem]> {
        self.data.chunks_exact(self.arity)
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        self.tuples().any(|u| u == t)
    }
}

/// A finite relational structure over `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelStructure {
    size: usize,
    sig: Signature,
    relations: Vec<Relation>,
    degrees: Vec<usize>,
}

impl RelStructure {
    pub fn new(size: usize) -> Self {
        RelStructure {
            size,
            sig: Signature::relational(),
            relations: Vec::new(),
            degrees: vec![0; size],
        }
    }

    /// Add a relation with its tuples, in stored order.
    pub fn add_relation(&mut self, name: &str, arity: usize, tuples: &[Vec<Elem>]) -> Result<()> {
        self.sig.add_relation(name, arity)?;
        let mut data = Vec::with_capacity(arity * tuples.len());
        for t in tuples {
            if t.len() != arity {
                return Err(Error::ArityMismatch {
                    name: name.to_string(),
                    expected: arity,
                    found: t.len(),
                });
            }
            for &e in t {
                if e as usize >= self.size {
                    return Err(Error::structure(0, format!("element {e} out of range")));
                }
                self.degrees[e as usize] += 1;
            }
            data.extend_from_slice(t);
        }
        self.relations.push(Relation {
            name: name.to_string(),
            arity,
            data,
        });
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    /// Position-incidence count of every element.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Total number of stored tuples.
    pub fn tuple_count(&self) -> usize {
        self.relations.iter().map(Relation::len).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "domain {}", self.size);
        for r in &self.relations {
            let _ = writeln!(out, "rel {} {}", r.name, r.arity);
            for t in r.tuples() {
                let line: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
            out.push_str("end\n");
        }
        out
    }
}

/// Parse `domain <n>`, then blocks `rel <name> <arity>`, one tuple per
/// line, `end`. `#` starts a comment.
pub fn load_rel_structure(text: &str) -> Result<RelStructure> {
    let mut s: Option<RelStructure> = None;
    let mut open: Option<(String, usize, Vec<Vec<Elem>>, usize)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if let Some((name, arity, tuples, start)) = &mut open {
            if toks == ["end"] {
                let st = s.as_mut().expect("domain precedes relations");
                st.add_relation(name, *arity, tuples).map_err(|e| match e {
                    Error::DuplicateSymbol(n) => {
                        Error::structure(*start, format!("relation `{n}` declared twice"))
                    }
                    other => other,
                })?;
                open = None;
                continue;
            }
            if toks.len() != *arity {
                return Err(Error::structure(
                    line,
                    format!(
                        "tuple of {name} has {} entries, expected {arity}",
                        toks.len()
                    ),
                ));
            }
            let n = s.as_ref().unwrap().size;
            let t = toks
                .iter()
                .map(|tok| {
                    tok.parse::<usize>()
                        .ok()
                        .filter(|&e| e < n)
                        .map(|e| e as Elem)
                        .ok_or_else(|| Error::structure(line, format!("bad element `{tok}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            tuples.push(t);
            continue;
        }
        match toks.as_slice() {
            ["format", "1"] => {}
            ["domain", n] => {
                if s.is_some() {
                    return Err(Error::structure(line, "duplicate `domain` line"));
                }
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::structure(line, format!("bad domain size `{n}`")))?;
                s = Some(RelStructure::new(n));
            }
            ["rel", name, arity] => {
                if s.is_none() {
                    return Err(Error::structure(line, "`domain` must come first"));
                }
                let arity: usize = arity
                    .parse()
                    .map_err(|_| Error::structure(line, format!("bad arity `{arity}`")))?;
                if arity == 0 {
                    return Err(Error::structure(line, "relations need arity at least 1"));
                }
                open = Some((name.to_string(), arity, Vec::new(), line));
            }
            _ => {
                return Err(Error::structure(
                    line,
                    format!("unrecognized line `{}`", content.trim()),
                ))
            }
        }
    }
    if let Some((name, ..)) = open {
        return Err(Error::structure(0, format!("relation {name} lacks `end`")));
    }
    s.ok_or_else(|| Error::structure(0, "missing `domain` line"))
}

/// `(d, d1)`: the maximal position-incidence count and the maximal number
/// of distinct other elements sharing a tuple.
pub fn degree(s: &RelStructure) -> (usize, usize) {
    let d = s.degrees.iter().copied().max().unwrap_or(0);
    let mut neighbours: Vec<Vec<Elem>> = vec![Vec::new(); s.size];
    for r in &s.relations {
        for t in r.tuples() {
            for &a in t {
                for &b in t {
                    if a != b {
                        neighbours[a as usize].push(b);
                    }
                }
            }
        }
    }
    let d1 = neighbours
        .iter_mut()
        .map(|v| {
            v.sort_unstable();
            v.dedup();
            v.len()
        })
        .max()
        .unwrap_or(0);
    let m = s.sig.max_arity();
    let q = s.relations.len();
    debug_assert!(d1 <= m.saturating_sub(1) * d);
    debug_assert!(d as u128 <= (q * m) as u128 * ((d1 + 1) as u128).pow(m as u32));
    (d, d1)
}

/// What a reduced-domain element stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Element(Elem),
    Copy(Elem, usize),
    Tuple { relation: usize, index: usize },
}

/// The bijective image of a relational structure.
#[derive(Debug)]
pub struct ReducedStructure {
    pub bij: BijStructure,
    /// Size of the original domain.
    pub n: usize,
    /// Number of copies per element.
    pub d: usize,
    /// Maximal arity, the number of involutions.
    pub m: usize,
    relation_names: Vec<String>,
    relation_offsets: Vec<usize>,
    /// Abstract steps spent building the structure.
    pub construction_steps: u64,
}

impl ReducedStructure {
    pub fn copy_index(&self, x: Elem, h: usize) -> Elem {
        debug_assert!(h >= 1 && h <= self.d);
        (self.n + x as usize * self.d + h - 1) as Elem
    }

    pub fn tuple_index(&self, relation: usize, index: usize) -> Elem {
        ((self.d + 1) * self.n + self.relation_offsets[relation] + index) as Elem
    }

    pub fn origin(&self, e: Elem) -> Origin {
        let e = e as usize;
        if e < self.n {
            return Origin::Element(e as Elem);
        }
        if e < (self.d + 1) * self.n {
            let k = e - self.n;
            return Origin::Copy((k / self.d) as Elem, k % self.d + 1);
        }
        let k = e - (self.d + 1) * self.n;
        let relation = self.relation_offsets.partition_point(|&o| o <= k) - 1;
        Origin::Tuple {
            relation,
            index: k - self.relation_offsets[relation],
        }
    }

    pub fn label(&self, e: Elem) -> String {
        match self.origin(e) {
            Origin::Element(x) => x.to_string(),
            Origin::Copy(x, h) => format!("({x},{h})"),
            Origin::Tuple { relation, index } => {
                format!("{}#{index}", self.relation_names[relation])
            }
        }
    }

    /// The bijective structure followed by `# map` comment lines.
    pub fn to_text(&self) -> String {
        let mut out = self.bij.to_text();
        for e in 0..self.bij.size() as Elem {
            let _ = writeln!(out, "# map {e} {}", self.label(e));
        }
        out
    }
}

/// Build the bijective structure, with `d` copies per element. A `d` below
/// the structure's degree is rejected.
pub fn build_bijective_with(s: &RelStructure, d: Option<usize>) -> Result<ReducedStructure> {
    let (actual, _) = degree(s);
    let d = match d {
        Some(d) if d < actual => {
            return Err(Error::Unsupported(format!(
                "degree bound {d} is below the structure's degree {actual}"
            )))
        }
        Some(d) => d,
        None => actual,
    };
    let n = s.size;
    let m = s.sig.max_arity();
    let tuples = s.tuple_count();
    let total = (d + 1) * n + tuples;
    if total >= Elem::MAX as usize {
        return Err(Error::Resource(format!(
            "reduced domain of {total} elements"
        )));
    }
    let mut steps = 0u64;

    let mut g: Vec<Elem> = (0..total as Elem).collect();
    for x in 0..n {
        if d == 0 {
            continue;
        }
        let copy = |h: usize| (n + x * d + h - 1) as Elem;
        g[x] = copy(1);
        for h in 1..d {
            g[copy(h) as usize] = copy(h + 1);
        }
        g[copy(d) as usize] = x as Elem;
        steps += d as u64 + 1;
    }

    let mut fs: Vec<Vec<Elem>> = vec![(0..total as Elem).collect(); m];
    let mut seen = vec![0usize; n];
    let mut t_index = (d + 1) * n;
    let mut offsets = Vec::with_capacity(s.relations.len());
    let mut preds: Vec<(String, Vec<Elem>)> = Vec::new();
    preds.push((DOMAIN_PRED.to_string(), (0..n as Elem).collect()));
    let mut offset = 0;
    for r in &s.relations {
        offsets.push(offset);
        let first = t_index;
        for t in r.tuples() {
            for (j, &x) in t.iter().enumerate() {
                seen[x as usize] += 1;
                let h = seen[x as usize];
                assert!(h <= d, "incidence {h} of element {x} exceeds degree {d}");
                let c = n + x as usize * d + h - 1;
                fs[j][t_index] = c as Elem;
                fs[j][c] = t_index as Elem;
                steps += 1;
            }
            t_index += 1;
        }
        preds.push((
            tuple_pred(&r.name),
            (first as Elem..t_index as Elem).collect(),
        ));
        offset += r.len();
    }
    steps += total as u64;

    let mut b = BijStructure::builder(total).perm(CYCLE_FN, g);
    for (j, f) in fs.into_iter().enumerate() {
        b = b.perm(&position_fn(j + 1), f);
    }
    for (p, ms) in preds {
        b = b.pred(&p, ms);
    }
    let bij = b.build()?;
    Ok(ReducedStructure {
        bij,
        n,
        d,
        m,
        relation_names: s.relations.iter().map(|r| r.name.clone()).collect(),
        relation_offsets: offsets,
        construction_steps: steps,
    })
}

pub fn build_bijective(s: &RelStructure) -> Result<ReducedStructure> {
    build_bijective_with(s, None)
}

fn g_power(x: &str, h: usize) -> Term {
    let mut t = Term::var(x);
    for _ in 0..h {
        t = t.apply(Step::forward(CYCLE_FN));
    }
    t
}

/// `∃t (T_R(t) ∧ ⋀j ⋁_{1≤h≤d} fj(t) = g^h(xj))`, with `t` named `bound`.
pub fn translate_atom_as(rel: &str, args: &[String], d: usize, bound: &str) -> Result<Formula> {
    if args.is_empty() {
        return Err(Error::Unsupported(format!("relation `{rel}` has arity 0")));
    }
    let t = Term::var(bound);
    let mut parts = vec![Formula::pred(tuple_pred(rel), t.clone())];
    for (j, x) in args.iter().enumerate() {
        let fj = t.clone().apply(Step::forward(position_fn(j + 1)));
        parts.push(Formula::or(
            (1..=d).map(|h| Formula::eq(fj.clone(), g_power(x, h))),
        ));
    }
    Ok(Formula::exists(bound, Formula::and(parts)))
}

pub fn translate_atom(rel: &str, args: &[String], d: usize) -> Result<Formula> {
    let mut used = std::collections::BTreeSet::new();
    used.extend(args.iter().cloned());
    let bound = FreshNames::new("t", used).next_name();
    translate_atom_as(rel, args, d, &bound)
}

/// Relativize quantifiers to `D`, replace relational atoms by their
/// bijective definitions and confine the free variables to `D`.
pub fn translate_formula(phi: &Query, sig: &Signature, d: usize) -> Result<Query> {
    if sig.kind() != SignatureKind::Relational {
        return Err(Error::Unsupported(
            "translation needs a relational signature".into(),
        ));
    }
    let bound = FreshNames::avoiding("t", &phi.formula).next_name();
    let body = translate_rec(&phi.formula, sig, d, &bound)?;
    let mut parts = vec![body];
    for x in &phi.free {
        parts.push(Formula::pred(DOMAIN_PRED, Term::var(x)));
    }
    Ok(Query::with_free(Formula::and(parts), phi.free.clone()))
}

fn translate_rec(f: &Formula, sig: &Signature, d: usize, bound: &str) -> Result<Formula> {
    Ok(match f {
        Formula::Atom(a) => match a {
            Atom::Rel(r, args) => {
                match sig.relation_arity(r) {
                    Some(k) if k == args.len() => {}
                    Some(k) => {
                        return Err(Error::ArityMismatch {
                            name: r.clone(),
                            expected: k,
                            found: args.len(),
                        })
                    }
                    None => return Err(Error::UndeclaredSymbol(r.clone())),
                }
                translate_atom_as(r, args, d, bound)?
            }
            Atom::Eq(s, t)
                if s.is_bare()
                    && t.is_bare()
                    && s.var_name().is_some()
                    && t.var_name().is_some() =>
            {
                Formula::Atom(a.clone())
            }
            Atom::True | Atom::False => Formula::Atom(a.clone()),
            other => {
                return Err(Error::Unsupported(format!(
                    "atom `{other}` in a relational formula"
                )))
            }
        },
        Formula::Not(g) => Formula::not(translate_rec(g, sig, d, bound)?),
        Formula::And(gs) => Formula::and(
            gs.iter()
                .map(|g| translate_rec(g, sig, d, bound))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Or(gs) => Formula::or(
            gs.iter()
                .map(|g| translate_rec(g, sig, d, bound))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Exists(v, g) => Formula::exists(
            v.clone(),
            Formula::and([
                Formula::pred(DOMAIN_PRED, Term::var(v.clone())),
                translate_rec(g, sig, d, bound)?,
            ]),
        ),
        Formula::Forall(v, g) => Formula::forall(
            v.clone(),
            Formula::or([
                Formula::not(Formula::pred(DOMAIN_PRED, Term::var(v.clone()))),
                translate_rec(g, sig, d, bound)?,
            ]),
        ),
    })
}

/// A relational query prepared for enumeration over the reduced structure.
#[derive(Debug)]
pub struct FoDeg {
    pub reduced: ReducedStructure,
    pub query: Query,
}

impl FoDeg {
    pub fn new(phi: &Query, s: &RelStructure) -> Result<Self> {
        let reduced = build_bijective(s)?;
        let query = translate_formula(phi, s.signature(), reduced.d)?;
        Ok(FoDeg { reduced, query })
    }

    /// Emitted tuples hold original elements, which keep their indices.
    pub fn enumerator(&self) -> Result<Enumerator<'_>> {
        enum_query(&self.reduced.bij, &self.query)
    }
}

/// `φ(S)` for a relational query, through the reduction.
pub fn enum_fo_deg(phi: &Query, s: &RelStructure) -> Result<Vec<Vec<Elem>>> {
    let prep = FoDeg::new(phi, s)?;
    let out: Vec<Vec<Elem>> = prep.enumerator()?.collect();
    debug_assert!(out.iter().flatten().all(|&e| (e as usize) < s.size()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn path() -> RelStructure {
        load_rel_structure("domain 4\nrel E 2\n0 1\n1 2\n2 3\nend\n").unwrap()
    }

    #[test]
    fn degree_examples() {
        assert_eq!(degree(&path()), (2, 2));
        assert_eq!(degree(&RelStructure::new(0)), (0, 0));
        let refl = load_rel_structure("domain 1\nrel E 2\n0 0\nend\n").unwrap();
        assert_eq!(degree(&refl), (2, 0));
    }

    #[test]
    fn load_errors() {
        assert!(load_rel_structure("domain 2\nrel E 2\n0 2\nend\n").is_err());
        assert!(load_rel_structure("domain 2\nrel E 2\n0\nend\n").is_err());
        assert!(load_rel_structure("domain 2\nrel E 0\nend\n").is_err());
        assert!(load_rel_structure("domain 2\nrel E 2\n0 1\n").is_err());
        let s = path();
        assert_eq!(load_rel_structure(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn reduced_path() {
        let r = build_bijective(&path()).unwrap();
        assert_eq!(r.bij.size(), 15);
        let g = r.bij.func_index(CYCLE_FN).unwrap();
        assert_eq!(r.bij.forward(g)[0], r.copy_index(0, 1));
        assert_eq!(r.bij.forward(g)[r.copy_index(0, 2) as usize], 0);
        for j in 1..=r.m {
            let f = r.bij.func_index(&position_fn(j)).unwrap();
            let fw = r.bij.forward(f);
            assert!((0..15).all(|e| fw[fw[e] as usize] == e as Elem));
        }
        // tuple (1, 2): first incidence of 2, second of 1
        let t1 = r.tuple_index(0, 1);
        let f1 = r.bij.func_index("f1").unwrap();
        let f2 = r.bij.func_index("f2").unwrap();
        assert_eq!(r.bij.forward(f1)[t1 as usize], r.copy_index(1, 2));
        assert_eq!(r.bij.forward(f2)[t1 as usize], r.copy_index(2, 1));
        assert_eq!(
            r.origin(t1),
            Origin::Tuple {
                relation: 0,
                index: 1
            }
        );
        assert_eq!(r.label(r.copy_index(3, 2)), "(3,2)");
    }

    #[test]
    fn degenerate_reduction() {
        let mut s = RelStructure::new(3);
        s.add_relation("E", 2, &[]).unwrap();
        let r = build_bijective(&s).unwrap();
        assert_eq!(r.bij.size(), 3);
        assert_eq!(r.bij.forward(0), &[0, 1, 2]);
    }

    #[test]
    fn user_degree() {
        assert!(build_bijective_with(&path(), Some(1)).is_err());
        let r = build_bijective_with(&path(), Some(3)).unwrap();
        assert_eq!(r.bij.size(), 4 * 4 + 3);
    }

    #[test]
    fn atom_translation() {
        let f = translate_atom("E", &["x".into(), "y".into()], 2).unwrap();
        assert_eq!(
            f.to_string(),
            "E t0. T_E(t0) & (f1(t0) = g(x) | f1(t0) = g(g(x))) & (f2(t0) = g(y) | f2(t0) = g(g(y)))"
        );
        assert!(translate_atom("E", &[], 2).is_err());
        let f = translate_atom("E", &["x".into()], 0).unwrap();
        assert_eq!(f.to_string(), "E t0. T_E(t0) & false");
    }

    #[test]
    fn formula_translation() {
        let s = path();
        let q = parse_formula("E(x, y)", s.signature()).unwrap();
        let t = translate_formula(&q, s.signature(), 2).unwrap();
        assert!(
            t.formula.to_string().ends_with("& D(x) & D(y)"),
            "{}",
            t.formula
        );
        let q = parse_formula("F(x, y)", &{
            let mut sig = Signature::relational();
            sig.add_relation("F", 2).unwrap();
            sig
        })
        .unwrap();
        assert!(translate_formula(&q, s.signature(), 2).is_err());
    }

    #[test]
    fn enumeration_through_reduction() {
        let s = path();
        let sig = s.signature().clone();
        let q = parse_formula("E(x, y)", &sig).unwrap();
        assert_eq!(
            enum_fo_deg(&q, &s).unwrap(),
            vec![vec![0, 1], vec![1, 2], vec![2, 3]]
        );
        let q = parse_formula("!(E y. E(x, y))", &sig).unwrap();
        assert_eq!(enum_fo_deg(&q, &s).unwrap(), vec![vec![3]]);
        let q = parse_formula("E x. E(x, y)", &sig).unwrap();
        assert_eq!(
            enum_fo_deg(&q, &s).unwrap(),
            vec![vec![1], vec![2], vec![3]]
        );
        let mut empty = RelStructure::new(3);
        empty.add_relation("E", 2, &[]).unwrap();
        let q = parse_formula("E x. E y. E(x, y)", &sig).unwrap();
        assert!(enum_fo_deg(&q, &empty).unwrap().is_empty());
    }
}
