//! Bijective structures: a finite domain `0..n`, permutations with their
//! inverses, monadic predicates and constants.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::formula::{substitute, Atom, Base, Formula, Sign, Signature, Term, CARD_VAR};

pub type Elem = u32;

/// A variable assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment(pub BTreeMap<String, Elem>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Elem)>) -> Self {
        Assignment(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn get(&self, v: &str) -> Option<Elem> {
        self.0.get(v).copied()
    }

    pub fn set(&mut self, v: &str, e: Elem) {
        self.0.insert(v.to_string(), e);
    }
}

#[derive(Debug)]
pub struct BijStructure {
    sig: Signature,
    size: usize,
    /// `tables[2f]` is function `f`, `tables[2f + 1]` its inverse.
    tables: Vec<Vec<Elem>>,
    preds: Vec<Vec<bool>>,
    pred_members: Vec<Vec<Elem>>,
    consts: Vec<Elem>,
    names: Option<Vec<String>>,
    card_memo: Mutex<HashMap<String, u64>>,
    card_scans: AtomicU64,
}

impl Clone for BijStructure {
    fn clone(&self) -> Self {
        BijStructure {
            sig: self.sig.clone(),
            size: self.size,
            tables: self.tables.clone(),
            preds: self.preds.clone(),
            pred_members: self.pred_members.clone(),
            consts: self.consts.clone(),
            names: self.names.clone(),
            card_memo: Mutex::new(HashMap::new()),
            card_scans: AtomicU64::new(0),
        }
    }
}

/// Incremental construction of a [`BijStructure`].
#[derive(Debug, Clone)]
pub struct BijBuilder {
    size: usize,
    funcs: Vec<(String, Vec<Elem>)>,
    preds: Vec<(String, Vec<Elem>)>,
    consts: Vec<(String, Elem)>,
    names: Option<Vec<String>>,
}

impl BijBuilder {
    pub fn perm(mut self, name: &str, images: Vec<Elem>) -> Self {
        self.funcs.push((name.to_string(), images));
        self
    }

    pub fn pred(mut self, name: &str, members: Vec<Elem>) -> Self {
        self.preds.push((name.to_string(), members));
        self
    }

    pub fn constant(mut self, name: &str, e: Elem) -> Self {
        self.consts.push((name.to_string(), e));
        self
    }

    pub fn names(mut self, names: Vec<String>) -> Self {
        self.names = Some(names);
        self
    }

    pub fn build(self) -> Result<BijStructure> {
        let n = self.size;
        let mut sig = Signature::unary_functional();
        let mut tables = Vec::with_capacity(2 * self.funcs.len());
        for (name, fwd) in self.funcs {
            sig.add_function(&name)?;
            if fwd.len() != n {
                return Err(Error::structure(
                    0,
                    format!("perm {name} has {} images for domain {n}", fwd.len()),
                ));
            }
            let mut inv = vec![Elem::MAX; n];
            for (a, &b) in fwd.iter().enumerate() {
                if b as usize >= n {
                    return Err(Error::structure(
                        0,
                        format!("perm {name}: image {b} out of range"),
                    ));
                }
                if inv[b as usize] != Elem::MAX {
                    return Err(Error::structure(
                        0,
                        format!("perm {name} is not a permutation: {b} has two preimages"),
                    ));
                }
                inv[b as usize] = a as Elem;
            }
            tables.push(fwd);
            tables.push(inv);
        }
        let mut preds = Vec::new();
        let mut pred_members = Vec::new();
        for (name, members) in self.preds {
            sig.add_predicate(&name)?;
            let mut bits = vec![false; n];
            for &m in &members {
                if m as usize >= n {
                    return Err(Error::structure(
                        0,
                        format!("pred {name}: element {m} out of range"),
                    ));
                }
                bits[m as usize] = true;
            }
            let list: Vec<Elem> = (0..n as Elem).filter(|&e| bits[e as usize]).collect();
            preds.push(bits);
            pred_members.push(list);
        }
        let mut consts = Vec::new();
        for (name, e) in self.consts {
            sig.add_constant(&name)?;
            if e as usize >= n {
                return Err(Error::structure(
                    0,
                    format!("const {name}: element {e} out of range"),
                ));
            }
            consts.push(e);
        }
        if let Some(names) = &self.names {
            if names.len() != n {
                return Err(Error::structure(0, "element name table has wrong length"));
            }
        }
        Ok(BijStructure {
            sig,
            size: n,
            tables,
            preds,
            pred_members,
            consts,
            names: self.names,
            card_memo: Mutex::new(HashMap::new()),
            card_scans: AtomicU64::new(0),
        })
    }
}

impl BijStructure {
    pub fn builder(size: usize) -> BijBuilder {
        BijBuilder {
            size,
            funcs: Vec::new(),
            preds: Vec::new(),
            consts: Vec::new(),
            names: None,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn func_index(&self, name: &str) -> Option<usize> {
        self.sig.functions().iter().position(|f| f == name)
    }

    pub fn pred_index(&self, name: &str) -> Option<usize> {
        self.sig.predicates().iter().position(|p| p == name)
    }

    pub fn const_value(&self, name: &str) -> Option<Elem> {
        let i = self.sig.constants().iter().position(|c| c == name)?;
        Some(self.consts[i])
    }

    pub fn forward(&self, f: usize) -> &[Elem] {
        &self.tables[2 * f]
    }

    pub fn inverse(&self, f: usize) -> &[Elem] {
        &self.tables[2 * f + 1]
    }

    pub fn holds(&self, pred: usize, e: Elem) -> bool {
        self.preds[pred][e as usize]
    }

    pub fn members(&self, pred: usize) -> &[Elem] {
        &self.pred_members[pred]
    }

    pub fn element_name(&self, e: Elem) -> String {
        match &self.names {
            Some(n) => n[e as usize].clone(),
            None => e.to_string(),
        }
    }

    /// Number of domain scans performed for cardinality atoms so far.
    pub fn card_scans(&self) -> u64 {
        self.card_scans.load(Ordering::Relaxed)
    }

    /// Write the structure in the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "domain {}", self.size);
        for (i, c) in self.sig.constants().iter().enumerate() {
            let _ = writeln!(out, "const {c} {}", self.consts[i]);
        }
        for (i, p) in self.sig.predicates().iter().enumerate() {
            let _ = write!(out, "pred {p}");
            for m in &self.pred_members[i] {
                let _ = write!(out, " {m}");
            }
            out.push('\n');
        }
        for (i, f) in self.sig.functions().iter().enumerate() {
            let _ = write!(out, "perm {f}");
            for m in self.forward(i) {
                let _ = write!(out, " {m}");
            }
            out.push('\n');
        }
        out
    }
}

fn parse_elem(tok: &str, n: usize, line: usize) -> Result<Elem> {
    let e: usize = tok
        .parse()
        .map_err(|_| Error::structure(line, format!("expected element, found `{tok}`")))?;
    if e >= n {
        return Err(Error::structure(
            line,
            format!("element {e} out of range for domain {n}"),
        ));
    }
    Ok(e as Elem)
}

/// Parse the line-oriented structure format:
///
/// ```text
/// format 1          (optional)
/// domain <n>
/// const <name> <elem>
/// pred <name> <elem>*
/// perm <name> <img_0> ... <img_{n-1}>
/// ```
///
/// `#` starts a comment.
pub fn load_structure(text: &str) -> Result<BijStructure> {
    let mut size: Option<usize> = None;
    let mut b: Option<BijBuilder> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        let Some((&kw, args)) = toks.split_first() else {
            continue;
        };
        if kw == "format" {
            if args != ["1"] {
                return Err(Error::structure(line, "unsupported format version"));
            }
            continue;
        }
        if kw == "domain" {
            if size.is_some() {
                return Err(Error::structure(line, "duplicate `domain` line"));
            }
            let n: usize = match args {
                [n] => n
                    .parse()
                    .map_err(|_| Error::structure(line, format!("bad domain size `{n}`")))?,
                _ => return Err(Error::structure(line, "expected `domain <n>`")),
            };
            if n > Elem::MAX as usize - 1 {
                return Err(Error::structure(line, "domain too large"));
            }
            size = Some(n);
            b = Some(BijStructure::builder(n));
            continue;
        }
        let (Some(n), Some(builder)) = (size, b.take()) else {
            return Err(Error::structure(line, "`domain` must come first"));
        };
        let declared = |name: &str, builder: &BijBuilder| {
            builder.funcs.iter().any(|(f, _)| f == name)
                || builder.preds.iter().any(|(p, _)| p == name)
                || builder.consts.iter().any(|(c, _)| c == name)
        };
        let next = match (kw, args) {
            ("const", [name, e]) => {
                if declared(name, &builder) {
                    return Err(Error::structure(line, format!("`{name}` declared twice")));
                }
                let e = parse_elem(e, n, line)?;
                builder.constant(name, e)
            }
            ("pred", [name, rest @ ..]) => {
                if declared(name, &builder) {
                    return Err(Error::structure(line, format!("`{name}` declared twice")));
                }
                let ms = rest
                    .iter()
                    .map(|t| parse_elem(t, n, line))
                    .collect::<Result<Vec<_>>>()?;
                builder.pred(name, ms)
            }
            ("perm", [name, rest @ ..]) => {
                if declared(name, &builder) {
                    return Err(Error::structure(line, format!("`{name}` declared twice")));
                }
                if rest.len() != n {
                    return Err(Error::structure(
                        line,
                        format!("perm {name} lists {} images, expected {n}", rest.len()),
                    ));
                }
                let imgs = rest
                    .iter()
                    .map(|t| parse_elem(t, n, line))
                    .collect::<Result<Vec<_>>>()?;
                let mut seen = vec![false; n];
                for &i in &imgs {
                    if std::mem::replace(&mut seen[i as usize], true) {
                        return Err(Error::structure(
                            line,
                            format!("perm {name} is not a permutation: {i} appears twice"),
                        ));
                    }
                }
                builder.perm(name, imgs)
            }
            _ => {
                return Err(Error::structure(
                    line,
                    format!("unrecognized line `{}`", content.trim()),
                ))
            }
        };
        b = Some(next);
    }
    match b {
        Some(builder) => builder.build(),
        None => Err(Error::structure(0, "missing `domain` line")),
    }
}

/// Load a structure and check that it interprets exactly the symbols of `sig`.
pub fn load_structure_with(text: &str, sig: &Signature) -> Result<BijStructure> {
    let s = load_structure(text)?;
    for f in s.sig.functions() {
        if !sig.is_function(f) {
            return Err(Error::UndeclaredSymbol(f.clone()));
        }
    }
    for p in s.sig.predicates() {
        if !sig.is_predicate(p) {
            return Err(Error::UndeclaredSymbol(p.clone()));
        }
    }
    for c in s.sig.constants() {
        if !sig.is_constant(c) {
            return Err(Error::UndeclaredSymbol(c.clone()));
        }
    }
    Ok(s)
}

/// Evaluate a bijective term by following forward/inverse tables.
pub fn eval_term(s: &BijStructure, asg: &Assignment, t: &Term) -> Result<Elem> {
    let mut e = match &t.base {
        Base::Var(v) => asg
            .get(v)
            .ok_or_else(|| Error::UnboundVariable(v.clone()))?,
        Base::Const(c) => s
            .const_value(c)
            .ok_or_else(|| Error::UndeclaredSymbol(c.clone()))?,
        Base::Elem(e) => {
            if *e as usize >= s.size {
                return Err(Error::Formula(format!("domain constant @{e} out of range")));
            }
            *e
        }
    };
    for step in &t.steps {
        let f = s
            .func_index(&step.func)
            .ok_or_else(|| Error::UndeclaredSymbol(step.func.clone()))?;
        e = match step.sign {
            Sign::Forward => s.forward(f)[e as usize],
            Sign::Inverse => s.inverse(f)[e as usize],
        };
    }
    Ok(e)
}

/// Evaluate a quantifier-free formula under an assignment. Cardinality atoms
/// are answered through the memoized counter.
pub fn eval_qf(s: &BijStructure, asg: &Assignment, phi: &Formula) -> Result<bool> {
    Ok(match phi {
        Formula::Atom(a) => match a {
            Atom::Eq(l, r) => eval_term(s, asg, l)? == eval_term(s, asg, r)?,
            Atom::Pred(p, t) => {
                let i = s
                    .pred_index(p)
                    .ok_or_else(|| Error::UndeclaredSymbol(p.clone()))?;
                s.holds(i, eval_term(s, asg, t)?)
            }
            Atom::Card { k, var, body } => count_satisfying(s, var, body)? >= *k,
            Atom::True => true,
            Atom::False => false,
            Atom::Rel(..) => {
                return Err(Error::Unsupported(
                    "relational atom over a bijective structure".into(),
                ))
            }
        },
        Formula::Not(f) => !eval_qf(s, asg, f)?,
        Formula::And(fs) => {
            for f in fs {
                if !eval_qf(s, asg, f)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(fs) => {
            for f in fs {
                if eval_qf(s, asg, f)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Exists(..) | Formula::Forall(..) => {
            return Err(Error::Formula("expected a quantifier-free formula".into()))
        }
    })
}

/// Memoization key of a one-variable body: the body printed with its
/// variable renamed to a fixed name.
pub fn card_key(var: &str, body: &Formula) -> String {
    match substitute(body, var, &Term::var(CARD_VAR)) {
        Ok(b) => b.to_string(),
        Err(_) => format!("{var}:{body}"),
    }
}

/// `|{a ∈ D : (S, a) ⊨ body}|`, computed by one domain scan and memoized.
pub fn count_satisfying(s: &BijStructure, var: &str, body: &Formula) -> Result<u64> {
    if let Some(other) = body.free_vars().into_iter().find(|v| v != var) {
        return Err(Error::Formula(format!(
            "cardinality body over `{var}` mentions `{other}`"
        )));
    }
    if !body.is_quantifier_free() {
        return Err(Error::Formula(
            "cardinality body must be quantifier-free".into(),
        ));
    }
    let key = card_key(var, body);
    if let Some(&c) = s.card_memo.lock().unwrap().get(&key) {
        return Ok(c);
    }
    let compiled = Compiled::new(s, body, &[var])?;
    let mut steps = 0u64;
    let mut count = 0u64;
    let mut slot = [0 as Elem];
    for a in 0..s.size as Elem {
        slot[0] = a;
        if compiled.eval(s, &slot, &mut steps) {
            count += 1;
        }
    }
    s.card_scans.fetch_add(1, Ordering::Relaxed);
    // Concurrent callers may race here; they insert the same value.
    s.card_memo.lock().unwrap().entry(key).or_insert(count);
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum CBase {
    Slot(usize),
    Elem(Elem),
}

/// A term resolved against a structure: table indices applied in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct CTerm {
    pub(crate) base: CBase,
    /// `2f` applies `f`, `2f + 1` its inverse.
    pub(crate) tables: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum CNode {
    Eq(CTerm, CTerm),
    Pred(u32, CTerm),
    Const(bool),
    Not(Box<CNode>),
    And(Vec<CNode>),
    Or(Vec<CNode>),
}

/// A quantifier-free formula compiled for fast evaluation over value slots.
///
/// Every atom test costs one step and every table hop one more.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    root: CNode,
}

impl Compiled {
    pub(crate) fn new(s: &BijStructure, f: &Formula, slots: &[&str]) -> Result<Self> {
        Ok(Compiled {
            root: compile_node(s, f, slots)?,
        })
    }

    pub(crate) fn from_node(root: CNode) -> Self {
        Compiled { root }
    }

    #[inline]
    pub(crate) fn eval(&self, s: &BijStructure, vals: &[Elem], steps: &mut u64) -> bool {
        eval_node(&self.root, s, vals, steps)
    }
}

pub(crate) fn compile_term(s: &BijStructure, t: &Term, slots: &[&str]) -> Result<CTerm> {
    let base = match &t.base {
        Base::Var(v) => CBase::Slot(
            slots
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| Error::UnboundVariable(v.clone()))?,
        ),
        Base::Const(c) => CBase::Elem(
            s.const_value(c)
                .ok_or_else(|| Error::UndeclaredSymbol(c.clone()))?,
        ),
        Base::Elem(e) => {
            if *e as usize >= s.size {
                return Err(Error::Formula(format!("domain constant @{e} out of range")));
            }
            CBase::Elem(*e)
        }
    };
    let tables = t
        .steps
        .iter()
        .map(|st| {
            let f = s
                .func_index(&st.func)
                .ok_or_else(|| Error::UndeclaredSymbol(st.func.clone()))?;
            Ok((2 * f + usize::from(st.sign == Sign::Inverse)) as u32)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CTerm { base, tables })
}

pub(crate) fn compile_node(s: &BijStructure, f: &Formula, slots: &[&str]) -> Result<CNode> {
    Ok(match f {
        Formula::Atom(a) => match a {
            Atom::Eq(l, r) => {
                let (l, r) = (compile_term(s, l, slots)?, compile_term(s, r, slots)?);
                match (&l.base, &r.base) {
                    (CBase::Elem(_), CBase::Elem(_)) => {
                        let mut st = 0;
                        CNode::Const(
                            eval_term_c(&l, s, &[], &mut st) == eval_term_c(&r, s, &[], &mut st),
                        )
                    }
                    _ => CNode::Eq(l, r),
                }
            }
            Atom::Pred(p, t) => {
                let i = s
                    .pred_index(p)
                    .ok_or_else(|| Error::UndeclaredSymbol(p.clone()))?;
                let t = compile_term(s, t, slots)?;
                if let CBase::Elem(_) = t.base {
                    let mut st = 0;
                    CNode::Const(s.holds(i, eval_term_c(&t, s, &[], &mut st)))
                } else {
                    CNode::Pred(i as u32, t)
                }
            }
            Atom::Card { k, var, body } => CNode::Const(count_satisfying(s, var, body)? >= *k),
            Atom::True => CNode::Const(true),
            Atom::False => CNode::Const(false),
            Atom::Rel(..) => {
                return Err(Error::Unsupported(
                    "relational atom over a bijective structure".into(),
                ))
            }
        },
        Formula::Not(g) => match compile_node(s, g, slots)? {
            CNode::Const(b) => CNode::Const(!b),
            n => CNode::Not(Box::new(n)),
        },
        Formula::And(gs) | Formula::Or(gs) => {
            let is_and = matches!(f, Formula::And(_));
            let mut parts = Vec::new();
            for g in gs {
                match compile_node(s, g, slots)? {
                    CNode::Const(b) if b == is_and => {}
                    CNode::Const(b) => return Ok(CNode::Const(b)),
                    n => parts.push(n),
                }
            }
            // cheap tests first
            parts.sort_by_key(node_cost);
            match (parts.len(), is_and) {
                (0, b) => CNode::Const(b),
                (1, _) => parts.pop().unwrap(),
                (_, true) => CNode::And(parts),
                (_, false) => CNode::Or(parts),
            }
        }
        Formula::Exists(..) | Formula::Forall(..) => {
            return Err(Error::Formula("expected a quantifier-free formula".into()))
        }
    })
}

pub(crate) fn node_cost(n: &CNode) -> usize {
    match n {
        CNode::Eq(a, b) => 1 + a.tables.len() + b.tables.len(),
        CNode::Pred(_, t) => 1 + t.tables.len(),
        CNode::Const(_) => 0,
        CNode::Not(m) => node_cost(m),
        CNode::And(ms) | CNode::Or(ms) => 1 + ms.iter().map(node_cost).sum::<usize>(),
    }
}

#[inline]
pub(crate) fn eval_term_c(t: &CTerm, s: &BijStructure, vals: &[Elem], steps: &mut u64) -> Elem {
    let mut e = match t.base {
        CBase::Slot(i) => vals[i],
        CBase::Elem(e) => e,
    };
    for &tb in &t.tables {
        e = s.tables[tb as usize][e as usize];
    }
    *steps += t.tables.len() as u64;
    e
}

fn eval_node(n: &CNode, s: &BijStructure, vals: &[Elem], steps: &mut u64) -> bool {
    match n {
        CNode::Eq(l, r) => {
            *steps += 1;
            eval_term_c(l, s, vals, steps) == eval_term_c(r, s, vals, steps)
        }
        CNode::Pred(p, t) => {
            *steps += 1;
            s.preds[*p as usize][eval_term_c(t, s, vals, steps) as usize]
        }
        CNode::Const(b) => *b,
        CNode::Not(m) => !eval_node(m, s, vals, steps),
        CNode::And(ms) => ms.iter().all(|m| eval_node(m, s, vals, steps)),
        CNode::Or(ms) => ms.iter().any(|m| eval_node(m, s, vals, steps)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Step};

    fn cycle() -> BijStructure {
        load_structure("domain 3\nperm f 1 2 0\n").unwrap()
    }

    #[test]
    fn load_computes_inverse() {
        let s = cycle();
        assert_eq!(s.inverse(0), &[2, 0, 1]);
    }

    #[test]
    fn load_rejects_non_permutation() {
        let err = load_structure("domain 3\nperm f 0 0 2\n").unwrap_err();
        assert!(err.to_string().contains("not a permutation"), "{err}");
        assert!(matches!(err, Error::Structure { line: 2, .. }));
        assert!(load_structure("domain 3\nperm f 0 1 3\n").is_err());
        assert!(load_structure("domain 3\nconst c 3\n").is_err());
        assert!(load_structure("perm f 0\n").is_err());
    }

    #[test]
    fn load_empty_structure() {
        let s = load_structure("# nothing\nformat 1\ndomain 0\n").unwrap();
        assert_eq!(s.size(), 0);
    }

    #[test]
    fn load_with_checks_signature() {
        let sig = Signature::bijective(&["g"], &[], &[]).unwrap();
        assert_eq!(
            load_structure_with("domain 3\nperm f 1 2 0\n", &sig).unwrap_err(),
            Error::UndeclaredSymbol("f".into())
        );
    }

    #[test]
    fn term_evaluation() {
        let s = cycle();
        let x0 = Assignment::from_pairs([("x", 0)]);
        let fx = Term::var("x").apply(Step::forward("f"));
        assert_eq!(eval_term(&s, &x0, &fx).unwrap(), 1);
        let finv = Term::var("x").apply(Step::inverse("f"));
        assert_eq!(
            eval_term(&s, &Assignment::from_pairs([("x", 1)]), &finv).unwrap(),
            0
        );
        let round = Term::var("x")
            .apply(Step::forward("f"))
            .apply(Step::inverse("f"));
        assert_eq!(
            eval_term(&s, &Assignment::from_pairs([("x", 2)]), &round).unwrap(),
            2
        );
        assert_eq!(
            eval_term(&s, &Assignment::new(), &fx),
            Err(Error::UnboundVariable("x".into()))
        );
    }

    #[test]
    fn qf_evaluation() {
        let s = load_structure("domain 3\nperm f 1 2 0\npred U 0 1\n").unwrap();
        let sig = s.signature().clone();
        let q = parse_formula("f(x) = y", &sig).unwrap();
        let asg = Assignment::from_pairs([("x", 0), ("y", 1)]);
        assert!(eval_qf(&s, &asg, &q.formula).unwrap());
        let q = parse_formula("x != x", &sig).unwrap();
        assert!(!eval_qf(&s, &asg, &q.formula).unwrap());
        let q = parse_formula("#>= 2 x. U(x)", &sig).unwrap();
        assert!(eval_qf(&s, &Assignment::new(), &q.formula).unwrap());
    }

    #[test]
    fn counting_and_memo() {
        let s = load_structure("domain 3\nperm f 1 2 0\npred U 0 1\n").unwrap();
        assert_eq!(count_satisfying(&s, "x", &Formula::t()).unwrap(), 3);
        let u = Formula::pred("U", Term::var("x"));
        assert_eq!(count_satisfying(&s, "x", &u).unwrap(), 2);
        let fixed = Formula::eq(Term::var("x").apply(Step::forward("f")), Term::var("x"));
        assert_eq!(count_satisfying(&s, "x", &fixed).unwrap(), 0);
        let scans = s.card_scans();
        // same body under another variable name hits the memo
        assert_eq!(
            count_satisfying(&s, "z", &Formula::pred("U", Term::var("z"))).unwrap(),
            2
        );
        assert_eq!(s.card_scans(), scans);
        assert!(count_satisfying(&s, "x", &Formula::eq(Term::var("x"), Term::var("y"))).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = load_structure("domain 3\nconst c 2\npred U 0 1\nperm f 1 2 0\n").unwrap();
        let t = load_structure(&s.to_text()).unwrap();
        assert_eq!(t.to_text(), s.to_text());
    }
}
