//! Seeded instance generators. Permutations come from shuffles, so every
//! generated table is a bijection.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{Formula, Query, Step, Term};
use crate::reduction::RelStructure;
use crate::structure::{BijStructure, Elem};
use crate::subgraph::Graph;

const VARS: [&str; 3] = ["x", "y", "z"];
const FUNCS: [&str; 2] = ["f", "g"];
const PREDS: [&str; 2] = ["U", "V"];

/// Size and shape bounds for random bijective instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Profile {
    pub max_size: usize,
    /// Distinct variable names, at most 3.
    pub vars: usize,
    pub depth: usize,
    /// Functions, at most 2.
    pub functions: usize,
    /// Monadic predicates, at most 2.
    pub predicates: usize,
    /// Longest chain of function steps in a term.
    pub max_steps: usize,
    pub card_atoms: bool,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            max_size: 6,
            vars: 3,
            depth: 2,
            functions: 2,
            predicates: 2,
            max_steps: 2,
            card_atoms: true,
        }
    }
}

#[derive(Debug)]
pub struct Instance {
    pub query: Query,
    pub structure: BijStructure,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<Elem> {
    let mut p: Vec<Elem> = (0..n as Elem).collect();
    p.shuffle(rng);
    p
}

pub fn random_structure(rng: &mut impl Rng, n: usize, p: &Profile) -> BijStructure {
    let mut b = BijStructure::builder(n);
    for f in &FUNCS[..p.functions.min(2)] {
        b = b.perm(f, random_permutation(rng, n));
    }
    for u in &PREDS[..p.predicates.min(2)] {
        let members = (0..n as Elem).filter(|_| rng.gen_bool(0.5)).collect();
        b = b.pred(u, members);
    }
    b.build().expect("shuffled tables are permutations")
}

struct FormulaGen<'a, R> {
    rng: &'a mut R,
    p: &'a Profile,
}

impl<R: Rng> FormulaGen<'_, R> {
    fn var(&mut self) -> &'static str {
        VARS[self.rng.gen_range(0..self.p.vars.clamp(1, 3))]
    }

    fn term(&mut self, var: &str) -> Term {
        let mut t = Term::var(var);
        if self.p.functions == 0 {
            return t;
        }
        for _ in 0..self.rng.gen_range(0..=self.p.max_steps) {
            let f = FUNCS[self.rng.gen_range(0..self.p.functions.min(2))];
            t = t.apply(if self.rng.gen_bool(0.5) {
                Step::forward(f)
            } else {
                Step::inverse(f)
            });
        }
        t
    }

    fn atom_over(&mut self, a: &str, b: &str) -> Formula {
        if self.p.predicates > 0 && self.rng.gen_bool(0.35) {
            let u = PREDS[self.rng.gen_range(0..self.p.predicates.min(2))];
            let t = self.term(a);
            Formula::pred(u, t)
        } else {
            let (s, t) = (self.term(a), self.term(b));
            Formula::eq(s, t)
        }
    }

    fn atom(&mut self) -> Formula {
        if self.p.card_atoms && self.rng.gen_bool(0.08) {
            let v = self.var();
            let body = self.qf_over(v, 1);
            return Formula::card(self.rng.gen_range(1..=3), v, body);
        }
        let (a, b) = (self.var(), self.var());
        self.atom_over(a, b)
    }

    /// A quantifier-free formula mentioning only `v`.
    fn qf_over(&mut self, v: &str, depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.5) {
            return self.atom_over(v, v);
        }
        let (l, r) = (self.qf_over(v, depth - 1), self.qf_over(v, depth - 1));
        match self.rng.gen_range(0..3) {
            0 => Formula::not(l),
            1 => Formula::and([l, r]),
            _ => Formula::or([l, r]),
        }
    }

    fn formula(&mut self, qdepth: usize, size: usize) -> Formula {
        if size == 0 {
            return self.atom();
        }
        match self.rng.gen_range(0..10) {
            0..=2 => self.atom(),
            3 => Formula::not(self.formula(qdepth, size - 1)),
            4 | 5 => {
                let (l, r) = (
                    self.formula(qdepth, size - 1),
                    self.formula(qdepth, size - 1),
                );
                Formula::and([l, r])
            }
            6 | 7 => {
                let (l, r) = (
                    self.formula(qdepth, size - 1),
                    self.formula(qdepth, size - 1),
                );
                Formula::or([l, r])
            }
            _ if qdepth > 0 => {
                let v = self.var();
                let body = self.formula(qdepth - 1, size - 1);
                if self.rng.gen_bool(0.6) {
                    Formula::exists(v, body)
                } else {
                    Formula::forall(v, body)
                }
            }
            _ => self.atom(),
        }
    }
}

/// A random formula and structure; the same seed gives the same instance.
pub fn random_instance(seed: u64, profile: &Profile) -> Instance {
    let mut r = rng(seed);
    let n = if r.gen_ratio(1, 25) {
        0
    } else {
        r.gen_range(1..=profile.max_size.max(1))
    };
    let structure = random_structure(&mut r, n, profile);
    let formula = FormulaGen {
        rng: &mut r,
        p: profile,
    }
    .formula(profile.depth, 4);
    Instance {
        query: Query::new(formula),
        structure,
    }
}

/// A random closed formula: the generated body under quantifiers binding
/// its free variables.
pub fn random_closed(seed: u64, profile: &Profile) -> Instance {
    let mut inst = random_instance(seed, profile);
    let mut f = inst.query.formula.clone();
    let mut r = rng(seed ^ 0x5eed);
    for v in inst.query.free.iter().rev() {
        f = if r.gen_bool(0.6) {
            Formula::exists(v.clone(), f)
        } else {
            Formula::forall(v.clone(), f)
        };
    }
    inst.query = Query::new(f);
    inst
}

/// A closed existential formula `∃ȳ matrix` with a quantifier-free matrix
/// in disjunctive form over up to `vars` variables.
pub fn random_sigma1(seed: u64, profile: &Profile) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(1..=profile.max_size.max(1));
    let structure = random_structure(&mut r, n, profile);
    let k = r.gen_range(1..=profile.vars.clamp(1, 3));
    let mut g = FormulaGen {
        rng: &mut r,
        p: &Profile {
            vars: k,
            card_atoms: false,
            ..*profile
        },
    };
    let disjuncts = g.rng.gen_range(1..=3);
    let matrix = Formula::or((0..disjuncts).map(|_| {
        let lits = g.rng.gen_range(1..=3);
        Formula::and((0..lits).map(|_| {
            let a = g.atom();
            if g.rng.gen_bool(0.4) {
                Formula::not(a)
            } else {
                a
            }
        }))
    }));
    let mut f = matrix;
    for v in VARS[..k].iter().rev() {
        f = Formula::exists(*v, f);
    }
    Instance {
        query: Query::new(f),
        structure,
    }
}

#[derive(Debug)]
pub struct RelInstance {
    pub query: Query,
    pub structure: RelStructure,
}

/// A relational structure with a binary `E` and a unary `U`.
pub fn random_rel_structure(rng: &mut impl Rng, n: usize, max_tuples: usize) -> RelStructure {
    let mut s = RelStructure::new(n);
    let mut e = Vec::new();
    let mut u = Vec::new();
    if n > 0 {
        for _ in 0..rng.gen_range(0..=max_tuples) {
            let t = vec![rng.gen_range(0..n) as Elem, rng.gen_range(0..n) as Elem];
            if !e.contains(&t) {
                e.push(t);
            }
        }
        for x in 0..n as Elem {
            if rng.gen_bool(0.4) {
                u.push(vec![x]);
            }
        }
    }
    s.add_relation("E", 2, &e).expect("fresh relation");
    s.add_relation("U", 1, &u).expect("fresh relation");
    s
}

fn rel_formula(rng: &mut impl Rng, qdepth: usize, size: usize) -> Formula {
    let var = |rng: &mut dyn rand::RngCore| VARS[rng.gen_range(0..2)];
    let atom = |rng: &mut dyn rand::RngCore| {
        let (a, b) = (var(rng), var(rng));
        match rng.gen_range(0..5) {
            0 | 1 => Formula::rel("E", &[a, b]),
            2 | 3 => Formula::rel("U", &[a]),
            _ => Formula::eq(Term::var(a), Term::var(b)),
        }
    };
    if size == 0 {
        return atom(rng);
    }
    match rng.gen_range(0..10) {
        0..=2 => atom(rng),
        3 => Formula::not(rel_formula(rng, qdepth, size - 1)),
        4 | 5 => Formula::and([
            rel_formula(rng, qdepth, size - 1),
            rel_formula(rng, qdepth, size - 1),
        ]),
        6 | 7 => Formula::or([
            rel_formula(rng, qdepth, size - 1),
            rel_formula(rng, qdepth, size - 1),
        ]),
        _ if qdepth > 0 => {
            let v = var(rng);
            let body = rel_formula(rng, qdepth - 1, size - 1);
            if rng.gen_bool(0.6) {
                Formula::exists(v, body)
            } else {
                Formula::forall(v, body)
            }
        }
        _ => atom(rng),
    }
}

/// A random relational instance: `n ≤ max_size`, up to 6 `E` tuples and a
/// formula over `x` and `y`.
pub fn random_rel_instance(seed: u64, max_size: usize) -> RelInstance {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_size.max(1));
    let structure = random_rel_structure(&mut r, n, 6);
    let formula = rel_formula(&mut r, 2, 3);
    RelInstance {
        query: Query::new(formula),
        structure,
    }
}

/// A random simple graph with edge probability `p`.
pub fn random_graph(seed: u64, n: usize, p: f64, directed: bool) -> Graph {
    let mut r = rng(seed);
    let mut g = Graph::new(n, directed);
    for u in 0..n as Elem {
        for v in 0..n as Elem {
            if u == v || (!directed && v < u) {
                continue;
            }
            if r.gen_bool(p) {
                g.add_edge(u, v).expect("vertices in range");
            }
        }
    }
    g
}

/// A structure of size `n` with one random permutation `f` and a predicate
/// `U` holding on every sixteenth element.
pub fn sparse_unary_workload(seed: u64, n: usize) -> BijStructure {
    let mut r = rng(seed);
    let members = (0..n as Elem).filter(|e| e % 16 == 0).collect();
    BijStructure::builder(n)
        .perm("f", random_permutation(&mut r, n))
        .pred("U", members)
        .build()
        .expect("shuffled tables are permutations")
}

/// A 3-regular undirected graph on `n` vertices (`n` a multiple of 8, at
/// least 16): half the vertices form disjoint `K4` blocks, the other half a
/// cycle plus a random perfect matching.
pub fn planted_k4_host(seed: u64, n: usize) -> Graph {
    assert!(
        n >= 16 && n.is_multiple_of(8),
        "host size must be a multiple of 8, at least 16"
    );
    let mut r = rng(seed);
    let mut g = Graph::new(n, false);
    let half = n / 2;
    for b in (0..half).step_by(4) {
        for i in b..b + 4 {
            for j in i + 1..b + 4 {
                g.add_edge(i as Elem, j as Elem).expect("in range");
            }
        }
    }
    let ring: Vec<Elem> = (half..n).map(|v| v as Elem).collect();
    let m = ring.len();
    for i in 0..m {
        g.add_edge(ring[i], ring[(i + 1) % m]).expect("in range");
    }
    let adjacent = |a: usize, b: usize| (a + 1) % m == b || (b + 1) % m == a;
    let mut order: Vec<usize> = (0..m).collect();
    let matching = (0..200).find_map(|_| {
        order.shuffle(&mut r);
        let pairs: Vec<(usize, usize)> = order.chunks(2).map(|c| (c[0], c[1])).collect();
        pairs.iter().all(|&(a, b)| !adjacent(a, b)).then_some(pairs)
    });
    let pairs = matching.unwrap_or_else(|| (0..m / 2).map(|i| (i, i + m / 2)).collect());
    for (a, b) in pairs {
        g.add_edge(ring[a], ring[b]).expect("in range");
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let p = Profile::default();
        for seed in 0..20 {
            let a = random_instance(seed, &p);
            let b = random_instance(seed, &p);
            assert_eq!(a.query, b.query);
            assert_eq!(a.structure.to_text(), b.structure.to_text());
        }
        assert_eq!(
            planted_k4_host(3, 64).edges(),
            planted_k4_host(3, 64).edges()
        );
    }

    #[test]
    fn tables_are_permutations() {
        let p = Profile::default();
        for seed in 0..50 {
            let s = random_instance(seed, &p).structure;
            for f in 0..2 {
                let mut seen = vec![false; s.size()];
                for &e in s.forward(f) {
                    assert!(!std::mem::replace(&mut seen[e as usize], true));
                }
            }
        }
    }

    #[test]
    fn shapes() {
        let p = Profile::default();
        for seed in 0..50 {
            let q = random_instance(seed, &p).query;
            assert!(q.formula.quantifier_depth() <= 2);
            assert!(q.free.len() <= 3);
            assert!(random_closed(seed, &p).query.free.is_empty());
            let s1 = random_sigma1(seed, &p).query;
            assert!(s1.free.is_empty());
            let r = random_rel_instance(seed, 5);
            assert!(r.query.free.len() <= 2);
            assert!(r.structure.relation("E").unwrap().len() <= 6);
        }
    }

    #[test]
    fn planted_host_is_cubic() {
        for n in [16, 64, 256] {
            let g = planted_k4_host(7, n);
            assert!((0..n as Elem).all(|v| g.graph_degree(v) == 3), "n = {n}");
        }
    }
}
