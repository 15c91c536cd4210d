//! Subgraph and induced-subgraph embeddings of a pattern into a host graph
//! of bounded degree, enumerated through the reduction.

use std::collections::HashSet;

use crate::enumeration::Enumerator;
use crate::error::{Error, Result};
use crate::formula::{Formula, Query, Term};
use crate::reduction::{FoDeg, RelStructure};
use crate::structure::Elem;

/// Name of the edge relation in the structure built from a graph.
pub const EDGE_REL: &str = "E";

pub fn degree_rel(alpha: usize) -> String {
    format!("V{alpha}")
}

/// A graph. Undirected graphs store both orientations of every edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: Vec<(Elem, Elem)>,
    adj: HashSet<(Elem, Elem)>,
}

impl Graph {
    pub fn new(n: usize, directed: bool) -> Self {
        Graph {
            n,
            directed,
            edges: Vec::new(),
            adj: HashSet::new(),
        }
    }

    pub fn from_edges(n: usize, directed: bool, edges: &[(Elem, Elem)]) -> Result<Self> {
        let mut g = Graph::new(n, directed);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: Elem, v: Elem) -> Result<()> {
        if u as usize >= self.n || v as usize >= self.n {
            return Err(Error::structure(0, format!("edge {u} {v} out of range")));
        }
        if self.adj.insert((u, v)) {
            self.edges.push((u, v));
        }
        if !self.directed && self.adj.insert((v, u)) {
            self.edges.push((v, u));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Stored directed edges.
    pub fn edges(&self) -> &[(Elem, Elem)] {
        &self.edges
    }

    pub fn has_edge(&self, u: Elem, v: Elem) -> bool {
        self.adj.contains(&(u, v))
    }

    /// Number of distinct neighbours, in either direction, other than `v`.
    pub fn graph_degree(&self, v: Elem) -> usize {
        self.neighbour_counts()[v as usize]
    }

    fn neighbour_counts(&self) -> Vec<usize> {
        let mut nb: Vec<Vec<Elem>> = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            if u != v {
                nb[u as usize].push(v);
                nb[v as usize].push(u);
            }
        }
        nb.iter_mut()
            .map(|l| {
                l.sort_unstable();
                l.dedup();
                l.len()
            })
            .collect()
    }

    /// The graph as a structure with one binary relation, plus unary degree
    /// classes `V0..Vd` when a partition is given.
    pub fn to_rel_structure(&self, partition: Option<&DegreePartition>) -> Result<RelStructure> {
        let mut s = RelStructure::new(self.n);
        let tuples: Vec<Vec<Elem>> = self.edges.iter().map(|&(u, v)| vec![u, v]).collect();
        s.add_relation(EDGE_REL, 2, &tuples)?;
        if let Some(p) = partition {
            for (alpha, class) in p.classes.iter().enumerate() {
                let ts: Vec<Vec<Elem>> = class.iter().map(|&v| vec![v]).collect();
                s.add_relation(&degree_rel(alpha), 1, &ts)?;
            }
        }
        Ok(s)
    }
}

/// Parse `graph <n> directed|undirected` followed by one `u v` per line.
pub fn load_graph(text: &str) -> Result<Graph> {
    let mut g: Option<Graph> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        match (toks.as_slice(), &mut g) {
            ([], _) => {}
            (["format", "1"], None) => {}
            (["graph", n, kind], None) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::structure(line, format!("bad vertex count `{n}`")))?;
                let directed = match *kind {
                    "directed" => true,
                    "undirected" => false,
                    other => {
                        return Err(Error::structure(
                            line,
                            format!("expected `directed` or `undirected`, found `{other}`"),
                        ))
                    }
                };
                g = Some(Graph::new(n, directed));
            }
            ([u, v], Some(graph)) => {
                let parse = |t: &str| {
                    t.parse::<Elem>()
                        .map_err(|_| Error::structure(line, format!("bad vertex `{t}`")))
                };
                let (u, v) = (parse(u)?, parse(v)?);
                graph
                    .add_edge(u, v)
                    .map_err(|_| Error::structure(line, format!("edge {u} {v} out of range")))?;
            }
            (_, None) => return Err(Error::structure(line, "expected `graph <n> <kind>` header")),
            (_, Some(_)) => {
                return Err(Error::structure(
                    line,
                    format!("expected `u v`, found `{}`", content.trim()),
                ))
            }
        }
    }
    g.ok_or_else(|| Error::structure(0, "missing `graph` header"))
}

/// Host vertices grouped by graph degree `0..=d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreePartition {
    pub classes: Vec<Vec<Elem>>,
}

impl DegreePartition {
    pub fn max_degree(&self) -> usize {
        self.classes.len() - 1
    }
}

pub fn degree_partition(g: &Graph) -> DegreePartition {
    let counts = g.neighbour_counts();
    let d = counts.iter().copied().max().unwrap_or(0);
    let mut classes = vec![Vec::new(); d + 1];
    for (v, &c) in counts.iter().enumerate() {
        classes[c].push(v as Elem);
    }
    DegreePartition { classes }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmbeddingOptions {
    /// Require non-edges of the pattern to map to non-edges.
    pub induced: bool,
    /// Require every image vertex to have the degree of its pattern vertex.
    pub degree_constrained: bool,
}

pub fn pattern_var(i: usize) -> String {
    format!("x{}", i + 1)
}

/// The embedding formula over variables `x1..xk`. `host_degree` is the
/// largest host degree; it is consulted only in the degree-constrained mode,
/// where a pattern vertex of larger degree makes the formula `false`.
pub fn build_embedding_formula(
    h: &Graph,
    opts: EmbeddingOptions,
    host_degree: usize,
) -> Result<Query> {
    let k = h.vertex_count();
    if k == 0 {
        return Err(Error::Unsupported("empty pattern".into()));
    }
    let vars: Vec<String> = (0..k).map(pattern_var).collect();
    let mut parts = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            parts.push(Formula::neq(Term::var(&vars[i]), Term::var(&vars[j])));
        }
    }
    for &(u, v) in h.edges() {
        parts.push(Formula::rel(
            EDGE_REL,
            &[&vars[u as usize], &vars[v as usize]],
        ));
    }
    if opts.induced {
        for i in 0..k {
            for j in 0..k {
                if i != j && !h.has_edge(i as Elem, j as Elem) {
                    parts.push(Formula::not(Formula::rel(EDGE_REL, &[&vars[i], &vars[j]])));
                }
            }
        }
    }
    if opts.degree_constrained {
        for (i, x) in vars.iter().enumerate() {
            let alpha = h.graph_degree(i as Elem);
            if alpha > host_degree {
                parts.push(Formula::f());
            } else {
                parts.push(Formula::rel(degree_rel(alpha), &[x]));
            }
        }
    }
    Ok(Query::with_free(Formula::and(parts), vars))
}

/// A pattern query over a host, prepared for enumeration.
#[derive(Debug)]
pub struct EmbeddingPlan {
    pub prepared: FoDeg,
    pub automorphisms: Vec<Vec<usize>>,
}

impl EmbeddingPlan {
    pub fn new(h: &Graph, g: &Graph, opts: EmbeddingOptions) -> Result<Self> {
        if h.is_directed() != g.is_directed() {
            return Err(Error::Unsupported(
                "pattern and host must both be directed or both undirected".into(),
            ));
        }
        let partition = degree_partition(g);
        let host = g.to_rel_structure(opts.degree_constrained.then_some(&partition))?;
        let q = build_embedding_formula(h, opts, partition.max_degree())?;
        Ok(EmbeddingPlan {
            prepared: FoDeg::new(&q, &host)?,
            automorphisms: automorphisms(h),
        })
    }

    /// Ordered embeddings, one tuple of host vertices per pattern vertex order.
    pub fn enumerator(&self) -> Result<Enumerator<'_>> {
        self.prepared.enumerator()
    }

    /// Only the lexicographically least embedding of each orbit under the
    /// pattern's automorphisms.
    pub fn canonical(&self) -> Result<CanonicalFilter<'_>> {
        Ok(CanonicalFilter {
            inner: self.enumerator()?,
            autos: &self.automorphisms,
        })
    }
}

/// All automorphisms of a graph, each as the image list of `0..k`.
pub fn automorphisms(h: &Graph) -> Vec<Vec<usize>> {
    let k = h.vertex_count();
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut used = vec![false; k];
    fn rec(
        h: &Graph,
        i: usize,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let k = perm.len();
        if i == k {
            out.push(perm.clone());
            return;
        }
        for c in 0..k {
            if used[c] {
                continue;
            }
            perm[i] = c;
            let ok = (0..=i).all(|j| {
                h.has_edge(i as Elem, j as Elem) == h.has_edge(c as Elem, perm[j] as Elem)
                    && h.has_edge(j as Elem, i as Elem) == h.has_edge(perm[j] as Elem, c as Elem)
            });
            if ok {
                used[c] = true;
                rec(h, i + 1, perm, used, out);
                used[c] = false;
            }
        }
    }
    rec(h, 0, &mut perm, &mut used, &mut out);
    out
}

/// Filters ordered embeddings down to one per automorphism orbit.
pub struct CanonicalFilter<'a> {
    inner: Enumerator<'a>,
    autos: &'a [Vec<usize>],
}

impl Iterator for CanonicalFilter<'_> {
    type Item = Vec<Elem>;

    fn next(&mut self) -> Option<Vec<Elem>> {
        while self.inner.advance() {
            let a = self.inner.current();
            let least = self.autos.iter().all(|p| {
                let image = p.iter().map(|&i| a[i]);
                a.iter().copied().le(image)
            });
            if least {
                return Some(a.to_vec());
            }
        }
        None
    }
}

/// Number of ordered embeddings.
pub fn count_embeddings(h: &Graph, g: &Graph, opts: EmbeddingOptions) -> Result<u64> {
    let plan = EmbeddingPlan::new(h, g, opts)?;
    let mut e = plan.enumerator()?;
    let mut c = 0;
    while e.advance() {
        c += 1;
    }
    Ok(c)
}

pub fn complete_graph(n: usize) -> Graph {
    let mut g = Graph::new(n, false);
    for u in 0..n as Elem {
        for v in u + 1..n as Elem {
            g.add_edge(u, v).expect("in range");
        }
    }
    g
}

pub fn cycle_graph(n: usize) -> Graph {
    let mut g = Graph::new(n, false);
    for u in 0..n as Elem {
        g.add_edge(u, (u + 1) % n as Elem).expect("in range");
    }
    g
}

pub fn path_graph(n: usize) -> Graph {
    let mut g = Graph::new(n, false);
    for u in 1..n as Elem {
        g.add_edge(u - 1, u).expect("in range");
    }
    g
}
