//! Multigraphs labeling the binary-invariant basis.
//!
//! A tensor block over the radial/angular index space is cut into equality
//! classes by the S_N action on particle labels. Each class is labeled by a
//! small multigraph: one loop per radial slot, one link per angular pair
//! slot. Two index tuples lie in the same class exactly when their graphs
//! are isomorphic, so canonical forms of these graphs index the basis.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

/// Kind of a tensor index slot: a radial slot carries one particle index,
/// an angular slot carries an ordered pair (i, j) with i < j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotKind {
    Radial,
    Angular,
}

/// Ordered sequence of slot kinds of a tensor block (the block signature).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature(Vec<SlotKind>);

impl Signature {
    pub fn new(kinds: Vec<SlotKind>) -> Self {
        Signature(kinds)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn kinds(&self) -> &[SlotKind] {
        &self.0
    }

    /// Number of (radial, angular) slots.
    pub fn kind_counts(&self) -> (usize, usize) {
        let r = self.0.iter().filter(|k| **k == SlotKind::Radial).count();
        (r, self.0.len() - r)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in &self.0 {
            f.write_str(match k {
                SlotKind::Radial => "r",
                SlotKind::Angular => "g",
            })?;
        }
        Ok(())
    }
}

impl FromStr for Signature {
    type Err = GraphError;

    /// Parses "ggr" or "g g r" style signature strings.
    fn from_str(s: &str) -> Result<Self, GraphError> {
        let mut kinds = Vec::new();
        for c in s.chars() {
            match c {
                'r' => kinds.push(SlotKind::Radial),
                'g' => kinds.push(SlotKind::Angular),
                c if c.is_whitespace() => {}
                c => return Err(GraphError::Parse(format!("bad slot kind {c:?} in {s:?}"))),
            }
        }
        if kinds.is_empty() {
            return Err(GraphError::Parse(format!("empty signature {s:?}")));
        }
        Ok(Signature(kinds))
    }
}

/// One entry of an index tuple, matching a slot of the signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexEntry {
    Radial(u32),
    /// Pair (i, j) with i < j.
    Pair(u32, u32),
}

/// A tensor element's indices, one entry per slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTuple(pub Vec<IndexEntry>);

impl IndexTuple {
    pub fn entries(&self) -> &[IndexEntry] {
        &self.0
    }

    /// Applies a particle-label permutation (perm[i-1] is the image of i).
    pub fn permuted(&self, perm: &[u32]) -> IndexTuple {
        let map = |i: u32| perm[(i - 1) as usize];
        IndexTuple(
            self.0
                .iter()
                .map(|e| match *e {
                    IndexEntry::Radial(i) => IndexEntry::Radial(map(i)),
                    IndexEntry::Pair(i, j) => {
                        let (a, b) = (map(i), map(j));
                        IndexEntry::Pair(a.min(b), a.max(b))
                    }
                })
                .collect(),
        )
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, e) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            match e {
                IndexEntry::Radial(i) => write!(f, "{i}")?,
                IndexEntry::Pair(i, j) => write!(f, "({i},{j})")?,
            }
        }
        Ok(())
    }
}

/// An edge of the labeling multigraph. Links sort before loops, which makes
/// the derived order match the canonical text form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge {
    /// Link between two distinct vertices, stored v < w.
    Link(u8, u8),
    /// Loop at a single vertex.
    Loop(u8),
}

impl Edge {
    fn relabeled(self, perm: &[u8]) -> Edge {
        match self {
            Edge::Loop(v) => Edge::Loop(perm[(v - 1) as usize]),
            Edge::Link(v, w) => {
                let (a, b) = (perm[(v - 1) as usize], perm[(w - 1) as usize]);
                Edge::Link(a.min(b), a.max(b))
            }
        }
    }
}

/// A small multigraph: an unordered multiset of loops and links over
/// vertices 1..=k with every vertex used by some edge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Graph {
    edges: Vec<Edge>,
}

/// Canonical byte key: two graphs are isomorphic iff their keys are equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("unsupported rank {0} (graphs are enumerated for rank 1..=3)")]
    UnsupportedRank(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

fn perms_of(k: usize) -> &'static [Vec<u8>] {
    static TABLES: OnceLock<Vec<Vec<Vec<u8>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        let mut all = Vec::with_capacity(7);
        for k in 0..=6usize {
            let mut out = Vec::new();
            let mut cur: Vec<u8> = (1..=k as u8).collect();
            heap_perms(&mut cur, k, &mut out);
            all.push(out);
        }
        all
    });
    &tables[k]
}

fn heap_perms(cur: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
    if k <= 1 {
        out.push(cur.clone());
        return;
    }
    for i in 0..k {
        heap_perms(cur, k - 1, out);
        if k % 2 == 0 {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
}

impl Graph {
    /// Builds a graph from edges, normalizing link orientation and edge
    /// order. Vertex labels must be contiguous 1..=k.
    pub fn new(mut edges: Vec<Edge>) -> Result<Graph, GraphError> {
        if edges.is_empty() {
            return Err(GraphError::Parse("graph with no edges".into()));
        }
        for e in edges.iter_mut() {
            if let Edge::Link(v, w) = *e {
                if v == w {
                    return Err(GraphError::Parse(format!("link with equal endpoints {v}")));
                }
                *e = Edge::Link(v.min(w), v.max(w));
            }
        }
        edges.sort();
        let g = Graph { edges };
        let k = g.vertex_count();
        if k == 0 {
            return Err(GraphError::Parse("vertex label 0 is not allowed".into()));
        }
        let mut seen = vec![false; k as usize];
        for e in &g.edges {
            match *e {
                Edge::Loop(v) => seen[(v - 1) as usize] = true,
                Edge::Link(v, w) => {
                    seen[(v - 1) as usize] = true;
                    seen[(w - 1) as usize] = true;
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(GraphError::Parse(format!(
                "vertex labels not contiguous 1..={k}"
            )));
        }
        Ok(g)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn rank(&self) -> usize {
        self.edges.len()
    }

    /// Highest vertex label k (labels are contiguous 1..=k).
    pub fn vertex_count(&self) -> u8 {
        self.edges
            .iter()
            .map(|e| match *e {
                Edge::Loop(v) => v,
                Edge::Link(_, w) => w,
            })
            .max()
            .unwrap_or(0)
    }

    /// Number of (loops, links); loops correspond to radial slots and links
    /// to angular slots of the block the graph labels.
    pub fn kind_counts(&self) -> (usize, usize) {
        let loops = self
            .edges
            .iter()
            .filter(|e| matches!(e, Edge::Loop(_)))
            .count();
        (loops, self.edges.len() - loops)
    }

    /// True if this graph's edge kinds can label a block with `sig`.
    pub fn matches_signature(&self, sig: &Signature) -> bool {
        let (loops, links) = self.kind_counts();
        let (r, a) = sig.kind_counts();
        loops == r && links == a
    }

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.edges.len() * 3);
        for e in &self.edges {
            match *e {
                Edge::Link(v, w) => out.extend_from_slice(&[0, v, w]),
                Edge::Loop(v) => out.extend_from_slice(&[1, v, 0]),
            }
        }
        out
    }

    /// Isomorphism-class representative and its key: the lexicographically
    /// minimal sorted edge list over all k! vertex relabelings. Idempotent.
    pub fn canonicalize(&self) -> (Graph, CanonicalKey) {
        let k = self.vertex_count() as usize;
        let mut best: Option<Vec<Edge>> = None;
        for perm in perms_of(k) {
            let mut edges: Vec<Edge> = self.edges.iter().map(|e| e.relabeled(perm)).collect();
            edges.sort();
            match &best {
                Some(b) if edges >= *b => {}
                _ => best = Some(edges),
            }
        }
        let g = Graph {
            edges: best.expect("graph has at least one edge"),
        };
        let key = CanonicalKey(g.encode());
        (g, key)
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        self.canonicalize().1
    }
}

impl fmt::Display for Graph {
    /// Canonical text form: edges sorted, links "E(v,w)" with v<w, loops
    /// "L(v)", joined by "+" — e.g. "E(1,2)+L(1)".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, e) in self.edges.iter().enumerate() {
            if n > 0 {
                f.write_str("+")?;
            }
            match *e {
                Edge::Link(v, w) => write!(f, "E({v},{w})")?,
                Edge::Loop(v) => write!(f, "L({v})")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Graph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Graph, GraphError> {
        let mut edges = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            let bad = || GraphError::Parse(format!("bad edge {part:?}"));
            if let Some(rest) = part.strip_prefix("E(") {
                let inner = rest.strip_suffix(')').ok_or_else(bad)?;
                let (v, w) = inner.split_once(',').ok_or_else(bad)?;
                let v: u8 = v.trim().parse().map_err(|_| bad())?;
                let w: u8 = w.trim().parse().map_err(|_| bad())?;
                edges.push(Edge::Link(v, w));
            } else if let Some(rest) = part.strip_prefix("L(") {
                let inner = rest.strip_suffix(')').ok_or_else(bad)?;
                let v: u8 = inner.trim().parse().map_err(|_| bad())?;
                edges.push(Edge::Loop(v));
            } else {
                return Err(bad());
            }
        }
        Graph::new(edges)
    }
}

/// Maps a tensor element to its labeling graph: one loop per radial slot,
/// one link per angular slot, vertices numbered by first appearance in slot
/// order. The result is not yet canonical.
pub fn graph_of_element(
    sig: &Signature,
    indices: &IndexTuple,
    n_particles: u32,
) -> Result<Graph, GraphError> {
    if sig.rank() != indices.0.len() {
        return Err(GraphError::InvalidIndex(format!(
            "tuple has {} entries, signature rank is {}",
            indices.0.len(),
            sig.rank()
        )));
    }
    let mut labels: Vec<u32> = Vec::new(); // particle index of vertex v-1
    let mut vertex_of = |i: u32| -> u8 {
        match labels.iter().position(|&p| p == i) {
            Some(pos) => (pos + 1) as u8,
            None => {
                labels.push(i);
                labels.len() as u8
            }
        }
    };
    let mut edges = Vec::with_capacity(sig.rank());
    for (kind, entry) in sig.kinds().iter().zip(indices.0.iter()) {
        match (kind, entry) {
            (SlotKind::Radial, IndexEntry::Radial(i)) => {
                if *i < 1 || *i > n_particles {
                    return Err(GraphError::InvalidIndex(format!(
                        "radial index {i} out of range 1..={n_particles}"
                    )));
                }
                edges.push(Edge::Loop(vertex_of(*i)));
            }
            (SlotKind::Angular, IndexEntry::Pair(i, j)) => {
                if *i >= *j {
                    return Err(GraphError::InvalidIndex(format!(
                        "malformed pair ({i},{j}): need i < j"
                    )));
                }
                if *i < 1 || *j > n_particles {
                    return Err(GraphError::InvalidIndex(format!(
                        "pair ({i},{j}) out of range 1..={n_particles}"
                    )));
                }
                let v = vertex_of(*i);
                let w = vertex_of(*j);
                edges.push(Edge::Link(v.min(w), v.max(w)));
            }
            (kind, entry) => {
                return Err(GraphError::InvalidIndex(format!(
                    "entry {entry:?} does not conform to slot kind {kind:?}"
                )));
            }
        }
    }
    Graph::new(edges)
}

/// True iff the two graphs are isomorphic (equal canonical keys).
pub fn isomorphic(g1: &Graph, g2: &Graph) -> bool {
    g1.canonical_key() == g2.canonical_key()
}

/// All isomorphism classes realizable with at most `n_particles` vertices
/// for the given block signature, canonical, sorted by key.
pub fn enumerate_graphs(sig: &Signature, n_particles: u32) -> Result<Vec<Graph>, GraphError> {
    let rank = sig.rank();
    if rank == 0 || rank > 3 {
        return Err(GraphError::UnsupportedRank(rank));
    }
    if n_particles < 1 {
        return Err(GraphError::InvalidIndex(
            "n_particles must be at least 1".into(),
        ));
    }
    let (n_loops, n_links) = sig.kind_counts();
    let max_v = (2 * rank).min(n_particles as usize) as u8;

    let loop_choices: Vec<Edge> = (1..=max_v).map(Edge::Loop).collect();
    let mut link_choices: Vec<Edge> = Vec::new();
    for v in 1..=max_v {
        for w in (v + 1)..=max_v {
            link_choices.push(Edge::Link(v, w));
        }
    }

    let mut classes: std::collections::BTreeMap<CanonicalKey, Graph> = Default::default();
    let loop_sets = multisets(&loop_choices, n_loops);
    let link_sets = multisets(&link_choices, n_links);
    for ls in &loop_sets {
        for ks in &link_sets {
            let mut edges = ls.clone();
            edges.extend_from_slice(ks);
            let g = compact(edges);
            if g.vertex_count() as u32 <= n_particles {
                let (cg, key) = g.canonicalize();
                classes.entry(key).or_insert(cg);
            }
        }
    }
    Ok(classes.into_values().collect())
}

/// Relabels vertices to 1..=k preserving first-appearance order.
fn compact(edges: Vec<Edge>) -> Graph {
    let mut labels: Vec<u8> = Vec::new();
    let mut map = |v: u8| -> u8 {
        match labels.iter().position(|&p| p == v) {
            Some(pos) => (pos + 1) as u8,
            None => {
                labels.push(v);
                labels.len() as u8
            }
        }
    };
    let mapped = edges
        .iter()
        .map(|e| match *e {
            Edge::Loop(v) => Edge::Loop(map(v)),
            Edge::Link(v, w) => {
                let (a, b) = (map(v), map(w));
                Edge::Link(a.min(b), a.max(b))
            }
        })
        .collect();
    Graph::new(mapped).expect("compacted edges are valid")
}

/// All size-k multisets drawn from `items`.
fn multisets(items: &[Edge], k: usize) -> Vec<Vec<Edge>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[Edge], k: usize, start: usize, cur: &mut Vec<Edge>, out: &mut Vec<Vec<Edge>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}
