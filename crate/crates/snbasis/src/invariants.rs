//! Binary invariants and decomposition of S_N-invariant tensors.
//!
//! A binary invariant B(G) is the 0/1 tensor whose nonzero elements are
//! exactly the index tuples labeled by graph class G. Distinct classes have
//! disjoint supports, so decomposing an invariant tensor into the graph
//! basis is exact: one coefficient per class, read off any orbit element.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_rational::Ratio;
use thiserror::Error;

use crate::graphs::{
    enumerate_graphs, graph_of_element, CanonicalKey, Graph, GraphError, IndexEntry, IndexTuple,
    Signature, SlotKind,
};

const DENSE_LIMIT: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("tensor is not S_N-invariant: class {graph} at tuple {tuple} deviates by {deviation:e}")]
    NotInvariant {
        graph: Graph,
        tuple: IndexTuple,
        deviation: f64,
    },
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
}

/// Pairs (i, j), i < j, in the order (1,2),(1,3),(2,3),(1,4),(2,4),...
pub fn pairs(n_particles: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity((n_particles * (n_particles.max(1) - 1) / 2) as usize);
    for j in 2..=n_particles {
        for i in 1..j {
            out.push((i, j));
        }
    }
    out
}

/// Flat position of pair (i, j), i < j, in the `pairs` order.
pub fn pair_position(i: u32, j: u32) -> usize {
    ((j - 1) * (j - 2) / 2 + (i - 1)) as usize
}

/// Dense enumeration of all conforming index tuples of one block.
#[derive(Clone, Debug)]
pub struct TupleSpace {
    signature: Signature,
    n_particles: u32,
    dims: Vec<usize>,
    len: usize,
}

impl TupleSpace {
    pub fn new(signature: Signature, n_particles: u32) -> TupleSpace {
        let m = (n_particles * (n_particles - 1) / 2) as usize;
        let dims: Vec<usize> = signature
            .kinds()
            .iter()
            .map(|k| match k {
                SlotKind::Radial => n_particles as usize,
                SlotKind::Angular => m,
            })
            .collect();
        let len = dims.iter().product();
        TupleSpace {
            signature,
            n_particles,
            dims,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn n_particles(&self) -> u32 {
        self.n_particles
    }

    /// Flat index of a conforming tuple (row-major over slots).
    pub fn position(&self, t: &IndexTuple) -> Result<usize, InvariantError> {
        if t.entries().len() != self.dims.len() {
            return Err(InvariantError::SignatureMismatch(format!(
                "tuple {t} does not match signature {}",
                self.signature
            )));
        }
        let mut idx = 0usize;
        for (slot, (entry, kind)) in t
            .entries()
            .iter()
            .zip(self.signature.kinds())
            .enumerate()
        {
            let pos = match (kind, entry) {
                (SlotKind::Radial, IndexEntry::Radial(i)) => {
                    if *i < 1 || *i > self.n_particles {
                        return Err(GraphError::InvalidIndex(format!(
                            "radial index {i} out of range 1..={}",
                            self.n_particles
                        ))
                        .into());
                    }
                    (*i - 1) as usize
                }
                (SlotKind::Angular, IndexEntry::Pair(i, j)) => {
                    if *i >= *j || *i < 1 || *j > self.n_particles {
                        return Err(GraphError::InvalidIndex(format!(
                            "bad pair ({i},{j}) for N={}",
                            self.n_particles
                        ))
                        .into());
                    }
                    pair_position(*i, *j)
                }
                _ => {
                    return Err(GraphError::InvalidIndex(format!(
                        "entry {entry:?} does not conform to slot {slot} of {}",
                        self.signature
                    ))
                    .into())
                }
            };
            idx = idx * self.dims[slot] + pos;
        }
        Ok(idx)
    }

    /// Tuple at a flat index.
    pub fn tuple_at(&self, mut idx: usize) -> IndexTuple {
        let mut rev = Vec::with_capacity(self.dims.len());
        for (dim, kind) in self
            .dims
            .iter()
            .zip(self.signature.kinds())
            .rev()
        {
            let pos = idx % dim;
            idx /= dim;
            rev.push(match kind {
                SlotKind::Radial => IndexEntry::Radial(pos as u32 + 1),
                SlotKind::Angular => {
                    // invert pair_position
                    let mut j = 2u32;
                    while pair_position(1, j + 1) <= pos {
                        j += 1;
                    }
                    let i = pos as u32 - (j - 1) * (j - 2) / 2 + 1;
                    IndexEntry::Pair(i, j)
                }
            });
        }
        rev.reverse();
        IndexTuple(rev)
    }

    pub fn iter(&self) -> impl Iterator<Item = IndexTuple> + '_ {
        (0..self.len).map(|i| self.tuple_at(i))
    }

    /// Index-space size of one slot (N for radial, N(N-1)/2 for angular).
    pub fn dim_of(&self, slot: usize) -> usize {
        self.dims[slot]
    }

    /// Flat index from per-slot positions (0-based), bypassing tuple building.
    pub fn position_unchecked(&self, slots: &[usize]) -> usize {
        let mut idx = 0usize;
        for (slot, &pos) in slots.iter().enumerate() {
            debug_assert!(pos < self.dims[slot]);
            idx = idx * self.dims[slot] + pos;
        }
        idx
    }
}

/// One block's orbit partition: class id per tuple plus the canonical class
/// representatives, sorted by canonical key.
pub struct OrbitTable {
    space: TupleSpace,
    classes: Vec<Graph>,
    class_of: Vec<u32>,
}

/// Shared, memoized orbit tables: the partition of a block depends only on
/// (signature, N) and is immutable, so it is computed once per process.
pub fn orbit_table(signature: &Signature, n_particles: u32) -> Result<Arc<OrbitTable>, InvariantError> {
    static CACHE: OnceLock<Mutex<HashMap<(Signature, u32), Arc<OrbitTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (signature.clone(), n_particles);
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(Arc::clone(hit));
    }
    let table = Arc::new(OrbitTable::new(signature.clone(), n_particles)?);
    cache
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| Arc::clone(&table));
    Ok(table)
}

impl OrbitTable {
    pub fn new(signature: Signature, n_particles: u32) -> Result<OrbitTable, InvariantError> {
        let space = TupleSpace::new(signature, n_particles);
        let mut by_key: BTreeMap<CanonicalKey, Graph> = BTreeMap::new();
        let mut keys: Vec<CanonicalKey> = Vec::with_capacity(space.len());
        for t in space.iter() {
            let (g, key) = graph_of_element(space.signature(), &t, n_particles)?.canonicalize();
            by_key.entry(key.clone()).or_insert(g);
            keys.push(key);
        }
        let ids: BTreeMap<&CanonicalKey, u32> = by_key
            .keys()
            .enumerate()
            .map(|(i, k)| (k, i as u32))
            .collect();
        let class_of = keys.iter().map(|k| ids[k]).collect();
        let classes = by_key.values().cloned().collect();
        Ok(OrbitTable {
            space,
            classes,
            class_of,
        })
    }

    pub fn space(&self) -> &TupleSpace {
        &self.space
    }

    /// Canonical class representatives, sorted by canonical key. Equals
    /// `enumerate_graphs` for rank <= 3 blocks.
    pub fn classes(&self) -> &[Graph] {
        &self.classes
    }

    pub fn class_of_position(&self, idx: usize) -> u32 {
        self.class_of[idx]
    }

    pub fn class_id(&self, g: &Graph) -> Option<usize> {
        let (cg, _) = g.canonicalize();
        self.classes.iter().position(|c| *c == cg)
    }

    /// Per-class constant of an orbit-constant value buffer over the tuple
    /// space. Deviations beyond `tolerance` (absolute; relative to the orbit
    /// representative when its magnitude exceeds 1) are rejected.
    pub fn collapse(&self, values: &[f64], tolerance: f64) -> Result<Vec<f64>, InvariantError> {
        assert_eq!(values.len(), self.space.len());
        let mut rep: Vec<Option<f64>> = vec![None; self.classes.len()];
        let mut worst: Option<(usize, f64, f64)> = None; // (pos, deviation, excess ratio)
        for (pos, &v) in values.iter().enumerate() {
            let c = self.class_of[pos] as usize;
            match rep[c] {
                None => rep[c] = Some(v),
                Some(r) => {
                    let dev = (v - r).abs();
                    let threshold = tolerance * r.abs().max(1.0);
                    let excess = if threshold > 0.0 {
                        dev / threshold
                    } else if dev > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                    if excess > 1.0 && worst.map_or(true, |(_, _, w)| excess > w) {
                        worst = Some((pos, dev, excess));
                    }
                }
            }
        }
        if let Some((pos, deviation, _)) = worst {
            return Err(InvariantError::NotInvariant {
                graph: self.classes[self.class_of[pos] as usize].clone(),
                tuple: self.space.tuple_at(pos),
                deviation,
            });
        }
        Ok(rep.into_iter().map(|r| r.unwrap_or(0.0)).collect())
    }
}

enum Storage {
    Dense(Vec<f64>),
    Sparse(HashMap<usize, f64>),
}

/// A real tensor over one block's index space, expected S_N-invariant.
/// Absent sparse entries read as zero.
pub struct InvariantTensor {
    space: TupleSpace,
    storage: Storage,
}

impl InvariantTensor {
    pub fn zeros(signature: Signature, n_particles: u32) -> InvariantTensor {
        let space = TupleSpace::new(signature, n_particles);
        let storage = if space.len() <= DENSE_LIMIT {
            Storage::Dense(vec![0.0; space.len()])
        } else {
            Storage::Sparse(HashMap::new())
        };
        InvariantTensor { space, storage }
    }

    pub fn space(&self) -> &TupleSpace {
        &self.space
    }

    pub fn signature(&self) -> &Signature {
        self.space.signature()
    }

    pub fn n_particles(&self) -> u32 {
        self.space.n_particles()
    }

    pub fn get(&self, t: &IndexTuple) -> Result<f64, InvariantError> {
        let idx = self.space.position(t)?;
        Ok(self.value_at(idx))
    }

    pub fn set(&mut self, t: &IndexTuple, v: f64) -> Result<(), InvariantError> {
        let idx = self.space.position(t)?;
        match &mut self.storage {
            Storage::Dense(d) => d[idx] = v,
            Storage::Sparse(s) => {
                if v == 0.0 {
                    s.remove(&idx);
                } else {
                    s.insert(idx, v);
                }
            }
        }
        Ok(())
    }

    pub fn value_at(&self, idx: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[idx],
            Storage::Sparse(s) => s.get(&idx).copied().unwrap_or(0.0),
        }
    }

    pub fn set_flat(&mut self, idx: usize, v: f64) {
        match &mut self.storage {
            Storage::Dense(d) => d[idx] = v,
            Storage::Sparse(s) => {
                if v == 0.0 {
                    s.remove(&idx);
                } else {
                    s.insert(idx, v);
                }
            }
        }
    }

    /// Entries with nonzero value, in tuple-space order.
    pub fn nonzero_entries(&self) -> Vec<(IndexTuple, f64)> {
        let mut out = Vec::new();
        match &self.storage {
            Storage::Dense(d) => {
                for (idx, &v) in d.iter().enumerate() {
                    if v != 0.0 {
                        out.push((self.space.tuple_at(idx), v));
                    }
                }
            }
            Storage::Sparse(s) => {
                let mut idxs: Vec<_> = s.iter().map(|(&i, &v)| (i, v)).collect();
                idxs.sort_by_key(|&(i, _)| i);
                for (idx, v) in idxs {
                    if v != 0.0 {
                        out.push((self.space.tuple_at(idx), v));
                    }
                }
            }
        }
        out
    }
}

/// The 0/1 basis tensor for one graph class.
pub struct BinaryInvariant {
    graph: Graph,
    key: CanonicalKey,
    signature: Signature,
    n_particles: u32,
}

impl BinaryInvariant {
    pub fn new(
        graph: &Graph,
        signature: Signature,
        n_particles: u32,
    ) -> Result<BinaryInvariant, InvariantError> {
        if !graph.matches_signature(&signature) {
            return Err(InvariantError::SignatureMismatch(format!(
                "graph {graph} cannot label a {signature} block"
            )));
        }
        let (graph, key) = graph.canonicalize();
        Ok(BinaryInvariant {
            graph,
            key,
            signature,
            n_particles,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// 1 iff the tuple's canonical graph equals this invariant's graph.
    pub fn membership(&self, idx: &IndexTuple) -> Result<u8, InvariantError> {
        let key = graph_of_element(&self.signature, idx, self.n_particles)?.canonical_key();
        Ok(u8::from(key == self.key))
    }

    pub fn to_tensor(&self) -> InvariantTensor {
        let mut t = InvariantTensor::zeros(self.signature.clone(), self.n_particles);
        let orbits =
            orbit_table(&self.signature, self.n_particles).expect("valid invariant block");
        if let Some(id) = orbits.class_id(&self.graph) {
            for pos in 0..orbits.space().len() {
                if orbits.class_of_position(pos) == id as u32 {
                    t.set_flat(pos, 1.0);
                }
            }
        }
        t
    }
}

/// Number of conforming tuples whose class is `graph` (brute-force orbit
/// classification of the whole tuple space).
pub fn nonzero_count(graph: &Graph, n_particles: u32, signature: &Signature) -> usize {
    let orbits = orbit_table(signature, n_particles).expect("valid block signature");
    match orbits.class_id(graph) {
        Some(id) => (0..orbits.space().len())
            .filter(|&p| orbits.class_of_position(p) == id as u32)
            .count(),
        None => 0,
    }
}

/// A decomposition: scalar coefficient per canonical graph of one block.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub signature: Signature,
    pub n_particles: u32,
    pub values: BTreeMap<Graph, f64>,
}

impl fmt::Display for CoefficientTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, v) in &self.values {
            writeln!(f, "{g} {v}")?;
        }
        Ok(())
    }
}

/// Reads the common value of each orbit, verifying orbit constancy within
/// `tolerance`.
pub fn decompose(t: &InvariantTensor, tolerance: f64) -> Result<CoefficientTable, InvariantError> {
    let orbits = orbit_table(t.signature(), t.n_particles())?;
    let values: Vec<f64> = (0..orbits.space().len()).map(|i| t.value_at(i)).collect();
    let coeffs = orbits.collapse(&values, tolerance)?;
    Ok(CoefficientTable {
        signature: t.signature().clone(),
        n_particles: t.n_particles(),
        values: orbits
            .classes()
            .iter()
            .cloned()
            .zip(coeffs)
            .collect(),
    })
}

/// Reconstructs sum_G c(G) B(G); exact.
pub fn reconstruct(c: &CoefficientTable) -> Result<InvariantTensor, InvariantError> {
    let orbits = orbit_table(&c.signature, c.n_particles)?;
    let mut per_class = vec![0.0; orbits.classes().len()];
    for (g, v) in &c.values {
        match orbits.class_id(g) {
            Some(id) => per_class[id] = *v,
            None => {
                return Err(InvariantError::SignatureMismatch(format!(
                    "graph {g} is not a {} class at N={}",
                    c.signature, c.n_particles
                )))
            }
        }
    }
    let mut t = InvariantTensor::zeros(c.signature.clone(), c.n_particles);
    for pos in 0..orbits.space().len() {
        let v = per_class[orbits.class_of_position(pos) as usize];
        if v != 0.0 {
            match &mut t.storage {
                Storage::Dense(d) => d[pos] = v,
                Storage::Sparse(s) => {
                    s.insert(pos, v);
                }
            }
        }
    }
    Ok(t)
}

/// Exact-rational decomposition of the symmetrized product of binary
/// invariants in the combined-signature basis.
#[derive(Clone, Debug)]
pub struct RationalTable {
    pub signature: Signature,
    pub n_particles: u32,
    pub values: BTreeMap<Graph, Ratio<i64>>,
}

/// Coefficients of B(g1) (x) B(g2) — the kind-preserving slot
/// symmetrization of the elementwise product — in the combined basis.
pub fn product_decompose(
    g1: &Graph,
    g2: &Graph,
    n_particles: u32,
) -> Result<RationalTable, InvariantError> {
    product_decompose_many(&[g1, g2], n_particles)
}

/// Same as `product_decompose` for an arbitrary list of factors.
pub fn product_decompose_many(
    graphs: &[&Graph],
    n_particles: u32,
) -> Result<RationalTable, InvariantError> {
    let rank: usize = graphs.iter().map(|g| g.rank()).sum();
    if rank > 3 || rank == 0 {
        return Err(GraphError::UnsupportedRank(rank).into());
    }
    // Combined signature: each factor contributes its angular slots then its
    // radial slots; slot order within a kind is immaterial for the classes.
    let mut kinds = Vec::with_capacity(rank);
    let mut factor_slots: Vec<Vec<usize>> = Vec::new(); // combined slot ids per factor
    for g in graphs {
        let (loops, links) = g.kind_counts();
        let mut slots = Vec::new();
        for _ in 0..links {
            slots.push(kinds.len());
            kinds.push(SlotKind::Angular);
        }
        for _ in 0..loops {
            slots.push(kinds.len());
            kinds.push(SlotKind::Radial);
        }
        factor_slots.push(slots);
    }
    let signature = Signature::new(kinds);
    let orbits = orbit_table(&signature, n_particles)?;

    // Kind-preserving slot permutations of the combined signature.
    let slot_perms = kind_preserving_perms(&signature);
    let weight = Ratio::new(1i64, slot_perms.len() as i64);

    let keys: Vec<CanonicalKey> = graphs.iter().map(|g| g.canonical_key()).collect();
    let mut per_class: Vec<Option<Ratio<i64>>> = vec![None; orbits.classes().len()];
    for (pos, tuple) in orbits.space().iter().enumerate() {
        let mut acc = Ratio::new(0i64, 1);
        for perm in &slot_perms {
            let permuted: Vec<IndexEntry> =
                perm.iter().map(|&s| tuple.entries()[s]).collect();
            let mut prod = true;
            for (f, slots) in factor_slots.iter().enumerate() {
                let sub = IndexTuple(slots.iter().map(|&s| permuted[s]).collect());
                let sub_sig = Signature::new(
                    slots
                        .iter()
                        .map(|&s| signature.kinds()[s])
                        .collect(),
                );
                let key = graph_of_element(&sub_sig, &sub, n_particles)?.canonical_key();
                if key != keys[f] {
                    prod = false;
                    break;
                }
            }
            if prod {
                acc += weight;
            }
        }
        let c = orbits.class_of_position(pos) as usize;
        match per_class[c] {
            None => per_class[c] = Some(acc),
            Some(prev) => {
                if prev != acc {
                    return Err(InvariantError::NotInvariant {
                        graph: orbits.classes()[c].clone(),
                        tuple: orbits.space().tuple_at(pos),
                        deviation: (*prev.numer() as f64 / *prev.denom() as f64
                            - *acc.numer() as f64 / *acc.denom() as f64)
                            .abs(),
                    });
                }
            }
        }
    }
    let values = orbits
        .classes()
        .iter()
        .cloned()
        .zip(per_class.into_iter().map(|v| v.unwrap_or_else(|| Ratio::new(0, 1))))
        .filter(|(_, v)| *v != Ratio::new(0, 1))
        .collect();
    Ok(RationalTable {
        signature,
        n_particles,
        values,
    })
}

/// Permutations of slot positions that map each kind to itself.
fn kind_preserving_perms(sig: &Signature) -> Vec<Vec<usize>> {
    let radial: Vec<usize> = (0..sig.rank())
        .filter(|&s| sig.kinds()[s] == SlotKind::Radial)
        .collect();
    let angular: Vec<usize> = (0..sig.rank())
        .filter(|&s| sig.kinds()[s] == SlotKind::Angular)
        .collect();
    let rp = perms_list(radial.len());
    let ap = perms_list(angular.len());
    let mut out = Vec::with_capacity(rp.len() * ap.len());
    for r in &rp {
        for a in &ap {
            let mut perm = vec![0usize; sig.rank()];
            for (dst, src) in radial.iter().zip(r.iter().map(|&i| radial[i])) {
                perm[*dst] = src;
            }
            for (dst, src) in angular.iter().zip(a.iter().map(|&i| angular[i])) {
                perm[*dst] = src;
            }
            out.push(perm);
        }
    }
    out
}

fn perms_list(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    fn rec(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            rec(cur, k - 1, out);
            if k % 2 == 0 {
                cur.swap(i, k - 1);
            } else {
                cur.swap(0, k - 1);
            }
        }
    }
    rec(&mut cur, k, &mut out);
    out
}

/// Verifies `keys(table) subset of enumerate_graphs(signature, n)`.
pub fn validate_table(c: &CoefficientTable) -> Result<(), InvariantError> {
    let classes = enumerate_graphs(&c.signature, c.n_particles)?;
    for g in c.values.keys() {
        let (cg, _) = g.canonicalize();
        if !classes.contains(&cg) {
            return Err(InvariantError::SignatureMismatch(format!(
                "graph {g} is not an enumerated {} class at N={}",
                c.signature, c.n_particles
            )));
        }
    }
    Ok(())
}
