//! Finite simple graphs: construction, components, disjoint union,
//! homomorphism densities, cuts, and cut-norm distance.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{check_budget, Error, Result};
use crate::par;

/// Upper bound on `v(g)^v(f)` for exhaustive homomorphism enumeration.
pub const HOM_ENUMERATION_BUDGET: u128 = 100_000_000;
/// Largest vertex count for the exact cut-norm evaluation.
pub const CUT_NORM_MAX_VERTICES: usize = 24;
/// Largest vertex count for the relabeling-minimised cut distance.
pub const CUT_ISO_MAX_VERTICES: usize = 8;

/// A finite simple labeled graph on vertices `0..n`.
///
/// Adjacency lists are kept sorted, so iteration order (and hence every
/// serialized form) is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(raw: GraphJson) -> Result<Self> {
        Graph::from_edges(raw.n, raw.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson {
            n: g.n(),
            edges: g.edges().map(|(i, j)| [i, j]).collect(),
        }
    }
}

impl Graph {
    /// The empty graph `E_n`.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        Ok(Graph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        })
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for i in 0..n {
            g.adj[i] = (0..n).filter(|&j| j != i).collect();
        }
        g.edge_count = n * (n - 1) / 2;
        Ok(g)
    }

    /// The path `P_n` with edges `{i, i+1}`.
    pub fn path(n: usize) -> Result<Self> {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i)))
    }

    /// Builds a graph from an edge list. Edges may be given in either
    /// orientation; loops, duplicates and out-of-range endpoints are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {{{a},{b}}} has an endpoint outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("loop at vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {{{},{}}}",
                    e.0, e.1
                )));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &set {
            adj[i].push(j);
            adj[j].push(i);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        Ok(Graph {
            adj,
            edge_count: set.len(),
        })
    }

    /// Builds a graph from adjacency lists that are already sorted and
    /// symmetric. Only used by generators that emit pairs in `i < j` order.
    pub(crate) fn from_sorted_adjacency(adj: Vec<Vec<usize>>) -> Self {
        debug_assert!(!adj.is_empty());
        let twice: usize = adj.iter().map(Vec::len).sum();
        debug_assert!(adj.iter().all(|r| r.windows(2).all(|w| w[0] < w[1])));
        Graph {
            adj,
            edge_count: twice / 2,
        }
    }

    /// Vertex count `v(G)`.
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Edge count `e(G)`.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n() && self.adj[i].binary_search(&j).is_ok()
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().copied().filter(move |&j| j > i).map(move |j| (i, j)))
    }

    /// Edge density `2e/n²`, which equals `t(K2, G)`.
    pub fn edge_density(&self) -> f64 {
        let n = self.n() as f64;
        2.0 * self.edge_count as f64 / (n * n)
    }

    /// The graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n() {
            return Err(Error::SizeMismatch(format!(
                "permutation of length {} for a graph on {} vertices",
                perm.len(),
                self.n()
            )));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        Graph::from_edges(self.n(), self.edges().map(|(i, j)| (perm[i], perm[j])))
    }

    /// Connected components, each sorted, listed by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &u in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Adjacency rows as bitsets.
    pub fn bit_rows(&self) -> BitRows {
        BitRows::new(self)
    }
}

/// Disjoint union `g1 ⊕ g2`: the vertices of `g2` are shifted by `v(g1)`.
pub fn direct_sum_graphs(g1: &Graph, g2: &Graph) -> Graph {
    let shift = g1.n();
    let mut adj = g1.adj.clone();
    adj.extend(
        g2.adj
            .iter()
            .map(|row| row.iter().map(|&u| u + shift).collect::<Vec<_>>()),
    );
    Graph {
        adj,
        edge_count: g1.edge_count + g2.edge_count,
    }
}

/// Connected components of `g`, listed by smallest vertex.
pub fn components(g: &Graph) -> Vec<Vec<usize>> {
    g.components()
}

/// Dense bitset adjacency, one row of `words` u64s per vertex.
#[derive(Debug, Clone)]
pub struct BitRows {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitRows {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for (v, row) in g.adj.iter().enumerate() {
            for &u in row {
                bits[v * words + u / 64] |= 1 << (u % 64);
            }
        }
        BitRows { n, words, bits }
    }

    pub fn row(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    fn full_into(&self, out: &mut [u64]) {
        out.fill(u64::MAX);
        let tail = self.n % 64;
        if tail != 0 {
            out[self.words - 1] = (1u64 << tail) - 1;
        }
    }
}

/// Exact number of homomorphisms `f → g`.
///
/// Enumerates every vertex map by backtracking over the vertices of `f` in
/// breadth-first order, restricting each image to the common neighbourhood
/// of the images of its already-placed neighbours. The last vertex is
/// counted with a popcount rather than enumerated. No budget is applied.
pub fn hom_count(f: &Graph, g: &Graph) -> u128 {
    let order = bfs_order(f);
    let k = order.len();
    let mut position = vec![0usize; k];
    for (p, &v) in order.iter().enumerate() {
        position[v] = p;
    }
    let back: Vec<Vec<usize>> = order
        .iter()
        .enumerate()
        .map(|(p, &v)| {
            f.neighbors(v)
                .iter()
                .map(|&u| position[u])
                .filter(|&q| q < p)
                .collect()
        })
        .collect();
    let rows = g.bit_rows();
    let mut counter = HomCounter {
        back,
        rows: &rows,
        image: vec![0; k],
        scratch: vec![vec![0u64; rows.words]; k],
    };
    counter.count(0)
}

pub(crate) fn bfs_order(f: &Graph) -> Vec<usize> {
    f.components().into_iter().flat_map(|comp| {
        let mut order = Vec::with_capacity(comp.len());
        let mut seen = vec![false; f.n()];
        let mut queue = VecDeque::from([comp[0]]);
        seen[comp[0]] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in f.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        order
    }).collect()
}

struct HomCounter<'a> {
    back: Vec<Vec<usize>>,
    rows: &'a BitRows,
    image: Vec<usize>,
    scratch: Vec<Vec<u64>>,
}

impl HomCounter<'_> {
    fn count(&mut self, depth: usize) -> u128 {
        let mut cand = std::mem::take(&mut self.scratch[depth]);
        if self.back[depth].is_empty() {
            self.rows.full_into(&mut cand);
        } else {
            cand.copy_from_slice(self.rows.row(self.image[self.back[depth][0]]));
            for &q in &self.back[depth][1..] {
                for (c, r) in cand.iter_mut().zip(self.rows.row(self.image[q])) {
                    *c &= r;
                }
            }
        }
        let total = if depth + 1 == self.back.len() {
            cand.iter().map(|w| w.count_ones() as u128).sum()
        } else {
            let mut total = 0u128;
            for (wi, &word) in cand.iter().enumerate() {
                let mut w = word;
                while w != 0 {
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    self.image[depth] = wi * 64 + bit;
                    total += self.count(depth + 1);
                }
            }
            total
        };
        self.scratch[depth] = cand;
        total
    }
}

/// Homomorphism density `t(f, g)`: the fraction of all `v(g)^v(f)` vertex
/// maps that preserve every edge of `f`.
///
/// Fails when `v(g)^v(f)` exceeds [`HOM_ENUMERATION_BUDGET`].
pub fn hom_density_graph(f: &Graph, g: &Graph) -> Result<f64> {
    let total = check_budget("hom_density_graph", g.n(), f.n(), HOM_ENUMERATION_BUDGET)?;
    Ok(hom_count(f, g) as f64 / total as f64)
}

/// A two-sided vertex partition `V' ∪ V''`; `side[v]` is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct Partition2 {
    side: Vec<u8>,
}

impl TryFrom<Vec<u8>> for Partition2 {
    type Error = Error;

    fn try_from(side: Vec<u8>) -> Result<Self> {
        Partition2::new(side)
    }
}

impl From<Partition2> for Vec<u8> {
    fn from(p: Partition2) -> Self {
        p.side
    }
}

impl Partition2 {
    pub fn new(side: Vec<u8>) -> Result<Self> {
        if let Some(bad) = side.iter().find(|&&s| s > 1) {
            return Err(Error::InvalidArgument(format!("partition side {bad} is not 0 or 1")));
        }
        Ok(Partition2 { side })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Self {
        Partition2 {
            side: (0..n).map(|v| u8::from(f(v))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.side.len()
    }

    pub fn is_empty(&self) -> bool {
        self.side.is_empty()
    }

    pub fn side(&self, v: usize) -> u8 {
        self.side[v]
    }

    pub fn sides(&self) -> &[u8] {
        &self.side
    }

    /// `(|V'|, |V''|)`.
    pub fn sizes(&self) -> (usize, usize) {
        let ones = self.side.iter().filter(|&&s| s == 1).count();
        (self.side.len() - ones, ones)
    }

    /// `min(|V'|, |V''|)`.
    pub fn smaller_side(&self) -> usize {
        let (a, b) = self.sizes();
        a.min(b)
    }
}

/// Number of edges with one endpoint on each side of `p`.
pub fn cut_size(g: &Graph, p: &Partition2) -> Result<usize> {
    if p.len() != g.n() {
        return Err(Error::SizeMismatch(format!(
            "partition of length {} for a graph on {} vertices",
            p.len(),
            g.n()
        )));
    }
    Ok(g.edges().filter(|&(i, j)| p.side[i] != p.side[j]).count())
}

/// Cut-norm distance between two graphs on the same labeled vertex set:
/// `max_{S,T} |e_g(S,T) − e_h(S,T)| / n²`.
///
/// `e(S,T)` counts ordered pairs `(i, j)` with `i ∈ S`, `j ∈ T` and `{i,j}`
/// an edge, so an edge inside `S ∩ T` is counted once per orientation. For a
/// fixed `S` the best `T` takes every column with positive (or every column
/// with negative) discrepancy, so only the `2^n` sets `S` are enumerated,
/// in Gray-code order.
pub fn cut_norm_distance(g: &Graph, h: &Graph) -> Result<f64> {
    let n = g.n();
    if h.n() != n {
        return Err(Error::SizeMismatch(format!(
            "cut norm needs equal vertex counts, got {} and {}",
            n,
            h.n()
        )));
    }
    if n > CUT_NORM_MAX_VERTICES {
        return Err(Error::BudgetExceeded {
            what: "cut_norm_distance",
            required: 1u128 << n,
            bound: 1u128 << CUT_NORM_MAX_VERTICES,
        });
    }
    let mut diff = vec![0i32; n * n];
    for (i, j) in g.edges() {
        diff[i * n + j] += 1;
        diff[j * n + i] += 1;
    }
    for (i, j) in h.edges() {
        diff[i * n + j] -= 1;
        diff[j * n + i] -= 1;
    }
    let best = max_discrepancy(&diff, n);
    Ok(best as f64 / (n * n) as f64)
}

fn max_discrepancy(diff: &[i32], n: usize) -> i64 {
    // The top `high` vertices are fixed per chunk; the rest are walked in
    // Gray-code order.
    let high = n.min(6).min(n.saturating_sub(8));
    let low = n - high;
    let chunk_max = |prefix: usize| -> i64 {
        let mut col = vec![0i64; n];
        for b in 0..high {
            if prefix >> b & 1 == 1 {
                let i = low + b;
                for j in 0..n {
                    col[j] += diff[i * n + j] as i64;
                }
            }
        }
        let eval = |col: &[i64]| -> i64 {
            let (mut pos, mut neg) = (0i64, 0i64);
            for &c in col {
                if c > 0 {
                    pos += c;
                } else {
                    neg -= c;
                }
            }
            pos.max(neg)
        };
        let mut best = eval(&col);
        let mut in_set = vec![false; low];
        for step in 1u64..(1u64 << low) {
            let i = step.trailing_zeros() as usize;
            let sign = if in_set[i] { -1 } else { 1 };
            in_set[i] = !in_set[i];
            for j in 0..n {
                col[j] += sign * diff[i * n + j] as i64;
            }
            best = best.max(eval(&col));
        }
        best
    };
    par::map_range(1 << high, chunk_max)
        .into_iter()
        .max()
        .unwrap_or(0)
}

/// `min` over relabelings `h̃ ≅ h` of [`cut_norm_distance`]`(g, h̃)`.
pub fn cut_distance_iso(g: &Graph, h: &Graph) -> Result<f64> {
    let n = g.n();
    if h.n() != n {
        return Err(Error::SizeMismatch(format!(
            "cut distance needs equal vertex counts, got {} and {}",
            n,
            h.n()
        )));
    }
    if n > CUT_ISO_MAX_VERTICES {
        return Err(Error::BudgetExceeded {
            what: "cut_distance_iso",
            required: (1..=n as u128).product(),
            bound: (1..=CUT_ISO_MAX_VERTICES as u128).product(),
        });
    }
    let perms = permutations(n);
    let values = par::map_slice(&perms, |p| {
        let hp = h.relabel(p).expect("valid permutation");
        cut_norm_distance(g, &hp).expect("sizes checked")
    });
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}
