//! Canonical connected test graphs used for density fingerprints.
//!
//! Graphs are canonicalised by brute force: the canonical code of a graph on
//! `v` vertices is the lexicographically smallest adjacency bit-string over
//! all `v!` relabelings, read over the pairs `(0,1), (0,2), …, (v−2,v−1)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{permutations, Graph};
use crate::par;

/// Largest `k` accepted by [`enumerate_connected`].
pub const MAX_CATALOG_VERTICES: usize = 6;
/// Catalog size used for fingerprints unless the caller asks otherwise.
pub const DEFAULT_CATALOG_K: usize = 4;
const MAX_CANONICAL_VERTICES: usize = 8;

/// Connected graphs with at least one edge on at most `max_vertices`
/// vertices, one per isomorphism class, ordered by vertex count, then edge
/// count, then canonical edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Graph>", into = "Vec<Graph>")]
pub struct TestGraphCatalog {
    max_vertices: usize,
    graphs: Vec<Graph>,
}

impl TestGraphCatalog {
    pub fn max_vertices(&self) -> usize {
        self.max_vertices
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Shared, lazily built catalog for `k`.
    pub fn cached(k: usize) -> Result<&'static TestGraphCatalog> {
        static CACHE: [OnceLock<TestGraphCatalog>; MAX_CATALOG_VERTICES + 1] =
            [const { OnceLock::new() }; MAX_CATALOG_VERTICES + 1];
        check_k(k)?;
        Ok(CACHE[k].get_or_init(|| build(k)))
    }
}

impl TryFrom<Vec<Graph>> for TestGraphCatalog {
    type Error = Error;

    fn try_from(graphs: Vec<Graph>) -> Result<Self> {
        let mut codes = Vec::with_capacity(graphs.len());
        for g in &graphs {
            if g.edge_count() == 0 || !g.is_connected() {
                return Err(Error::InvalidArgument(
                    "catalog graphs must be connected with at least one edge".into(),
                ));
            }
            codes.push((g.n(), canonical_code(g)?));
        }
        codes.sort_unstable();
        if codes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("catalog contains isomorphic graphs".into()));
        }
        let max_vertices = graphs.iter().map(Graph::n).max().unwrap_or(1);
        Ok(TestGraphCatalog { max_vertices, graphs })
    }
}

impl From<TestGraphCatalog> for Vec<Graph> {
    fn from(c: TestGraphCatalog) -> Self {
        c.graphs
    }
}

fn check_k(k: usize) -> Result<()> {
    if !(1..=MAX_CATALOG_VERTICES).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "catalog size k={k} outside 1..={MAX_CATALOG_VERTICES}"
        )));
    }
    Ok(())
}

/// Lists every connected graph with at least one edge on at most `k`
/// vertices, one per isomorphism class.
pub fn enumerate_connected(k: usize) -> Result<TestGraphCatalog> {
    check_k(k)?;
    Ok(build(k))
}

fn build(k: usize) -> TestGraphCatalog {
    let mut graphs = Vec::new();
    for v in 2..=k {
        let pairs = pair_list(v);
        let perm_tables = perm_tables(v, &pairs);
        let masks = 1usize << pairs.len();
        let mut codes: Vec<u64> = par::map_range(masks, |mask| {
            let g = graph_from_code(v, &pairs, mask as u64);
            if g.is_connected() {
                Some(min_code(mask as u64, &pairs, &perm_tables))
            } else {
                None
            }
        })
        .into_iter()
        .flatten()
        .collect();
        codes.sort_unstable();
        codes.dedup();
        let mut level: Vec<Graph> = codes
            .into_iter()
            .map(|c| graph_from_code(v, &pairs, c))
            .collect();
        level.sort_by(|a, b| {
            a.edge_count()
                .cmp(&b.edge_count())
                .then_with(|| a.edges().cmp(b.edges()))
        });
        graphs.extend(level);
    }
    TestGraphCatalog {
        max_vertices: k,
        graphs,
    }
}

/// Whether `g` has exactly one component.
pub fn is_connected_graph(g: &Graph) -> bool {
    g.is_connected()
}

/// Canonical code of `g` (see module docs). Two graphs on the same number
/// of vertices are isomorphic iff their codes are equal.
pub fn canonical_code(g: &Graph) -> Result<u64> {
    let v = g.n();
    if v > MAX_CANONICAL_VERTICES {
        return Err(Error::BudgetExceeded {
            what: "canonical_code",
            required: (1..=v as u128).product(),
            bound: (1..=MAX_CANONICAL_VERTICES as u128).product(),
        });
    }
    let pairs = pair_list(v);
    let code = code_of(g, &pairs);
    Ok(min_code(code, &pairs, &perm_tables(v, &pairs)))
}

// Pair (i, j) at index p is stored at bit `len-1-p`, so numeric order on
// codes is lexicographic order on bit-strings.
fn pair_list(v: usize) -> Vec<(usize, usize)> {
    (0..v)
        .flat_map(|i| (i + 1..v).map(move |j| (i, j)))
        .collect()
}

fn pair_index(v: usize, i: usize, j: usize) -> usize {
    let (i, j) = (i.min(j), i.max(j));
    i * (2 * v - i - 1) / 2 + (j - i - 1)
}

fn perm_tables(v: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    permutations(v)
        .into_iter()
        .map(|p| {
            pairs
                .iter()
                .map(|&(i, j)| pair_index(v, p[i], p[j]))
                .collect()
        })
        .collect()
}

fn code_of(g: &Graph, pairs: &[(usize, usize)]) -> u64 {
    let len = pairs.len();
    pairs
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| g.has_edge(i, j))
        .fold(0, |acc, (p, _)| acc | 1 << (len - 1 - p))
}

fn min_code(code: u64, pairs: &[(usize, usize)], tables: &[Vec<usize>]) -> u64 {
    let len = pairs.len();
    tables
        .iter()
        .map(|table| {
            let mut out = 0u64;
            for (p, &q) in table.iter().enumerate() {
                if code >> (len - 1 - p) & 1 == 1 {
                    out |= 1 << (len - 1 - q);
                }
            }
            out
        })
        .min()
        .unwrap_or(code)
}

fn graph_from_code(v: usize, pairs: &[(usize, usize)], code: u64) -> Graph {
    let len = pairs.len();
    Graph::from_edges(
        v,
        pairs
            .iter()
            .enumerate()
            .filter(|(p, _)| code >> (len - 1 - p) & 1 == 1)
            .map(|(_, &e)| e),
    )
    .expect("pairs are valid edges")
}
