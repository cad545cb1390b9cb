//! Seeded W-random graphs `G(n, W)` for step kernels, and the component and
//! density statistics computed from them.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{hom_count, Graph, HOM_ENUMERATION_BUDGET};
use crate::kernel::StepKernel;
use crate::par;
use crate::rng::{Rng, Seed};

/// Random vertex maps drawn per graph when `t(F, G)` is estimated rather
/// than counted.
pub const MAPPING_SAMPLES: usize = 20_000;

/// A sampled graph together with the block type of each vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleJson", into = "SampleJson")]
pub struct LabeledSample {
    pub graph: Graph,
    pub labels: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    n: usize,
    edges: Vec<[usize; 2]>,
    labels: Vec<usize>,
}

impl TryFrom<SampleJson> for LabeledSample {
    type Error = Error;

    fn try_from(raw: SampleJson) -> Result<Self> {
        if raw.labels.len() != raw.n {
            return Err(Error::SizeMismatch(format!(
                "{} labels for {} vertices",
                raw.labels.len(),
                raw.n
            )));
        }
        Ok(LabeledSample {
            graph: Graph::from_edges(raw.n, raw.edges.iter().map(|e| (e[0], e[1])))?,
            labels: raw.labels,
        })
    }
}

impl From<LabeledSample> for SampleJson {
    fn from(s: LabeledSample) -> Self {
        SampleJson {
            n: s.graph.n(),
            edges: s.graph.edges().map(|(i, j)| [i, j]).collect(),
            labels: s.labels,
        }
    }
}

/// Draws `G(n, W)`: i.i.d. block labels with probabilities `μ_i`, then each
/// pair `{i, j}` (in lexicographic order) independently becomes an edge with
/// probability `W(label_i, label_j)`. Pairs with probability exactly 0 or 1
/// consume no randomness.
pub fn sample_graph(w: &StepKernel, n: usize, seed: Seed) -> Result<LabeledSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let mut rng = seed.rng();
    Ok(sample_with(w, n, &mut rng))
}

pub(crate) fn sample_with(w: &StepKernel, n: usize, rng: &mut Rng) -> LabeledSample {
    let cumulative: Vec<f64> = w
        .weights()
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let last = w.blocks() - 1;
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative.iter().position(|&c| u < c).unwrap_or(last)
        })
        .collect();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let p = w.value(labels[i], labels[j]);
            let edge = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.random::<f64>() < p
            };
            if edge {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    LabeledSample {
        graph: Graph::from_sorted_adjacency(adj),
        labels,
    }
}

/// Component statistics of one sampled graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub n: usize,
    /// `|C₁| / n`.
    pub largest_fraction: f64,
    /// Fraction of vertices with degree 0.
    pub isolated_fraction: f64,
    /// Component sizes divided by `n`, largest first.
    pub sorted_densities: Vec<f64>,
    /// Whether the first vertex has no neighbours.
    pub vertex1_isolated: bool,
}

pub fn component_stats(sample: &LabeledSample) -> ComponentStats {
    graph_component_stats(&sample.graph)
}

pub fn graph_component_stats(g: &Graph) -> ComponentStats {
    let n = g.n();
    let mut sizes: Vec<usize> = g.components().iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let sorted_densities: Vec<f64> = sizes.iter().map(|&s| s as f64 / n as f64).collect();
    let isolated = (0..n).filter(|&v| g.degree(v) == 0).count();
    ComponentStats {
        n,
        largest_fraction: sorted_densities[0],
        isolated_fraction: isolated as f64 / n as f64,
        sorted_densities,
        vertex1_isolated: g.degree(0) == 0,
    }
}

/// Fraction of `reps` independent draws of `G(k, W)` that contain `f` as a
/// labeled subgraph on `0..k`. Replicate `r` uses `seed.derive(r)`.
pub fn subgraph_frequency(w: &StepKernel, f: &Graph, k: usize, reps: usize, seed: Seed) -> Result<f64> {
    if f.n() != k {
        return Err(Error::SizeMismatch(format!(
            "test graph has {} vertices, expected k={k}",
            f.n()
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let hits = par::map_range(reps, |r| {
        let g = sample_with(w, k, &mut seed.derive(r as u64).rng()).graph;
        f.edges().all(|(a, b)| g.has_edge(a, b))
    })
    .into_iter()
    .filter(|&h| h)
    .count();
    Ok(hits as f64 / reps as f64)
}

/// `t(f, g)` for a possibly large host graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphDensity {
    pub value: f64,
    /// False when the value is a random-mapping estimate.
    pub exact: bool,
}

/// Evaluates `t(f, g)`: `2e/n²` for `f = K2`; an exact homomorphism count
/// when `v(f) ≤ 3` or `n^v(f)` is within budget; otherwise the fraction of
/// [`MAPPING_SAMPLES`] uniform random vertex maps that are homomorphisms.
pub fn graph_density(f: &Graph, g: &Graph, rng: &mut Rng) -> GraphDensity {
    let (v, n) = (f.n(), g.n());
    if v == 2 && f.edge_count() == 1 {
        return GraphDensity {
            value: g.edge_density(),
            exact: true,
        };
    }
    let within_budget = (n as u128)
        .checked_pow(v as u32)
        .is_some_and(|t| t <= HOM_ENUMERATION_BUDGET);
    if v <= 3 || within_budget {
        return GraphDensity {
            value: hom_count(f, g) as f64 / (n as f64).powi(v as i32),
            exact: true,
        };
    }
    let edges: Vec<(usize, usize)> = f.edges().collect();
    let mut map = vec![0usize; v];
    let mut hits = 0usize;
    for _ in 0..MAPPING_SAMPLES {
        for m in map.iter_mut() {
            *m = rng.random_range(0..n);
        }
        if edges.iter().all(|&(a, b)| g.has_edge(map[a], map[b])) {
            hits += 1;
        }
    }
    GraphDensity {
        value: hits as f64 / MAPPING_SAMPLES as f64,
        exact: false,
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Summarises a non-empty `values`; the standard error uses the `n − 1`
    /// variance and is 0 for a single value.
    pub fn from_values(values: &[f64]) -> Estimate {
        let k = values.len() as f64;
        // shifted by the first value so identical inputs give that value exactly
        let shift = values[0];
        let mean = shift + values.iter().map(|x| x - shift).sum::<f64>() / k;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr }
    }
}

/// Monte Carlo mean and standard error of `t(f, G(n, W))` over `reps`
/// replicates. Replicate `r` samples with `seed.derive(r)` and, if the
/// density must be estimated, draws its mappings from the same stream.
pub fn density_convergence(
    w: &StepKernel,
    f: &Graph,
    n: usize,
    reps: usize,
    seed: Seed,
) -> Result<Estimate> {
    Ok(Estimate::from_values(&density_replicates(w, f, n, reps, seed)?))
}

pub(crate) fn density_replicates(
    w: &StepKernel,
    f: &Graph,
    n: usize,
    reps: usize,
    seed: Seed,
) -> Result<Vec<f64>> {
    if n == 0 || reps == 0 {
        return Err(Error::InvalidArgument("n and reps must be at least 1".into()));
    }
    Ok(par::map_range(reps, |r| {
        let mut rng = seed.derive(r as u64).rng();
        let g = sample_with(w, n, &mut rng).graph;
        graph_density(f, &g, &mut rng).value
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::hom_density_graph;
    use crate::kernel::{constant_kernel, direct_sum_kernels, make_step_kernel};
    use rand::seq::SliceRandom;

    #[test]
    fn extreme_constants() {
        for seed in 0..5 {
            let s = sample_graph(&constant_kernel(1.0).unwrap(), 5, Seed(seed)).unwrap();
            assert_eq!(s.graph, Graph::complete(5).unwrap());
            let s = sample_graph(&constant_kernel(0.0).unwrap(), 5, Seed(seed)).unwrap();
            assert_eq!(s.graph, Graph::empty(5).unwrap());
        }
        assert!(sample_graph(&constant_kernel(0.5).unwrap(), 0, Seed(1)).is_err());
    }

    #[test]
    fn edge_density_concentrates() {
        let s = sample_graph(&constant_kernel(0.5).unwrap(), 2000, Seed(3)).unwrap();
        assert!((s.graph.edge_density() - 0.5).abs() < 0.01);
    }

    #[test]
    fn deterministic_given_seed() {
        let w = make_step_kernel(vec![0.3, 0.7], vec![vec![0.2, 0.5], vec![0.5, 0.9]]).unwrap();
        let a = sample_graph(&w, 300, Seed(99)).unwrap();
        let b = sample_graph(&w, 300, Seed(99)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = sample_graph(&w, 300, Seed(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn labels_follow_weights() {
        let w = make_step_kernel(vec![0.25, 0.75], vec![vec![0.0; 2]; 2]).unwrap();
        let s = sample_graph(&w, 20_000, Seed(5)).unwrap();
        let ones = s.labels.iter().filter(|&&l| l == 1).count() as f64 / 20_000.0;
        // 4 binomial standard deviations
        assert!((ones - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / 20_000.0).sqrt());
    }

    #[test]
    fn no_edges_across_direct_sum_parts() {
        let a = make_step_kernel(vec![0.5, 0.5], vec![vec![0.3, 0.8], vec![0.8, 0.1]]).unwrap();
        let w = direct_sum_kernels(&[(0.5, a), (0.3, constant_kernel(0.6).unwrap())]).unwrap();
        // blocks 0,1 | 2 | deficit 3
        let part = |b: usize| match b {
            0 | 1 => 0,
            2 => 1,
            _ => 2,
        };
        for seed in 0..10 {
            let s = sample_graph(&w, 200, Seed(seed)).unwrap();
            for (i, j) in s.graph.edges() {
                assert_eq!(part(s.labels[i]), part(s.labels[j]));
                assert_ne!(part(s.labels[i]), 2);
            }
        }
    }

    #[test]
    fn stats_examples() {
        let st = graph_component_stats(&Graph::complete(6).unwrap());
        assert_eq!(st.largest_fraction, 1.0);
        assert_eq!(st.isolated_fraction, 0.0);
        assert!(!st.vertex1_isolated);
        let st = graph_component_stats(&Graph::empty(8).unwrap());
        assert_eq!(st.largest_fraction, 1.0 / 8.0);
        assert_eq!(st.isolated_fraction, 1.0);
        assert!(st.vertex1_isolated);
        assert_eq!(st.sorted_densities.len(), 8);
    }

    #[test]
    fn stats_of_a_disconnected_limit() {
        let w = direct_sum_kernels(&[
            (0.6, constant_kernel(0.5).unwrap()),
            (0.3, constant_kernel(0.7).unwrap()),
        ])
        .unwrap();
        for seed in 0..3 {
            let st = component_stats(&sample_graph(&w, 2000, Seed(seed)).unwrap());
            assert!((st.sorted_densities[0] - 0.6).abs() < 0.05);
            assert!((st.sorted_densities[1] - 0.3).abs() < 0.05);
            assert!((st.isolated_fraction - 0.1).abs() < 0.03);
        }
    }

    #[test]
    fn statistics_are_relabeling_invariant() {
        let w = direct_sum_kernels(&[(0.5, constant_kernel(0.2).unwrap())]).unwrap();
        let s = sample_graph(&w, 150, Seed(8)).unwrap();
        let mut perm: Vec<usize> = (0..150).collect();
        perm.shuffle(&mut Seed(9).rng());
        let h = s.graph.relabel(&perm).unwrap();
        let (a, b) = (graph_component_stats(&s.graph), graph_component_stats(&h));
        assert_eq!(a.sorted_densities, b.sorted_densities);
        assert_eq!(a.isolated_fraction, b.isolated_fraction);
        assert_eq!(s.graph.edge_density(), h.edge_density());
        let k3 = Graph::complete(3).unwrap();
        assert_eq!(hom_count(&k3, &s.graph), hom_count(&k3, &h));
    }

    #[test]
    fn subgraph_frequency_examples() {
        let p = 0.3;
        let w = constant_kernel(p).unwrap();
        let k2 = Graph::complete(2).unwrap();
        let reps = 4000;
        let freq = subgraph_frequency(&w, &k2, 2, reps, Seed(1)).unwrap();
        assert!((freq - p).abs() < 4.0 * (p * (1.0 - p) / reps as f64).sqrt());
        let e2 = Graph::empty(2).unwrap();
        assert_eq!(subgraph_frequency(&w, &e2, 2, 100, Seed(1)).unwrap(), 1.0);
        assert!(subgraph_frequency(&w, &e2, 3, 100, Seed(1)).is_err());
    }

    #[test]
    fn graph_density_routes_agree() {
        let s = sample_graph(&constant_kernel(0.4).unwrap(), 40, Seed(2)).unwrap();
        let mut rng = Seed(0).rng();
        for f in crate::catalog::TestGraphCatalog::cached(4).unwrap().graphs() {
            let d = graph_density(f, &s.graph, &mut rng);
            assert!(d.exact);
            assert!((d.value - hom_density_graph(f, &s.graph).unwrap()).abs() < 1e-15);
        }
        // 200^4 is over budget, so a 4-vertex test graph is estimated
        let big = sample_graph(&constant_kernel(0.5).unwrap(), 200, Seed(2)).unwrap();
        let c4 = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let d = graph_density(&c4, &big.graph, &mut rng);
        assert!(!d.exact);
        assert!((d.value - 0.0625).abs() < 0.01);
    }

    #[test]
    fn density_convergence_examples() {
        let k2 = Graph::complete(2).unwrap();
        let est = density_convergence(&constant_kernel(0.5).unwrap(), &k2, 200, 20, Seed(4)).unwrap();
        assert!((est.mean - 0.5).abs() < 0.02);
        let est = density_convergence(&constant_kernel(0.0).unwrap(), &k2, 50, 5, Seed(4)).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
        let one = constant_kernel(1.0).unwrap();
        let w = direct_sum_kernels(&[(0.5, one.clone()), (0.5, one)]).unwrap();
        let k3 = Graph::complete(3).unwrap();
        let est = density_convergence(&w, &k3, 200, 20, Seed(4)).unwrap();
        assert!((est.mean - 0.25).abs() < 0.02);
    }

    /// Exact `E t(F, G(n, W))`: sum over the ways vertices of `F` can
    /// coincide under a random map. A merge pattern with `c` classes occurs
    /// with weight `n(n−1)⋯(n−c+1) / n^v(F)` and contributes the density of
    /// the simple quotient graph, or 0 if an edge falls inside a class.
    fn finite_n_expectation(f: &Graph, w: &StepKernel, n: usize) -> f64 {
        let k = f.n();
        let mut total = 0.0;
        let mut class = vec![0usize; k];
        loop {
            let c = class.iter().max().unwrap() + 1;
            let inside = f.edges().any(|(a, b)| class[a] == class[b]);
            if !inside {
                let mut quotient: Vec<(usize, usize)> = f
                    .edges()
                    .map(|(a, b)| (class[a].min(class[b]), class[a].max(class[b])))
                    .collect();
                quotient.sort_unstable();
                quotient.dedup();
                let q = Graph::from_edges(c, quotient).unwrap();
                let falling: f64 = (0..c).map(|i| (n - i) as f64).product();
                total += falling / (n as f64).powi(k as i32)
                    * crate::kernel::hom_density_kernel(&q, w).unwrap();
            }
            // next restricted growth string
            let mut i = k;
            loop {
                if i == 1 {
                    return total;
                }
                i -= 1;
                let bound = class[..i].iter().max().unwrap() + 1;
                if class[i] < bound {
                    class[i] += 1;
                    class[i + 1..].fill(0);
                    break;
                }
            }
        }
    }

    #[test]
    fn finite_n_expectation_oracle() {
        // E t(K2, G(n)) = (n−1)/n · t(K2, W)
        let w = constant_kernel(0.5).unwrap();
        let k2 = Graph::complete(2).unwrap();
        assert!((finite_n_expectation(&k2, &w, 10) - 0.45).abs() < 1e-15);
        // E t(P3, G(n)) = ((n−1)(n−2) p² + (n−1) p) / n²
        let p3 = Graph::path(3).unwrap();
        let want = (9.0 * 8.0 * 0.25 + 9.0 * 0.5) / 100.0;
        assert!((finite_n_expectation(&p3, &w, 10) - want).abs() < 1e-15);
    }

    #[test]
    fn small_graph_densities_match_limit() {
        // The mean over 200 replicates at n=200 sits within 4 standard errors
        // of the finite-n expectation. The gap to t(F, W) itself is O(1/n),
        // which here is several standard errors.
        let n = 200;
        let w = make_step_kernel(vec![0.4, 0.6], vec![vec![0.7, 0.2], vec![0.2, 0.5]]).unwrap();
        for f in crate::catalog::TestGraphCatalog::cached(3).unwrap().graphs() {
            let limit = crate::kernel::hom_density_kernel(f, &w).unwrap();
            let target = finite_n_expectation(f, &w, n);
            assert!((target - limit).abs() <= 3.0 / n as f64);
            let est = density_convergence(&w, f, n, 200, Seed(17)).unwrap();
            assert!(
                (est.mean - target).abs() <= 4.0 * est.stderr,
                "{f:?}: {} vs {target} (se {})",
                est.mean,
                est.stderr
            );
        }
    }

    #[test]
    fn estimate_summary() {
        let e = Estimate::from_values(&[1.0, 2.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!((e.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sample_json_form() {
        let s = sample_graph(&constant_kernel(1.0).unwrap(), 3, Seed(0)).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"{"n":3,"edges":[[0,1],[0,2],[1,2]],"labels":[0,0,0]}"#);
        assert_eq!(serde_json::from_str::<LabeledSample>(&js).unwrap(), s);
    }
}
