//! Balanced minimum cuts and edge-noise perturbation.
//!
//! A partition is `δ`-balanced when both sides hold at least `⌈δn⌉`
//! vertices. The exact search enumerates all bipartitions for `n ≤ 20`;
//! above that a three-stage heuristic is used: component packing, spectral
//! bisection, then single-vertex local refinement.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{cut_size, Graph, Partition2};
use crate::par;
use crate::rng::Seed;

/// Largest vertex count for [`min_balanced_cut_exact`]; the heuristic
/// delegates to the exact search at or below it.
pub const EXACT_CUT_MAX_VERTICES: usize = 20;
/// Power-iteration cap for the spectral stage.
pub const POWER_ITERATIONS: usize = 200;
/// Relative-change stopping threshold for the spectral stage.
pub const POWER_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutMethod {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedCutResult {
    #[serde(rename = "side")]
    pub partition: Partition2,
    pub cut_edges: usize,
    /// `cut_edges / n²`.
    pub density: f64,
    /// `min(|V'|, |V''|) / n`.
    pub balance: f64,
    pub method: CutMethod,
}

impl BalancedCutResult {
    fn new(partition: Partition2, cut_edges: usize, method: CutMethod) -> Self {
        let n = partition.len();
        BalancedCutResult {
            density: cut_edges as f64 / (n * n) as f64,
            balance: partition.smaller_side() as f64 / n as f64,
            partition,
            cut_edges,
            method,
        }
    }
}

/// Minimum side size `⌈δn⌉` (at least 1), after checking that `δ ∈ (0, 1/2]`
/// and that two such sides fit in `n` vertices.
pub fn min_side_size(n: usize, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidArgument(format!("balance δ={delta} outside (0, 0.5]")));
    }
    // slack so that e.g. 0.3 * 10 does not round up to 4
    let need = ((delta * n as f64) - 1e-9).ceil().max(1.0) as usize;
    if 2 * need > n {
        return Err(Error::Infeasible(format!(
            "both sides need {need} of {n} vertices"
        )));
    }
    Ok(need)
}

/// Exact minimum of the cut size over all `δ`-balanced bipartitions.
pub fn min_balanced_cut_exact(g: &Graph, delta: f64) -> Result<BalancedCutResult> {
    let n = g.n();
    if n > EXACT_CUT_MAX_VERTICES {
        return Err(Error::BudgetExceeded {
            what: "min_balanced_cut_exact",
            required: 1u128 << n,
            bound: 1u128 << EXACT_CUT_MAX_VERTICES,
        });
    }
    let need = min_side_size(n, delta)?;
    let adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    // Vertex 0 stays on side 0. The top `high` vertices are fixed per chunk
    // and vertices 1..=low are walked in Gray-code order. Ties go to the
    // smallest mask so the result does not depend on chunking.
    let high = (n - 1).saturating_sub(12).min(6);
    let low = n - 1 - high;
    let chunk_best = |prefix: usize| -> Option<(i64, u32)> {
        let mut side1 = (prefix as u32) << (low + 1);
        let mut ones = side1.count_ones() as usize;
        let mut cut: i64 = (0..n)
            .filter(|&v| side1 >> v & 1 == 1)
            .map(|v| (adj[v] & !side1).count_ones() as i64)
            .sum();
        let mut best: Option<(i64, u32)> = None;
        let mut consider = |cut: i64, ones: usize, side1: u32| {
            if ones >= need && n - ones >= need && best.is_none_or(|b| (cut, side1) < b) {
                best = Some((cut, side1));
            }
        };
        consider(cut, ones, side1);
        for step in 1u64..(1u64 << low) {
            let v = step.trailing_zeros() as usize + 1;
            let bit = 1u32 << v;
            let on_one = side1 & bit != 0;
            let to_one = (adj[v] & side1).count_ones() as i64;
            let to_zero = (adj[v] & !side1).count_ones() as i64;
            // neighbours on v's current side become cut edges, the others stop being cut
            if on_one {
                cut += to_one - to_zero;
                ones -= 1;
            } else {
                cut += to_zero - to_one;
                ones += 1;
            }
            side1 ^= bit;
            consider(cut, ones, side1);
        }
        best
    };
    let best = par::map_range(1 << high, chunk_best).into_iter().flatten().min();
    let (cut, mask) = best.expect("feasibility checked");
    let partition = Partition2::from_fn(n, |v| mask >> v & 1 == 1);
    Ok(BalancedCutResult::new(partition, cut as usize, CutMethod::Exact))
}

/// Balanced cut search: exact for `n ≤ 20`, otherwise [`heuristic_search`].
pub fn balanced_cut_heuristic(g: &Graph, delta: f64, seed: Seed) -> Result<BalancedCutResult> {
    if g.n() < 4 {
        return Err(Error::InvalidArgument("balanced cut search needs n ≥ 4".into()));
    }
    if g.n() <= EXACT_CUT_MAX_VERTICES {
        min_balanced_cut_exact(g, delta)
    } else {
        heuristic_search(g, delta, seed)
    }
}

/// The three heuristic stages without the exact fallback.
///
/// 1. Component packing: whole components, largest first, go to the lighter
///    side. A balanced packing has cut 0 and is returned immediately.
/// 2. Spectral bisection: power iteration on `(I + D^{-1/2} A D^{-1/2}) / 2`
///    deflated against `D^{1/2} 1`, followed by the best balanced sweep cut
///    of the vertices sorted by `D^{-1/2} x`.
/// 3. Local refinement: single-vertex moves that lower the cut while keeping
///    both sides balanced, until none remains.
///
/// The best balanced partition seen is returned.
pub fn heuristic_search(g: &Graph, delta: f64, seed: Seed) -> Result<BalancedCutResult> {
    let n = g.n();
    if n < 4 {
        return Err(Error::InvalidArgument("balanced cut search needs n ≥ 4".into()));
    }
    let need = min_side_size(n, delta)?;
    if let Some(p) = pack_components(g, need) {
        return Ok(BalancedCutResult::new(p, 0, CutMethod::Heuristic));
    }
    let order = spectral_order(g, seed);
    let (spectral, spectral_cut) = sweep_cut(g, &order, need);
    let (refined, refined_cut) = refine(g, spectral.clone(), spectral_cut, need);
    let (best, cut) = if refined_cut <= spectral_cut {
        (refined, refined_cut)
    } else {
        (spectral, spectral_cut)
    };
    debug_assert_eq!(cut_size(g, &best).ok(), Some(cut));
    Ok(BalancedCutResult::new(best, cut, CutMethod::Heuristic))
}

/// Greedy packing of whole components; `None` if the result is unbalanced.
pub fn pack_components(g: &Graph, need: usize) -> Option<Partition2> {
    let mut comps = g.components();
    // stable: equal sizes keep smallest-vertex order
    comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let mut side = vec![0u8; g.n()];
    let mut load = [0usize; 2];
    for comp in comps {
        let s = usize::from(load[1] < load[0]);
        load[s] += comp.len();
        for v in comp {
            side[v] = s as u8;
        }
    }
    (load[0].min(load[1]) >= need).then(|| Partition2::new(side).expect("sides are 0/1"))
}

fn spectral_order(g: &Graph, seed: Seed) -> Vec<usize> {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| match g.degree(v) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect();
    let trivial: Vec<f64> = {
        let raw: Vec<f64> = (0..n).map(|v| (g.degree(v) as f64).sqrt()).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        raw.into_iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }).collect()
    };
    let deflate_normalize = |x: &mut [f64]| {
        let dot: f64 = x.iter().zip(&trivial).map(|(a, b)| a * b).sum();
        for (xi, ti) in x.iter_mut().zip(&trivial) {
            *xi -= dot * ti;
        }
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|a| *a /= norm);
        }
    };
    let mut rng = seed.rng();
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    deflate_normalize(&mut x);
    let mut y = vec![0.0; n];
    for _ in 0..POWER_ITERATIONS {
        for v in 0..n {
            let s: f64 = g.neighbors(v).iter().map(|&u| x[u] * inv_sqrt[u]).sum();
            y[v] = 0.5 * (x[v] + inv_sqrt[v] * s);
        }
        deflate_normalize(&mut y);
        let change = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        std::mem::swap(&mut x, &mut y);
        if change < POWER_TOLERANCE {
            break;
        }
    }
    let score: Vec<f64> = (0..n)
        .map(|v| if inv_sqrt[v] > 0.0 { x[v] * inv_sqrt[v] } else { x[v] })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    order
}

/// Best balanced prefix split of `order`: side 1 is the first `k` vertices
/// for `need ≤ k ≤ n − need`.
fn sweep_cut(g: &Graph, order: &[usize], need: usize) -> (Partition2, usize) {
    let n = g.n();
    let mut side = vec![0u8; n];
    let mut cut = 0i64;
    let mut best = (i64::MAX, 0usize);
    for (k, &v) in order.iter().enumerate().take(n - need) {
        let (mut same, mut other) = (0i64, 0i64);
        for &u in g.neighbors(v) {
            if side[u] == 1 {
                other += 1;
            } else {
                same += 1;
            }
        }
        cut += same - other;
        side[v] = 1;
        if k + 1 >= need && cut < best.0 {
            best = (cut, k + 1);
        }
    }
    let members = &order[..best.1];
    let mut side = vec![0u8; n];
    for &v in members {
        side[v] = 1;
    }
    (Partition2::new(side).expect("sides are 0/1"), best.0 as usize)
}

fn refine(g: &Graph, p: Partition2, cut: usize, need: usize) -> (Partition2, usize) {
    let n = g.n();
    let mut side = p.sides().to_vec();
    let mut size = [0usize; 2];
    for &s in &side {
        size[s as usize] += 1;
    }
    let mut external: Vec<i64> = (0..n)
        .map(|v| g.neighbors(v).iter().filter(|&&u| side[u] != side[v]).count() as i64)
        .collect();
    let mut cut = cut as i64;
    loop {
        let mut moved = false;
        for v in 0..n {
            let from = side[v] as usize;
            let gain = 2 * external[v] - g.degree(v) as i64;
            if gain > 0 && size[from] > need {
                side[v] ^= 1;
                size[from] -= 1;
                size[1 - from] += 1;
                cut -= gain;
                external[v] = g.degree(v) as i64 - external[v];
                for &u in g.neighbors(v) {
                    external[u] += if side[u] == side[v] { -1 } else { 1 };
                }
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    (Partition2::new(side).expect("sides are 0/1"), cut as usize)
}

/// Independently adds each non-edge with probability `add_rate` and deletes
/// each edge with probability `del_rate`, visiting pairs in lexicographic
/// order. Rates of exactly 0 or 1 consume no randomness.
pub fn perturb(g: &Graph, add_rate: f64, del_rate: f64, seed: Seed) -> Result<Graph> {
    for r in [add_rate, del_rate] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidArgument(format!("rate {r} outside [0,1]")));
        }
    }
    let n = g.n();
    let mut rng = seed.rng();
    let mut flip = |rate: f64| rate >= 1.0 || (rate > 0.0 && rng.random::<f64>() < rate);
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        let mut existing = g.neighbors(i).iter().copied().filter(|&j| j > i).peekable();
        for j in i + 1..n {
            let is_edge = existing.next_if_eq(&j).is_some();
            let keep = if is_edge { !flip(del_rate) } else { flip(add_rate) };
            if keep {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    Ok(Graph::from_sorted_adjacency(adj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::direct_sum_graphs;
    use crate::kernel::{constant_kernel, direct_sum_kernels};
    use crate::sampler::sample_graph;

    fn k(n: usize) -> Graph {
        Graph::complete(n).unwrap()
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        sample_graph(&constant_kernel(p).unwrap(), n, Seed(seed)).unwrap().graph
    }

    fn brute_min_cut(g: &Graph, need: usize) -> usize {
        let n = g.n();
        (0..1usize << n)
            .map(|m| Partition2::from_fn(n, |v| m >> v & 1 == 1))
            .filter(|p| p.smaller_side() >= need)
            .map(|p| cut_size(g, &p).unwrap())
            .min()
            .unwrap()
    }

    #[test]
    fn side_size_rounding() {
        assert_eq!(min_side_size(10, 0.3).unwrap(), 3);
        assert_eq!(min_side_size(1000, 0.3).unwrap(), 300);
        assert_eq!(min_side_size(7, 0.3).unwrap(), 3);
        assert!(min_side_size(5, 0.5).is_err());
        assert!(min_side_size(10, 0.0).is_err());
        assert!(min_side_size(10, 0.6).is_err());
    }

    #[test]
    fn exact_examples() {
        let two = direct_sum_graphs(&k(3), &k(3));
        let r = min_balanced_cut_exact(&two, 0.3).unwrap();
        assert_eq!(r.cut_edges, 0);
        assert_eq!(r.balance, 0.5);
        let r = min_balanced_cut_exact(&k(4), 0.5).unwrap();
        assert_eq!(r.cut_edges, 4);
        assert_eq!(r.density, 0.25);
        assert_eq!(r.method, CutMethod::Exact);
        let r = min_balanced_cut_exact(&direct_sum_graphs(&k(2), &k(2)), 0.5).unwrap();
        assert_eq!(r.cut_edges, 0);
        assert!(min_balanced_cut_exact(&Graph::empty(21).unwrap(), 0.3).is_err());
        assert!(min_balanced_cut_exact(&k(5), 0.5).unwrap_err().to_string().contains("infeasible"));
    }

    #[test]
    fn exact_matches_brute_force() {
        for seed in 0..12 {
            let g = random_graph(10, 0.4, seed);
            for delta in [0.1, 0.3, 0.5] {
                let r = min_balanced_cut_exact(&g, delta).unwrap();
                let need = min_side_size(10, delta).unwrap();
                assert_eq!(r.cut_edges, brute_min_cut(&g, need));
                assert_eq!(cut_size(&g, &r.partition).unwrap(), r.cut_edges);
                assert!(r.partition.smaller_side() >= need);
            }
        }
    }

    #[test]
    fn chunked_exact_matches_brute_force() {
        for seed in 0..2 {
            let g = random_graph(16, 0.3, seed);
            let r = min_balanced_cut_exact(&g, 0.3).unwrap();
            assert_eq!(r.cut_edges, brute_min_cut(&g, 5));
            assert_eq!(cut_size(&g, &r.partition).unwrap(), r.cut_edges);
        }
    }

    #[test]
    fn exact_is_monotone_in_delta() {
        for seed in 0..10 {
            let g = random_graph(14, 0.3, 100 + seed);
            let cuts: Vec<usize> = [0.1, 0.2, 0.3, 0.4, 0.5]
                .iter()
                .map(|&d| min_balanced_cut_exact(&g, d).unwrap().cut_edges)
                .collect();
            assert!(cuts.windows(2).all(|w| w[0] <= w[1]), "{cuts:?}");
        }
    }

    #[test]
    fn heuristic_never_beats_exact() {
        for seed in 0..40 {
            let n = 8 + (seed as usize % 9);
            let g = if seed % 3 == 0 {
                let w = direct_sum_kernels(&[
                    (0.5, constant_kernel(0.6).unwrap()),
                    (0.5, constant_kernel(0.6).unwrap()),
                ])
                .unwrap();
                sample_graph(&w, n, Seed(seed)).unwrap().graph
            } else {
                random_graph(n, 0.35, seed)
            };
            let exact = min_balanced_cut_exact(&g, 0.3).unwrap();
            let heur = heuristic_search(&g, 0.3, Seed(seed)).unwrap();
            assert!(heur.density >= exact.density);
            assert!(heur.partition.smaller_side() >= min_side_size(n, 0.3).unwrap());
            assert_eq!(cut_size(&g, &heur.partition).unwrap(), heur.cut_edges);
            if pack_components(&g, min_side_size(n, 0.3).unwrap()).is_some() {
                assert_eq!(heur.density, exact.density);
            }
        }
    }

    #[test]
    fn dispatches_to_exact_for_small_graphs() {
        let r = balanced_cut_heuristic(&k(6), 0.5, Seed(0)).unwrap();
        assert_eq!(r.method, CutMethod::Exact);
        assert_eq!(r.cut_edges, 9);
        assert!(balanced_cut_heuristic(&k(3), 0.3, Seed(0)).is_err());
    }

    #[test]
    fn packing_finds_planted_split() {
        let w = direct_sum_kernels(&[
            (0.5, constant_kernel(0.5).unwrap()),
            (0.5, constant_kernel(0.5).unwrap()),
        ])
        .unwrap();
        let g = sample_graph(&w, 1000, Seed(1)).unwrap().graph;
        let r = balanced_cut_heuristic(&g, 0.3, Seed(1)).unwrap();
        assert_eq!(r.density, 0.0);
        assert_eq!(r.method, CutMethod::Heuristic);
    }

    #[test]
    fn spectral_finds_noisy_split() {
        let w = direct_sum_kernels(&[
            (0.5, constant_kernel(0.5).unwrap()),
            (0.5, constant_kernel(0.5).unwrap()),
        ])
        .unwrap();
        let n = 600;
        let g = sample_graph(&w, n, Seed(2)).unwrap().graph;
        let noisy = perturb(&g, 1.0 / n as f64, 0.0, Seed(3)).unwrap();
        assert!(noisy.is_connected());
        let r = balanced_cut_heuristic(&noisy, 0.3, Seed(4)).unwrap();
        assert!(r.density <= 0.01, "{}", r.density);
    }

    #[test]
    fn connected_limit_has_large_cuts() {
        let g = random_graph(400, 0.3, 6);
        let r = balanced_cut_heuristic(&g, 0.3, Seed(6)).unwrap();
        assert!(r.density >= 0.04, "{}", r.density);
    }

    #[test]
    fn perturb_examples() {
        let g = random_graph(30, 0.3, 1);
        assert_eq!(perturb(&g, 0.0, 0.0, Seed(1)).unwrap(), g);
        assert_eq!(perturb(&Graph::empty(7).unwrap(), 1.0, 0.0, Seed(1)).unwrap(), k(7));
        assert_eq!(perturb(&k(7), 0.0, 1.0, Seed(1)).unwrap(), Graph::empty(7).unwrap());
        assert!(perturb(&g, 1.5, 0.0, Seed(1)).is_err());
        assert_eq!(perturb(&g, 0.1, 0.2, Seed(5)).unwrap(), perturb(&g, 0.1, 0.2, Seed(5)).unwrap());
    }

    #[test]
    fn perturb_changes_binomially_many_pairs() {
        let g = random_graph(300, 0.4, 2);
        let (add, del) = (0.05, 0.1);
        let h = perturb(&g, add, del, Seed(9)).unwrap();
        let e = g.edge_count() as f64;
        let non = (300 * 299 / 2) as f64 - e;
        let changed = (0..300)
            .flat_map(|i| (i + 1..300).map(move |j| (i, j)))
            .filter(|&(i, j)| g.has_edge(i, j) != h.has_edge(i, j))
            .count() as f64;
        let mean = add * non + del * e;
        let sd = (add * (1.0 - add) * non + del * (1.0 - del) * e).sqrt();
        assert!((changed - mean).abs() <= 4.0 * sd, "{changed} vs {mean} ± {sd}");
    }

    #[test]
    fn json_form() {
        let r = min_balanced_cut_exact(&k(4), 0.5).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.starts_with(r#"{"side":["#));
        assert!(s.contains(r#""cut_edges":4,"density":0.25,"balance":0.5,"method":"exact""#));
    }
}
