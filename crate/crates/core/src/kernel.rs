//! Step kernels (block graphons): a finite partition of the ground space into
//! blocks of measure `μ_i`, with the kernel constant on each block pair.
//!
//! Because every quantity here is a finite sum, connectedness and component
//! decomposition are decided exactly: a block pair is "a.e. zero" iff its
//! value is exactly `0.0`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::catalog::{TestGraphCatalog, DEFAULT_CATALOG_K};
use crate::error::{check_budget, Error, Result};
use crate::graph::Graph;
use crate::limit::DensityFingerprint;

/// Tolerance on `Σ μ_i = 1` and on `Σ α_i ≤ 1`.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;
/// Upper bound on `m^v(f)` block assignments in [`hom_density_kernel`].
pub const KERNEL_ENUMERATION_BUDGET: u128 = 100_000_000;

/// A symmetric step function on a finite probability space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelJson", into = "KernelJson")]
pub struct StepKernel {
    weights: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KernelJson {
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<KernelJson> for StepKernel {
    type Error = Error;

    fn try_from(raw: KernelJson) -> Result<Self> {
        make_step_kernel(raw.weights, raw.values)
    }
}

impl From<StepKernel> for KernelJson {
    fn from(w: StepKernel) -> Self {
        KernelJson {
            values: w.rows(),
            weights: w.weights,
        }
    }
}

/// Validates and builds a step kernel.
///
/// Zero-weight blocks are dropped (they are null sets). The remaining
/// weights must sum to 1 within [`WEIGHT_TOLERANCE`] and are renormalised.
#[allow(clippy::needless_range_loop)]
pub fn make_step_kernel(weights: Vec<f64>, values: Vec<Vec<f64>>) -> Result<StepKernel> {
    let m = weights.len();
    if m == 0 {
        return Err(Error::InvalidKernel("no blocks".into()));
    }
    if values.len() != m || values.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidKernel(format!(
            "value matrix must be {m}x{m} to match the weights"
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidKernel(format!("block weight {w} is negative or not finite")));
    }
    for i in 0..m {
        for j in 0..m {
            let v = values[i][j];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidKernel(format!(
                    "value {v} at ({i},{j}) is outside [0,1]"
                )));
            }
            if v != values[j][i] {
                return Err(Error::InvalidKernel(format!(
                    "asymmetric values at ({i},{j}): {v} vs {}",
                    values[j][i]
                )));
            }
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::InvalidKernel(format!("block weights sum to {sum}, not 1")));
    }
    let keep: Vec<usize> = (0..m).filter(|&i| weights[i] > 0.0).collect();
    let weights = keep.iter().map(|&i| weights[i] / sum).collect();
    let values = keep
        .iter()
        .flat_map(|&i| keep.iter().map(move |&j| (i, j)))
        .map(|(i, j)| values[i][j])
        .collect();
    Ok(StepKernel { weights, values })
}

/// The constant kernel `W ≡ p`; `p = 0` represents the zero limit.
pub fn constant_kernel(p: f64) -> Result<StepKernel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidKernel(format!("constant {p} is outside [0,1]")));
    }
    Ok(StepKernel {
        weights: vec![1.0],
        values: vec![p],
    })
}

/// The zero kernel on a single block.
pub fn zero_kernel() -> StepKernel {
    StepKernel {
        weights: vec![1.0],
        values: vec![0.0],
    }
}

impl StepKernel {
    /// Number of blocks `m`.
    pub fn blocks(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.blocks() + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.blocks()).map(<[f64]>::to_vec).collect()
    }

    /// Whether every value is zero, i.e. `W = 0` a.e.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// The same kernel with block `i` moved to position `perm[i]`.
    pub fn permute_blocks(&self, perm: &[usize]) -> Result<StepKernel> {
        let m = self.blocks();
        if perm.len() != m {
            return Err(Error::SizeMismatch(format!(
                "permutation of length {} for {m} blocks",
                perm.len()
            )));
        }
        let mut inv = vec![usize::MAX; m];
        for (i, &p) in perm.iter().enumerate() {
            if p >= m || inv[p] != usize::MAX {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
            inv[p] = i;
        }
        Ok(StepKernel {
            weights: inv.iter().map(|&i| self.weights[i]).collect(),
            values: (0..m * m)
                .map(|idx| self.value(inv[idx / m], inv[idx % m]))
                .collect(),
        })
    }

    /// The kernel restricted to `blocks`, with weights renormalised by their
    /// total measure.
    fn restrict(&self, blocks: &[usize]) -> StepKernel {
        let total: f64 = blocks.iter().map(|&b| self.weights[b]).sum();
        StepKernel {
            weights: blocks.iter().map(|&b| self.weights[b] / total).collect(),
            values: blocks
                .iter()
                .flat_map(|&i| blocks.iter().map(move |&j| (i, j)))
                .map(|(i, j)| self.value(i, j))
                .collect(),
        }
    }
}

/// Block-diagonal direct sum `⊕ α_i W_i`.
///
/// The blocks of term `i` get weights `α_i μ_ij` and all cross-term values
/// are zero. Terms with `α_i = 0` are dropped. If `Σ α_i < 1`, one zero
/// block of weight `1 − Σ α_i` is appended; with no terms at all the result
/// is the zero kernel.
pub fn direct_sum_kernels(terms: &[(f64, StepKernel)]) -> Result<StepKernel> {
    if let Some((a, _)) = terms.iter().find(|(a, _)| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidArgument(format!("direct-sum weight {a} is negative")));
    }
    let total: f64 = terms.iter().map(|(a, _)| a).sum();
    if total > 1.0 + WEIGHT_TOLERANCE {
        return Err(Error::InvalidArgument(format!("direct-sum weights sum to {total} > 1")));
    }
    let live: Vec<&(f64, StepKernel)> = terms.iter().filter(|(a, _)| *a > 0.0).collect();
    let deficit = 1.0 - total;
    let with_deficit = deficit > WEIGHT_TOLERANCE || live.is_empty();
    let m: usize = live.iter().map(|(_, w)| w.blocks()).sum::<usize>() + usize::from(with_deficit);
    let mut weights = Vec::with_capacity(m);
    let mut values = vec![0.0; m * m];
    let mut offset = 0;
    for (alpha, w) in &live {
        let b = w.blocks();
        for i in 0..b {
            weights.push(alpha * w.weights[i]);
            for j in 0..b {
                values[(offset + i) * m + offset + j] = w.value(i, j);
            }
        }
        offset += b;
    }
    if with_deficit {
        weights.push(if live.is_empty() { 1.0 } else { deficit });
    }
    let sum: f64 = weights.iter().sum();
    Ok(StepKernel {
        weights: weights.into_iter().map(|w| w / sum).collect(),
        values,
    })
}

/// Block-level components: union-find over blocks joined by positive
/// off-diagonal values. Classes are listed by smallest block.
fn block_classes(w: &StepKernel) -> Vec<Vec<usize>> {
    let m = w.blocks();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..m {
        for j in i + 1..m {
            if w.value(i, j) > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m];
    for b in 0..m {
        let r = find(&mut parent, b);
        if slot[r] == usize::MAX {
            slot[r] = classes.len();
            classes.push(Vec::new());
        }
        classes[slot[r]].push(b);
    }
    classes
}

/// Whether the kernel is connected: no block-union `A` with
/// `0 < μ(A) < 1` has zero values across `A × (S∖A)`, and `W` is not a.e.
/// zero. For step kernels this holds iff either there is a single block with
/// a positive value, or there are several blocks and the graph of positive
/// off-diagonal values is connected.
pub fn is_connected_kernel(w: &StepKernel) -> bool {
    if w.blocks() == 1 {
        w.value(0, 0) > 0.0
    } else {
        block_classes(w).len() == 1
    }
}

/// One component of a decomposition: a connected kernel carried with mass
/// `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub alpha: f64,
    pub kernel: StepKernel,
}

/// A kernel written as `⊕ α_i W_i` with connected `W_i`, plus the zero mass
/// `α₀` that carries no component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDecomposition {
    pub parts: Vec<Part>,
    pub deficit: f64,
}

impl ComponentDecomposition {
    /// `(α_i, W_i)` pairs, in order.
    pub fn terms(&self) -> Vec<(f64, StepKernel)> {
        self.parts.iter().map(|p| (p.alpha, p.kernel.clone())).collect()
    }

    /// Reassembles `⊕ α_i W_i` (with the deficit as a zero block).
    pub fn recompose(&self) -> Result<StepKernel> {
        direct_sum_kernels(&self.terms())
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.parts.iter().map(|p| p.alpha).collect()
    }
}

/// Splits a kernel into its connected components.
///
/// Each block class with several blocks, and each single block with a
/// positive diagonal value, becomes a part; isolated blocks with a zero
/// diagonal contribute to the deficit. Parts are sorted by decreasing
/// `alpha`; equal alphas are ordered by their fingerprint on the default
/// catalog.
pub fn decompose_kernel(w: &StepKernel) -> ComponentDecomposition {
    let mut parts = Vec::new();
    let mut deficit = 0.0;
    for class in block_classes(w) {
        if class.len() == 1 && w.value(class[0], class[0]) == 0.0 {
            deficit += w.weights[class[0]];
        } else {
            let alpha = class.iter().map(|&b| w.weights[b]).sum();
            parts.push(Part {
                alpha,
                kernel: w.restrict(&class),
            });
        }
    }
    sort_parts(&mut parts);
    ComponentDecomposition { parts, deficit }
}

/// Alphas closer than this are ordered by fingerprint instead.
const ALPHA_TIE_TOLERANCE: f64 = 1e-12;

fn sort_parts(parts: &mut [Part]) {
    parts.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));
    let mut start = 0;
    while start < parts.len() {
        let mut end = start + 1;
        while end < parts.len() && parts[end - 1].alpha - parts[end].alpha <= ALPHA_TIE_TOLERANCE {
            end += 1;
        }
        if end - start > 1 {
            order_ties(&mut parts[start..end]);
        }
        start = end;
    }
}

fn order_ties(group: &mut [Part]) {
    let catalog = TestGraphCatalog::cached(DEFAULT_CATALOG_K).expect("default catalog size is valid");
    let mut keyed: Vec<(Vec<f64>, Part)> = group
        .iter()
        .map(|p| {
            // parts too large to fingerprint fall back to their raw block data
            let key = match fingerprint(&p.kernel, catalog) {
                Ok(fp) => fp.values,
                Err(_) => p.kernel.weights.iter().chain(&p.kernel.values).copied().collect(),
            };
            (key, p.clone())
        })
        .collect();
    keyed.sort_by(|(ka, _), (kb, _)| lex_cmp(ka, kb));
    for (slot, (_, p)) in group.iter_mut().zip(keyed) {
        *slot = p;
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Exact homomorphism density
/// `t(f, W) = Σ_φ Π_v μ_φ(v) Π_{ij ∈ E(f)} W(φ(i), φ(j))` over all block
/// assignments `φ: V(f) → blocks`.
pub fn hom_density_kernel(f: &Graph, w: &StepKernel) -> Result<f64> {
    check_budget("hom_density_kernel", w.blocks(), f.n(), KERNEL_ENUMERATION_BUDGET)?;
    let order = crate::graph::bfs_order(f);
    let mut position = vec![0usize; f.n()];
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
    let mut assign = vec![0usize; f.n()];
    Ok(kernel_sum(w, &back, &mut assign, 0))
}

fn kernel_sum(w: &StepKernel, back: &[Vec<usize>], assign: &mut [usize], depth: usize) -> f64 {
    if depth == back.len() {
        return 1.0;
    }
    let mut total = 0.0;
    for b in 0..w.blocks() {
        let mut factor = w.weights[b];
        for &q in &back[depth] {
            factor *= w.value(assign[q], b);
        }
        if factor == 0.0 {
            continue;
        }
        assign[depth] = b;
        total += factor * kernel_sum(w, back, assign, depth + 1);
    }
    total
}

/// The standard step kernel of a finite graph: `n` blocks of weight `1/n`,
/// value 1 on edges and 0 elsewhere.
pub fn graph_as_kernel(g: &Graph) -> StepKernel {
    let n = g.n();
    let mut values = vec![0.0; n * n];
    for (i, j) in g.edges() {
        values[i * n + j] = 1.0;
        values[j * n + i] = 1.0;
    }
    StepKernel {
        weights: vec![1.0 / n as f64; n],
        values,
    }
}

/// Densities `t(F, W)` for every `F` in the catalog, in catalog order.
pub fn fingerprint(w: &StepKernel, catalog: &TestGraphCatalog) -> Result<DensityFingerprint> {
    let values = catalog
        .graphs()
        .iter()
        .map(|f| hom_density_kernel(f, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityFingerprint {
        catalog_k: catalog.max_vertices(),
        values,
    })
}
