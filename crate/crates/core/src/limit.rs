//! Graph limits as values: the zero limit, limits given by a step kernel,
//! and (possibly nested, possibly deficient) direct sums.
//!
//! Every limit is realised as a step kernel before structural queries. The
//! density of a sum is also available through the direct-sum recursion
//! `t(F, ⊕ α_i Γ_i) = Σ α_i^v(F) t(F, Γ_i)` for connected `F`, and
//! [`limit_density`] evaluates both routes and checks that they agree.

use serde::{Deserialize, Serialize};

use crate::catalog::TestGraphCatalog;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{
    decompose_kernel, direct_sum_kernels, fingerprint, hom_density_kernel, zero_kernel,
    ComponentDecomposition, StepKernel, WEIGHT_TOLERANCE,
};

/// Largest allowed disagreement between the two density routes.
pub const DENSITY_ROUTE_TOLERANCE: f64 = 1e-12;
/// Entrywise tolerance for fingerprint equality.
pub const FINGERPRINT_TOLERANCE: f64 = 1e-9;

/// A graph limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LimitJson", into = "LimitJson")]
pub enum GraphLimit {
    /// The limit of the empty graphs.
    Zero,
    Step(StepKernel),
    /// `⊕ α_i Γ_i` with `α_i ≥ 0` and `Σ α_i ≤ 1`.
    Sum(Vec<(f64, GraphLimit)>),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LimitJson {
    Zero,
    Step { kernel: StepKernel },
    Sum { terms: Vec<SumTermJson> },
}

#[derive(Serialize, Deserialize)]
struct SumTermJson {
    alpha: f64,
    limit: GraphLimit,
}

impl TryFrom<LimitJson> for GraphLimit {
    type Error = Error;

    fn try_from(raw: LimitJson) -> Result<Self> {
        Ok(match raw {
            LimitJson::Zero => GraphLimit::Zero,
            LimitJson::Step { kernel } => GraphLimit::Step(kernel),
            LimitJson::Sum { terms } => {
                GraphLimit::sum(terms.into_iter().map(|t| (t.alpha, t.limit)).collect())?
            }
        })
    }
}

impl From<GraphLimit> for LimitJson {
    fn from(l: GraphLimit) -> Self {
        match l {
            GraphLimit::Zero => LimitJson::Zero,
            GraphLimit::Step(kernel) => LimitJson::Step { kernel },
            GraphLimit::Sum(terms) => LimitJson::Sum {
                terms: terms
                    .into_iter()
                    .map(|(alpha, limit)| SumTermJson { alpha, limit })
                    .collect(),
            },
        }
    }
}

impl GraphLimit {
    /// A validated direct sum.
    pub fn sum(terms: Vec<(f64, GraphLimit)>) -> Result<Self> {
        check_weights(&terms)?;
        Ok(GraphLimit::Sum(terms))
    }

    /// The limit `Γ_p` of the constant kernel `p`.
    pub fn constant(p: f64) -> Result<Self> {
        Ok(GraphLimit::Step(crate::kernel::constant_kernel(p)?))
    }

    /// Checks the weight constraints at every level.
    pub fn validate(&self) -> Result<()> {
        if let GraphLimit::Sum(terms) = self {
            check_weights(terms)?;
            for (_, l) in terms {
                l.validate()?;
            }
        }
        Ok(())
    }
}

fn check_weights(terms: &[(f64, GraphLimit)]) -> Result<()> {
    if let Some((a, _)) = terms.iter().find(|(a, _)| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidLimit(format!("sum weight {a} is negative")));
    }
    let total: f64 = terms.iter().map(|(a, _)| a).sum();
    if total > 1.0 + WEIGHT_TOLERANCE {
        return Err(Error::InvalidLimit(format!("sum weights add up to {total} > 1")));
    }
    Ok(())
}

/// Densities of a limit on the catalog of connected test graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFingerprint {
    pub catalog_k: usize,
    pub values: Vec<f64>,
}

impl DensityFingerprint {
    pub fn approx_eq(&self, other: &DensityFingerprint, tol: f64) -> bool {
        self.catalog_k == other.catalog_k
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// A step kernel representing `l`.
pub fn realize(l: &GraphLimit) -> Result<StepKernel> {
    match l {
        GraphLimit::Zero => Ok(zero_kernel()),
        GraphLimit::Step(w) => Ok(w.clone()),
        GraphLimit::Sum(terms) => {
            check_weights(terms)?;
            let realized = terms
                .iter()
                .map(|(a, l)| Ok((*a, realize(l)?)))
                .collect::<Result<Vec<_>>>()?;
            direct_sum_kernels(&realized)
        }
    }
}

/// `t(f, l)` through the direct-sum recursion. Only valid for connected `f`
/// with at least one edge.
pub fn density_by_sum_formula(f: &Graph, l: &GraphLimit) -> Result<f64> {
    if f.edge_count() == 0 || !f.is_connected() {
        return Err(Error::InvalidArgument(
            "the direct-sum recursion needs a connected test graph with an edge".into(),
        ));
    }
    recurse(f, l)
}

fn recurse(f: &Graph, l: &GraphLimit) -> Result<f64> {
    match l {
        GraphLimit::Zero => Ok(0.0),
        GraphLimit::Step(w) => hom_density_kernel(f, w),
        GraphLimit::Sum(terms) => {
            check_weights(terms)?;
            let v = f.n() as i32;
            terms
                .iter()
                .map(|(a, l)| Ok(a.powi(v) * recurse(f, l)?))
                .sum()
        }
    }
}

/// `t(f, l)`. Always evaluated on the realised kernel; for connected `f`
/// with an edge the direct-sum recursion is evaluated as well, and a
/// disagreement beyond [`DENSITY_ROUTE_TOLERANCE`] is reported as an
/// invariant violation.
pub fn limit_density(f: &Graph, l: &GraphLimit) -> Result<f64> {
    let direct = hom_density_kernel(f, &realize(l)?)?;
    if f.edge_count() > 0 && f.is_connected() {
        let by_sum = recurse(f, l)?;
        if (direct - by_sum).abs() > DENSITY_ROUTE_TOLERANCE {
            return Err(Error::Invariant(format!(
                "kernel density {direct} disagrees with direct-sum density {by_sum}"
            )));
        }
    }
    Ok(direct)
}

/// The components `(α_i, Γ_i)` of `l` and its deficit `α₀`.
pub fn decompose_limit(l: &GraphLimit) -> Result<ComponentDecomposition> {
    Ok(decompose_kernel(&realize(l)?))
}

/// Whether `l` is connected: a single component carrying all the mass.
pub fn is_connected_limit(l: &GraphLimit) -> Result<bool> {
    let d = decompose_limit(l)?;
    Ok(d.parts.len() == 1
        && (d.parts[0].alpha - 1.0).abs() <= WEIGHT_TOLERANCE
        && d.deficit <= WEIGHT_TOLERANCE)
}

/// The limiting fraction of vertices in the largest component of `G(n, l)`:
/// the largest component weight, or 0 for the zero limit.
pub fn rho(l: &GraphLimit) -> Result<f64> {
    Ok(decompose_limit(l)?
        .parts
        .iter()
        .map(|p| p.alpha)
        .fold(0.0, f64::max))
}

/// Fingerprint of `l` on the catalog of connected graphs with at most `k`
/// vertices.
pub fn limit_fingerprint(l: &GraphLimit, k: usize) -> Result<DensityFingerprint> {
    fingerprint(&realize(l)?, TestGraphCatalog::cached(k)?)
}

/// Bounded equality test: fingerprints on the size-`k` catalog agree within
/// [`FINGERPRINT_TOLERANCE`]. Equal limits always pass; unequal limits may
/// pass when `k` is too small to tell them apart.
pub fn limits_equal_up_to(l1: &GraphLimit, l2: &GraphLimit, k: usize) -> Result<bool> {
    let a = limit_fingerprint(l1, k)?;
    let b = limit_fingerprint(l2, k)?;
    Ok(a.approx_eq(&b, FINGERPRINT_TOLERANCE))
}
