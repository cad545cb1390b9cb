//! Monte Carlo drivers comparing sampled graphs against exact limit values.
//!
//! Each driver returns an [`ExperimentReport`] whose rows carry an estimate,
//! its standard error, the exact target, the tolerance applied and the seed
//! that regenerates the row. Row seeds depend only on the base seed and the
//! row's `n` (and test graph index), so a row is reproduced by rerunning the
//! config with any `n_values` that contains its `n`. Replicate `r` of a row
//! uses `row_seed.derive(r)`.

use serde::{Deserialize, Serialize};

use crate::catalog::{is_connected_graph, TestGraphCatalog, MAX_CATALOG_VERTICES};
use crate::cuts::{heuristic_search, min_balanced_cut_exact, perturb, EXACT_CUT_MAX_VERTICES};
use crate::error::{Error, Result};
use crate::graph::{direct_sum_graphs, hom_count, Graph, HOM_ENUMERATION_BUDGET};
use crate::kernel::StepKernel;
use crate::limit::{decompose_limit, is_connected_limit, limit_density, realize, rho, GraphLimit};
use crate::par;
use crate::rng::Seed;
use crate::sampler::{density_replicates, ComponentStats, graph_component_stats, graph_density, sample_with, subgraph_frequency, Estimate};

/// Largest error tolerated between the two sides of the finite direct-sum
/// density identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Rows pass when `|estimate − target| ≤ max(stderr_multiplier · stderr, absolute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub stderr_multiplier: f64,
    pub absolute: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            stderr_multiplier: 4.0,
            absolute: 0.03,
        }
    }
}

impl Tolerance {
    pub fn allowed(&self, stderr: f64) -> f64 {
        (self.stderr_multiplier * stderr).max(self.absolute)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// Rates are used as given.
    #[default]
    Constant,
    /// Rates are divided by `n`.
    InverseN,
}

/// Edge noise applied to samples in the cut experiment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Noise {
    pub add_rate: f64,
    pub del_rate: f64,
    #[serde(default)]
    pub scale: NoiseScale,
}

impl Noise {
    pub fn rates_at(&self, n: usize) -> (f64, f64) {
        match self.scale {
            NoiseScale::Constant => (self.add_rate, self.del_rate),
            NoiseScale::InverseN => (self.add_rate / n as f64, self.del_rate / n as f64),
        }
    }
}

fn default_delta() -> f64 {
    0.3
}

fn default_catalog_k() -> usize {
    4
}

fn default_subgraph_reps() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub limit: GraphLimit,
    pub n_values: Vec<usize>,
    pub reps: usize,
    pub seed: Seed,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_catalog_k")]
    pub catalog_k: usize,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub tolerance: Tolerance,
    /// Lower bound on the balanced-cut density of a connected limit. When
    /// absent, `δ(1 − δ) · t(K2, Γ) / 2` is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_floor: Option<f64>,
    /// Draws of `G(v(F), Γ)` per test graph in the fingerprint experiment.
    #[serde(default = "default_subgraph_reps")]
    pub subgraph_reps: usize,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(limit: GraphLimit, n_values: Vec<usize>, reps: usize, seed: Seed) -> Self {
        ExperimentConfig {
            limit,
            n_values,
            reps,
            seed,
            delta: default_delta(),
            catalog_k: default_catalog_k(),
            noise: Noise::default(),
            tolerance: Tolerance::default(),
            cut_floor: None,
            subgraph_reps: default_subgraph_reps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.limit.validate()?;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.n_values.is_empty() {
            return bad("n_values is empty".into());
        }
        if self.n_values[0] == 0 || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n_values {:?} must be positive and strictly ascending", self.n_values));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return bad(format!("delta {} outside (0, 0.5]", self.delta));
        }
        if !(2..=MAX_CATALOG_VERTICES).contains(&self.catalog_k) {
            return bad(format!("catalog_k {} outside 2..={MAX_CATALOG_VERTICES}", self.catalog_k));
        }
        for r in [self.noise.add_rate, self.noise.del_rate] {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("noise rate {r} must be non-negative"));
            }
        }
        let t = self.tolerance;
        if !(t.stderr_multiplier >= 0.0 && t.absolute >= 0.0 && t.stderr_multiplier.is_finite() && t.absolute.is_finite()) {
            return bad("tolerances must be finite and non-negative".into());
        }
        if let Some(f) = self.cut_floor {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("cut_floor {f} outside [0, 1]"));
            }
        }
        if self.subgraph_reps == 0 {
            return bad("subgraph_reps must be at least 1".into());
        }
        Ok(())
    }

    fn row_seed(&self, n: usize) -> Seed {
        self.seed.derive(n as u64)
    }
}

/// Second limit, test graph and mixing weight for the sum-convergence run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumConvergenceParams {
    pub other: GraphLimit,
    pub f: Graph,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Components,
    SumConvergence,
    Cut,
    Fingerprint,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Components => "components",
            ExperimentKind::SumConvergence => "sum-convergence",
            ExperimentKind::Cut => "cut",
            ExperimentKind::Fingerprint => "fingerprint",
        }
    }
}

/// How a row's estimate is judged against its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|estimate − target| ≤ tolerance`.
    Within,
    /// `estimate ≥ target − tolerance`.
    AtLeast,
    /// `estimate ≤ target + tolerance`.
    AtMost,
}

impl Comparison {
    fn holds(self, estimate: f64, target: f64, tolerance: f64) -> bool {
        match self {
            Comparison::Within => (estimate - target).abs() <= tolerance,
            Comparison::AtLeast => estimate >= target - tolerance,
            Comparison::AtMost => estimate <= target + tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub seed: Seed,
    pub quantity: String,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub pass: bool,
    /// Per-replicate values behind `estimate`, when it is a mean.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replicates: Vec<f64>,
}

impl ReportRow {
    fn new(n: usize, seed: Seed, quantity: impl Into<String>, est: Estimate, target: f64, comparison: Comparison, tolerance: f64) -> Self {
        ReportRow {
            n,
            seed,
            quantity: quantity.into(),
            estimate: est.mean,
            stderr: est.stderr,
            target,
            comparison,
            tolerance,
            pass: comparison.holds(est.mean, target, tolerance),
            replicates: Vec::new(),
        }
    }

    fn mean_of(n: usize, seed: Seed, quantity: impl Into<String>, values: Vec<f64>, target: f64, tol: &Tolerance) -> Self {
        let est = Estimate::from_values(&values);
        let mut row = ReportRow::new(n, seed, quantity, est, target, Comparison::Within, tol.allowed(est.stderr));
        row.replicates = values;
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_convergence: Option<SumConvergenceParams>,
    pub rows: Vec<ReportRow>,
    pub pass: bool,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    experiment: &'static str,
    n: usize,
    seed: u64,
    quantity: &'a str,
    estimate: f64,
    stderr: f64,
    target: f64,
    comparison: Comparison,
    tolerance: f64,
    pass: bool,
}

impl ExperimentReport {
    fn new(experiment: ExperimentKind, config: &ExperimentConfig, rows: Vec<ReportRow>) -> Self {
        ExperimentReport {
            experiment,
            config: config.clone(),
            sum_convergence: None,
            pass: rows.iter().all(|r| r.pass),
            rows,
        }
    }

    /// Rows measuring `quantity`, in ascending `n`.
    pub fn rows_for<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.quantity == quantity)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// One CSV line per row; replicate values are omitted.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                experiment: self.experiment.name(),
                n: r.n,
                seed: r.seed.0,
                quantity: &r.quantity,
                estimate: r.estimate,
                stderr: r.stderr,
                target: r.target,
                comparison: r.comparison,
                tolerance: r.tolerance,
                pass: r.pass,
            })
            .map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invariant(format!("csv: {e}")))
    }
}

/// Largest component fraction, component fractions against the sorted part
/// weights, isolated-vertex fraction and vertex-1 isolation frequency
/// against the deficit.
pub fn run_components_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let kernel = realize(&cfg.limit)?;
    let decomposition = decompose_limit(&cfg.limit)?;
    let alphas = decomposition.alphas();
    let deficit = decomposition.deficit;
    let target_rho = rho(&cfg.limit)?;
    let tol = &cfg.tolerance;

    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let seed = cfg.row_seed(n);
        let stats = par::map_range(cfg.reps, |r| {
            let g = sample_with(&kernel, n, &mut seed.derive(r as u64).rng()).graph;
            graph_component_stats(&g)
        });
        let column = |f: &dyn Fn(&ComponentStats) -> f64| stats.iter().map(f).collect::<Vec<f64>>();
        rows.push(ReportRow::mean_of(n, seed, "largest_fraction", column(&|s| s.largest_fraction), target_rho, tol));
        for (i, &a) in alphas.iter().enumerate() {
            let values = column(&|s| s.sorted_densities.get(i).copied().unwrap_or(0.0));
            rows.push(ReportRow::mean_of(n, seed, format!("component_density_{}", i + 1), values, a, tol));
        }
        rows.push(ReportRow::mean_of(n, seed, "isolated_fraction", column(&|s| s.isolated_fraction), deficit, tol));
        let v1 = column(&|s| if s.vertex1_isolated { 1.0 } else { 0.0 });
        rows.push(ReportRow::mean_of(n, seed, "vertex1_isolated", v1, deficit, tol));
    }
    Ok(ExperimentReport::new(ExperimentKind::Components, cfg, rows))
}

/// Samples `G(⌊αn⌋, Γ) ⊕ G(n − ⌊αn⌋, Γ')` and compares `t(f, ·)` with
/// `α^v t(f, Γ) + (1 − α)^v t(f, Γ')`. The finite identity
/// `t(f, G ⊕ G') = (n₁/n)^v t(f, G) + (n₂/n)^v t(f, G')` is checked exactly
/// on each sampled pair when the homomorphism counts fit the enumeration
/// budget; its worst error is reported as a separate row.
pub fn run_sum_convergence_experiment(
    cfg: &ExperimentConfig,
    params: &SumConvergenceParams,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    params.other.validate()?;
    let SumConvergenceParams { other, f, alpha } = params;
    let alpha = *alpha;
    if !is_connected_graph(f) {
        return Err(Error::InvalidGraph("test graph must be connected with at least one edge".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    let w1 = realize(&cfg.limit)?;
    let w2 = realize(other)?;
    let v = f.n() as i32;
    let target = alpha.powi(v) * limit_density(f, &cfg.limit)? + (1.0 - alpha).powi(v) * limit_density(f, other)?;

    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let seed = cfg.row_seed(n);
        let n1 = (alpha * n as f64).floor() as usize;
        let check_identity = v <= 3 || (n as u128).checked_pow(v as u32).is_some_and(|t| t <= HOM_ENUMERATION_BUDGET);
        let outcomes = par::map_range(cfg.reps, |r| {
            let s = seed.derive(r as u64);
            sum_replicate(&w1, &w2, f, n1, n - n1, s, check_identity)
        });
        let values: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
        rows.push(ReportRow::mean_of(n, seed, "sum_density", values, target, &cfg.tolerance));
        if check_identity {
            let worst = outcomes.iter().filter_map(|o| o.1).fold(0.0, f64::max);
            let est = Estimate { mean: worst, stderr: 0.0 };
            rows.push(ReportRow::new(n, seed, "identity_max_error", est, 0.0, Comparison::AtMost, IDENTITY_TOLERANCE));
        }
    }
    let mut report = ExperimentReport::new(ExperimentKind::SumConvergence, cfg, rows);
    report.sum_convergence = Some(params.clone());
    Ok(report)
}

fn sample_or_none(w: &StepKernel, n: usize, seed: Seed) -> Option<Graph> {
    (n > 0).then(|| sample_with(w, n, &mut seed.rng()).graph)
}

/// Density of the sampled sum and, if requested, the identity error.
fn sum_replicate(
    w1: &StepKernel,
    w2: &StepKernel,
    f: &Graph,
    n1: usize,
    n2: usize,
    seed: Seed,
    check_identity: bool,
) -> (f64, Option<f64>) {
    let g1 = sample_or_none(w1, n1, seed.derive(0));
    let g2 = sample_or_none(w2, n2, seed.derive(1));
    let union = match (&g1, &g2) {
        (Some(a), Some(b)) => direct_sum_graphs(a, b),
        (Some(a), None) => a.clone(),
        (None, Some(b)) => b.clone(),
        (None, None) => unreachable!("n ≥ 1"),
    };
    let density = graph_density(f, &union, &mut seed.derive(2).rng()).value;
    let error = check_identity.then(|| {
        let v = f.n() as i32;
        let n = (n1 + n2) as f64;
        let lhs = hom_count(f, &union) as f64 / n.powi(v);
        let part = |g: &Option<Graph>, k: usize| match g {
            Some(g) => (k as f64 / n).powi(v) * (hom_count(f, g) as f64 / (k as f64).powi(v)),
            None => 0.0,
        };
        (lhs - part(&g1, n1) - part(&g2, n2)).abs()
    });
    (density, error)
}

/// Balanced-cut densities of noisy samples. The search is the pure
/// heuristic; the exact minimum is reported alongside for `n ≤ 20`.
/// Connected limits are judged against the cut floor. Disconnected limits
/// are judged against 0 at each `n`, plus a `density_trend` row requiring
/// the mean at the largest `n` not to exceed the mean at the smallest.
pub fn run_cut_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.n_values[0] < 4 {
        return Err(Error::InvalidArgument("cut experiment needs every n ≥ 4".into()));
    }
    for &n in &cfg.n_values {
        let (a, d) = cfg.noise.rates_at(n);
        if a > 1.0 || d > 1.0 {
            return Err(Error::InvalidArgument(format!("noise rates at n={n} exceed 1")));
        }
    }
    let kernel = realize(&cfg.limit)?;
    let connected = is_connected_limit(&cfg.limit)?;
    let floor = match cfg.cut_floor {
        Some(f) => f,
        None => {
            let k2 = Graph::complete(2)?;
            cfg.delta * (1.0 - cfg.delta) * limit_density(&k2, &cfg.limit)? / 2.0
        }
    };

    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let seed = cfg.row_seed(n);
        let (add, del) = cfg.noise.rates_at(n);
        let outcomes = par::map_range(cfg.reps, |r| -> Result<(f64, Option<f64>)> {
            let s = seed.derive(r as u64);
            let g = sample_with(&kernel, n, &mut s.derive(0).rng()).graph;
            let g = perturb(&g, add, del, s.derive(1))?;
            let heuristic = heuristic_search(&g, cfg.delta, s.derive(2))?.density;
            let exact = if n <= EXACT_CUT_MAX_VERTICES {
                Some(min_balanced_cut_exact(&g, cfg.delta)?.density)
            } else {
                None
            };
            Ok((heuristic, exact))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let judge = |quantity: &str, values: Vec<f64>| {
            if connected {
                let est = Estimate::from_values(&values);
                let mut row = ReportRow::new(n, seed, quantity, est, floor, Comparison::AtLeast, 0.0);
                row.replicates = values;
                row
            } else {
                ReportRow::mean_of(n, seed, quantity, values, 0.0, &cfg.tolerance)
            }
        };
        rows.push(judge("heuristic_density", outcomes.iter().map(|o| o.0).collect()));
        if n <= EXACT_CUT_MAX_VERTICES {
            rows.push(judge("exact_density", outcomes.iter().filter_map(|o| o.1).collect()));
        }
    }
    if !connected && cfg.n_values.len() > 1 {
        let first = rows.first().expect("rows exist");
        let last = rows.iter().rev().find(|r| r.quantity == "heuristic_density").expect("rows exist");
        let est = Estimate {
            mean: last.estimate - first.estimate,
            stderr: (last.stderr.powi(2) + first.stderr.powi(2)).sqrt(),
        };
        let (n, seed) = (last.n, last.seed);
        rows.push(ReportRow::new(n, seed, "density_trend", est, 0.0, Comparison::AtMost, 0.0));
    }
    Ok(ExperimentReport::new(ExperimentKind::Cut, cfg, rows))
}

/// Label of a test graph inside row names: its edge list, e.g. `0-1;1-2`.
pub fn graph_label(f: &Graph) -> String {
    f.edges().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(";")
}

/// For each catalog graph `F`: the mean of `t(F, G(n, Γ))` at every `n`, and
/// the frequency with which `G(v(F), Γ)` contains `F` on its own labels,
/// both against `t(F, Γ)`. Row seeds are `seed.derive(n).derive(i + 1)` for
/// the density rows and `seed.derive(0).derive(i + 1)` for the frequency
/// row of the `i`-th catalog graph.
pub fn run_density_fingerprint_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let kernel = realize(&cfg.limit)?;
    let catalog = TestGraphCatalog::cached(cfg.catalog_k)?;
    let targets = catalog
        .graphs()
        .iter()
        .map(|f| limit_density(f, &cfg.limit))
        .collect::<Result<Vec<_>>>()?;
    let tol = &cfg.tolerance;

    let mut rows = Vec::new();
    for (i, (f, &target)) in catalog.graphs().iter().zip(&targets).enumerate() {
        let label = graph_label(f);
        let seed = cfg.seed.derive(0).derive(i as u64 + 1);
        let p = subgraph_frequency(&kernel, f, f.n(), cfg.subgraph_reps, seed)?;
        let est = Estimate {
            mean: p,
            stderr: (p * (1.0 - p) / cfg.subgraph_reps as f64).sqrt(),
        };
        let quantity = format!("subgraph_frequency[{label}]");
        rows.push(ReportRow::new(f.n(), seed, quantity, est, target, Comparison::Within, tol.allowed(est.stderr)));
        for &n in &cfg.n_values {
            let seed = cfg.row_seed(n).derive(i as u64 + 1);
            let values = density_replicates(&kernel, f, n, cfg.reps, seed)?;
            rows.push(ReportRow::mean_of(n, seed, format!("hom_density[{label}]"), values, target, tol));
        }
    }
    Ok(ExperimentReport::new(ExperimentKind::Fingerprint, cfg, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_step_kernel;

    fn gamma(p: f64) -> GraphLimit {
        GraphLimit::constant(p).unwrap()
    }

    fn two_part() -> GraphLimit {
        GraphLimit::sum(vec![(0.6, gamma(0.5)), (0.3, gamma(0.7))]).unwrap()
    }

    #[test]
    fn config_validation() {
        let ok = ExperimentConfig::new(gamma(0.5), vec![10, 20], 3, Seed(1));
        assert!(ok.validate().is_ok());
        for broken in [
            ExperimentConfig { reps: 0, ..ok.clone() },
            ExperimentConfig { n_values: vec![], ..ok.clone() },
            ExperimentConfig { n_values: vec![20, 10], ..ok.clone() },
            ExperimentConfig { n_values: vec![10, 10], ..ok.clone() },
            ExperimentConfig { delta: 0.7, ..ok.clone() },
            ExperimentConfig { catalog_k: 9, ..ok.clone() },
        ] {
            assert!(matches!(broken.validate(), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn config_defaults_from_json() {
        let json = r#"{"limit":{"type":"zero"},"n_values":[5],"reps":2,"seed":7}"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg, ExperimentConfig::new(GraphLimit::Zero, vec![5], 2, Seed(7)));
    }

    #[test]
    fn components_targets_and_zero_limit() {
        let cfg = ExperimentConfig::new(two_part(), vec![50], 2, Seed(3));
        let rep = run_components_experiment(&cfg).unwrap();
        let targets: Vec<f64> = rep.rows.iter().map(|r| r.target).collect();
        let expect = [0.6, 0.6, 0.3, 0.1, 0.1];
        assert_eq!(targets.len(), expect.len());
        for (t, e) in targets.iter().zip(expect) {
            assert!((t - e).abs() < 1e-12);
        }

        let zero = run_components_experiment(&ExperimentConfig::new(GraphLimit::Zero, vec![40], 3, Seed(1))).unwrap();
        let row = zero.rows_for("largest_fraction").next().unwrap();
        assert_eq!(row.estimate, 1.0 / 40.0);
        assert_eq!(row.target, 0.0);
        assert!(row.pass);
    }

    #[test]
    fn rows_regenerate_from_their_seed() {
        let full = ExperimentConfig::new(two_part(), vec![30, 60], 4, Seed(11));
        let single = ExperimentConfig { n_values: vec![60], ..full.clone() };
        let a = run_components_experiment(&full).unwrap();
        let b = run_components_experiment(&single).unwrap();
        let tail: Vec<_> = a.rows.iter().filter(|r| r.n == 60).cloned().collect();
        assert_eq!(tail, b.rows);
        assert_eq!(run_components_experiment(&full).unwrap().to_json(), a.to_json());
    }

    #[test]
    fn sum_convergence_target_and_identity() {
        let cfg = ExperimentConfig::new(gamma(1.0), vec![20, 41], 5, Seed(2));
        let params = SumConvergenceParams {
            other: gamma(0.5),
            f: Graph::path(3).unwrap(),
            alpha: 0.5,
        };
        let rep = run_sum_convergence_experiment(&cfg, &params).unwrap();
        let row = rep.rows_for("sum_density").next().unwrap();
        assert!((row.target - (0.125 + 0.125 * 0.25)).abs() < 1e-15);
        assert_eq!(rep.rows_for("identity_max_error").count(), 2);
        assert!(rep.rows_for("identity_max_error").all(|r| r.pass));

        let zero_other = SumConvergenceParams { other: GraphLimit::Zero, ..params };
        let rep = run_sum_convergence_experiment(&cfg, &zero_other).unwrap();
        assert!((rep.rows[0].target - 0.125).abs() < 1e-15);
    }

    #[test]
    fn sum_convergence_rejects_bad_graph() {
        let cfg = ExperimentConfig::new(gamma(1.0), vec![10], 1, Seed(0));
        let params = SumConvergenceParams {
            other: gamma(0.5),
            f: Graph::empty(2).unwrap(),
            alpha: 0.5,
        };
        assert!(run_sum_convergence_experiment(&cfg, &params).is_err());
    }

    #[test]
    fn cut_experiment_small() {
        let split = GraphLimit::sum(vec![(0.5, gamma(0.8)), (0.5, gamma(0.8))]).unwrap();
        let cfg = ExperimentConfig::new(split, vec![12, 16], 3, Seed(5));
        let rep = run_cut_experiment(&cfg).unwrap();
        assert_eq!(rep.rows_for("exact_density").count(), 2);
        for (h, e) in rep.rows_for("heuristic_density").zip(rep.rows_for("exact_density")) {
            for (a, b) in h.replicates.iter().zip(&e.replicates) {
                assert!(a >= b);
            }
        }
        assert_eq!(rep.rows_for("density_trend").count(), 1);

        let zero = ExperimentConfig::new(GraphLimit::Zero, vec![30], 2, Seed(5));
        let rep = run_cut_experiment(&zero).unwrap();
        assert!(rep.rows.iter().all(|r| r.estimate == 0.0 && r.pass));

        let conn = ExperimentConfig::new(gamma(0.6), vec![14], 2, Seed(5));
        let rep = run_cut_experiment(&conn).unwrap();
        let floor = 0.3 * 0.7 * 0.6 / 2.0;
        assert!(rep.rows.iter().all(|r| (r.target - floor).abs() < 1e-15 && r.comparison == Comparison::AtLeast));
    }

    #[test]
    fn fingerprint_targets() {
        let mut cfg = ExperimentConfig::new(gamma(0.5), vec![20], 2, Seed(9));
        cfg.catalog_k = 3;
        cfg.subgraph_reps = 200;
        let rep = run_density_fingerprint_experiment(&cfg).unwrap();
        let targets: Vec<f64> = rep.rows.iter().filter(|r| r.quantity.starts_with("hom")).map(|r| r.target).collect();
        assert_eq!(targets, vec![0.5, 0.25, 0.125]);

        let unit = GraphLimit::Step(make_step_kernel(vec![1.0], vec![vec![1.0]]).unwrap());
        let doubled = GraphLimit::sum(vec![(0.5, unit.clone()), (0.5, unit)]).unwrap();
        let cfg = ExperimentConfig { limit: doubled, ..cfg };
        let rep = run_density_fingerprint_experiment(&cfg).unwrap();
        let k3 = rep.rows_for("hom_density[0-1;0-2;1-2]").next().unwrap();
        assert!((k3.target - 0.25).abs() < 1e-15);
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let cfg = ExperimentConfig::new(two_part(), vec![20], 2, Seed(3));
        let rep = run_components_experiment(&cfg).unwrap();
        let csv = rep.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,n,seed,quantity,estimate,stderr,target,comparison,tolerance,pass"
        );
        assert_eq!(lines.count(), rep.rows.len());
        let back: ExperimentReport = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
    }
}
