use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tau::{kendall_tau, lenient_order, strict_order};
use crate::engine::{forward_generate, log_likelihood, Params, Theta};
use crate::error::{DmcError, Result};
use crate::estimation::{estimate_all, EmOptions, ThetaEnsemble};
use crate::graph::Graph;
use crate::reconstruction::{
    derive_seed, exhaustive, minimize_y, minimize_y_then_nk, nk_greedy, nk_grid_search,
    random_sequences, true_new_random_anchor, true_theta, NkConfig, DEFAULT_EXHAUSTIVE_CAP,
};

/// RMSE of the worst possible estimator over the default grid, printed as a
/// reference line next to the RMSE tables.
pub const WORST_CASE_RMSE: f64 = 0.739;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TrueTheta,
    TrueNewRandomAnchor,
    NkTrueInitial,
    Exhaustive,
    Nk,
    NkPlusOne,
    MinimizeY,
    MinimizeYThenNk,
    #[serde(rename = "random-1")]
    OneRandom,
    #[serde(rename = "random-100")]
    HundredRandom,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::TrueTheta,
        Method::TrueNewRandomAnchor,
        Method::NkTrueInitial,
        Method::Exhaustive,
        Method::Nk,
        Method::NkPlusOne,
        Method::MinimizeY,
        Method::MinimizeYThenNk,
        Method::OneRandom,
        Method::HundredRandom,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::TrueTheta => "true-theta",
            Method::TrueNewRandomAnchor => "true-new-random-anchor",
            Method::NkTrueInitial => "nk-true-initial",
            Method::Exhaustive => "exhaustive",
            Method::Nk => "nk",
            Method::NkPlusOne => "nk-plus-one",
            Method::MinimizeY => "minimize-y",
            Method::MinimizeYThenNk => "minimize-y-then-nk",
            Method::OneRandom => "random-1",
            Method::HundredRandom => "random-100",
        }
    }

    /// Whether the method is given the generating history or parameters.
    pub fn needs_truth(self) -> bool {
        matches!(
            self,
            Method::TrueTheta | Method::TrueNewRandomAnchor | Method::NkTrueInitial
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = DmcError;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| DmcError::InvalidConfig(format!("unknown algorithm '{s}'")))
    }
}

/// Knobs shared by every method run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodContext {
    pub exhaustive_cap: usize,
    pub nk: NkConfig,
    pub random_runs: usize,
    pub feedback_rounds: u32,
    pub em: EmOptionsConfig,
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct EmOptionsConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl From<EmOptionsConfig> for EmOptions {
    fn from(c: EmOptionsConfig) -> Self {
        EmOptions {
            tol: c.tol,
            max_iter: c.max_iter,
        }
    }
}

impl Default for MethodContext {
    fn default() -> Self {
        let em = EmOptions::default();
        MethodContext {
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            nk: NkConfig::default(),
            random_runs: 100,
            feedback_rounds: 50,
            em: EmOptionsConfig {
                tol: em.tol,
                max_iter: em.max_iter,
            },
        }
    }
}

/// Runs one deconstruction method and collects its distinct histories.
pub fn run_method(
    method: Method,
    g: &Graph,
    truth: Option<(&Theta, Params)>,
    seed: u64,
    ctx: &MethodContext,
) -> Result<ThetaEnsemble> {
    let need_truth = || {
        truth.ok_or_else(|| {
            DmcError::InvalidConfig(format!("{method} needs the generating history"))
        })
    };
    let results = match method {
        Method::TrueTheta => vec![true_theta(g, need_truth()?.0)?],
        Method::TrueNewRandomAnchor => vec![true_new_random_anchor(g, need_truth()?.0, seed)?],
        Method::NkTrueInitial => vec![nk_greedy(g, need_truth()?.1, seed)?],
        Method::Exhaustive => exhaustive(g, ctx.exhaustive_cap)?,
        Method::Nk => nk_grid_search(g, &ctx.nk, seed)?.visited,
        Method::NkPlusOne => {
            let cfg = NkConfig {
                extra_rounds: 1,
                ..ctx.nk.clone()
            };
            nk_grid_search(g, &cfg, seed)?.visited
        }
        Method::MinimizeY => vec![minimize_y(g, seed)],
        Method::MinimizeYThenNk => minimize_y_then_nk(g, seed, ctx.feedback_rounds).visited,
        Method::OneRandom => random_sequences(g, 1, seed),
        Method::HundredRandom => random_sequences(g, ctx.random_runs, seed),
    };
    Ok(ThetaEnsemble::new(results, method.tag())?.distinct())
}

/// Simulation design: one graph per (size, grid point, replicate).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub node_sizes: Vec<usize>,
    pub param_grid: Vec<Params>,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub replicates: usize,
    pub threads: usize,
    /// Largest graph the grid-refined likelihood searches are run on.
    pub nk_node_limit: usize,
    pub context: MethodContext,
}

impl ExperimentPlan {
    /// `q_m, q_c` in `{1/(k+1), ..., k/(k+1)}`.
    pub fn interior_grid(k: usize) -> Vec<Params> {
        let step = 1.0 / (k + 1) as f64;
        let mut out = Vec::with_capacity(k * k);
        for i in 1..=k {
            for j in 1..=k {
                out.push(Params {
                    q_m: i as f64 * step,
                    q_c: j as f64 * step,
                });
            }
        }
        out
    }

    pub fn new(node_sizes: Vec<usize>, methods: Vec<Method>, master_seed: u64) -> Self {
        ExperimentPlan {
            node_sizes,
            param_grid: Self::interior_grid(10),
            methods,
            master_seed,
            replicates: 1,
            threads: rayon::current_num_threads(),
            nk_node_limit: 100,
            context: MethodContext::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_sizes.contains(&0) {
            return Err(DmcError::InvalidConfig(
                "node sizes must be positive".into(),
            ));
        }
        if let Some(p) = self.param_grid.iter().find(|p| !p.is_interior()) {
            return Err(DmcError::InvalidConfig(format!(
                "grid point ({}, {}) is not interior",
                p.q_m, p.q_c
            )));
        }
        self.context.nk.validate()
    }

    fn node_budget(&self, method: Method) -> usize {
        match method {
            Method::Exhaustive => self.context.exhaustive_cap,
            Method::Nk | Method::NkPlusOne => self.nk_node_limit,
            _ => usize::MAX,
        }
    }
}

/// One row per (graph, method).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub nodes: usize,
    pub grid_index: usize,
    pub replicate: usize,
    pub true_q_m: f64,
    pub true_q_c: f64,
    pub method: Method,
    pub q_m_max: Option<f64>,
    pub q_c_max: f64,
    pub q_m_em: Option<f64>,
    pub q_c_em: f64,
    pub q_m_avg: Option<f64>,
    pub q_c_avg: f64,
    pub log_likelihood: f64,
    pub true_log_likelihood: f64,
    pub ci_m_lo: Option<f64>,
    pub ci_m_hi: Option<f64>,
    pub ci_c_lo: Option<f64>,
    pub ci_c_hi: Option<f64>,
    pub covered_m: Option<bool>,
    pub covered_c: Option<bool>,
    pub tau_strict: f64,
    pub tau_lenient: f64,
    pub ensemble_size: usize,
    pub em_iterations: usize,
    pub em_violations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub method: Method,
    pub nodes: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub nodes: usize,
    pub graphs: usize,
    pub rmse_q_m_max: Option<f64>,
    pub rmse_q_c_max: Option<f64>,
    pub rmse_q_m_em: Option<f64>,
    pub rmse_q_c_em: Option<f64>,
    pub rmse_q_m_avg: Option<f64>,
    pub rmse_q_c_avg: Option<f64>,
    pub missing_q_m: usize,
    pub boundary_q_m: usize,
    pub boundary_q_c: usize,
    pub log_likelihood_bias: Option<f64>,
    pub log_likelihood_bias_excluded: usize,
    pub coverage_q_m: Option<f64>,
    pub coverage_q_m_excluded: usize,
    pub coverage_q_c: Option<f64>,
    pub mean_tau_strict: f64,
    pub mean_tau_lenient: f64,
    pub total_seconds: f64,
    pub em_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub skipped: Vec<SkippedCell>,
    pub threads: usize,
    pub worst_case_rmse_reference: f64,
    pub notes: Vec<String>,
}

impl Summary {
    pub fn row(&self, method: Method, nodes: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.nodes == nodes)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub records: Vec<ExperimentRecord>,
    pub summary: Summary,
}

/// A generated graph with the history and parameters that produced it.
#[derive(Clone, Debug)]
pub struct GeneratedGraph {
    pub graph: Graph,
    pub theta: Theta,
    pub params: Params,
}

impl GeneratedGraph {
    pub fn generate(n: usize, params: Params, seed: u64) -> Result<Self> {
        let (graph, theta) = forward_generate(n, params, seed)?;
        Ok(GeneratedGraph {
            graph,
            theta,
            params,
        })
    }
}

struct Task {
    nodes: usize,
    grid_index: usize,
    replicate: usize,
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut skipped = Vec::new();
    let mut active = Vec::new();
    for &n in &plan.node_sizes {
        for &m in &plan.methods {
            if n > plan.node_budget(m) {
                skipped.push(SkippedCell {
                    method: m,
                    nodes: n,
                    reason: format!("{n} nodes exceeds the budget for {m}"),
                });
            }
        }
    }
    let mut tasks = Vec::new();
    for &nodes in &plan.node_sizes {
        for grid_index in 0..plan.param_grid.len() {
            for replicate in 0..plan.replicates {
                tasks.push(Task {
                    nodes,
                    grid_index,
                    replicate,
                });
            }
        }
    }
    for &n in &plan.node_sizes {
        for &m in &plan.methods {
            if n <= plan.node_budget(m) {
                active.push((n, m));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads.max(1))
        .build()
        .map_err(|e| DmcError::InvalidConfig(e.to_string()))?;
    let per_task: Vec<Result<Vec<ExperimentRecord>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let methods: Vec<Method> = active
                    .iter()
                    .filter(|(n, _)| *n == t.nodes)
                    .map(|(_, m)| *m)
                    .collect();
                run_task(plan, t, &methods)
            })
            .collect()
    });
    let mut records = Vec::new();
    for r in per_task {
        records.extend(r?);
    }
    let summary = summarize(&records, skipped, plan.threads.max(1));
    Ok(ExperimentReport { records, summary })
}

fn run_task(plan: &ExperimentPlan, t: &Task, methods: &[Method]) -> Result<Vec<ExperimentRecord>> {
    let params = plan.param_grid[t.grid_index];
    let base = [t.nodes as u64, t.grid_index as u64, t.replicate as u64];
    let gen = GeneratedGraph::generate(t.nodes, params, derive_seed(plan.master_seed, &base))?;
    let true_stats = crate::engine::deconstruct(&gen.graph, &gen.theta)?;
    let true_ll = log_likelihood(&true_stats, params);
    let truth_order = lenient_order(&gen.theta);
    let mut out = Vec::with_capacity(methods.len());
    for &m in methods {
        let seed = derive_seed(plan.master_seed, &[base[0], base[1], base[2], m as u64 + 1]);
        let start = Instant::now();
        let ens = run_method(
            m,
            &gen.graph,
            Some((&gen.theta, params)),
            seed,
            &plan.context,
        )?;
        let est = estimate_all(&ens, plan.context.em.into())?;
        let seconds = start.elapsed().as_secs_f64();
        let tau_seed = derive_seed(seed, &[u64::MAX]);
        let tau_strict = kendall_tau(&truth_order, &strict_order(&est.best.theta, tau_seed))?;
        let tau_lenient = kendall_tau(&truth_order, &lenient_order(&est.best.theta))?;
        let ci_m = est.max.ci_m;
        let ci_c = est.max.ci_c;
        out.push(ExperimentRecord {
            nodes: t.nodes,
            grid_index: t.grid_index,
            replicate: t.replicate,
            true_q_m: params.q_m,
            true_q_c: params.q_c,
            method: m,
            q_m_max: est.max.q_m_hat,
            q_c_max: est.max.q_c_hat,
            q_m_em: est.em.estimate.q_m_hat,
            q_c_em: est.em.estimate.q_c_hat,
            q_m_avg: est.averaged.q_m_hat,
            q_c_avg: est.averaged.q_c_hat,
            log_likelihood: est.max.log_likelihood,
            true_log_likelihood: true_ll,
            ci_m_lo: ci_m.map(|c| c.lo),
            ci_m_hi: ci_m.map(|c| c.hi),
            ci_c_lo: ci_c.map(|c| c.lo),
            ci_c_hi: ci_c.map(|c| c.hi),
            covered_m: ci_m.map(|c| c.contains(params.q_m)),
            covered_c: ci_c.map(|c| c.contains(params.q_c)),
            tau_strict,
            tau_lenient,
            ensemble_size: est.ensemble_size,
            em_iterations: est.em.iterations,
            em_violations: est.em.monotonicity_violations,
            seconds,
        });
    }
    Ok(out)
}

fn rmse(pairs: impl Iterator<Item = (Option<f64>, f64)>) -> Option<f64> {
    let (sum, count) = pairs
        .filter_map(|(e, t)| e.map(|e| (e - t).powi(2)))
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| (sum / count as f64).sqrt())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, c) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (c > 0).then(|| s / c as f64)
}

fn is_boundary(v: f64) -> bool {
    v == 0.0 || v == 1.0
}

/// Aggregates raw records into per-(method, size) table rows.
pub fn summarize(
    records: &[ExperimentRecord],
    skipped: Vec<SkippedCell>,
    threads: usize,
) -> Summary {
    let mut groups: BTreeMap<(usize, Method), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.nodes, r.method)).or_default().push(r);
    }
    let rows = groups
        .into_iter()
        .map(|((nodes, method), rs)| {
            let finite: Vec<&&ExperimentRecord> = rs
                .iter()
                .filter(|r| r.log_likelihood.is_finite() && r.true_log_likelihood.is_finite())
                .collect();
            let bias = mean(finite.iter().map(|r| r.log_likelihood))
                .zip(mean(finite.iter().map(|r| r.true_log_likelihood)))
                .map(|(a, b)| a - b);
            let covered_m: Vec<bool> = rs.iter().filter_map(|r| r.covered_m).collect();
            let covered_c: Vec<bool> = rs.iter().filter_map(|r| r.covered_c).collect();
            let share = |v: &[bool]| {
                (!v.is_empty()).then(|| v.iter().filter(|b| **b).count() as f64 / v.len() as f64)
            };
            SummaryRow {
                method,
                nodes,
                graphs: rs.len(),
                rmse_q_m_max: rmse(rs.iter().map(|r| (r.q_m_max, r.true_q_m))),
                rmse_q_c_max: rmse(rs.iter().map(|r| (Some(r.q_c_max), r.true_q_c))),
                rmse_q_m_em: rmse(rs.iter().map(|r| (r.q_m_em, r.true_q_m))),
                rmse_q_c_em: rmse(rs.iter().map(|r| (Some(r.q_c_em), r.true_q_c))),
                rmse_q_m_avg: rmse(rs.iter().map(|r| (r.q_m_avg, r.true_q_m))),
                rmse_q_c_avg: rmse(rs.iter().map(|r| (Some(r.q_c_avg), r.true_q_c))),
                missing_q_m: rs.iter().filter(|r| r.q_m_max.is_none()).count(),
                boundary_q_m: rs
                    .iter()
                    .filter(|r| r.q_m_max.is_some_and(is_boundary))
                    .count(),
                boundary_q_c: rs.iter().filter(|r| is_boundary(r.q_c_max)).count(),
                log_likelihood_bias: bias,
                log_likelihood_bias_excluded: rs.len() - finite.len(),
                coverage_q_m: share(&covered_m),
                coverage_q_m_excluded: rs.len() - covered_m.len(),
                coverage_q_c: share(&covered_c),
                mean_tau_strict: mean(rs.iter().map(|r| r.tau_strict)).unwrap_or(f64::NAN),
                mean_tau_lenient: mean(rs.iter().map(|r| r.tau_lenient)).unwrap_or(f64::NAN),
                total_seconds: rs.iter().map(|r| r.seconds).sum(),
                em_violations: rs.iter().map(|r| r.em_violations).sum(),
            }
        })
        .collect();
    Summary {
        rows,
        skipped,
        threads,
        worst_case_rmse_reference: WORST_CASE_RMSE,
        notes: vec![
            "RMSE for q_m is taken over graphs where q_m_hat is defined".into(),
            "log_likelihood_bias = mean estimated log-likelihood minus mean true log-likelihood; rows with an infinite value on either side are excluded and counted".into(),
            "boundary_q_c counts q_c_hat in {0, 1} (a separate column from boundary_q_m)".into(),
            "coverage uses unclamped Wald bounds; graphs without a q_m interval are excluded and counted".into(),
            "total_seconds sums per-graph wall time; graphs ran in parallel on `threads` workers".into(),
        ],
    }
}

/// One point of the log-likelihood-versus-estimate scatter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub graph: usize,
    pub true_q_m: f64,
    pub true_q_c: f64,
    pub method: Method,
    pub q_m_hat: Option<f64>,
    pub q_c_hat: f64,
    pub log_likelihood: f64,
}

/// Maximum-likelihood estimate and its log-likelihood for every
/// (graph, method) pair. Failed runs are omitted.
pub fn loglik_surface(
    graphs: &[GeneratedGraph],
    methods: &[Method],
    ctx: &MethodContext,
    seed: u64,
) -> Vec<SurfacePoint> {
    let mut jobs = Vec::new();
    for (i, _) in graphs.iter().enumerate() {
        for m in methods {
            jobs.push((i, *m));
        }
    }
    jobs.par_iter()
        .filter_map(|&(i, m)| {
            let gg = &graphs[i];
            let s = derive_seed(seed, &[i as u64, m as u64]);
            let ens = run_method(m, &gg.graph, Some((&gg.theta, gg.params)), s, ctx).ok()?;
            let est = crate::estimation::max_likelihood_select(&ens);
            Some(SurfacePoint {
                graph: i,
                true_q_m: gg.params.q_m,
                true_q_c: gg.params.q_c,
                method: m,
                q_m_hat: est.q_m_hat,
                q_c_hat: est.q_c_hat,
                log_likelihood: est.log_likelihood,
            })
        })
        .collect()
}
