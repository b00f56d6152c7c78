//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Set `HURI_PATH` to a local HuRI edge list (two tab-separated columns) to
//! run the full-scale ingestion check against the real data.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dmc_core::engine::{
    deconstruct, forward_generate, forward_generate_traced, log_likelihood_at, mle,
    theta_space_size, Params, SufficientStats,
};
use dmc_core::estimation::{estimate_all, EmOptions};
use dmc_core::evaluation::{
    run_experiment, run_method, ExperimentPlan, ExperimentReport, Method, MethodContext, Summary,
};
use dmc_core::graph::Graph;
use dmc_core::io::{
    ingest_edge_list, load_graph, sample_induced_subgraph, save_graph, EdgeListSpec, LabelMap,
};
use dmc_core::likelihood::ExactLikelihood;
use dmc_core::reconstruction::{derive_seed, for_each_pair_sequence, minimize_y};

const MASTER_SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Report {
    failures: usize,
}

impl Report {
    fn record(
        &mut self,
        id: u32,
        name: &str,
        budget: Option<Duration>,
        f: impl FnOnce() -> Outcome,
    ) {
        let start = Instant::now();
        let mut out = f();
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            if elapsed > b {
                out.pass = false;
                out.detail
                    .push_str(&format!("; over the {:.0}s budget", b.as_secs_f64()));
            }
        }
        if !out.pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s]",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
        let _ = std::io::stdout().flush();
    }
}

// ---------------------------------------------------------------------------
// Closed-form likelihoods for every graph on one to four nodes.

type Poly = fn(f64, f64) -> f64;

struct Shape {
    n: usize,
    edges: &'static [(u32, u32)],
    likelihood: Poly,
    q_m_hat: Option<f64>,
    q_c_hat: Option<f64>,
}

fn b(m: f64, c: f64) -> f64 {
    m * c * c + (1.0 - m) * (1.0 - c) * c
}

fn small_shapes() -> Vec<Shape> {
    let hard = (1.0 + (31.0f64 / 3.0).sqrt()) / 7.0;
    vec![
        Shape {
            n: 1,
            edges: &[],
            likelihood: |_, _| 1.0,
            q_m_hat: None,
            q_c_hat: None,
        },
        Shape {
            n: 2,
            edges: &[],
            likelihood: |_, c| 1.0 - c,
            q_m_hat: None,
            q_c_hat: Some(0.0),
        },
        Shape {
            n: 2,
            edges: &[(0, 1)],
            likelihood: |_, c| c,
            q_m_hat: None,
            q_c_hat: Some(1.0),
        },
        Shape {
            n: 3,
            edges: &[],
            likelihood: |_, c| (1.0 - c).powi(2),
            q_m_hat: None,
            q_c_hat: Some(0.0),
        },
        Shape {
            n: 3,
            edges: &[(0, 1)],
            likelihood: |m, c| (1.0 - c) * c * (1.0 + m),
            q_m_hat: Some(1.0),
            q_c_hat: Some(0.5),
        },
        Shape {
            n: 3,
            edges: &[(0, 1), (0, 2)],
            likelihood: b,
            q_m_hat: Some(1.0),
            q_c_hat: Some(1.0),
        },
        Shape {
            n: 3,
            edges: &[(0, 1), (0, 2), (1, 2)],
            likelihood: |m, c| c * c * (1.0 - m),
            q_m_hat: Some(0.0),
            q_c_hat: Some(1.0),
        },
        Shape {
            n: 4,
            edges: &[],
            likelihood: |_, c| (1.0 - c).powi(3),
            q_m_hat: None,
            q_c_hat: Some(0.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1)],
            likelihood: |m, c| {
                (1.0 - c).powi(2) * c + (1.0 - c).powi(2) * c * (1.0 + m) * (1.0 + 2.0 * m) / 3.0
            },
            q_m_hat: Some(1.0),
            q_c_hat: Some(1.0 / 3.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (0, 2)],
            likelihood: |m, c| {
                2.0 / 3.0 * (1.0 - c) * c * (1.0 + m) * ((1.0 - c) * (1.0 - m) + c * m)
                    + b(m, c) * (1.0 - c) * m * (2.0 + 0.5 * m) / 3.0
            },
            q_m_hat: Some(1.0),
            q_c_hat: Some(2.0 / 3.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (2, 3)],
            likelihood: |m, c| {
                c * c * (1.0 - c) * (1.0 + m) / 3.0 + (1.0 - c) * m * m * b(m, c) / 6.0
            },
            q_m_hat: Some(1.0),
            q_c_hat: Some(2.0 / 3.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (0, 2), (1, 2)],
            likelihood: |m, c| {
                2.0 / 3.0 * (1.0 - c) * c * c * (1.0 + m) * (1.0 - m)
                    + 0.5 * c * c * (1.0 - m) * (1.0 - c) * m * m
            },
            q_m_hat: Some(0.0),
            q_c_hat: Some(2.0 / 3.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (0, 2), (0, 3)],
            likelihood: |m, c| b(m, c) * (2.0 * (1.0 - c) * (1.0 - m) + 0.5 * c * m * m) / 3.0,
            q_m_hat: Some(1.0),
            q_c_hat: Some(1.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (0, 2), (2, 3)],
            likelihood: |m, c| {
                b(m, c) * m * (2.0 * c + 2.0 * (1.0 - c) * (1.0 - m) + 0.5 * c * m) / 3.0
                    + 0.5 * c * c * (1.0 - m) * (1.0 - c) * m * m
            },
            q_m_hat: Some(1.0),
            q_c_hat: Some(1.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (0, 2), (1, 2), (1, 3)],
            likelihood: |m, c| {
                2.0 / 3.0 * b(m, c) * c * (1.0 - m) * (1.0 + m)
                    + c * c * (1.0 - m) * m * (2.0 * (1.0 - c) * (1.0 - m) + 0.5 * c * m)
            },
            q_m_hat: Some(hard),
            q_c_hat: Some(1.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (0, 2), (1, 3), (2, 3)],
            likelihood: |m, c| {
                b(m, c) * (1.0 - c) * (1.0 - m).powi(2) / 3.0 + 0.5 * c * c * (1.0 - m) * c * m * m
            },
            q_m_hat: Some(2.0 / 3.0),
            q_c_hat: Some(1.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)],
            likelihood: |m, c| {
                b(m, c) * c * (1.0 - m).powi(2) / 3.0
                    + c * c * (1.0 - m).powi(2) * ((1.0 - c) * (1.0 - m) + 2.0 * c * m)
            },
            q_m_hat: Some(1.0 / 3.0),
            q_c_hat: Some(1.0),
        },
        Shape {
            n: 4,
            edges: &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            likelihood: |m, c| c.powi(3) * (1.0 - m).powi(3),
            q_m_hat: Some(0.0),
            q_c_hat: Some(1.0),
        },
    ]
}

fn criterion_1() -> Outcome {
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut worst_rel = 0.0f64;
    let mut worst_mle = 0.0f64;
    let mut problems = Vec::new();
    let shapes = small_shapes();
    for (i, s) in shapes.iter().enumerate() {
        let g = Graph::from_edges(s.n, s.edges).expect("valid shape");
        let exact = ExactLikelihood::of_graph(&g, 8).expect("small graph");
        for &m in &grid {
            for &c in &grid {
                let want = (s.likelihood)(m, c);
                let got = exact.value(m, c);
                let rel = ((got - want) / want).abs();
                worst_rel = worst_rel.max(rel);
                if rel > 1e-12 {
                    problems.push(format!("shape {i} at ({m}, {c}): {got} vs {want}"));
                }
            }
        }
        let (m_hat, c_hat) = exact.maximize();
        for (want, got, label) in [(s.q_m_hat, m_hat, "q_m"), (s.q_c_hat, c_hat, "q_c")] {
            if let Some(w) = want {
                worst_mle = worst_mle.max((got - w).abs());
                if (got - w).abs() > 1e-9 {
                    problems.push(format!("shape {i} {label} hat {got} vs {w}"));
                }
            }
        }
    }
    let detail = format!(
        "{} shapes, max relative error {:.2e}, max MLE error {:.2e}",
        shapes.len(),
        worst_rel,
        worst_mle
    );
    if problems.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", problems.join("; ")))
    }
}

// ---------------------------------------------------------------------------

fn random_stats(rng: &mut ChaCha8Rng, i: usize) -> SufficientStats {
    let n = rng.gen_range(2..=200u64);
    let w = match i % 5 {
        0 => 0,
        1 => n - 1,
        _ => rng.gen_range(0..n),
    };
    let y = match i % 7 {
        0 => 0,
        _ => rng.gen_range(0..=3 * n),
    };
    let x = match i % 3 {
        0 => y,
        1 => 0,
        _ => rng.gen_range(0..=y),
    };
    SufficientStats { w, x, y, n }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[2]));
    let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    let mut failures = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for i in 0..200 {
        let s = random_stats(&mut rng, i);
        let hat = mle(&s);
        let at_hat = log_likelihood_at(&s, hat.q_m, hat.q_c);
        let mut best_grid = f64::NEG_INFINITY;
        for &m in &grid {
            for &c in &grid {
                best_grid = best_grid.max(log_likelihood_at(&s, Some(m), c));
            }
        }
        let gap = best_grid - at_hat;
        worst_gap = worst_gap.max(gap);
        if gap > 1e-12 * at_hat.abs().max(1.0) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("200 stats, {failures} beaten by the grid, largest grid excess {worst_gap:.2e}"),
    )
}

// ---------------------------------------------------------------------------

struct DominanceResult {
    outcome: Outcome,
    em_runs: usize,
    em_violations: usize,
}

fn criterion_3() -> DominanceResult {
    let grid = ExperimentPlan::interior_grid(10);
    let ctx = MethodContext::default();
    let mut bad = Vec::new();
    let mut em_runs = 0;
    let mut em_violations = 0;
    for i in 0..25u64 {
        let params = grid[(i as usize * 37) % grid.len()];
        let (g, theta) = forward_generate(7, params, derive_seed(MASTER_SEED, &[3, i])).unwrap();
        let mut best_other = Vec::new();
        let mut exhaustive_best = f64::NEG_INFINITY;
        for m in Method::ALL {
            let seed = derive_seed(MASTER_SEED, &[3, i, m as u64]);
            let ens = run_method(m, &g, Some((&theta, params)), seed, &ctx).unwrap();
            let all = estimate_all(&ens, EmOptions::default()).unwrap();
            em_runs += 1;
            em_violations += all.em.monotonicity_violations;
            let best = all.best.log_likelihood_at_mle;
            if m == Method::Exhaustive {
                exhaustive_best = best;
            } else {
                best_other.push((m, best));
            }
        }
        for (m, v) in best_other {
            if v > exhaustive_best + 1e-9 * exhaustive_best.abs().max(1.0) {
                bad.push(format!("graph {i}: {m} {v} > exhaustive {exhaustive_best}"));
            }
        }
    }
    let detail = format!("25 graphs x 9 competitors, {} violations", bad.len());
    DominanceResult {
        outcome: if bad.is_empty() {
            outcome(true, detail)
        } else {
            outcome(false, format!("{detail}; {}", bad.join("; ")))
        },
        em_runs,
        em_violations,
    }
}

// ---------------------------------------------------------------------------

fn within(v: Option<f64>, target: f64, tol: f64) -> bool {
    v.is_some_and(|x| (x - target).abs() <= tol)
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.3}"))
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn experiment(nodes: usize, methods: Vec<Method>, tag: u64) -> ExperimentReport {
    let mut plan = ExperimentPlan::new(vec![nodes], methods, derive_seed(MASTER_SEED, &[tag]));
    plan.threads = threads();
    run_experiment(&plan).expect("experiment runs")
}

fn criterion_4(s: &Summary) -> Outcome {
    let t = s.row(Method::TrueTheta, 100).unwrap();
    let y = s.row(Method::MinimizeY, 100).unwrap();
    let pass = within(t.rmse_q_m_max, 0.034, 0.02)
        && within(t.rmse_q_c_max, 0.037, 0.02)
        && within(y.rmse_q_m_max, 0.095, 0.04)
        && within(y.rmse_q_c_max, 0.109, 0.04);
    outcome(
        pass,
        format!(
            "true-theta rmse q_m {} q_c {} (0.034/0.037 +- 0.02); minimize-y rmse q_m {} q_c {} (0.095/0.109 +- 0.04); minimize-y {:.1}s over {} threads",
            fmt(t.rmse_q_m_max),
            fmt(t.rmse_q_c_max),
            fmt(y.rmse_q_m_max),
            fmt(y.rmse_q_c_max),
            y.total_seconds,
            s.threads
        ),
    )
}

fn criterion_5(r: &ExperimentReport, naive: &[Method]) -> Outcome {
    let true_rows: Vec<_> = r
        .records
        .iter()
        .filter(|x| x.method == Method::TrueTheta)
        .collect();
    let all_one = true_rows.iter().all(|x| x.tau_lenient == 1.0);
    let mut pass = all_one && !true_rows.is_empty();
    let mut parts = vec![format!(
        "true-theta lenient tau = 1 on {}/{} graphs",
        true_rows.iter().filter(|x| x.tau_lenient == 1.0).count(),
        true_rows.len()
    )];
    for &m in naive {
        let row = r.summary.row(m, 100).unwrap();
        pass &= (-0.1..=0.1).contains(&row.mean_tau_strict);
        parts.push(format!("{m} strict {:.3}", row.mean_tau_strict));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_6(s100: &Summary, s200: &Summary) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, n) in [(s100, 100), (s200, 200)] {
        let row = s.row(Method::TrueTheta, n).unwrap();
        for (label, cov) in [("q_m", row.coverage_q_m), ("q_c", row.coverage_q_c)] {
            pass &= cov.is_some_and(|c| (0.90..=1.0).contains(&c));
            parts.push(format!("{n} nodes {label} {}", fmt(cov)));
        }
        if row.coverage_q_m_excluded > 0 {
            parts.push(format!(
                "{n} nodes: {} graphs without a q_m interval",
                row.coverage_q_m_excluded
            ));
        }
    }
    outcome(pass, parts.join(", "))
}

// ---------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[8]));
    let mut mismatches = 0;
    for i in 0..1000u64 {
        let n = rng.gen_range(1..=50);
        let params = Params::new(rng.gen(), rng.gen()).unwrap();
        let (g, theta, trace) =
            forward_generate_traced(n, params, derive_seed(MASTER_SEED, &[8, i])).unwrap();
        let s = deconstruct(&g, &theta).unwrap();
        if s.w != trace.complementations
            || s.y != trace.anchor_degree_total
            || s.y - s.x != trace.modified_neighbors
            || s.n != n as u64
        {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("1000 round trips, {mismatches} mismatches"),
    )
}

// ---------------------------------------------------------------------------

const HURI_NODES: usize = 8272;
const HURI_EDGES: usize = 52_068;
const HURI_SELF_LOOPS: usize = 480;

/// Writes a tab-separated edge list shaped like HuRI: 52,068 distinct edges
/// over 8,272 labelled nodes plus 480 self-loop rows, shuffled.
fn huri_fixture(path: &std::path::Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[9]));
    let label = |i: usize| format!("ENSG{:011}", 100_000 + i);
    let mut seen = std::collections::HashSet::new();
    let mut rows = Vec::new();
    // A random spanning tree so every label occurs in some edge.
    for v in 1..HURI_NODES {
        let u = rng.gen_range(0..v);
        seen.insert((u, v));
        rows.push((u, v));
    }
    while rows.len() < HURI_EDGES {
        let u = rng.gen_range(0..HURI_NODES);
        let v = rng.gen_range(0..HURI_NODES);
        let key = (u.min(v), u.max(v));
        if u != v && seen.insert(key) {
            rows.push(if rng.gen_bool(0.5) { (u, v) } else { (v, u) });
        }
    }
    for _ in 0..HURI_SELF_LOOPS {
        let v = rng.gen_range(0..HURI_NODES);
        rows.push((v, v));
    }
    rows.shuffle(&mut rng);
    let mut out = String::new();
    for (u, v) in rows {
        out.push_str(&format!("{}\t{}\n", label(u), label(v)));
    }
    std::fs::write(path, out).unwrap();
}

fn minimize_y_estimate(g: &Graph, seed: u64) -> (Option<f64>, f64) {
    let r = minimize_y(g, seed);
    let e = mle(&r.stats);
    (e.q_m, e.q_c)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut parts = Vec::new();
    let mut pass = true;

    let fixture = dir.path().join("huri_like.tsv");
    huri_fixture(&fixture);
    let spec = EdgeListSpec {
        delimiter: Some('\t'),
        ..EdgeListSpec::new(&fixture)
    };
    let ing = ingest_edge_list(&spec).unwrap();
    let r = ing.report;
    let identity = r.rows == r.edges + r.self_loops + r.duplicates + r.filtered;
    pass &= r.rows == HURI_EDGES + HURI_SELF_LOOPS
        && r.edges == HURI_EDGES
        && r.self_loops == HURI_SELF_LOOPS
        && r.nodes == HURI_NODES
        && identity;
    parts.push(format!(
        "fixture rows {} -> edges {} (self-loops {}, nodes {})",
        r.rows, r.edges, r.self_loops, r.nodes
    ));

    match std::env::var_os("HURI_PATH") {
        Some(real) => {
            let spec = EdgeListSpec {
                delimiter: Some('\t'),
                ..EdgeListSpec::new(real)
            };
            let ing = ingest_edge_list(&spec).unwrap();
            let (m, c) = minimize_y_estimate(&ing.graph, derive_seed(MASTER_SEED, &[9, 1]));
            let ok = within(m, 0.760, 0.02) && (c - 0.204).abs() <= 0.02;
            pass &= ok && ing.report.edges == HURI_EDGES;
            parts.push(format!("HuRI full q_m {} q_c {c:.3} (0.760/0.204)", fmt(m)));
            let (sub, _) =
                sample_induced_subgraph(&ing.graph, 0.10, derive_seed(MASTER_SEED, &[9, 2]))
                    .unwrap();
            let (m, c) = minimize_y_estimate(&sub, derive_seed(MASTER_SEED, &[9, 3]));
            pass &= m.is_some_and(|x| (0.6..=0.8).contains(&x)) && (0.15..=0.25).contains(&c);
            parts.push(format!("HuRI 10% q_m {} q_c {c:.3}", fmt(m)));
        }
        None => {
            // Stand-in for the 10% HuRI subsample: a DMC graph of the same
            // size at the estimates expected there, passed through the graph
            // file format so isolated nodes survive.
            let params = Params::new(0.684, 0.202).unwrap();
            let n = (HURI_NODES as f64 * 0.10).round() as usize;
            let (g, _) = forward_generate(n, params, derive_seed(MASTER_SEED, &[9, 4])).unwrap();
            let path = dir.path().join("proxy.txt");
            save_graph(&path, &g, &LabelMap::identity(n)).unwrap();
            let (back, _) = load_graph(&path).unwrap();
            let (m, c) = minimize_y_estimate(&back, derive_seed(MASTER_SEED, &[9, 6]));
            pass &= m.is_some_and(|x| (0.6..=0.8).contains(&x)) && (0.15..=0.25).contains(&c);
            parts.push(format!(
                "no HURI_PATH; {n}-node DMC proxy at (0.684, 0.202) gives q_m {} q_c {c:.3} (band [0.6,0.8] x [0.15,0.25])",
                fmt(m)
            ));
            let (sub, _) =
                sample_induced_subgraph(&ing.graph, 0.10, derive_seed(MASTER_SEED, &[9, 5]))
                    .unwrap();
            let (m, c) = minimize_y_estimate(&sub, derive_seed(MASTER_SEED, &[9, 7]));
            parts.push(format!(
                "fixture 10% subsample q_m {} q_c {c:.3} (informational)",
                fmt(m)
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------

/// Counts pair sequences by explicitly merging nodes of a plain adjacency
/// matrix, sharing no code with the library's enumerator.
fn enumerate_sequences(alive: &mut Vec<usize>) -> u64 {
    if alive.len() <= 1 {
        return 1;
    }
    let mut total = 0;
    for i in 0..alive.len() {
        for j in i + 1..alive.len() {
            let removed = alive.remove(j);
            total += enumerate_sequences(alive);
            alive.insert(j, removed);
        }
    }
    total
}

fn criterion_10() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[10]));
    for n in 2..=7usize {
        let oracle = enumerate_sequences(&mut (0..n).collect());
        let formula: u64 = theta_space_size(n).try_into().unwrap();
        let params = Params::new(rng.gen(), rng.gen()).unwrap();
        let (g, _) = forward_generate(n, params, rng.gen()).unwrap();
        let mut visited = 0u64;
        for_each_pair_sequence(&g, 8, |_, _, _| visited += 1).unwrap();
        pass &= oracle == formula && visited == formula;
        parts.push(format!("n={n}: {formula}"));
    }
    pass &= theta_space_size(7).to_string() == "56700";
    outcome(pass, parts.join(", "))
}

fn main() {
    let mut report = Report { failures: 0 };
    let minute = Some(Duration::from_secs(60));
    report.record(
        1,
        "exact likelihoods and MLEs of small graphs",
        minute,
        criterion_1,
    );
    report.record(2, "closed-form MLE vs 1001^2 grid", minute, criterion_2);

    let mut dominance = None;
    report.record(
        3,
        "exhaustive dominance on 7-node graphs",
        Some(Duration::from_secs(600)),
        || {
            let d = criterion_3();
            let o = Outcome {
                pass: d.outcome.pass,
                detail: d.outcome.detail.clone(),
            };
            dominance = Some(d);
            o
        },
    );
    let dominance = dominance.unwrap();

    let naive = [
        Method::MinimizeY,
        Method::MinimizeYThenNk,
        Method::OneRandom,
        Method::HundredRandom,
    ];
    let start = Instant::now();
    let mut methods = vec![Method::TrueTheta];
    methods.extend(naive);
    let r100 = experiment(100, methods, 4);
    let r200 = experiment(200, vec![Method::TrueTheta], 6);
    println!(
        "(experiments at 100 and 200 nodes over the 10x10 grid took {:.1}s on {} threads)",
        start.elapsed().as_secs_f64(),
        threads()
    );
    report.record(4, "estimator RMSE at 100 nodes", None, || {
        criterion_4(&r100.summary)
    });
    report.record(5, "arrival-order tau", None, || criterion_5(&r100, &naive));
    report.record(6, "true-theta Wald coverage", None, || {
        criterion_6(&r100.summary, &r200.summary)
    });
    report.record(7, "EM monotonicity", None, || {
        let runs = dominance.em_runs + r100.records.len() + r200.records.len();
        let v = dominance.em_violations
            + r100.records.iter().map(|r| r.em_violations).sum::<usize>()
            + r200.records.iter().map(|r| r.em_violations).sum::<usize>();
        outcome(v == 0, format!("{runs} EM runs, {v} objective decreases"))
    });
    report.record(8, "trace round trips", minute, criterion_8);
    report.record(9, "edge-list ingestion", None, criterion_9);
    report.record(10, "history counting", minute, criterion_10);

    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
