use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dmc_core::engine::{forward_generate, mle, Params, SufficientStats, Theta};
use dmc_core::estimation::{estimate_all, EmOptions, Estimate, ThetaEnsemble};
use dmc_core::evaluation::{
    kendall_tau, lenient_order, run_experiment, run_method, spearman, strict_order, ExperimentPlan,
    Method, MethodContext, Summary,
};
use dmc_core::io::{
    ingest_edge_list, load_graph, load_theta, sample_induced_subgraph, save_csv, save_graph,
    save_json, save_theta, EdgeListSpec, IngestReport, LabelMap, Manifest,
};
use dmc_core::reconstruction::{derive_seed, minimize_y, DeconstructionResult};
use dmc_core::{DmcError, Graph};

#[derive(Parser, Debug)]
#[command(
    name = "dmc",
    version,
    about = "DMC network model simulation and inference"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Master seed; drawn at random and reported when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "dmc-out")]
    out: PathBuf,
    /// Largest graph the exhaustive search accepts.
    #[arg(long, global = true, default_value_t = dmc_core::reconstruction::DEFAULT_EXHAUSTIVE_CAP)]
    exhaustive_cap: usize,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Grow a graph and record its arrival history.
    Generate {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        qm: f64,
        #[arg(long)]
        qc: f64,
    },
    /// Reconstruct arrival histories for a graph file.
    Deconstruct {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        algorithm: String,
        /// True history, needed by the methods that use it.
        #[arg(long)]
        theta: Option<PathBuf>,
        /// True parameters, needed by nk-true-initial.
        #[arg(long, requires = "qc")]
        qm: Option<f64>,
        #[arg(long, requires = "qm")]
        qc: Option<f64>,
    },
    /// Reconstruct histories and apply the max, EM and averaged estimators.
    Estimate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        algorithm: String,
        #[arg(long)]
        theta: Option<PathBuf>,
        #[arg(long, requires = "qc")]
        qm: Option<f64>,
        #[arg(long, requires = "qm")]
        qc: Option<f64>,
    },
    /// Run the Monte Carlo experiment over a parameter grid.
    Simulate {
        /// Graph sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 50, 100])]
        nodes: Vec<usize>,
        /// Methods, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "minimize-y")]
        algorithm: Vec<String>,
        /// Restrict the grid to one point (requires --qc).
        #[arg(long, requires = "qc")]
        qm: Option<f64>,
        #[arg(long, requires = "qm")]
        qc: Option<f64>,
        /// Grid resolution k: q in {1/(k+1), ..., k/(k+1)}.
        #[arg(long, default_value_t = 10)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Largest graph the nk and nk-plus-one methods are run on.
        #[arg(long, default_value_t = 100)]
        nk_node_limit: usize,
    },
    /// Kendall's tau between a true and an estimated history.
    Tau {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
    },
    /// Ingest an edge list, optionally subsample, then estimate with minimize-y.
    IngestEstimate {
        #[arg(long)]
        input: PathBuf,
        /// Single-character field separator; whitespace when omitted.
        #[arg(long)]
        delimiter: Option<char>,
        #[arg(long)]
        header: bool,
        /// Zero-based score column.
        #[arg(long)]
        score_column: Option<usize>,
        /// Keep rows whose score is strictly greater than this.
        #[arg(long, requires = "score_column")]
        score_threshold: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        sample_fraction: f64,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<DmcError> for Failure {
    fn from(e: DmcError) -> Self {
        match e {
            DmcError::InvalidConfig(_) | DmcError::InvalidProbability { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct ThetaRecord {
    arrival_order: Vec<String>,
    anchors: Vec<String>,
}

#[derive(Serialize)]
struct ResultRecord {
    theta: ThetaRecord,
    stats: SufficientStats,
    q_m_hat: Option<f64>,
    q_c_hat: f64,
    log_likelihood: f64,
}

#[derive(Serialize)]
struct EstimateRecord {
    method: String,
    ensemble_size: usize,
    max: Estimate,
    em: Estimate,
    em_iterations: usize,
    em_monotonicity_violations: usize,
    averaged: Estimate,
}

fn theta_record(theta: &Theta, labels: &LabelMap) -> ThetaRecord {
    let name = |v: &dmc_core::NodeId| labels.label(*v).unwrap_or("?").to_owned();
    ThetaRecord {
        arrival_order: theta.arrival_order.iter().map(name).collect(),
        anchors: theta.anchors.iter().map(name).collect(),
    }
}

fn result_record(r: &DeconstructionResult, labels: &LabelMap) -> ResultRecord {
    let est = mle(&r.stats);
    ResultRecord {
        theta: theta_record(&r.theta, labels),
        stats: r.stats,
        q_m_hat: est.q_m,
        q_c_hat: est.q_c,
        log_likelihood: r.log_likelihood_at_mle,
    }
}

fn estimate_record(ens: &ThetaEnsemble) -> CliResult<EstimateRecord> {
    let all = estimate_all(ens, EmOptions::default())?;
    Ok(EstimateRecord {
        method: ens.source().to_owned(),
        ensemble_size: all.ensemble_size,
        max: all.max,
        em: all.em.estimate,
        em_iterations: all.em.iterations,
        em_monotonicity_violations: all.em.monotonicity_violations,
        averaged: all.averaged,
    })
}

fn parse_method(name: &str) -> CliResult<Method> {
    name.parse().map_err(|_| {
        let known: Vec<&str> = Method::ALL.iter().map(|m| m.tag()).collect();
        Failure::Usage(format!(
            "unknown algorithm '{name}' (expected one of: {})",
            known.join(", ")
        ))
    })
}

fn truth_params(qm: Option<f64>, qc: Option<f64>) -> CliResult<Option<Params>> {
    match (qm, qc) {
        (Some(m), Some(c)) => Ok(Some(Params::new(m, c)?)),
        _ => Ok(None),
    }
}

struct Run<'a> {
    common: &'a Common,
    seed: u64,
    seed_generated: bool,
    threads: usize,
    command: &'a Command,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Run<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_owned());
        self.common.out.join(name)
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn finish(mut self) -> CliResult<()> {
        let path = self.path("manifest.json");
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command_name(self.command).to_owned(),
            seed: self.seed,
            seed_generated: self.seed_generated,
            threads: self.threads,
            config: serde_json::json!({
                "command": self.command,
                "exhaustive_cap": self.common.exhaustive_cap,
            }),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        save_json(&path, &manifest)?;
        Ok(())
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Generate { .. } => "generate",
        Command::Deconstruct { .. } => "deconstruct",
        Command::Estimate { .. } => "estimate",
        Command::Simulate { .. } => "simulate",
        Command::Tau { .. } => "tau",
        Command::IngestEstimate { .. } => "ingest-estimate",
    }
}

fn ensemble_for(
    run: &mut Run,
    graph_path: &Path,
    algorithm: &str,
    theta_path: Option<&Path>,
    params: Option<Params>,
) -> CliResult<(Graph, LabelMap, ThetaEnsemble)> {
    let method = parse_method(algorithm)?;
    run.input(graph_path);
    let (g, labels) = load_graph(graph_path)?;
    let theta = match theta_path {
        Some(p) => {
            run.input(p);
            Some(load_theta(p, &labels)?)
        }
        None => None,
    };
    if method.needs_truth() {
        if theta.is_none() {
            return Err(Failure::Usage(format!("{method} needs --theta")));
        }
        if method == Method::NkTrueInitial && params.is_none() {
            return Err(Failure::Usage(format!("{method} needs --qm and --qc")));
        }
    }
    let ctx = MethodContext {
        exhaustive_cap: run.common.exhaustive_cap,
        ..MethodContext::default()
    };
    let placeholder = Params { q_m: 0.5, q_c: 0.5 };
    let truth = theta.as_ref().map(|t| (t, params.unwrap_or(placeholder)));
    let ens = run_method(method, &g, truth, run.seed, &ctx)?;
    Ok((g, labels, ens))
}

fn print_summary(s: &Summary) {
    let fmt = |v: Option<f64>| v.map_or("n/a".to_owned(), |x| format!("{x:.3}"));
    println!(
        "{:<24} {:>5} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>7} {:>7}",
        "method",
        "n",
        "graphs",
        "rmse_m",
        "rmse_c",
        "em_m",
        "em_c",
        "avg_m",
        "avg_c",
        "tau_s",
        "tau_l"
    );
    for r in &s.rows {
        println!(
            "{:<24} {:>5} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>7.3} {:>7.3}",
            r.method.tag(),
            r.nodes,
            r.graphs,
            fmt(r.rmse_q_m_max),
            fmt(r.rmse_q_c_max),
            fmt(r.rmse_q_m_em),
            fmt(r.rmse_q_c_em),
            fmt(r.rmse_q_m_avg),
            fmt(r.rmse_q_c_avg),
            r.mean_tau_strict,
            r.mean_tau_lenient,
        );
    }
    for c in &s.skipped {
        println!("{:<24} {:>5} n/a ({})", c.method.tag(), c.nodes, c.reason);
    }
    println!(
        "worst-case reference rmse: {:.3}",
        s.worst_case_rmse_reference
    );
}

fn run(cli: &Cli) -> CliResult<()> {
    let (seed, seed_generated) = match cli.common.seed {
        Some(s) => (s, false),
        None => {
            let s = rand::random::<u64>();
            eprintln!("no --seed given, using {s}");
            (s, true)
        }
    };
    let threads = if cli.common.threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        cli.common.threads
    };
    // Ignore the error raised when the global pool already exists.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    fs::create_dir_all(&cli.common.out).map_err(|e| Failure::Data(e.to_string()))?;
    let mut run = Run {
        common: &cli.common,
        seed,
        seed_generated,
        threads,
        command: &cli.command,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };

    match &cli.command {
        Command::Generate { nodes, qm, qc } => {
            let params = Params::new(*qm, *qc)?;
            if *nodes == 0 {
                return Err(Failure::Usage("--nodes must be positive".into()));
            }
            let (g, theta) = forward_generate(*nodes, params, seed)?;
            let labels = LabelMap::identity(*nodes);
            save_graph(&run.path("graph.txt"), &g, &labels)?;
            save_theta(&run.path("theta.txt"), &theta, &labels)?;
            println!(
                "generated {} nodes, {} edges",
                g.node_count(),
                g.edge_count()
            );
        }
        Command::Deconstruct {
            graph,
            algorithm,
            theta,
            qm,
            qc,
        } => {
            let params = truth_params(*qm, *qc)?;
            let (_, labels, ens) =
                ensemble_for(&mut run, graph, algorithm, theta.as_deref(), params)?;
            let records: Vec<ResultRecord> = ens
                .results()
                .iter()
                .map(|r| result_record(r, &labels))
                .collect();
            save_json(&run.path("results.json"), &records)?;
            let best = &ens.results()[ens.argmax()];
            save_theta(&run.path("theta.txt"), &best.theta, &labels)?;
            println!(
                "{} distinct histories, best log-likelihood {:.6}",
                ens.len(),
                best.log_likelihood_at_mle
            );
        }
        Command::Estimate {
            graph,
            algorithm,
            theta,
            qm,
            qc,
        } => {
            let params = truth_params(*qm, *qc)?;
            let (_, labels, ens) =
                ensemble_for(&mut run, graph, algorithm, theta.as_deref(), params)?;
            let rec = estimate_record(&ens)?;
            save_json(&run.path("estimate.json"), &rec)?;
            let best = &ens.results()[ens.argmax()];
            save_theta(&run.path("theta.txt"), &best.theta, &labels)?;
            let show = |v: Option<f64>| v.map_or("null".to_owned(), |x| format!("{x:.6}"));
            println!(
                "max q_m={} q_c={:.6}; em q_m={} q_c={:.6}; averaged q_m={} q_c={:.6}",
                show(rec.max.q_m_hat),
                rec.max.q_c_hat,
                show(rec.em.q_m_hat),
                rec.em.q_c_hat,
                show(rec.averaged.q_m_hat),
                rec.averaged.q_c_hat
            );
        }
        Command::Simulate {
            nodes,
            algorithm,
            qm,
            qc,
            grid,
            replicates,
            nk_node_limit,
        } => {
            let methods = algorithm
                .iter()
                .map(|a| parse_method(a))
                .collect::<CliResult<Vec<_>>>()?;
            if *grid == 0 || *replicates == 0 {
                return Err(Failure::Usage(
                    "--grid and --replicates must be positive".into(),
                ));
            }
            let mut plan = ExperimentPlan::new(nodes.clone(), methods, seed);
            if let Some(p) = truth_params(*qm, *qc)? {
                plan.param_grid = vec![p];
            } else {
                plan.param_grid = ExperimentPlan::interior_grid(*grid);
            }
            plan.replicates = *replicates;
            plan.threads = threads;
            plan.nk_node_limit = *nk_node_limit;
            plan.context.exhaustive_cap = cli.common.exhaustive_cap;
            let report = run_experiment(&plan)?;
            save_csv(&run.path("records.csv"), &report.records)?;
            save_json(&run.path("summary.json"), &report.summary)?;
            save_json(&run.path("plan.json"), &plan)?;
            print_summary(&report.summary);
        }
        Command::Tau {
            graph,
            truth,
            estimate,
        } => {
            run.input(graph);
            run.input(truth);
            run.input(estimate);
            let (g, labels) = load_graph(graph)?;
            let t = load_theta(truth, &labels)?;
            let e = load_theta(estimate, &labels)?;
            t.validate(&g)?;
            e.validate(&g)?;
            let truth_order = lenient_order(&t);
            let strict = kendall_tau(&truth_order, &strict_order(&e, derive_seed(seed, &[1])))?;
            let lenient = kendall_tau(&truth_order, &lenient_order(&e))?;
            save_json(
                &run.path("tau.json"),
                &serde_json::json!({ "strict": strict, "lenient": lenient }),
            )?;
            println!("strict tau {strict:.6}, lenient tau {lenient:.6}");
        }
        Command::IngestEstimate {
            input,
            delimiter,
            header,
            score_column,
            score_threshold,
            sample_fraction,
        } => {
            run.input(input);
            let spec = EdgeListSpec {
                delimiter: *delimiter,
                has_header: *header,
                score_column: *score_column,
                score_threshold: *score_threshold,
                ..EdgeListSpec::new(input)
            };
            let ingested = ingest_edge_list(&spec)?;
            let (g, labels) = if *sample_fraction < 1.0 {
                let (sub, keep) = sample_induced_subgraph(
                    &ingested.graph,
                    *sample_fraction,
                    derive_seed(seed, &[0]),
                )?;
                (sub, ingested.labels.restrict(&keep)?)
            } else if *sample_fraction == 1.0 {
                (ingested.graph, ingested.labels)
            } else {
                return Err(Failure::Usage(format!(
                    "--sample-fraction {sample_fraction} is outside (0, 1]"
                )));
            };
            let result = minimize_y(&g, derive_seed(seed, &[1]));
            let ens = ThetaEnsemble::new(vec![result], Method::MinimizeY.tag())?;
            let rec = estimate_record(&ens)?;
            let best = &ens.results()[0];

            let order = lenient_order(&best.theta).sequence();
            let mut ranks = Vec::with_capacity(order.len());
            let mut degrees = Vec::with_capacity(order.len());
            let mut rows = Vec::with_capacity(order.len());
            for (rank, v) in order.iter().enumerate() {
                let d = g.degree(*v)?;
                ranks.push(rank as f64);
                degrees.push(d as f64);
                rows.push(NodeOrderRow {
                    label: labels.label(*v).unwrap_or("?").to_owned(),
                    arrival_rank: rank,
                    degree: d,
                });
            }
            let correlation = spearman(&ranks, &degrees);

            save_graph(&run.path("graph.txt"), &g, &labels)?;
            save_theta(&run.path("theta.txt"), &best.theta, &labels)?;
            save_csv(&run.path("node_order.csv"), &rows)?;
            save_json(
                &run.path("estimate.json"),
                &IngestEstimateRecord {
                    ingest: ingested.report,
                    sampled_nodes: g.node_count(),
                    sampled_edges: g.edge_count(),
                    estimate: rec,
                    age_degree_spearman: correlation,
                },
            )?;
            let r = ingested.report;
            println!(
                "rows {}, self-loops {}, duplicates {}, filtered {}, edges {}, nodes {}",
                r.rows, r.self_loops, r.duplicates, r.filtered, r.edges, r.nodes
            );
            let est = &ens.results()[0];
            let point = mle(&est.stats);
            println!(
                "q_m={} q_c={:.6} on {} nodes; age-degree spearman {:.4}",
                point.q_m.map_or("null".to_owned(), |x| format!("{x:.6}")),
                point.q_c,
                g.node_count(),
                correlation
            );
        }
    }
    run.finish()
}

#[derive(Serialize)]
struct NodeOrderRow {
    label: String,
    arrival_rank: usize,
    degree: usize,
}

#[derive(Serialize)]
struct IngestEstimateRecord {
    ingest: IngestReport,
    sampled_nodes: usize,
    sampled_edges: usize,
    estimate: EstimateRecord,
    age_degree_spearman: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
