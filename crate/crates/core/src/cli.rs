//! Command-line front end. [`run`] parses arguments and returns the exit code
//! with the text destined for stdout and stderr, so commands can be driven
//! in-process by tests.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::constants::{
    derive_q, derive_qprime, estimate_config, estimate_q_triangles, Configuration,
    ConstantEstimate, ConstantsError,
};
use crate::cycles::counting_identity;
use crate::geometry::{directional_writhe, Direction};
use crate::invariants::{
    check_k331_census, check_k6_census, for_each_link, link_tally, sum_sq_writhe_with,
    CycleEdgeLists, InvariantError, LinkAggregate, LinkTally, DEFAULT_DIRECTIONS,
};
use crate::models::{
    complete_graph, disjoint_cycles_graph, gnp_graph, load_embedding, sample_points,
    tripartite_331, write_embedding, Graph, LinearEmbedding, ModelError, Purpose, SeedSpec,
};
use crate::montecarlo::{run_samples, with_threads};
use crate::stats::{bernoulli_ci99, Mergeable, RunningMoments};
use crate::theory::{self, TheoryParams, Q_REFERENCE};

/// Largest `n` enumerated without `--allow-large`.
pub const ENUMERATION_CAP: usize = 12;

/// Master seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 1;

const MAX_RESAMPLES: u32 = 1000;

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const CENSUS_VIOLATION: i32 = 2;
    pub const DEGENERATE: i32 = 3;
}

#[derive(Parser, Debug)]
#[command(
    name = "randlink",
    version,
    about = "Linking numbers and writhe of random linear graph embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate q by Monte Carlo
    EstimateQ {
        #[arg(long, value_enum, default_value_t = Method::Triangles)]
        method: Method,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Estimate s, u, v, w and the derived q and q'
    EstimateQprime {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sample embeddings and compare statistics with theory
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        /// Also estimate the sum of mean squared writhe over all cycles
        #[arg(long)]
        writhe: bool,
        /// Directions per embedding for writhe
        #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
        directions: usize,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Linking census of K6 embeddings
    CensusK6 {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Linking census of K3,3,1 embeddings
    CensusK331 {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Closed-form expected values
    Theory {
        #[arg(long, value_enum, default_value_t = Model::Complete)]
        graph: Model,
        #[arg(long, default_value = "6..12")]
        n: NRange,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        l: usize,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Linking numbers and +z writhe of a custom embedding file
    Analyze {
        file: std::path::PathBuf,
        #[arg(long)]
        allow_large: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the pair-counting identity exactly
    IdentityCheck {
        #[arg(long, default_value = "6..20")]
        n: NRange,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Triangles,
    Configs,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Model {
    Complete,
    Gnp,
    K331,
    Cycles,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A single `n` or an inclusive range `a..b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
struct NRange {
    start: usize,
    end: usize,
}

impl FromStr for NRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid vertex count '{t}'"))
        };
        let (start, end) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if start > end {
            return Err(format!("empty range {s}"));
        }
        Ok(Self { start, end })
    }
}

impl std::fmt::Display for NRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write results here instead of stdout
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (0 = all available cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Report wall_ms as 0 so output is byte-reproducible
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ParamArgs {
    #[arg(long, default_value_t = Q_REFERENCE)]
    q: f64,
    #[arg(long)]
    qprime: Option<f64>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[arg(long, value_enum, default_value_t = Model::Complete)]
    graph: Model,
    #[arg(long, default_value = "6")]
    n: NRange,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    l: usize,
    /// Lift the vertex cap on full cycle-pair enumeration
    #[arg(long)]
    allow_large: bool,
}

/// Result of one CLI invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Census(String),
    Mismatch(String),
    Degenerate(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => exit::USAGE,
            Self::Census(_) | Self::Mismatch(_) => exit::CENSUS_VIOLATION,
            Self::Degenerate(_) => exit::DEGENERATE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Census(m) | Self::Mismatch(m) | Self::Degenerate(m) => m,
        }
    }
}

impl From<ConstantsError> for CliError {
    fn from(e: ConstantsError) -> Self {
        Self::Degenerate(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Usage(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let text = e.render().to_string();
            return if code == exit::SUCCESS {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let mut notes = String::new();
    let (result, output) = match cli.command {
        Command::EstimateQ { method, run } => (cmd_estimate_q(method, &run, &mut notes), run.output),
        Command::EstimateQprime { run } => (cmd_estimate_qprime(&run), run.output),
        Command::Simulate {
            graph,
            writhe,
            directions,
            params,
            run,
        } => (
            cmd_simulate(&graph, writhe, directions, &params, &run),
            run.output,
        ),
        Command::CensusK6 { params, run } => (cmd_census(Census::K6, &params, &run), run.output),
        Command::CensusK331 { params, run } => {
            (cmd_census(Census::K331, &params, &run), run.output)
        }
        Command::Theory {
            graph,
            n,
            p,
            k,
            l,
            params,
            output,
        } => (cmd_theory(graph, n, p, k, l, &params, output.format), output),
        Command::Analyze {
            file,
            allow_large,
            output,
        } => (cmd_analyze(&file, allow_large, output.format), output),
        Command::IdentityCheck { n, output } => (cmd_identity(n, output.format), output),
    };
    // a command may produce output and still fail (identity mismatch)
    let (text, err) = match result {
        Ok(text) => (text, None),
        Err((text, e)) => (text, Some(e)),
    };
    let mut stdout = String::new();
    if let Some(path) = &output.out {
        if let Err(e) = std::fs::write(path, &text) {
            return Outcome {
                code: exit::USAGE,
                stdout,
                stderr: format!("error: cannot write {}: {e}\n", path.display()),
            };
        }
    } else {
        stdout = text;
    }
    match err {
        None => Outcome {
            code: exit::SUCCESS,
            stdout,
            stderr: notes,
        },
        Some(e) => Outcome {
            code: e.code(),
            stdout,
            stderr: format!("{notes}error: {}\n", e.message()),
        },
    }
}

type CmdResult = Result<String, (String, CliError)>;

fn fail(e: CliError) -> (String, CliError) {
    (String::new(), e)
}

fn validate_samples(run: &RunArgs, default: u64) -> Result<u64, (String, CliError)> {
    match run.samples.unwrap_or(default) {
        0 => Err(fail(CliError::Usage("--samples must be at least 1".into()))),
        n => Ok(n),
    }
}

fn params_of(p: &ParamArgs) -> Result<TheoryParams, (String, CliError)> {
    TheoryParams::new(p.q, p.qprime).map_err(|e| fail(CliError::Usage(e.to_string())))
}

fn elapsed_ms(start: Instant, run: &RunArgs) -> u128 {
    if run.no_timing {
        0
    } else {
        start.elapsed().as_millis()
    }
}

fn csv_f64(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn json_text(v: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct EstimateRow {
    name: String,
    method: &'static str,
    estimate: f64,
    ci99_halfwidth: f64,
    samples: u64,
    resamples: u64,
}

impl EstimateRow {
    fn new(method: &'static str, e: &ConstantEstimate) -> Self {
        Self {
            name: e.name.to_string(),
            method,
            estimate: e.estimate,
            ci99_halfwidth: e.ci99_halfwidth,
            samples: e.samples,
            resamples: e.resamples,
        }
    }
}

fn emit_estimates(rows: &[EstimateRow], command: &str, run: &RunArgs, wall_ms: u128) -> String {
    match run.output.format {
        Format::Csv => {
            let mut s =
                String::from("name,method,estimate,ci99_halfwidth,samples,seed,resamples,wall_ms\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.name, r.method, r.estimate, r.ci99_halfwidth, r.samples, run.seed, r.resamples, wall_ms
                );
            }
            s
        }
        Format::Json => json_text(json!({
            "config": { "command": command, "samples": rows.first().map(|r| r.samples), "seed": run.seed },
            "estimates": rows,
            "wall_ms": wall_ms as u64,
        })),
    }
}

fn cmd_estimate_q(method: Method, run: &RunArgs, notes: &mut String) -> CmdResult {
    let n = validate_samples(run, 10_000_000)?;
    let start = Instant::now();
    let rows = with_threads(run.threads, || -> Result<Vec<EstimateRow>, CliError> {
        let mut rows = Vec::new();
        let mut tri = None;
        if method != Method::Configs {
            let q = estimate_q_triangles::<f64>(n, run.seed)?;
            rows.push(EstimateRow::new("triangles", &q));
            tri = Some(q);
        }
        if method != Method::Triangles {
            let s = estimate_config::<f64>(Configuration::S, n, run.seed)?;
            let u = estimate_config::<f64>(Configuration::U, n, run.seed)?;
            let v = estimate_config::<f64>(Configuration::V, n, run.seed)?;
            let (q, _) = derive_q(&s, &u, &v);
            for e in [&s, &u, &v, &q] {
                rows.push(EstimateRow::new("configs", e));
            }
            if let Some(t) = tri {
                let verdict = if q.agrees_with(&t) { "agree" } else { "DISAGREE" };
                let _ = writeln!(
                    notes,
                    "note: routes {verdict}: |{} - {}| vs half-width sum {}",
                    t.estimate,
                    q.estimate,
                    t.ci99_halfwidth + q.ci99_halfwidth
                );
            }
        }
        Ok(rows)
    })
    .map_err(fail)?;
    Ok(emit_estimates(&rows, "estimate-q", run, elapsed_ms(start, run)))
}

fn cmd_estimate_qprime(run: &RunArgs) -> CmdResult {
    let n = validate_samples(run, 10_000_000)?;
    let start = Instant::now();
    let rows = with_threads(run.threads, || -> Result<Vec<EstimateRow>, CliError> {
        let est = |c| estimate_config::<f64>(c, n, run.seed);
        let s = est(Configuration::S)?;
        let u = est(Configuration::U)?;
        let v = est(Configuration::V)?;
        let w = est(Configuration::W)?;
        let (q, _) = derive_q(&s, &u, &v);
        let (qp, _) = derive_qprime(&s, &u, &v, &w);
        Ok([s, u, v, w, q, qp]
            .iter()
            .map(|e| EstimateRow::new("configs", e))
            .collect())
    })
    .map_err(fail)?;
    Ok(emit_estimates(&rows, "estimate-qprime", run, elapsed_ms(start, run)))
}

/// Draws the coordinates of sample `index` from its stream, redrawing while
/// the +z projection is degenerate.
fn clean_embedding(
    g: &Graph,
    seed: u64,
    index: u64,
) -> Result<(LinearEmbedding<f64>, LinkTally, u64), CliError> {
    let mut rng = SeedSpec::new(seed, index).rng(Purpose::Coordinates);
    for redraw in 0..MAX_RESAMPLES {
        let e = LinearEmbedding::new(g.clone(), sample_points(&mut rng, g.vertex_count()));
        match link_tally(&e) {
            Ok(t) => return Ok((e, t, redraw as u64)),
            Err(err) if err.is_degenerate() => continue,
            Err(err) => {
                return Err(CliError::Degenerate(format!(
                    "sample {index}: {err}\n{}",
                    write_embedding(&e)
                )))
            }
        }
    }
    Err(CliError::Degenerate(format!(
        "sample {index}: no generic embedding after {MAX_RESAMPLES} draws"
    )))
}

#[derive(Default)]
struct SimAggregate {
    links: LinkAggregate,
    writhe: RunningMoments,
}

impl Mergeable for SimAggregate {
    fn merge(&mut self, o: Self) {
        self.links.merge(o.links);
        self.writhe.merge(o.writhe);
    }
}

#[derive(Serialize)]
struct SimRow {
    model: Model,
    n: usize,
    p: f64,
    samples: u64,
    seed: u64,
    mean_sum_sq_lk: f64,
    stderr: f64,
    expected: f64,
    mean_avg_sq_lk: f64,
    mean_avg_abs_lk: f64,
    prop_lk0: f64,
    prop_lk1: f64,
    prop_lk2: f64,
    resamples: u64,
    wall_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_sum_sq_wr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr_wr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_wr: Option<f64>,
}

const SIM_HEADER: &str = "model,n,p,samples,seed,mean_sum_sq_lk,stderr,expected,mean_avg_sq_lk,mean_avg_abs_lk,prop_lk0,prop_lk1,prop_lk2,resamples,wall_ms";

fn cmd_simulate(
    ga: &GraphArgs,
    writhe: bool,
    directions: usize,
    pa: &ParamArgs,
    run: &RunArgs,
) -> CmdResult {
    let samples = validate_samples(run, 1000)?;
    let params = params_of(pa)?;
    if writhe && directions == 0 {
        return Err(fail(CliError::Usage("--directions must be at least 1".into())));
    }
    let ns: Vec<usize> = match ga.graph {
        Model::Complete | Model::Gnp => (ga.n.start..=ga.n.end).collect(),
        Model::K331 => vec![7],
        Model::Cycles => {
            if ga.k < 3 || ga.l < 3 {
                return Err(fail(CliError::Usage("--k and --l must be at least 3".into())));
            }
            vec![ga.k + ga.l]
        }
    };
    if ga.graph == Model::Gnp && !(ga.p > 0.0 && ga.p <= 1.0) {
        return Err(fail(CliError::Usage(format!("--p must lie in (0, 1], got {}", ga.p))));
    }
    for &n in &ns {
        if n > ENUMERATION_CAP && !ga.allow_large {
            return Err(fail(CliError::Usage(format!(
                "n = {n} exceeds the enumeration cap {ENUMERATION_CAP}; pass --allow-large"
            ))));
        }
        if matches!(ga.graph, Model::Complete | Model::Gnp) && n < 6 {
            return Err(fail(CliError::Usage(format!(
                "n = {n}: disjoint cycle pairs need at least 6 vertices"
            ))));
        }
    }
    let p = if ga.graph == Model::Gnp { ga.p } else { 1.0 };

    let mut rows = Vec::new();
    for &n in &ns {
        let start = Instant::now();
        let fixed = match ga.graph {
            Model::Complete => Some(complete_graph(n).map_err(|e| fail(e.into()))?),
            Model::K331 => Some(tripartite_331()),
            Model::Cycles => Some(disjoint_cycles_graph(ga.k, ga.l).map_err(|e| fail(e.into()))?),
            Model::Gnp => None,
        };
        let fixed_cycles = match (&fixed, writhe) {
            (Some(g), true) => Some(CycleEdgeLists::new(g)),
            _ => None,
        };
        let agg = with_threads(run.threads, || {
            run_samples(samples, SimAggregate::default, |acc, i| {
                let g = match &fixed {
                    Some(g) => g.clone(),
                    None => gnp_graph(n, p, SeedSpec::new(run.seed, i))?,
                };
                let (e, tally, redraws) = clean_embedding(&g, run.seed, i)?;
                acc.links.push(&tally);
                acc.links.resamples += redraws;
                if writhe {
                    let local;
                    let cycles = match &fixed_cycles {
                        Some(c) => c,
                        None => {
                            local = CycleEdgeLists::new(&g);
                            &local
                        }
                    };
                    let mut rng = SeedSpec::new(run.seed, i).rng(Purpose::Directions);
                    let w = sum_sq_writhe_with(&e, cycles, directions, &mut rng)
                        .map_err(|e| CliError::Degenerate(format!("sample {i}: {e}")))?;
                    acc.writhe.push(w.total);
                    acc.links.resamples += w.redraws;
                }
                Ok::<_, CliError>(())
            })
        })
        .map_err(fail)?;

        let expected = match ga.graph {
            Model::Complete => theory::expected_mean_sum_sq_link_complete(n as u64, &params),
            Model::Gnp => theory::expected_mean_sum_sq_link_np(n as u64, p, &params),
            Model::K331 => theory::k331_expected_sum(&params),
            Model::Cycles => theory::expected_pair_sq_link(ga.k as u64, ga.l as u64, &params),
        };
        let expected_wr = match (writhe, ga.graph, params.qprime) {
            (true, Model::Complete, Some(_)) => {
                theory::expected_sum_sq_writhe_complete(n as u64, &params).ok()
            }
            _ => None,
        };
        let links = &agg.links;
        rows.push(SimRow {
            model: ga.graph,
            n,
            p,
            samples,
            seed: run.seed,
            mean_sum_sq_lk: links.sum_sq.mean(),
            stderr: links.sum_sq.std_error(),
            expected,
            mean_avg_sq_lk: links.avg_sq.mean(),
            mean_avg_abs_lk: links.avg_abs.mean(),
            prop_lk0: links.proportion(0),
            prop_lk1: links.proportion(1),
            prop_lk2: links.proportion(2),
            resamples: links.resamples,
            wall_ms: elapsed_ms(start, run) as u64,
            mean_sum_sq_wr: writhe.then(|| agg.writhe.mean()),
            stderr_wr: writhe.then(|| agg.writhe.std_error()),
            expected_wr,
        });
    }

    Ok(match run.output.format {
        Format::Csv => {
            let mut s = String::from(SIM_HEADER);
            if writhe {
                s.push_str(",mean_sum_sq_wr,stderr_wr,expected_wr");
            }
            s.push('\n');
            for r in &rows {
                let model = serde_json::to_value(r.model).expect("model");
                let _ = write!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    model.as_str().unwrap_or_default(),
                    r.n,
                    r.p,
                    r.samples,
                    r.seed,
                    r.mean_sum_sq_lk,
                    r.stderr,
                    r.expected,
                    r.mean_avg_sq_lk,
                    r.mean_avg_abs_lk,
                    r.prop_lk0,
                    r.prop_lk1,
                    r.prop_lk2,
                    r.resamples,
                    r.wall_ms
                );
                if writhe {
                    let _ = write!(
                        s,
                        ",{},{},{}",
                        csv_f64(r.mean_sum_sq_wr),
                        csv_f64(r.stderr_wr),
                        csv_f64(r.expected_wr)
                    );
                }
                s.push('\n');
            }
            s
        }
        Format::Json => json_text(json!({
            "config": {
                "command": "simulate",
                "graph": ga.graph,
                "n": ga.n,
                "p": p,
                "k": ga.k,
                "l": ga.l,
                "samples": samples,
                "seed": run.seed,
                "writhe": writhe,
                "directions": directions,
                "q": params.q,
                "qprime": params.qprime,
            },
            "rows": rows,
        })),
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Census {
    K6,
    K331,
}

fn cmd_census(which: Census, pa: &ParamArgs, run: &RunArgs) -> CmdResult {
    let samples = validate_samples(run, 1000)?;
    let params = params_of(pa)?;
    type Check = fn(&LinkTally) -> Result<(), String>;
    let (g, name, check): (Graph, &str, Check) = match which {
        Census::K6 => (complete_graph(6).expect("K6"), "k6", check_k6_census),
        Census::K331 => (tripartite_331(), "k331", check_k331_census),
    };
    let start = Instant::now();
    let agg = with_threads(run.threads, || {
        run_samples(samples, LinkAggregate::new, |acc, i| {
            let (e, tally, redraws) = clean_embedding(&g, run.seed, i)?;
            check(&tally).map_err(|why| {
                CliError::Census(format!(
                    "sample {i} violates the {name} census: {why}\ncoordinates:\n{}",
                    write_embedding(&e)
                ))
            })?;
            acc.push(&tally);
            acc.resamples += redraws;
            Ok::<_, CliError>(())
        })
    })
    .map_err(fail)?;
    let one = agg.nonzero_hist.get(1).copied().unwrap_or(0);
    let ci = bernoulli_ci99(one, agg.samples());
    let (theory_p1, bound) = match which {
        Census::K6 => (theory::k6_p1(&params).ok(), "exact"),
        Census::K331 => (theory::k331_p1_lower(&params).ok(), "lower"),
    };
    let expected = match which {
        Census::K6 => theory::expected_mean_sum_sq_link_complete(6, &params),
        Census::K331 => theory::k331_expected_sum(&params),
    };
    let hist: Vec<String> = agg
        .nonzero_hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, c)| format!("{k}:{c}"))
        .collect();
    let wall_ms = elapsed_ms(start, run);
    Ok(match run.output.format {
        Format::Csv => format!(
            "model,samples,seed,p1,ci99_halfwidth,theory_p1,theory_kind,mean_sum_sq_lk,expected,nonzero_hist,prop_lk1,prop_lk2,resamples,wall_ms\n\
             {name},{},{},{},{},{},{bound},{},{},{},{},{},{},{wall_ms}\n",
            agg.samples(),
            run.seed,
            ci.estimate,
            ci.halfwidth,
            csv_f64(theory_p1),
            agg.sum_sq.mean(),
            expected,
            hist.join(";"),
            agg.proportion(1),
            agg.proportion(2),
            agg.resamples,
        ),
        Format::Json => json_text(json!({
            "config": { "command": format!("census-{name}"), "samples": samples, "seed": run.seed, "q": params.q },
            "p1": ci.estimate,
            "ci99_halfwidth": ci.halfwidth,
            "theory_p1": theory_p1,
            "theory_kind": bound,
            "mean_sum_sq_lk": agg.sum_sq.mean(),
            "expected": expected,
            "nonzero_hist": agg.nonzero_hist,
            "tally": agg.pooled,
            "resamples": agg.resamples,
            "wall_ms": wall_ms as u64,
        })),
    })
}

fn cmd_theory(
    graph: Model,
    range: NRange,
    p: f64,
    k: usize,
    l: usize,
    pa: &ParamArgs,
    format: Format,
) -> CmdResult {
    let params = params_of(pa)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(fail(CliError::Usage(format!("--p must lie in (0, 1], got {p}"))));
    }
    #[derive(Serialize)]
    struct Row {
        n: u64,
        p: f64,
        expected_sum_sq_lk: f64,
        lower_bound: Option<f64>,
        upper_bound: Option<f64>,
        expected_sum_sq_wr: Option<f64>,
    }
    let mut rows = Vec::new();
    match graph {
        Model::Complete | Model::Gnp => {
            let p = if graph == Model::Gnp { p } else { 1.0 };
            if range.start < 6 {
                return Err(fail(CliError::Usage("--n must be at least 6".into())));
            }
            for n in range.start as u64..=range.end as u64 {
                let (lo, hi) = theory::sum_sq_link_bounds(n, p, &params);
                rows.push(Row {
                    n,
                    p,
                    expected_sum_sq_lk: theory::expected_mean_sum_sq_link_np(n, p, &params),
                    lower_bound: Some(lo),
                    upper_bound: Some(hi),
                    expected_sum_sq_wr: (p == 1.0)
                        .then(|| theory::expected_sum_sq_writhe_complete(n, &params).ok())
                        .flatten(),
                });
            }
        }
        Model::K331 => rows.push(Row {
            n: 7,
            p: 1.0,
            expected_sum_sq_lk: theory::k331_expected_sum(&params),
            lower_bound: None,
            upper_bound: None,
            expected_sum_sq_wr: None,
        }),
        Model::Cycles => {
            if k < 3 || l < 3 {
                return Err(fail(CliError::Usage("--k and --l must be at least 3".into())));
            }
            rows.push(Row {
                n: (k + l) as u64,
                p: 1.0,
                expected_sum_sq_lk: theory::expected_pair_sq_link(k as u64, l as u64, &params),
                lower_bound: None,
                upper_bound: None,
                expected_sum_sq_wr: None,
            })
        }
    }
    let model = serde_json::to_value(graph).expect("model");
    let model = model.as_str().unwrap_or_default();
    Ok(match format {
        Format::Csv => {
            let mut s = String::from(
                "model,n,p,q,expected_sum_sq_lk,lower_bound,upper_bound,expected_sum_sq_wr\n",
            );
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{model},{},{},{},{},{},{},{}",
                    r.n,
                    r.p,
                    params.q,
                    r.expected_sum_sq_lk,
                    csv_f64(r.lower_bound),
                    csv_f64(r.upper_bound),
                    csv_f64(r.expected_sum_sq_wr)
                );
            }
            s
        }
        Format::Json => json_text(json!({
            "config": { "command": "theory", "graph": graph, "q": params.q, "qprime": params.qprime },
            "rows": rows,
        })),
    })
}

fn cmd_analyze(path: &std::path::Path, allow_large: bool, format: Format) -> CmdResult {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(CliError::Usage(format!("cannot read {}: {e}", path.display()))))?;
    let e = load_embedding(&text).map_err(|e| fail(e.into()))?;
    let n = e.graph.vertex_count();
    if n > ENUMERATION_CAP && !allow_large {
        return Err(fail(CliError::Usage(format!(
            "n = {n} exceeds the enumeration cap {ENUMERATION_CAP}; pass --allow-large"
        ))));
    }
    let join = |vs: &[u32]| {
        vs.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("-")
    };
    let mut pairs = Vec::new();
    for_each_link(&e, |a, b, lk| pairs.push((join(a), join(b), lk))).map_err(|err| {
        fail(match err {
            InvariantError::DegeneratePair { .. } => CliError::Degenerate(err.to_string()),
            other => CliError::Degenerate(other.to_string()),
        })
    })?;
    let mut cycles = Vec::new();
    for c in crate::cycles::enumerate_cycles(&e.graph, 3, n.max(3)) {
        let w = directional_writhe(&e.polygon(c.vertices()), &Direction::z()).map_err(|err| {
            fail(CliError::Degenerate(format!(
                "degenerate projection in cycle {c}: {err}"
            )))
        })?;
        cycles.push((c.to_string(), w));
    }
    let sum_sq: i64 = pairs.iter().map(|(_, _, lk)| lk * lk).sum();
    Ok(match format {
        Format::Csv => {
            let mut s = String::from("kind,first,second,value\n");
            for (a, b, lk) in &pairs {
                let _ = writeln!(s, "pair,{a},{b},{lk}");
            }
            for (c, w) in &cycles {
                let _ = writeln!(s, "cycle,{c},,{w}");
            }
            let _ = writeln!(s, "sum_sq_lk,,,{sum_sq}");
            s
        }
        Format::Json => json_text(json!({
            "config": { "command": "analyze", "file": path.display().to_string(), "n": n, "edges": e.graph.edge_count(), "in_unit_cube": e.in_unit_cube() },
            "pairs": pairs.iter().map(|(a, b, lk)| json!({"first": a, "second": b, "lk": lk})).collect::<Vec<_>>(),
            "cycles": cycles.iter().map(|(c, w)| json!({"cycle": c, "writhe": w})).collect::<Vec<_>>(),
            "sum_sq_lk": sum_sq,
        })),
    })
}

fn cmd_identity(range: NRange, format: Format) -> CmdResult {
    if range.start < 6 {
        return Err(fail(CliError::Usage("--n must be at least 6".into())));
    }
    let rows: Vec<(u64, String, String, bool)> = (range.start as u64..=range.end as u64)
        .map(|n| {
            let (l, r) = counting_identity(n);
            (n, l.to_string(), r.to_string(), l == r)
        })
        .collect();
    let text = match format {
        Format::Csv => {
            let mut s = String::from("n,lhs,rhs,equal\n");
            for (n, l, r, eq) in &rows {
                let _ = writeln!(s, "{n},{l},{r},{eq}");
            }
            s
        }
        Format::Json => json_text(json!({
            "config": { "command": "identity-check", "n": range },
            "rows": rows.iter().map(|(n, l, r, eq)| json!({"n": n, "lhs": l, "rhs": r, "equal": eq})).collect::<Vec<_>>(),
        })),
    };
    let bad: Vec<u64> = rows.iter().filter(|r| !r.3).map(|r| r.0).collect();
    if bad.is_empty() {
        Ok(text)
    } else {
        Err((text, CliError::Mismatch(format!("identity fails for n in {bad:?}"))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &str) -> Outcome {
        run(std::iter::once("randlink").chain(args.split_whitespace()))
    }

    #[test]
    fn n_range_parsing() {
        assert_eq!("6".parse::<NRange>().unwrap(), NRange { start: 6, end: 6 });
        assert_eq!("6..9".parse::<NRange>().unwrap(), NRange { start: 6, end: 9 });
        assert_eq!("6..=9".parse::<NRange>().unwrap(), NRange { start: 6, end: 9 });
        assert!("9..6".parse::<NRange>().is_err());
        assert!("x".parse::<NRange>().is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(go("estimate-q --samples 0").code, exit::USAGE);
        assert_eq!(go("simulate --n 13 --samples 2").code, exit::USAGE);
        assert_eq!(go("simulate --graph gnp --p 1.5 --samples 2").code, exit::USAGE);
        assert_eq!(go("no-such-command").code, exit::USAGE);
        assert_eq!(go("--help").code, exit::SUCCESS);
    }

    #[test]
    fn identity_small() {
        let out = go("identity-check --n 6..7");
        assert_eq!(out.code, 0);
        assert_eq!(out.stdout, "n,lhs,rhs,equal\n6,720,720,true\n7,15120,15120,true\n");
    }

    #[test]
    fn theory_zero_q() {
        let out = go("theory --graph complete --n 6 --q 0");
        assert_eq!(out.code, 0);
        let line = out.stdout.lines().nth(1).unwrap();
        assert_eq!(line.split(',').nth(4), Some("0"));
    }
}
