//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check or bound failed, 2 usage error, 3 runtime error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use vrjp_core::beta::sample_beta;
use vrjp_core::flow::{moment_bound, recurrence_threshold, verify_bounds, WeightDist};
use vrjp_core::graph::{Graph, SubdividedGraph};
use vrjp_core::jump::{remove_self_loops, restrict_path, simulate_mjp, JumpPath, MjpParams};
use vrjp_core::reinforced::{simulate_errw, simulate_vrjp_direct, simulate_vrjp_mixture};
use vrjp_core::report::{markdown, plot_columns, read_rows};
use vrjp_core::rng::try_par_collect;
use vrjp_core::verify::{run_suite, Budget, LEVELS, SCHEMA_VERSION, SUITES};
use vrjp_core::Error;

#[derive(Parser)]
#[command(name = "vrjp", version, about = "Reinforced jump processes, restrictions and renormalization flows")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON file of option defaults; command-line values take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
    Md,
}

#[derive(Subcommand)]
enum Cmd {
    /// Subdivide every edge of a graph into 2^r edges.
    Subdivide(SubdivideArgs),
    /// Draw samples of the beta field.
    SampleBeta(SampleBetaArgs),
    /// Simulate VRJP, ERRW or a Markov jump process.
    Simulate(SimulateArgs),
    /// Restrict simulated paths to a vertex subset.
    Restrict(RestrictArgs),
    /// Monte Carlo moments of the renormalization flow against the bounds.
    Flow(FlowArgs),
    /// Evaluate the decay bounds and the recurrence hypothesis.
    Bounds(BoundsArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Tabulate a moments CSV and flag bound violations.
    Report(ReportArgs),
}

#[derive(Args)]
struct SubdivideArgs {
    /// Graph file: JSON, or CSV with header `u,v,weight`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Subdivision depth; every edge becomes 2^r edges.
    #[arg(long)]
    r: Option<u32>,
}

#[derive(Args)]
struct SampleBetaArgs {
    /// Graph file: JSON, or CSV with header `u,v,weight`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Number of Monte Carlo samples.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum Model {
    Vrjp,
    Errw,
    Mjp,
}

#[derive(Args)]
struct SimulateArgs {
    /// Process to simulate.
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Graph file: JSON, or CSV with header `u,v,weight`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Jumps per path.
    #[arg(long)]
    steps: Option<usize>,
    /// Number of independent paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Start vertex id (first vertex by default).
    #[arg(long)]
    start: Option<String>,
    /// VRJP only: sample through the random environment (exchangeable time scale).
    #[arg(long)]
    mixture: bool,
}

#[derive(Args)]
struct RestrictArgs {
    /// Paths CSV as written by `simulate`.
    #[arg(long)]
    paths: Option<PathBuf>,
    /// Comma-separated vertex ids of the subset.
    #[arg(long)]
    subset: Option<String>,
    /// Keep the self-loops created by excised excursions.
    #[arg(long)]
    keep_loops: bool,
}

#[derive(Args)]
struct FlowArgs {
    /// Graph file: JSON, or CSV with header `u,v,weight`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Subdivision depth; every edge becomes 2^r edges.
    #[arg(long)]
    r: Option<u32>,
    /// Target level of the flow (0 by default).
    #[arg(long)]
    l: Option<u32>,
    /// Comma-separated exponents.
    #[arg(long)]
    alpha: Option<String>,
    /// Weight law, `gamma:a=<shape>` or `const:w=<value>`.
    #[arg(long)]
    dist: Option<String>,
    /// Number of Monte Carlo samples.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Exponent of the moment.
    #[arg(long)]
    alpha: Option<f64>,
    /// Subdivision depth; every edge becomes 2^r edges.
    #[arg(long)]
    r: Option<u32>,
    /// Target level of the flow (0 by default).
    #[arg(long)]
    l: Option<u32>,
    /// E[W^alpha] of the input weights.
    #[arg(long)]
    moment: Option<f64>,
    /// E[ln W] of the input weights.
    #[arg(long)]
    mean_log: Option<f64>,
    /// Weight law from which both moments are computed.
    #[arg(long)]
    dist: Option<String>,
    /// External recurrence constant; enables the recurrence check.
    #[arg(long)]
    c3: Option<f64>,
    /// Maximal degree for the recurrence check.
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name, or `all`.
    suite: String,
    /// Smaller Monte Carlo sizes.
    #[arg(long)]
    quick: bool,
    /// Significance level of the hypothesis tests (0.01 or 0.05).
    #[arg(long)]
    significance: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Moments CSV as written by `flow`.
    input: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

struct Ctx {
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    config: Map<String, Value>,
}

impl Ctx {
    /// Command-line value, else config value, else `None`.
    fn opt<T: DeserializeOwned>(&self, cli: Option<T>, key: &str) -> Res<Option<T>> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.config.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| Failure::Usage(format!("config key `{key}`: {e}"))),
        }
    }

    fn req<T: DeserializeOwned>(&self, cli: Option<T>, key: &str) -> Res<T> {
        self.opt(cli, key)?.ok_or_else(|| Failure::Usage(format!("missing required option --{}", key.replace('_', "-"))))
    }

    fn seed(&self) -> Res<u64> {
        self.req(self.seed, "seed")
    }

    fn format(&self, default: Format, allowed: &[Format]) -> Res<Format> {
        let f = self.opt(self.format, "format")?.unwrap_or(default);
        if !allowed.contains(&f) {
            let name = |f: &Format| f.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string());
            let ok: Vec<String> = allowed.iter().map(name).collect();
            return Err(Failure::Usage(format!("format `{}` not supported here (use {})", name(&f), ok.join(" or "))));
        }
        Ok(f)
    }

    fn write(&self, bytes: &[u8]) -> Res<()> {
        match self.opt(self.out.clone(), "out")? {
            Some(p) => fs::write(p, bytes)?,
            None => std::io::stdout().write_all(bytes)?,
        }
        Ok(())
    }

    fn write_json(&self, v: &Value) -> Res<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
        s.push('\n');
        self.write(s.as_bytes())
    }
}

/// Reads a graph; `.csv` files are edge lists, anything else is JSON.
fn load_graph(p: &Path) -> Res<Graph> {
    let text = fs::read_to_string(p)?;
    let g = if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        Graph::from_csv_str(&text)?
    } else {
        Graph::from_json_str(&text)?
    };
    Ok(g)
}

fn csv_bytes<F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<(), csv::Error>>(f: F) -> Res<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        f(&mut w).map_err(|e| Failure::Runtime(e.to_string()))?;
        w.flush()?;
    }
    Ok(buf)
}

fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

fn subdivide(ctx: &Ctx, a: SubdivideArgs) -> Res<i32> {
    let g = load_graph(&ctx.req(a.graph, "graph")?)?;
    let sg = SubdividedGraph::build(&g, ctx.req(a.r, "r")?)?;
    let js = sg.to_json(None)?;
    match ctx.format(Format::Json, &[Format::Json, Format::Csv])? {
        Format::Json => ctx.write_json(&serde_json::to_value(&js).map_err(|e| Failure::Runtime(e.to_string()))?)?,
        _ => {
            let buf = csv_bytes(|w| {
                w.write_record(["u", "v", "weight"])?;
                for (u, v, wt) in &js.edges {
                    let s = |x: &Value| x.as_str().map_or_else(|| x.to_string(), str::to_string);
                    w.write_record([s(u), s(v), fmt_f(*wt)])?;
                }
                Ok(())
            })?;
            ctx.write(&buf)?;
        }
    }
    Ok(0)
}

fn sample_beta_cmd(ctx: &Ctx, a: SampleBetaArgs) -> Res<i32> {
    let g = load_graph(&ctx.req(a.graph, "graph")?)?;
    let n = ctx.opt(a.samples, "samples")?.unwrap_or(1);
    let seed = ctx.seed()?;
    let w = g.weight_matrix();
    let draws = try_par_collect(seed, n, |r| sample_beta(&w, r, None).map(|s| s.beta))?;
    match ctx.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => ctx.write_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "seed": seed,
            "vertices": g.vertices(),
            "samples": draws,
        }))?,
        _ => {
            let buf = csv_bytes(|w| {
                w.write_record(g.vertices())?;
                for b in &draws {
                    w.write_record(b.iter().map(|x| fmt_f(*x)))?;
                }
                Ok(())
            })?;
            ctx.write(&buf)?;
        }
    }
    Ok(0)
}

fn start_vertex(g: &Graph, id: Option<String>) -> Res<usize> {
    match id {
        None => Ok(0),
        Some(s) => g.index_of(&s).ok_or_else(|| Failure::Usage(format!("unknown start vertex `{s}`"))),
    }
}

fn write_paths(ctx: &Ctx, labels: &[String], paths: &[JumpPath], meta: Value) -> Res<()> {
    match ctx.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => {
            let ps: Vec<Value> = paths
                .iter()
                .map(|p| {
                    json!({
                        "states": p.states.iter().map(|&x| labels[x].clone()).collect::<Vec<_>>(),
                        "waits": p.waits,
                    })
                })
                .collect();
            let mut m = meta;
            m["schema_version"] = json!(SCHEMA_VERSION);
            m["paths"] = Value::Array(ps);
            ctx.write_json(&m)
        }
        _ => {
            let buf = csv_bytes(|w| {
                w.write_record(["path", "step", "vertex", "wait"])?;
                for (k, p) in paths.iter().enumerate() {
                    for (n, &x) in p.states.iter().enumerate() {
                        let wait = p.waits.get(n).map(|t| fmt_f(*t)).unwrap_or_default();
                        w.write_record([k.to_string(), n.to_string(), labels[x].clone(), wait])?;
                    }
                }
                Ok(())
            })?;
            ctx.write(&buf)
        }
    }
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Res<i32> {
    let model = ctx.req(a.model, "model")?;
    let g = load_graph(&ctx.req(a.graph, "graph")?)?;
    let steps = ctx.req(a.steps, "steps")?;
    let n = ctx.opt(a.paths, "paths")?.unwrap_or(1);
    let mixture = a.mixture || ctx.opt(None, "mixture")?.unwrap_or(false);
    let start = start_vertex(&g, ctx.opt(a.start, "start")?)?;
    let seed = ctx.seed()?;
    let w = g.weight_matrix();
    let paths: Vec<JumpPath> = match model {
        Model::Vrjp if mixture => try_par_collect(seed, n, |r| simulate_vrjp_mixture(&w, start, steps, r))?,
        Model::Vrjp => try_par_collect(seed, n, |r| simulate_vrjp_direct(&w, start, steps, r))?,
        Model::Errw => try_par_collect(seed, n, |r| {
            simulate_errw(&g, start, steps, r).map(|states| JumpPath { states, waits: Vec::new() })
        })?,
        Model::Mjp => {
            // conductances from the graph weights, reversible measure 2 at every vertex
            let params = MjpParams::new(w.matrix().clone(), vec![2.0; g.n_vertices()])?;
            try_par_collect(seed, n, |r| simulate_mjp(&params, start, steps, r))?
        }
    };
    let meta = json!({ "model": format!("{model:?}").to_lowercase(), "seed": seed, "mixture": mixture });
    write_paths(ctx, g.vertices(), &paths, meta)?;
    Ok(0)
}

fn read_paths(p: &Path) -> Res<(Vec<String>, Vec<JumpPath>)> {
    let mut rdr = csv::Reader::from_path(p).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut labels: Vec<String> = Vec::new();
    let mut paths: Vec<JumpPath> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Failure::Runtime(e.to_string()))?;
        if rec.len() != 4 {
            return Err(Failure::Runtime("paths CSV needs columns path, step, vertex, wait".into()));
        }
        let k: usize = rec[0].parse().map_err(|_| Failure::Runtime(format!("bad path index `{}`", &rec[0])))?;
        if k == paths.len() {
            paths.push(JumpPath::default());
        } else if k + 1 != paths.len() {
            return Err(Failure::Runtime("paths CSV rows must be grouped by path in order".into()));
        }
        let v = match labels.iter().position(|l| l == &rec[2]) {
            Some(i) => i,
            None => {
                labels.push(rec[2].to_string());
                labels.len() - 1
            }
        };
        let path = paths.last_mut().expect("pushed");
        path.states.push(v);
        if !rec[3].is_empty() {
            let t: f64 = rec[3].parse().map_err(|_| Failure::Runtime(format!("bad wait `{}`", &rec[3])))?;
            path.waits.push(t);
        }
    }
    Ok((labels, paths))
}

fn restrict(ctx: &Ctx, a: RestrictArgs) -> Res<i32> {
    let (labels, paths) = read_paths(&ctx.req(a.paths, "paths")?)?;
    let subset: String = ctx.req(a.subset, "subset")?;
    let keep = a.keep_loops || ctx.opt(None, "keep_loops")?.unwrap_or(false);
    let mut j = Vec::new();
    for id in subset.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        // vertices never visited cannot appear in the restriction
        if let Some(i) = labels.iter().position(|l| l == id) {
            j.push(i);
        }
    }
    let mut out = Vec::with_capacity(paths.len());
    for p in &paths {
        let discrete = p.waits.is_empty();
        let full = if discrete { JumpPath { states: p.states.clone(), waits: vec![1.0; p.states.len()] } } else { p.clone() };
        let mut q = restrict_path(&full, &j)?;
        if !keep {
            q = remove_self_loops(&q);
        }
        if discrete {
            q.waits.clear();
        }
        out.push(q);
    }
    write_paths(ctx, &labels, &out, json!({ "subset": subset, "loops_removed": !keep }))?;
    Ok(0)
}

fn parse_alphas(s: &str) -> Res<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Failure::Usage(format!("alpha `{t}`: {e}"))))
        .collect()
}

fn flow_cmd(ctx: &Ctx, a: FlowArgs) -> Res<i32> {
    let g = load_graph(&ctx.req(a.graph, "graph")?)?;
    let r = ctx.req(a.r, "r")?;
    let l = ctx.opt(a.l, "l")?.unwrap_or(0);
    let alphas = parse_alphas(&ctx.opt(a.alpha, "alpha")?.unwrap_or_else(|| "0.25".into()))?;
    let dist: WeightDist = ctx.opt(a.dist, "dist")?.unwrap_or_else(|| "gamma:a=1".into()).parse()?;
    let n = ctx.opt(a.samples, "samples")?.unwrap_or(10_000);
    let seed = ctx.seed()?;
    let rows = verify_bounds(&g, r, l, &alphas, &dist, n, seed)?;
    match ctx.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => ctx.write_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "seed": seed,
            "dist": dist,
            "samples": n,
            "rows": rows,
        }))?,
        _ => {
            let buf = csv_bytes(|w| {
                for row in &rows {
                    w.serialize(row)?;
                }
                Ok(())
            })?;
            ctx.write(&buf)?;
        }
    }
    Ok(0)
}

fn bounds_cmd(ctx: &Ctx, a: BoundsArgs) -> Res<i32> {
    let alpha = ctx.req(a.alpha, "alpha")?;
    let r = ctx.req(a.r, "r")?;
    let l = ctx.opt(a.l, "l")?.unwrap_or(0);
    let dist: Option<WeightDist> = ctx.opt::<String>(a.dist, "dist")?.map(|s| s.parse()).transpose()?;
    let moment = ctx.opt(a.moment, "moment")?.or(dist.map(|d| d.moment(alpha)));
    let mean_log = ctx.opt(a.mean_log, "mean_log")?.or(dist.map(|d| d.mean_log()));
    if moment.is_none() && mean_log.is_none() {
        return Err(Failure::Usage("give --moment, --mean-log or --dist".into()));
    }
    let report = moment_bound(alpha, moment, mean_log, r, l)?;
    let recurrence = match ctx.opt(a.c3, "c3")? {
        Some(c3) => {
            let d = ctx.req(a.degree, "degree")?;
            let m = moment.ok_or_else(|| Failure::Usage("the recurrence check needs E[W^alpha]".into()))?;
            Some(recurrence_threshold(d, alpha, c3, m, r, l)?)
        }
        None => None,
    };
    match ctx.format(Format::Json, &[Format::Csv, Format::Json])? {
        Format::Json => ctx.write_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "bounds": report,
            "recurrence": recurrence,
        }))?,
        _ => {
            let buf = csv_bytes(|w| {
                w.write_record(["m", "combined_ln_term", "log_term"])?;
                for (k, m) in (l..=r).enumerate() {
                    let c = report.combined_ln_terms.get(k).map(|x| fmt_f(*x)).unwrap_or_default();
                    let g = report.log_terms.get(k).map(|x| fmt_f(*x)).unwrap_or_default();
                    w.write_record([m.to_string(), c, g])?;
                }
                Ok(())
            })?;
            ctx.write(&buf)?;
        }
    }
    Ok(0)
}

fn verify_cmd(ctx: &Ctx, a: VerifyArgs) -> Res<i32> {
    let names: Vec<&str> = if a.suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&a.suite.as_str()) {
        vec![a.suite.as_str()]
    } else {
        return Err(Failure::Usage(format!("unknown suite `{}`; known: {}, all", a.suite, SUITES.join(", "))));
    };
    let seed = ctx.seed()?;
    let quick = a.quick || ctx.opt(None, "quick")?.unwrap_or(false);
    let budget = if quick { Budget::QUICK } else { Budget::FULL };
    let level = ctx.opt(a.significance, "significance")?.unwrap_or(0.01);
    if !LEVELS.contains(&level) {
        return Err(Failure::Usage(format!("significance must be 0.01 or 0.05, got {level}")));
    }
    let reports = names.iter().map(|s| run_suite(s, seed, budget, level)).collect::<Result<Vec<_>, _>>()?;
    let pass = reports.iter().all(|r| r.pass);
    match ctx.format(Format::Json, &[Format::Csv, Format::Json])? {
        Format::Json => ctx.write_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "seed": seed,
            "significance": level,
            "pass": pass,
            "suites": reports,
        }))?,
        _ => {
            let buf = csv_bytes(|w| {
                w.write_record(["suite", "test", "statistic", "threshold", "pass", "n", "notes"])?;
                for r in &reports {
                    for v in &r.verdicts {
                        w.write_record([
                            r.suite.clone(),
                            v.test.clone(),
                            fmt_f(v.statistic),
                            fmt_f(v.threshold),
                            v.pass.to_string(),
                            v.n.to_string(),
                            v.notes.clone(),
                        ])?;
                    }
                }
                Ok(())
            })?;
            ctx.write(&buf)?;
        }
    }
    Ok(if pass { 0 } else { 1 })
}

fn report_cmd(ctx: &Ctx, a: ReportArgs) -> Res<i32> {
    let input: PathBuf = ctx.req(a.input, "input")?;
    let rows = read_rows(fs::File::open(&input)?)?;
    let (table, flagged) = markdown(&rows);
    match ctx.format(Format::Md, &[Format::Md, Format::Csv, Format::Json])? {
        Format::Md => ctx.write(table.as_bytes())?,
        Format::Csv => ctx.write(plot_columns(&rows).as_bytes())?,
        Format::Json => {
            let flagged_rows: Vec<Value> = rows
                .iter()
                .map(|r| json!({ "row": r, "violations": r.violations() }))
                .collect();
            ctx.write_json(&json!({ "schema_version": SCHEMA_VERSION, "flagged": flagged, "rows": flagged_rows }))?
        }
    }
    Ok(if flagged == 0 { 0 } else { 1 })
}

fn run(cli: Cli) -> Res<i32> {
    let config = match &cli.config {
        None => Map::new(),
        Some(p) => match serde_json::from_str::<Value>(&fs::read_to_string(p)?) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(Failure::Usage("config file must hold a JSON object".into())),
            Err(e) => return Err(Failure::Usage(format!("config file: {e}"))),
        },
    };
    let ctx = Ctx { seed: cli.seed, out: cli.out, format: cli.format, config };
    match cli.cmd {
        Cmd::Subdivide(a) => subdivide(&ctx, a),
        Cmd::SampleBeta(a) => sample_beta_cmd(&ctx, a),
        Cmd::Simulate(a) => simulate(&ctx, a),
        Cmd::Restrict(a) => restrict(&ctx, a),
        Cmd::Flow(a) => flow_cmd(&ctx, a),
        Cmd::Bounds(a) => bounds_cmd(&ctx, a),
        Cmd::Verify(a) => verify_cmd(&ctx, a),
        Cmd::Report(a) => report_cmd(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
