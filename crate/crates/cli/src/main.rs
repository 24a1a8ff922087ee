//! Command-line front end: composes the graph generators, curvature
//! sweeps, heat-flow machinery, and inequality checks into reproducible
//! verification runs.
//!
//! Exit codes: 0 all selected checks pass, 1 at least one sound
//! violation (recheckable witness attached in the report), 2 only
//! inconclusive results (e.g. an uncertified curvature prerequisite),
//! 3 input/output or usage failure.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use liyau_core::curvature::{self, CdeCertification, CurvatureVerdict};
use liyau_core::families::{self, FamilySpec, MeasureScheme};
use liyau_core::graph::WeightedGraph;
use liyau_core::heat::{self, Propagator};
use liyau_core::identities;
use liyau_core::lab::{self, GridScope, Verdict};
use liyau_core::serde_ext::ext_f64;

#[derive(Parser)]
#[command(
    name = "liyau",
    version,
    about = "Discrete curvature and gradient-estimate verification on weighted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic graph family and write it as JSON.
    Generate(GenerateArgs),
    /// Exact CD curvature plus a CDE' counterexample search per vertex.
    Curvature(CurvatureArgs),
    /// Margin grid for the gradient-estimate family.
    Liyau(LiyauArgs),
    /// Harnack comparison margins over (t, s) pairs and vertex pairs.
    Harnack(HarnackArgs),
    /// Heat-kernel upper-bound margins (and optional kernel table).
    Kernel(KernelArgs),
    /// Eigenvalue bound and Dirichlet ball sequence.
    Cheng(ChengArgs),
    /// Operator and semigroup identity battery.
    Identities(IdentitiesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_ext(s: &str) -> std::result::Result<f64, String> {
    ext_f64::parse(s).ok_or_else(|| format!("invalid number `{s}` (use e.g. 2, 4.5, inf)"))
}

#[derive(Args)]
struct GenerateArgs {
    /// Family: path|cycle|complete|star|lattice_box|regular_tree
    #[arg(long)]
    family: String,
    /// Vertex count for path/cycle/complete, leaf count for star.
    #[arg(long)]
    size: Option<usize>,
    /// Lattice dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Lattice side length.
    #[arg(long)]
    side: Option<usize>,
    /// Tree branching.
    #[arg(long)]
    branching: Option<usize>,
    /// Tree depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Constant edge weight.
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    /// Measure scheme: unit|degree
    #[arg(long, default_value = "unit")]
    measure: String,
    #[arg(long, short = 'o')]
    out: PathBuf,
}

#[derive(Args)]
struct CommonRunArgs {
    /// Input graph JSON.
    #[arg(long, short = 'g')]
    graph: PathBuf,
    /// Random seed driving all searches.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Multi-start count for the CDE' search.
    #[arg(long, default_value_t = 16)]
    starts: usize,
    /// Output path (stdout when omitted).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CurvatureArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Dimension parameter n (accepts `inf`).
    #[arg(long, value_parser = parse_ext)]
    n: f64,
    /// Curvature lower bound K.
    #[arg(long = "K", default_value_t = 0.0, allow_hyphen_values = true)]
    k: f64,
    /// Restrict to these vertex ids (repeatable).
    #[arg(long)]
    vertex: Vec<String>,
}

#[derive(Args)]
struct LiyauArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Dimension parameter n; certified by search from the CD hint when
    /// omitted.
    #[arg(long, value_parser = parse_ext)]
    n: Option<f64>,
    #[arg(long = "K", default_value_t = 0.0, allow_hyphen_values = true)]
    k: f64,
    /// Power-schedule exponent(s) b > 1/2 (repeatable).
    #[arg(long = "b")]
    b: Vec<f64>,
    /// Time grid `<min>:<max>:log<N>` or `<min>:<max>:lin<N>`.
    #[arg(long = "t", default_value = "0.01:10:log25")]
    t: String,
    /// Restrict margin evaluation to these vertex ids (repeatable).
    #[arg(long)]
    vertex: Vec<String>,
}

#[derive(Args)]
struct HarnackArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    #[arg(long, value_parser = parse_ext)]
    n: Option<f64>,
    /// Earlier-time grid.
    #[arg(long = "t", default_value = "0.5:1:lin2")]
    t: String,
    /// Later-time grid; all pairs with t < s are checked.
    #[arg(long = "s", default_value = "1:2:lin2")]
    s: String,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    #[arg(long, value_parser = parse_ext)]
    n: Option<f64>,
    #[arg(long = "t", default_value = "0.01:10:log25")]
    t: String,
    /// Also write the kernel table (CSV rows t,x,y,p) to this path.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct ChengArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    #[arg(long, value_parser = parse_ext)]
    n: Option<f64>,
    /// Positive curvature magnitude K (the hypothesis is CDE'(n, -K)).
    #[arg(long = "K", allow_hyphen_values = true)]
    k: f64,
    /// Ball center for the Dirichlet sequence (defaults to the first
    /// vertex).
    #[arg(long)]
    center: Option<String>,
    #[arg(long, default_value_t = 4)]
    radius: usize,
}

#[derive(Args)]
struct IdentitiesArgs {
    /// Input graph JSON; runs on a random corpus when omitted.
    #[arg(long, short = 'g')]
    graph: Option<PathBuf>,
    /// Number of random graphs when no input graph is given.
    #[arg(long, default_value_t = 50)]
    random: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Serialize)]
struct RunOutput<T: Serialize> {
    run_config: Value,
    report: T,
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing `{}`", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_graph(path: &PathBuf) -> Result<WeightedGraph> {
    families::load(path).with_context(|| format!("loading graph `{}`", path.display()))
}

/// Resolves the dimension parameter: explicit `--n` is certified as
/// given; otherwise it is grown from the exact CD hint until the search
/// finds no counterexample.
fn resolve_certification(
    g: &WeightedGraph,
    vertices: Option<&[String]>,
    n: Option<f64>,
    k: f64,
    starts: usize,
    seed: u64,
) -> Result<(f64, Option<CdeCertification>)> {
    match n {
        Some(n) => {
            let cert = curvature::certify_cde(g, vertices, n, k, starts, seed)?;
            Ok((n, Some(cert)))
        }
        None => match curvature::certify_cde_auto(g, vertices, k, starts, seed)? {
            Some(cert) => Ok((cert.n, Some(cert))),
            None => bail!(
                "could not certify a dimension parameter for CDE'(n, {k}); pass --n explicitly"
            ),
        },
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Fail => 1,
        Verdict::Inconclusive => 2,
        Verdict::Pass => 0,
    }
}

fn combine(codes: impl IntoIterator<Item = i32>) -> i32 {
    let mut out = 0;
    for c in codes {
        if c == 1 {
            return 1;
        }
        if c == 2 {
            out = 2;
        }
    }
    out
}

fn cmd_generate(args: &GenerateArgs) -> Result<i32> {
    let spec = match args.family.as_str() {
        "path" => FamilySpec::Path { n: args.size.context("path needs --size")? },
        "cycle" => FamilySpec::Cycle { n: args.size.context("cycle needs --size")? },
        "complete" => FamilySpec::Complete { n: args.size.context("complete needs --size")? },
        "star" => FamilySpec::Star { leaves: args.size.context("star needs --size")? },
        "lattice_box" => FamilySpec::LatticeBox {
            dim: args.dim.context("lattice_box needs --dim")?,
            side: args.side.context("lattice_box needs --side")?,
        },
        "regular_tree" => FamilySpec::RegularTree {
            branching: args.branching.context("regular_tree needs --branching")?,
            depth: args.depth.context("regular_tree needs --depth")?,
        },
        other => bail!("unknown family `{other}`"),
    };
    let measure = match args.measure.as_str() {
        "unit" => MeasureScheme::Unit,
        "degree" => MeasureScheme::Degree,
        other => bail!("unknown measure scheme `{other}`"),
    };
    let g = families::generate(&spec, args.weight, &measure)?;
    families::save(&g, &args.out)?;
    eprintln!(
        "wrote {} ({} vertices, {} edges, hash {})",
        args.out.display(),
        g.len(),
        g.edge_list().len(),
        &families::content_hash(&g)[..12]
    );
    Ok(0)
}

fn cmd_curvature(args: &CurvatureArgs) -> Result<i32> {
    let g = load_graph(&args.common.graph)?;
    let vertices = if args.vertex.is_empty() { None } else { Some(args.vertex.as_slice()) };
    let report =
        curvature::curvature_sweep(&g, args.n, args.k, vertices, args.common.starts, args.common.seed)?;
    let config = json!({
        "command": "curvature",
        "graph": args.common.graph.display().to_string(),
        "graph_hash": report.graph_hash,
        "n": ext_f64::display(args.n),
        "K": args.k,
        "vertices": args.vertex,
        "starts": args.common.starts,
        "seed": args.common.seed,
    });
    let text = match args.common.format {
        Format::Json => serde_json::to_string_pretty(&RunOutput {
            run_config: config,
            report: &report,
        })? + "\n",
        Format::Csv => report.to_csv(),
    };
    write_output(&args.common.out, &text)?;
    let codes = report.records.iter().map(|r| match r.verdict {
        CurvatureVerdict::Violated => 1,
        CurvatureVerdict::Inconclusive => 2,
        CurvatureVerdict::HoldsInconclusive => 0,
    });
    Ok(combine(codes))
}

fn cmd_liyau(args: &LiyauArgs) -> Result<i32> {
    let g = load_graph(&args.common.graph)?;
    let t_grid = lab::parse_grid(&args.t)?;
    let b_list = if args.b.is_empty() { lab::default_b_list() } else { args.b.clone() };
    let vertices = if args.vertex.is_empty() { None } else { Some(args.vertex.as_slice()) };
    let (n, cert) = resolve_certification(
        &g,
        vertices,
        args.n,
        args.k,
        args.common.starts,
        args.common.seed,
    )?;
    let prop = Propagator::build(&g)?;
    let scope = GridScope {
        check_vertices: vertices.map(|v| v.to_vec()),
        source_vertices: None,
    };
    let report = lab::liyau_report(
        &g,
        &prop,
        n,
        args.k,
        &t_grid,
        &b_list,
        &scope,
        cert,
        args.common.seed,
    )?;
    let config = json!({
        "command": "liyau",
        "graph": args.common.graph.display().to_string(),
        "graph_hash": report.graph_hash,
        "n": ext_f64::display(n),
        "n_explicit": args.n.map(ext_f64::display),
        "K": args.k,
        "b_list": b_list,
        "t": args.t,
        "vertices": args.vertex,
        "starts": args.common.starts,
        "seed": args.common.seed,
    });
    let text = match args.common.format {
        Format::Json => serde_json::to_string_pretty(&RunOutput {
            run_config: config,
            report: &report,
        })? + "\n",
        Format::Csv => report.to_csv(),
    };
    write_output(&args.common.out, &text)?;
    Ok(verdict_code(report.verdict))
}

fn cmd_harnack(args: &HarnackArgs) -> Result<i32> {
    let g = load_graph(&args.common.graph)?;
    let t_grid = lab::parse_grid(&args.t)?;
    let s_grid = lab::parse_grid(&args.s)?;
    let mut pairs = Vec::new();
    for &t in &t_grid {
        for &s in &s_grid {
            if t < s {
                pairs.push((t, s));
            }
        }
    }
    if pairs.is_empty() {
        bail!("no (t, s) pairs with t < s in the given grids");
    }
    let (n, cert) =
        resolve_certification(&g, None, args.n, 0.0, args.common.starts, args.common.seed)?;
    let prop = Propagator::build(&g)?;
    let scope = GridScope::default();
    let report =
        lab::harnack_report(&g, &prop, n, &pairs, &scope, cert, args.common.seed)?;
    let config = json!({
        "command": "harnack",
        "graph": args.common.graph.display().to_string(),
        "graph_hash": report.graph_hash,
        "n": ext_f64::display(n),
        "pairs": pairs,
        "starts": args.common.starts,
        "seed": args.common.seed,
    });
    let text = match args.common.format {
        Format::Json => serde_json::to_string_pretty(&RunOutput {
            run_config: config,
            report: &report,
        })? + "\n",
        Format::Csv => report.to_csv(),
    };
    write_output(&args.common.out, &text)?;
    Ok(verdict_code(report.verdict))
}

fn cmd_kernel(args: &KernelArgs) -> Result<i32> {
    let g = load_graph(&args.common.graph)?;
    let t_grid = lab::parse_grid(&args.t)?;
    let (n, cert) =
        resolve_certification(&g, None, args.n, 0.0, args.common.starts, args.common.seed)?;
    let prop = Propagator::build(&g)?;
    let scope = GridScope::default();
    let report = lab::kernel_report(&g, &prop, n, &t_grid, &scope, cert, args.common.seed)?;
    if let Some(table) = &args.table {
        let csv = heat::kernel_table_csv(&g, &prop, &t_grid)?;
        std::fs::write(table, csv)
            .with_context(|| format!("writing `{}`", table.display()))?;
    }
    let config = json!({
        "command": "kernel",
        "graph": args.common.graph.display().to_string(),
        "graph_hash": report.graph_hash,
        "n": ext_f64::display(n),
        "t": args.t,
        "starts": args.common.starts,
        "seed": args.common.seed,
    });
    let text = match args.common.format {
        Format::Json => serde_json::to_string_pretty(&RunOutput {
            run_config: config,
            report: &report,
        })? + "\n",
        Format::Csv => report.to_csv(),
    };
    write_output(&args.common.out, &text)?;
    Ok(verdict_code(report.verdict))
}

fn cmd_cheng(args: &ChengArgs) -> Result<i32> {
    let g = load_graph(&args.common.graph)?;
    if !(args.k > 0.0) {
        bail!("cheng needs K > 0 (the hypothesis is CDE'(n, -K))");
    }
    let (n, cert) = resolve_certification(
        &g,
        None,
        args.n,
        -args.k,
        args.common.starts,
        args.common.seed,
    )?;
    let center = args
        .center
        .clone()
        .unwrap_or_else(|| g.id(0).to_string());
    let report =
        lab::cheng_check(&g, n, args.k, &center, args.radius, cert, args.common.seed)?;
    let config = json!({
        "command": "cheng",
        "graph": args.common.graph.display().to_string(),
        "graph_hash": report.graph_hash,
        "n": ext_f64::display(n),
        "K": args.k,
        "center": center,
        "radius": args.radius,
        "starts": args.common.starts,
        "seed": args.common.seed,
    });
    let text = match args.common.format {
        Format::Json => serde_json::to_string_pretty(&RunOutput {
            run_config: config,
            report: &report,
        })? + "\n",
        Format::Csv => report.to_csv(),
    };
    write_output(&args.common.out, &text)?;
    Ok(verdict_code(report.verdict))
}

fn cmd_identities(args: &IdentitiesArgs) -> Result<i32> {
    let checks = match &args.graph {
        Some(path) => {
            let g = load_graph(path)?;
            let mut checks = identities::operator_identities(&g, args.seed)?;
            let prop = Propagator::build(&g)?;
            checks.extend(identities::semigroup_identities(&g, &prop, args.seed)?);
            checks
        }
        None => identities::random_graph_battery(args.random, args.seed)?,
    };
    let all_pass = checks.iter().all(|c| c.pass);
    let config = json!({
        "command": "identities",
        "graph": args.graph.as_ref().map(|p| p.display().to_string()),
        "random": args.random,
        "seed": args.seed,
    });
    let text = match args.format {
        Format::Json => {
            serde_json::to_string_pretty(&RunOutput {
                run_config: config,
                report: json!({ "all_pass": all_pass, "checks": checks }),
            })? + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "residual", "tolerance", "pass", "location"])?;
            for c in &checks {
                w.write_record([
                    c.name.as_str(),
                    &c.residual.to_string(),
                    &c.tolerance.to_string(),
                    &c.pass.to_string(),
                    c.location.as_str(),
                ])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    write_output(&args.out, &text)?;
    Ok(if all_pass { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Curvature(a) => cmd_curvature(a),
        Command::Liyau(a) => cmd_liyau(a),
        Command::Harnack(a) => cmd_harnack(a),
        Command::Kernel(a) => cmd_kernel(a),
        Command::Cheng(a) => cmd_cheng(a),
        Command::Identities(a) => cmd_identities(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(3);
        }
    }
}
