//! Command-line driver. Every run writes one document (JSON, or CSV with a
//! `#` header line) whose header embeds the tool version, the full run
//! configuration and its SHA-256 hash. Identical configurations give
//! identical bytes.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for
//! input errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dse::{self, DseDocument, DseSolution};
use crate::error::{Error, Result};
use crate::graphon::{
    convergence_trace, cut_distance, cut_norm, density_fingerprint, feynman_graphon, rescaling_trace, CutMode,
    StepGraphon,
};
use crate::graphpoly::{
    connected_multigraphs_up_to, edge_assignment, psi_deletion_contraction, spanning_tree_count,
    subtree_formula_report, symanzik_det, symanzik_psi, tutte, tutte_at_one, tutte_of_partial_sum,
    tutte_rank_nullity, MultiGraph,
};
use crate::haar::{ball_measure_mc, ks_uniformity, BallEstimate};
use crate::rational::{fmt_q, parse_q, q, Q};
use crate::renorm::{renormalize_solution, ToyRules};

/// Rank–nullity cross-checks are skipped above this many edges.
const CROSS_CHECK_EDGES: usize = 16;

#[derive(Parser, Debug, Serialize)]
#[command(name = "ckdse", version, about = "Dyson–Schwinger equations on rooted trees: solve, renormalize, analyze")]
pub struct Cli {
    /// Master seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cut-distance search: exhaustive or seeded heuristic.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Heuristic)]
    pub mode: Mode,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase", tag = "subcommand")]
pub enum Command {
    /// Solve a DSE to its truncation order.
    Solve(SpecArgs),
    /// BPHZ-renormalize the solution under toy Feynman rules.
    Renorm {
        #[command(flatten)]
        #[serde(flatten)]
        spec: SpecArgs,
        /// ToyRules JSON (default: symbolic scale, unit residues).
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Feynman graphon of a partial sum, or diagnostics of given graphons.
    Graphon {
        #[command(flatten)]
        #[serde(flatten)]
        spec: OptSpecArgs,
        /// StepGraphon JSON; pass twice for a cut distance.
        #[arg(long = "graphon")]
        graphons: Vec<PathBuf>,
        /// Largest pattern edge count in density fingerprints.
        #[arg(long, default_value_t = 3)]
        edges: usize,
    },
    /// Tutte polynomials of multigraphs or of a DSE partial sum.
    Tutte {
        #[command(flatten)]
        #[serde(flatten)]
        input: GraphInput,
        /// Report the subtree formula next to the recursion (with --spec).
        #[arg(long)]
        tree_formula: bool,
    },
    /// First Kirchhoff–Symanzik polynomials with determinant cross-checks.
    Symanzik {
        #[command(flatten)]
        #[serde(flatten)]
        input: GraphInput,
        /// Random weight assignments checked per graph.
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
    /// Monte-Carlo ball measures and norm uniformity under the Haar measure.
    Haar {
        /// Truncation depth m.
        #[arg(long, default_value_t = 24)]
        order: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Ball radii (rationals); default 1/10, 1/4, 1/2, 3/4, 9/10.
        #[arg(long = "radius")]
        radii: Vec<String>,
    },
    /// Cut-distance traces along partial sums and coupling rescalings.
    Trace {
        #[command(flatten)]
        #[serde(flatten)]
        spec: SpecArgs,
        /// Rescaling factors λ_n = n/(n+1) for n = 1..=steps.
        #[arg(long, default_value_t = 6)]
        steps: usize,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct SpecArgs {
    /// DseSpec JSON, or a solution document written by `solve`.
    #[arg(long)]
    pub spec: PathBuf,
    /// Truncation order (overrides the document).
    #[arg(long)]
    pub order: Option<usize>,
    /// Coupling λg in (0, 1] (overrides the document).
    #[arg(long)]
    pub coupling: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct OptSpecArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub coupling: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct GraphInput {
    /// JSON MultiGraph or array of MultiGraphs.
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    /// All connected multigraphs with at most this many edges.
    #[arg(long)]
    pub corpus: Option<usize>,
    /// DSE whose partial sum Y_m is used (Tutte only).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub order: Option<usize>,
}

/// Result of one run before serialization.
struct Report {
    result: Value,
    /// CSV header and rows.
    table: (Vec<&'static str>, Vec<Vec<String>>),
    passed: bool,
}

/// Parses arguments, runs, writes the document and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match render(&cli) {
        Ok((bytes, passed)) => {
            let written = match &cli.out {
                Some(p) => fs::write(p, &bytes).map_err(Error::from),
                None => std::io::stdout().write_all(&bytes).map_err(Error::from),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 2;
            }
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// The output bytes and whether every check passed.
pub fn render(cli: &Cli) -> Result<(Vec<u8>, bool)> {
    let report = execute(cli)?;
    let config = serde_json::to_value(cli).map_err(|e| Error::Invalid(e.to_string()))?;
    let inputs = input_digests(&cli.command)?;
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(&json!({"config": config, "inputs": inputs})).expect("json"));
    let hash = hex::encode(hasher.finalize());
    let version = env!("CARGO_PKG_VERSION");
    let bytes = match cli.format {
        Format::Json => {
            let doc = json!({
                "header": {
                    "tool": "ckdse",
                    "version": version,
                    "config": config,
                    "inputs": inputs,
                    "config_hash": hash,
                },
                "passed": report.passed,
                "result": report.result,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("json");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut out = format!(
                "# ckdse {version} config_hash={hash} passed={} config={}\n",
                report.passed,
                serde_json::to_string(&config).expect("json")
            )
            .into_bytes();
            let mut w = csv::Writer::from_writer(Vec::new());
            let (header, rows) = &report.table;
            w.write_record(header).map_err(csv_error)?;
            for r in rows {
                w.write_record(r).map_err(csv_error)?;
            }
            out.extend(w.into_inner().map_err(|e| Error::Io(e.to_string()))?);
            out
        }
    };
    Ok((bytes, report.passed))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn input_paths(c: &Command) -> Vec<&Path> {
    match c {
        Command::Solve(s) | Command::Trace { spec: s, .. } => vec![&s.spec],
        Command::Renorm { spec, rules } => {
            let mut v = vec![spec.spec.as_path()];
            v.extend(rules.as_deref());
            v
        }
        Command::Graphon { spec, graphons, .. } => {
            spec.spec.iter().map(|p| p.as_path()).chain(graphons.iter().map(|p| p.as_path())).collect()
        }
        Command::Tutte { input, .. } | Command::Symanzik { input, .. } => {
            input.graphs.iter().chain(&input.spec).map(|p| p.as_path()).collect()
        }
        Command::Haar { .. } => Vec::new(),
    }
}

/// SHA-256 of every input file, keyed by the path as given.
fn input_digests(c: &Command) -> Result<Value> {
    let mut map = serde_json::Map::new();
    for p in input_paths(c) {
        let bytes = fs::read(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        map.insert(p.display().to_string(), Value::String(hex::encode(Sha256::digest(&bytes))));
    }
    Ok(Value::Object(map))
}

fn read_json(p: &Path) -> Result<Value> {
    let text = fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        pos: byte_offset(&text, e.line(), e.column()),
        msg: format!("{}: {e}", p.display()),
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let before: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    before + column.saturating_sub(1)
}

fn parse_value<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Invalid(format!("{what}: {e}")))
}

/// A DSE spec document or a solution document, with overrides applied.
fn load_solution(path: &Path, order: Option<usize>, coupling: Option<&str>) -> Result<DseSolution> {
    let v = read_json(path)?;
    let coupling = coupling.map(parse_q).transpose()?;
    if v.get("coefficients").is_some() {
        let sol = DseSolution::from_json(&v)?;
        if order.is_some_and(|o| o != sol.order()) {
            let spec = dse::DseSpec::new(sol.spec().cocycles.clone(), order.expect("checked"))?;
            return dse::solve_with_coupling(&spec, coupling.unwrap_or_else(|| sol.coupling().clone()));
        }
        return match coupling {
            Some(c) => sol.with_coupling(c),
            None => Ok(sol),
        };
    }
    let doc: DseDocument = parse_value(v, "DSE spec")?;
    let (mut spec, doc_coupling) = doc.into_parts()?;
    if let Some(o) = order {
        spec.order = o;
        spec.validate()?;
    }
    dse::solve_with_coupling(&spec, coupling.unwrap_or(doc_coupling))
}

fn cut_mode(cli: &Cli) -> CutMode {
    match cli.mode {
        Mode::Exact => CutMode::Exact,
        Mode::Heuristic => CutMode::Heuristic { seed: cli.seed },
    }
}

fn provenance(mode: CutMode) -> &'static str {
    match mode {
        CutMode::Exact => "exact",
        CutMode::Heuristic { .. } => "heuristic",
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn execute(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Renorm { spec, rules } => run_renorm(spec, rules.as_deref()),
        Command::Graphon { spec, graphons, edges } => run_graphon(cli, spec, graphons, *edges),
        Command::Tutte { input, tree_formula } => run_tutte(input, *tree_formula),
        Command::Symanzik { input, samples } => run_symanzik(cli.seed, input, *samples),
        Command::Haar { order, samples, radii } => run_haar(cli.seed, *order, *samples, radii),
        Command::Trace { spec, steps } => run_trace(cli, spec, *steps),
    }
}

fn run_solve(a: &SpecArgs) -> Result<Report> {
    let sol = load_solution(&a.spec, a.order, a.coupling.as_deref())?;
    let summary = dse::summary(&sol);
    let rows = summary
        .iter()
        .map(|s| vec![s.grade.to_string(), s.monomials.to_string(), fmt_q(&s.coefficient_sum)])
        .collect();
    let listing: Vec<String> = (1..=sol.order()).map(|n| format!("X_{n} = {}", sol.coefficient(n))).collect();
    let mut result = sol.to_json();
    result["summary"] = to_value(&summary);
    result["listing"] = to_value(&listing);
    Ok(Report {
        result,
        table: (vec!["grade", "monomials", "coefficient_sum"], rows),
        passed: true,
    })
}

fn run_renorm(a: &SpecArgs, rules: Option<&Path>) -> Result<Report> {
    let sol = load_solution(&a.spec, a.order, a.coupling.as_deref())?;
    let rules: ToyRules = match rules {
        Some(p) => parse_value(read_json(p)?, "toy rules")?,
        None => ToyRules::symbolic(),
    };
    let report = renormalize_solution(&rules, &sol, sol.order())?;
    let rows = (0..sol.order())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                report.counterterms[i].to_string(),
                report.renormalized[i].to_string(),
                report.finite_parts[i].clone(),
                (!report.renormalized[i].has_poles()).to_string(),
            ]
        })
        .collect();
    Ok(Report {
        result: json!({"rules": rules, "report": report, "provenance": "exact"}),
        table: (vec!["grade", "counterterm", "renormalized", "finite_part", "pole_free"], rows),
        passed: report.pole_free,
    })
}

fn run_graphon(cli: &Cli, spec: &OptSpecArgs, paths: &[PathBuf], edges: usize) -> Result<Report> {
    let mode = cut_mode(cli);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut result = serde_json::Map::new();
    let mut graphons: Vec<(String, StepGraphon)> = Vec::new();
    if let Some(p) = &spec.spec {
        let sol = load_solution(p, spec.order, spec.coupling.as_deref())?;
        let y = sol.unweighted_partial_sum(sol.order())?;
        let w = feynman_graphon(&y, sol.coupling())?;
        result.insert("feynman".into(), to_value(&w));
        graphons.push((format!("W(Y_{})", sol.order()), w.graphon));
    } else if spec.order.is_some() || spec.coupling.is_some() {
        return Err(Error::Invalid("--order and --coupling need --spec".into()));
    }
    for p in paths {
        graphons.push((p.display().to_string(), parse_value(read_json(p)?, "step graphon")?));
    }
    if graphons.is_empty() || graphons.len() > 2 {
        return Err(Error::Invalid("give --spec and/or --graphon, two graphons at most".into()));
    }
    let mut items = Vec::new();
    for (name, w) in &graphons {
        let fp = density_fingerprint(w, edges)?;
        for (h, t) in &fp.densities {
            rows.push(vec![name.clone(), format!("t({h})"), fmt_q(t), "exact".into()]);
        }
        let norm = cut_norm(w, mode)?;
        rows.push(vec![name.clone(), "cut_norm".into(), norm.to_string(), provenance(mode).into()]);
        items.push(json!({
            "name": name,
            "blocks": w.blocks(),
            "fingerprint": fp,
            "cut_norm": norm,
            "cut_norm_provenance": provenance(mode),
        }));
    }
    result.insert("graphons".into(), Value::Array(items));
    if let [(a, wa), (b, wb)] = graphons.as_slice() {
        let d = cut_distance(wa, wb, mode)?;
        let prov = if d.exhaustive { "exact" } else { "heuristic" };
        rows.push(vec![format!("{a} vs {b}"), "cut_distance".into(), d.value.to_string(), prov.into()]);
        result.insert("cut_distance".into(), json!({"value": d, "provenance": prov}));
    }
    Ok(Report {
        result: Value::Object(result),
        table: (vec!["graphon", "item", "value", "provenance"], rows),
        passed: true,
    })
}

fn load_graphs(input: &GraphInput) -> Result<Vec<MultiGraph>> {
    let mut graphs = Vec::new();
    if let Some(p) = &input.graphs {
        let v = read_json(p)?;
        if v.is_array() {
            graphs.extend(parse_value::<Vec<MultiGraph>>(v, "multigraph list")?);
        } else {
            graphs.push(parse_value(v, "multigraph")?);
        }
    }
    if let Some(m) = input.corpus {
        if m > 8 {
            return Err(Error::TooLarge { what: "corpus edge bound", size: m, limit: 8 });
        }
        graphs.extend(connected_multigraphs_up_to(m));
    }
    Ok(graphs)
}

#[derive(Serialize)]
struct TutteRow {
    index: usize,
    graph: MultiGraph,
    tutte: crate::graphpoly::MultiPoly,
    t11: String,
    spanning_trees: Option<String>,
    /// Null when the graph is too large for subset enumeration.
    rank_nullity_agrees: Option<bool>,
    /// Null for disconnected graphs.
    matrix_tree_agrees: Option<bool>,
}

fn run_tutte(input: &GraphInput, tree_formula: bool) -> Result<Report> {
    let mut result = serde_json::Map::new();
    let mut passed = true;
    if let Some(p) = &input.spec {
        let sol = load_solution(p, input.order, None)?;
        let m = sol.order();
        let product = tutte_of_partial_sum(&sol, m)?;
        result.insert("partial_sum".into(), json!({"m": m, "tutte": product}));
        if tree_formula {
            result.insert("subtree_formula".into(), to_value(&subtree_formula_report(&sol, m)?));
        }
    } else if tree_formula {
        return Err(Error::Invalid("--tree-formula needs --spec".into()));
    }
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (index, g) in load_graphs(input)?.into_iter().enumerate() {
        let t = tutte(&g)?;
        let t11 = tutte_at_one(&t);
        let rank_nullity_agrees =
            (g.edge_count() <= CROSS_CHECK_EDGES).then(|| tutte_rank_nullity(&g).map(|r| r == t)).transpose()?;
        let (spanning, matrix_tree_agrees) = if g.is_connected() {
            let count = spanning_tree_count(&g);
            let agrees = Q::from_integer(count.clone().into()) == t11;
            (Some(count.to_string()), Some(agrees))
        } else {
            (None, None)
        };
        passed &= rank_nullity_agrees != Some(false) && matrix_tree_agrees != Some(false);
        table.push(vec![
            index.to_string(),
            g.to_string(),
            t.to_string(),
            fmt_q(&t11),
            spanning.clone().unwrap_or_default(),
            opt(rank_nullity_agrees),
            opt(matrix_tree_agrees),
        ]);
        rows.push(TutteRow {
            index,
            graph: g,
            tutte: t,
            t11: fmt_q(&t11),
            spanning_trees: spanning,
            rank_nullity_agrees,
            matrix_tree_agrees,
        });
    }
    result.insert("graphs".into(), to_value(&rows));
    result.insert("provenance".into(), "exact".into());
    Ok(Report {
        result: Value::Object(result),
        table: (
            vec!["index", "graph", "tutte", "t11", "spanning_trees", "rank_nullity_agrees", "matrix_tree_agrees"],
            table,
        ),
        passed,
    })
}

fn opt(b: Option<bool>) -> String {
    b.map(|b| b.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct SymanzikRow {
    index: usize,
    graph: MultiGraph,
    psi: crate::graphpoly::MultiPoly,
    loop_number: usize,
    homogeneous: bool,
    determinant_agrees: bool,
    deletion_contraction_holds: bool,
    notice: Option<String>,
}

fn run_symanzik(seed: u64, input: &GraphInput, samples: usize) -> Result<Report> {
    if input.spec.is_some() {
        return Err(Error::Invalid("symanzik takes --graphs or --corpus".into()));
    }
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut passed = true;
    for (index, g) in load_graphs(input)?.into_iter().enumerate() {
        let psi = symanzik_psi(&g)?;
        let loops = g.loop_number();
        let homogeneous = psi.is_homogeneous_of(loops as u32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut det_ok = true;
        for _ in 0..samples {
            let w: Vec<Q> = (0..g.edge_count())
                .map(|_| q(rng.random_range(1..=20), rng.random_range(1..=9)))
                .collect();
            let at = edge_assignment(&g, &w).and_then(|a| psi.eval(&a));
            det_ok &= at.is_ok() && symanzik_det(&g, &w).ok() == at.ok();
        }
        let dc_ok = (0..g.edge_count()).all(|e| psi_deletion_contraction(&g, e).is_ok());
        let notice = (!g.is_connected())
            .then(|| format!("{} components; Ψ is the product over them", g.component_count()));
        passed &= homogeneous && det_ok && dc_ok;
        table.push(vec![
            index.to_string(),
            g.to_string(),
            psi.to_string(),
            loops.to_string(),
            homogeneous.to_string(),
            det_ok.to_string(),
            dc_ok.to_string(),
            notice.clone().unwrap_or_default(),
        ]);
        rows.push(SymanzikRow {
            index,
            graph: g,
            psi,
            loop_number: loops,
            homogeneous,
            determinant_agrees: det_ok,
            deletion_contraction_holds: dc_ok,
            notice,
        });
    }
    Ok(Report {
        result: json!({"graphs": rows, "samples": samples, "provenance": "exact"}),
        table: (
            vec!["index", "graph", "psi", "loop_number", "homogeneous", "determinant_agrees", "deletion_contraction", "notice"],
            table,
        ),
        passed,
    })
}

fn run_haar(seed: u64, depth: usize, samples: usize, radii: &[String]) -> Result<Report> {
    let radii: Vec<Q> = if radii.is_empty() {
        vec![q(1, 10), q(1, 4), q(1, 2), q(3, 4), q(9, 10)]
    } else {
        radii.iter().map(|r| parse_q(r)).collect::<Result<_>>()?
    };
    let rows: Vec<BallEstimate> =
        radii.iter().map(|r| ball_measure_mc(r, depth, samples, seed)).collect::<Result<_>>()?;
    let ks = ks_uniformity(depth, samples, seed)?;
    let passed = rows.iter().all(BallEstimate::within_tolerance) && ks.passes();
    let table = rows
        .iter()
        .map(|b| {
            vec![
                b.r.to_string(),
                b.estimate.to_string(),
                b.stderr.to_string(),
                b.m.to_string(),
                b.n.to_string(),
                b.seed.to_string(),
            ]
        })
        .collect();
    let balls: Vec<Value> = rows
        .iter()
        .map(|b| {
            let mut v = to_value(b);
            v["tolerance"] = json!(b.tolerance());
            v["pass"] = json!(b.within_tolerance());
            v
        })
        .collect();
    Ok(Report {
        result: json!({
            "balls": balls,
            "ks": ks,
            "ks_pass": ks.passes(),
            "provenance": "monte-carlo",
        }),
        table: (vec!["r", "estimate", "stderr", "m", "N", "seed"], table),
        passed,
    })
}

fn run_trace(cli: &Cli, a: &SpecArgs, steps: usize) -> Result<Report> {
    let mode = cut_mode(cli);
    let sol = load_solution(&a.spec, a.order, a.coupling.as_deref())?;
    let m = sol.order();
    let convergence = convergence_trace(&sol, m, mode)?;
    let lambdas: Vec<Q> = (1..=steps as i64).map(|n| q(n, n + 1)).collect();
    let rescaling = rescaling_trace(&sol, m, &lambdas, mode)?;
    let nonincreasing = rescaling.windows(2).all(|w| w[1] <= w[0]);
    let prov = provenance(mode);
    let mut table = Vec::new();
    for (i, d) in convergence.iter().enumerate() {
        table.push(vec!["convergence".into(), (i + 1).to_string(), fmt_q(sol.coupling()), d.to_string(), prov.into()]);
    }
    for (l, d) in lambdas.iter().zip(&rescaling) {
        let scaled = l * sol.coupling();
        table.push(vec!["rescaling".into(), fmt_q(l), fmt_q(&scaled), d.to_string(), prov.into()]);
    }
    let lambda_strings: Vec<String> = lambdas.iter().map(fmt_q).collect();
    Ok(Report {
        result: json!({
            "m": m,
            "coupling": fmt_q(sol.coupling()),
            "convergence": convergence,
            "lambdas": lambda_strings,
            "rescaling": rescaling,
            "rescaling_nonincreasing": nonincreasing,
            "provenance": prov,
        }),
        table: (vec!["trace", "index", "coupling", "distance", "provenance"], table),
        passed: nonincreasing,
    })
}
