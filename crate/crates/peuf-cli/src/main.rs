// SPDX-License-Identifier: Apache-2.0

//! `peuf`: command-line front end.
//!
//! JSON goes to standard output, diagnostics to standard error. `decide`
//! exits 0 when every input is valid, 1 when some input is invalid and 2 on
//! any error; the other commands exit 0 on success, 1 on a failed check and
//! 2 on errors.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value as Json};

use peuf::bench::{bench_formula, FormulaBench};
use peuf::cnf::{parse_dimacs, to_dimacs};
use peuf::decide::{self, prepare, DecideOptions, Decision, Method};
use peuf::elim::{ackermann_eliminate, count_equations};
use peuf::gen::{corpus, GenConfig};
use peuf::oracle::{self, Verdict};
use peuf::pipeline::{self, Bug, Class, MemoryModel, PipelineSpec};
use peuf::polarity::{classify, to_nnf};
use peuf::sat::{self, Engine, SatResult};
use peuf::{parse, Store};

#[derive(Parser)]
#[command(
    name = "peuf",
    version,
    about = "Validity checking for equality with uninterpreted functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide validity of each input formula.
    Decide(DecideArgs),
    /// Report negative formulas and terms and the g/p split of the symbols.
    Classify(ClassifyArgs),
    /// Replace all applications by fresh variables.
    Eliminate(EliminateArgs),
    /// Encode the application-free formula propositionally.
    Encode(EncodeArgs),
    /// Count term partitions and decide by enumeration.
    Oracle(OracleArgs),
    /// Solve a DIMACS CNF file.
    Solve(SolveArgs),
    /// Write the correctness formula of a small pipeline.
    GenPipeline(PipelineArgs),
    /// Run every method on a corpus and fail on any disagreement.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum MethodArg {
    Bitvec,
    Pairwise,
    Oracle,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Bitvec => Method::Bitvec,
            MethodArg::Pairwise => Method::Pairwise,
            MethodArg::Oracle => Method::Oracle,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum EncodingArg {
    Bitvec,
    Pairwise,
}

#[derive(Copy, Clone, ValueEnum)]
enum SolverArg {
    Cdcl,
    Backtracking,
}

#[derive(Args)]
struct SearchArgs {
    /// Oracle size limit in application terms (default from PEUF_ORACLE_GUARD, else 12).
    #[arg(long)]
    guard: Option<usize>,
    /// Leave out transitivity constraints on the pairwise path.
    #[arg(long)]
    no_transitivity: bool,
    #[arg(long, value_enum, default_value = "cdcl")]
    solver: SolverArg,
}

impl SearchArgs {
    fn options(&self) -> DecideOptions {
        let mut o = DecideOptions::default();
        if let Some(g) = self.guard {
            o.guard = g;
        }
        o.transitivity = !self.no_transitivity;
        o.solver = match self.solver {
            SolverArg::Cdcl => Engine::Cdcl,
            SolverArg::Backtracking => Engine::Backtracking,
        };
        o
    }
}

#[derive(Args)]
struct DecideArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[command(flatten)]
    search: SearchArgs,
    /// Write the refutation CNF here (single input, SAT methods only).
    #[arg(long)]
    dimacs: Option<PathBuf>,
    /// Write the input DAG in Graphviz format here (single input).
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Indented JSON.
    #[arg(long)]
    pretty: bool,
    /// Input files; `-` reads standard input.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    dot: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args)]
struct EliminateArgs {
    /// Ackermann constraints instead of nested `ite`s.
    #[arg(long)]
    ackermann: bool,
    /// Write the application-free formula in surface syntax here.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the DAG of the application-free formula here.
    #[arg(long)]
    dot: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long, value_enum)]
    encode: EncodingArg,
    #[arg(long)]
    no_transitivity: bool,
    #[arg(long)]
    dimacs: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    guard: Option<usize>,
    input: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "cdcl")]
    solver: SolverArg,
    input: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value_t = 3)]
    stages: usize,
    /// Comma-separated: alu, load, store, jump, branch.
    #[arg(long, value_delimiter = ',', default_value = "alu")]
    classes: Vec<String>,
    /// no-bypass, wrong-mux-polarity or stale-pc-on-branch.
    #[arg(long)]
    bug: Option<String>,
    /// Implementation steps before the flush.
    #[arg(short = 'n', default_value_t = 1)]
    steps: usize,
    /// Drop the forwarding paths.
    #[arg(long)]
    no_bypass: bool,
    /// Drop the load-use interlock (five stages).
    #[arg(long)]
    no_interlock: bool,
    /// Data memory as a write history read through nested `ite`s.
    #[arg(long)]
    nested_ite_memory: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random formulas to generate when no input files are given.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[command(flatten)]
    search: SearchArgs,
    /// One JSON object per formula instead of a table.
    #[arg(long)]
    json: bool,
    inputs: Vec<PathBuf>,
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading standard input")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<(Store, peuf::NodeId)> {
    let text = read_input(path)?;
    let mut store = Store::new();
    let root = parse(&mut store, &text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((store, root))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T, pretty: bool) -> Result<()> {
    let text = if pretty {
        serde_json::to_string_pretty(value)?
    } else {
        serde_json::to_string(value)?
    };
    let mut out = io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

fn names(store: &Store, syms: &[peuf::SymbolId]) -> Vec<String> {
    syms.iter().map(|s| store.symbol(*s).name.clone()).collect()
}

/// Decision plus the input it belongs to.
#[derive(Serialize)]
struct DecideOutput<'a> {
    input: String,
    #[serde(flatten)]
    decision: &'a Decision,
}

fn run_decide(args: DecideArgs) -> Result<ExitCode> {
    let method: Method = args.method.into();
    let opts = args.search.options();
    if args.inputs.len() > 1 && (args.dimacs.is_some() || args.dot.is_some()) {
        bail!("--dimacs and --dot take a single input");
    }
    if args.dimacs.is_some() && method == Method::Oracle {
        bail!("--dimacs needs a SAT method");
    }
    // One worker per input; nothing mutable is shared.
    let results: Vec<Result<(Store, peuf::NodeId, Decision)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = args
            .inputs
            .iter()
            .map(|path| {
                scope.spawn(move || -> Result<_> {
                    let (mut store, root) = load(path)?;
                    let d = decide::decide(&mut store, root, method, opts)?;
                    Ok((store, root, d))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("worker panicked"))))
            .collect()
    });
    let mut code = 0u8;
    for (path, r) in args.inputs.iter().zip(results) {
        match r {
            Ok((store, root, d)) => {
                if let Some(p) = &args.dot {
                    write_file(p, &store.to_dot(root))?;
                }
                if let (Some(p), Some(cnf)) = (&args.dimacs, &d.cnf) {
                    write_file(p, &to_dimacs(cnf))?;
                }
                if d.verdict == Verdict::Invalid {
                    code = code.max(1);
                }
                let out = DecideOutput {
                    input: path.display().to_string(),
                    decision: &d,
                };
                print_json(&out, args.pretty)?;
            }
            Err(e) => {
                eprintln!("peuf: {}: {e:#}", path.display());
                print_json(
                    &json!({"input": path.display().to_string(), "error": format!("{e:#}")}),
                    args.pretty,
                )?;
                code = 2;
            }
        }
    }
    Ok(ExitCode::from(code))
}

fn run_classify(args: ClassifyArgs) -> Result<ExitCode> {
    let (mut store, root) = load(&args.input)?;
    let nnf = to_nnf(&mut store, root);
    let report = classify(&store, nnf)?;
    if let Some(p) = &args.dot {
        write_file(p, &store.to_dot(nnf))?;
    }
    let ids = |set: &std::collections::BTreeSet<peuf::NodeId>| set.iter().map(|n| n.0).collect::<Vec<_>>();
    print_json(
        &json!({
            "nnf": store.display(nnf),
            "negFormulas": ids(&report.neg_formulas),
            "negTerms": ids(&report.neg_terms),
            "gFuncs": names(&store, &report.g_funcs),
            "pFuncs": names(&store, &report.p_funcs),
        }),
        true,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn run_eliminate(args: EliminateArgs) -> Result<ExitCode> {
    let (mut store, root) = load(&args.input)?;
    let (f_star, report) = if args.ackermann {
        let nnf = to_nnf(&mut store, root);
        let ack = ackermann_eliminate(&mut store, nnf);
        let fresh: Vec<Json> = ack
            .fresh
            .iter()
            .map(|(sym, vars)| json!({"symbol": store.symbol(*sym).name, "fresh": names(&store, vars)}))
            .collect();
        let constraints: Vec<String> = ack.constraints.iter().map(|c| store.display(*c)).collect();
        let report = json!({
            "scheme": "ackermann",
            "equations": count_equations(&store, ack.formula),
            "constraints": constraints,
            "trace": fresh,
        });
        (ack.formula, report)
    } else {
        let prepared = prepare(&mut store, root)?;
        let el = &prepared.elimination;
        let trace: Vec<Json> = el
            .trace
            .iter()
            .map(|step| {
                let terms: Vec<Json> = step
                    .applications
                    .iter()
                    .zip(&step.replacements)
                    .zip(&step.fresh)
                    .map(|((app, rep), fresh)| {
                        json!({
                            "application": store.display(*app),
                            "fresh": store.symbol(*fresh).name,
                            "treeSize": store.tree_size(*rep) as u64,
                            "dagSize": store.reachable(&[*rep]).len(),
                        })
                    })
                    .collect();
                json!({
                    "symbol": store.symbol(step.symbol).name,
                    "polarity": step.polarity,
                    "fresh": names(&store, &step.fresh),
                    "replacements": terms,
                })
            })
            .collect();
        let report = json!({
            "scheme": "nested-ite",
            "sigmaG": names(&store, &el.sigma_g),
            "sigmaP": names(&store, &el.sigma_p),
            "trace": trace,
        });
        (el.f_star, report)
    };
    let text = store.to_source(f_star);
    if let Some(p) = &args.dot {
        write_file(p, &store.to_dot(f_star))?;
    }
    let mut report = report;
    match &args.output {
        Some(p) => write_file(p, &text)?,
        None => report["formula"] = Json::String(text.trim_end().to_string()),
    }
    print_json(&report, true)?;
    Ok(ExitCode::SUCCESS)
}

fn run_encode(args: EncodeArgs) -> Result<ExitCode> {
    let (mut store, root) = load(&args.input)?;
    let prepared = prepare(&mut store, root)?;
    let method = match args.encode {
        EncodingArg::Bitvec => Method::Bitvec,
        EncodingArg::Pairwise => Method::Pairwise,
    };
    let mut enc = decide::encode(&store, &prepared, method, !args.no_transitivity)?;
    let cnf = enc.refutation_cnf();
    if let Some(p) = &args.dimacs {
        write_file(p, &to_dimacs(&cnf))?;
    }
    let constraints: Vec<String> = enc.constraints.iter().map(|c| enc.dag.to_prefix(*c)).collect();
    let mut report = json!({
        "encoding": method.to_string(),
        "formula": enc.dag.to_prefix(enc.formula),
        "constraints": constraints,
        "constraintCount": enc.constraints.len(),
        "propositional": cnf.named_vars(),
        "clauses": cnf.clauses.len(),
    });
    if let Some(b) = &enc.bitvec {
        report["width"] = json!(b.width);
        report["patterns"] = serde_json::to_value(peuf::bitvec::pattern_table(&enc.dag, &store, b))?;
    }
    if let Some(p) = &enc.pairwise {
        report["n"] = json!(p.n);
        report["m"] = json!(p.m);
        report["eVars"] = json!(p.e_vars.len());
    }
    print_json(&report, true)?;
    Ok(ExitCode::SUCCESS)
}

fn run_oracle(args: OracleArgs) -> Result<ExitCode> {
    let (mut store, root) = load(&args.input)?;
    let guard = args.guard.unwrap_or_else(oracle::default_guard);
    let report = oracle::report(&mut store, root, guard)?;
    print_json(&report, true)?;
    Ok(ExitCode::SUCCESS)
}

fn run_solve(args: SolveArgs) -> Result<ExitCode> {
    let cnf = parse_dimacs(&read_input(&args.input)?)?;
    let engine = match args.solver {
        SolverArg::Cdcl => Engine::Cdcl,
        SolverArg::Backtracking => Engine::Backtracking,
    };
    let mut out = io::stdout().lock();
    match sat::run(&cnf, engine) {
        SatResult::Unsat => writeln!(out, "s UNSATISFIABLE")?,
        SatResult::Sat(model) => {
            writeln!(out, "s SATISFIABLE")?;
            let lits: Vec<String> = model
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    if *b {
                        format!("{}", i + 1)
                    } else {
                        format!("-{}", i + 1)
                    }
                })
                .collect();
            writeln!(out, "v {} 0", lits.join(" "))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_gen_pipeline(args: PipelineArgs) -> Result<ExitCode> {
    let classes = args
        .classes
        .iter()
        .map(|c| c.trim().parse::<Class>().map_err(anyhow::Error::msg))
        .collect::<Result<Vec<_>>>()?;
    let mut spec = PipelineSpec::new(args.stages, &classes);
    spec.bypass = !args.no_bypass;
    spec.interlock = !args.no_interlock;
    if args.nested_ite_memory {
        spec.memory = MemoryModel::NestedIte;
    }
    if let Some(b) = &args.bug {
        spec.bug = Some(b.parse::<Bug>().map_err(anyhow::Error::msg)?);
    }
    let (_, _, text) = pipeline::generate(&spec, args.steps)?;
    let header = format!(
        "; {}-stage pipeline, classes {}, {} step(s){}\n",
        spec.stages,
        args.classes.join(","),
        args.steps,
        spec.bug.map(|b| format!(", bug {b}")).unwrap_or_default()
    );
    match &args.output {
        Some(p) => write_file(p, &(header + &text))?,
        None => io::stdout().lock().write_all((header + &text).as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn run_bench(args: BenchArgs) -> Result<ExitCode> {
    let opts = args.search.options();
    let inputs: Vec<(String, String)> = if args.inputs.is_empty() {
        corpus(args.seed, args.count, &GenConfig::default())
            .into_iter()
            .enumerate()
            .map(|(i, t)| (format!("seed{}#{i}", args.seed), t))
            .collect()
    } else {
        args.inputs
            .iter()
            .map(|p| Ok((p.display().to_string(), read_input(p)?)))
            .collect::<Result<_>>()?
    };
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(inputs.len().max(1));
    let chunk = inputs.len().div_ceil(workers).max(1);
    let results: Vec<FormulaBench> = std::thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|(name, text)| bench_formula(name, text, &Method::ALL, opts))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("bench worker"))
            .collect()
    });
    let mut out = io::stdout().lock();
    if !args.json {
        writeln!(
            out,
            "{:<24} {:<9} {:>8} {:>6} {:>7} {:>6} {:>10}  verdict",
            "formula", "method", "propvars", "evars", "clauses", "ackeq", "micros"
        )?;
    }
    let mut mismatches = 0;
    for b in &results {
        if !b.agreed {
            mismatches += 1;
        }
        if args.json {
            writeln!(out, "{}", serde_json::to_string(b)?)?;
            continue;
        }
        if let Some(e) = &b.error {
            writeln!(out, "{:<24} error: {e}", b.name)?;
        }
        for r in &b.rows {
            let verdict = match (r.verdict, &r.note) {
                (Some(v), _) => format!("{v:?}"),
                (None, Some(n)) => format!("skipped ({n})"),
                (None, None) => "-".into(),
            };
            writeln!(
                out,
                "{:<24} {:<9} {:>8} {:>6} {:>7} {:>6} {:>10}  {}{}",
                b.name,
                r.method.to_string(),
                r.propositional,
                r.e_vars.map_or("-".into(), |e| e.to_string()),
                r.clauses,
                b.ackermann_equations,
                r.micros,
                verdict,
                if b.agreed { "" } else { "  MISMATCH" }
            )?;
        }
    }
    eprintln!("{} formula(s), {} mismatch(es)", results.len(), mismatches);
    Ok(if mismatches == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decide(a) => run_decide(a),
        Command::Classify(a) => run_classify(a),
        Command::Eliminate(a) => run_eliminate(a),
        Command::Encode(a) => run_encode(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Solve(a) => run_solve(a),
        Command::GenPipeline(a) => run_gen_pipeline(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("peuf: {e:#}");
            ExitCode::from(2)
        }
    }
}
