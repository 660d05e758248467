//! `seqflow`: solve sequential-flow instances from the command line.
//!
//! Subcommands: `solve` (full optimum), `unbounded` (qualitative stage
//! only), `maxflow` (one capacity word), `oracle` (brute force over all
//! words up to a length), `analyze` (factorization tree of a word).
//!
//! Results go to standard output as JSON; `--verbose` adds human-readable
//! traces on standard error. Exit codes: 0 success, 1 parse error,
//! 2 validation error, 64 usage error, 70 resource limits.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use seqflow_core::flow::{sharp, FlowSemigroup};
use seqflow_core::instance::parse_nfa_str;
use seqflow_core::mm::{AbstractMatrix, Capacity, CapacityMatrix};
use seqflow_core::pipeline;
use seqflow_core::qualitative::{
    check_fair_unbounded, check_regular_unbounded, check_unbounded_strict_space, height_budget,
    Nfa, Strategy, Verdict,
};
use seqflow_core::quantitative::{optimal_value, ReachMode, SolveOptions, Solved};
use seqflow_core::semigroup::FiniteSemigroup;
use seqflow_core::summary::{
    build_sharp_summary, build_summary, Summary, SummaryContext, SummaryKind,
    DEFAULT_RAMSEY_STATE_BUDGET,
};
use seqflow_core::{Error, Instance};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "seqflow", version, about = "Optimal sequential flow solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Human-readable traces on standard error.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Closure,
    Bounded,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bfs,
    Dichotomic,
}

#[derive(Args)]
struct QueryArgs {
    /// Instance file (JSON).
    file: PathBuf,
    /// Fair edge set, e.g. `v1,v4;v3,v4` (defaults to the instance's).
    #[arg(long)]
    edges: Option<String>,
    /// NFA file constraining the capacity words (defaults to the
    /// instance's embedded automaton, if any).
    #[arg(long)]
    nfa: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide unboundedness and, if bounded, compute the exact optimum.
    Solve {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value = "closure")]
        strategy: StrategyArg,
        /// Configuration-reachability mode for the value search.
        #[arg(long, value_enum, default_value = "bfs")]
        mode: ModeArg,
        /// Run the literal binary search from the configured worst-case
        /// bound (big-integer arithmetic; practical only when the bound is
        /// small, e.g. all-finite capacities equal to zero).
        #[arg(long)]
        paper_bound: bool,
    },
    /// Decide unboundedness only.
    Unbounded {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value = "closure")]
        strategy: StrategyArg,
        /// Print the witness derivation expression.
        #[arg(long)]
        witness: bool,
        /// Memoization-free search over all matrices: polynomial space,
        /// exponential time. Practical only with a small `--height`.
        #[arg(long)]
        strict_space: bool,
        /// Height budget for the strict-space search (defaults to the
        /// complete bound 2n⁴; lower values only rule out short
        /// derivations).
        #[arg(long)]
        height: Option<usize>,
    },
    /// Max flow of one capacity word through the time-expanded graph.
    Maxflow {
        /// Instance file (JSON).
        file: PathBuf,
        /// Comma-separated capacity letters, e.g. `c,c,c,c`.
        #[arg(long)]
        word: String,
        /// Start vertex (defaults to the instance source).
        #[arg(long)]
        from: Option<String>,
        /// End vertex (defaults to the instance target).
        #[arg(long)]
        to: Option<String>,
        /// Include a minimum cut.
        #[arg(long)]
        cut: bool,
        /// Include the trajectories of a token flow of this value.
        #[arg(long)]
        tokens: Option<u64>,
    },
    /// Brute-force the best value over all words up to a length.
    Oracle {
        /// Instance file (JSON).
        file: PathBuf,
        #[arg(long)]
        max_len: usize,
    },
    /// Print the factorization tree of a capacity word.
    Analyze {
        /// Instance file (JSON).
        file: PathBuf,
        /// Comma-separated capacity letters.
        #[arg(long)]
        word: String,
        /// Build the tree with iterated idempotent nodes.
        #[arg(long)]
        sharp: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Parse(_) => 1,
                Error::ClosureLimitExceeded(_) | Error::ValueOutOfRange(_) => 70,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn closure_limit() -> usize {
    seqflow_core::qualitative::closure_limit_from_env()
}

fn load_instance(path: &PathBuf) -> Result<Instance, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    Instance::parse_str(&text)
}

fn parse_edges(inst: &Instance, spec: &str) -> Result<Vec<(usize, usize)>, Error> {
    spec.split(';')
        .map(|pair| {
            let (from, to) = pair.split_once(',').ok_or_else(|| {
                Error::Validation(format!("edge `{pair}` must look like `from,to`"))
            })?;
            Ok((
                inst.vertex_index(from.trim())?,
                inst.vertex_index(to.trim())?,
            ))
        })
        .collect()
}

/// Resolves the effective fair-edge set and NFA for a query.
fn query_context(
    inst: &Instance,
    query: &QueryArgs,
) -> Result<(Option<Vec<(usize, usize)>>, Option<Nfa>), Error> {
    let edges = match &query.edges {
        Some(spec) => Some(parse_edges(inst, spec)?),
        None => inst.fair_edges.clone(),
    };
    let nfa = match &query.nfa {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
            Some(parse_nfa_str(&text, &inst.capacities)?)
        }
        None => inst.nfa.clone(),
    };
    Ok((edges, nfa))
}

fn emit(value: Value) {
    println!("{value}");
}

fn run(cli: Cli) -> Result<(), Error> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Solve {
            query,
            strategy,
            mode,
            paper_bound,
        } => {
            let inst = load_instance(&query.file)?;
            let (edges, nfa) = query_context(&inst, &query)?;
            let opts = SolveOptions {
                strategy: match strategy {
                    StrategyArg::Closure => Strategy::Closure,
                    StrategyArg::Bounded => Strategy::BoundedHeight,
                },
                mode: match mode {
                    ModeArg::Bfs => ReachMode::Bfs,
                    ModeArg::Dichotomic => ReachMode::Dichotomic,
                },
                paper_bound,
                edges,
                nfa,
                closure_limit: closure_limit(),
            };
            if verbose {
                eprintln!(
                    "solving {} ({} vertices, {} capacities, K={})",
                    query.file.display(),
                    inst.n(),
                    inst.capacities.len(),
                    inst.max_finite()
                );
            }
            let solved = optimal_value(
                &inst.capacities,
                &inst.abstracted(),
                inst.n(),
                inst.source,
                inst.target,
                &opts,
            )?;
            match solved {
                Solved::Bounded { value } => emit(json!({"status": "bounded", "value": value})),
                Solved::Unbounded { expression } => emit(json!({
                    "status": "unbounded",
                    "witness": expression.to_string(),
                })),
            }
        }
        Command::Unbounded {
            query,
            strategy,
            witness,
            strict_space,
            height,
        } => {
            let inst = load_instance(&query.file)?;
            let (edges, nfa) = query_context(&inst, &query)?;
            let edges = edges.unwrap_or_else(|| vec![(inst.source, inst.target)]);
            let abs = inst.abstracted();
            if strict_space {
                if nfa.is_some() {
                    return Err(Error::Validation(
                        "--strict-space does not support language constraints".into(),
                    ));
                }
                let budget = height_budget(inst.n());
                let h = height.unwrap_or(budget);
                if verbose {
                    eprintln!("strict-space search, height budget {h} (complete at {budget})");
                }
                return match check_unbounded_strict_space(&abs, &edges, h)? {
                    Some(matrix) => {
                        let mut out = json!({"status": "unbounded"});
                        if witness {
                            out["witness"] = json!(matrix.to_string());
                        }
                        emit(out);
                        Ok(())
                    }
                    None if h >= budget => {
                        emit(json!({"status": "bounded"}));
                        Ok(())
                    }
                    None => {
                        emit(json!({
                            "status": "unknown",
                            "reason": format!("no witness of derivation height at most {h}"),
                        }));
                        Ok(())
                    }
                };
            }
            let strategy = match strategy {
                StrategyArg::Closure => Strategy::Closure,
                StrategyArg::Bounded => Strategy::BoundedHeight,
            };
            let verdict = match &nfa {
                Some(nfa) => check_regular_unbounded(&abs, nfa, &edges, closure_limit())?,
                None => check_fair_unbounded(&abs, &edges, strategy, closure_limit())?,
            };
            match verdict {
                Verdict::Unbounded { expression, .. } => {
                    let mut out = json!({"status": "unbounded"});
                    if witness {
                        out["witness"] = json!(expression.to_string());
                    }
                    emit(out);
                }
                Verdict::Bounded => emit(json!({"status": "bounded"})),
            }
        }
        Command::Maxflow {
            file,
            word,
            from,
            to,
            cut,
            tokens,
        } => {
            let inst = load_instance(&file)?;
            let layers = inst.resolve_word(&word)?;
            let from = match from {
                Some(name) => inst.vertex_index(&name)?,
                None => inst.source,
            };
            let to = match to {
                Some(name) => inst.vertex_index(&name)?,
                None => inst.target,
            };
            let value = pipeline::max_flow_word(&layers, from, to);
            if verbose {
                eprintln!(
                    "pipeline of {} letters, {} -> {}: {}",
                    layers.len(),
                    inst.vertices[from],
                    inst.vertices[to],
                    value
                );
            }
            let mut out = json!({ "value": capacity_json(value) });
            if cut {
                let min_cut = pipeline::min_cut_word(&layers, from, to);
                let cut_layers: Vec<Value> = min_cut
                    .layers
                    .iter()
                    .map(|edges| {
                        Value::Array(
                            edges
                                .iter()
                                .map(|&(v, w)| {
                                    json!([inst.vertices[v], inst.vertices[w]])
                                })
                                .collect(),
                        )
                    })
                    .collect();
                out["cut"] = json!({
                    "cost": capacity_json(min_cut.cost),
                    "layers": cut_layers,
                });
            }
            if let Some(value) = tokens {
                let flow = pipeline::extract_token_flow(&layers, from, to, value)?;
                let trajectories: Vec<Value> = flow
                    .positions
                    .iter()
                    .map(|path| {
                        Value::Array(
                            path.iter().map(|&v| json!(inst.vertices[v])).collect(),
                        )
                    })
                    .collect();
                out["tokens"] = Value::Array(trajectories);
            }
            emit(out);
        }
        Command::Oracle { file, max_len } => {
            let inst = load_instance(&file)?;
            let result =
                seqflow_core::oracle::brute_optimal(&inst.capacities, inst.source, inst.target, max_len);
            emit(json!({
                "best": capacity_json(result.best),
                "word": result.best_word,
                "table": result
                    .table
                    .iter()
                    .map(|&c| capacity_json(c))
                    .collect::<Vec<_>>(),
            }));
        }
        Command::Analyze { file, word, sharp } => {
            let inst = load_instance(&file)?;
            analyze(&inst, &word, sharp, verbose)?;
        }
    }
    Ok(())
}

fn capacity_json(c: Capacity) -> Value {
    match c {
        Capacity::Finite(k) => json!(k),
        Capacity::Omega => json!("omega"),
    }
}

/// Builds the flow semigroup, summarizes the word, and prints the indented
/// tree with provenance-expression names.
fn analyze(inst: &Instance, word: &str, want_sharp: bool, verbose: bool) -> Result<(), Error> {
    let abs = inst.abstracted();
    let closure = FlowSemigroup::generate_with_limit(&abs, closure_limit())?;
    let dim = closure.dim();
    let elements: Vec<Vec<u8>> = closure.elements().iter().map(|m| m.encode()).collect();
    let semigroup = FiniteSemigroup::from_elements(elements, move |a, b| {
        AbstractMatrix::decode(dim, a)
            .product(&AbstractMatrix::decode(dim, b))
            .encode()
    });
    let ctx = SummaryContext::new(&semigroup, DEFAULT_RAMSEY_STATE_BUDGET);
    if verbose {
        eprintln!(
            "flow semigroup: {} elements, regular J-length {}, cut window {}",
            closure.len(),
            ctx.jlen,
            ctx.cut_window
        );
    }
    let letters: Vec<&CapacityMatrix> = inst.resolve_word(word)?;
    let ids: Vec<usize> = letters
        .iter()
        .map(|m| {
            semigroup
                .id_of(&m.abstracted().encode())
                .expect("letters are in the closure")
        })
        .collect();
    let name_of = |id: usize| -> String {
        let flow_id = closure
            .id_of(&AbstractMatrix::decode(dim, semigroup.element(id)))
            .expect("tabulated elements come from the closure");
        closure.expression(flow_id).to_string()
    };
    let tree = if want_sharp {
        let sharp_of: Vec<usize> = (0..semigroup.len())
            .map(|i| {
                let m = AbstractMatrix::decode(dim, semigroup.element(i));
                if m.is_idempotent() {
                    semigroup.id_of(&sharp(&m).unwrap().encode()).unwrap()
                } else {
                    i
                }
            })
            .collect();
        build_sharp_summary(&ctx, &ids, &sharp_of)
    } else {
        build_summary(&ctx, &ids)
    };
    println!(
        "{} of {} letters, result {}",
        if want_sharp { "sharp summary" } else { "summary" },
        ids.len(),
        name_of(tree.element)
    );
    print_tree(&tree, &name_of, 1);
    Ok(())
}

fn print_tree(node: &Summary, name_of: &dyn Fn(usize) -> String, indent: usize) {
    let pad = "  ".repeat(indent);
    let (kind, witnesses) = match &node.kind {
        SummaryKind::Leaf => ("leaf".to_string(), None),
        SummaryKind::Product => ("product".to_string(), None),
        SummaryKind::Idempotent { witnesses } => {
            let stable = node
                .children
                .first()
                .map(|c| c.element == node.element)
                .unwrap_or(true);
            (
                if stable {
                    "idempotent".to_string()
                } else {
                    "idempotent (iterated)".to_string()
                },
                Some(witnesses),
            )
        }
    };
    println!(
        "{pad}{kind} {} [{}, {})",
        name_of(node.element),
        node.span.0,
        node.span.1
    );
    for child in &node.children {
        print_tree(child, name_of, indent + 1);
    }
    if let Some(witnesses) = witnesses {
        for w in witnesses {
            println!("{pad}  (skipped middle)");
            print_tree(w, name_of, indent + 2);
        }
    }
}
