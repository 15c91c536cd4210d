//! Command-line front end: argument parsing, input dispatch and output
//! formatting. Everything written to the output stream is a function of the
//! inputs and flags alone.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::enumeration::{enum_query_with, measure_delay, EnumOptions, Strategy};
use crate::error::Error;
use crate::formula::{parse_formula, parse_formula_inferred, Query, Signature};
use crate::oracle::random::random_permutation;
use crate::oracle::{brute_force_with_budget, OracleResult, DEFAULT_BUDGET};
use crate::qelim::{eliminate_all_with, model_check, QeOptions};
use crate::reduction::{
    build_bijective, build_bijective_with, load_rel_structure, translate_formula, RelStructure,
};
use crate::structure::{load_structure, BijStructure, Elem};
use crate::subgraph::{load_graph, EmbeddingOptions, EmbeddingPlan, Graph};

/// Version of the structure, relational and graph file formats.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "bdenum",
    about = "First-order query evaluation and constant-delay enumeration over bounded-degree structures",
    disable_version_flag = true
)]
struct Cli {
    /// Print the engine and file format versions.
    #[arg(long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide a closed formula on a structure; prints `true` or `false`.
    Check {
        structure: PathBuf,
        /// Inline formula, or `@path` to read it from a file.
        formula: String,
        /// Evaluate with the brute-force oracle instead of elimination.
        #[arg(long)]
        oracle: bool,
        /// Exit with status 1 when the formula is false.
        #[arg(long)]
        strict_exit: bool,
        /// Read a graph file as a structure with one binary relation `E`.
        #[arg(long)]
        as_structure: bool,
        /// Oracle evaluation-node budget.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Print every satisfying tuple, one per line.
    Enum {
        structure: PathBuf,
        /// Inline formula, or `@path` to read it from a file.
        formula: String,
        /// Evaluate with the brute-force oracle (tuples in ascending order).
        #[arg(long)]
        oracle: bool,
        /// Read a graph file as a structure with one binary relation `E`.
        #[arg(long)]
        as_structure: bool,
        #[arg(long, value_enum, default_value_t = StrategyArg::Lazy)]
        strategy: StrategyArg,
        /// Oracle evaluation-node budget.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Eliminate all quantifiers and print the result.
    Qe {
        /// Formula file, inline formula, or `@path`.
        formula: String,
        /// Structure file whose signature the formula is parsed against;
        /// without it the signature is inferred.
        #[arg(long)]
        sig: Option<PathBuf>,
        /// Keep contradictory and duplicate disjuncts.
        #[arg(long)]
        unpruned: bool,
    },
    /// Reduce a relational structure or graph to a bijective structure.
    Reduce {
        structure: PathBuf,
        /// Copies per element; defaults to the structure's degree.
        #[arg(long)]
        copies: Option<usize>,
    },
    /// Enumerate embeddings of the pattern graph into the host graph.
    Subgraph {
        host: PathBuf,
        pattern: PathBuf,
        /// Non-edges of the pattern map to non-edges.
        #[arg(long)]
        induced: bool,
        /// Images keep the degree of their pattern vertex.
        #[arg(long)]
        degree_constrained: bool,
        /// One embedding per automorphism orbit of the pattern.
        #[arg(long)]
        canonical: bool,
        /// Print only the number of embeddings.
        #[arg(long)]
        count_only: bool,
    },
    /// Measure enumeration delay in steps over a range of domain sizes.
    BenchDelay {
        structure: PathBuf,
        /// Inline formula, or `@path` to read it from a file.
        formula: String,
        /// Domain sizes; each gets a random structure with the signature and
        /// predicate densities of the given one. Defaults to the given
        /// structure alone.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Lazy,
    DisjointDnf,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Lazy => Strategy::Lazy,
            StrategyArg::DisjointDnf => Strategy::DisjointDnf,
        }
    }
}

/// A diagnostic, already carrying its file context.
struct Failure(String);

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// `origin:line[:column]: message` where the error has a location.
fn located(origin: &str, e: Error) -> Failure {
    Failure(match e {
        Error::Structure { line, message } if line > 0 => format!("{origin}:{line}: {message}"),
        Error::Structure { message, .. } => format!("{origin}: {message}"),
        Error::Syntax {
            line,
            column,
            message,
        } => format!("{origin}:{line}:{column}: {message}"),
        e => format!("{origin}: {e}"),
    })
}

fn plain(e: Error) -> Failure {
    Failure(e.to_string())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FileKind {
    Bijective,
    Relational,
    Graph,
}

/// Classify an input file by its first declarations.
fn detect(text: &str) -> FileKind {
    for raw in text.lines() {
        let content = raw.split('#').next().unwrap_or("");
        match content.split_whitespace().next() {
            Some("graph") => return FileKind::Graph,
            Some("rel") => return FileKind::Relational,
            Some("perm" | "pred" | "const") => return FileKind::Bijective,
            _ => {}
        }
    }
    FileKind::Bijective
}

enum Input {
    Bij(BijStructure),
    Rel(RelStructure),
}

impl Input {
    fn signature(&self) -> &Signature {
        match self {
            Input::Bij(s) => s.signature(),
            Input::Rel(s) => s.signature(),
        }
    }
}

fn load_input(path: &Path, as_structure: bool) -> CliResult<Input> {
    let text = read(path)?;
    let origin = path.display().to_string();
    match detect(&text) {
        FileKind::Bijective => load_structure(&text)
            .map(Input::Bij)
            .map_err(|e| located(&origin, e)),
        FileKind::Relational => load_rel_structure(&text)
            .map(Input::Rel)
            .map_err(|e| located(&origin, e)),
        FileKind::Graph if as_structure => load_graph(&text)
            .and_then(|g| g.to_rel_structure(None))
            .map(Input::Rel)
            .map_err(|e| located(&origin, e)),
        FileKind::Graph => Err(Failure(format!(
            "{origin}: graph file; pass --as-structure to query it as a structure"
        ))),
    }
}

fn load_graph_file(path: &Path) -> CliResult<Graph> {
    let text = read(path)?;
    let origin = path.display().to_string();
    if detect(&text) != FileKind::Graph {
        return Err(Failure(format!("{origin}: expected a graph file")));
    }
    load_graph(&text).map_err(|e| located(&origin, e))
}

/// Formula text and the name used in diagnostics. `@path` reads a file.
fn formula_source(arg: &str) -> CliResult<(String, String)> {
    match arg.strip_prefix('@') {
        Some(path) => Ok((read(Path::new(path))?, path.to_string())),
        None => Ok((arg.to_string(), "<formula>".to_string())),
    }
}

fn parse(arg: &str, sig: &Signature) -> CliResult<Query> {
    let (text, origin) = formula_source(arg)?;
    parse_formula(&text, sig).map_err(|e| located(&origin, e))
}

fn write_tuple(out: &mut impl Write, t: &[String]) -> io::Result<()> {
    writeln!(out, "({})", t.join(", "))
}

fn closed(q: &Query) -> CliResult<()> {
    if q.free.is_empty() {
        Ok(())
    } else {
        Err(Failure(format!(
            "check needs a closed formula; free variables: {}",
            q.free.join(", ")
        )))
    }
}

fn oracle_truth(r: OracleResult) -> bool {
    r.truth.unwrap_or(false)
}

fn check(
    out: &mut impl Write,
    path: &Path,
    formula: &str,
    oracle: bool,
    as_structure: bool,
    budget: u64,
) -> CliResult<bool> {
    let input = load_input(path, as_structure)?;
    let q = parse(formula, input.signature())?;
    closed(&q)?;
    let truth = match (&input, oracle) {
        (Input::Bij(s), true) => {
            oracle_truth(brute_force_with_budget(&q, s, budget).map_err(plain)?)
        }
        (Input::Rel(s), true) => {
            oracle_truth(brute_force_with_budget(&q, s, budget).map_err(plain)?)
        }
        (Input::Bij(s), false) => model_check(&q.formula, s).map_err(plain)?,
        (Input::Rel(s), false) => {
            let reduced = build_bijective(s).map_err(plain)?;
            let tq = translate_formula(&q, s.signature(), reduced.d).map_err(plain)?;
            model_check(&tq.formula, &reduced.bij).map_err(plain)?
        }
    };
    writeln!(out, "{truth}")?;
    Ok(truth)
}

fn enumerate(
    out: &mut impl Write,
    path: &Path,
    formula: &str,
    oracle: bool,
    as_structure: bool,
    strategy: Strategy,
    budget: u64,
) -> CliResult<()> {
    let input = load_input(path, as_structure)?;
    let q = parse(formula, input.signature())?;
    let opts = EnumOptions {
        strategy,
        record_gaps: false,
    };
    let name = |s: &BijStructure, e: Elem| s.element_name(e);
    match (&input, oracle) {
        (Input::Bij(s), true) => {
            for t in brute_force_with_budget(&q, s, budget)
                .map_err(plain)?
                .tuples
            {
                write_tuple(out, &t.iter().map(|&e| name(s, e)).collect::<Vec<_>>())?;
            }
        }
        (Input::Rel(s), true) => {
            for t in brute_force_with_budget(&q, s, budget)
                .map_err(plain)?
                .tuples
            {
                write_tuple(out, &t.iter().map(Elem::to_string).collect::<Vec<_>>())?;
            }
        }
        (Input::Bij(s), false) => {
            let mut e = enum_query_with(s, &q, opts).map_err(plain)?;
            while e.advance() {
                write_tuple(
                    out,
                    &e.current().iter().map(|&x| name(s, x)).collect::<Vec<_>>(),
                )?;
            }
        }
        (Input::Rel(s), false) => {
            let reduced = build_bijective(s).map_err(plain)?;
            let tq = translate_formula(&q, s.signature(), reduced.d).map_err(plain)?;
            let mut e = enum_query_with(&reduced.bij, &tq, opts).map_err(plain)?;
            while e.advance() {
                write_tuple(
                    out,
                    &e.current().iter().map(Elem::to_string).collect::<Vec<_>>(),
                )?;
            }
        }
    }
    Ok(())
}

fn qe(out: &mut impl Write, formula: &str, sig: Option<&Path>, unpruned: bool) -> CliResult<()> {
    // a bare argument naming an existing file is read as a formula file
    let (text, origin) = if !formula.starts_with('@') && Path::new(formula).is_file() {
        (read(Path::new(formula))?, formula.to_string())
    } else {
        formula_source(formula)?
    };
    let q = match sig {
        Some(path) => {
            let input = load_input(path, true)?;
            parse_formula(&text, input.signature()).map_err(|e| located(&origin, e))?
        }
        None => {
            parse_formula_inferred(&text)
                .map_err(|e| located(&origin, e))?
                .0
        }
    };
    let opts = QeOptions { prune: !unpruned };
    let qf = eliminate_all_with(&q.formula, opts).map_err(plain)?;
    writeln!(out, "{qf}")?;
    Ok(())
}

fn reduce(out: &mut impl Write, path: &Path, copies: Option<usize>) -> CliResult<()> {
    let Input::Rel(s) = load_input(path, true)? else {
        return Err(Failure(format!(
            "{}: expected a relational structure or graph",
            path.display()
        )));
    };
    let reduced = build_bijective_with(&s, copies).map_err(plain)?;
    write!(out, "{}", reduced.to_text())?;
    Ok(())
}

fn subgraph(
    out: &mut impl Write,
    host: &Path,
    pattern: &Path,
    opts: EmbeddingOptions,
    canonical: bool,
    count_only: bool,
) -> CliResult<()> {
    let g = load_graph_file(host)?;
    let h = load_graph_file(pattern)?;
    let plan = EmbeddingPlan::new(&h, &g, opts).map_err(plain)?;
    let mut count = 0u64;
    let mut emit = |t: &[Elem], out: &mut dyn Write| -> io::Result<()> {
        count += 1;
        if !count_only {
            writeln!(
                out,
                "({})",
                t.iter().map(Elem::to_string).collect::<Vec<_>>().join(", ")
            )?;
        }
        Ok(())
    };
    if canonical {
        for t in plan.canonical().map_err(plain)? {
            emit(&t, out)?;
        }
    } else {
        let mut e = plan.enumerator().map_err(plain)?;
        while e.advance() {
            emit(e.current(), out)?;
        }
    }
    if count_only {
        writeln!(out, "{count}")?;
    }
    Ok(())
}

/// A random structure over `n` elements with the signature of `like`, each
/// predicate keeping its density.
fn resample(like: &BijStructure, n: usize, rng: &mut ChaCha8Rng) -> CliResult<BijStructure> {
    let sig = like.signature();
    if n == 0 && !sig.constants().is_empty() {
        return Err(Failure("constants need a nonempty domain".into()));
    }
    let mut b = BijStructure::builder(n);
    for f in sig.functions() {
        b = b.perm(f, random_permutation(rng, n));
    }
    for (i, p) in sig.predicates().iter().enumerate() {
        let density = if like.size() == 0 {
            0.0
        } else {
            like.members(i).len() as f64 / like.size() as f64
        };
        let members = (0..n as Elem).filter(|_| rng.gen_bool(density)).collect();
        b = b.pred(p, members);
    }
    for c in sig.constants() {
        b = b.constant(c, rng.gen_range(0..n as Elem));
    }
    b.build().map_err(plain)
}

fn bench_delay(
    out: &mut impl Write,
    path: &Path,
    formula: &str,
    sizes: &[usize],
    seed: u64,
) -> CliResult<()> {
    let Input::Bij(base) = load_input(path, false)? else {
        return Err(Failure(format!(
            "{}: bench-delay needs a bijective structure",
            path.display()
        )));
    };
    let q = parse(formula, base.signature())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    writeln!(
        out,
        "n\ttuples\tprecompute_steps\tmax_gap\tmean_gap\tfinal_gap"
    )?;
    let opts = EnumOptions {
        strategy: Strategy::Lazy,
        record_gaps: false,
    };
    let row = |s: &BijStructure, out: &mut dyn Write| -> CliResult<()> {
        let r = measure_delay(enum_query_with(s, &q, opts).map_err(plain)?);
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.3}\t{}",
            s.size(),
            r.tuples,
            r.precompute_steps,
            r.max_gap,
            r.mean_gap,
            r.final_gap
        )?;
        Ok(())
    };
    if sizes.is_empty() {
        row(&base, out)?;
    }
    for &n in sizes {
        let s = resample(&base, n, &mut rng)?;
        row(&s, out)?;
    }
    Ok(())
}

/// Run the command line `args` (program name first). Returns the exit
/// status: 0 on success, 1 when `check --strict-exit` finds the formula
/// false, 2 on any input or resource error.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    if cli.version {
        let _ = writeln!(
            out,
            "bdenum {}\nformat {FORMAT_VERSION}",
            env!("CARGO_PKG_VERSION")
        );
        return 0;
    }
    let Some(command) = cli.command else {
        let _ = writeln!(err, "error: a subcommand is required; see --help");
        return 2;
    };
    let result = match command {
        Command::Check {
            structure,
            formula,
            oracle,
            strict_exit,
            as_structure,
            budget,
        } => check(out, &structure, &formula, oracle, as_structure, budget).map(|truth| {
            if !truth && strict_exit {
                1
            } else {
                0
            }
        }),
        Command::Enum {
            structure,
            formula,
            oracle,
            as_structure,
            strategy,
            budget,
        } => enumerate(
            out,
            &structure,
            &formula,
            oracle,
            as_structure,
            strategy.into(),
            budget,
        )
        .map(|()| 0),
        Command::Qe {
            formula,
            sig,
            unpruned,
        } => qe(out, &formula, sig.as_deref(), unpruned).map(|()| 0),
        Command::Reduce { structure, copies } => reduce(out, &structure, copies).map(|()| 0),
        Command::Subgraph {
            host,
            pattern,
            induced,
            degree_constrained,
            canonical,
            count_only,
        } => subgraph(
            out,
            &host,
            &pattern,
            EmbeddingOptions {
                induced,
                degree_constrained,
            },
            canonical,
            count_only,
        )
        .map(|()| 0),
        Command::BenchDelay {
            structure,
            formula,
            sizes,
            seed,
        } => bench_delay(out, &structure, &formula, &sizes, seed).map(|()| 0),
    };
    let code = match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    };
    if let Err(e) = out.flush() {
        if e.kind() != io::ErrorKind::BrokenPipe {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_file_kinds() {
        assert_eq!(
            detect("format 1\ngraph 3 undirected\n0 1\n"),
            FileKind::Graph
        );
        assert_eq!(
            detect("# c\ndomain 2\nrel E 2\n0 1\nend\n"),
            FileKind::Relational
        );
        assert_eq!(detect("domain 2\nperm f 1 0\n"), FileKind::Bijective);
        assert_eq!(detect("domain 0\n"), FileKind::Bijective);
    }

    #[test]
    fn version_and_usage_errors() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["bdenum", "--version"], &mut out, &mut err), 0);
        assert_eq!(String::from_utf8(out).unwrap(), "bdenum 0.1.0\nformat 1\n");
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["bdenum", "frobnicate"], &mut out, &mut err), 2);
        assert!(out.is_empty() && !err.is_empty());
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["bdenum"], &mut out, &mut err), 2);
    }

    #[test]
    fn inferred_qe() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(
            run(["bdenum", "qe", "E y. f(y) = x"], &mut out, &mut err),
            0
        );
        assert_eq!(String::from_utf8(out).unwrap(), "true\n");
    }
}
