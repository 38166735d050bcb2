//! `cdsolve`: JSON in, JSON out front end for the solver and its oracle.
//!
//! Exit codes: 0 success (or satisfiable), 1 negative answer (unsatisfiable,
//! identities fail, empty consistency fixpoint), 2 bad input or resource
//! limit, 3 invariant violation.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use cdsolve_core::jonsson::{preprocess_terms, verify_cd4, verify_lr_idempotence};
use cdsolve_core::oracle::brute::{brute_force_hom, DEFAULT_MAP_BUDGET};
use cdsolve_core::oracle::generate::{planted_instance, random_instance, InstanceParams};
use cdsolve_core::oracle::lemmas::{lemma_suite, SuiteBudget};
use cdsolve_core::relstruct::validate_template;
use cdsolve_core::strategy::{choose_k, enforce, init_full, Schedule};
use cdsolve_core::{jonsson, Consistency, Error, FiniteAlgebra, RelStructure, SolveOptions, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "cdsolve", about = "Bounded-width CSP solver for CD(4) templates", disable_version_flag = true)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, env = "CDSOLVE_JOBS")]
    jobs: Option<usize>,

    /// Print the package and file-format versions.
    #[arg(short = 'V', long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the CD(4) Jónsson identities of an algebra.
    CheckJonsson { algebra: PathBuf },
    /// Replace the terms by iterates whose derived binaries are retractions.
    Preprocess {
        algebra: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute the greatest (k-1,k)-strategy and report table sizes.
    Consistency {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        template: PathBuf,
        /// Strategy level (default: max(3, largest arity)).
        #[arg(long)]
        k: Option<usize>,
        /// Process covers in a shuffled order drawn from this seed.
        #[arg(long)]
        shuffle_seed: Option<u64>,
    },
    /// Decide whether the instance maps homomorphically to the template.
    Solve(SolveArgs),
    /// Check the structural lemmas on small algebras.
    Lemmas {
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        /// Wall-clock budget in seconds.
        #[arg(long, env = "CDSOLVE_BUDGET_SEC")]
        budget_sec: Option<u64>,
        /// Cap on sampled algebra pairs.
        #[arg(long, env = "CDSOLVE_MAX_PAIRS")]
        max_pairs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a random algebra, template and instance into a directory.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Plant a homomorphism so the instance is satisfiable.
        #[arg(long)]
        planted: bool,
    },
    /// Brute-force ground truth.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Exhaustive homomorphism search; same flags as `solve`.
    Solve(SolveArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    algebra: PathBuf,
    #[arg(long)]
    template: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    /// Skip certifying the algebra and validating the template.
    #[arg(long)]
    unchecked: bool,
    /// Write the reduction log here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Largest number of maps the oracle may try.
    #[arg(long, env = "CDSOLVE_MAP_BUDGET", default_value_t = DEFAULT_MAP_BUDGET)]
    map_budget: u128,
}

/// A finished command: what to print and how to exit.
struct Outcome {
    code: u8,
    body: Value,
}

impl Outcome {
    fn ok(body: Value) -> Self {
        Self { code: 0, body }
    }

    fn negative(body: Value) -> Self {
        Self { code: 1, body }
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) => 3,
        _ => 2,
    }
}

fn error_body(e: &Error) -> Value {
    json!({ "error": { "kind": e.kind(), "message": e.message() } })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("output types serialize")
}

fn write_json(path: &Path, v: &Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(v).expect("values serialize") + "\n";
    std::fs::write(path, text).map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

fn check_jonsson(path: &Path) -> Result<Outcome, Error> {
    let alg = FiniteAlgebra::load(path)?;
    let cd4 = verify_cd4(&alg);
    let body = json!({
        "size": alg.size(),
        "cd4": cd4,
        "lr_idempotent": verify_lr_idempotence(&alg),
    });
    Ok(if cd4.ok { Outcome::ok(body) } else { Outcome::negative(body) })
}

fn preprocess(path: &Path, output: Option<&Path>) -> Result<Outcome, Error> {
    let alg = jonsson::certify(&FiniteAlgebra::load(path)?)?;
    let pre = preprocess_terms(&alg)?;
    let table = to_value(&pre.algebra.to_file());
    let mut body = json!({
        "n1": pre.n1.to_string(),
        "n3": pre.n3.to_string(),
        "l_exponents": pre.l_exponents,
        "r_exponents": pre.r_exponents,
    });
    match output {
        Some(out) => {
            write_json(out, &table)?;
            body["output"] = json!(out.display().to_string());
        }
        None => body["algebra"] = table,
    }
    Ok(Outcome::ok(body))
}

fn consistency(instance: &Path, template: &Path, k: Option<usize>, seed: Option<u64>) -> Result<Outcome, Error> {
    let a = RelStructure::load(instance)?;
    let b = RelStructure::load(template)?;
    let k = k.unwrap_or_else(|| choose_k(&a));
    let schedule = seed.map_or(Schedule::Sequential, Schedule::Shuffled);
    let fixpoint = match init_full(&a, &b, k)? {
        Consistency::Consistent(h) => enforce(h, schedule),
        Consistency::Empty => Consistency::Empty,
    };
    Ok(match fixpoint {
        Consistency::Consistent(h) => Outcome::ok(json!({ "status": "unknown", "k": k, "strategy": h.summary() })),
        Consistency::Empty => Outcome::negative(json!({ "status": "unsat", "k": k })),
    })
}

fn load_problem(args: &SolveArgs) -> Result<(FiniteAlgebra, RelStructure, RelStructure), Error> {
    Ok((FiniteAlgebra::load(&args.algebra)?, RelStructure::load(&args.template)?, RelStructure::load(&args.instance)?))
}

fn answer(assignment: Option<Vec<usize>>) -> Outcome {
    match assignment {
        Some(map) => Outcome::ok(json!({ "status": "sat", "assignment": map })),
        None => Outcome::negative(json!({ "status": "unsat" })),
    }
}

fn solve(args: &SolveArgs) -> Result<Outcome, Error> {
    let (alg, b, a) = load_problem(args)?;
    let result = cdsolve_core::solve(&a, &b, &alg, SolveOptions { unchecked: args.unchecked });
    let trace = match &result {
        Ok(out) => &out.trace,
        Err(e) => &e.trace,
    };
    if let Some(path) = &args.trace {
        write_json(path, &to_value(trace))?;
    }
    match result {
        Ok(out) => Ok(answer(out.assignment)),
        Err(e) => Err(e.error),
    }
}

fn oracle_solve(args: &SolveArgs) -> Result<Outcome, Error> {
    let (alg, b, a) = load_problem(args)?;
    a.check_same_vocabulary(&b)?;
    if !args.unchecked {
        let alg = jonsson::certify(&alg)?;
        validate_template(&b, &alg)?;
    }
    if let Some(path) = &args.trace {
        write_json(path, &json!({ "steps": [] }))?;
    }
    Ok(answer(brute_force_hom(&a, &b, args.map_budget)?))
}

fn lemmas(max_size: usize, budget_sec: Option<u64>, max_pairs: Option<usize>, seed: u64) -> Result<Outcome, Error> {
    let defaults = SuiteBudget::default();
    let budget = SuiteBudget {
        max_pairs: max_pairs.unwrap_or(defaults.max_pairs),
        time_limit: budget_sec.map(Duration::from_secs).or(defaults.time_limit),
        seed,
        ..defaults
    };
    let report = lemma_suite(max_size, &budget)?;
    let passed = report.passed();
    let body = to_value(&report);
    Ok(if passed { Outcome::ok(body) } else { Outcome { code: 3, body } })
}

fn generate(seed: u64, out: &Path, planted: bool) -> Result<Outcome, Error> {
    let params = InstanceParams::default();
    let inst = if planted { planted_instance(seed, &params)? } else { random_instance(seed, &params)? };
    inst.write_to(out)?;
    Ok(Outcome::ok(json!({
        "seed": seed,
        "out": out.display().to_string(),
        "template_size": inst.template.universe(),
        "instance_size": inst.instance.universe(),
        "planted": inst.planted,
    })))
}

fn dispatch(command: &Command) -> Result<Outcome, Error> {
    match command {
        Command::CheckJonsson { algebra } => check_jonsson(algebra),
        Command::Preprocess { algebra, output } => preprocess(algebra, output.as_deref()),
        Command::Consistency { instance, template, k, shuffle_seed } => {
            consistency(instance, template, *k, *shuffle_seed)
        }
        Command::Solve(args) => solve(args),
        Command::Lemmas { max_size, budget_sec, max_pairs, seed } => lemmas(*max_size, *budget_sec, *max_pairs, *seed),
        Command::Gen { seed, out, planted } => generate(*seed, out, *planted),
        Command::Oracle(OracleCommand::Solve(args)) => oracle_solve(args),
    }
}

fn emit(code: u8, body: &Value) -> ExitCode {
    let text = serde_json::to_string_pretty(body).expect("values serialize");
    // A closed pipe downstream is not our failure.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    ExitCode::from(code)
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("{message}");
    emit(2, &json!({ "error": { "kind": "usage", "message": message.trim() } }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and friends
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return usage_error(&e.to_string()),
    };
    if cli.version {
        return emit(0, &json!({ "version": env!("CARGO_PKG_VERSION"), "schema": SCHEMA_VERSION }));
    }
    let Some(command) = cli.command else {
        return usage_error("a subcommand is required; see --help");
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return usage_error("--jobs must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("could not size the worker pool: {e}");
        }
    }
    match dispatch(&command) {
        Ok(out) => emit(out.code, &out.body),
        Err(e) => {
            eprintln!("{e}");
            emit(error_code(&e), &error_body(&e))
        }
    }
}
