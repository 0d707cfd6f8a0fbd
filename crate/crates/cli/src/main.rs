//! `pgcl`: parse, explore, solve, sample and generate reduction programs.
//!
//! Exit codes: 0 success (or certified), 1 parse/usage error, 2 budget
//! exhausted, 3 state or frontier cap exceeded.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pgcl::chain::{extract_chain, solve_chain, DEFAULT_STATE_CAP};
use pgcl::explorer::{
    certify_lower_expectation, certify_lower_termination, certify_runtime_exceeds,
    CertificateOutcome, ExploreError, Explorer, CSV_HEADER, DEFAULT_FRONTIER_CAP,
};
use pgcl::rational::parse_rational;
use pgcl::reductions::{generate, Gadget};
use pgcl::sampler::estimate;
use pgcl::{parse, parse_valuation, pretty, Program, Rational, Valuation};

const EXIT_USAGE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "pgcl", version, about = "Analyses for fully probabilistic pGCL programs")]
struct Cli {
    /// Worker threads for exploration and sampling (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Program file.
    program: PathBuf,
    /// Valuation file (`NAME = RAT` per line); unbound variables are 0.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check syntax and print the canonical form.
    Parse {
        program: PathBuf,
    },
    /// Partial-sum rows as CSV.
    Explore {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "v")]
        var: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_FRONTIER_CAP)]
        frontier_cap: usize,
    },
    /// Certify `bound < E(var)`.
    CertifyLower {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        var: String,
        #[arg(long, value_parser = rational_arg)]
        bound: Rational,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_FRONTIER_CAP)]
        frontier_cap: usize,
    },
    /// Certify `bound < Pr(terminates)`.
    CertifyTermination {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_parser = rational_arg)]
        bound: Rational,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_FRONTIER_CAP)]
        frontier_cap: usize,
    },
    /// Certify `bound < E(runtime)`.
    CertifyRuntimeExceeds {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_parser = rational_arg)]
        bound: Rational,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_FRONTIER_CAP)]
        frontier_cap: usize,
    },
    /// Solve a finite-state program exactly.
    Exact {
        #[command(flatten)]
        source: Source,
        /// Variable whose expected outcome to report; repeatable.
        #[arg(long)]
        var: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        cap: usize,
        /// Print the chain's transitions (`src dst prob`) before the results.
        #[arg(long)]
        dump_chain: bool,
    },
    /// Generate a reduction program from a source program.
    Reduce {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_parser = gadget_arg)]
        gadget: Gadget,
        /// Write the program here and the notes next to it (`.notes`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded Monte-Carlo estimate.
    Sample {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "v")]
        var: String,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        step_cap: usize,
    },
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("`{s}` is not a non-negative rational"))
}

fn gadget_arg(s: &str) -> Result<Gadget, String> {
    s.parse()
}

/// A failure carrying its exit code.
struct Failure(u8, String);

type Outcome = Result<u8, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse(&read(path)?).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn load(source: &Source) -> Result<(Program, Valuation), Failure> {
    let program = load_program(&source.program)?;
    let env = match &source.input {
        Some(path) => {
            parse_valuation(&read(path)?).map_err(|e| usage(format!("{}:{e}", path.display())))?
        }
        None => Valuation::new(),
    };
    Ok((program, env))
}

fn explore_error(e: ExploreError) -> Failure {
    match e {
        ExploreError::FrontierCap { .. } => Failure(EXIT_CAP, e.to_string()),
        ExploreError::InvalidBound { .. } => usage(e.to_string()),
    }
}

fn report(out: &mut impl Write, outcome: CertificateOutcome) -> Outcome {
    match outcome {
        CertificateOutcome::Certified { depth, witness } => {
            writeln!(out, "certified depth={depth} witness={witness}").map_err(io_failure)?;
            Ok(0)
        }
        CertificateOutcome::BudgetExhausted { last_row } => {
            writeln!(
                out,
                "budget-exhausted depth={} pr_within_k={} exp_v_partial={} runtime_partial={}",
                last_row.depth, last_row.pr_within, last_row.exp_v_partial, last_row.runtime_partial
            )
            .map_err(io_failure)?;
            Ok(EXIT_BUDGET)
        }
    }
}

fn io_failure(e: io::Error) -> Failure {
    usage(e.to_string())
}

fn run(cli: Cli, out: &mut impl Write) -> Outcome {
    match cli.command {
        Command::Parse { program } => {
            let p = load_program(&program)?;
            writeln!(out, "{}", pretty(&p)).map_err(io_failure)?;
            Ok(0)
        }
        Command::Explore { source, var, depth, frontier_cap } => {
            let (p, env) = load(&source)?;
            let mut ex = Explorer::new(&p, &env, &var).with_frontier_cap(frontier_cap);
            writeln!(out, "{CSV_HEADER}").map_err(io_failure)?;
            for _ in 0..=depth {
                let row = ex.next_row().map_err(explore_error)?;
                writeln!(out, "{}", row.csv_line()).map_err(io_failure)?;
            }
            Ok(0)
        }
        Command::CertifyLower { source, var, bound, budget, frontier_cap } => {
            let (p, env) = load(&source)?;
            let outcome = certify_lower_expectation(&p, &env, &var, &bound, budget, frontier_cap)
                .map_err(explore_error)?;
            report(out, outcome)
        }
        Command::CertifyTermination { source, bound, budget, frontier_cap } => {
            let (p, env) = load(&source)?;
            let outcome = certify_lower_termination(&p, &env, &bound, budget, frontier_cap)
                .map_err(explore_error)?;
            report(out, outcome)
        }
        Command::CertifyRuntimeExceeds { source, bound, budget, frontier_cap } => {
            let (p, env) = load(&source)?;
            let outcome = certify_runtime_exceeds(&p, &env, &bound, budget, frontier_cap)
                .map_err(explore_error)?;
            report(out, outcome)
        }
        Command::Exact { source, var, cap, dump_chain } => {
            let (p, env) = load(&source)?;
            let chain = extract_chain(&p, &env, cap).map_err(|e| Failure(EXIT_CAP, e.to_string()))?;
            if dump_chain {
                write!(out, "{}", chain.dump()).map_err(io_failure)?;
                writeln!(out).map_err(io_failure)?;
            }
            let vars: Vec<&str> = var.iter().map(String::as_str).collect();
            let res = solve_chain(&chain, &vars);
            let mut text = format!(
                "states={}\ntermination_probability={}\n",
                res.chain_states, res.termination_probability
            );
            for (v, e) in &res.expected_outcomes {
                text.push_str(&format!("E({v})={e}\n"));
            }
            text.push_str(&format!(
                "expected_steps={}\nast={}\npast={}",
                res.expected_steps, res.ast, res.past
            ));
            writeln!(out, "{text}").map_err(io_failure)?;
            Ok(0)
        }
        Command::Reduce { source, gadget, out: target } => {
            let (p, env) = load(&source)?;
            let g = generate(gadget, &p, &env).ok_or_else(|| {
                usage(format!("gadget `{gadget}` needs an ordinary program (no probabilistic choice)"))
            })?;
            let text = pretty(&g.program);
            let notes = g.notes();
            match target {
                Some(path) => {
                    let mut notes_path = path.clone().into_os_string();
                    notes_path.push(".notes");
                    fs::write(&path, format!("{text}\n")).map_err(|e| usage(e.to_string()))?;
                    fs::write(&notes_path, notes).map_err(|e| usage(e.to_string()))?;
                }
                None => {
                    for line in notes.lines() {
                        writeln!(out, "// {line}").map_err(io_failure)?;
                    }
                    writeln!(out, "{text}").map_err(io_failure)?;
                }
            }
            Ok(0)
        }
        Command::Sample { source, var, n, seed, step_cap } => {
            let (p, env) = load(&source)?;
            if n == 0 || step_cap == 0 {
                return Err(usage("--n and --step-cap must be positive"));
            }
            let r = estimate(&p, &env, &var, n, seed, step_cap);
            writeln!(out, "var={var}\n{r}").map_err(io_failure)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("pgcl: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = out.flush();
            eprintln!("pgcl: {msg}");
            code
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}
