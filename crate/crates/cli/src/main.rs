//! `glc`: check, run, denote and test programs of the guarded iteration
//! metalanguage.

use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use glc_core::harness::{
    adequacy_check, observe_deno, run_adequacy_suite, AdequacyConfig, AdequacyReport, Disagreement,
    ObsTerminal, Observation, SuiteConfig, Verdict,
};
use glc_core::monad::powerset::{NonEmptyPowerset, Powerset};
use glc_core::monad::trace::{check_lazy_agreement, TraceMonad};
use glc_core::monad::{check_laws, Law, LawConfig, LawReport};
use glc_core::oper::{eval_streaming, EvalConfig, Mutation, Terminal};
use glc_core::syntax::{parse_program, pretty_program, pretty_value};
use glc_core::typing::{check_program, Diagnostic, TypedProgram};

#[derive(Parser)]
#[command(
    name = "glc",
    version,
    about = "Toolchain for a metalanguage of guarded iteration"
)]
struct Cli {
    /// Emit a single JSON document on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Admit exception-context reordering at application (reserved).
    #[arg(long, global = true)]
    lax_app_delta: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck a program.
    Check { file: PathBuf },
    /// Evaluate a program operationally, printing events as they occur.
    Run {
        file: PathBuf,
        #[command(flatten)]
        budget: Budget,
    },
    /// Read a program's denotation up to the fuel bound.
    Denote {
        file: PathBuf,
        #[command(flatten)]
        budget: Budget,
    },
    /// Compare both semantics on a program or a generated corpus.
    Adequacy(AdequacyArgs),
    /// Property-check the iteration laws of a guarded monad.
    Laws(LawsArgs),
}

#[derive(Args)]
struct Budget {
    /// Events observed before a run counts as pending.
    #[arg(long, default_value_t = 64)]
    fuel: usize,
    /// Rule applications allowed between two events.
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
}

#[derive(Args)]
struct AdequacyArgs {
    /// Program to compare; omit with --gen.
    #[arg(required_unless_present = "gen", conflicts_with = "gen")]
    file: Option<PathBuf>,
    /// Generate a random corpus instead of reading a file.
    #[arg(long)]
    gen: bool,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Inject an evaluator fault.
    #[arg(long, value_enum)]
    mutation: Option<MutationArg>,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args)]
struct LawsArgs {
    #[arg(long, value_enum)]
    instance: Instance,
    /// Random samples per law.
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prefix length for stream comparisons.
    #[arg(long, default_value_t = 64)]
    fuel: usize,
    /// Largest carrier in the exhaustive sweep; 0 disables it.
    #[arg(long, default_value_t = 2)]
    exhaustive: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Instance {
    Powerset,
    PowersetNonempty,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    DropPutEvent,
    SwapDoShortCircuit,
    HandleitOffByOne,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::DropPutEvent => Mutation::DropPutEvent,
            MutationArg::SwapDoShortCircuit => Mutation::SwapDoShortCircuit,
            MutationArg::HandleitOffByOne => Mutation::HandleItOffByOne,
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("--lax-app-delta is reserved and not implemented")]
    Reserved,
}

/// The outcome of a command that ran to completion.
enum Status {
    Ok,
    Failed,
}

struct Out {
    json: bool,
    color: bool,
}

impl Out {
    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn emit(&self, doc: &Json) {
        println!("{doc}");
    }

    fn diagnostics(&self, file: &Path, diags: &[Diagnostic]) {
        if self.json {
            self.emit(&json!(diags));
        } else {
            for d in diags {
                let head = self.paint("31", &d.code);
                eprintln!(
                    "{}:{}:{}: {head}: {}",
                    file.display(),
                    d.line,
                    d.col,
                    d.message
                );
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let color = std::env::var("GLC_COLOR").map_or(true, |v| v != "0")
        && io::stdout().is_terminal()
        && !cli.json;
    let out = Out {
        json: cli.json,
        color,
    };
    match run(&cli, &out) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("glc: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli, out: &Out) -> Result<Status, CliError> {
    if cli.lax_app_delta {
        return Err(CliError::Reserved);
    }
    match &cli.command {
        Command::Check { file } => {
            let Some(tp) = load(file, out)? else {
                return Ok(Status::Failed);
            };
            if out.json {
                out.emit(&json!([]));
            } else {
                println!("{} : {}", out.paint("32", "ok"), tp.ty);
            }
            Ok(Status::Ok)
        }
        Command::Run { file, budget } => {
            let Some(tp) = load(file, out)? else {
                return Ok(Status::Failed);
            };
            Ok(run_program(&tp, budget, out))
        }
        Command::Denote { file, budget } => {
            let Some(tp) = load(file, out)? else {
                return Ok(Status::Failed);
            };
            let obs = observe_deno(&tp.program, &tp.ty, budget.fuel, budget.max_steps as usize);
            if !out.json {
                for n in &obs.events {
                    println!("put {n}");
                }
            }
            let status = if matches!(obs.terminal, ObsTerminal::Fault(_)) {
                Status::Failed
            } else {
                Status::Ok
            };
            let mut doc: Vec<Json> = obs.events.iter().map(|n| json!({ "out": n })).collect();
            doc.push(terminal_json(&obs.terminal));
            finish(out, doc, &terminal_line(out, &obs.terminal));
            Ok(status)
        }
        Command::Adequacy(args) => adequacy(args, out),
        Command::Laws(args) => Ok(laws(args, out)),
    }
}

/// Parses and typechecks `file`; diagnostics are reported and yield `None`.
fn load(file: &Path, out: &Out) -> Result<Option<TypedProgram>, CliError> {
    let src = std::fs::read_to_string(file).map_err(|source| CliError::Io {
        path: file.display().to_string(),
        source,
    })?;
    let diag = match parse_program(&src) {
        Err(e) => Diagnostic::from(&e),
        Ok(p) => match check_program(&p) {
            Ok(tp) => return Ok(Some(tp)),
            Err(e) => Diagnostic::from(&e),
        },
    };
    out.diagnostics(file, &[diag]);
    Ok(None)
}

fn run_program(tp: &TypedProgram, budget: &Budget, out: &Out) -> Status {
    let cfg = EvalConfig {
        max_events: budget.fuel,
        max_steps: budget.max_steps,
        mutation: None,
    };
    let json = out.json;
    let mut stdout = io::stdout().lock();
    let report = eval_streaming(&tp.program.main, &cfg, &mut |n| {
        if !json {
            let _ = writeln!(stdout, "put {n}");
            let _ = stdout.flush();
        }
    });
    drop(stdout);
    let (terminal, status) = match report.result {
        Ok(Terminal::Ret(v)) => (ObsTerminal::Ret(pretty_value(&v)), Status::Ok),
        Ok(Terminal::Raise(exc, v)) => (
            ObsTerminal::Raise {
                exc,
                value: pretty_value(&v),
            },
            Status::Ok,
        ),
        Ok(Terminal::Pending) => (ObsTerminal::Pending, Status::Ok),
        Err(e) => (ObsTerminal::Fault(e.to_string()), Status::Failed),
    };
    let mut doc: Vec<Json> = report.events.iter().map(|n| json!({ "out": n })).collect();
    doc.push(terminal_json(&terminal));
    finish(out, doc, &terminal_line(out, &terminal));
    status
}

fn terminal_json(t: &ObsTerminal) -> Json {
    match t {
        ObsTerminal::Ret(v) => json!({ "done": v }),
        ObsTerminal::Raise { exc, value } => json!({ "raise": { "exc": exc, "value": value } }),
        ObsTerminal::Pending => json!({ "pending": true }),
        ObsTerminal::Fault(m) => json!({ "fault": m }),
    }
}

fn terminal_line(out: &Out, t: &ObsTerminal) -> String {
    match t {
        ObsTerminal::Ret(v) => format!("{} {v}", out.paint("32", "ret")),
        ObsTerminal::Raise { exc, value } => {
            format!("{} {value}", out.paint("33", &format!("raise_{exc}")))
        }
        ObsTerminal::Pending => out.paint("33", "pending"),
        ObsTerminal::Fault(m) => format!("{} {m}", out.paint("31", "fault:")),
    }
}

fn finish(out: &Out, doc: Vec<Json>, line: &str) {
    if out.json {
        out.emit(&Json::Array(doc));
    } else {
        println!("{line}");
    }
}

fn adequacy(args: &AdequacyArgs, out: &Out) -> Result<Status, CliError> {
    let mutation = args.mutation.map(Mutation::from);
    let report = match &args.file {
        Some(file) => {
            let Some(tp) = load(file, out)? else {
                return Ok(Status::Failed);
            };
            let cfg = AdequacyConfig {
                fuel: args.budget.fuel,
                max_steps: args.budget.max_steps,
                mutation,
            };
            single_report(&tp, &cfg)
        }
        None => run_adequacy_suite(&SuiteConfig {
            count: args.count,
            depth: args.depth,
            seed: args.seed,
            fuel: args.budget.fuel,
            max_steps: args.budget.max_steps,
            mutation,
            shrink: true,
        }),
    };
    if out.json {
        out.emit(&json!(report));
    } else {
        for d in &report.disagreed {
            println!("{} seed {}", out.paint("31", "DISAGREE"), d.seed);
            for line in d.program.lines() {
                println!("    {line}");
            }
            println!("  operational:  {}", d.operational);
            println!("  denotational: {}", d.denotational);
        }
        let verdict = if report.passed() {
            out.paint("32", "PASS")
        } else {
            out.paint("31", "FAIL")
        };
        println!("{verdict} {} of {} agreed", report.agreed, report.total);
    }
    Ok(if report.passed() {
        Status::Ok
    } else {
        Status::Failed
    })
}

fn single_report(tp: &TypedProgram, cfg: &AdequacyConfig) -> AdequacyReport {
    let disagreement = |operational: Observation, denotational: Observation| Disagreement {
        seed: 0,
        program: pretty_program(&tp.program),
        operational,
        denotational,
    };
    let disagreed = match adequacy_check(tp, cfg) {
        Verdict::Agree(_) => vec![],
        Verdict::Disagree {
            operational,
            denotational,
            ..
        } => vec![disagreement(operational, denotational)],
        Verdict::Incomparable(m) => {
            let o = Observation {
                events: vec![],
                terminal: ObsTerminal::Fault(m),
            };
            vec![disagreement(o.clone(), o)]
        }
    };
    AdequacyReport {
        total: 1,
        agreed: 1 - disagreed.len(),
        disagreed,
    }
}

fn laws(args: &LawsArgs, out: &Out) -> Status {
    let cfg = LawConfig {
        samples: args.count,
        seed: args.seed,
        fuel: args.fuel,
        exhaustive_max: args.exhaustive,
        ..LawConfig::default()
    };
    let report: LawReport = match args.instance {
        Instance::Powerset => check_laws(&Powerset, &cfg, &Law::ALL),
        Instance::PowersetNonempty => check_laws(&NonEmptyPowerset, &cfg, &Law::ALL),
        Instance::Trace => {
            let mut r = check_laws(&TraceMonad, &cfg, &Law::ALL);
            r.results.push(check_lazy_agreement(&cfg));
            r
        }
    };
    if out.json {
        out.emit(&json!(report));
    } else {
        for r in &report.results {
            let mark = if r.passed() {
                out.paint("32", "PASS")
            } else {
                out.paint("31", "FAIL")
            };
            println!(
                "{mark} {} ({} samples, {} failed)",
                r.law, r.samples, r.failed
            );
            for f in &r.failures {
                println!("    f = {}", f.f);
                println!("    lhs = {}", f.lhs);
                println!("    rhs = {}", f.rhs);
            }
        }
    }
    if report.passed() {
        Status::Ok
    } else {
        Status::Failed
    }
}
