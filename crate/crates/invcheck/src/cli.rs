//! `invcheck run | infer | check`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invcheck_core::compile::emit_clp;
use invcheck_core::frontend::{parse_program, pretty_print, ProgramAst};
use invcheck_core::inference::{infer, parse_formulas, Formula};
use invcheck_core::interpreter::{run, run_suite, Excluded, Fault, RunOutcome, DEFAULT_STEP_BUDGET};
use invcheck_core::refute::{CheckConfig, CheckError, Verdict, DEFAULT_LABEL_BUDGET};
use invcheck_core::solver::DEFAULT_PROPAGATION_BUDGET;
use invcheck_core::ssa::{pretty_print_ssa, to_ssa};
use invcheck_core::IntWidth;

use crate::check::{check_parallel, Checked};
use crate::formats::{parse_suite, write_traces, VerdictRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAULT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_DISPROVED: i32 = 4;
pub const EXIT_UNKNOWN: i32 = 5;
pub const EXIT_INTERNAL: i32 = 6;

#[derive(Parser, Debug)]
#[command(name = "invcheck", version, about = "Prove or refute likely invariants of small C-like programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Execute a program on concrete inputs
    Run {
        file: PathBuf,
        #[arg(allow_negative_numbers = true)]
        inputs: Vec<i64>,
        #[command(flatten)]
        common: Common,
    },
    /// Infer likely invariants from a test suite
    Infer {
        file: PathBuf,
        suite: PathBuf,
        /// Write the collected traces as JSON Lines
        #[arg(long)]
        traces_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Prove or disprove each invariant of a file
    Check {
        file: PathBuf,
        invariants: PathBuf,
        /// Loop unfoldings per loop [default: 2*MAX_INT+4]
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_unfold: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_LABEL_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        label_budget: u64,
        #[arg(long, default_value_t = DEFAULT_PROPAGATION_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        propagation_budget: u64,
        /// Seconds per invariant
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Worker threads [default: available cores]
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
pub struct Common {
    /// Integer width in bits
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..=32))]
    pub width: u32,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    pub step_budget: u64,
    #[arg(long, value_enum, default_value_t = Emit::None)]
    pub emit: Emit,
    /// Reserved; search is deterministic
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    Ast,
    Ssa,
    Clp,
    None,
}

impl Common {
    fn width(&self) -> IntWidth {
        IntWidth::new(self.width).expect("range checked by clap")
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Option<String> {
    match std::fs::read_to_string(path) {
        Ok(s) => Some(s),
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            None
        }
    }
}

fn load_program(path: &Path, common: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Option<ProgramAst> {
    let src = load(path, err)?;
    let ast = match parse_program(&src) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "{}:{e}", path.display());
            return None;
        }
    };
    let _ = match common.emit {
        Emit::Ast => write!(out, "{}", pretty_print(&ast)),
        Emit::Ssa => write!(out, "{}", pretty_print_ssa(&to_ssa(&ast))),
        Emit::Clp => write!(out, "{}", emit_clp(&to_ssa(&ast))),
        Emit::None => Ok(()),
    };
    Some(ast)
}

fn fault_text(f: Fault) -> &'static str {
    match f {
        Fault::Overflow => "overflow",
        Fault::DivisionByZero => "division by zero",
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match cli.command {
        Command::Run { file, inputs, common } => cmd_run(&file, &inputs, &common, out, err),
        Command::Infer {
            file,
            suite,
            traces_out,
            common,
        } => cmd_infer(&file, &suite, traces_out.as_deref(), &common, out, err),
        Command::Check {
            file,
            invariants,
            max_unfold,
            label_budget,
            propagation_budget,
            timeout,
            json_out,
            jobs,
            common,
        } => {
            let Some(ast) = load_program(&file, &common, out, err) else {
                return EXIT_INPUT;
            };
            let Some(text) = load(&invariants, err) else {
                return EXIT_INPUT;
            };
            let cfg = CheckConfig {
                width: common.width(),
                unfold_budget: max_unfold,
                label_budget,
                propagation_budget,
                step_budget: common.step_budget,
                deadline: None,
            };
            let timeout = (timeout > 0.0).then(|| Duration::from_secs_f64(timeout));
            let jobs = jobs.map_or_else(
                || std::thread::available_parallelism().map_or(1, |n| n.get()),
                |j| j as usize,
            );
            cmd_check(&ast, &text, &cfg, timeout, jobs, json_out.as_deref(), out, err)
        }
    }
}

fn cmd_run(file: &Path, inputs: &[i64], common: &Common, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(ast) = load_program(file, common, out, err) else {
        return EXIT_INPUT;
    };
    match run(&ast, inputs, common.width(), common.step_budget) {
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
        Ok(RunOutcome::Returned { value, .. }) => {
            let _ = writeln!(out, "{value}");
            EXIT_OK
        }
        Ok(RunOutcome::Fault(f)) => {
            let _ = writeln!(err, "fault: {}", fault_text(f));
            EXIT_FAULT
        }
        Ok(RunOutcome::DivergedAtBudget) => {
            let _ = writeln!(err, "step budget of {} exhausted", common.step_budget);
            EXIT_BUDGET
        }
    }
}

fn cmd_infer(
    file: &Path,
    suite: &Path,
    traces_out: Option<&Path>,
    common: &Common,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(ast) = load_program(file, common, out, err) else {
        return EXIT_INPUT;
    };
    let Some(text) = load(suite, err) else {
        return EXIT_INPUT;
    };
    let cases = match parse_suite(&text) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{}:{e}", suite.display());
            return EXIT_INPUT;
        }
    };
    let runs = run_suite(&ast, &cases, common.width(), common.step_budget);
    for (i, why) in &runs.excluded {
        let why = match why {
            Excluded::Outcome(RunOutcome::Fault(f)) => fault_text(*f).to_string(),
            Excluded::Outcome(_) => "step budget exhausted".into(),
            Excluded::Invalid(e) => e.to_string(),
        };
        let _ = writeln!(err, "warning: case {} {:?} left out: {why}", i + 1, cases[*i]);
    }
    if let Some(path) = traces_out {
        let written = std::fs::File::create(path)
            .map_err(Into::into)
            .and_then(|mut f| write_traces(&mut f, &runs.traces));
        if let Err(e) = written {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    match infer(&runs.traces) {
        Ok(fs) => {
            for f in fs {
                let _ = writeln!(out, "{f}");
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn verdict_line(f: &Formula, c: &Checked) -> String {
    match &c.result {
        Err(e) => format!("{f}: error ({e})"),
        Ok(r) => match &r.verdict {
            Verdict::Proved => format!("{f}: proved"),
            Verdict::Disproved { inputs, output, .. } => {
                let args: Vec<String> = inputs.iter().map(|(p, v)| format!("{p}={v}")).collect();
                format!("{f}: disproved ({} → {output})", args.join(", "))
            }
            Verdict::Unknown(why) => format!("{f}: unknown ({})", why.as_str()),
            Verdict::InternalError(msg) => format!("{f}: internal error ({msg})"),
        },
    }
}

/// Exit code for a set of results: internal errors, then bad terms, then
/// disproofs, then unknowns.
pub fn exit_code(results: &[&Result<invcheck_core::refute::CheckReport, CheckError>]) -> i32 {
    let verdict = |pred: &dyn Fn(&Verdict) -> bool| results.iter().any(|r| matches!(r, Ok(rep) if pred(&rep.verdict)));
    if verdict(&|v| matches!(v, Verdict::InternalError(_))) {
        EXIT_INTERNAL
    } else if results.iter().any(|r| r.is_err()) {
        EXIT_INPUT
    } else if verdict(&|v| matches!(v, Verdict::Disproved { .. })) {
        EXIT_DISPROVED
    } else if verdict(&|v| matches!(v, Verdict::Unknown(_))) {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    ast: &ProgramAst,
    text: &str,
    cfg: &CheckConfig,
    timeout: Option<Duration>,
    jobs: usize,
    json_out: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut fs = Vec::new();
    let mut bad = false;
    for (i, parsed) in parse_formulas(text).into_iter().enumerate() {
        match parsed {
            Ok(f) => fs.push(f),
            Err(e) => {
                let _ = writeln!(err, "invariant {}: {e}", i + 1);
                bad = true;
            }
        }
    }
    if bad {
        return EXIT_INPUT;
    }
    let results = check_parallel(ast, &fs, cfg, timeout, jobs);
    let mut records = Vec::new();
    for (f, c) in fs.iter().zip(&results) {
        let _ = writeln!(out, "{}", verdict_line(f, c));
        let text = f.to_string();
        records.push(match &c.result {
            Ok(r) => VerdictRecord::from_report(&text, r, c.millis),
            Err(e) => VerdictRecord::error(&text, e.to_string()),
        });
    }
    if let Some(path) = json_out {
        let written = serde_json::to_string_pretty(&records)
            .map_err(std::io::Error::from)
            .and_then(|s| std::fs::write(path, s + "\n"));
        if let Err(e) = written {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    exit_code(&results.iter().map(|c| &c.result).collect::<Vec<_>>())
}
