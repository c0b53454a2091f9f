//! Command-line front end. [`run_command`] does everything except touching
//! the process (stdout, exit), so tests can drive it directly.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    Registry, RunContext, RunOptions, DEFAULT_CCA_THRESHOLD, DEFAULT_MC_SAMPLES, DEFAULT_SEED,
};
use crate::model::{load_model_with, LoadOptions};
use crate::primitives::UnitInterval;
use crate::report::{AnalysisReport, OverallVerdict};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "fusa", version, about = "Functional-safety analysis over a safety model file")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Structural validation of the model
    Validate(Common),
    /// Item definition rigor and state machine checks
    Score(Common),
    /// HARA coverage
    Hara(Common),
    /// SPFM, LFM and PMHF
    Hw(Common),
    /// Failure rate classes
    Frc(Common),
    /// SOTIF harm model, targets, sensitivity and Monte Carlo
    Sotif(Common),
    /// Traceability completeness and cycles
    Trace(Common),
    /// Safety case credibility
    Cca(Common),
    /// Every analysis
    Report(Common),
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    UnitInterval::new(v).map(UnitInterval::get).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct Common {
    /// Model file (JSON)
    model: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat warnings as failures and reject unknown keys and supra-unit SOTIF values
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES, value_parser = clap::value_parser!(u64).range(1..))]
    mc_samples: u64,
    #[arg(long, default_value_t = DEFAULT_CCA_THRESHOLD, value_parser = parse_threshold)]
    cca_threshold: f64,
}

impl Command {
    fn split(&self) -> (&'static [&'static str], &Common) {
        match self {
            Command::Validate(c) => (&["validation"], c),
            Command::Score(c) => (&["rigor", "state_machines"], c),
            Command::Hara(c) => (&["hara"], c),
            Command::Hw(c) => (&["hw_metrics"], c),
            Command::Frc(c) => (&["frc"], c),
            Command::Sotif(c) => (&["sotif"], c),
            Command::Trace(c) => (&["trace"], c),
            Command::Cca(c) => (&["cca"], c),
            Command::Report(c) => (&[], c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutcome {
    fn usage(stderr: String) -> Self {
        CommandOutcome { exit_code: EXIT_USAGE, stdout: String::new(), stderr }
    }
}

/// Exit code for a finished report.
pub fn exit_code(verdict: OverallVerdict, strict: bool) -> i32 {
    match verdict {
        OverallVerdict::Pass => EXIT_PASS,
        OverallVerdict::PassWithWarnings if !strict => EXIT_PASS,
        _ => EXIT_FAIL,
    }
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run_command<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutcome::usage(text)
            } else {
                CommandOutcome { exit_code: EXIT_PASS, stdout: text, stderr: String::new() }
            };
        }
    };
    let (keys, common) = cli.command.split();

    let source = match std::fs::read_to_string(&common.model) {
        Ok(s) => s,
        Err(e) => return CommandOutcome::usage(format!("error: cannot read {}: {e}\n", common.model.display())),
    };
    let loaded = match load_model_with(&source, LoadOptions { strict: common.strict }) {
        Ok(l) => l,
        Err(e) => return CommandOutcome::usage(format!("error: {}: {e}\n", common.model.display())),
    };

    let registry = Registry::builtin();
    let ctx = RunContext {
        options: RunOptions {
            strict: common.strict,
            seed: common.seed,
            mc_samples: common.mc_samples,
            cca_threshold: UnitInterval::new(common.cca_threshold).expect("validated by the parser"),
        },
        load_warnings: loaded.warnings,
    };
    let sections = if keys.is_empty() {
        registry.run_all(&loaded.model, &ctx)
    } else {
        registry.run(keys, &loaded.model, &ctx).expect("builtin keys")
    };
    let report = AnalysisReport::new(loaded.model.name(), common.seed, sections);
    let rendered = match common.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    };
    let exit_code = exit_code(report.overall_verdict, common.strict);

    match &common.out {
        Some(path) => match std::fs::write(path, &rendered) {
            Ok(()) => CommandOutcome { exit_code, stdout: String::new(), stderr: String::new() },
            Err(e) => CommandOutcome::usage(format!("error: cannot write {}: {e}\n", path.display())),
        },
        None => CommandOutcome { exit_code, stdout: rendered, stderr: String::new() },
    }
}
