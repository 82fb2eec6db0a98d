//! Command-line scenario runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod kinds;
mod output;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kinds::RunError;
use scenario::Kind;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "cvsynth", version, about = "Run dense-coding, cubic-phase-gate and photon-detector scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its artifacts.
    Run {
        file: PathBuf,
        /// Treat numerical warnings and failed checks as errors (exit 2).
        #[arg(long)]
        strict: bool,
        /// Output directory; overrides `output_dir` in the file.
        #[arg(long, value_name = "PATH")]
        output_dir: Option<PathBuf>,
    },
    /// List the scenario kinds.
    List,
    /// Show the parameters of a scenario kind.
    Describe { kind: String },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::List => {
            for kind in Kind::ALL {
                println!("{:<26}{}", kind.name(), kinds::summary(kind));
            }
            ExitCode::SUCCESS
        }
        Command::Describe { kind } => match Kind::parse(&kind) {
            Some(kind) => {
                print!("{}", describe(kind));
                ExitCode::SUCCESS
            }
            None => {
                eprintln!(
                    "error: unknown kind `{kind}`; valid kinds: {}",
                    Kind::ALL.map(Kind::name).join(", ")
                );
                ExitCode::from(EXIT_USAGE)
            }
        },
        Command::Run { file, strict, output_dir } => match run(&file, strict, output_dir.as_deref()) {
            Ok(code) => code,
            Err(RunError::Config(msg)) => {
                eprintln!("error: {}: {msg}", file.display());
                ExitCode::from(EXIT_USAGE)
            }
            Err(RunError::Numerical(msg)) => {
                eprintln!("error: {}: {msg}", file.display());
                ExitCode::from(EXIT_NUMERICAL)
            }
        },
    }
}

fn describe(kind: Kind) -> String {
    let defaults = kinds::defaults(kind);
    let fields = kinds::fields(kind);
    let mut rows: Vec<[String; 4]> = vec![["name", "type", "default", "description"].map(String::from)];
    for f in &fields {
        let default = defaults.get(f.name).map_or_else(|| "(none)".to_string(), |v| v.to_string());
        rows.push([f.name.to_string(), f.ty.to_string(), default, f.description.to_string()]);
    }
    let widths: Vec<usize> = (0..3).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = format!("{}: {}\n\nkeys: kind (string), seed (integer, required), output_dir (path, optional)\n\n[parameters]\n", kind, kinds::summary(kind));
    for r in &rows {
        out.push_str(&format!("  {:<w0$}  {:<w1$}  {:<w2$}  {}\n", r[0], r[1], r[2], r[3], w0 = widths[0], w1 = widths[1], w2 = widths[2]));
    }
    out
}

fn run(file: &Path, strict: bool, override_dir: Option<&Path>) -> Result<ExitCode, RunError> {
    let text = fs::read_to_string(file).map_err(|e| RunError::Config(format!("cannot read: {e}")))?;
    let (kind, file_dir) = scenario::peek(&text).map_err(RunError::Config)?;
    let dir = scenario::resolve_output_dir(file, file_dir.as_deref(), override_dir);
    output::ensure_free(&dir).map_err(RunError::Config)?;

    log::info!("running {kind} from {}", file.display());
    let (seed, artifacts) = kinds::run(kind, &text)?;
    output::publish(&dir, &artifacts, kind.name(), seed, &text).map_err(RunError::Numerical)?;

    for c in &artifacts.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for w in &artifacts.warnings {
        log::warn!("{w}");
    }
    println!("wrote {} artifacts and {} to {}", artifacts.files.len(), output::MANIFEST, dir.display());
    if strict && (!artifacts.warnings.is_empty() || !artifacts.all_passed()) {
        eprintln!(
            "error: strict mode: {} warning(s), {} failed check(s)",
            artifacts.warnings.len(),
            artifacts.checks.iter().filter(|c| !c.passed).count()
        );
        return Ok(ExitCode::from(EXIT_NUMERICAL));
    }
    Ok(ExitCode::SUCCESS)
}
