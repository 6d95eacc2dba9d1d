//! `btt`: counts and enumerates integral representations, exports branches
//! and runs the regression corpus.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use btt_cli::commands::{cmd_branch, cmd_count, cmd_enumerate, cmd_field_info, load_config};
use btt_cli::error::{CliError, EXIT_OK};
use btt_cli::job::{parse_field, FieldDesc, JobSpec};
use btt_cli::regression;
use clap::{Parser, Subcommand};
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "btt",
    version,
    about = "Integral representations through Bruhat-Tits trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count conjugacy classes of integral representations.
    Count {
        #[arg(long)]
        job: PathBuf,
        /// Quartic field data replacing the built-in table.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// One verified integral representation per conjugacy class.
    Enumerate {
        #[arg(long)]
        job: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// The branch at one place, as JSON or Graphviz DOT.
    Branch {
        #[arg(long)]
        job: PathBuf,
        /// Place name as printed by field-info, e.g. P2 or P3_1.
        #[arg(long)]
        place: String,
        /// Write DOT here and print a JSON summary; without it DOT goes to
        /// standard output.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        window: Option<i64>,
    },
    /// Run the regression corpus of reference cases.
    VerifyPaper {
        /// Only cases whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Class group, units and small primes of a field.
    FieldInfo {
        #[arg(long, conflicts_with = "field")]
        job: Option<PathBuf>,
        /// Q, Q(i) or Q(sqrt(d)).
        #[arg(long)]
        field: Option<String>,
    },
}

/// Writes to stdout, treating a closed pipe as a normal end of output.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("btt: cannot write output: {e}");
        }
    }
}

fn print_json(v: &Value) {
    emit(&format!(
        "{}\n",
        serde_json::to_string_pretty(v).expect("JSON values serialize")
    ));
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Count { job, config } => {
            let job = JobSpec::load(&job)?;
            let config = load_config(config.as_deref(), &job)?;
            print_json(&cmd_count(&job, &config)?);
        }
        Command::Enumerate { job, config } => {
            let job = JobSpec::load(&job)?;
            let config = load_config(config.as_deref(), &job)?;
            print_json(&cmd_enumerate(&job, &config)?);
        }
        Command::Branch {
            job,
            place,
            dot,
            window,
        } => {
            let job = JobSpec::load(&job)?;
            let out = cmd_branch(&job, &place, window)?;
            match dot {
                Some(path) => {
                    std::fs::write(&path, &out.dot).map_err(|e| {
                        CliError::Failed(format!("cannot write {}: {e}", path.display()))
                    })?;
                    print_json(&out.summary);
                }
                None => emit(&out.dot),
            }
        }
        Command::VerifyPaper { filter } => {
            let results = regression::run(filter.as_deref());
            emit(&regression::table(&results));
            let failed = results.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(CliError::Regression(failed));
            }
        }
        Command::FieldInfo { job, field } => {
            let field = match (job, field) {
                (Some(path), _) => JobSpec::load(&path)?.field()?,
                (None, Some(name)) => parse_field(&FieldDesc::Name(name))?,
                (None, None) => {
                    return Err(CliError::Schema("field-info needs --job or --field".into()))
                }
            };
            print_json(&cmd_field_info(&field)?);
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            if !matches!(e, CliError::Regression(_)) {
                print_json(&e.to_json());
            }
            eprintln!("btt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
