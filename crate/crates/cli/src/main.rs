//! `proxnet`: run, validate and list experiments.
//!
//! Exit codes: 0 success, 2 parameter error, 3 runtime error.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxnet_core::runner::{self, Issue, KINDS};
use proxnet_core::Error;
use serde_json::Value;

const EXIT_PARAMETER: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "proxnet",
    about = "Reproducible proximity-network experiments",
    after_help = "Spec fields can be overridden with flags named by their path, \
                  e.g. --parameters.replicates=50 or --master_seed 7."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment spec or re-run a manifest.
    Run {
        spec: PathBuf,
        /// Output directory; defaults to the spec's, then $PROXNET_OUTPUT_DIR.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads; defaults to one per core.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a spec against its kind's schema without running it.
    Validate { spec: PathBuf },
    /// Print the experiment kinds.
    ListKinds,
    /// Print the tool version.
    Version,
}

enum Failure {
    Parameter(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => Failure::Parameter(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn issues(list: &[Issue]) -> Failure {
    Failure::Parameter(list.iter().map(Issue::to_string).collect::<Vec<_>>().join("\n"))
}

/// Splits field-path overrides (`--parameters.x=v`, `--master_seed v`) from
/// the arguments clap parses.
type Overrides = Vec<(String, String)>;

fn split_overrides(args: Vec<OsString>) -> Result<(Vec<OsString>, Overrides), Failure> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.to_str().and_then(|s| s.strip_prefix("--")) else {
            rest.push(arg);
            continue;
        };
        let (path, inline) = match flag.split_once('=') {
            Some((p, v)) => (p.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        let is_field = path.starts_with("parameters.") || path == "master_seed" || path == "kind";
        if !is_field {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .and_then(|v| v.into_string().ok())
                .ok_or_else(|| Failure::Parameter(format!("--{path} needs a value")))?,
        };
        overrides.push((path, value));
    }
    Ok((rest, overrides))
}

fn read_json(path: &PathBuf) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    runner::validate_text(&text).map_err(|list| issues(&list))?;
    serde_json::from_str(&text).map_err(|e| Failure::Parameter(format!("line {}: {e}", e.line())))
}

fn run(
    spec_path: PathBuf,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
    overrides: Overrides,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&spec_path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", spec_path.display())))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Parameter(format!("line {}: {e}", e.line())))?;
    // A manifest is re-run through the spec it echoes.
    if value.get("fingerprint").is_some() {
        if let Some(inner) = value.get("spec").cloned() {
            value = inner;
        }
    }
    for (path, raw) in &overrides {
        runner::apply_override(&mut value, path, raw)?;
    }
    if let Some(dir) = output_dir {
        value["output_dir"] = Value::String(dir.to_string_lossy().into_owned());
    }
    let pretty = serde_json::to_string_pretty(&value).expect("JSON value serializes");
    let spec = runner::validate_text(&pretty).map_err(|list| issues(&list))?;
    let (result, out) = match threads {
        Some(0) => return Err(Failure::Parameter("threads: must be at least 1".into())),
        Some(n) => runner::run_with_threads(&spec, n)?,
        None => runner::run(&spec)?,
    };
    println!("fingerprint {}", out.fingerprint);
    println!("csv {}", out.csv.display());
    println!("summary {}", out.summary.display());
    println!("manifest {}", out.manifest.display());
    println!("{}", serde_json::to_string_pretty(&result.summary).expect("JSON value serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let (args, overrides) = match split_overrides(std::env::args_os().collect()) {
        Ok(x) => x,
        Err(Failure::Parameter(m) | Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(EXIT_PARAMETER);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARAMETER } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run {
            spec,
            output_dir,
            threads,
        } => run(spec, output_dir, threads, overrides),
        _ if !overrides.is_empty() => Err(Failure::Parameter("field overrides apply only to `run`".into())),
        Command::Validate { spec } => read_json(&spec).map(|_| println!("ok")),
        Command::ListKinds => {
            KINDS.iter().for_each(|k| println!("{k}"));
            Ok(())
        }
        Command::Version => {
            println!("proxnet {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Parameter(m)) => {
            eprintln!("parameter error: {m}");
            ExitCode::from(EXIT_PARAMETER)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
