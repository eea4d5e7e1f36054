use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use robobench_core::depth::DepthConfig;
use robobench_core::harness::{
    corrupt_dataset, evaluate_submission, rank_tables, run_selftest, CorruptOptions, EvalOptions, ScoreTable,
    EMBEDDED_VECTORS,
};
use robobench_core::io::manifest::Manifest;
use robobench_core::io::submission::parse_submission;
use robobench_core::params::ParamsTable;
use robobench_core::Track;
use robobench_service::{ServiceConfig, ServiceError};

#[derive(Parser)]
#[command(name = "robobench", version, about = "Corruption synthesis, scoring and leaderboards for driving perception")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply each sample's corruption and write a new dataset and manifest.
    Corrupt {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score a submission against a manifest and emit the score table (JSON).
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        submission: PathBuf,
        /// Expected track; defaults to the manifest's.
        #[arg(long)]
        track: Option<Track>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Depth: scale each prediction by the ratio of medians.
        #[arg(long)]
        median_scale: bool,
        /// Depth: pool pixels over all images instead of averaging per image.
        #[arg(long)]
        micro_average: bool,
        /// Timestamp recorded in the table, overriding the submission's.
        #[arg(long)]
        timestamp: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Rank score tables of one track into CSV and Markdown leaderboards.
    Report {
        /// Score table JSON files.
        #[arg(required = true)]
        tables: Vec<PathBuf>,
        /// Directory for leaderboard.csv and leaderboard.md; Markdown goes to
        /// stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep only each team's best table.
        #[arg(long)]
        best_per_team: bool,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Check the build against embedded golden vectors.
    Selftest {
        #[arg(long, env = "ROBOBENCH_PARAMS")]
        params: Option<PathBuf>,
    },
    /// Run the submission scoring service.
    Serve {
        /// Service configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<std::net::SocketAddr>,
    },
}

#[derive(clap::Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corruption parameter table; the built-in one by default.
    #[arg(long, env = "ROBOBENCH_PARAMS")]
    params: Option<PathBuf>,
    /// Worker threads; all cores by default. Output never depends on it.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

/// Exit 1 for bad input, 2 for everything else.
enum Failure {
    Validation(String),
    Internal(String),
}

impl From<robobench_core::Error> for Failure {
    fn from(e: robobench_core::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Core(e) => e.into(),
            ServiceError::Config(_) | ServiceError::Journal(_) => Failure::Validation(e.to_string()),
            e => Failure::Internal(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Internal(format!("{}: {e}", path.display()))
}

fn load_params(path: Option<&Path>) -> Result<ParamsTable, Failure> {
    Ok(match path {
        Some(p) => ParamsTable::load(p)?,
        None => ParamsTable::canonical().clone(),
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Corrupt { manifest, out, common } => {
            let params = load_params(common.params.as_deref())?;
            let m = Manifest::load(&manifest)?;
            let report = corrupt_dataset(&m, &out, &CorruptOptions { seed: common.seed, params: &params, jobs: common.jobs })?;
            if !report.failed.is_empty() {
                for (id, err) in &report.failed {
                    eprintln!("failed: {id}: {err}");
                }
                return Err(Failure::Validation(format!(
                    "{} of {} samples failed; no manifest written",
                    report.failed.len(),
                    m.samples.len()
                )));
            }
            eprintln!("corrupted {} samples into {}", m.samples.len(), out.display());
            Ok(())
        }
        Command::Eval { manifest, submission, track, out, median_scale, micro_average, timestamp, common } => {
            let params = load_params(common.params.as_deref())?;
            let m = Manifest::load(&manifest)?;
            if let Some(t) = track.filter(|t| *t != m.track) {
                return Err(Failure::Validation(format!("--track {t} does not match the manifest's track {}", m.track)));
            }
            let sub = parse_submission(&submission, m.track)?;
            let opts = EvalOptions {
                depth: DepthConfig { median_scaling: median_scale, micro_average, ..DepthConfig::default() },
                seed: common.seed,
                params_hash: params.hash().to_string(),
                timestamp,
                jobs: common.jobs,
            };
            let table = evaluate_submission(&m, &sub, &opts)?;
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            write_output(out.as_deref(), &(table.to_json() + "\n"))
        }
        Command::Report { tables, out, best_per_team, format } => {
            let mut loaded = Vec::new();
            for p in &tables {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?;
                loaded.push(ScoreTable::from_json(&text).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?);
            }
            let lb = rank_tables(&loaded, best_per_team)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
                    write_output(Some(&dir.join("leaderboard.csv")), &lb.to_csv())?;
                    write_output(Some(&dir.join("leaderboard.md")), &lb.to_markdown())
                }
                None => write_output(
                    None,
                    &match format {
                        Format::Csv => lb.to_csv(),
                        Format::Markdown => lb.to_markdown(),
                    },
                ),
            }
        }
        Command::Selftest { params } => {
            let params = load_params(params.as_deref())?;
            let report = run_selftest(Some(EMBEDDED_VECTORS), &params);
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Validation("selftest failed".into()))
            }
        }
        Command::Serve { config, bind } => {
            let mut cfg = ServiceConfig::load(&config)?;
            if let Some(b) = bind {
                cfg.bind = b;
            }
            robobench_service::run(cfg)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("ROBOBENCH_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
