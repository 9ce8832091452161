//! `nestcv`: run flat vs. nested CV selection studies and report on them.
//!
//! Exit codes: 0 success, 1 I/O or other runtime failure, 2 invalid
//! configuration or arguments, 3 data error, 4 learner failure.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nestcv::data::{load_csv, subsample, Dataset};
use nestcv::learners::LearnerId;
use nestcv::protocol::{analyse, run_study, ProtocolError, StudyRecord};
use nestcv::report::{build_report, write_pooled, write_report, write_scatter, ReportError, ReportOptions};
use nestcv::seed::{role, Seed};
use nestcv::table::{load_table, save_table, TableError};

use config::{parse_analysis, parse_threshold, ConfigError, StudyConfig};

#[derive(Parser)]
#[command(
    name = "nestcv",
    version,
    about = "Flat vs. nested cross-validation selection studies"
)]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true, env = "NESTCV_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a config file and write all artifacts.
    Run {
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Summarise a raw study table.
    Report {
        table: PathBuf,
        #[command(flatten)]
        report: ReportArgs,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write scatter and pooled plot data for a raw study table.
    Plotdata {
        table: PathBuf,
        #[command(flatten)]
        report: ReportArgs,
        /// Output directory (default: the table's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct ReportArgs {
    /// primary | avg_first | per_repetition
    #[arg(long)]
    analysis: Option<String>,
    /// nested_gap | stddev
    #[arg(long)]
    threshold: Option<String>,
    /// Only datasets with at least this many instances.
    #[arg(long)]
    min_size: Option<usize>,
    /// Fixed learner compared against the nested choice.
    #[arg(long)]
    baseline: Option<String>,
}

impl ReportArgs {
    fn options(&self, base: ReportOptions) -> Result<ReportOptions, Failure> {
        Ok(ReportOptions {
            analysis: match &self.analysis {
                Some(a) => parse_analysis(a)?,
                None => base.analysis,
            },
            threshold: match &self.threshold {
                Some(t) => parse_threshold(t)?,
                None => base.threshold,
            },
            min_size: self.min_size.or(base.min_size),
            baseline: match &self.baseline {
                Some(b) => Some(b.parse::<LearnerId>().map_err(|e| Failure::Config(e.to_string()))?),
                None => base.baseline,
            },
            ..base
        })
    }
}

enum Failure {
    Runtime(String),
    Config(String),
    Data(String),
    Learner(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Learner(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Runtime(m) | Failure::Config(m) | Failure::Data(m) | Failure::Learner(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        let m = e.to_string();
        match e {
            ProtocolError::Data(_) | ProtocolError::Split { .. } => Failure::Data(m),
            ProtocolError::Learner { .. } => Failure::Learner(m),
            ProtocolError::UnknownLearner(_)
            | ProtocolError::InvalidStudy(_)
            | ProtocolError::InsufficientRepetitions { .. } => Failure::Config(m),
            _ => Failure::Runtime(m),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Protocol(p) => p.into(),
            ReportError::IncompleteStudy(_) => Failure::Data(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<TableError> for Failure {
    fn from(e: TableError) -> Self {
        match e {
            TableError::Io { .. } => Failure::Runtime(e.to_string()),
            TableError::Protocol(p) => p.into(),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn load_datasets(cfg: &StudyConfig) -> Result<Vec<Dataset>, Failure> {
    let master = Seed(cfg.plan.master_seed);
    cfg.datasets
        .iter()
        .map(|entry| {
            let mut data = load_csv(&entry.path, &entry.csv_options())
                .map_err(|e| Failure::Data(format!("{}: {e}", entry.path.display())))?;
            if let Some(name) = &entry.name {
                data = data.with_name(name.clone());
            }
            let full = data.n_instances();
            let seed = master.child(role::SUBSAMPLE).child_str(data.name());
            let data = subsample(&data, entry.cap, seed).map_err(|e| Failure::Data(format!("{}: {e}", data.name())))?;
            if data.n_instances() < full {
                eprintln!("{}: subsampled {full} -> {} instances", data.name(), data.n_instances());
            }
            Ok(data)
        })
        .collect()
}

/// Writes the scatter and pooled plot files of every scenario into `dir`.
fn write_plot_data(studies: &[StudyRecord], opts: &ReportOptions, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut written = Vec::new();
    for study in studies {
        let study = match opts.min_size {
            Some(m) => study.filter_min_size(m),
            None => study.clone(),
        };
        let pairs = analyse(&study, opts.analysis, opts.threshold)?;
        let name = file_safe(&study.scenario.name);
        let scatter = dir.join(format!("plot_scatter_{name}.csv"));
        write_scatter(&pairs, create(&scatter)?)?;
        let pooled = dir.join(format!("plot_pooled_{name}.csv"));
        write_pooled(&pairs, create(&pooled)?)?;
        written.extend([scatter, pooled]);
    }
    Ok(written)
}

fn run(cfg_path: &Path, seed: Option<u64>, out: Option<PathBuf>, args: &ReportArgs) -> Result<(), Failure> {
    let mut cfg = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.plan.master_seed = s;
    }
    let opts = args.options(ReportOptions {
        analysis: cfg.analysis,
        threshold: cfg.threshold,
        baseline: cfg.baseline,
        min_size: cfg.min_size,
        ..ReportOptions::default()
    })?;
    let out = out.unwrap_or_else(|| cfg.output_dir.clone());

    let datasets = load_datasets(&cfg)?;
    let mut studies = Vec::new();
    for scenario in &cfg.scenarios {
        eprintln!(
            "scenario {}: {} datasets x {} repetitions, learners {}",
            scenario.name,
            datasets.len(),
            cfg.plan.repetitions,
            scenario
                .learners
                .iter()
                .map(|l| l.as_str())
                .collect::<Vec<_>>()
                .join(",")
        );
        studies.push(run_study(&datasets, scenario, &cfg.plan)?);
    }
    if let Some(b) = opts.baseline {
        if !cfg.scenarios.iter().any(|s| s.learners.contains(&b)) {
            eprintln!("warning: baseline {b} is in no scenario; no fixed-learner rows");
        }
    }

    std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
    let table = out.join("study.csv");
    save_table(&studies, &table)?;
    let report_path = out.join("report.txt");
    let report = build_report(&studies, &opts)?;
    write_report(&report, create(&report_path)?)?;
    let plots = write_plot_data(&studies, &opts, &out)?;
    for p in [table, report_path].iter().chain(&plots) {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn report(table: &Path, args: &ReportArgs, out: Option<PathBuf>) -> Result<(), Failure> {
    let studies = load_table(table)?;
    let report = build_report(&studies, &args.options(ReportOptions::default())?)?;
    match out {
        Some(path) => write_report(&report, create(&path)?)?,
        None => write_report(&report, std::io::stdout().lock())?,
    }
    Ok(())
}

fn plotdata(table: &Path, args: &ReportArgs, out: Option<PathBuf>) -> Result<(), Failure> {
    let studies = load_table(table)?;
    let opts = args.options(ReportOptions::default())?;
    let dir = out.unwrap_or_else(|| table.parent().unwrap_or(Path::new(".")).to_path_buf());
    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    for p in write_plot_data(&studies, &opts, &dir)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn workers_from_config(cli: &Cli) -> Option<usize> {
    match &cli.command {
        Command::Run { config, .. } => config::load(config).ok().and_then(|c| c.workers),
        _ => None,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.or_else(|| workers_from_config(&cli));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            eprintln!("error: workers must be at least 1");
            return ExitCode::from(2);
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let result = pool.install(|| match &cli.command {
        Command::Run {
            config,
            seed,
            out,
            report: args,
        } => run(config, *seed, out.clone(), args),
        Command::Report {
            table,
            report: args,
            out,
        } => report(table, args, out.clone()),
        Command::Plotdata {
            table,
            report: args,
            out,
        } => plotdata(table, args, out.clone()),
    });
    match result {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
