use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mrloglab::analyses::{
    run_analysis, top_n, AnalysisError, AnalysisName, AnalysisOutcome, AnalysisParams, RunError, DEFAULT_STATUS_FLOOR,
};
use mrloglab::bench::{run_bench, BenchConfig, BenchError};
use mrloglab::blockstore::{Cluster, ClusterSpec, DatasetRef, StoreError};
use mrloglab::engine::{
    cache_dataset, counter, write_output, ChainError, DataSource, Engine, FaultPlan, FaultPoint, JobError, JobResult,
    RunOptions,
};
use mrloglab::logformat::{detect_format, is_ignorable, LogFormatDescriptor, LogFormatError, DEFAULT_MAX_PROBE};

const STORE_ENV: &str = "MRLOGLAB_STORE";
const DEFAULT_STORE: &str = "mrloglab-store";

mod exit {
    pub const JOB_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const FORMAT: u8 = 3;
    pub const BINDING: u8 = 4;
    pub const IO: u8 = 5;
    pub const EMPTY_INPUT: u8 = 6;
}

#[derive(Parser)]
#[command(name = "mrloglab", version, about = "MapReduce-style analysis of web server logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the log format of a file.
    Detect {
        #[arg(long)]
        input: PathBuf,
    },
    /// Split a file into replicated blocks under a store directory.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Store root; defaults to $MRLOGLAB_STORE, then ./mrloglab-store.
        #[arg(long)]
        store: Option<PathBuf>,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[arg(long)]
        format: Option<String>,
    },
    /// Run a single-job analysis.
    Analyze {
        analysis: AnalyzeKind,
        #[command(flatten)]
        io: JobIo,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[arg(long)]
        cache: bool,
        /// Lowest HTTP status counted by `errors`.
        #[arg(long, default_value_t = DEFAULT_STATUS_FLOOR)]
        status_floor: u32,
        /// Fail node K while the first map task runs (repeatable).
        #[arg(long = "fail-node")]
        fail_nodes: Vec<usize>,
    },
    /// Run a chained query.
    Query {
        query: QueryKind,
        #[command(flatten)]
        io: JobIo,
        #[command(flatten)]
        cluster: ClusterArgs,
        /// Fail node K while the first map task runs (repeatable).
        #[arg(long = "fail-node")]
        fail_nodes: Vec<usize>,
    },
    /// Count lines containing a word.
    Grep {
        #[arg(long)]
        word: String,
        #[command(flatten)]
        io: JobIo,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[arg(long)]
        cache: bool,
    },
    /// Time an analysis over generated corpora and write a CSV report.
    Bench {
        /// Comma-separated corpus sizes in MB.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<f64>,
        #[arg(long)]
        job: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        cache: bool,
        #[arg(long)]
        workers: Option<usize>,
        /// Dialect of the generated corpora.
        #[arg(long, default_value = "IIS_W3C:full")]
        format: String,
        /// Where generated corpora are kept; defaults next to the CSV.
        #[arg(long)]
        work_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeKind {
    Frequency,
    Errors,
    BusyHour,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKind {
    BusiestDayPages,
}

#[derive(Args)]
struct JobIo {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Log format as FORMAT_ID or FORMAT_ID:variant; detected when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    #[arg(long, default_value_t = 2)]
    replication: usize,
    /// Block size in bytes; K and M suffixes are accepted.
    #[arg(long, default_value = "64M", value_parser = parse_size)]
    block_size: usize,
    /// Map worker threads; defaults to the number of logical CPUs.
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_size(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let (digits, unit) = match s.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() => (&s[..i], c.to_ascii_uppercase()),
        _ => (s, 'B'),
    };
    let scale = match unit {
        'B' => 1,
        'K' => 1024,
        'M' => 1024 * 1024,
        other => return Err(format!("unknown size suffix {other:?}; use K or M")),
    };
    let n: usize = digits.parse().map_err(|_| format!("{s:?} is not a size"))?;
    n.checked_mul(scale).ok_or_else(|| format!("{s:?} is too large"))
}

impl ClusterArgs {
    fn spec(&self) -> Result<ClusterSpec, Failure> {
        ClusterSpec::new(self.nodes, self.replication, self.block_size).map_err(Failure::from)
    }

    fn run_options(&self) -> RunOptions {
        match self.workers {
            Some(w) => RunOptions::with_workers(w),
            None => RunOptions::default(),
        }
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(exit::IO, format!("IoError: {e}"))
    }
}

impl From<LogFormatError> for Failure {
    fn from(e: LogFormatError) -> Self {
        Failure::new(exit::FORMAT, format!("FormatError: {e}"))
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::BlockUnavailable { .. } => Failure::new(exit::JOB_FAILED, format!("BlockUnavailable: {e}")),
            StoreError::Io(_) => Failure::new(exit::IO, format!("IoError: {e}")),
            _ => Failure::new(exit::USAGE, format!("StoreError: {e}")),
        }
    }
}

impl From<JobError> for Failure {
    fn from(e: JobError) -> Self {
        match e {
            JobError::Io(_) => Failure::new(exit::IO, e.to_string()),
            _ => Failure::new(exit::JOB_FAILED, e.to_string()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::EmptyInput(_) => Failure::new(exit::EMPTY_INPUT, e.to_string()),
            _ => Failure::new(exit::USAGE, e.to_string()),
        }
    }
}

impl From<ChainError> for Failure {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::Job { source, .. } => source.into(),
            ChainError::BindingFailed { .. } => Failure::new(exit::BINDING, e.to_string()),
            ChainError::Invalid(_) => Failure::new(exit::USAGE, e.to_string()),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Job(e) => e.into(),
            RunError::Chain(e) => e.into(),
            RunError::Analysis(e) => e.into(),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Run(e) => e.into(),
            BenchError::Store(e) => e.into(),
            BenchError::Io(e) => e.into(),
            BenchError::Csv(e) => Failure::new(exit::IO, format!("IoError: {e}")),
            BenchError::ZeroSize(_) | BenchError::InvalidSizes => Failure::new(exit::USAGE, e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Detect { input } => {
            let format = detect_file(&input)?;
            println!("{}", format.format_id());
            println!("variant: {}", format.variant());
            Ok(())
        }
        Command::Ingest { input, store, cluster, format } => ingest(&input, store, &cluster, format.as_deref()),
        Command::Analyze { analysis, io, cluster, cache, status_floor, fail_nodes } => {
            let name = match analysis {
                AnalyzeKind::Frequency => AnalysisName::Frequency,
                AnalyzeKind::Errors => AnalysisName::Errors,
                AnalyzeKind::BusyHour => AnalysisName::BusyHour,
            };
            let params = AnalysisParams { status_floor, ..AnalysisParams::default() };
            analyze(name, &params, &io, &cluster, cache, &fail_nodes)
        }
        Command::Query { query: QueryKind::BusiestDayPages, io, cluster, fail_nodes } => {
            analyze(AnalysisName::BusiestDayPages, &AnalysisParams::default(), &io, &cluster, false, &fail_nodes)
        }
        Command::Grep { word, io, cluster, cache } => {
            let params = AnalysisParams { needle: Some(word), ..AnalysisParams::default() };
            analyze(AnalysisName::Grep, &params, &io, &cluster, cache, &[])
        }
        Command::Bench { sizes, job, out, seed, cache, workers, format, work_dir, repetitions } => {
            let job: AnalysisName = job.parse()?;
            let work_dir = work_dir.unwrap_or_else(|| {
                out.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf).join("bench-corpora")
            });
            let mut config = BenchConfig::new(sizes, job, work_dir);
            config.seed = seed;
            config.cache = cache;
            config.repetitions = repetitions;
            config.format = LogFormatDescriptor::by_name(&format)?;
            if let Some(w) = workers {
                config.workers = w.max(1);
            }
            let report = run_bench(&config, File::create(&out)?)?;
            for row in &report.rows {
                println!(
                    "{} size={:.3}MB iteration={} time={:.4}s normalized={:.4}s/100MB",
                    row.job, row.size_mb, row.iteration, row.running_time_s, row.normalized_s_per_100mb
                );
            }
            println!("report: {}", out.display());
            Ok(())
        }
    }
}

fn detect_file(path: &Path) -> Result<LogFormatDescriptor, Failure> {
    let reader = BufReader::new(File::open(path)?);
    let mut sample = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !is_ignorable(&line) {
            sample.push(line);
            if sample.len() >= DEFAULT_MAX_PROBE {
                break;
            }
        }
    }
    if sample.is_empty() {
        return Err(Failure::new(exit::EMPTY_INPUT, format!("EmptyInput: {} has no log lines", path.display())));
    }
    let refs: Vec<&str> = sample.iter().map(String::as_str).collect();
    Ok(detect_format(&refs, DEFAULT_MAX_PROBE)?)
}

fn resolve_format(input: &Path, name: Option<&str>) -> Result<LogFormatDescriptor, Failure> {
    match name {
        Some(n) => Ok(LogFormatDescriptor::by_name(n)?),
        None => detect_file(input),
    }
}

fn dataset_id(input: &Path) -> String {
    let stem = input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let id: String =
        stem.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect();
    if id.is_empty() || id == "." || id == ".." {
        "input".to_string()
    } else {
        id
    }
}

fn ingest(input: &Path, store: Option<PathBuf>, args: &ClusterArgs, format: Option<&str>) -> Result<(), Failure> {
    let root = store
        .or_else(|| std::env::var_os(STORE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE));
    let format = match format {
        Some(_) => Some(resolve_format(input, format)?),
        None => detect_file(input).ok(),
    };
    let cluster = Cluster::persistent(args.spec()?, &root)?;
    let dataset = cluster.ingest_with_format(&dataset_id(input), File::open(input)?, format)?;
    println!("dataset: {}", dataset.id);
    println!("store: {}", root.display());
    println!("bytes: {}", dataset.total_bytes);
    if let Some(f) = &dataset.format {
        println!("format: {}", f.qualified_name());
    }
    for block in &dataset.blocks {
        let nodes: Vec<String> = block.replicas.iter().map(|n| n.to_string()).collect();
        println!("block {} offset={} length={} nodes={}", block.index, block.offset, block.length, nodes.join(","));
    }
    Ok(())
}

fn fault_plan(nodes: &[usize], spec: &ClusterSpec) -> Result<FaultPlan, Failure> {
    let mut plan = FaultPlan::none();
    for &node in nodes {
        if node >= spec.node_count {
            return Err(Failure::new(
                exit::USAGE,
                format!("--fail-node {node}: cluster has nodes 0..{}", spec.node_count - 1),
            ));
        }
        plan = plan.fail(0, 0, FaultPoint::MidTask, node);
    }
    Ok(plan)
}

fn analyze(
    name: AnalysisName,
    params: &AnalysisParams,
    io: &JobIo,
    args: &ClusterArgs,
    cache: bool,
    fail_nodes: &[usize],
) -> Result<(), Failure> {
    let started = Instant::now();
    let spec = args.spec()?;
    let opts = args.run_options().faults(fault_plan(fail_nodes, &spec)?);
    let format = resolve_format(&io.input, io.format.as_deref())?;
    let cluster = Cluster::in_memory(spec);
    let dataset: DatasetRef =
        cluster.ingest_with_format(&dataset_id(&io.input), File::open(&io.input)?, Some(format.clone()))?;
    let source = if cache {
        DataSource::Cached(Arc::new(cache_dataset(&cluster, &dataset, &format)?))
    } else {
        DataSource::Dataset(dataset)
    };

    let engine = Engine::new();
    let outcome = run_analysis(&engine, name, params, &format, &source, &cluster, &opts)?;

    let mut written = Vec::new();
    if let AnalysisOutcome::Chain(chain) = &outcome {
        for (i, result) in chain.results.iter().enumerate().take(chain.results.len() - 1) {
            let dir = io.out.join(format!("job{}", i + 1));
            write_output(&dir, result)?;
            written.extend(files(&dir, result));
        }
    }
    let result = outcome.final_result();
    write_output(&io.out, result)?;
    written.extend(files(&io.out, result));

    println!("analysis: {name}");
    println!("format: {}", format.qualified_name());
    println!("lines read: {}", outcome_counter(&outcome, counter::LINES_READ));
    println!("lines skipped: {}", outcome_counter(&outcome, counter::CORRUPT_LINES_SKIPPED));
    println!("map tasks rescheduled: {}", outcome.counter_total(counter::MAP_TASKS_RESCHEDULED));
    match &outcome {
        AnalysisOutcome::Chain(chain) => {
            if let Some(day) = chain.bound_value("max_day") {
                println!("max_day: {day}");
            }
        }
        AnalysisOutcome::BusyHour { busiest, .. } => match busiest {
            Some((hour, count)) => println!("busy hour: {hour} ({count} requests)"),
            None => return Err(AnalysisError::EmptyInput("no parseable lines".into()).into()),
        },
        AnalysisOutcome::Job(_) => {}
    }
    if name == AnalysisName::Frequency {
        for file in result.file_names() {
            let top = top_n(result.file(file).unwrap_or_default(), 3)?;
            let top: Vec<String> = top.into_iter().map(|(k, c)| format!("{k} ({c})")).collect();
            println!("top {file}: {}", top.join(", "));
        }
    }
    for path in written {
        println!("output: {}", path.display());
    }
    println!("wall time: {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

/// Source-reading counters come from the first chain job only, so lines are
/// not counted once per job.
fn outcome_counter(outcome: &AnalysisOutcome, name: &str) -> u64 {
    match outcome {
        AnalysisOutcome::Chain(chain) => chain.results.first().map_or(0, |r| r.counter(name)),
        other => other.counter_total(name),
    }
}

fn files(dir: &Path, result: &JobResult) -> Vec<PathBuf> {
    result.file_names().map(|f| dir.join(f)).collect()
}
