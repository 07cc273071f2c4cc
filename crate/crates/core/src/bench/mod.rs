//! Synthetic corpora and wall-clock benchmarks.
//!
//! Timings are normalized to seconds per 100 MB of input:
//!
//! ```
//! use mrloglab::bench::normalize_time;
//!
//! assert_eq!(normalize_time(50.0, 200.0).unwrap(), 25.0);
//! assert_eq!(normalize_time(7.5, 100.0).unwrap(), 7.5);
//! assert!(normalize_time(1.0, 0.0).is_err());
//! ```

mod generator;

pub use generator::{
    generate_corpus, generate_log, generate_log_with, load_manifest, manifest_path, render, GeneratedCorpus,
    GeneratedLine, GenerationManifest, GeneratorConfig, LogEvent, LogGenerator, ObservedValues,
};

use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::analyses::{run_analysis, AnalysisName, AnalysisParams, RunError};
use crate::blockstore::{Cluster, ClusterSpec, StoreError};
use crate::engine::{cache_dataset, counter, DataSource, Engine, RunOptions};
use crate::logformat::LogFormatDescriptor;

pub const CSV_HEADER: [&str; 7] =
    ["job", "size_mb", "iteration", "running_time_s", "normalized_s_per_100mb", "workers", "cache"];

const BYTES_PER_MB: f64 = 1024.0 * 1024.0;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("ZeroSize: input size must be positive, got {0} MB")]
    ZeroSize(f64),
    #[error("sizes must be non-empty and ascending")]
    InvalidSizes,
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `running_time_s * 100 / size_mb`.
pub fn normalize_time(running_time_s: f64, size_mb: f64) -> Result<f64, BenchError> {
    if size_mb <= 0.0 || !size_mb.is_finite() {
        return Err(BenchError::ZeroSize(size_mb));
    }
    Ok(running_time_s * (100.0 / size_mb))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub job: String,
    pub size_mb: f64,
    pub iteration: u32,
    pub running_time_s: f64,
    pub normalized_s_per_100mb: f64,
    pub workers: usize,
    pub cache: bool,
    /// Parse calls made by the timed runs of this row, per run.
    pub parse_invocations: u64,
}

impl BenchRow {
    fn csv_record(&self) -> [String; 7] {
        [
            self.job.clone(),
            format!("{}", self.size_mb),
            self.iteration.to_string(),
            format!("{}", self.running_time_s),
            format!("{}", self.normalized_s_per_100mb),
            self.workers.to_string(),
            self.cache.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Target corpus sizes in MB, ascending.
    pub sizes: Vec<f64>,
    pub job: AnalysisName,
    pub seed: u64,
    pub workers: usize,
    pub cache: bool,
    /// Where generated corpora are kept and reused.
    pub work_dir: PathBuf,
    pub format: LogFormatDescriptor,
    pub cluster: ClusterSpec,
    pub repetitions: usize,
    pub params: AnalysisParams,
}

impl BenchConfig {
    pub fn new(sizes: Vec<f64>, job: AnalysisName, work_dir: impl Into<PathBuf>) -> Self {
        BenchConfig {
            sizes,
            job,
            seed: 1,
            workers: RunOptions::default().workers,
            cache: false,
            work_dir: work_dir.into(),
            format: LogFormatDescriptor::iis_full(),
            cluster: ClusterSpec::default(),
            repetitions: 3,
            params: AnalysisParams { needle: Some("Googlebot".into()), ..AnalysisParams::default() },
        }
    }
}

fn median(mut samples: Vec<Duration>) -> Duration {
    samples.sort();
    samples[samples.len() / 2]
}

/// Generates (or reuses) a corpus per size, ingests it and times the job.
///
/// Each point is run `repetitions` times and the median wall time is
/// reported. In cache mode iteration 1 covers building the cache plus one
/// run over it, and iteration 2 a run over the already built cache. Rows
/// are written to `csv_out` and flushed as soon as they are measured.
pub fn run_bench<W: Write>(config: &BenchConfig, csv_out: W) -> Result<BenchReport, BenchError> {
    if config.sizes.is_empty() || config.sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(BenchError::InvalidSizes);
    }
    if let Some(&bad) = config.sizes.iter().find(|s| s.is_nan() || **s <= 0.0) {
        return Err(BenchError::ZeroSize(bad));
    }
    std::fs::create_dir_all(&config.work_dir)?;
    let mut csv = csv::Writer::from_writer(csv_out);
    csv.write_record(CSV_HEADER)?;
    csv.flush()?;

    let engine = Engine::new();
    let opts = RunOptions::with_workers(config.workers);
    let reps = config.repetitions.max(1);
    let mut report = BenchReport::default();
    for &target in &config.sizes {
        let path = config.work_dir.join(format!(
            "{}-{}-seed{}-{}mb.log",
            config.format.format_id(),
            config.format.variant(),
            config.seed,
            target
        ));
        let manifest = match load_manifest(&path) {
            Ok(m) if std::fs::metadata(&path).map(|md| md.len()).ok() == Some(m.bytes) => m,
            _ => generate_log(&path, target, config.seed, &config.format)?,
        };
        let size_mb = manifest.bytes as f64 / BYTES_PER_MB;
        let cluster = Cluster::in_memory(config.cluster);
        let dataset = cluster.ingest(&format!("bench-{target}"), std::fs::File::open(&path)?)?;
        let source = DataSource::Dataset(dataset.clone());

        let mut timed: Vec<(u32, Duration, u64)> = Vec::new();
        if config.cache {
            let mut first = Vec::with_capacity(reps);
            let mut second = Vec::with_capacity(reps);
            let mut parses = (0, 0);
            for _ in 0..reps {
                let start = Instant::now();
                let cache = Arc::new(cache_dataset(&cluster, &dataset, &config.format)?);
                let source = DataSource::Cached(Arc::clone(&cache));
                let out = run_analysis(&engine, config.job, &config.params, &config.format, &source, &cluster, &opts)?;
                first.push(start.elapsed());
                parses.0 = cache.parse_count() + out.counter_total(counter::PARSE_INVOCATIONS);

                let start = Instant::now();
                let out = run_analysis(&engine, config.job, &config.params, &config.format, &source, &cluster, &opts)?;
                second.push(start.elapsed());
                parses.1 = out.counter_total(counter::PARSE_INVOCATIONS);
            }
            timed.push((1, median(first), parses.0));
            timed.push((2, median(second), parses.1));
        } else {
            let mut samples = Vec::with_capacity(reps);
            let mut parses = 0;
            for _ in 0..reps {
                let start = Instant::now();
                let out = run_analysis(&engine, config.job, &config.params, &config.format, &source, &cluster, &opts)?;
                samples.push(start.elapsed());
                parses = out.counter_total(counter::PARSE_INVOCATIONS);
            }
            timed.push((1, median(samples), parses));
        }

        for (iteration, elapsed, parse_invocations) in timed {
            let running_time_s = elapsed.as_secs_f64();
            let row = BenchRow {
                job: config.job.to_string(),
                size_mb,
                iteration,
                running_time_s,
                normalized_s_per_100mb: normalize_time(running_time_s, size_mb)?,
                workers: opts.workers,
                cache: config.cache,
                parse_invocations,
            };
            csv.write_record(row.csv_record())?;
            csv.flush()?;
            report.rows.push(row);
        }
    }
    Ok(report)
}
