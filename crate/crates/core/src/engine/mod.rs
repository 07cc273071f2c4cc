//! MapReduce execution over block splits.
//!
//! A job maps every line of its input through a registered [`Mapper`],
//! groups the emitted pairs by key in comparator order, feeds each group to
//! a registered [`Reducer`] and writes the reducer output to one file, or to
//! one file per key prefix when the job is multi-output.
//!
//! ```
//! use mrloglab::blockstore::{Cluster, ClusterSpec};
//! use mrloglab::engine::{DataSource, Engine, JobSpec, RunOptions};
//!
//! let cluster = Cluster::in_memory(ClusterSpec::default());
//! let dataset = cluster.ingest_bytes("words", b"a b\nb c\n").unwrap();
//! let job = JobSpec::new("wordcount", "wordcount", "sum");
//! let result = Engine::new()
//!     .run_job(&job, &DataSource::Dataset(dataset), &cluster, &RunOptions::default())
//!     .unwrap();
//! assert_eq!(result.file_text("part-00000").unwrap(), "a\t1\nb\t2\nc\t1\n");
//! ```

mod cache;
mod chain;
mod output;
mod registry;
mod routing;
mod runner;
mod shuffle;

pub use cache::{cache_dataset, CachedDataset, CachedLine};
pub use chain::{Binding, ChainError, ChainResult, ChainSpec, Extractor};
pub use output::{write_output, SUCCESS_MARKER};
pub use registry::{
    IdentityReducer, MapContext, MapInput, Mapper, ReduceContext, Reducer, Registry, SumReducer, WordCountMapper,
};
pub use routing::{route_multi_output, RouteError, SINGLE_OUTPUT_FILE, UNROUTED_PREFIX};
pub use runner::Engine;
pub use shuffle::{shuffle_sort, KeyGroup};

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::blockstore::{DatasetRef, NodeId, StoreError};
use crate::logformat::LogFormatDescriptor;

/// Intermediate or output pair. Neither side contains tabs or newlines.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyValue {
    pub key: String,
    pub value: String,
}

impl KeyValue {
    /// Builds a pair, replacing tabs and line breaks with spaces.
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        KeyValue { key: sanitize(key.into()), value: sanitize(value.into()) }
    }
}

fn sanitize(s: String) -> String {
    if s.contains(['\t', '\n', '\r']) {
        s.replace(['\t', '\n', '\r'], " ")
    } else {
        s
    }
}

/// Key ordering applied by the shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeyOrder {
    /// Byte-wise string order.
    #[default]
    Lexicographic,
    /// Signed integer order; every key must parse as an integer.
    Numeric,
}

/// Named string parameters visible to mappers and reducers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JobConfig {
    params: BTreeMap<String, String>,
}

impl JobConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `name`, replacing any earlier value. Panics on an empty name.
    pub fn set(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into();
        assert!(!name.is_empty(), "parameter names must be non-empty");
        self.params.insert(name, value.into());
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.params.get(name).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Where a job reads from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InputRef {
    /// The dataset handed to `run_job` / `run_chain`.
    #[default]
    Source,
    /// An output file of an earlier job in the same chain.
    PriorOutput { job: usize, file: String },
}

/// Concrete input of a job run.
#[derive(Debug, Clone)]
pub enum DataSource {
    Dataset(DatasetRef),
    Cached(Arc<CachedDataset>),
}

impl DataSource {
    pub fn format(&self) -> Option<&LogFormatDescriptor> {
        match self {
            DataSource::Dataset(d) => d.format.as_ref(),
            DataSource::Cached(c) => Some(c.format()),
        }
    }
}

impl From<DatasetRef> for DataSource {
    fn from(d: DatasetRef) -> Self {
        DataSource::Dataset(d)
    }
}

impl From<Arc<CachedDataset>> for DataSource {
    fn from(c: Arc<CachedDataset>) -> Self {
        DataSource::Cached(c)
    }
}

/// Declarative description of one job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSpec {
    pub name: String,
    pub mapper: String,
    pub reducer: String,
    pub config: JobConfig,
    pub multi_output: bool,
    pub key_order: KeyOrder,
    pub input: InputRef,
    /// Log dialect used by parsing mappers; falls back to the input's own.
    pub format: Option<LogFormatDescriptor>,
    pub output_dir: Option<PathBuf>,
}

impl JobSpec {
    pub fn new(name: impl Into<String>, mapper: impl Into<String>, reducer: impl Into<String>) -> Self {
        JobSpec {
            name: name.into(),
            mapper: mapper.into(),
            reducer: reducer.into(),
            config: JobConfig::new(),
            multi_output: false,
            key_order: KeyOrder::Lexicographic,
            input: InputRef::Source,
            format: None,
            output_dir: None,
        }
    }

    pub fn with_param(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.config.set(name, value);
        self
    }

    pub fn multi_output(mut self, on: bool) -> Self {
        self.multi_output = on;
        self
    }

    pub fn key_order(mut self, order: KeyOrder) -> Self {
        self.key_order = order;
        self
    }

    pub fn reading(mut self, input: InputRef) -> Self {
        self.input = input;
        self
    }

    pub fn with_format(mut self, format: LogFormatDescriptor) -> Self {
        self.format = Some(format);
        self
    }

    pub fn output_to(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = Some(dir.into());
        self
    }
}

pub mod counter {
    pub const LINES_READ: &str = "lines_read";
    pub const CORRUPT_LINES_SKIPPED: &str = "corrupt_lines_skipped";
    pub const MAP_TASKS_RESCHEDULED: &str = "map_tasks_rescheduled";
    pub const PARSE_INVOCATIONS: &str = "parse_invocations";
    pub const MAP_TASKS: &str = "map_tasks";
    pub const OUTPUT_RECORDS: &str = "output_records";
}

/// Named integer counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters(BTreeMap<String, u64>);

impl Counters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> u64 {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn add(&mut self, name: &str, delta: u64) {
        match self.0.get_mut(name) {
            Some(v) => *v += delta,
            None => {
                self.0.insert(name.to_string(), delta);
            }
        }
    }

    pub fn merge(&mut self, other: &Counters) {
        for (k, v) in &other.0 {
            self.add(k, *v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Output files and counters of one job.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JobResult {
    /// File name to its lines, in key order. Empty files are absent.
    pub outputs: BTreeMap<String, Vec<KeyValue>>,
    pub counters: Counters,
}

impl JobResult {
    pub fn file(&self, name: &str) -> Option<&[KeyValue]> {
        self.outputs.get(name).map(Vec::as_slice)
    }

    pub fn file_names(&self) -> impl Iterator<Item = &str> {
        self.outputs.keys().map(String::as_str)
    }

    /// Exact bytes that go to disk for `name`: `key\tvalue\n` per pair.
    pub fn file_bytes(&self, name: &str) -> Option<Vec<u8>> {
        self.file(name).map(serialize_pairs)
    }

    pub fn file_text(&self, name: &str) -> Option<String> {
        self.file_bytes(name).map(|b| String::from_utf8(b).expect("pairs are valid UTF-8"))
    }

    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name)
    }
}

pub(crate) fn serialize_pairs(pairs: &[KeyValue]) -> Vec<u8> {
    let mut out = Vec::new();
    for kv in pairs {
        out.extend_from_slice(kv.key.as_bytes());
        out.push(b'\t');
        out.extend_from_slice(kv.value.as_bytes());
        out.push(b'\n');
    }
    out
}

/// Parses `key\tvalue` lines back into pairs. Lines without a tab get an
/// empty value.
pub fn parse_pairs(text: &str) -> Vec<KeyValue> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| match l.split_once('\t') {
            Some((k, v)) => KeyValue { key: k.to_string(), value: v.to_string() },
            None => KeyValue { key: l.to_string(), value: String::new() },
        })
        .collect()
}

/// When an injected node failure fires, relative to one map task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    /// Before the task reads its split.
    BeforeRead,
    /// After the split was read and mapped, before the task commits.
    MidTask,
    /// After the task committed its output.
    AfterCommit,
}

/// Kill `node` when `task` of chain job `job` reaches `point`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultEvent {
    pub job: usize,
    pub task: usize,
    pub point: FaultPoint,
    pub node: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultPlan {
    pub events: Vec<FaultEvent>,
}

impl FaultPlan {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn fail(mut self, job: usize, task: usize, point: FaultPoint, node: NodeId) -> Self {
        self.events.push(FaultEvent { job, task, point, node });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    pub faults: FaultPlan,
    /// Index of the job inside a chain; selects which fault events apply.
    pub job_index: usize,
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        RunOptions { workers: workers.max(1), ..Self::default() }
    }

    pub fn faults(mut self, faults: FaultPlan) -> Self {
        self.faults = faults;
        self
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        RunOptions { workers, faults: FaultPlan::none(), job_index: 0 }
    }
}

#[derive(Debug, Error)]
pub enum JobError {
    #[error("JobFailed(BlockUnavailable): {0}")]
    BlockUnavailable(#[source] StoreError),
    #[error("JobFailed(UnknownMapper): {0:?}")]
    UnknownMapper(String),
    #[error("JobFailed(UnknownReducer): {0:?}")]
    UnknownReducer(String),
    #[error("JobFailed(NonNumericKey): {0:?}")]
    NonNumericKey(String),
    #[error("JobFailed(MissingFormat): mapper {0:?} parses records but no log format is known")]
    MissingFormat(String),
    #[error("JobFailed(InvalidConfig): {0}")]
    InvalidConfig(String),
    #[error("JobFailed(ReduceFailed): key {key:?}: {message}")]
    Reduce { key: String, message: String },
    #[error("JobFailed(Store): {0}")]
    Store(#[source] StoreError),
    #[error("JobFailed(Io): {0}")]
    Io(#[from] std::io::Error),
}

impl JobError {
    /// Short stable name, e.g. `BlockUnavailable`.
    pub fn kind(&self) -> &'static str {
        match self {
            JobError::BlockUnavailable(_) => "BlockUnavailable",
            JobError::UnknownMapper(_) => "UnknownMapper",
            JobError::UnknownReducer(_) => "UnknownReducer",
            JobError::NonNumericKey(_) => "NonNumericKey",
            JobError::MissingFormat(_) => "MissingFormat",
            JobError::InvalidConfig(_) => "InvalidConfig",
            JobError::Reduce { .. } => "ReduceFailed",
            JobError::Store(_) => "Store",
            JobError::Io(_) => "Io",
        }
    }
}

impl From<StoreError> for JobError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::BlockUnavailable { .. } => JobError::BlockUnavailable(e),
            StoreError::Io(io) => JobError::Io(io),
            other => JobError::Store(other),
        }
    }
}

impl fmt::Display for KeyOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyOrder::Lexicographic => "LEXICOGRAPHIC",
            KeyOrder::Numeric => "NUMERIC",
        })
    }
}
