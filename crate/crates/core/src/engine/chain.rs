use thiserror::Error;

use super::runner::Engine;
use super::{DataSource, InputRef, JobError, JobResult, JobSpec, KeyValue, RunOptions};
use crate::blockstore::Cluster;

/// Pulls a parameter value out of a finished job's output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extractor {
    /// Value column of the last line of `file`.
    LastLineValue { file: String },
    /// Key column of the last line of `file`.
    LastLineKey { file: String },
}

impl Extractor {
    fn file(&self) -> &str {
        match self {
            Extractor::LastLineValue { file } | Extractor::LastLineKey { file } => file,
        }
    }

    /// `None` when the file is absent or empty.
    pub fn extract(&self, result: &JobResult) -> Option<String> {
        let last: &KeyValue = result.file(self.file())?.last()?;
        Some(match self {
            Extractor::LastLineValue { .. } => last.value.clone(),
            Extractor::LastLineKey { .. } => last.key.clone(),
        })
    }
}

/// Copies an extracted value into a later job's configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub source: usize,
    pub extractor: Extractor,
    pub target: usize,
    pub parameter: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainSpec {
    pub jobs: Vec<JobSpec>,
    pub bindings: Vec<Binding>,
}

impl ChainSpec {
    pub fn new(jobs: Vec<JobSpec>) -> Self {
        ChainSpec { jobs, bindings: Vec::new() }
    }

    pub fn bind(mut self, source: usize, extractor: Extractor, target: usize, parameter: impl Into<String>) -> Self {
        self.bindings.push(Binding { source, extractor, target, parameter: parameter.into() });
        self
    }

    /// Bindings and prior-output inputs must point strictly backwards.
    pub fn validate(&self) -> Result<(), ChainError> {
        if self.jobs.is_empty() {
            return Err(ChainError::Invalid("chain has no jobs".into()));
        }
        for b in &self.bindings {
            if b.source >= b.target || b.target >= self.jobs.len() || b.parameter.is_empty() {
                return Err(ChainError::Invalid(format!(
                    "binding {} -> {} ({:?}) does not flow forward within the chain",
                    b.source, b.target, b.parameter
                )));
            }
        }
        for (i, job) in self.jobs.iter().enumerate() {
            if let InputRef::PriorOutput { job: j, .. } = job.input {
                if j >= i {
                    return Err(ChainError::Invalid(format!("job {i} reads output of job {j}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("job {index} ({name}) failed: {source}")]
    Job {
        index: usize,
        name: String,
        #[source]
        source: JobError,
    },
    #[error("BindingFailed: {parameter:?} for job {target}: output {file:?} of job {source_job} is empty")]
    BindingFailed { source_job: usize, target: usize, parameter: String, file: String },
    #[error("invalid chain: {0}")]
    Invalid(String),
}

/// Every job's result plus the parameter values bound along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainResult {
    pub results: Vec<JobResult>,
    /// `(target job, parameter, value)` in binding order.
    pub bound: Vec<(usize, String, String)>,
}

impl ChainResult {
    pub fn final_result(&self) -> &JobResult {
        self.results.last().expect("validated chains have at least one job")
    }

    pub fn bound_value(&self, parameter: &str) -> Option<&str> {
        self.bound.iter().find(|(_, p, _)| p == parameter).map(|(_, _, v)| v.as_str())
    }
}

impl Engine {
    /// Runs the chain's jobs in order. Before job `i` starts, every binding
    /// targeting it is resolved from the already finished results, and a
    /// prior-output input is ingested into `cluster` as a new dataset.
    pub fn run_chain(
        &self,
        chain: &ChainSpec,
        source: &DataSource,
        cluster: &Cluster,
        opts: &RunOptions,
    ) -> Result<ChainResult, ChainError> {
        chain.validate()?;
        let mut results: Vec<JobResult> = Vec::with_capacity(chain.jobs.len());
        let mut bound = Vec::new();
        let base = match source {
            DataSource::Dataset(d) => d.id.to_string(),
            DataSource::Cached(c) => c.source().to_string(),
        };
        for (index, spec) in chain.jobs.iter().enumerate() {
            let mut job = spec.clone();
            for b in chain.bindings.iter().filter(|b| b.target == index) {
                let value = b.extractor.extract(&results[b.source]).ok_or_else(|| ChainError::BindingFailed {
                    source_job: b.source,
                    target: index,
                    parameter: b.parameter.clone(),
                    file: b.extractor.file().to_string(),
                })?;
                job.config.set(b.parameter.clone(), value.clone());
                bound.push((index, b.parameter.clone(), value));
            }
            let fail = |source: JobError| ChainError::Job { index, name: job.name.clone(), source };
            let input = match &job.input {
                InputRef::Source => source.clone(),
                InputRef::PriorOutput { job: prior, file } => {
                    let bytes = results[*prior].file_bytes(file).unwrap_or_default();
                    let id = format!("{base}.job{prior}.{file}");
                    let dataset = cluster.ingest_bytes(&id, &bytes).map_err(|e| fail(e.into()))?;
                    DataSource::Dataset(dataset)
                }
            };
            let job_opts = RunOptions { job_index: index, ..opts.clone() };
            let result = self.run_job(&job, &input, cluster, &job_opts).map_err(fail)?;
            results.push(result);
        }
        Ok(ChainResult { results, bound })
    }
}
