use thiserror::Error;

use super::{
    busiest_day_pages_chain, busy_hour, error_detection_job, field_frequency_job, with_source_format, word_search_job,
    AnalysisError, AnalysisName, DEFAULT_STATUS_FLOOR,
};
use crate::blockstore::Cluster;
use crate::engine::{ChainError, ChainResult, DataSource, Engine, JobError, JobResult, RunOptions};
use crate::logformat::LogFormatDescriptor;

/// Parameters an analysis may take; unused ones are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisParams {
    pub needle: Option<String>,
    pub status_floor: u32,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams { needle: None, status_floor: DEFAULT_STATUS_FLOOR }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnalysisOutcome {
    Job(JobResult),
    Chain(ChainResult),
    /// Frequency job plus the hour picked from its hour file, `None` when
    /// nothing parsed.
    BusyHour {
        result: JobResult,
        busiest: Option<(String, u64)>,
    },
}

impl AnalysisOutcome {
    /// The result whose files form the analysis output.
    pub fn final_result(&self) -> &JobResult {
        match self {
            AnalysisOutcome::Job(r) | AnalysisOutcome::BusyHour { result: r, .. } => r,
            AnalysisOutcome::Chain(c) => c.final_result(),
        }
    }

    pub fn counter_total(&self, name: &str) -> u64 {
        match self {
            AnalysisOutcome::Chain(c) => c.results.iter().map(|r| r.counter(name)).sum(),
            other => other.final_result().counter(name),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Job(#[from] JobError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Runs the named analysis over `source`, parsing with `format`.
pub fn run_analysis(
    engine: &Engine,
    name: AnalysisName,
    params: &AnalysisParams,
    format: &LogFormatDescriptor,
    source: &DataSource,
    cluster: &Cluster,
    opts: &RunOptions,
) -> Result<AnalysisOutcome, RunError> {
    let outcome = match name {
        AnalysisName::Frequency => {
            AnalysisOutcome::Job(engine.run_job(&field_frequency_job(format), source, cluster, opts)?)
        }
        AnalysisName::BusyHour => {
            let result = engine.run_job(&field_frequency_job(format), source, cluster, opts)?;
            let busiest = match result.file("hour_part-00000") {
                Some(hours) => Some(busy_hour(hours)?),
                None => None,
            };
            AnalysisOutcome::BusyHour { result, busiest }
        }
        AnalysisName::Errors => {
            let job = error_detection_job(params.status_floor).with_format(format.clone());
            AnalysisOutcome::Job(engine.run_job(&job, source, cluster, opts)?)
        }
        AnalysisName::Grep => {
            let job = word_search_job(params.needle.as_deref().unwrap_or_default())?;
            AnalysisOutcome::Job(engine.run_job(&job, source, cluster, opts)?)
        }
        AnalysisName::BusiestDayPages => {
            let chain = with_source_format(busiest_day_pages_chain(), format);
            AnalysisOutcome::Chain(engine.run_chain(&chain, source, cluster, opts)?)
        }
    };
    Ok(outcome)
}
