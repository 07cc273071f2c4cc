//! Ready-made log analyses built on the engine.
//!
//! Every builder here is declarative: it returns a [`JobSpec`] or
//! [`ChainSpec`] naming mappers and reducers registered under fixed names.
//! Running them is the engine's business.

mod mappers;
mod run;

pub use mappers::{
    DayCountMapper, ErrorMapper, FrequencyMapper, GrepMapper, PagesOnDayMapper, SwapMapper, LINES_MATCHED, MAX_DAY,
    NEEDLE, STATUS_FLOOR,
};
pub use run::{run_analysis, AnalysisOutcome, AnalysisParams, RunError};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::{
    ChainSpec, Extractor, InputRef, JobResult, JobSpec, KeyOrder, KeyValue, Registry, SINGLE_OUTPUT_FILE,
};
use crate::logformat::LogFormatDescriptor;

pub const DEFAULT_STATUS_FLOOR: u32 = 400;

/// Prefixes written by the frequency job, in the order its mapper emits them.
pub const FREQUENCY_PREFIXES: [&str; 6] = ["day", "hour", "ip", "page", "method", "browser"];

pub mod mapper_name {
    pub const FREQUENCY: &str = "frequency";
    pub const DAY_COUNT: &str = "day-count";
    pub const SWAP: &str = "swap";
    pub const PAGES_ON_DAY: &str = "pages-on-day";
    pub const ERRORS: &str = "errors";
    pub const GREP: &str = "grep";
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("EmptyInput: {0}")]
    EmptyInput(String),
    #[error("value {value:?} of key {key:?} is not an integer")]
    NonNumericValue { key: String, value: String },
    #[error("search word must be non-empty and free of tabs and line breaks")]
    InvalidNeedle,
    #[error("unknown analysis {0:?}")]
    UnknownAnalysis(String),
}

pub(crate) fn register(registry: &mut Registry) {
    registry.register_mapper(mapper_name::FREQUENCY, FrequencyMapper);
    registry.register_mapper(mapper_name::DAY_COUNT, DayCountMapper);
    registry.register_mapper(mapper_name::SWAP, SwapMapper);
    registry.register_mapper(mapper_name::PAGES_ON_DAY, PagesOnDayMapper);
    registry.register_mapper(mapper_name::ERRORS, ErrorMapper);
    registry.register_mapper(mapper_name::GREP, GrepMapper);
}

/// Analyses exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisName {
    Frequency,
    BusiestDayPages,
    Errors,
    BusyHour,
    Grep,
}

impl AnalysisName {
    pub const ALL: [AnalysisName; 5] = [
        AnalysisName::Frequency,
        AnalysisName::BusiestDayPages,
        AnalysisName::Errors,
        AnalysisName::BusyHour,
        AnalysisName::Grep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisName::Frequency => "frequency",
            AnalysisName::BusiestDayPages => "busiest-day-pages",
            AnalysisName::Errors => "errors",
            AnalysisName::BusyHour => "busy-hour",
            AnalysisName::Grep => "grep",
        }
    }
}

impl fmt::Display for AnalysisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnalysisName {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| AnalysisError::UnknownAnalysis(s.to_string()))
    }
}

/// Single multi-output job counting day, hour, client IP, page, method and
/// user agent in one pass.
pub fn field_frequency_job(descriptor: &LogFormatDescriptor) -> JobSpec {
    JobSpec::new("frequency", mapper_name::FREQUENCY, "sum").multi_output(true).with_format(descriptor.clone())
}

/// Pages visited on the busiest day, as three chained jobs:
///
/// 1. `(day, 1)` summed per day.
/// 2. Job 1's lines swapped to `(count, day)` and sorted numerically by an
///    identity reduce, so the last line holds the busiest day.
/// 3. `(page, 1)` for lines on that day, summed per page.
///
/// The last line of job 2 is bound to job 3's `max_day` parameter. When
/// several days share the top count the greatest day text wins, since it
/// sorts last among equal counts.
pub fn busiest_day_pages_chain() -> ChainSpec {
    let count_days = JobSpec::new("busiest-day-pages/count-days", mapper_name::DAY_COUNT, "sum");
    let sort_days = JobSpec::new("busiest-day-pages/sort-days", mapper_name::SWAP, "identity")
        .key_order(KeyOrder::Numeric)
        .reading(InputRef::PriorOutput { job: 0, file: SINGLE_OUTPUT_FILE.to_string() });
    let count_pages = JobSpec::new("busiest-day-pages/count-pages", mapper_name::PAGES_ON_DAY, "sum");
    ChainSpec::new(vec![count_days, sort_days, count_pages]).bind(
        1,
        Extractor::LastLineValue { file: SINGLE_OUTPUT_FILE.to_string() },
        2,
        MAX_DAY,
    )
}

/// Sets the log dialect on every job of `chain` that reads the chain source.
pub fn with_source_format(mut chain: ChainSpec, descriptor: &LogFormatDescriptor) -> ChainSpec {
    for job in chain.jobs.iter_mut().filter(|j| j.input == InputRef::Source) {
        job.format = Some(descriptor.clone());
    }
    chain
}

/// Multi-output job counting `status_<code>` and `errpage_<page>` for
/// requests with status at or above `status_floor`.
pub fn error_detection_job(status_floor: u32) -> JobSpec {
    JobSpec::new("errors", mapper_name::ERRORS, "sum")
        .multi_output(true)
        .with_param(STATUS_FLOOR, status_floor.to_string())
}

/// Counts raw lines containing `needle`.
pub fn word_search_job(needle: &str) -> Result<JobSpec, AnalysisError> {
    if needle.is_empty() || needle.contains(['\t', '\n', '\r']) {
        return Err(AnalysisError::InvalidNeedle);
    }
    Ok(JobSpec::new("grep", mapper_name::GREP, "sum").with_param(NEEDLE, needle))
}

fn counts(pairs: &[KeyValue]) -> Result<Vec<(&str, u64)>, AnalysisError> {
    pairs
        .iter()
        .map(|kv| match kv.value.trim().parse::<u64>() {
            Ok(n) => Ok((kv.key.as_str(), n)),
            Err(_) => Err(AnalysisError::NonNumericValue { key: kv.key.clone(), value: kv.value.clone() }),
        })
        .collect()
}

/// Hour with the highest count; ties go to the smallest hour key.
pub fn busy_hour(hour_file: &[KeyValue]) -> Result<(String, u64), AnalysisError> {
    let mut best: Option<(&str, u64)> = None;
    for (hour, count) in counts(hour_file)? {
        let better = match best {
            None => true,
            Some((h, c)) => count > c || (count == c && hour < h),
        };
        if better {
            best = Some((hour, count));
        }
    }
    best.map(|(h, c)| (h.to_string(), c)).ok_or_else(|| AnalysisError::EmptyInput("hour file has no entries".into()))
}

/// The `n` largest counts, descending; ties by ascending key.
pub fn top_n(file: &[KeyValue], n: usize) -> Result<Vec<(String, u64)>, AnalysisError> {
    let mut all = counts(file)?;
    all.sort_by(|(ka, ca), (kb, cb)| cb.cmp(ca).then_with(|| ka.cmp(kb)));
    Ok(all.into_iter().take(n).map(|(k, c)| (k.to_string(), c)).collect())
}

/// Per-prefix counts read back from a frequency job.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyOutputSet {
    pub files: BTreeMap<String, BTreeMap<String, u64>>,
}

impl FrequencyOutputSet {
    pub fn from_result(result: &JobResult) -> Result<Self, AnalysisError> {
        let mut files = BTreeMap::new();
        for name in result.file_names() {
            let Some(prefix) = name.strip_suffix(&format!("_{SINGLE_OUTPUT_FILE}")) else { continue };
            let pairs = result.file(name).unwrap_or_default();
            let map = counts(pairs)?.into_iter().map(|(k, c)| (k.to_string(), c)).collect();
            files.insert(prefix.to_string(), map);
        }
        Ok(FrequencyOutputSet { files })
    }

    pub fn get(&self, prefix: &str) -> Option<&BTreeMap<String, u64>> {
        self.files.get(prefix)
    }

    pub fn total(&self, prefix: &str) -> u64 {
        self.get(prefix).map_or(0, |m| m.values().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(entries: &[(&str, &str)]) -> Vec<KeyValue> {
        entries.iter().map(|(k, v)| KeyValue::new(*k, *v)).collect()
    }

    #[test]
    fn busy_hour_ties_go_to_smallest() {
        let f = file(&[("00", "5"), ("13", "9"), ("23", "9")]);
        assert_eq!(busy_hour(&f).unwrap(), ("13".to_string(), 9));
        assert_eq!(busy_hour(&file(&[("07", "1")])).unwrap(), ("07".to_string(), 1));
        assert!(matches!(busy_hour(&[]), Err(AnalysisError::EmptyInput(_))));
        assert!(busy_hour(&file(&[("01", "x")])).is_err());
    }

    #[test]
    fn top_n_orders_by_count_then_key() {
        let f = file(&[("a", "1"), ("b", "3"), ("c", "2")]);
        assert_eq!(top_n(&f, 2).unwrap(), vec![("b".into(), 3), ("c".into(), 2)]);
        assert_eq!(top_n(&f, 10).unwrap().len(), 3);
        let tied = file(&[("z", "2"), ("a", "2")]);
        assert_eq!(top_n(&tied, 1).unwrap(), vec![("a".into(), 2)]);
    }

    #[test]
    fn needle_validation() {
        assert!(word_search_job("error").is_ok());
        assert_eq!(word_search_job(""), Err(AnalysisError::InvalidNeedle));
        assert_eq!(word_search_job("a\tb"), Err(AnalysisError::InvalidNeedle));
    }

    #[test]
    fn analysis_names() {
        for a in AnalysisName::ALL {
            assert_eq!(a.as_str().parse::<AnalysisName>().unwrap(), a);
        }
        assert!("nope".parse::<AnalysisName>().is_err());
    }

    #[test]
    fn chain_shape() {
        let chain = busiest_day_pages_chain();
        chain.validate().unwrap();
        assert_eq!(chain.jobs.len(), 3);
        assert_eq!(chain.jobs[1].key_order, KeyOrder::Numeric);
        assert_eq!(chain.jobs[1].reducer, "identity");
        assert_eq!(chain.bindings[0].parameter, "max_day");
    }
}
