use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{counter, Counters, JobConfig, JobError, KeyValue};
use crate::logformat::{parse_line, LogFormatDescriptor, LogFormatError, LogRecord};

/// One input line handed to a mapper.
#[derive(Debug)]
pub struct MapInput<'a> {
    /// Byte offset of the line in its dataset.
    pub offset: u64,
    pub line: &'a str,
    pub(crate) cached: Option<&'a Result<LogRecord, LogFormatError>>,
}

impl<'a> MapInput<'a> {
    pub fn new(offset: u64, line: &'a str) -> Self {
        MapInput { offset, line, cached: None }
    }
}

/// Per-task emission buffer and counters.
pub struct MapContext<'a> {
    config: &'a JobConfig,
    format: Option<&'a LogFormatDescriptor>,
    pub(crate) pairs: Vec<KeyValue>,
    pub(crate) counters: Counters,
}

impl<'a> MapContext<'a> {
    pub fn new(config: &'a JobConfig, format: Option<&'a LogFormatDescriptor>) -> Self {
        MapContext { config, format, pairs: Vec::new(), counters: Counters::new() }
    }

    pub fn config(&self) -> &JobConfig {
        self.config
    }

    pub fn format(&self) -> Option<&LogFormatDescriptor> {
        self.format
    }

    pub fn emit(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.pairs.push(KeyValue::new(key, value));
    }

    pub fn count(&mut self, name: &str, delta: u64) {
        self.counters.add(name, delta);
    }

    pub fn skip_corrupt(&mut self) {
        self.counters.add(counter::CORRUPT_LINES_SKIPPED, 1);
    }

    /// The parsed record for `input`, or `None` after counting the line as
    /// corrupt. Cached inputs are returned without parsing again.
    pub fn record<'l>(&mut self, input: &MapInput<'l>) -> Option<Cow<'l, LogRecord>> {
        let parsed = match input.cached {
            Some(Ok(record)) => return Some(Cow::Borrowed(record)),
            Some(Err(_)) => None,
            None => {
                let format = self.format?;
                self.counters.add(counter::PARSE_INVOCATIONS, 1);
                parse_line(input.line, format).ok().map(|r| Cow::Owned(r.with_line_number(input.offset)))
            }
        };
        if parsed.is_none() {
            self.skip_corrupt();
        }
        parsed
    }

    pub fn pairs(&self) -> &[KeyValue] {
        &self.pairs
    }
}

pub trait Mapper: Send + Sync {
    fn map(&self, input: &MapInput<'_>, ctx: &mut MapContext<'_>);

    /// Whether the mapper calls [`MapContext::record`].
    fn needs_format(&self) -> bool {
        false
    }

    /// Rejects a configuration before any task starts.
    fn check_config(&self, _config: &JobConfig) -> Result<(), String> {
        Ok(())
    }
}

pub struct ReduceContext<'a> {
    config: &'a JobConfig,
    pub(crate) out: Vec<KeyValue>,
}

impl<'a> ReduceContext<'a> {
    pub fn new(config: &'a JobConfig) -> Self {
        ReduceContext { config, out: Vec::new() }
    }

    pub fn config(&self) -> &JobConfig {
        self.config
    }

    pub fn emit(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.out.push(KeyValue::new(key, value));
    }

    pub fn output(&self) -> &[KeyValue] {
        &self.out
    }
}

pub trait Reducer: Send + Sync {
    fn reduce(&self, key: &str, values: &[String], ctx: &mut ReduceContext<'_>) -> Result<(), String>;

    fn check_config(&self, _config: &JobConfig) -> Result<(), String> {
        Ok(())
    }
}

/// Emits `(token, 1)` for every whitespace-separated token.
pub struct WordCountMapper;

impl Mapper for WordCountMapper {
    fn map(&self, input: &MapInput<'_>, ctx: &mut MapContext<'_>) {
        for word in input.line.split_whitespace() {
            ctx.emit(word, "1");
        }
    }
}

/// Sums integer values.
pub struct SumReducer;

impl Reducer for SumReducer {
    fn reduce(&self, key: &str, values: &[String], ctx: &mut ReduceContext<'_>) -> Result<(), String> {
        let mut total: i64 = 0;
        for v in values {
            let n: i64 = v.trim().parse().map_err(|_| format!("value {v:?} is not an integer"))?;
            total = total.checked_add(n).ok_or("sum overflows")?;
        }
        ctx.emit(key, total.to_string());
        Ok(())
    }
}

/// Passes every pair through unchanged.
pub struct IdentityReducer;

impl Reducer for IdentityReducer {
    fn reduce(&self, key: &str, values: &[String], ctx: &mut ReduceContext<'_>) -> Result<(), String> {
        for v in values {
            ctx.emit(key, v.as_str());
        }
        Ok(())
    }
}

/// Name-keyed table of mappers and reducers.
#[derive(Clone, Default)]
pub struct Registry {
    mappers: BTreeMap<String, Arc<dyn Mapper>>,
    reducers: BTreeMap<String, Arc<dyn Reducer>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("mappers", &self.mappers.keys().collect::<Vec<_>>())
            .field("reducers", &self.reducers.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `wordcount`, `sum`, `identity` plus every analysis mapper.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_mapper("wordcount", WordCountMapper);
        r.register_reducer("sum", SumReducer);
        r.register_reducer("identity", IdentityReducer);
        crate::analyses::register(&mut r);
        r
    }

    pub fn register_mapper(&mut self, name: &str, mapper: impl Mapper + 'static) {
        self.mappers.insert(name.to_string(), Arc::new(mapper));
    }

    pub fn register_reducer(&mut self, name: &str, reducer: impl Reducer + 'static) {
        self.reducers.insert(name.to_string(), Arc::new(reducer));
    }

    pub fn mapper(&self, name: &str) -> Result<Arc<dyn Mapper>, JobError> {
        self.mappers.get(name).cloned().ok_or_else(|| JobError::UnknownMapper(name.to_string()))
    }

    pub fn reducer(&self, name: &str) -> Result<Arc<dyn Reducer>, JobError> {
        self.reducers.get(name).cloned().ok_or_else(|| JobError::UnknownReducer(name.to_string()))
    }

    pub fn mapper_names(&self) -> impl Iterator<Item = &str> {
        self.mappers.keys().map(String::as_str)
    }

    pub fn reducer_names(&self) -> impl Iterator<Item = &str> {
        self.reducers.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_rejects_text() {
        let config = JobConfig::new();
        let mut ctx = ReduceContext::new(&config);
        assert!(SumReducer.reduce("k", &["1".into(), "x".into()], &mut ctx).is_err());
        SumReducer.reduce("k", &["1".into(), "41".into()], &mut ctx).unwrap();
        assert_eq!(ctx.output(), &[KeyValue::new("k", "42")]);
    }

    #[test]
    fn record_counts_parses_and_corruption() {
        let config = JobConfig::new();
        let format = LogFormatDescriptor::apache_common();
        let mut ctx = MapContext::new(&config, Some(&format));
        let good = "h - - [10/Oct/2000:13:55:36 -0700] \"GET / HTTP/1.0\" 200 1";
        assert!(ctx.record(&MapInput::new(0, good)).is_some());
        assert!(ctx.record(&MapInput::new(0, "bad")).is_none());
        assert_eq!(ctx.counters.get(counter::PARSE_INVOCATIONS), 2);
        assert_eq!(ctx.counters.get(counter::CORRUPT_LINES_SKIPPED), 1);
    }

    #[test]
    fn unknown_names() {
        let r = Registry::builtin();
        assert!(matches!(r.mapper("nope"), Err(JobError::UnknownMapper(_))));
        assert!(matches!(r.reducer("nope"), Err(JobError::UnknownReducer(_))));
        assert!(r.mapper("wordcount").is_ok());
    }
}
