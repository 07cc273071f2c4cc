use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use super::cache::CachedDataset;
use super::output::write_output;
use super::registry::{MapContext, MapInput, Mapper, ReduceContext, Registry};
use super::routing::{prefixed_file, route_multi_output, SINGLE_OUTPUT_FILE, UNROUTED_PREFIX};
use super::shuffle::shuffle_sort;
use super::{counter, Counters, DataSource, FaultPlan, FaultPoint, JobError, JobResult, JobSpec, KeyValue, RunOptions};
use crate::blockstore::{Cluster, DatasetRef, Split};
use crate::logformat::{is_ignorable, LogFormatDescriptor};

/// Runs jobs and chains against a [`Registry`].
#[derive(Debug, Clone)]
pub struct Engine {
    registry: Registry,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

/// Committed output of one map task.
struct TaskOutput {
    pairs: Vec<KeyValue>,
    counters: Counters,
}

/// Tracks which fault events already fired during one job run.
struct Faults<'a> {
    plan: &'a FaultPlan,
    job: usize,
    fired: Mutex<Vec<bool>>,
}

impl<'a> Faults<'a> {
    fn new(plan: &'a FaultPlan, job: usize) -> Self {
        Faults { plan, job, fired: Mutex::new(vec![false; plan.events.len()]) }
    }

    fn fire(&self, cluster: &Cluster, task: usize, point: FaultPoint) {
        let mut fired = self.fired.lock().unwrap();
        for (i, e) in self.plan.events.iter().enumerate() {
            if !fired[i] && e.job == self.job && e.task == task && e.point == point {
                fired[i] = true;
                // unknown node ids are ignored; the plan cannot make a job fail on its own
                let _ = cluster.fail_node(e.node);
            }
        }
    }
}

impl Engine {
    pub fn new() -> Self {
        Engine { registry: Registry::builtin() }
    }

    pub fn with_registry(registry: Registry) -> Self {
        Engine { registry }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Runs one job to completion.
    ///
    /// Map tasks (one per split) run on `opts.workers` threads. A task runs
    /// on the node that served its block; if that node is dead by the time
    /// the task finishes, its output is discarded and it runs again against
    /// another replica. The shuffle starts only after every task committed,
    /// so the result does not depend on worker count or replica choice.
    pub fn run_job(
        &self,
        job: &JobSpec,
        input: &DataSource,
        cluster: &Cluster,
        opts: &RunOptions,
    ) -> Result<JobResult, JobError> {
        let mapper = self.registry.mapper(&job.mapper)?;
        let reducer = self.registry.reducer(&job.reducer)?;
        mapper.check_config(&job.config).map_err(JobError::InvalidConfig)?;
        reducer.check_config(&job.config).map_err(JobError::InvalidConfig)?;
        let format = job.format.as_ref().or_else(|| input.format());
        if mapper.needs_format() && format.is_none() {
            return Err(JobError::MissingFormat(job.mapper.clone()));
        }

        let tasks = match input {
            DataSource::Dataset(ds) => {
                let splits = cluster.splits_for_map(ds);
                let faults = Faults::new(&opts.faults, opts.job_index);
                run_pool(splits.len(), opts.workers, |i| {
                    map_split(mapper.as_ref(), job, format, cluster, ds, &splits[i], &faults)
                })?
            }
            DataSource::Cached(cache) => run_pool(cache.partition_count(), opts.workers, |i| {
                Ok(map_cached(mapper.as_ref(), job, format, cache, i))
            })?,
        };

        let mut counters = Counters::new();
        for name in [
            counter::LINES_READ,
            counter::CORRUPT_LINES_SKIPPED,
            counter::MAP_TASKS_RESCHEDULED,
            counter::PARSE_INVOCATIONS,
        ] {
            counters.add(name, 0);
        }
        counters.add(counter::MAP_TASKS, tasks.len() as u64);
        let mut pairs = Vec::with_capacity(tasks.iter().map(|t| t.pairs.len()).sum());
        for task in tasks {
            counters.merge(&task.counters);
            pairs.extend(task.pairs);
        }

        let groups = shuffle_sort(pairs, job.key_order)?;
        let mut ctx = ReduceContext::new(&job.config);
        for g in &groups {
            reducer
                .reduce(&g.key, &g.values, &mut ctx)
                .map_err(|message| JobError::Reduce { key: g.key.clone(), message })?;
        }
        counters.add(counter::OUTPUT_RECORDS, ctx.out.len() as u64);

        let outputs = if job.multi_output { route_all(ctx.out) } else { single_file(ctx.out) };
        let result = JobResult { outputs, counters };
        if let Some(dir) = &job.output_dir {
            write_output(dir, &result)?;
        }
        Ok(result)
    }
}

fn single_file(pairs: Vec<KeyValue>) -> BTreeMap<String, Vec<KeyValue>> {
    let mut out = BTreeMap::new();
    if !pairs.is_empty() {
        out.insert(SINGLE_OUTPUT_FILE.to_string(), pairs);
    }
    out
}

fn route_all(pairs: Vec<KeyValue>) -> BTreeMap<String, Vec<KeyValue>> {
    let mut out: BTreeMap<String, Vec<KeyValue>> = BTreeMap::new();
    for kv in pairs {
        let (file, pair) = match route_multi_output(&kv.key) {
            Ok((prefix, residual)) => (prefixed_file(prefix), KeyValue { key: residual.to_string(), value: kv.value }),
            Err(_) => (prefixed_file(UNROUTED_PREFIX), kv),
        };
        out.entry(file).or_default().push(pair);
    }
    out
}

/// Runs `task(0..count)` on up to `workers` threads and returns the
/// outputs in task order. On failure the error of the lowest failing task
/// index is returned.
fn run_pool<F>(count: usize, workers: usize, task: F) -> Result<Vec<TaskOutput>, JobError>
where
    F: Fn(usize) -> Result<TaskOutput, JobError> + Sync,
{
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<TaskOutput, JobError>>>> = Mutex::new((0..count).map(|_| None).collect());
    let threads = workers.max(1).min(count.max(1));
    thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= count {
                    break;
                }
                let out = task(i);
                if out.is_err() {
                    abort.store(true, Ordering::SeqCst);
                }
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    let mut done = Vec::with_capacity(count);
    for slot in slots.into_inner().unwrap() {
        match slot {
            Some(Ok(out)) => done.push(out),
            Some(Err(e)) => return Err(e),
            // skipped after an abort; the failing task's error comes later
            None => {}
        }
    }
    Ok(done)
}

fn map_split(
    mapper: &dyn Mapper,
    job: &JobSpec,
    format: Option<&LogFormatDescriptor>,
    cluster: &Cluster,
    dataset: &DatasetRef,
    split: &Split,
    faults: &Faults<'_>,
) -> Result<TaskOutput, JobError> {
    let mut rescheduled = 0u64;
    loop {
        faults.fire(cluster, split.index, FaultPoint::BeforeRead);
        let data = cluster.read_split(dataset, split)?;
        let mut ctx = MapContext::new(&job.config, format);
        for (offset, raw) in data.lines() {
            let line = String::from_utf8_lossy(raw);
            if is_ignorable(&line) {
                continue;
            }
            ctx.counters.add(counter::LINES_READ, 1);
            mapper.map(&MapInput::new(offset, &line), &mut ctx);
        }
        faults.fire(cluster, split.index, FaultPoint::MidTask);
        if !cluster.is_alive(data.host) {
            rescheduled += 1;
            continue;
        }
        let mut counters = ctx.counters;
        counters.add(counter::MAP_TASKS_RESCHEDULED, rescheduled);
        faults.fire(cluster, split.index, FaultPoint::AfterCommit);
        return Ok(TaskOutput { pairs: ctx.pairs, counters });
    }
}

fn map_cached(
    mapper: &dyn Mapper,
    job: &JobSpec,
    format: Option<&LogFormatDescriptor>,
    cache: &Arc<CachedDataset>,
    partition: usize,
) -> TaskOutput {
    let mut ctx = MapContext::new(&job.config, format);
    for cached in cache.partition(partition) {
        ctx.counters.add(counter::LINES_READ, 1);
        let input = MapInput { offset: cached.offset, line: &cached.line, cached: Some(&cached.record) };
        mapper.map(&input, &mut ctx);
    }
    TaskOutput { pairs: ctx.pairs, counters: ctx.counters }
}
