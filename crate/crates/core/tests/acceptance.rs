//! Acceptance checks, one line of output per criterion.
//!
//! Runs without the libtest harness so every verdict is printed even when
//! all of them pass. Exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrloglab::analyses::{busiest_day_pages_chain, field_frequency_job, with_source_format, word_search_job};
use mrloglab::bench::{
    generate_corpus, generate_log, normalize_time, run_bench, BenchConfig, GeneratorConfig, LogEvent,
};
use mrloglab::blockstore::{Cluster, ClusterSpec, DatasetRef};
use mrloglab::engine::{
    cache_dataset, counter, shuffle_sort, ChainError, DataSource, Engine, FaultPlan, FaultPoint, JobError, JobResult,
    JobSpec, KeyOrder, KeyValue, RunOptions, SUCCESS_MARKER,
};
use mrloglab::logformat::{field, parse_line, FormatId, LogFormatDescriptor};

// Tolerances and sizes pinned for each criterion.
const FREQUENCY_CORPORA: usize = 100;
const FREQUENCY_MAX_LINES: usize = 10_000;
const FREQUENCY_BUDGET: Duration = Duration::from_secs(60);
const CHAIN_CORPORA: usize = 100;
const CHAIN_MAX_LINES: usize = 500;
const CHAIN_BUDGET: Duration = Duration::from_secs(30);
const DETERMINISM_CORPUS_MB: f64 = 5.0;
const DETERMINISM_WORKERS: [usize; 4] = [1, 2, 4, 8];
const DETERMINISM_BLOCK_SIZES: [usize; 3] = [4 << 10, 64 << 10, 1 << 20];
const SHUFFLE_PAIRS: usize = 10_000;
const SHUFFLE_CASES: u32 = 16;
const NORMALIZE_REL_TOL: f64 = 1e-9;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn opts(workers: usize) -> RunOptions {
    RunOptions::with_workers(workers)
}

fn ingest(text: &str, spec: ClusterSpec) -> (Cluster, DatasetRef) {
    let cluster = Cluster::in_memory(spec);
    let ds = cluster.ingest_bytes("corpus", text.as_bytes()).expect("ingest");
    (cluster, ds)
}

fn spec(block_size: usize) -> ClusterSpec {
    ClusterSpec::new(4, 2, block_size).expect("valid cluster spec")
}

/// Every output file's bytes, by name.
fn file_bytes(result: &JobResult) -> BTreeMap<String, Vec<u8>> {
    result.file_names().map(|n| (n.to_string(), result.file_bytes(n).unwrap())).collect()
}

/// Keys a request contributes to each frequency prefix, worked out from the
/// generated event and the dialect's documented columns.
fn expected_keys(event: &LogEvent, d: &LogFormatDescriptor) -> [(&'static str, String); 6] {
    let day =
        format!("{:04}-{:02}-{:02}", chrono_part(event, "%Y"), chrono_part(event, "%m"), chrono_part(event, "%d"));
    let hour = format!("{:02}", chrono_part(event, "%H"));
    let dash = "-".to_string();
    let (ip, page, method, browser) = match d.format_id() {
        FormatId::IisW3c => (
            event.client_ip.clone(),
            event.page.clone(),
            event.method.clone(),
            event.user_agent.split(' ').collect::<Vec<_>>().join("+"),
        ),
        FormatId::ApacheAccess => {
            let ua = if d.variant() == "combined" { event.user_agent.clone() } else { dash.clone() };
            (event.client_ip.clone(), event.page.clone(), event.method.clone(), ua)
        }
        FormatId::Squid => (
            event.client_ip.clone(),
            format!("http://www.example.edu.tr{}", event.page),
            event.method.clone(),
            dash.clone(),
        ),
        FormatId::ApacheError => {
            let ip = if d.variant() == "client" { event.client_ip.clone() } else { dash.clone() };
            (ip, dash.clone(), dash.clone(), dash.clone())
        }
    };
    [("day", day), ("hour", hour), ("ip", ip), ("page", page), ("method", method), ("browser", browser)]
}

fn chrono_part(event: &LogEvent, spec: &str) -> u32 {
    event.timestamp.format(spec).to_string().parse().unwrap()
}

fn criterion_1() -> Check {
    let started = Instant::now();
    let formats = LogFormatDescriptor::builtins();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    let mut total_lines = 0;
    let engine = Engine::new();
    for i in 0..FREQUENCY_CORPORA {
        let d = formats[rng.gen_range(0..formats.len())].clone();
        let mut cfg = GeneratorConfig::new(rng.gen(), d.clone());
        cfg.corrupt_rate = rng.gen_range(0.0..0.05);
        cfg.days = rng.gen_range(1..10);
        let lines = rng.gen_range(0..=FREQUENCY_MAX_LINES);
        let corpus = generate_corpus(cfg, lines);
        total_lines += lines;

        let mut oracle: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        let mut records = 0u64;
        for event in corpus.events() {
            records += 1;
            for (prefix, key) in expected_keys(event, &d) {
                *oracle.entry(format!("{prefix}_part-00000")).or_default().entry(key).or_default() += 1;
            }
        }

        let block = [1 << 10, 16 << 10, 256 << 10][rng.gen_range(0..3)];
        let (cluster, ds) = ingest(&corpus.text, spec(block));
        let result = engine
            .run_job(&field_frequency_job(&d), &ds.into(), &cluster, &opts(rng.gen_range(1..=4)))
            .map_err(|e| format!("corpus {i}: {e}"))?;
        let got: BTreeMap<String, BTreeMap<String, u64>> = result
            .outputs
            .iter()
            .map(|(f, pairs)| (f.clone(), pairs.iter().map(|kv| (kv.key.clone(), kv.value.parse().unwrap())).collect()))
            .collect();
        ensure(got == oracle, || format!("corpus {i} ({}): counts differ from tally", d.qualified_name()))?;
        ensure(result.counter(counter::CORRUPT_LINES_SKIPPED) == corpus.manifest.corrupt, || {
            format!(
                "corpus {i}: corrupt counter {} != {}",
                result.counter(counter::CORRUPT_LINES_SKIPPED),
                corpus.manifest.corrupt
            )
        })?;
        ensure(corpus.manifest.records == records, || format!("corpus {i}: manifest record count"))?;
        for (prefix, counts) in &corpus.manifest.counts {
            ensure(oracle.get(&format!("{prefix}_part-00000")) == Some(counts), || {
                format!("corpus {i}: manifest {prefix} differs from tally")
            })?;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < FREQUENCY_BUDGET, || format!("took {elapsed:?}, budget {FREQUENCY_BUDGET:?}"))?;
    Ok(format!("{FREQUENCY_CORPORA} corpora, {total_lines} lines, exact, {:.1}s", elapsed.as_secs_f64()))
}

/// `SELECT page, COUNT(*) FROM log WHERE day = (busiest day) GROUP BY page`,
/// busiest day being the greatest day text among those with the top count.
fn sql_busiest_day_pages(events: &[(String, String)]) -> Option<(String, BTreeMap<String, u64>)> {
    let mut per_day: BTreeMap<&str, u64> = BTreeMap::new();
    for (day, _) in events {
        *per_day.entry(day).or_default() += 1;
    }
    let top = *per_day.values().max()?;
    let day = per_day.iter().filter(|(_, c)| **c == top).map(|(d, _)| *d).max()?.to_string();
    let mut pages = BTreeMap::new();
    for (d, page) in events {
        if *d == day {
            *pages.entry(page.clone()).or_default() += 1;
        }
    }
    Some((day, pages))
}

fn criterion_2() -> Check {
    let started = Instant::now();
    let formats = LogFormatDescriptor::builtins();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4A1);
    let engine = Engine::new();
    let mut ties = 0;
    for i in 0..CHAIN_CORPORA {
        let d = formats[rng.gen_range(0..formats.len())].clone();
        let mut cfg = GeneratorConfig::new(rng.gen(), d.clone());
        cfg.days = rng.gen_range(1..4);
        cfg.corrupt_rate = rng.gen_range(0.0..0.05);
        let corpus = generate_corpus(cfg, rng.gen_range(0..=CHAIN_MAX_LINES));
        let rows: Vec<(String, String)> = corpus
            .events()
            .map(|e| {
                let [(_, day), _, _, (_, page), ..] = expected_keys(e, &d);
                (day, page)
            })
            .collect();
        let expected = sql_busiest_day_pages(&rows);
        if let Some((day, _)) = &expected {
            let mut per_day: BTreeMap<&str, u64> = BTreeMap::new();
            rows.iter().for_each(|(d, _)| *per_day.entry(d).or_default() += 1);
            let top = per_day[day.as_str()];
            if per_day.values().filter(|c| **c == top).count() > 1 {
                ties += 1;
            }
        }

        let (cluster, ds) = ingest(&corpus.text, spec(1 << 10));
        let chain = with_source_format(busiest_day_pages_chain(), &d);
        let outcome = engine.run_chain(&chain, &ds.into(), &cluster, &opts(2));
        match (expected, outcome) {
            (None, Err(ChainError::BindingFailed { .. })) => {}
            (Some((day, pages)), Ok(result)) => {
                ensure(result.bound_value("max_day") == Some(day.as_str()), || {
                    format!("corpus {i}: max_day {:?}, expected {day}", result.bound_value("max_day"))
                })?;
                let got: BTreeMap<String, u64> = result
                    .final_result()
                    .file("part-00000")
                    .unwrap_or_default()
                    .iter()
                    .map(|kv| (kv.key.clone(), kv.value.parse().unwrap()))
                    .collect();
                ensure(got == pages, || format!("corpus {i}: pages differ"))?;
            }
            (expected, got) => return Err(format!("corpus {i}: expected {expected:?}, got {got:?}")),
        }
    }
    let elapsed = started.elapsed();
    ensure(ties > 0, || "no corpus exercised the tie rule".into())?;
    ensure(elapsed < CHAIN_BUDGET, || format!("took {elapsed:?}, budget {CHAIN_BUDGET:?}"))?;
    Ok(format!("{CHAIN_CORPORA} corpora, {ties} with tied days, {:.1}s", elapsed.as_secs_f64()))
}

const TABLE_FIXTURE: &str = "\
2013-04-15 08:00:00 W3SVC1 10.1.1.5 GET /p1 - 80 - 10.0.0.1 UA - host
2013-04-15 09:00:00 W3SVC1 10.1.1.5 GET /p1 - 80 - 10.0.0.2 UA - host
2013-04-15 10:00:00 W3SVC1 10.1.1.5 GET /p2 - 80 - 10.0.0.3 UA - host
2013-04-16 11:00:00 W3SVC1 10.1.1.5 GET /p3 - 80 - 10.0.0.4 UA - host
2013-04-16 12:00:00 W3SVC1 10.1.1.5 GET /p4 - 80 - 10.0.0.5 UA - host
";

fn pairs(entries: &[(&str, &str)]) -> Vec<KeyValue> {
    entries.iter().map(|(k, v)| KeyValue::new(*k, *v)).collect()
}

fn criterion_3() -> Check {
    let (cluster, ds) = ingest(TABLE_FIXTURE, ClusterSpec::default());
    let chain = with_source_format(busiest_day_pages_chain(), &LogFormatDescriptor::iis_sample());
    let result = Engine::new().run_chain(&chain, &ds.into(), &cluster, &opts(2)).map_err(|e| e.to_string())?;
    let out1 = result.results[0].file("part-00000").unwrap_or_default();
    let out2 = result.results[1].file("part-00000").unwrap_or_default();
    let out3 = result.results[2].file("part-00000").unwrap_or_default();
    ensure(out1 == pairs(&[("2013-04-15", "3"), ("2013-04-16", "2")]), || format!("output1 {out1:?}"))?;
    ensure(out2.last() == Some(&KeyValue::new("3", "2013-04-15")), || format!("output2 {out2:?}"))?;
    ensure(result.bound_value("max_day") == Some("2013-04-15"), || format!("bound {:?}", result.bound))?;
    ensure(out3 == pairs(&[("/p1", "2"), ("/p2", "1")]), || format!("output3 {out3:?}"))?;
    Ok("output1 {A:3,B:2}, max_day=A, output3 {p1:2,p2:1}".into())
}

fn criterion_4() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("five.log");
    let d = LogFormatDescriptor::iis_full();
    generate_log(&path, DETERMINISM_CORPUS_MB, 42, &d).map_err(|e| e.to_string())?;
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    let engine = Engine::new();
    let jobs = [JobSpec::new("wordcount", "wordcount", "sum"), field_frequency_job(&d)];
    let mut runs = 0;
    for job in &jobs {
        let mut reference: Option<BTreeMap<String, Vec<u8>>> = None;
        for block in DETERMINISM_BLOCK_SIZES {
            let cluster = Cluster::in_memory(spec(block));
            let ds = cluster.ingest_bytes("five", &bytes).map_err(|e| e.to_string())?;
            for workers in DETERMINISM_WORKERS {
                let result =
                    engine.run_job(job, &ds.clone().into(), &cluster, &opts(workers)).map_err(|e| e.to_string())?;
                let files = file_bytes(&result);
                runs += 1;
                match &reference {
                    None => reference = Some(files),
                    Some(r) => {
                        ensure(*r == files, || format!("{}: block {block} workers {workers} differs", job.name))?
                    }
                }
            }
        }
    }
    Ok(format!("{runs} runs over {} bytes byte-identical", bytes.len()))
}

fn numeric_then_text(a: &str, b: &str) -> std::cmp::Ordering {
    let x: i128 = a.parse().unwrap();
    let y: i128 = b.parse().unwrap();
    x.cmp(&y).then_with(|| a.cmp(b))
}

fn sorted_multiset(kvs: impl IntoIterator<Item = KeyValue>) -> Vec<KeyValue> {
    let mut v: Vec<KeyValue> = kvs.into_iter().collect();
    v.sort();
    v
}

fn check_shuffle(input: Vec<KeyValue>, order: KeyOrder) -> Result<(), TestCaseError> {
    let groups = shuffle_sort(input.clone(), order).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for w in groups.windows(2) {
        let ascending = match order {
            KeyOrder::Lexicographic => w[0].key < w[1].key,
            KeyOrder::Numeric => numeric_then_text(&w[0].key, &w[1].key).is_lt(),
        };
        prop_assert!(ascending, "{:?} then {:?}", w[0].key, w[1].key);
    }
    let flattened = groups.into_iter().flat_map(|g| g.values.into_iter().map(move |v| KeyValue::new(g.key.clone(), v)));
    prop_assert_eq!(sorted_multiset(flattened), sorted_multiset(input.clone()));

    // the same pairs through a full job with an identity reduce
    let text: String = input.iter().map(|kv| format!("{}\t{}\n", kv.value, kv.key)).collect();
    let (cluster, ds) = ingest(&text, spec(4 << 10));
    let job = JobSpec::new("shuffle", "swap", "identity").key_order(order);
    let result =
        Engine::new().run_job(&job, &ds.into(), &cluster, &opts(4)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let out = result.file("part-00000").unwrap_or_default().to_vec();
    for w in out.windows(2) {
        let ordered = match order {
            KeyOrder::Lexicographic => w[0].key <= w[1].key,
            KeyOrder::Numeric => numeric_then_text(&w[0].key, &w[1].key).is_le(),
        };
        prop_assert!(ordered);
    }
    prop_assert_eq!(sorted_multiset(out), sorted_multiset(input));
    Ok(())
}

fn criterion_5() -> Check {
    let fixed =
        shuffle_sort(pairs(&[("10", "a"), ("9", "b"), ("2", "c")]), KeyOrder::Numeric).map_err(|e| e.to_string())?;
    let keys: Vec<&str> = fixed.iter().map(|g| g.key.as_str()).collect();
    ensure(keys == ["2", "9", "10"], || format!("numeric order {keys:?}"))?;

    let value = "[a-z0-9]{1,4}";
    let lex = proptest::collection::vec(("[a-z0-9 _.-]{0,5}", value), SHUFFLE_PAIRS);
    let num = proptest::collection::vec(
        (
            (-1000i64..1000)
                .prop_map(|n| n.to_string())
                .boxed()
                .prop_union((0u32..50).prop_map(|n| format!("{n:03}")).boxed()),
            value,
        ),
        SHUFFLE_PAIRS,
    );
    let mut runner =
        TestRunner::new(ProptestConfig { cases: SHUFFLE_CASES, failure_persistence: None, ..Default::default() });
    runner
        .run(&lex, |v| {
            check_shuffle(v.into_iter().map(|(k, v)| KeyValue::new(k, v)).collect(), KeyOrder::Lexicographic)
        })
        .map_err(|e| format!("lexicographic: {e}"))?;
    runner
        .run(&num, |v| check_shuffle(v.into_iter().map(|(k, v)| KeyValue::new(k, v)).collect(), KeyOrder::Numeric))
        .map_err(|e| format!("numeric: {e}"))?;
    Ok(format!("{SHUFFLE_CASES} cases x {SHUFFLE_PAIRS} pairs per comparator"))
}

fn criterion_6() -> Check {
    let d = LogFormatDescriptor::apache_combined();
    let corpus = generate_corpus(GeneratorConfig::new(6, d.clone()), 3000);
    let engine = Engine::new();
    let job = field_frequency_job(&d);
    let (cluster, ds) = ingest(&corpus.text, spec(8 << 10));
    let tasks = cluster.splits_for_map(&ds).len();
    let baseline = file_bytes(&engine.run_job(&job, &ds.into(), &cluster, &opts(4)).map_err(|e| e.to_string())?);

    let mut runs = 0;
    let mut rescheduled = 0;
    for node in 0..4 {
        for point in [FaultPoint::BeforeRead, FaultPoint::MidTask, FaultPoint::AfterCommit] {
            for task in [0, tasks / 2, tasks - 1] {
                let (cluster, ds) = ingest(&corpus.text, spec(8 << 10));
                let plan = FaultPlan::none().fail(0, task, point, node);
                let result = engine
                    .run_job(&job, &ds.into(), &cluster, &opts(4).faults(plan))
                    .map_err(|e| format!("node {node} {point:?} task {task}: {e}"))?;
                ensure(file_bytes(&result) == baseline, || {
                    format!("node {node} {point:?} task {task}: output differs")
                })?;
                rescheduled += result.counter(counter::MAP_TASKS_RESCHEDULED);
                runs += 1;
            }
        }
    }
    ensure(rescheduled > 0, || "no failure hit a running task".into())?;

    // chain with a node lost during the first job
    let chain = with_source_format(busiest_day_pages_chain(), &d);
    let (cluster, ds) = ingest(&corpus.text, spec(8 << 10));
    let clean = engine.run_chain(&chain, &ds.into(), &cluster, &opts(4)).map_err(|e| e.to_string())?;
    for node in 0..4 {
        let (cluster, ds) = ingest(&corpus.text, spec(8 << 10));
        let plan = FaultPlan::none().fail(0, 1, FaultPoint::MidTask, node);
        let faulty =
            engine.run_chain(&chain, &ds.into(), &cluster, &opts(4).faults(plan)).map_err(|e| e.to_string())?;
        ensure(file_bytes(faulty.final_result()) == file_bytes(clean.final_result()), || {
            format!("chain, node {node}")
        })?;
    }

    // replication 1: losing a block's only node must fail the job
    let single = ClusterSpec::new(4, 1, 8 << 10).map_err(|e| e.to_string())?;
    for point in [FaultPoint::BeforeRead, FaultPoint::MidTask] {
        let (cluster, ds) = ingest(&corpus.text, single);
        let victim_task = tasks / 2;
        let node = ds.blocks[victim_task].replicas[0];
        let plan = FaultPlan::none().fail(0, victim_task, point, node);
        match engine.run_job(&job, &ds.into(), &cluster, &opts(1).faults(plan)) {
            Err(e @ JobError::BlockUnavailable(_)) => {
                ensure(e.to_string().starts_with("JobFailed(BlockUnavailable)"), || e.to_string())?
            }
            other => return Err(format!("replication 1, {point:?}: expected BlockUnavailable, got {other:?}")),
        }
    }
    Ok(format!("{runs} single-node failures identical ({rescheduled} reschedules); replication 1 fails loudly"))
}

const SAMPLE_LINE: &str = "2013-04-15 00:00:07 W3SVC1 10.1.1.5 GET /ilahiyat/Tr/BilimselFaaliyetler/FakulteDergisi.htm - 80 - 66.249.78.66 Mozilla/5.0+(compatible;+Googlebot/2.1;+http://www.google.com/bot.html) - www.firat.edu.tr";

fn criterion_7() -> Check {
    let r = parse_line(SAMPLE_LINE, &LogFormatDescriptor::iis_sample()).map_err(|e| e.to_string())?;
    let expect = [
        (field::METHOD, "GET"),
        (field::DATE, "2013-04-15"),
        (field::URI_STEM, "/ilahiyat/Tr/BilimselFaaliyetler/FakulteDergisi.htm"),
        (field::CLIENT_IP, "66.249.78.66"),
    ];
    for (name, value) in expect {
        ensure(r.get(name) == Some(value), || format!("{name} = {:?}", r.get(name)))?;
    }
    Ok("Method, Date, URI Stem and Client IP match the golden values".into())
}

fn criterion_8() -> Check {
    let n = normalize_time(50.0, 200.0).map_err(|e| e.to_string())?;
    ensure(n == 25.0, || format!("normalize_time(50, 200) = {n}"))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rows = 0;
    for cache in [false, true] {
        let mut cfg = BenchConfig::new(vec![0.05, 0.1, 0.2], mrloglab::analyses::AnalysisName::Frequency, dir.path());
        cfg.cache = cache;
        cfg.repetitions = 3;
        cfg.workers = 2;
        let mut csv_bytes = Vec::new();
        run_bench(&cfg, &mut csv_bytes).map_err(|e| e.to_string())?;
        let mut reader = csv::Reader::from_reader(csv_bytes.as_slice());
        let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        ensure(
            header == ["job", "size_mb", "iteration", "running_time_s", "normalized_s_per_100mb", "workers", "cache"],
            || format!("header {header:?}"),
        )?;
        for rec in reader.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let size: f64 = rec[1].parse().map_err(|_| "size_mb".to_string())?;
            let running: f64 = rec[3].parse().map_err(|_| "running_time_s".to_string())?;
            let normalized: f64 = rec[4].parse().map_err(|_| "normalized".to_string())?;
            let expected = running * 100.0 / size;
            let rel = if expected == 0.0 { normalized.abs() } else { ((normalized - expected) / expected).abs() };
            ensure(rel <= NORMALIZE_REL_TOL, || format!("row {rec:?}: relative error {rel}"))?;
            rows += 1;
        }
    }
    ensure(rows == 9, || format!("{rows} rows, expected 3 uncached + 6 cached"))?;
    Ok(format!("25.0 exact; {rows} CSV rows within {NORMALIZE_REL_TOL:e}"))
}

fn criterion_9() -> Check {
    let d = LogFormatDescriptor::apache_error();
    let corpus = generate_corpus(GeneratorConfig::new(9, d.clone()), 4000);
    let (cluster, ds) = ingest(&corpus.text, spec(16 << 10));
    let engine = Engine::new();
    let job = word_search_job("error").map_err(|e| e.to_string())?;
    let plain = engine.run_job(&job, &ds.clone().into(), &cluster, &opts(4)).map_err(|e| e.to_string())?;
    let cache = Arc::new(cache_dataset(&cluster, &ds, &d).map_err(|e| e.to_string())?);
    let built = cache.parse_count();
    let source = DataSource::Cached(Arc::clone(&cache));
    let first = engine.run_job(&job, &source, &cluster, &opts(4)).map_err(|e| e.to_string())?;
    let second = engine.run_job(&job, &source, &cluster, &opts(4)).map_err(|e| e.to_string())?;
    let after = cache.parse_count();
    ensure(after == built, || format!("cache parse count moved {built} -> {after}"))?;
    ensure(second.counter(counter::PARSE_INVOCATIONS) == 0, || "second run parsed".into())?;
    ensure(file_bytes(&first) == file_bytes(&second), || "iterations differ".into())?;
    ensure(file_bytes(&first) == file_bytes(&plain), || "cached output differs from uncached".into())?;
    let matches = corpus.text.lines().filter(|l| l.contains("error")).count();
    ensure(first.file_text("part-00000") == Some(format!("error\t{matches}\n")), || {
        format!("count {:?} vs scan {matches}", first.file_text("part-00000"))
    })?;
    Ok(format!("second iteration: +0 parses, {matches} matching lines"))
}

fn criterion_10() -> Check {
    let d = LogFormatDescriptor::iis_full();
    let corpus = generate_corpus(GeneratorConfig::new(10, d.clone()), 2000);
    let (cluster, ds) = ingest(&corpus.text, spec(8 << 10));
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let engine = Engine::new();
    let result = engine
        .run_job(&field_frequency_job(&d).output_to(dir.path()), &ds.clone().into(), &cluster, &opts(4))
        .map_err(|e| e.to_string())?;
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let expected = [
        SUCCESS_MARKER,
        "browser_part-00000",
        "day_part-00000",
        "hour_part-00000",
        "ip_part-00000",
        "method_part-00000",
        "page_part-00000",
    ];
    ensure(names == expected, || format!("files {names:?}"))?;

    // same job without routing: every pair must land in exactly one file
    let unrouted = engine
        .run_job(&field_frequency_job(&d).multi_output(false), &ds.into(), &cluster, &opts(4))
        .map_err(|e| e.to_string())?;
    let all = unrouted.file("part-00000").unwrap_or_default().to_vec();
    let mut from_files = Vec::new();
    for name in result.file_names() {
        let prefix = name.trim_end_matches("_part-00000");
        let on_disk = std::fs::read_to_string(dir.path().join(name)).map_err(|e| e.to_string())?;
        for line in on_disk.lines() {
            let (k, v) = line.split_once('\t').ok_or("line without tab")?;
            from_files.push(KeyValue::new(format!("{prefix}_{k}"), v));
        }
    }
    ensure(sorted_multiset(from_files) == sorted_multiset(all.clone()), || "routed pairs are not a partition".into())?;
    Ok(format!("six files + {SUCCESS_MARKER}; {} pairs partitioned", all.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 10] = [
        ("frequency equals single-pass tally", criterion_1),
        ("chain equals brute-force query", criterion_2),
        ("chained-jobs fixture", criterion_3),
        ("determinism across workers and block sizes", criterion_4),
        ("shuffle sortedness", criterion_5),
        ("fault tolerance", criterion_6),
        ("parser golden line", criterion_7),
        ("normalization formula", criterion_8),
        ("cached iteration parses nothing", criterion_9),
        ("multi-output file contract", criterion_10),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
