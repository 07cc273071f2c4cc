use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::logformat::{field, FormatId, LogFormatDescriptor};

const PAGES: &[&str] = &[
    "/index.htm",
    "/ilahiyat/Tr/BilimselFaaliyetler/FakulteDergisi.htm",
    "/ilahiyat/Tr/index.htm",
    "/muhendislik/duyurular.aspx",
    "/img/logo.png",
    "/css/site.css",
    "/js/menu.js",
    "/ogrenci/sinav-takvimi.htm",
    "/kutuphane/katalog.aspx",
    "/personel/rehber.aspx",
    "/haberler/2013/nisan.htm",
    "/favicon.ico",
];

const METHODS: &[&str] = &["GET", "GET", "GET", "GET", "POST", "HEAD"];

const USER_AGENTS: &[&str] = &[
    "Mozilla/5.0 (compatible; Googlebot/2.1; +http://www.google.com/bot.html)",
    "Mozilla/5.0 (Windows NT 6.1; WOW64; rv:20.0) Gecko/20100101 Firefox/20.0",
    "Mozilla/5.0 (Windows NT 6.1) AppleWebKit/537.31 (KHTML, like Gecko) Chrome/26.0.1410.64 Safari/537.31",
    "Mozilla/4.0 (compatible; MSIE 8.0; Windows NT 5.1; Trident/4.0)",
    "Mozilla/5.0 (iPhone; CPU iPhone OS 6_1_3 like Mac OS X) AppleWebKit/536.26 (KHTML, like Gecko) Mobile/10B329",
    "Opera/9.80 (Windows NT 6.1) Presto/2.12.388 Version/12.15",
];

const OK_STATUSES: &[u16] = &[200, 200, 200, 200, 206, 301, 304];
const ERROR_STATUSES: &[u16] = &[400, 401, 403, 404, 404, 404, 500, 503];

const SEVERITIES: &[&str] = &["notice", "warn", "info", "debug"];
const ERROR_SEVERITIES: &[&str] = &["error", "error", "crit", "alert", "emerg"];

const CORRUPT_LINES: &[&str] = &["%%corrupt%%", "truncated GET", "?? ?? ??", "<binary>"];

/// Semantic content of one generated request, before rendering into a
/// concrete log dialect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEvent {
    pub timestamp: NaiveDateTime,
    pub client_ip: String,
    pub method: String,
    pub page: String,
    pub query: Option<String>,
    pub status: u16,
    pub user_agent: String,
    pub bytes: u32,
    /// Error-log severity; only meaningful for Apache error logs.
    pub severity: String,
}

impl LogEvent {
    pub fn day(&self) -> String {
        self.timestamp.format("%Y-%m-%d").to_string()
    }

    pub fn hour(&self) -> String {
        self.timestamp.format("%H").to_string()
    }

    /// What the frequency analysis keys each prefix on for this event once
    /// rendered in `descriptor`'s dialect. Columns the dialect lacks are `-`.
    pub fn observed(&self, descriptor: &LogFormatDescriptor) -> ObservedValues {
        let missing = || "-".to_string();
        let id = descriptor.format_id();
        let has_client = id != FormatId::ApacheError || descriptor.has_field(field::CLIENT);
        let page = match id {
            FormatId::IisW3c | FormatId::ApacheAccess => self.page.clone(),
            FormatId::Squid => squid_url(&self.page),
            FormatId::ApacheError => missing(),
        };
        let method = match id {
            FormatId::ApacheError => missing(),
            _ => self.method.clone(),
        };
        let browser = match id {
            FormatId::IisW3c => self.user_agent.replace(' ', "+"),
            FormatId::ApacheAccess if descriptor.has_field(field::USER_AGENT) => self.user_agent.clone(),
            _ => missing(),
        };
        let status = match id {
            FormatId::ApacheError => self.severity.clone(),
            FormatId::IisW3c if !descriptor.has_field(field::HTTP_STATUS) => missing(),
            _ => self.status.to_string(),
        };
        ObservedValues {
            day: self.day(),
            hour: self.hour(),
            ip: if has_client { self.client_ip.clone() } else { missing() },
            page,
            method,
            browser,
            status,
        }
    }
}

/// Keys an event contributes to each output prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedValues {
    pub day: String,
    pub hour: String,
    pub ip: String,
    pub page: String,
    pub method: String,
    pub browser: String,
    /// HTTP status code, or the severity for Apache error logs.
    pub status: String,
}

fn squid_url(page: &str) -> String {
    format!("http://www.example.edu.tr{page}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub format: LogFormatDescriptor,
    pub start: NaiveDate,
    /// Number of distinct calendar days events are spread over.
    pub days: u32,
    /// Probability of a line being unparseable garbage.
    pub corrupt_rate: f64,
    /// Probability of an event carrying an error status (4xx/5xx, or an
    /// error-level severity).
    pub error_rate: f64,
    /// Emit `#` directive lines at the start, as IIS does.
    pub header: bool,
}

impl GeneratorConfig {
    pub fn new(seed: u64, format: LogFormatDescriptor) -> Self {
        GeneratorConfig {
            seed,
            format,
            start: NaiveDate::from_ymd_opt(2013, 4, 15).expect("valid date"),
            days: 7,
            corrupt_rate: 0.0,
            error_rate: 0.03,
            header: true,
        }
    }
}

/// One generated line and, unless it is corrupt or a comment, its event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedLine {
    pub text: String,
    pub event: Option<LogEvent>,
}

/// Exact bookkeeping of a generated corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub format: String,
    pub seed: u64,
    pub bytes: u64,
    /// Lines that are neither blank nor `#` directives.
    pub lines: u64,
    pub records: u64,
    pub corrupt: u64,
    pub comments: u64,
    /// Prefix (`day`, `hour`, `ip`, `page`, `method`, `browser`) to key counts.
    pub counts: BTreeMap<String, BTreeMap<String, u64>>,
    /// Status code (or severity) to count.
    pub statuses: BTreeMap<String, u64>,
    /// Status code to page counts, for error-detection oracles.
    pub status_pages: BTreeMap<String, BTreeMap<String, u64>>,
}

impl GenerationManifest {
    fn new(config: &GeneratorConfig) -> Self {
        GenerationManifest { format: config.format.qualified_name(), seed: config.seed, ..Default::default() }
    }

    fn record(&mut self, line: &GeneratedLine, descriptor: &LogFormatDescriptor) {
        self.bytes += line.text.len() as u64 + 1;
        let Some(event) = &line.event else {
            if line.text.starts_with('#') {
                self.comments += 1;
            } else {
                self.lines += 1;
                self.corrupt += 1;
            }
            return;
        };
        self.lines += 1;
        self.records += 1;
        let seen = event.observed(descriptor);
        for (prefix, key) in [
            ("day", &seen.day),
            ("hour", &seen.hour),
            ("ip", &seen.ip),
            ("page", &seen.page),
            ("method", &seen.method),
            ("browser", &seen.browser),
        ] {
            *self.counts.entry(prefix.to_string()).or_default().entry(key.clone()).or_default() += 1;
        }
        *self.statuses.entry(seen.status.clone()).or_default() += 1;
        *self.status_pages.entry(seen.status).or_default().entry(seen.page).or_default() += 1;
    }

    pub fn count(&self, prefix: &str) -> Option<&BTreeMap<String, u64>> {
        self.counts.get(prefix)
    }
}

/// Deterministic log line source: the same configuration always yields the
/// same sequence of lines.
pub struct LogGenerator {
    config: GeneratorConfig,
    rng: ChaCha8Rng,
    ips: Vec<String>,
    pending_header: Vec<String>,
}

impl LogGenerator {
    pub fn new(config: GeneratorConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let ips = (0..64)
            .map(|_| {
                format!("{}.{}.{}.{}", rng.gen_range(1..=223), rng.gen::<u8>(), rng.gen::<u8>(), rng.gen_range(1..=254))
            })
            .collect();
        let pending_header = if config.header { header_lines(&config) } else { Vec::new() };
        LogGenerator { config, rng, ips, pending_header }
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn next_line(&mut self) -> GeneratedLine {
        if !self.pending_header.is_empty() {
            return GeneratedLine { text: self.pending_header.remove(0), event: None };
        }
        if self.rng.gen_bool(self.config.corrupt_rate.clamp(0.0, 1.0)) {
            let text = CORRUPT_LINES.choose(&mut self.rng).expect("non-empty").to_string();
            return GeneratedLine { text, event: None };
        }
        let event = self.next_event();
        GeneratedLine { text: render(&event, &self.config.format), event: Some(event) }
    }

    fn next_event(&mut self) -> LogEvent {
        let rng = &mut self.rng;
        let day = self.config.start + Duration::days(rng.gen_range(0..self.config.days.max(1)) as i64);
        let time = NaiveTime::from_num_seconds_from_midnight_opt(rng.gen_range(0..86_400), 0).expect("in range");
        let is_error = rng.gen_bool(self.config.error_rate.clamp(0.0, 1.0));
        let status = *if is_error { ERROR_STATUSES } else { OK_STATUSES }.choose(rng).expect("non-empty");
        let severity = if is_error { ERROR_SEVERITIES } else { SEVERITIES }.choose(rng).expect("non-empty");
        // skewed page popularity so top-n and busiest-day results are not flat
        let page = PAGES[(rng.gen::<f64>().powi(2) * PAGES.len() as f64) as usize];
        let query = rng.gen_bool(0.2).then(|| format!("id={}", rng.gen_range(1..500)));
        LogEvent {
            timestamp: day.and_time(time),
            client_ip: self.ips.choose(rng).expect("non-empty").clone(),
            method: METHODS.choose(rng).expect("non-empty").to_string(),
            page: page.to_string(),
            query,
            status,
            user_agent: USER_AGENTS.choose(rng).expect("non-empty").to_string(),
            bytes: rng.gen_range(200..60_000),
            severity: severity.to_string(),
        }
    }
}

impl Iterator for LogGenerator {
    type Item = GeneratedLine;

    fn next(&mut self) -> Option<GeneratedLine> {
        Some(self.next_line())
    }
}

fn header_lines(config: &GeneratorConfig) -> Vec<String> {
    match config.format.format_id() {
        FormatId::IisW3c => vec![
            "#Software: Microsoft Internet Information Services 7.5".to_string(),
            "#Version: 1.0".to_string(),
            format!("#Date: {} 00:00:00", config.start.format("%Y-%m-%d")),
        ],
        _ => Vec::new(),
    }
}

/// Renders `event` as one line of `descriptor`'s dialect.
pub fn render(event: &LogEvent, descriptor: &LogFormatDescriptor) -> String {
    let ts = &event.timestamp;
    let query = event.query.as_deref().unwrap_or("-");
    let ua_plus = event.user_agent.replace(' ', "+");
    match (descriptor.format_id(), descriptor.variant()) {
        (FormatId::IisW3c, "sample") => format!(
            "{} {} W3SVC1 10.1.1.5 {} {} {} 80 - {} {} - www.example.edu.tr",
            ts.format("%Y-%m-%d"),
            ts.format("%H:%M:%S"),
            event.method,
            event.page,
            query,
            event.client_ip,
            ua_plus,
        ),
        (FormatId::IisW3c, _) => format!(
            "{} {} {} - W3SVC1 WEB01 10.1.1.5 80 {} {} {} {} 0 {} 412 {} HTTP/1.1 www.example.edu.tr {} - - 0",
            ts.format("%Y-%m-%d"),
            ts.format("%H:%M:%S"),
            event.client_ip,
            event.method,
            event.page,
            query,
            event.status,
            event.bytes,
            event.bytes % 997,
            ua_plus,
        ),
        (FormatId::ApacheAccess, variant) => {
            let target = match &event.query {
                Some(q) => format!("{}?{q}", event.page),
                None => event.page.clone(),
            };
            let common = format!(
                "{} - - [{} +0300] \"{} {} HTTP/1.1\" {} {}",
                event.client_ip,
                ts.format("%d/%b/%Y:%H:%M:%S"),
                event.method,
                target,
                event.status,
                event.bytes,
            );
            if variant == "common" {
                common
            } else {
                format!("{common} \"-\" \"{}\"", event.user_agent)
            }
        }
        (FormatId::ApacheError, variant) => {
            let when = ts.format("%a %b %d %H:%M:%S %Y");
            if variant == "plain" {
                format!("[{when}] [{}] server reached MaxClients setting", event.severity)
            } else {
                format!(
                    "[{when}] [{}] [client {}] File does not exist: /var/www{}",
                    event.severity, event.client_ip, event.page
                )
            }
        }
        (FormatId::Squid, _) => {
            let epoch = ts.and_utc().timestamp();
            let code = if event.status >= 400 { "TCP_DENIED" } else { "TCP_MISS" };
            format!(
                "{epoch}.{:03} {} {} {code}/{} {} {} {} - DIRECT/10.1.1.5 text/html",
                event.bytes % 1000,
                event.bytes % 3000,
                event.client_ip,
                event.status,
                event.bytes,
                event.method,
                squid_url(&event.page),
            )
        }
    }
}

/// A generated corpus held in memory, with every line's event for oracles.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub text: String,
    pub lines: Vec<GeneratedLine>,
    pub manifest: GenerationManifest,
}

impl GeneratedCorpus {
    pub fn events(&self) -> impl Iterator<Item = &LogEvent> {
        self.lines.iter().filter_map(|l| l.event.as_ref())
    }
}

/// Generates `line_count` lines (header directives included) in memory.
pub fn generate_corpus(config: GeneratorConfig, line_count: usize) -> GeneratedCorpus {
    let descriptor = config.format.clone();
    let mut manifest = GenerationManifest::new(&config);
    let mut text = String::new();
    let lines: Vec<GeneratedLine> = LogGenerator::new(config).take(line_count).collect();
    for line in &lines {
        text.push_str(&line.text);
        text.push('\n');
        manifest.record(line, &descriptor);
    }
    GeneratedCorpus { text, lines, manifest }
}

/// Path of the manifest written next to a generated log.
pub fn manifest_path(log: &Path) -> PathBuf {
    let mut name = log.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    log.with_file_name(name)
}

/// Writes lines of `descriptor`'s dialect to `path` until the file holds at
/// least `target_mb` MiB, and stores the manifest as JSON beside it.
pub fn generate_log(
    path: &Path,
    target_mb: f64,
    seed: u64,
    descriptor: &LogFormatDescriptor,
) -> io::Result<GenerationManifest> {
    generate_log_with(path, target_mb, GeneratorConfig::new(seed, descriptor.clone()))
}

pub fn generate_log_with(path: &Path, target_mb: f64, config: GeneratorConfig) -> io::Result<GenerationManifest> {
    if target_mb.is_nan() || target_mb <= 0.0 {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "target size must be positive"));
    }
    let target = (target_mb * 1024.0 * 1024.0).ceil() as u64;
    let descriptor = config.format.clone();
    let mut manifest = GenerationManifest::new(&config);
    let mut out = BufWriter::new(File::create(path)?);
    let mut generator = LogGenerator::new(config);
    while manifest.bytes < target {
        let line = generator.next_line();
        out.write_all(line.text.as_bytes())?;
        out.write_all(b"\n")?;
        manifest.record(&line, &descriptor);
    }
    out.flush()?;
    let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    std::fs::write(manifest_path(path), json)?;
    Ok(manifest)
}

/// Reads a manifest written by [`generate_log`].
pub fn load_manifest(log: &Path) -> io::Result<GenerationManifest> {
    let text = std::fs::read_to_string(manifest_path(log))?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
