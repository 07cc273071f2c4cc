use crate::engine::{JobConfig, MapContext, MapInput, Mapper};
use crate::logformat::{derive_attribute, derive_day, derive_hour, field, Attribute, FormatId, LogRecord};

pub const MAX_DAY: &str = "max_day";
pub const STATUS_FLOOR: &str = "status_floor";
pub const NEEDLE: &str = "needle";
pub const LINES_MATCHED: &str = "lines_matched";

const MISSING: &str = "-";

/// Emits one prefixed key per analysed column:
/// `day_`, `hour_`, `ip_`, `page_`, `method_`, `browser_`.
///
/// Columns a dialect does not have are emitted as the missing marker so
/// every parsed line contributes exactly one key to each prefix. Lines
/// without a usable timestamp are counted as corrupt.
pub struct FrequencyMapper;

impl Mapper for FrequencyMapper {
    fn map(&self, input: &MapInput<'_>, ctx: &mut MapContext<'_>) {
        let Some(record) = ctx.record(input) else { return };
        let (Ok(day), Ok(hour)) = (derive_day(&record), derive_hour(&record)) else {
            ctx.skip_corrupt();
            return;
        };
        let attr = |a| derive_attribute(&record, a).unwrap_or(MISSING);
        let keys = [
            format!("day_{day}"),
            format!("hour_{hour}"),
            format!("ip_{}", attr(Attribute::ClientIp)),
            format!("page_{}", attr(Attribute::Page)),
            format!("method_{}", attr(Attribute::Method)),
            format!("browser_{}", attr(Attribute::UserAgent)),
        ];
        for key in keys {
            ctx.emit(key, "1");
        }
    }

    fn needs_format(&self) -> bool {
        true
    }
}

/// `(day, 1)` per record.
pub struct DayCountMapper;

impl Mapper for DayCountMapper {
    fn map(&self, input: &MapInput<'_>, ctx: &mut MapContext<'_>) {
        let Some(record) = ctx.record(input) else { return };
        match derive_day(&record) {
            Ok(day) => ctx.emit(day, "1"),
            Err(_) => ctx.skip_corrupt(),
        }
    }

    fn needs_format(&self) -> bool {
        true
    }
}

/// Reads `key\tvalue` output lines and emits `(value, key)`.
pub struct SwapMapper;

impl Mapper for SwapMapper {
    fn map(&self, input: &MapInput<'_>, ctx: &mut MapContext<'_>) {
        match input.line.split_once('\t') {
            Some((token1, token2)) => ctx.emit(token2, token1),
            None => ctx.skip_corrupt(),
        }
    }
}

/// `(page, 1)` for records dated on the `max_day` parameter.
pub struct PagesOnDayMapper;

impl Mapper for PagesOnDayMapper {
    fn map(&self, input: &MapInput<'_>, ctx: &mut MapContext<'_>) {
        let max_day = ctx.config().get(MAX_DAY).unwrap_or_default().to_string();
        let Some(record) = ctx.record(input) else { return };
        match derive_day(&record) {
            Ok(day) if day == max_day => {
                let page = derive_attribute(&record, Attribute::Page).unwrap_or(MISSING).to_string();
                ctx.emit(page, "1");
            }
            Ok(_) => {}
            Err(_) => ctx.skip_corrupt(),
        }
    }

    fn needs_format(&self) -> bool {
        true
    }

    fn check_config(&self, config: &JobConfig) -> Result<(), String> {
        match config.get(MAX_DAY) {
            Some(d) if !d.is_empty() => Ok(()),
            _ => Err(format!("parameter {MAX_DAY:?} is not set")),
        }
    }
}

/// Apache error log severities counted as errors.
const ERROR_SEVERITIES: [&str; 4] = ["emerg", "alert", "crit", "error"];

/// `(status_<code>, 1)` and `(errpage_<page>, 1)` for requests whose status
/// is at least `status_floor`. Error logs emit `(status_<severity>, 1)` for
/// error-level entries.
pub struct ErrorMapper;

impl ErrorMapper {
    fn floor(config: &JobConfig) -> Result<u32, String> {
        match config.get(STATUS_FLOOR) {
            None => Ok(crate::analyses::DEFAULT_STATUS_FLOOR),
            Some(v) => v.parse().map_err(|_| format!("{STATUS_FLOOR} {v:?} is not an integer")),
        }
    }

    fn severity(record: &LogRecord) -> Option<&str> {
        record.get(field::SEVERITY)
    }
}

impl Mapper for ErrorMapper {
    fn map(&self, input: &MapInput<'_>, ctx: &mut MapContext<'_>) {
        let floor = Self::floor(ctx.config()).unwrap_or(crate::analyses::DEFAULT_STATUS_FLOOR);
        let Some(record) = ctx.record(input) else { return };
        if record.format_id() == FormatId::ApacheError {
            match Self::severity(&record) {
                Some(level) if ERROR_SEVERITIES.contains(&level) => ctx.emit(format!("status_{level}"), "1"),
                Some(_) => {}
                None => ctx.skip_corrupt(),
            }
            return;
        }
        let status = derive_attribute(&record, Attribute::Status).and_then(|s| s.parse::<u32>().ok());
        match status {
            Some(code) if code >= floor => {
                let page = derive_attribute(&record, Attribute::Page).unwrap_or(MISSING);
                let keys = [format!("status_{code}"), format!("errpage_{page}")];
                for key in keys {
                    ctx.emit(key, "1");
                }
            }
            Some(_) => {}
            None => ctx.skip_corrupt(),
        }
    }

    fn needs_format(&self) -> bool {
        true
    }

    fn check_config(&self, config: &JobConfig) -> Result<(), String> {
        Self::floor(config).map(|_| ())
    }
}

/// `(needle, 1)` for every raw line containing `needle`. No parsing.
pub struct GrepMapper;

impl Mapper for GrepMapper {
    fn map(&self, input: &MapInput<'_>, ctx: &mut MapContext<'_>) {
        let needle = ctx.config().get(NEEDLE).unwrap_or_default();
        if !needle.is_empty() && input.line.contains(needle) {
            let needle = needle.to_string();
            ctx.emit(needle, "1");
            ctx.count(LINES_MATCHED, 1);
        } else {
            ctx.count(LINES_MATCHED, 0);
        }
    }

    fn check_config(&self, config: &JobConfig) -> Result<(), String> {
        match config.get(NEEDLE) {
            Some(n) if !n.is_empty() => Ok(()),
            _ => Err(format!("parameter {NEEDLE:?} must be a non-empty string")),
        }
    }
}
