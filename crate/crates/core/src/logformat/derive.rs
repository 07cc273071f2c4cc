use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike};

use super::{field, FormatId, LogFormatError, LogRecord};

const MISSING: &str = "-";

/// Semantic value a record may carry under different field names
/// depending on its dialect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attribute {
    ClientIp,
    Method,
    /// Requested resource: URI stem for IIS, the request path for Apache,
    /// the full URL for Squid.
    Page,
    UserAgent,
    /// Numeric HTTP status.
    Status,
}

/// Looks up `attribute` in `record`. `None` when the record's schema has no
/// such value at all; the missing marker is returned as-is.
pub fn derive_attribute(record: &LogRecord, attribute: Attribute) -> Option<&str> {
    use Attribute::*;
    match (record.format_id(), attribute) {
        (_, ClientIp) if record.format_id() != FormatId::ApacheError => record.get(field::CLIENT_IP),
        (FormatId::ApacheError, ClientIp) => {
            record.get(field::CLIENT).map(|c| c.strip_prefix("client ").unwrap_or(c).trim())
        }
        (FormatId::IisW3c, Method) | (FormatId::Squid, Method) => record.get(field::METHOD),
        (FormatId::IisW3c, Page) => record.get(field::URI_STEM),
        (FormatId::Squid, Page) => record.get(field::URL),
        (FormatId::ApacheAccess, Method) => record.get(field::REQUEST).map(|r| request_part(r, 0)),
        (FormatId::ApacheAccess, Page) => record.get(field::REQUEST).map(|r| {
            let target = request_part(r, 1);
            target.split_once('?').map_or(target, |(path, _)| path)
        }),
        (FormatId::IisW3c, UserAgent) | (FormatId::ApacheAccess, UserAgent) => record.get(field::USER_AGENT),
        (FormatId::IisW3c, Status) | (FormatId::ApacheAccess, Status) => record.get(field::HTTP_STATUS),
        (FormatId::Squid, Status) => {
            record.get(field::RESULT_CODE).map(|c| c.rsplit_once('/').map_or(MISSING, |(_, code)| code))
        }
        _ => None,
    }
}

fn request_part(request: &str, index: usize) -> &str {
    request.split(' ').filter(|p| !p.is_empty()).nth(index).unwrap_or(MISSING)
}

/// Calendar date and hour of a record, in the record's own local time
/// (Squid epoch timestamps are read as UTC).
fn timestamp(record: &LogRecord) -> Result<(NaiveDate, Option<u32>), LogFormatError> {
    let present = |name: &str| -> Result<&str, LogFormatError> {
        match record.get(name) {
            Some(v) if v != MISSING && !v.is_empty() => Ok(v),
            _ => Err(LogFormatError::MissingField(name.to_string())),
        }
    };
    let invalid = |name: &str, value: &str| LogFormatError::InvalidTimestamp {
        field: name.to_string(),
        value: value.to_string(),
    };
    match record.format_id() {
        FormatId::IisW3c => {
            let date = present(field::DATE)?;
            let day = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| invalid(field::DATE, date))?;
            let hour = match record.get(field::TIME) {
                Some(t) if t != MISSING => Some(clock_hour(t).ok_or_else(|| invalid(field::TIME, t))?),
                _ => None,
            };
            Ok((day, hour))
        }
        FormatId::ApacheAccess => {
            let ts = present(field::TIMESTAMP)?;
            let dt = DateTime::parse_from_str(ts, "%d/%b/%Y:%H:%M:%S %z").map_err(|_| invalid(field::TIMESTAMP, ts))?;
            Ok((dt.date_naive(), Some(dt.hour())))
        }
        FormatId::ApacheError => {
            let ts = present(field::TIMESTAMP)?;
            let dt = NaiveDateTime::parse_from_str(ts, "%a %b %d %H:%M:%S %Y")
                .or_else(|_| NaiveDateTime::parse_from_str(ts, "%a %b %d %H:%M:%S%.f %Y"))
                .map_err(|_| invalid(field::TIMESTAMP, ts))?;
            Ok((dt.date(), Some(dt.hour())))
        }
        FormatId::Squid => {
            let ts = present(field::TIMESTAMP)?;
            let secs: i64 =
                ts.split('.').next().and_then(|s| s.parse().ok()).ok_or_else(|| invalid(field::TIMESTAMP, ts))?;
            let dt = DateTime::from_timestamp(secs, 0).ok_or_else(|| invalid(field::TIMESTAMP, ts))?;
            Ok((dt.date_naive(), Some(dt.hour())))
        }
    }
}

fn clock_hour(time: &str) -> Option<u32> {
    let (h, _) = time.split_once(':')?;
    if h.len() != 2 {
        return None;
    }
    h.parse().ok().filter(|h| *h < 24)
}

/// Day key `YYYY-MM-DD` of a record.
pub fn derive_day(record: &LogRecord) -> Result<String, LogFormatError> {
    timestamp(record).map(|(day, _)| day.format("%Y-%m-%d").to_string())
}

/// Hour key `00`..`23` of a record.
pub fn derive_hour(record: &LogRecord) -> Result<String, LogFormatError> {
    match timestamp(record)? {
        (_, Some(hour)) => Ok(format!("{hour:02}")),
        (_, None) => Err(LogFormatError::MissingField(field::TIME.to_string())),
    }
}
