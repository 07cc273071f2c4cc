use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::LogFormatError;

/// Log dialect family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FormatId {
    #[serde(rename = "IIS_W3C")]
    IisW3c,
    #[serde(rename = "APACHE_ACCESS")]
    ApacheAccess,
    #[serde(rename = "APACHE_ERROR")]
    ApacheError,
    #[serde(rename = "SQUID")]
    Squid,
}

impl FormatId {
    pub fn as_str(self) -> &'static str {
        match self {
            FormatId::IisW3c => "IIS_W3C",
            FormatId::ApacheAccess => "APACHE_ACCESS",
            FormatId::ApacheError => "APACHE_ERROR",
            FormatId::Squid => "SQUID",
        }
    }
}

impl fmt::Display for FormatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormatId {
    type Err = LogFormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "IIS_W3C" => Ok(FormatId::IisW3c),
            "APACHE_ACCESS" => Ok(FormatId::ApacheAccess),
            "APACHE_ERROR" => Ok(FormatId::ApacheError),
            "SQUID" => Ok(FormatId::Squid),
            other => Err(LogFormatError::UnknownFormat(other.to_string())),
        }
    }
}

/// How a field is delimited on the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enclosure {
    /// Runs until the next delimiter.
    Bare,
    /// Wrapped in double quotes; may contain the delimiter.
    Quoted,
    /// Wrapped in square brackets; may contain the delimiter.
    Bracketed,
    /// Everything left on the line. Only valid as the final field.
    Rest,
}

/// Lexical shape a field must have for a line to count as a match during
/// format detection. Parsing itself only checks the token structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Any,
    /// `YYYY-MM-DD`
    IsoDate,
    /// `HH:MM:SS`
    Clock,
    /// Decimal digits or the missing marker.
    Integer,
    /// `10/Oct/2000:13:55:36 -0700`
    ClfTimestamp,
    /// `Wed Oct 11 14:32:52 2000`
    CtimeTimestamp,
    /// `1286536309.586`
    EpochSeconds,
    /// `TCP_MISS/200`
    SquidResult,
    /// `GET /path HTTP/1.0`
    HttpRequest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub enclosure: Enclosure,
    pub shape: Shape,
}

impl FieldSpec {
    pub fn bare(name: &str, shape: Shape) -> Self {
        FieldSpec { name: name.to_string(), enclosure: Enclosure::Bare, shape }
    }

    pub fn quoted(name: &str, shape: Shape) -> Self {
        FieldSpec { name: name.to_string(), enclosure: Enclosure::Quoted, shape }
    }

    pub fn bracketed(name: &str, shape: Shape) -> Self {
        FieldSpec { name: name.to_string(), enclosure: Enclosure::Bracketed, shape }
    }

    pub fn rest(name: &str) -> Self {
        FieldSpec { name: name.to_string(), enclosure: Enclosure::Rest, shape: Shape::Any }
    }
}

/// Field names shared across the built-in schemas.
pub mod field {
    pub const DATE: &str = "Date";
    pub const TIME: &str = "Time";
    pub const CLIENT_IP: &str = "Client IP Address";
    pub const USER_NAME: &str = "User Name";
    pub const SERVICE_NAME: &str = "Service Name and Instance Number";
    pub const SERVER_NAME: &str = "Server Name";
    pub const SERVER_IP: &str = "Server IP Address";
    pub const SERVER_PORT: &str = "Server Port";
    pub const METHOD: &str = "Method";
    pub const URI_STEM: &str = "URI Stem";
    pub const URI_QUERY: &str = "URI Query";
    pub const HTTP_STATUS: &str = "HTTP Status";
    pub const WIN32_STATUS: &str = "Win32 Status";
    pub const BYTES_SENT: &str = "Bytes Sent";
    pub const BYTES_RECEIVED: &str = "Bytes Received";
    pub const TIME_TAKEN: &str = "Time Taken";
    pub const PROTOCOL_VERSION: &str = "Protocol Version";
    pub const HOST: &str = "Host";
    pub const USER_AGENT: &str = "User Agent";
    pub const COOKIE: &str = "Cookie";
    pub const REFERRER: &str = "Referrer";
    pub const PROTOCOL_SUBSTATUS: &str = "Protocol Substatus";
    pub const IDENTITY: &str = "Identity";
    pub const TIMESTAMP: &str = "Timestamp";
    pub const REQUEST: &str = "Request";
    pub const SEVERITY: &str = "Severity";
    pub const CLIENT: &str = "Client";
    pub const MESSAGE: &str = "Message";
    pub const ELAPSED: &str = "Elapsed";
    pub const RESULT_CODE: &str = "Result Code";
    pub const URL: &str = "URL";
    pub const HIERARCHY: &str = "Hierarchy";
    pub const CONTENT_TYPE: &str = "Content Type";
}

/// Schema of one log dialect variant.
///
/// A format family can ship several variants (IIS has a full 22-column
/// layout and a shorter 13-column one); `variant` tells them apart while
/// `format_id` names the family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogFormatDescriptor {
    format_id: FormatId,
    variant: String,
    fields: Vec<FieldSpec>,
    names: Arc<[String]>,
    delimiter: char,
    missing_marker: String,
}

impl LogFormatDescriptor {
    /// Builds a descriptor, checking that the schema is non-empty, names are
    /// unique and only the last field may swallow the rest of the line.
    pub fn new(
        format_id: FormatId,
        variant: impl Into<String>,
        fields: Vec<FieldSpec>,
        delimiter: char,
        missing_marker: impl Into<String>,
    ) -> Result<Self, LogFormatError> {
        if fields.is_empty() {
            return Err(LogFormatError::InvalidSchema("schema has no fields".into()));
        }
        for (i, f) in fields.iter().enumerate() {
            if f.name.is_empty() {
                return Err(LogFormatError::InvalidSchema("empty field name".into()));
            }
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(LogFormatError::InvalidSchema(format!("duplicate field {:?}", f.name)));
            }
            if f.enclosure == Enclosure::Rest && i + 1 != fields.len() {
                return Err(LogFormatError::InvalidSchema(format!(
                    "field {:?} takes the rest of the line but is not last",
                    f.name
                )));
            }
        }
        let names: Arc<[String]> = fields.iter().map(|f| f.name.clone()).collect();
        Ok(LogFormatDescriptor {
            format_id,
            variant: variant.into(),
            fields,
            names,
            delimiter,
            missing_marker: missing_marker.into(),
        })
    }

    fn builtin(format_id: FormatId, variant: &str, fields: Vec<FieldSpec>) -> Self {
        Self::new(format_id, variant, fields, ' ', "-").expect("built-in schema is valid")
    }

    /// The 22-column IIS layout.
    pub fn iis_full() -> Self {
        use field::*;
        use Shape::*;
        Self::builtin(
            FormatId::IisW3c,
            "full",
            vec![
                FieldSpec::bare(DATE, IsoDate),
                FieldSpec::bare(TIME, Clock),
                FieldSpec::bare(CLIENT_IP, Any),
                FieldSpec::bare(USER_NAME, Any),
                FieldSpec::bare(SERVICE_NAME, Any),
                FieldSpec::bare(SERVER_NAME, Any),
                FieldSpec::bare(SERVER_IP, Any),
                FieldSpec::bare(SERVER_PORT, Integer),
                FieldSpec::bare(METHOD, Any),
                FieldSpec::bare(URI_STEM, Any),
                FieldSpec::bare(URI_QUERY, Any),
                FieldSpec::bare(HTTP_STATUS, Integer),
                FieldSpec::bare(WIN32_STATUS, Integer),
                FieldSpec::bare(BYTES_SENT, Integer),
                FieldSpec::bare(BYTES_RECEIVED, Integer),
                FieldSpec::bare(TIME_TAKEN, Integer),
                FieldSpec::bare(PROTOCOL_VERSION, Any),
                FieldSpec::bare(HOST, Any),
                FieldSpec::bare(USER_AGENT, Any),
                FieldSpec::bare(COOKIE, Any),
                FieldSpec::bare(REFERRER, Any),
                FieldSpec::bare(PROTOCOL_SUBSTATUS, Integer),
            ],
        )
    }

    /// The 13-column IIS layout of the sample export line
    /// `2013-04-15 00:00:07 W3SVC1 10.1.1.5 GET /... - 80 - 66.249.78.66 <ua> - <host>`.
    pub fn iis_sample() -> Self {
        use field::*;
        use Shape::*;
        Self::builtin(
            FormatId::IisW3c,
            "sample",
            vec![
                FieldSpec::bare(DATE, IsoDate),
                FieldSpec::bare(TIME, Clock),
                FieldSpec::bare(SERVICE_NAME, Any),
                FieldSpec::bare(SERVER_IP, Any),
                FieldSpec::bare(METHOD, Any),
                FieldSpec::bare(URI_STEM, Any),
                FieldSpec::bare(URI_QUERY, Any),
                FieldSpec::bare(SERVER_PORT, Integer),
                FieldSpec::bare(USER_NAME, Any),
                FieldSpec::bare(CLIENT_IP, Any),
                FieldSpec::bare(USER_AGENT, Any),
                FieldSpec::bare(REFERRER, Any),
                FieldSpec::bare(HOST, Any),
            ],
        )
    }

    /// Apache combined log format.
    pub fn apache_combined() -> Self {
        use field::*;
        use Shape::*;
        Self::builtin(
            FormatId::ApacheAccess,
            "combined",
            vec![
                FieldSpec::bare(CLIENT_IP, Any),
                FieldSpec::bare(IDENTITY, Any),
                FieldSpec::bare(USER_NAME, Any),
                FieldSpec::bracketed(TIMESTAMP, ClfTimestamp),
                FieldSpec::quoted(REQUEST, HttpRequest),
                FieldSpec::bare(HTTP_STATUS, Integer),
                FieldSpec::bare(BYTES_SENT, Integer),
                FieldSpec::quoted(REFERRER, Any),
                FieldSpec::quoted(USER_AGENT, Any),
            ],
        )
    }

    /// Apache common log format.
    pub fn apache_common() -> Self {
        use field::*;
        use Shape::*;
        Self::builtin(
            FormatId::ApacheAccess,
            "common",
            vec![
                FieldSpec::bare(CLIENT_IP, Any),
                FieldSpec::bare(IDENTITY, Any),
                FieldSpec::bare(USER_NAME, Any),
                FieldSpec::bracketed(TIMESTAMP, ClfTimestamp),
                FieldSpec::quoted(REQUEST, HttpRequest),
                FieldSpec::bare(HTTP_STATUS, Integer),
                FieldSpec::bare(BYTES_SENT, Integer),
            ],
        )
    }

    /// Apache 2.2 error log line carrying a `[client ...]` section.
    pub fn apache_error() -> Self {
        use field::*;
        use Shape::*;
        Self::builtin(
            FormatId::ApacheError,
            "client",
            vec![
                FieldSpec::bracketed(TIMESTAMP, CtimeTimestamp),
                FieldSpec::bracketed(SEVERITY, Any),
                FieldSpec::bracketed(CLIENT, Any),
                FieldSpec::rest(MESSAGE),
            ],
        )
    }

    /// Apache error log line without a client section (server notices).
    pub fn apache_error_plain() -> Self {
        use field::*;
        use Shape::*;
        Self::builtin(
            FormatId::ApacheError,
            "plain",
            vec![
                FieldSpec::bracketed(TIMESTAMP, CtimeTimestamp),
                FieldSpec::bracketed(SEVERITY, Any),
                FieldSpec::rest(MESSAGE),
            ],
        )
    }

    /// Squid native access log.
    pub fn squid() -> Self {
        use field::*;
        use Shape::*;
        Self::builtin(
            FormatId::Squid,
            "native",
            vec![
                FieldSpec::bare(TIMESTAMP, EpochSeconds),
                FieldSpec::bare(ELAPSED, Integer),
                FieldSpec::bare(CLIENT_IP, Any),
                FieldSpec::bare(RESULT_CODE, SquidResult),
                FieldSpec::bare(BYTES_SENT, Integer),
                FieldSpec::bare(METHOD, Any),
                FieldSpec::bare(URL, Any),
                FieldSpec::bare(USER_NAME, Any),
                FieldSpec::bare(HIERARCHY, Any),
                FieldSpec::bare(CONTENT_TYPE, Any),
            ],
        )
    }

    /// Every built-in descriptor in detection priority order.
    pub fn builtins() -> Vec<LogFormatDescriptor> {
        vec![
            Self::iis_full(),
            Self::iis_sample(),
            Self::apache_combined(),
            Self::apache_common(),
            Self::apache_error(),
            Self::apache_error_plain(),
            Self::squid(),
        ]
    }

    /// Looks up a built-in by `FORMAT_ID` or `FORMAT_ID:variant`.
    pub fn by_name(name: &str) -> Result<Self, LogFormatError> {
        let (id, variant) = match name.split_once(':') {
            Some((id, v)) => (id, Some(v)),
            None => (name, None),
        };
        let id: FormatId = id.parse()?;
        Self::builtins()
            .into_iter()
            .find(|d| d.format_id == id && variant.is_none_or(|v| d.variant == v))
            .ok_or_else(|| LogFormatError::UnknownFormat(name.to_string()))
    }

    pub fn format_id(&self) -> FormatId {
        self.format_id
    }

    pub fn variant(&self) -> &str {
        &self.variant
    }

    /// `FORMAT_ID:variant`, accepted back by [`LogFormatDescriptor::by_name`].
    pub fn qualified_name(&self) -> String {
        format!("{}:{}", self.format_id, self.variant)
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn field_schema(&self) -> &[String] {
        &self.names
    }

    pub(crate) fn shared_names(&self) -> Arc<[String]> {
        Arc::clone(&self.names)
    }

    pub fn delimiter(&self) -> char {
        self.delimiter
    }

    pub fn missing_marker(&self) -> &str {
        &self.missing_marker
    }

    pub fn has_field(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }
}

impl fmt::Display for LogFormatDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.format_id.as_str())
    }
}
