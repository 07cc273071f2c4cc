//! Log dialect detection and line parsing.
//!
//! Each supported dialect is described by a [`LogFormatDescriptor`]: an
//! ordered schema of named fields plus how each field is enclosed on the
//! line. Parsing is positional; detection tries every built-in schema
//! against a sample and keeps the one that fits best.

mod derive;
mod descriptor;
mod detect;
mod parse;
mod record;

pub use derive::{derive_attribute, derive_day, derive_hour, Attribute};
pub use descriptor::{field, Enclosure, FieldSpec, FormatId, LogFormatDescriptor, Shape};
pub use detect::{detect_format, match_fraction, DEFAULT_MAX_PROBE};
pub use parse::{format_line, parse_lenient, parse_line, ParsedCorpus};
pub use record::{extract_field, LogRecord};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogFormatError {
    #[error("NoFormatMatched: no known format matches at least half of {probed} probed lines")]
    NoFormatMatched { probed: usize },
    #[error("FieldCountMismatch: expected {expected} fields, found {found}")]
    FieldCountMismatch { expected: usize, found: usize },
    #[error("MissingField: record has no usable {0} field")]
    MissingField(String),
    #[error("UnknownField: {0:?}")]
    UnknownField(String),
    #[error("InvalidTimestamp: {value:?} in field {field:?}")]
    InvalidTimestamp { field: String, value: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("unknown log format {0:?}")]
    UnknownFormat(String),
}

/// Lines starting with `#` are W3C directives or comments.
pub fn is_comment(line: &str) -> bool {
    line.starts_with('#')
}

/// True for lines that carry no record: blank lines and comments.
pub fn is_ignorable(line: &str) -> bool {
    line.trim().is_empty() || is_comment(line)
}
