use std::sync::Arc;

use super::{FormatId, LogFormatError};

/// One parsed log line.
///
/// Values are stored in schema order and never contain tab, carriage
/// return or newline characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    format_id: FormatId,
    names: Arc<[String]>,
    values: Vec<String>,
    line_number: u64,
}

impl LogRecord {
    pub(crate) fn new(format_id: FormatId, names: Arc<[String]>, values: Vec<String>) -> Self {
        debug_assert_eq!(names.len(), values.len());
        LogRecord { format_id, names, values, line_number: 0 }
    }

    pub fn format_id(&self) -> FormatId {
        self.format_id
    }

    /// Position of the line in its source. Whole-file readers store the
    /// 1-based line index; split readers store the byte offset of the line.
    pub fn line_number(&self) -> u64 {
        self.line_number
    }

    pub fn with_line_number(mut self, line_number: u64) -> Self {
        self.line_number = line_number;
        self
    }

    pub fn get(&self, field: &str) -> Option<&str> {
        self.names.iter().position(|n| n == field).map(|i| self.values[i].as_str())
    }

    pub fn field_names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    /// `(field name, value)` pairs in schema order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.names.iter().map(String::as_str).zip(self.values.iter().map(String::as_str))
    }
}

/// Returns the stored value verbatim, including the missing marker.
pub fn extract_field<'r>(record: &'r LogRecord, field: &str) -> Result<&'r str, LogFormatError> {
    record.get(field).ok_or_else(|| LogFormatError::UnknownField(field.to_string()))
}
