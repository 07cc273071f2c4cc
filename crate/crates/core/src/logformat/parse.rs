use std::borrow::Cow;

use super::{is_ignorable, Enclosure, FieldSpec, LogFormatDescriptor, LogFormatError, LogRecord};

/// Splits `line` into one token per schema field, honouring quoted and
/// bracketed fields. Runs of the delimiter count as one separator.
pub(crate) fn tokenize<'a>(line: &'a str, fields: &[FieldSpec], delim: char) -> Option<Vec<&'a str>> {
    let mut tokens = Vec::with_capacity(fields.len());
    let mut rest = line;
    for spec in fields {
        rest = rest.trim_start_matches(delim);
        if rest.is_empty() {
            return None;
        }
        let (token, tail) = match spec.enclosure {
            Enclosure::Bare => match rest.find(delim) {
                Some(end) => (&rest[..end], &rest[end..]),
                None => (rest, ""),
            },
            Enclosure::Quoted => {
                let inner = rest.strip_prefix('"')?;
                let end = closing_quote(inner)?;
                (&inner[..end], &inner[end + 1..])
            }
            Enclosure::Bracketed => {
                let inner = rest.strip_prefix('[')?;
                let end = inner.find(']')?;
                (&inner[..end], &inner[end + 1..])
            }
            Enclosure::Rest => (rest.trim_end_matches(delim), ""),
        };
        if !tail.is_empty() && !tail.starts_with(delim) {
            return None;
        }
        tokens.push(token);
        rest = tail;
    }
    if rest.trim_start_matches(delim).is_empty() {
        Some(tokens)
    } else {
        None
    }
}

fn closing_quote(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return Some(i),
            _ => i += 1,
        }
    }
    None
}

/// Counts tokens the way a schema-free reader would: quoted and bracketed
/// groups are single tokens. Only used to report mismatches.
fn count_tokens(line: &str, delim: char) -> usize {
    let mut count = 0;
    let mut rest = line.trim_start_matches(delim);
    while !rest.is_empty() {
        count += 1;
        let end = if let Some(inner) = rest.strip_prefix('"') {
            closing_quote(inner).map(|e| e + 2)
        } else if let Some(inner) = rest.strip_prefix('[') {
            inner.find(']').map(|e| e + 2)
        } else {
            None
        };
        let end = end.or_else(|| rest.find(delim)).unwrap_or(rest.len()).min(rest.len());
        rest = rest[end..].trim_start_matches(delim);
    }
    count
}

fn sanitize(value: &str) -> Cow<'_, str> {
    if value.contains(['\t', '\n', '\r']) {
        Cow::Owned(value.replace(['\t', '\n', '\r'], " "))
    } else {
        Cow::Borrowed(value)
    }
}

/// Parses one line positionally against `descriptor`.
///
/// The missing marker is kept verbatim. Tabs and line breaks inside values
/// become single spaces.
pub fn parse_line(line: &str, descriptor: &LogFormatDescriptor) -> Result<LogRecord, LogFormatError> {
    let fields = descriptor.fields();
    let tokens = tokenize(line, fields, descriptor.delimiter()).ok_or_else(|| LogFormatError::FieldCountMismatch {
        expected: fields.len(),
        found: count_tokens(line, descriptor.delimiter()),
    })?;
    let values = tokens.into_iter().map(|t| sanitize(t).into_owned()).collect();
    Ok(LogRecord::new(descriptor.format_id(), descriptor.shared_names(), values))
}

/// Re-serializes a record: schema-ordered values joined by the delimiter,
/// with quotes and brackets restored.
pub fn format_line(record: &LogRecord, descriptor: &LogFormatDescriptor) -> String {
    let mut line = String::new();
    for (i, (spec, value)) in descriptor.fields().iter().zip(record.values()).enumerate() {
        if i > 0 {
            line.push(descriptor.delimiter());
        }
        match spec.enclosure {
            Enclosure::Bare | Enclosure::Rest => line.push_str(value),
            Enclosure::Quoted => {
                line.push('"');
                line.push_str(value);
                line.push('"');
            }
            Enclosure::Bracketed => {
                line.push('[');
                line.push_str(value);
                line.push(']');
            }
        }
    }
    line
}

/// Result of parsing a whole text while skipping lines that do not fit.
#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub records: Vec<LogRecord>,
    /// Lines that failed to parse.
    pub skipped: usize,
    /// Blank and `#` lines.
    pub ignored: usize,
}

/// Parses every line, counting corrupt lines instead of failing. Records
/// carry their 1-based line index.
pub fn parse_lenient<'a, I>(lines: I, descriptor: &LogFormatDescriptor) -> ParsedCorpus
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = ParsedCorpus::default();
    for (i, line) in lines.into_iter().enumerate() {
        if is_ignorable(line) {
            out.ignored += 1;
            continue;
        }
        match parse_line(line, descriptor) {
            Ok(record) => out.records.push(record.with_line_number(i as u64 + 1)),
            Err(_) => out.skipped += 1,
        }
    }
    out
}
