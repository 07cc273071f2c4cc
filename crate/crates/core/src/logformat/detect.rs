use chrono::{DateTime, NaiveDateTime};

use super::parse::tokenize;
use super::{is_ignorable, LogFormatDescriptor, LogFormatError, Shape};

pub const DEFAULT_MAX_PROBE: usize = 100;

impl Shape {
    /// Lexical check used by detection. The missing marker always passes.
    pub fn accepts(self, value: &str, missing_marker: &str) -> bool {
        if value == missing_marker {
            return true;
        }
        match self {
            Shape::Any => true,
            Shape::IsoDate => {
                let b = value.as_bytes();
                b.len() == 10
                    && b.iter().enumerate().all(|(i, c)| match i {
                        4 | 7 => *c == b'-',
                        _ => c.is_ascii_digit(),
                    })
            }
            Shape::Clock => {
                let b = value.as_bytes();
                b.len() == 8
                    && b.iter().enumerate().all(|(i, c)| match i {
                        2 | 5 => *c == b':',
                        _ => c.is_ascii_digit(),
                    })
            }
            Shape::Integer => all_digits(value),
            Shape::ClfTimestamp => DateTime::parse_from_str(value, "%d/%b/%Y:%H:%M:%S %z").is_ok(),
            Shape::CtimeTimestamp => {
                NaiveDateTime::parse_from_str(value, "%a %b %d %H:%M:%S %Y").is_ok()
                    || NaiveDateTime::parse_from_str(value, "%a %b %d %H:%M:%S%.f %Y").is_ok()
            }
            Shape::EpochSeconds => match value.split_once('.') {
                Some((secs, frac)) => all_digits(secs) && all_digits(frac),
                None => all_digits(value),
            },
            Shape::SquidResult => match value.rsplit_once('/') {
                Some((tag, code)) => {
                    !tag.is_empty() && tag.bytes().all(|c| c.is_ascii_uppercase() || c == b'_') && all_digits(code)
                }
                None => false,
            },
            Shape::HttpRequest => {
                let mut parts = value.split(' ');
                let method = parts.next().unwrap_or("");
                let target = parts.next();
                let rest: Vec<&str> = parts.collect();
                !method.is_empty()
                    && method.bytes().all(|c| c.is_ascii_uppercase())
                    && target.is_some_and(|t| !t.is_empty())
                    && rest.len() <= 1
            }
        }
    }
}

fn all_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit())
}

fn line_matches(line: &str, descriptor: &LogFormatDescriptor) -> bool {
    let fields = descriptor.fields();
    match tokenize(line, fields, descriptor.delimiter()) {
        Some(tokens) => {
            fields.iter().zip(tokens).all(|(spec, token)| spec.shape.accepts(token, descriptor.missing_marker()))
        }
        None => false,
    }
}

/// Fraction of `lines` (ignoring blanks and comments) that tokenize under
/// `descriptor` with every field in its expected shape. `None` when there
/// is nothing to probe.
pub fn match_fraction<'a, I>(lines: I, descriptor: &LogFormatDescriptor) -> Option<f64>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut probed = 0usize;
    let mut matched = 0usize;
    for line in lines.into_iter().filter(|l| !is_ignorable(l)) {
        probed += 1;
        if line_matches(line, descriptor) {
            matched += 1;
        }
    }
    (probed > 0).then(|| matched as f64 / probed as f64)
}

/// Picks the built-in descriptor that fits the largest share of the first
/// `max_probe` record lines. Ties go to the earlier entry of
/// [`LogFormatDescriptor::builtins`] (IIS, Apache access, Apache error, Squid).
pub fn detect_format(sample_lines: &[&str], max_probe: usize) -> Result<LogFormatDescriptor, LogFormatError> {
    let probe: Vec<&str> = sample_lines.iter().copied().filter(|l| !is_ignorable(l)).take(max_probe.max(1)).collect();
    if probe.is_empty() {
        return Err(LogFormatError::NoFormatMatched { probed: 0 });
    }
    let mut best: Option<(usize, LogFormatDescriptor)> = None;
    for candidate in LogFormatDescriptor::builtins() {
        let hits = probe.iter().filter(|l| line_matches(l, &candidate)).count();
        if best.as_ref().is_none_or(|(b, _)| hits > *b) {
            best = Some((hits, candidate));
        }
    }
    match best {
        Some((hits, d)) if hits * 2 >= probe.len() => Ok(d),
        _ => Err(LogFormatError::NoFormatMatched { probed: probe.len() }),
    }
}
