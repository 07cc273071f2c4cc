use thiserror::Error;

/// File written by single-output jobs.
pub const SINGLE_OUTPUT_FILE: &str = "part-00000";
/// Prefix of the file collecting multi-output keys without a usable prefix.
pub const UNROUTED_PREFIX: &str = "unrouted";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("NoPrefix: key {0:?} has no routing prefix")]
    NoPrefix(String),
}

/// Splits a multi-output key at its first underscore into the routing
/// prefix and the residual key.
///
/// The prefix becomes part of a file name, so it must be non-empty and
/// consist of ASCII letters, digits or `-`; anything else is `NoPrefix`.
///
/// ```
/// use mrloglab::engine::route_multi_output;
///
/// assert_eq!(route_multi_output("day_2013-04-15").unwrap(), ("day", "2013-04-15"));
/// assert_eq!(
///     route_multi_output("browser_Mozilla/5.0+(Windows_NT_6.1)").unwrap(),
///     ("browser", "Mozilla/5.0+(Windows_NT_6.1)")
/// );
/// assert!(route_multi_output("plainkey").is_err());
/// ```
pub fn route_multi_output(key: &str) -> Result<(&str, &str), RouteError> {
    match key.split_once('_') {
        Some((prefix, residual))
            if !prefix.is_empty() && prefix.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-') =>
        {
            Ok((prefix, residual))
        }
        _ => Err(RouteError::NoPrefix(key.to_string())),
    }
}

/// Output file a prefix routes to.
pub(crate) fn prefixed_file(prefix: &str) -> String {
    format!("{prefix}_{SINGLE_OUTPUT_FILE}")
}
