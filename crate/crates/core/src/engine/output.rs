use std::fs;
use std::io;
use std::path::Path;

use super::routing::SINGLE_OUTPUT_FILE;
use super::{serialize_pairs, JobResult};

/// Written last. Its body lists the job counters as `name\tvalue` lines.
pub const SUCCESS_MARKER: &str = "_SUCCESS";

/// Writes every output file and finally `_SUCCESS` into `dir`. Files left
/// by an earlier run into the same directory are removed first.
pub fn write_output(dir: &Path, result: &JobResult) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        let stale = name.ends_with(SINGLE_OUTPUT_FILE) || name == SUCCESS_MARKER;
        if stale && entry.file_type()?.is_file() {
            fs::remove_file(entry.path())?;
        }
    }
    for (name, pairs) in &result.outputs {
        fs::write(dir.join(name), serialize_pairs(pairs))?;
    }
    let mut counters = String::new();
    for (name, value) in result.counters.iter() {
        counters.push_str(&format!("{name}\t{value}\n"));
    }
    fs::write(dir.join(SUCCESS_MARKER), counters)
}
