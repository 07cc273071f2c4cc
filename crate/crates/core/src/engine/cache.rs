use std::sync::atomic::{AtomicU64, Ordering};

use crate::blockstore::{Cluster, DatasetId, DatasetRef, StoreError};
use crate::logformat::{is_ignorable, parse_line, LogFormatDescriptor, LogFormatError, LogRecord};

/// A record line held in memory with its parse outcome.
#[derive(Debug, Clone)]
pub struct CachedLine {
    pub offset: u64,
    pub line: String,
    pub record: Result<LogRecord, LogFormatError>,
}

/// A dataset read and parsed once, kept in memory for repeated jobs.
///
/// Lines are grouped by the split they came from so a job over the cache
/// sees the same task layout as a job over the stored dataset.
#[derive(Debug)]
pub struct CachedDataset {
    source: DatasetId,
    format: LogFormatDescriptor,
    partitions: Vec<Vec<CachedLine>>,
    parse_count: AtomicU64,
}

impl CachedDataset {
    pub fn source(&self) -> &DatasetId {
        &self.source
    }

    pub fn format(&self) -> &LogFormatDescriptor {
        &self.format
    }

    /// Number of parse calls made to build this cache. Jobs over the cache
    /// never add to it.
    pub fn parse_count(&self) -> u64 {
        self.parse_count.load(Ordering::SeqCst)
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition(&self, index: usize) -> &[CachedLine] {
        &self.partitions[index]
    }

    pub fn lines(&self) -> impl Iterator<Item = &CachedLine> {
        self.partitions.iter().flatten()
    }

    /// Successfully parsed records in file order.
    pub fn records(&self) -> impl Iterator<Item = &LogRecord> {
        self.lines().filter_map(|l| l.record.as_ref().ok())
    }

    pub fn len(&self) -> usize {
        self.partitions.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads every split of `dataset` and parses each record line once.
pub fn cache_dataset(
    cluster: &Cluster,
    dataset: &DatasetRef,
    format: &LogFormatDescriptor,
) -> Result<CachedDataset, StoreError> {
    let parse_count = AtomicU64::new(0);
    let mut partitions = Vec::with_capacity(dataset.blocks.len());
    for split in cluster.splits_for_map(dataset) {
        let data = cluster.read_split(dataset, &split)?;
        let mut lines = Vec::new();
        for (offset, raw) in data.lines() {
            let line = String::from_utf8_lossy(raw).into_owned();
            if is_ignorable(&line) {
                continue;
            }
            parse_count.fetch_add(1, Ordering::SeqCst);
            let record = parse_line(&line, format).map(|r| r.with_line_number(offset));
            lines.push(CachedLine { offset, line, record });
        }
        partitions.push(lines);
    }
    Ok(CachedDataset { source: dataset.id.clone(), format: format.clone(), partitions, parse_count })
}
