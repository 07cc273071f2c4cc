use super::{Cluster, DatasetRef, NodeId, StoreError};

/// Line-aligned map input derived from one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub index: usize,
    pub block_index: usize,
    pub offset: u64,
    pub length: u64,
}

/// The lines a split owns.
///
/// A line belongs to the block holding its first byte. `bytes` starts at
/// the first owned line and runs through the end of the last one, which may
/// extend into later blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitData {
    /// Node that served the split's own block.
    pub host: NodeId,
    /// Dataset offset of `bytes[0]`.
    pub offset: u64,
    pub bytes: Vec<u8>,
}

impl SplitData {
    /// `(dataset offset, line)` pairs, without `\n` or a trailing `\r`.
    pub fn lines(&self) -> impl Iterator<Item = (u64, &[u8])> + '_ {
        let mut pos = 0usize;
        std::iter::from_fn(move || {
            if pos >= self.bytes.len() {
                return None;
            }
            let rest = &self.bytes[pos..];
            let (line, consumed) = match rest.iter().position(|&b| b == b'\n') {
                Some(nl) => (&rest[..nl], nl + 1),
                None => (rest, rest.len()),
            };
            let start = self.offset + pos as u64;
            pos += consumed;
            Some((start, line.strip_suffix(b"\r").unwrap_or(line)))
        })
    }
}

impl Cluster {
    /// One split per block, in block order.
    pub fn splits_for_map(&self, dataset: &DatasetRef) -> Vec<Split> {
        dataset
            .blocks
            .iter()
            .map(|b| Split { index: b.index, block_index: b.index, offset: b.offset, length: b.length })
            .collect()
    }

    /// Reads the lines owned by `split`.
    ///
    /// Unless it is the first block, a leading partial line is skipped (it
    /// belongs to the previous split); the final line is completed from the
    /// following blocks.
    pub fn read_split(&self, dataset: &DatasetRef, split: &Split) -> Result<SplitData, StoreError> {
        let block = self.read_block(dataset, split.block_index)?;
        let data = &block.bytes;
        let mut start = 0usize;
        if split.block_index > 0 {
            let prev = &dataset.blocks[split.block_index - 1];
            let last = prev.length as usize - 1;
            let prev_byte = self.read_block_range(dataset, prev.index, last..last + 1)?;
            if prev_byte[0] != b'\n' {
                start = match data.iter().position(|&b| b == b'\n') {
                    Some(nl) => nl + 1,
                    None => data.len(),
                };
            }
        }
        let offset = split.offset + start as u64;
        if start >= data.len() {
            return Ok(SplitData { host: block.node, offset, bytes: Vec::new() });
        }
        let mut bytes = data[start..].to_vec();
        let mut next = split.block_index + 1;
        while bytes.last() != Some(&b'\n') && next < dataset.blocks.len() {
            let more = self.read_block(dataset, next)?;
            match more.bytes.iter().position(|&b| b == b'\n') {
                Some(nl) => bytes.extend_from_slice(&more.bytes[..=nl]),
                None => bytes.extend_from_slice(&more.bytes),
            }
            next += 1;
        }
        Ok(SplitData { host: block.node, offset, bytes })
    }
}
