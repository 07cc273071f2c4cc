//! Simulated distributed block store.
//!
//! A dataset is cut into fixed-size blocks and every block is copied onto
//! `replication` distinct nodes. Nodes can be failed at any time; reads are
//! served by the lowest-numbered live replica, and a block whose replicas
//! are all dead is unavailable.

mod backend;
mod split;

pub use backend::{BlockBackend, DiskBackend, MemoryBackend};
pub use split::{Split, SplitData};

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::logformat::LogFormatDescriptor;

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("ReplicationInfeasible: replication {replication} needs that many live nodes, {available} available")]
    ReplicationInfeasible { replication: usize, available: usize },
    #[error("invalid cluster spec: {0}")]
    InvalidSpec(String),
    #[error("BlockUnavailable: block {block} of dataset {dataset} has no live replica")]
    BlockUnavailable { dataset: String, block: usize },
    #[error("no such node {0}")]
    UnknownNode(NodeId),
    #[error("dataset {dataset} has no block {block}")]
    UnknownBlock { dataset: String, block: usize },
    #[error("invalid dataset id {0:?}")]
    InvalidDatasetId(String),
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Shape of the simulated cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterSpec {
    pub node_count: usize,
    pub replication: usize,
    pub block_size: usize,
}

impl ClusterSpec {
    pub const DEFAULT_BLOCK_SIZE: usize = 64 << 20;
    pub const MIN_BLOCK_SIZE: usize = 1024;

    pub fn new(node_count: usize, replication: usize, block_size: usize) -> Result<Self, StoreError> {
        if node_count == 0 {
            return Err(StoreError::InvalidSpec("node_count must be positive".into()));
        }
        if replication == 0 {
            return Err(StoreError::InvalidSpec("replication must be positive".into()));
        }
        if replication > node_count {
            return Err(StoreError::ReplicationInfeasible { replication, available: node_count });
        }
        if block_size < Self::MIN_BLOCK_SIZE {
            return Err(StoreError::InvalidSpec(format!(
                "block size {block_size} is below the {} byte floor",
                Self::MIN_BLOCK_SIZE
            )));
        }
        Ok(ClusterSpec { node_count, replication, block_size })
    }
}

impl Default for ClusterSpec {
    /// Four nodes, two replicas, 64 MB blocks.
    fn default() -> Self {
        ClusterSpec { node_count: 4, replication: 2, block_size: Self::DEFAULT_BLOCK_SIZE }
    }
}

/// Dataset name; also a directory name in persistent stores.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DatasetId(String);

impl DatasetId {
    pub fn new(id: impl Into<String>) -> Result<Self, StoreError> {
        let id = id.into();
        let bad =
            id.is_empty() || id == "." || id == ".." || id.chars().any(|c| c == '/' || c == '\\' || c.is_control());
        if bad {
            Err(StoreError::InvalidDatasetId(id))
        } else {
            Ok(DatasetId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: usize,
    pub offset: u64,
    pub length: u64,
    pub replicas: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRef {
    pub id: DatasetId,
    pub blocks: Vec<Block>,
    pub total_bytes: u64,
    pub format: Option<LogFormatDescriptor>,
}

impl DatasetRef {
    pub fn with_format(mut self, format: LogFormatDescriptor) -> Self {
        self.format = Some(format);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeState {
    pub node_id: NodeId,
    pub alive: bool,
}

/// Bytes of one block and the node that served them.
#[derive(Debug, Clone)]
pub struct BlockRead {
    pub node: NodeId,
    pub bytes: Arc<[u8]>,
}

/// A set of simulated nodes sharing one backend.
pub struct Cluster {
    spec: ClusterSpec,
    alive: RwLock<Vec<bool>>,
    backend: Box<dyn BlockBackend>,
}

impl fmt::Debug for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cluster").field("spec", &self.spec).field("alive", &self.alive).finish()
    }
}

impl Cluster {
    pub fn new(spec: ClusterSpec, backend: Box<dyn BlockBackend>) -> Self {
        Cluster { spec, alive: RwLock::new(vec![true; spec.node_count]), backend }
    }

    pub fn in_memory(spec: ClusterSpec) -> Self {
        Self::new(spec, Box::new(MemoryBackend::new()))
    }

    /// Cluster whose nodes are directories under `root`.
    pub fn persistent(spec: ClusterSpec, root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        Ok(Self::new(spec, Box::new(DiskBackend::new(root)?)))
    }

    pub fn spec(&self) -> &ClusterSpec {
        &self.spec
    }

    pub fn node_states(&self) -> Vec<NodeState> {
        self.alive.read().unwrap().iter().enumerate().map(|(node_id, &alive)| NodeState { node_id, alive }).collect()
    }

    pub fn is_alive(&self, node: NodeId) -> bool {
        self.alive.read().unwrap().get(node).copied().unwrap_or(false)
    }

    pub fn live_nodes(&self) -> Vec<NodeId> {
        self.alive.read().unwrap().iter().enumerate().filter(|(_, a)| **a).map(|(n, _)| n).collect()
    }

    /// Marks `node` dead. Failing a dead node again changes nothing.
    pub fn fail_node(&self, node: NodeId) -> Result<(), StoreError> {
        let mut alive = self.alive.write().unwrap();
        match alive.get_mut(node) {
            Some(slot) => {
                *slot = false;
                Ok(())
            }
            None => Err(StoreError::UnknownNode(node)),
        }
    }

    /// Splits `input` into blocks and writes each to `replication` nodes.
    ///
    /// Replicas go round-robin over the live nodes starting at
    /// `block_index mod live_count`, so consecutive blocks have different
    /// primaries. With every node alive this is plain `block_index mod
    /// node_count`.
    pub fn ingest(&self, id: &str, input: impl Read) -> Result<DatasetRef, StoreError> {
        self.ingest_with_format(id, input, None)
    }

    /// Like [`Cluster::ingest`], tagging the dataset with its log dialect.
    pub fn ingest_with_format(
        &self,
        id: &str,
        mut input: impl Read,
        format: Option<LogFormatDescriptor>,
    ) -> Result<DatasetRef, StoreError> {
        let id = DatasetId::new(id)?;
        let live = self.live_nodes();
        if live.len() < self.spec.replication {
            return Err(StoreError::ReplicationInfeasible {
                replication: self.spec.replication,
                available: live.len(),
            });
        }
        let mut blocks = Vec::new();
        let mut offset = 0u64;
        loop {
            let chunk = read_chunk(&mut input, self.spec.block_size)?;
            if chunk.is_empty() {
                break;
            }
            let index = blocks.len();
            let replicas: Vec<NodeId> = (0..self.spec.replication).map(|j| live[(index + j) % live.len()]).collect();
            let bytes: Arc<[u8]> = Arc::from(chunk);
            for &node in &replicas {
                self.backend.put(node, &id, index, Arc::clone(&bytes))?;
            }
            let length = bytes.len() as u64;
            blocks.push(Block { index, offset, length, replicas });
            offset += length;
        }
        let dataset = DatasetRef { id, blocks, total_bytes: offset, format };
        if let Some(root) = self.backend.root() {
            write_manifest(root, &dataset)?;
        }
        Ok(dataset)
    }

    pub fn ingest_bytes(&self, id: &str, bytes: &[u8]) -> Result<DatasetRef, StoreError> {
        self.ingest(id, bytes)
    }

    /// Reloads a dataset from its manifest in a persistent store.
    pub fn open_dataset(&self, id: &str) -> Result<DatasetRef, StoreError> {
        let id = DatasetId::new(id)?;
        let root =
            self.backend.root().ok_or_else(|| StoreError::Manifest("in-memory stores keep no manifests".into()))?;
        read_manifest(&manifest_path(root, &id), id)
    }

    fn block<'d>(&self, dataset: &'d DatasetRef, index: usize) -> Result<&'d Block, StoreError> {
        dataset
            .blocks
            .get(index)
            .ok_or_else(|| StoreError::UnknownBlock { dataset: dataset.id.to_string(), block: index })
    }

    fn serving_node(&self, dataset: &DatasetRef, block: &Block, alive: &[bool]) -> Result<NodeId, StoreError> {
        block
            .replicas
            .iter()
            .copied()
            .filter(|&n| alive.get(n).copied().unwrap_or(false))
            .min()
            .ok_or_else(|| StoreError::BlockUnavailable { dataset: dataset.id.to_string(), block: block.index })
    }

    /// Reads a whole block from its lowest-numbered live replica.
    pub fn read_block(&self, dataset: &DatasetRef, index: usize) -> Result<BlockRead, StoreError> {
        let block = self.block(dataset, index)?;
        let alive = self.alive.read().unwrap();
        let node = self.serving_node(dataset, block, &alive)?;
        let bytes = self.backend.get(node, &dataset.id, index)?;
        Ok(BlockRead { node, bytes })
    }

    pub(crate) fn read_block_range(
        &self,
        dataset: &DatasetRef,
        index: usize,
        range: std::ops::Range<usize>,
    ) -> Result<Vec<u8>, StoreError> {
        let block = self.block(dataset, index)?;
        let alive = self.alive.read().unwrap();
        let node = self.serving_node(dataset, block, &alive)?;
        Ok(self.backend.get_range(node, &dataset.id, index, range)?)
    }

    /// Indices of blocks with no live replica.
    pub fn unavailable_blocks(&self, dataset: &DatasetRef) -> Vec<usize> {
        let alive = self.alive.read().unwrap();
        dataset.blocks.iter().filter(|b| self.serving_node(dataset, b, &alive).is_err()).map(|b| b.index).collect()
    }

    pub fn is_readable(&self, dataset: &DatasetRef) -> bool {
        self.unavailable_blocks(dataset).is_empty()
    }

    /// Reads the whole dataset back in block order.
    pub fn read_all(&self, dataset: &DatasetRef) -> Result<Vec<u8>, StoreError> {
        let mut out = Vec::with_capacity(dataset.total_bytes as usize);
        for block in &dataset.blocks {
            out.extend_from_slice(&self.read_block(dataset, block.index)?.bytes);
        }
        Ok(out)
    }
}

fn read_chunk(input: &mut impl Read, size: usize) -> io::Result<Vec<u8>> {
    let mut chunk = Vec::with_capacity(size.min(1 << 20));
    input.take(size as u64).read_to_end(&mut chunk)?;
    Ok(chunk)
}

fn manifest_path(root: &Path, id: &DatasetId) -> PathBuf {
    root.join(format!("{id}.manifest"))
}

/// Tab-separated: block index, offset, length, comma-joined replica ids.
/// A leading `#format` line records the log dialect when known.
fn write_manifest(root: &Path, dataset: &DatasetRef) -> io::Result<()> {
    let mut out = Vec::new();
    if let Some(format) = &dataset.format {
        writeln!(out, "#format\t{}", format.qualified_name())?;
    }
    for b in &dataset.blocks {
        let replicas: Vec<String> = b.replicas.iter().map(ToString::to_string).collect();
        writeln!(out, "{}\t{}\t{}\t{}", b.index, b.offset, b.length, replicas.join(","))?;
    }
    fs::write(manifest_path(root, &dataset.id), out)
}

fn read_manifest(path: &Path, id: DatasetId) -> Result<DatasetRef, StoreError> {
    let text = fs::read_to_string(path)?;
    let bad = |line: &str| StoreError::Manifest(format!("{}: {line:?}", path.display()));
    let mut blocks = Vec::new();
    let mut format = None;
    for line in text.lines().filter(|l| !l.is_empty()) {
        if let Some(name) = line.strip_prefix("#format\t") {
            format = Some(LogFormatDescriptor::by_name(name).map_err(|_| bad(line))?);
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [index, offset, length, replicas] = cols[..] else {
            return Err(bad(line));
        };
        let replicas =
            replicas.split(',').map(|r| r.parse().map_err(|_| bad(line))).collect::<Result<Vec<NodeId>, _>>()?;
        blocks.push(Block {
            index: index.parse().map_err(|_| bad(line))?,
            offset: offset.parse().map_err(|_| bad(line))?,
            length: length.parse().map_err(|_| bad(line))?,
            replicas,
        });
    }
    let mut expected = 0u64;
    for (i, b) in blocks.iter().enumerate() {
        if b.index != i || b.offset != expected {
            return Err(StoreError::Manifest(format!("{}: blocks do not tile", path.display())));
        }
        expected += b.length;
    }
    Ok(DatasetRef { id, blocks, total_bytes: expected, format })
}

/// Manifest of a persisted dataset, read without constructing a cluster.
pub fn load_manifest(root: &Path, id: &str) -> Result<DatasetRef, StoreError> {
    let id = DatasetId::new(id)?;
    read_manifest(&manifest_path(root, &id), id)
}
