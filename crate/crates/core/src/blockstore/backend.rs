use std::collections::HashMap;
use std::fs;
use std::io::{self, Read, Seek, SeekFrom};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use super::{DatasetId, NodeId};

/// Where replica bytes physically live.
pub trait BlockBackend: Send + Sync {
    fn put(&self, node: NodeId, dataset: &DatasetId, block: usize, bytes: Arc<[u8]>) -> io::Result<()>;

    fn get(&self, node: NodeId, dataset: &DatasetId, block: usize) -> io::Result<Arc<[u8]>>;

    fn get_range(&self, node: NodeId, dataset: &DatasetId, block: usize, range: Range<usize>) -> io::Result<Vec<u8>> {
        let bytes = self.get(node, dataset, block)?;
        bytes
            .get(range)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "range past end of block"))
    }

    /// Root directory for persistent backends, where manifests are kept.
    fn root(&self) -> Option<&Path> {
        None
    }
}

type ReplicaKey = (NodeId, DatasetId, usize);

/// Replicas held in a map; copies of one block share a buffer.
#[derive(Default)]
pub struct MemoryBackend {
    blocks: RwLock<HashMap<ReplicaKey, Arc<[u8]>>>,
}

impl MemoryBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

impl BlockBackend for MemoryBackend {
    fn put(&self, node: NodeId, dataset: &DatasetId, block: usize, bytes: Arc<[u8]>) -> io::Result<()> {
        self.blocks.write().unwrap().insert((node, dataset.clone(), block), bytes);
        Ok(())
    }

    fn get(&self, node: NodeId, dataset: &DatasetId, block: usize) -> io::Result<Arc<[u8]>> {
        self.blocks
            .read()
            .unwrap()
            .get(&(node, dataset.clone(), block))
            .cloned()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("node{node}/{dataset}/block{block}")))
    }
}

/// One directory per node: `<root>/node<k>/<dataset>/block<index>`.
pub struct DiskBackend {
    root: PathBuf,
}

impl DiskBackend {
    pub fn new(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(DiskBackend { root })
    }

    fn block_path(&self, node: NodeId, dataset: &DatasetId, block: usize) -> PathBuf {
        self.root.join(format!("node{node}")).join(dataset.as_str()).join(format!("block{block}"))
    }
}

impl BlockBackend for DiskBackend {
    fn put(&self, node: NodeId, dataset: &DatasetId, block: usize, bytes: Arc<[u8]>) -> io::Result<()> {
        let path = self.block_path(node, dataset, block);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, &bytes)
    }

    fn get(&self, node: NodeId, dataset: &DatasetId, block: usize) -> io::Result<Arc<[u8]>> {
        fs::read(self.block_path(node, dataset, block)).map(Arc::from)
    }

    fn get_range(&self, node: NodeId, dataset: &DatasetId, block: usize, range: Range<usize>) -> io::Result<Vec<u8>> {
        let mut file = fs::File::open(self.block_path(node, dataset, block))?;
        file.seek(SeekFrom::Start(range.start as u64))?;
        let mut buf = vec![0; range.len()];
        file.read_exact(&mut buf)?;
        Ok(buf)
    }

    fn root(&self) -> Option<&Path> {
        Some(&self.root)
    }
}
