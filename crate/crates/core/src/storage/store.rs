//! Block payloads spilled to a JSON-lines file with a byte-offset index.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::blocks::Block;
use crate::error::{Error, Result};
use crate::model::Object;

pub const SPILL_FILE: &str = "blocks.jsonl";
pub const INDEX_FILE: &str = "blocks.index.json";

/// One entry of the sidecar index; `byte_hi` is exclusive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockIndexEntry {
    pub block_id: usize,
    pub byte_lo: u64,
    pub byte_hi: u64,
    pub object_ids: Vec<String>,
}

/// Block payloads on disk and the ones currently materialized.
#[derive(Debug)]
pub struct BlockStore {
    dir: PathBuf,
    index: Vec<BlockIndexEntry>,
    loaded: BTreeMap<usize, Vec<Object>>,
}

impl BlockStore {
    /// Writes the objects of every block, in block order, and the index.
    pub fn create(dir: &Path, blocks: &[Block], objects: &[Object]) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join(SPILL_FILE))?);
        let mut index = Vec::with_capacity(blocks.len());
        let mut pos = 0u64;
        for b in blocks {
            let lo = pos;
            for &o in &b.objects {
                let mut line = serde_json::to_vec(&objects[o])?;
                line.push(b'\n');
                w.write_all(&line)?;
                pos += line.len() as u64;
            }
            index.push(BlockIndexEntry {
                block_id: b.id,
                byte_lo: lo,
                byte_hi: pos,
                object_ids: b.objects.iter().map(|&o| objects[o].id.clone()).collect(),
            });
        }
        w.flush()?;
        std::fs::write(dir.join(INDEX_FILE), serde_json::to_string(&index)?)?;
        Ok(BlockStore { dir: dir.to_path_buf(), index, loaded: BTreeMap::new() })
    }

    /// Opens a store written by [`BlockStore::create`].
    pub fn open(dir: &Path) -> Result<Self> {
        let index: Vec<BlockIndexEntry> = serde_json::from_str(&std::fs::read_to_string(dir.join(INDEX_FILE))?)?;
        if index.iter().enumerate().any(|(i, e)| e.block_id != i) {
            return Err(Error::Config("block index ids are not consecutive".into()));
        }
        Ok(BlockStore { dir: dir.to_path_buf(), index, loaded: BTreeMap::new() })
    }

    pub fn index(&self) -> &[BlockIndexEntry] {
        &self.index
    }

    pub fn is_loaded(&self, block: usize) -> bool {
        self.loaded.contains_key(&block)
    }

    /// Reads a block's byte range and materializes its objects.
    pub fn load(&mut self, block: usize) -> Result<()> {
        if self.is_loaded(block) {
            return Ok(());
        }
        let e = self.index.get(block).ok_or(Error::IndexOutOfRange { index: block, len: self.index.len() })?;
        let mut f = File::open(self.dir.join(SPILL_FILE))?;
        f.seek(SeekFrom::Start(e.byte_lo))?;
        let mut buf = vec![0u8; (e.byte_hi - e.byte_lo) as usize];
        f.read_exact(&mut buf)?;
        let objects: Vec<Object> = buf
            .split(|b| *b == b'\n')
            .filter(|l| !l.is_empty())
            .map(serde_json::from_slice)
            .collect::<std::result::Result<_, _>>()?;
        if objects.len() != e.object_ids.len() || objects.iter().zip(&e.object_ids).any(|(o, id)| &o.id != id) {
            return Err(Error::Config(format!("block {block} does not match its index entry")));
        }
        self.loaded.insert(block, objects);
        Ok(())
    }

    /// Drops a block's materialized objects.
    pub fn flush(&mut self, block: usize) {
        self.loaded.remove(&block);
    }

    pub fn payload(&self, block: usize, slot: usize) -> Option<&Object> {
        self.loaded.get(&block).and_then(|v| v.get(slot))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(i: usize) -> Object {
        let mut o = Object { id: format!("o{i}"), precise: BTreeMap::new(), truth: BTreeMap::new() };
        o.truth.insert("Gender".into(), if i.is_multiple_of(2) { "Male".into() } else { "Female".into() });
        o
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let objects: Vec<Object> = (0..5).map(obj).collect();
        let blocks = vec![Block { id: 0, objects: vec![4, 2] }, Block { id: 1, objects: vec![0, 1, 3] }];
        let mut s = BlockStore::create(dir.path(), &blocks, &objects).unwrap();
        assert_eq!(s.index()[1].object_ids, vec!["o0", "o1", "o3"]);
        assert!(s.payload(1, 0).is_none());
        s.load(1).unwrap();
        assert_eq!(s.payload(1, 2), Some(&objects[3]));
        s.flush(1);
        assert!(!s.is_loaded(1));
        let mut reopened = BlockStore::open(dir.path()).unwrap();
        reopened.load(0).unwrap();
        assert_eq!(reopened.payload(0, 0), Some(&objects[4]));
    }
}
