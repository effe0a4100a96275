//! Append-only block log plus a head pointer file.
//!
//! `blocks.log` holds one record per block: a big-endian `u32` length and
//! the canonical block bytes. `HEAD` holds the hex hash of the last block.
//! State is never stored; it is rebuilt by replaying the log.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;
use tracing::warn;

use fundchain_core::codec::DecodeError;
use fundchain_core::{Block, Decode, Digest, Encode};

pub const LOG_FILE: &str = "blocks.log";
pub const HEAD_FILE: &str = "HEAD";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("block log i/o: {0}")]
    Io(#[from] io::Error),
    #[error("block record {index} is corrupt: {source}")]
    Corrupt { index: usize, source: DecodeError },
}

#[derive(Debug)]
pub struct BlockLog {
    dir: PathBuf,
    file: File,
}

impl BlockLog {
    /// Opens the log under `dir` and returns the stored blocks. A torn
    /// final record (crash mid-append) is cut off.
    pub fn open(dir: &Path) -> Result<(Self, Vec<Block>), StoreError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)?;

        let mut blocks = Vec::new();
        let mut pos = 0usize;
        while pos < buf.len() {
            let Some(len_bytes) = buf.get(pos..pos + 4) else {
                break;
            };
            let len = u32::from_be_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
            let Some(body) = buf.get(pos + 4..pos + 4 + len) else {
                break;
            };
            let block =
                Block::from_canonical_bytes(body).map_err(|source| StoreError::Corrupt {
                    index: blocks.len(),
                    source,
                })?;
            blocks.push(block);
            pos += 4 + len;
        }
        if pos < buf.len() {
            warn!(
                dropped = buf.len() - pos,
                "truncating incomplete record at end of block log"
            );
            file.set_len(pos as u64)?;
            file.sync_all()?;
        }

        let log = Self {
            dir: dir.to_path_buf(),
            file,
        };
        if let Some(last) = blocks.last() {
            if log.read_head()? != Some(last.hash()) {
                log.write_head(&last.hash())?;
            }
        }
        Ok((log, blocks))
    }

    pub fn append(&mut self, block: &Block) -> Result<(), StoreError> {
        let body = block.to_canonical_bytes();
        let len = u32::try_from(body.len())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "block too large"))?;
        let mut record = Vec::with_capacity(4 + body.len());
        record.extend_from_slice(&len.to_be_bytes());
        record.extend_from_slice(&body);
        self.file.write_all(&record)?;
        self.file.sync_data()?;
        self.write_head(&block.hash())
    }

    pub fn read_head(&self) -> Result<Option<Digest>, StoreError> {
        match fs::read_to_string(self.dir.join(HEAD_FILE)) {
            Ok(s) => Ok(s.trim().parse().ok()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn write_head(&self, hash: &Digest) -> Result<(), StoreError> {
        let tmp = self.dir.join("HEAD.tmp");
        fs::write(&tmp, format!("{hash}\n"))?;
        fs::rename(&tmp, self.dir.join(HEAD_FILE))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fundchain_core::{Difficulty, GenesisConfig};

    #[test]
    fn round_trip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let g = GenesisConfig::new(Difficulty::new(0).unwrap()).genesis_block();
        {
            let (mut log, blocks) = BlockLog::open(dir.path()).unwrap();
            assert!(blocks.is_empty());
            log.append(&g).unwrap();
            assert_eq!(log.read_head().unwrap(), Some(g.hash()));
        }
        // Half-written second record.
        let mut f = OpenOptions::new()
            .append(true)
            .open(dir.path().join(LOG_FILE))
            .unwrap();
        f.write_all(&[0, 0, 0, 50, 1, 2]).unwrap();
        drop(f);

        let (_, blocks) = BlockLog::open(dir.path()).unwrap();
        assert_eq!(blocks, vec![g.clone()]);
        let len = fs::metadata(dir.path().join(LOG_FILE)).unwrap().len();
        assert_eq!(len as usize, 4 + g.to_canonical_bytes().len());
    }
}
