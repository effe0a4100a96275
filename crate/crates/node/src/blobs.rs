//! Content-addressed receipt store. A blob with hash `0xabcd…` lives at
//! `<root>/ab/cd/abcd…`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use fundchain_core::{hash256, Digest};

#[derive(Debug, Error)]
pub enum BlobError {
    #[error("blob of {size} bytes exceeds the {max}-byte limit")]
    TooLarge { size: usize, max: usize },
    #[error("blob store i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct BlobStore {
    root: PathBuf,
    max_bytes: usize,
}

impl BlobStore {
    pub fn open(root: &Path, max_bytes: usize) -> Result<Self, BlobError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            max_bytes,
        })
    }

    pub fn max_bytes(&self) -> usize {
        self.max_bytes
    }

    pub fn path_for(&self, hash: &Digest) -> PathBuf {
        let hex = hex::encode(hash.as_bytes());
        self.root.join(&hex[0..2]).join(&hex[2..4]).join(hex)
    }

    /// Stores `bytes` and returns their hash. Existing content is left alone.
    pub fn put(&self, bytes: &[u8]) -> Result<Digest, BlobError> {
        if bytes.len() > self.max_bytes {
            return Err(BlobError::TooLarge {
                size: bytes.len(),
                max: self.max_bytes,
            });
        }
        let hash = hash256(bytes);
        let path = self.path_for(&hash);
        if path.exists() {
            return Ok(hash);
        }
        let dir = path.parent().expect("fan-out dir");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".tmp-{}", std::process::id()));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        Ok(hash)
    }

    pub fn get(&self, hash: &Digest) -> Result<Option<Vec<u8>>, BlobError> {
        match fs::read(self.path_for(hash)) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}
