//! Content-addressed response cache: one JSON document per request digest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    op: String,
    arg: String,
    body: String,
}

/// Disk-backed cache keyed by `(operation, canonicalized argument)`.
/// Readers can run concurrently; writes go through a temp file and an atomic
/// rename.
pub struct ResponseCache {
    dir: Option<PathBuf>,
    lock: RwLock<()>,
}

impl ResponseCache {
    pub fn new(dir: Option<PathBuf>) -> std::io::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir, lock: RwLock::new(()) })
    }

    fn path_for(&self, op: &str, arg: &str) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let mut hasher = Sha256::new();
        hasher.update(op.as_bytes());
        hasher.update([0]);
        hasher.update(arg.as_bytes());
        Some(dir.join(format!("{}.json", hex::encode(hasher.finalize()))))
    }

    pub fn get(&self, op: &str, arg: &str) -> Option<String> {
        let path = self.path_for(op, arg)?;
        let _guard = self.lock.read().expect("cache lock");
        let text = fs::read_to_string(path).ok()?;
        let record: CacheRecord = serde_json::from_str(&text).ok()?;
        Some(record.body)
    }

    pub fn put(&self, op: &str, arg: &str, body: &str) -> std::io::Result<()> {
        let Some(path) = self.path_for(op, arg) else {
            return Ok(());
        };
        let record = CacheRecord {
            op: op.to_string(),
            arg: arg.to_string(),
            body: body.to_string(),
        };
        let _guard = self.lock.write().expect("cache lock");
        write_atomically(&path, &serde_json::to_string(&record).expect("cache record json"))
    }
}

fn write_atomically(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}
