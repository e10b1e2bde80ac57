//! Output directory handling: an exclusive lock for the duration of a run and
//! per-point result files that let an interrupted run resume.

use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const LOCK_NAME: &str = ".fluxgate.lock";

pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    /// Creates `root` if needed and takes the lock; fails if another run holds it.
    pub fn acquire(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        let lock = root.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id()).with_context(|| format!("writing {}", lock.display()))?;
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                bail!("output directory {} is locked by another run (remove {} if stale)", root.display(), lock.display())
            }
            Err(e) => return Err(e).with_context(|| format!("creating {}", lock.display())),
        }
        Ok(OutputDir { root: root.to_path_buf(), lock })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn point_path(&self, stage: &str, index: usize) -> PathBuf {
        self.root.join("points").join(format!("{stage}_{index:05}.json"))
    }

    /// A previously stored point, if present and computed for the same `key`.
    pub fn load_point<K, V>(&self, stage: &str, index: usize, key: &K) -> Option<V>
    where
        K: Serialize + DeserializeOwned + PartialEq,
        V: DeserializeOwned,
    {
        let text = fs::read_to_string(self.point_path(stage, index)).ok()?;
        let (stored, value): (K, V) = serde_json::from_str(&text).ok()?;
        (stored == *key).then_some(value)
    }

    pub fn store_point<K: Serialize, V: Serialize>(&self, stage: &str, index: usize, key: &K, value: &V) -> Result<()> {
        let path = self.point_path(stage, index);
        fs::create_dir_all(path.parent().unwrap())?;
        let tmp = path.with_extension("tmp");
        let mut f = File::create(&tmp).with_context(|| format!("writing {}", tmp.display()))?;
        serde_json::to_writer(&mut f, &(key, value))?;
        f.sync_all()?;
        fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
