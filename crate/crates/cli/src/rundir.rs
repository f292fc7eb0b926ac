//! Output directory of one command invocation.

use std::cell::RefCell;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

pub struct RunDir {
    pub path: PathBuf,
    created: String,
    files: RefCell<Vec<String>>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    created: &'a str,
    version: &'a str,
    files: &'a [String],
}

impl RunDir {
    /// Uses `explicit` when given, else `$WRSN_OUT/<timestamp>-<command>`
    /// (default root `runs`), with a numeric suffix on collision.
    pub fn create(explicit: Option<PathBuf>, command: &str) -> Result<Self> {
        let now = chrono::Local::now();
        let path = match explicit {
            Some(p) => p,
            None => {
                let root = std::env::var_os("WRSN_OUT").map(PathBuf::from).unwrap_or_else(|| "runs".into());
                let stem = format!("{}-{command}", now.format("%Y%m%d-%H%M%S"));
                let mut p = root.join(&stem);
                let mut n = 1;
                while p.exists() {
                    p = root.join(format!("{stem}-{n}"));
                    n += 1;
                }
                p
            }
        };
        fs::create_dir_all(&path).with_context(|| format!("creating run directory {}", path.display()))?;
        Ok(RunDir {
            path,
            created: now.to_rfc3339(),
            files: RefCell::new(Vec::new()),
        })
    }

    /// Path of an output file, recorded in the manifest.
    pub fn file(&self, name: &str) -> PathBuf {
        self.files.borrow_mut().push(name.to_string());
        self.path.join(name)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.file(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    pub fn finish(&self, command: &str) -> Result<()> {
        let files = self.files.borrow().clone();
        let m = RunManifest {
            command,
            created: &self.created,
            version: env!("CARGO_PKG_VERSION"),
            files: &files,
        };
        let s = serde_json::to_string_pretty(&m)? + "\n";
        let p = self.path.join("manifest.json");
        fs::write(&p, s).with_context(|| format!("writing {}", p.display()))
    }
}
