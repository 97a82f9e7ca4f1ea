//! Per-run manifests. The resolved configuration sits at the top level, so a
//! manifest can be passed back as `--config` to replay the run; `[run]`,
//! `[derived]` and `[outputs]` are bookkeeping that the loader ignores.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::config::Config;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Manifest {
    command: &'static str,
    started: SystemTime,
    clock: Instant,
    inputs: Table,
    derived: Table,
    outputs: Table,
}

impl Manifest {
    pub fn start(command: &'static str) -> Self {
        Manifest {
            command,
            started: SystemTime::now(),
            clock: Instant::now(),
            inputs: Table::new(),
            derived: Table::new(),
            outputs: Table::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.into(), Value::String(path.display().to_string()));
    }

    pub fn derived(&mut self, name: &str, value: impl Into<Value>) {
        self.derived.insert(name.into(), value.into());
    }

    /// Writes `bytes` to `path` and records its checksum.
    pub fn write_output(&mut self, name: &str, path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        std::fs::write(path, bytes)
            .map_err(|e| anyhow::Error::new(e).context(format!("writing {}", path.display())))?;
        let mut entry = Table::new();
        entry.insert("path".into(), Value::String(path.display().to_string()));
        entry.insert("sha256".into(), Value::String(sha256_hex(bytes)));
        self.outputs.insert(name.into(), Value::Table(entry));
        Ok(())
    }

    pub fn finish(self, config: &Config, path: &Path) -> anyhow::Result<PathBuf> {
        let mut root: Table = toml::from_str(&config.to_toml()).expect("config serializes to a table");
        let mut run = Table::new();
        run.insert("command".into(), Value::String(self.command.into()));
        run.insert("engine_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        let unix = self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        run.insert("started_unix".into(), Value::Integer(unix as i64));
        run.insert("wall_clock_s".into(), Value::Float(self.clock.elapsed().as_secs_f64()));
        run.insert("inputs".into(), Value::Table(self.inputs));
        root.insert("run".into(), Value::Table(run));
        root.insert("derived".into(), Value::Table(self.derived));
        root.insert("outputs".into(), Value::Table(self.outputs));
        std::fs::write(path, toml::to_string(&root)?)
            .map_err(|e| anyhow::Error::new(e).context(format!("writing {}", path.display())))?;
        Ok(path.to_path_buf())
    }
}

/// `out/data.ptyd` → `out/data.manifest.toml`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}.manifest.toml"))
}
