use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// First line of every CSV: artifact version and a hash of the inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
    pub extra: String,
}

impl Provenance {
    /// Hashes the config text; `extra` records command-line overrides.
    pub fn new(config_text: &str, extra: impl Into<String>) -> Self {
        Self { config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())), extra: extra.into() }
    }

    pub fn comment(&self) -> String {
        let mut s = format!("quc {} config_sha256={}", env!("CARGO_PKG_VERSION"), self.config_sha256);
        if !self.extra.is_empty() {
            s.push(' ');
            s.push_str(&self.extra);
        }
        s
    }
}

/// Where artifacts go and what they are called.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub stem: String,
    pub provenance: Provenance,
}

impl Sink {
    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}_{suffix}.csv", self.stem))
    }

    /// Writes `rows` to `<dir>/<stem>_<suffix>.csv`.
    pub fn write<T: Serialize>(&self, suffix: &str, rows: &[T]) -> anyhow::Result<PathBuf> {
        let path = self.path(suffix);
        write_csv(&path, &self.provenance, rows)?;
        Ok(path)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, prov: &Provenance, rows: &[T]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# {}", prov.comment())?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}
