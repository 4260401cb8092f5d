//! Atomic file output and the pipeline manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, std::io::Error> {
    std::fs::read_to_string(path)
}

/// A file written by an earlier step, pinned by content digest. Paths are
/// relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    pub path: PathBuf,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitEntry {
    pub input_digest: String,
    pub model: FileRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateEntry {
    pub id: u64,
    #[serde(flatten)]
    pub file: FileRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationEntry {
    pub model: FileRef,
    pub seed: u64,
    pub start: String,
    pub end: String,
    pub as_depth: bool,
    pub replicates: Vec<ReplicateEntry>,
}

/// `manifest.json`: what each pipeline step produced, so later steps can find
/// and verify their inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub format_version: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<FitEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub simulation: Option<SimulationEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            format: "latgen-manifest".into(),
            format_version: MANIFEST_FORMAT_VERSION,
            fit: None,
            simulation: None,
        }
    }
}

impl Manifest {
    /// Loads the manifest at `path`, or an empty one if the file does not exist.
    pub fn load_or_default(path: &Path) -> Result<Self, String> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text).map_err(|e| format!("{}: {e}", path.display())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(format!("{}: {e}", path.display())),
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if m.format != "latgen-manifest" || m.format_version != MANIFEST_FORMAT_VERSION {
            return Err(format!("unsupported manifest {} v{}", m.format, m.format_version));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }
}

/// `path` relative to `base` when it lies inside it, otherwise unchanged.
pub fn relative_to(path: &Path, base: &Path) -> PathBuf {
    path.strip_prefix(base).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf())
}

/// Resolves a manifest path against the output directory.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path().join("a")).unwrap().count(), 1);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        assert_eq!(Manifest::load_or_default(&p).unwrap(), Manifest::default());
        let m = Manifest {
            fit: Some(FitEntry {
                input_digest: "sha256:00".into(),
                model: FileRef {
                    path: "model.json".into(),
                    digest: "sha256:11".into(),
                },
            }),
            ..Manifest::default()
        };
        m.save(&p).unwrap();
        assert_eq!(Manifest::load_or_default(&p).unwrap(), m);
        assert!(Manifest::parse(r#"{"format": "x", "format_version": 1}"#).is_err());
    }
}
