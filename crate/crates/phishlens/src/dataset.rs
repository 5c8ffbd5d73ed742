//! Labeled corpora on disk: `<root>/phishing/*.eml` and
//! `<root>/legitimate/*.eml`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use phishlens_core::eval::Label;
use phishlens_core::{parse_eml, RawEmail};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub path: PathBuf,
    pub label: Label,
}

impl LabeledSample {
    pub fn read(&self) -> io::Result<RawEmail> {
        let bytes = fs::read(&self.path)?;
        RawEmail::new(bytes)
            .map(|raw| raw.with_source(self.path.display().to_string()))
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("no usable .eml files under {0}")]
    EmptyDataset(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn is_eml(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("eml"))
}

/// Lists every `.eml` file under the label directories, sorted by path.
/// Files that cannot be read or parsed are skipped and logged.
pub fn load_dataset(root: &Path) -> Result<Dataset, DatasetError> {
    let mut dataset = Dataset::default();
    for label in [Label::Legitimate, Label::Phishing] {
        let dir = root.join(label.name());
        if !dir.is_dir() {
            continue;
        }
        let entries = fs::read_dir(&dir).map_err(|source| DatasetError::Io {
            path: dir.clone(),
            source,
        })?;
        for entry in entries {
            let entry = entry.map_err(|source| DatasetError::Io {
                path: dir.clone(),
                source,
            })?;
            let path = entry.path();
            if !path.is_file() || !is_eml(&path) {
                continue;
            }
            let sample = LabeledSample { path, label };
            let check = sample.read().and_then(|raw| {
                parse_eml(&raw)
                    .map(|_| ())
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
            });
            match check {
                Ok(()) => dataset.samples.push(sample),
                Err(e) => {
                    log::warn!("skipping {}: {e}", sample.path.display());
                    dataset.skipped.push(Skipped {
                        path: sample.path,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    if dataset.samples.is_empty() {
        return Err(DatasetError::EmptyDataset(root.to_path_buf()));
    }
    dataset.samples.sort_by(|a, b| a.path.cmp(&b.path));
    dataset.skipped.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(dataset)
}

/// Hex SHA-256 of a message.
pub fn content_hash(raw: &RawEmail) -> String {
    hex::encode(Sha256::digest(raw.bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(root: &Path, rel: &str, text: &str) {
        let path = root.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }

    const OK: &str = "From: a@b\r\nSubject: s\r\n\r\nbody\r\n";

    #[test]
    fn counts_and_order() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "phishing/b.eml",
            "phishing/a.eml",
            "legitimate/c.eml",
            "legitimate/e.eml",
            "legitimate/d.eml",
        ] {
            write(dir.path(), name, OK);
        }
        write(dir.path(), "legitimate/notes.txt", "ignored");
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.samples.len(), 5);
        let names: Vec<_> = ds
            .samples
            .iter()
            .map(|s| s.path.file_name().unwrap().to_str().unwrap())
            .collect();
        assert_eq!(names, ["c.eml", "d.eml", "e.eml", "a.eml", "b.eml"]);
        assert_eq!(ds.samples[3].label, Label::Phishing);
    }

    #[test]
    fn empty_root() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(DatasetError::EmptyDataset(_))
        ));
    }

    #[test]
    fn corrupt_file_skipped() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..9 {
            write(dir.path(), &format!("phishing/{i}.eml"), OK);
        }
        write(
            dir.path(),
            "phishing/corrupt.eml",
            "garbage without any header separator",
        );
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.samples.len(), 9);
        assert_eq!(ds.skipped.len(), 1);
        assert!(ds.skipped[0].path.ends_with("corrupt.eml"));
    }

    #[test]
    fn empty_file_skipped() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "legitimate/ok.eml", OK);
        write(dir.path(), "legitimate/empty.eml", "");
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!((ds.samples.len(), ds.skipped.len()), (1, 1));
    }
}
