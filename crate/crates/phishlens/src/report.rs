//! Artifact files. Each is written to a temporary file in the target
//! directory and renamed into place.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use phishlens_core::eval::{CostReport, Pricing, SampleRecord};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::evaluate::EvalRun;

pub const METRICS_FILE: &str = "metrics.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const COST_FILE: &str = "cost.json";

/// Replaces `path` with `contents` in one rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostFile {
    pub profile: String,
    #[serde(flatten)]
    pub pricing: Pricing,
    #[serde(flatten)]
    pub report: CostReport,
}

pub fn records_to_jsonl(records: &[SampleRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Records from an earlier run; a missing file yields none and
/// unreadable lines are skipped.
pub fn read_records(path: &Path) -> io::Result<Vec<SampleRecord>> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(record) => records.push(record),
            Err(e) => log::warn!(
                "{}:{}: ignoring unreadable record: {e}",
                path.display(),
                n + 1
            ),
        }
    }
    Ok(records)
}

/// Writes the four artifacts and returns their paths.
pub fn write_artifacts(
    out_dir: &Path,
    run: &EvalRun,
    pricing: Pricing,
) -> io::Result<Vec<PathBuf>> {
    let cost = CostFile {
        profile: run.summary.profile.clone(),
        pricing,
        report: run.cost,
    };
    let files = [
        (METRICS_FILE, pretty(&run.summary)),
        (RECORDS_FILE, records_to_jsonl(&run.records)),
        (HISTOGRAM_FILE, run.histogram.to_csv()),
        (COST_FILE, pretty(&cost)),
    ];
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = out_dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn missing_records_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(read_records(&dir.path().join("records.jsonl"))
            .unwrap()
            .is_empty());
    }
}
