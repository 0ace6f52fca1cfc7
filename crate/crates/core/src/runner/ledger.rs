//! Append-only JSON-Lines trial ledger.
//!
//! Every record is written as one line and synced before the trial counts
//! as done. A torn or otherwise unparseable line is moved to a
//! `<ledger>.quarantine` side file on resume so later appends stay clean.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::record::{TrialKey, TrialRecord};
use crate::error::{Error, Result};

pub fn quarantine_path(ledger: &Path) -> PathBuf {
    let mut name = ledger.as_os_str().to_owned();
    name.push(".quarantine");
    PathBuf::from(name)
}

/// Parsed ledger contents plus the raw lines that failed to parse.
#[derive(Debug, Default, Clone)]
pub struct LedgerSnapshot {
    pub records: Vec<TrialRecord>,
    pub corrupt: Vec<String>,
}

impl LedgerSnapshot {
    /// One record per key: the ok record when there is one, otherwise the
    /// latest attempt. Keys come out in sorted order.
    pub fn latest(&self) -> Vec<&TrialRecord> {
        let mut by_key: BTreeMap<&TrialKey, &TrialRecord> = BTreeMap::new();
        for rec in &self.records {
            match by_key.get(&rec.key) {
                Some(prev) if prev.is_ok() => {}
                _ => {
                    by_key.insert(&rec.key, rec);
                }
            }
        }
        by_key.into_values().collect()
    }
}

/// Reads a ledger without modifying it. A missing file is an empty ledger.
pub fn read_ledger(path: &Path) -> Result<LedgerSnapshot> {
    let mut snap = LedgerSnapshot::default();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(snap),
        Err(e) => return Err(Error::io(path, e)),
    };
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRecord>(&line) {
            Ok(rec) => snap.records.push(rec),
            Err(_) => snap.corrupt.push(line),
        }
    }
    Ok(snap)
}

/// Moves corrupt lines to the quarantine file and rewrites the ledger with
/// the parseable ones. Returns the number of lines moved.
pub fn quarantine_corrupt(path: &Path) -> Result<usize> {
    let snap = read_ledger(path)?;
    if snap.corrupt.is_empty() {
        return Ok(0);
    }
    let qpath = quarantine_path(path);
    let mut q = OpenOptions::new().create(true).append(true).open(&qpath).map_err(|e| Error::io(&qpath, e))?;
    for line in &snap.corrupt {
        writeln!(q, "{line}").map_err(|e| Error::io(&qpath, e))?;
    }
    q.sync_all().map_err(|e| Error::io(&qpath, e))?;

    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    {
        let mut out = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        for rec in &snap.records {
            let json = serde_json::to_string(rec)?;
            writeln!(out, "{json}").map_err(|e| Error::io(&tmp, e))?;
        }
        out.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    tracing::warn!(count = snap.corrupt.len(), quarantine = %qpath.display(), "quarantined corrupt ledger lines");
    Ok(snap.corrupt.len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResumePlan {
    pub remaining: Vec<TrialKey>,
    pub quarantined: usize,
}

/// Drops keys that already have an ok record. Keys whose only records are
/// failures stay queued when `requeue_errors` is set.
pub fn resume_filter(plan: &[TrialKey], ledger: &Path, requeue_errors: bool) -> Result<ResumePlan> {
    let quarantined = quarantine_corrupt(ledger)?;
    let snap = read_ledger(ledger)?;
    let done: HashSet<&TrialKey> =
        snap.records.iter().filter(|r| r.is_ok() || !requeue_errors).map(|r| &r.key).collect();
    let remaining = plan.iter().filter(|k| !done.contains(k)).cloned().collect();
    Ok(ResumePlan { remaining, quarantined })
}

/// Single writer for a ledger file.
pub struct LedgerWriter {
    path: PathBuf,
    file: File,
}

impl LedgerWriter {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut file =
            OpenOptions::new().create(true).read(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
        // A torn final line must not swallow the next record.
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        if len > 0 {
            let mut last = [0u8; 1];
            file.seek(SeekFrom::Start(len - 1)).map_err(|e| Error::io(path, e))?;
            file.read_exact(&mut last).map_err(|e| Error::io(path, e))?;
            if last[0] != b'\n' {
                file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
                file.sync_data().map_err(|e| Error::io(path, e))?;
            }
        }
        Ok(LedgerWriter { path: path.to_path_buf(), file })
    }

    /// Appends one record and syncs it to disk.
    pub fn append(&mut self, record: &TrialRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).and_then(|_| self.file.sync_data()).map_err(|e| Error::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::record::TrialStatus;
    use crate::runner::task::TaskType;

    fn key(i: usize) -> TrialKey {
        TrialKey { item_id: format!("item{i}"), condition: "control".into(), model: "m".into(), repetition: 0 }
    }

    fn ok_record(k: TrialKey) -> TrialRecord {
        let mut r = TrialRecord::failed(k, TaskType::Syllogisms, TrialStatus::Ok, String::new(), 3);
        r.response = Some("Answer: B".into());
        r.error = None;
        r
    }

    #[test]
    fn empty_ledger_keeps_plan() {
        let dir = tempfile::tempdir().unwrap();
        let plan: Vec<_> = (0..4).map(key).collect();
        let r = resume_filter(&plan, &dir.path().join("l.jsonl"), true).unwrap();
        assert_eq!(r.remaining, plan);
    }

    #[test]
    fn complete_ledger_empties_plan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.jsonl");
        let plan: Vec<_> = (0..4).map(key).collect();
        let mut w = LedgerWriter::open(&path).unwrap();
        for k in &plan {
            w.append(&ok_record(k.clone())).unwrap();
        }
        assert!(resume_filter(&plan, &path, true).unwrap().remaining.is_empty());
    }

    #[test]
    fn ok_and_timeouts_of_ten() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.jsonl");
        let plan: Vec<_> = (0..10).map(key).collect();
        let mut w = LedgerWriter::open(&path).unwrap();
        for k in &plan[..3] {
            w.append(&ok_record(k.clone())).unwrap();
        }
        for k in &plan[3..5] {
            w.append(&TrialRecord::failed(k.clone(), TaskType::Syllogisms, TrialStatus::Timeout, "t".into(), 1))
                .unwrap();
        }
        let requeued = resume_filter(&plan, &path, true).unwrap();
        assert_eq!(requeued.remaining.len(), 7);
        assert_eq!(requeued.remaining, plan[3..].to_vec());
        let kept = resume_filter(&plan, &path, false).unwrap();
        assert_eq!(kept.remaining.len(), 5);
    }

    #[test]
    fn torn_line_is_quarantined_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.jsonl");
        let plan: Vec<_> = (0..3).map(key).collect();
        {
            let mut w = LedgerWriter::open(&path).unwrap();
            w.append(&ok_record(plan[0].clone())).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"key\":{\"item_id\":\"item1\",\"cond").unwrap();
        drop(f);
        {
            let mut w = LedgerWriter::open(&path).unwrap();
            w.append(&ok_record(plan[2].clone())).unwrap();
        }
        let r = resume_filter(&plan, &path, true).unwrap();
        assert_eq!(r.quarantined, 1);
        assert_eq!(r.remaining, vec![plan[1].clone()]);
        let again = resume_filter(&plan, &path, true).unwrap();
        assert_eq!(again.quarantined, 0);
        let q = std::fs::read_to_string(quarantine_path(&path)).unwrap();
        assert_eq!(q.lines().count(), 1);
        assert_eq!(read_ledger(&path).unwrap().records.len(), 2);
    }

    #[test]
    fn latest_prefers_ok() {
        let k = key(0);
        let snap = LedgerSnapshot {
            records: vec![
                TrialRecord::failed(k.clone(), TaskType::Syllogisms, TrialStatus::Timeout, "t".into(), 1),
                ok_record(k.clone()),
                TrialRecord::failed(k.clone(), TaskType::Syllogisms, TrialStatus::Timeout, "t".into(), 1),
            ],
            corrupt: vec![],
        };
        let latest = snap.latest();
        assert_eq!(latest.len(), 1);
        assert!(latest[0].is_ok());
    }
}
