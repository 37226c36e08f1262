//! On-disk persistence: one directory per session holding an append-only
//! `events.jsonl` and the uploaded files.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use lpchat_pipeline::{Event, FileSource, Session, SessionError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt event log {path} line {line}: {detail}")]
    Corrupt { path: PathBuf, line: usize, detail: String },
    #[error("{0}")]
    Replay(#[from] SessionError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

/// Session ids are generated by the service; anything else is rejected
/// before it can touch the filesystem.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

impl Store {
    /// Creates the directory layout and proves it is writable.
    pub fn open(data_dir: &Path) -> Result<Store, StoreError> {
        let root = data_dir.join("sessions");
        fs::create_dir_all(&root).map_err(io(&root))?;
        let probe = data_dir.join(".write-probe");
        fs::write(&probe, b"ok").map_err(io(&probe))?;
        fs::remove_file(&probe).map_err(io(&probe))?;
        Ok(Store { root })
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    fn log(&self, id: &str) -> PathBuf {
        self.dir(id).join("events.jsonl")
    }

    pub fn files_dir(&self, id: &str) -> PathBuf {
        self.dir(id).join("files")
    }

    pub fn exists(&self, id: &str) -> bool {
        is_valid_id(id) && self.log(id).is_file()
    }

    pub fn ids(&self) -> Result<Vec<String>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io(&self.root))? {
            let entry = entry.map_err(io(&self.root))?;
            let name = entry.file_name().to_string_lossy().to_string();
            if self.exists(&name) {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Appends events, one JSON line each, written and flushed per event.
    pub fn append(&self, id: &str, events: &[Event]) -> Result<(), StoreError> {
        if events.is_empty() {
            return Ok(());
        }
        let dir = self.dir(id);
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let path = self.log(id);
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io(&path))?;
        for e in events {
            let mut line = serde_json::to_vec(e).expect("events serialize");
            line.push(b'\n');
            f.write_all(&line).map_err(io(&path))?;
            f.flush().map_err(io(&path))?;
        }
        f.sync_data().map_err(io(&path))?;
        Ok(())
    }

    pub fn events(&self, id: &str) -> Result<Vec<Event>, StoreError> {
        let path = self.log(id);
        let mut text = fs::read_to_string(&path).map_err(io(&path))?;
        if !text.is_empty() && !text.ends_with('\n') {
            // A torn final write from a crash; that request never got its
            // response, so the partial event is dropped.
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            tracing::warn!("{}: dropping torn tail of {} bytes", path.display(), text.len() - keep);
            let f = OpenOptions::new().write(true).open(&path).map_err(io(&path))?;
            f.set_len(keep as u64).map_err(io(&path))?;
            f.sync_data().map_err(io(&path))?;
            text.truncate(keep);
        }
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    detail: e.to_string(),
                })
            })
            .collect()
    }

    pub fn load(&self, id: &str) -> Result<Session, StoreError> {
        Ok(Session::replay(self.events(id)?)?)
    }

    /// Writes through a temporary file so readers never see partial data.
    pub fn save_file(&self, id: &str, name: &str, bytes: &[u8]) -> Result<(), StoreError> {
        let dir = self.files_dir(id);
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let tmp = dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(io(&tmp))?;
        let dest = dir.join(name);
        fs::rename(&tmp, &dest).map_err(io(&dest))?;
        Ok(())
    }

    pub fn file_source(&self, id: &str) -> DirFiles {
        DirFiles {
            dir: self.files_dir(id),
        }
    }
}

/// Uploaded files of one session.
pub struct DirFiles {
    dir: PathBuf,
}

impl FileSource for DirFiles {
    fn read(&self, name: &str) -> Option<Vec<u8>> {
        if !is_valid_file_name(name) {
            return None;
        }
        fs::read(self.dir.join(name)).ok()
    }
}

/// Plain names only: no separators, no leading dot.
pub fn is_valid_file_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '.' | '-' | '_' | ' '))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn append_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let mut s = Session::new("abc");
        s.record(Event::DescriptionSet { text: "d".into() }).unwrap();
        store.append("abc", &s.take_pending()).unwrap();
        assert_eq!(store.ids().unwrap(), ["abc"]);
        assert_eq!(store.load("abc").unwrap(), s);
    }

    #[test]
    fn names_and_ids() {
        assert!(is_valid_id("0f3a-11"));
        assert!(!is_valid_id("../x"));
        assert!(is_valid_file_name("capacity.csv"));
        assert!(!is_valid_file_name("../capacity.csv"));
        assert!(!is_valid_file_name(".hidden.csv"));
        assert!(!is_valid_file_name("a/b.csv"));
    }

    #[test]
    fn unwritable_dir_fails_at_open() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("not-a-dir");
        fs::write(&file, b"x").unwrap();
        assert!(Store::open(&file).is_err());
    }

    #[test]
    fn torn_tail_is_dropped_and_appends_continue() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let mut s = Session::new("abc");
        store.append("abc", &s.take_pending()).unwrap();
        let before = store.load("abc").unwrap();
        let mut f = OpenOptions::new().append(true).open(store.log("abc")).unwrap();
        f.write_all(b"{\"event\":\"description_set\",\"te").unwrap();
        drop(f);
        assert_eq!(store.load("abc").unwrap(), before);

        s.record(Event::DescriptionSet { text: "d".into() }).unwrap();
        store.append("abc", &s.take_pending()).unwrap();
        assert_eq!(store.load("abc").unwrap(), s);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let mut s = Session::new("abc");
        store.append("abc", &s.take_pending()).unwrap();
        fs::write(store.log("abc"), "garbage\n").unwrap();
        assert!(matches!(store.load("abc"), Err(StoreError::Corrupt { line: 1, .. })));
    }
}
