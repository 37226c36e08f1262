use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::{ChatMessage, GatewayError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: usize,
    pub backend: String,
    pub messages: Vec<ChatMessage>,
    pub reply: Option<String>,
    pub error: Option<String>,
}

#[derive(Default)]
struct Inner {
    entries: Vec<TranscriptEntry>,
    sink: Option<(PathBuf, File)>,
}

/// Append-only log of every exchange with a backend. Cloning shares the log.
#[derive(Clone, Default)]
pub struct Transcript {
    inner: Arc<Mutex<Inner>>,
}

impl std::fmt::Debug for Transcript {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transcript").field("len", &self.len()).finish()
    }
}

impl Transcript {
    pub fn in_memory() -> Self {
        Transcript::default()
    }

    /// Loads existing entries from `path` (JSON Lines) and appends new ones to it.
    pub fn file_backed(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = Vec::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                entries.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Transcript {
            inner: Arc::new(Mutex::new(Inner {
                entries,
                sink: Some((path, file)),
            })),
        })
    }

    pub(crate) fn record(
        &self,
        backend: &str,
        messages: &[ChatMessage],
        result: &Result<String, GatewayError>,
    ) {
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        let entry = TranscriptEntry {
            seq: inner.entries.len(),
            backend: backend.to_string(),
            messages: messages.to_vec(),
            reply: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(|e| e.to_string()),
        };
        if let Some((path, file)) = &mut inner.sink {
            let line = serde_json::to_string(&entry).expect("entry serializes");
            if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
                eprintln!("transcript {}: {e}", path.display());
            }
        }
        inner.entries.push(entry);
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).entries.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every prompt message sent, in order.
    pub fn prompts(&self) -> Vec<String> {
        self.entries()
            .into_iter()
            .flat_map(|e| e.messages.into_iter().map(|m| m.content))
            .collect()
    }

    /// True if `needle` occurs in any message or reply.
    pub fn contains(&self, needle: &str) -> bool {
        self.entries().iter().any(|e| {
            e.messages.iter().any(|m| m.content.contains(needle))
                || e.reply.as_deref().is_some_and(|r| r.contains(needle))
        })
    }
}
