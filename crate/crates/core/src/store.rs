//! File-backed store for diagrams and wizard sessions.
//!
//! Layout on disk:
//!
//! ```text
//! <root>/diagrams/<id>.cpd.json
//! <root>/sessions/<id>.json
//! ```
//!
//! Every write goes to a temporary file in the target directory which is
//! synced and then renamed over the destination, so a reader (or a process
//! restarted after a crash) sees either the old or the new document.
//! Mutations of one id are serialized; reads never block on them.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{self, Diagram, DiagramId, FormatError};
use crate::recommend::WizardSession;

const DIAGRAM_SUFFIX: &str = ".cpd.json";
const SESSION_SUFFIX: &str = ".json";
const MAX_ID_LEN: usize = 128;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid id {0:?}: use 1-128 letters, digits, '-', '_' or '.', not starting with '.'")]
    InvalidId(String),
    #[error("{what} {id} not found")]
    NotFound { what: &'static str, id: String },
    #[error("{what} {id} already exists")]
    Conflict { what: &'static str, id: String },
    #[error("{path}: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{path}: {message}")]
    CorruptSession { path: PathBuf, message: String },
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Index entry for one stored diagram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramSummary {
    pub id: DiagramId,
    pub title: String,
    pub modified: DateTime<Utc>,
    pub elements: usize,
    pub connections: usize,
}

impl DiagramSummary {
    fn of(d: &Diagram) -> Self {
        Self {
            id: d.id().clone(),
            title: d.title().to_string(),
            modified: d.modified(),
            elements: d.elements().len(),
            connections: d.connections().len(),
        }
    }
}

pub fn validate_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= MAX_ID_LEN
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

/// Writes `bytes` to `path` via a synced temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::Builder::new()
        .prefix(".tmp-")
        .tempfile_in(dir)
        .map_err(|e| StoreError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| StoreError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| StoreError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| StoreError::io(path, e.error))?;
    sync_dir(dir);
    Ok(())
}

#[cfg(unix)]
fn sync_dir(dir: &Path) {
    if let Ok(f) = fs::File::open(dir) {
        let _ = f.sync_all();
    }
}

#[cfg(not(unix))]
fn sync_dir(_: &Path) {}

type Index = Arc<BTreeMap<String, DiagramSummary>>;

pub struct Store {
    root: PathBuf,
    diagrams: PathBuf,
    sessions: PathBuf,
    index: RwLock<Index>,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    skipped: Vec<PathBuf>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("root", &self.root).finish_non_exhaustive()
    }
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root` and rebuilds the
    /// diagram index from the directory. Leftover temporary files are
    /// removed; unreadable documents are skipped and reported by
    /// [`Store::skipped`].
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let diagrams = root.join("diagrams");
        let sessions = root.join("sessions");
        for dir in [&diagrams, &sessions] {
            fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
            // probe writability up front so startup fails loudly
            let probe = tempfile::Builder::new()
                .prefix(".tmp-probe-")
                .tempfile_in(dir)
                .map_err(|e| StoreError::io(dir, e))?;
            drop(probe);
        }
        let mut store = Self {
            root,
            diagrams,
            sessions,
            index: RwLock::new(Arc::default()),
            locks: Mutex::default(),
            skipped: Vec::new(),
        };
        store.rebuild()?;
        Ok(store)
    }

    fn rebuild(&mut self) -> Result<(), StoreError> {
        let mut index = BTreeMap::new();
        let mut skipped = Vec::new();
        for dir in [&self.diagrams, &self.sessions] {
            for entry in fs::read_dir(dir).map_err(|e| StoreError::io(dir, e))? {
                let entry = entry.map_err(|e| StoreError::io(dir, e))?;
                let name = entry.file_name().to_string_lossy().into_owned();
                if name.starts_with(".tmp-") {
                    let _ = fs::remove_file(entry.path());
                }
            }
        }
        let mut names: Vec<_> = fs::read_dir(&self.diagrams)
            .map_err(|e| StoreError::io(&self.diagrams, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        for name in names {
            let Some(id) = name.strip_suffix(DIAGRAM_SUFFIX) else {
                continue;
            };
            let path = self.diagrams.join(&name);
            match read_diagram(&path) {
                Ok(d) if d.id().as_str() == id => {
                    index.insert(id.to_string(), DiagramSummary::of(&d));
                }
                Ok(d) => {
                    tracing::warn!(path = %path.display(), id = %d.id(), "file name does not match diagram id");
                    skipped.push(path);
                }
                Err(e) => {
                    tracing::warn!(error = %e, "skipping unreadable diagram");
                    skipped.push(path);
                }
            }
        }
        *self.index.write() = Arc::new(index);
        self.skipped = skipped;
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files found at open time that could not be indexed.
    pub fn skipped(&self) -> &[PathBuf] {
        &self.skipped
    }

    pub fn diagram_path(&self, id: &str) -> PathBuf {
        self.diagrams.join(format!("{id}{DIAGRAM_SUFFIX}"))
    }

    pub fn session_path(&self, id: &str) -> PathBuf {
        self.sessions.join(format!("{id}{SESSION_SUFFIX}"))
    }

    fn lock(&self, key: String) -> Arc<Mutex<()>> {
        self.locks.lock().entry(key).or_default().clone()
    }

    fn update_index(&self, f: impl FnOnce(&mut BTreeMap<String, DiagramSummary>)) {
        let mut guard = self.index.write();
        let mut next = (**guard).clone();
        f(&mut next);
        *guard = Arc::new(next);
    }

    /// Snapshot of the index, sorted by id.
    pub fn list_diagrams(&self) -> Vec<DiagramSummary> {
        let snapshot = self.index.read().clone();
        snapshot.values().cloned().collect()
    }

    pub fn contains_diagram(&self, id: &str) -> bool {
        self.index.read().contains_key(id)
    }

    pub fn get_diagram(&self, id: &str) -> Result<Diagram, StoreError> {
        validate_id(id)?;
        let path = self.diagram_path(id);
        match read_diagram(&path) {
            Err(StoreError::Io { source, .. }) if source.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound {
                what: "diagram",
                id: id.to_string(),
            }),
            other => other,
        }
    }

    /// Stores a new diagram; fails if the id is taken.
    pub fn create_diagram(&self, diagram: &Diagram) -> Result<(), StoreError> {
        self.write_diagram(diagram, Some(false))
    }

    /// Replaces an existing diagram; fails if it does not exist.
    pub fn replace_diagram(&self, diagram: &Diagram) -> Result<(), StoreError> {
        self.write_diagram(diagram, Some(true))
    }

    /// Creates or replaces.
    pub fn save_diagram(&self, diagram: &Diagram) -> Result<(), StoreError> {
        self.write_diagram(diagram, None)
    }

    fn write_diagram(&self, diagram: &Diagram, must_exist: Option<bool>) -> Result<(), StoreError> {
        let id = diagram.id().as_str();
        validate_id(id)?;
        let lock = self.lock(format!("d:{id}"));
        let _guard = lock.lock();
        let path = self.diagram_path(id);
        let exists = path.exists();
        match must_exist {
            Some(true) if !exists => {
                return Err(StoreError::NotFound {
                    what: "diagram",
                    id: id.to_string(),
                })
            }
            Some(false) if exists => {
                return Err(StoreError::Conflict {
                    what: "diagram",
                    id: id.to_string(),
                })
            }
            _ => {}
        }
        write_atomic(&path, model::serialize(diagram).as_bytes())?;
        let summary = DiagramSummary::of(diagram);
        self.update_index(|m| {
            m.insert(id.to_string(), summary);
        });
        Ok(())
    }

    pub fn delete_diagram(&self, id: &str) -> Result<(), StoreError> {
        validate_id(id)?;
        let lock = self.lock(format!("d:{id}"));
        let _guard = lock.lock();
        let path = self.diagram_path(id);
        match fs::remove_file(&path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound {
                    what: "diagram",
                    id: id.to_string(),
                })
            }
            Err(e) => return Err(StoreError::io(&path, e)),
        }
        sync_dir(&self.diagrams);
        self.update_index(|m| {
            m.remove(id);
        });
        Ok(())
    }

    /// Runs `f` on the current diagram under the id's lock and stores the
    /// result.
    pub fn update_diagram<E>(
        &self,
        id: &str,
        f: impl FnOnce(Diagram) -> Result<Diagram, E>,
    ) -> Result<Result<Diagram, E>, StoreError> {
        validate_id(id)?;
        let lock = self.lock(format!("d:{id}"));
        let _guard = lock.lock();
        let current = self.get_diagram(id)?;
        let next = match f(current) {
            Ok(d) => d,
            Err(e) => return Ok(Err(e)),
        };
        if next.id().as_str() != id {
            return Err(StoreError::InvalidId(next.id().to_string()));
        }
        write_atomic(&self.diagram_path(id), model::serialize(&next).as_bytes())?;
        let summary = DiagramSummary::of(&next);
        self.update_index(|m| {
            m.insert(id.to_string(), summary);
        });
        Ok(Ok(next))
    }

    pub fn get_session(&self, id: &str) -> Result<WizardSession, StoreError> {
        validate_id(id)?;
        let path = self.session_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound {
                    what: "wizard session",
                    id: id.to_string(),
                })
            }
            Err(e) => return Err(StoreError::io(&path, e)),
        };
        serde_json::from_str(&text).map_err(|e| StoreError::CorruptSession {
            path,
            message: e.to_string(),
        })
    }

    pub fn save_session(&self, session: &WizardSession) -> Result<(), StoreError> {
        validate_id(session.id())?;
        let lock = self.lock(format!("s:{}", session.id()));
        let _guard = lock.lock();
        self.write_session(session)
    }

    fn write_session(&self, session: &WizardSession) -> Result<(), StoreError> {
        let mut text = serde_json::to_string_pretty(session).expect("sessions serialize");
        text.push('\n');
        write_atomic(&self.session_path(session.id()), text.as_bytes())
    }

    /// Read-modify-write of one session under its lock.
    pub fn update_session<E>(
        &self,
        id: &str,
        f: impl FnOnce(WizardSession) -> Result<WizardSession, E>,
    ) -> Result<Result<WizardSession, E>, StoreError> {
        validate_id(id)?;
        let lock = self.lock(format!("s:{id}"));
        let _guard = lock.lock();
        let current = self.get_session(id)?;
        match f(current) {
            Ok(next) => {
                self.write_session(&next)?;
                Ok(Ok(next))
            }
            Err(e) => Ok(Err(e)),
        }
    }

    pub fn delete_session(&self, id: &str) -> Result<(), StoreError> {
        validate_id(id)?;
        let lock = self.lock(format!("s:{id}"));
        let _guard = lock.lock();
        let path = self.session_path(id);
        match fs::remove_file(&path) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound {
                what: "wizard session",
                id: id.to_string(),
            }),
            Err(e) => Err(StoreError::io(&path, e)),
        }
    }

    /// Session ids currently on disk, sorted.
    pub fn list_sessions(&self) -> Result<Vec<String>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(&self.sessions)
            .map_err(|e| StoreError::io(&self.sessions, e))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                (!name.starts_with('.'))
                    .then(|| name.strip_suffix(SESSION_SUFFIX).map(str::to_string))
                    .flatten()
            })
            .collect();
        ids.sort();
        Ok(ids)
    }
}

fn read_diagram(path: &Path) -> Result<Diagram, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    model::deserialize(&text).map_err(|source| StoreError::Corrupt {
        path: path.to_path_buf(),
        source,
    })
}
