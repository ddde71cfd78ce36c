//! On-disk layout, one directory per project:
//!
//! ```text
//! <data_dir>/projects/<project_id>/project.json   snapshot, replaced atomically
//! <data_dir>/projects/<project_id>/events.jsonl   append-only event log
//! ```
//!
//! The snapshot holds everything that changes only through requester actions
//! (config, items, units, state). Claims, submissions and dialog turns go to
//! the log, one JSON object per line, synced before the request is answered.
//! A torn final line left by a crash is cut off when the log is reopened.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ProjectState;
use crate::config::TaskConfig;
use crate::model::{AnnotationItem, GoldenItem, Submission, TaskUnit, Turn, UnitId, WorkerId};
use crate::planner::{DeploymentPlan, Shortfall};

const SNAPSHOT: &str = "project.json";
const EVENTS: &str = "events.jsonl";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Snapshot {
    pub project_id: String,
    pub created_at: u64,
    pub state: ProjectState,
    pub config: TaskConfig,
    pub items: Vec<AnnotationItem>,
    pub golden_pool: Vec<GoldenItem>,
    pub units: Vec<TaskUnit>,
    pub plan: Option<DeploymentPlan>,
    pub shortfall: Option<Shortfall>,
    pub pilot_units: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub(crate) enum Event {
    Claim {
        worker_id: WorkerId,
        unit_id: UnitId,
        issued_at: u64,
    },
    Submission {
        submission: Submission,
    },
    Turn {
        worker_id: WorkerId,
        session_id: String,
        turn: Turn,
        at: u64,
    },
}

pub(crate) fn projects_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("projects")
}

pub(crate) struct ProjectFiles {
    dir: PathBuf,
    log: File,
}

impl ProjectFiles {
    pub fn create(data_dir: &Path, project_id: &str) -> io::Result<Self> {
        let dir = projects_dir(data_dir).join(project_id);
        fs::create_dir_all(&dir)?;
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(EVENTS))?;
        Ok(Self { dir, log })
    }

    /// Opens an existing project directory, returning its snapshot and the
    /// events that were fully written.
    pub fn open(dir: &Path) -> io::Result<(Self, Snapshot, Vec<Event>)> {
        let snapshot: Snapshot = serde_json::from_slice(&fs::read(dir.join(SNAPSHOT))?)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;

        let path = dir.join(EVENTS);
        let mut log = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)?;
        let mut events = Vec::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&mut log);
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 || !line.ends_with('\n') {
                break;
            }
            match serde_json::from_str::<Event>(line.trim_end()) {
                Ok(event) => {
                    events.push(event);
                    good_len += n as u64;
                }
                Err(_) => break,
            }
        }
        drop(reader);
        if log.metadata()?.len() != good_len {
            log.set_len(good_len)?;
            log.sync_all()?;
        }
        log.seek(SeekFrom::End(0))?;
        Ok((
            Self {
                dir: dir.to_owned(),
                log,
            },
            snapshot,
            events,
        ))
    }

    pub fn write_snapshot(&self, snapshot: &Snapshot) -> io::Result<()> {
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        {
            let mut file = File::create(&tmp)?;
            serde_json::to_writer(&mut file, snapshot)
                .map_err(|e| io::Error::other(e))?;
            file.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(SNAPSHOT))?;
        if let Ok(dir) = File::open(&self.dir) {
            let _ = dir.sync_all();
        }
        Ok(())
    }

    pub fn append(&mut self, event: &Event) -> io::Result<()> {
        let mut line = serde_json::to_vec(event).map_err(|e| io::Error::other(e))?;
        line.push(b'\n');
        self.log.write_all(&line)?;
        self.log.sync_data()
    }
}
