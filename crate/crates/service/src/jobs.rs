//! Harvest jobs and their append-only store.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use codeharvest_core::harvest::{HarvestPhase, HarvestResult};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// File name of the job log inside the index directory.
pub const JOBS_FILE: &str = "jobs.jsonl";

/// Error recorded for jobs that were still running when the service stopped.
pub const RESTART_MARKER: &str = "interrupted by a service restart";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobState {
    Queued,
    Extracting,
    Searching,
    Testing,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }

    fn rank(self) -> u8 {
        match self {
            JobState::Queued => 0,
            JobState::Extracting => 1,
            JobState::Searching => 2,
            JobState::Testing => 3,
            JobState::Done | JobState::Failed => 4,
        }
    }

    /// Whether a job may move from `self` to `next`. Failure is reachable from
    /// every live state; everything else only moves forward.
    pub fn can_become(self, next: JobState) -> bool {
        !self.is_terminal() && (next == JobState::Failed || next.rank() > self.rank())
    }
}

impl From<HarvestPhase> for JobState {
    fn from(p: HarvestPhase) -> Self {
        match p {
            HarvestPhase::Extracting => JobState::Extracting,
            HarvestPhase::Searching => JobState::Searching,
            HarvestPhase::Testing => JobState::Testing,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub tested: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobRecord {
    pub job_id: String,
    pub state: JobState,
    pub progress: Progress,
    pub result: Option<HarvestResult>,
    pub error: Option<String>,
    /// Set when the job was cut short by a restart.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub interrupted: bool,
    pub submitted_at: String,
    pub finished_at: Option<String>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn new_job_id() -> String {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%3fZ");
    let suffix: u32 = rand::thread_rng().gen();
    format!("{stamp}-{suffix:08x}")
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Jobs in memory, with every state change appended to a JSONL log. On open
/// the last line per job wins, and jobs that never finished become FAILED.
pub struct JobStore {
    path: PathBuf,
    jobs: RwLock<BTreeMap<String, JobRecord>>,
    log: Mutex<File>,
}

impl JobStore {
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let path = dir.join(JOBS_FILE);
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let mut jobs = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: JobRecord =
                    serde_json::from_str(&line).map_err(|source| StoreError::Corrupt {
                        path: path.clone(),
                        line: n + 1,
                        source,
                    })?;
                jobs.insert(rec.job_id.clone(), rec);
            }
        }
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io)?;
        let store = Self {
            path,
            jobs: RwLock::new(BTreeMap::new()),
            log: Mutex::new(log),
        };
        for mut rec in jobs.into_values() {
            if !rec.state.is_terminal() {
                rec.state = JobState::Failed;
                rec.error = Some(RESTART_MARKER.to_string());
                rec.interrupted = true;
                rec.finished_at = Some(now());
                store.append(&rec)?;
            }
            store.write_jobs().insert(rec.job_id.clone(), rec);
        }
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write_jobs(&self) -> std::sync::RwLockWriteGuard<'_, BTreeMap<String, JobRecord>> {
        self.jobs.write().unwrap_or_else(|e| e.into_inner())
    }

    fn append(&self, rec: &JobRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(rec).expect("job records serialize");
        line.push('\n');
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        log.write_all(line.as_bytes())
            .and_then(|()| log.flush())
            .map_err(|source| StoreError::Io {
                path: self.path.clone(),
                source,
            })
    }

    /// Records a new QUEUED job and returns it.
    pub fn submit(&self) -> Result<JobRecord, StoreError> {
        let mut jobs = self.write_jobs();
        let job_id = loop {
            let id = new_job_id();
            if !jobs.contains_key(&id) {
                break id;
            }
        };
        let rec = JobRecord {
            job_id: job_id.clone(),
            state: JobState::Queued,
            progress: Progress::default(),
            result: None,
            error: None,
            interrupted: false,
            submitted_at: now(),
            finished_at: None,
        };
        self.append(&rec)?;
        jobs.insert(job_id, rec.clone());
        Ok(rec)
    }

    pub fn get(&self, job_id: &str) -> Option<JobRecord> {
        self.jobs
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(job_id)
            .cloned()
    }

    pub fn all(&self) -> Vec<JobRecord> {
        self.jobs
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect()
    }

    /// Moves a job to `state`, ignoring transitions the state machine forbids.
    /// Returns whether the job changed.
    pub fn transition(&self, job_id: &str, state: JobState) -> Result<bool, StoreError> {
        self.update(job_id, |rec| {
            if !rec.state.can_become(state) {
                return false;
            }
            rec.state = state;
            true
        })
    }

    /// Progress is kept in memory only; the log records state changes.
    pub fn set_progress(&self, job_id: &str, tested: usize, total: usize) {
        if let Some(rec) = self.write_jobs().get_mut(job_id) {
            if !rec.state.is_terminal() && tested >= rec.progress.tested {
                rec.progress = Progress { tested, total };
            }
        }
    }

    pub fn finish(
        &self,
        job_id: &str,
        outcome: Result<HarvestResult, String>,
    ) -> Result<bool, StoreError> {
        self.update(job_id, |rec| {
            let next = if outcome.is_ok() {
                JobState::Done
            } else {
                JobState::Failed
            };
            if !rec.state.can_become(next) {
                return false;
            }
            rec.state = next;
            rec.finished_at = Some(now());
            match &outcome {
                Ok(result) => {
                    let total = result.outcomes.len();
                    rec.progress = Progress {
                        tested: total,
                        total,
                    };
                    rec.result = Some(result.clone());
                }
                Err(message) => rec.error = Some(message.clone()),
            }
            true
        })
    }

    fn update(
        &self,
        job_id: &str,
        f: impl FnOnce(&mut JobRecord) -> bool,
    ) -> Result<bool, StoreError> {
        let mut jobs = self.write_jobs();
        let Some(rec) = jobs.get_mut(job_id) else {
            return Ok(false);
        };
        let mut next = rec.clone();
        if !f(&mut next) {
            return Ok(false);
        }
        self.append(&next)?;
        *rec = next;
        Ok(true)
    }
}
