use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::resource::JobStatus;
use crate::wps::{DataValue, ExceptionReport, ExecuteResult};

/// One execution tracked by the gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub process_id: String,
    pub inputs: Vec<(String, DataValue)>,
    pub status: JobStatus,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub result: Option<ExecuteResult>,
    pub exception: Option<ExceptionReport>,
}

impl Job {
    pub fn accepted(process_id: impl Into<String>, inputs: Vec<(String, DataValue)>) -> Job {
        let now = Utc::now();
        Job {
            id: new_job_id(),
            process_id: process_id.into(),
            inputs,
            status: JobStatus::Accepted,
            created_at: now,
            updated_at: now,
            result: None,
            exception: None,
        }
    }

    /// Status and payload agree: a result exactly when succeeded, an
    /// exception exactly when failed.
    pub fn is_consistent(&self) -> bool {
        self.result.is_some() == (self.status == JobStatus::Succeeded)
            && self.exception.is_some() == (self.status == JobStatus::Failed)
    }
}

/// 128 random bits as lowercase hex.
pub fn new_job_id() -> String {
    hex::encode(rand::random::<[u8; 16]>())
}

/// How a job moves to its next status.
#[derive(Debug, Clone, PartialEq)]
pub enum Transition {
    Start,
    Succeed(ExecuteResult),
    Fail(ExceptionReport),
}

impl Transition {
    fn target(&self) -> JobStatus {
        match self {
            Transition::Start => JobStatus::Running,
            Transition::Succeed(_) => JobStatus::Succeeded,
            Transition::Fail(_) => JobStatus::Failed,
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no job `{0}`")]
    NotFound(String),
    #[error("job `{id}` cannot go from {from} to {to}")]
    IllegalTransition {
        id: String,
        from: &'static str,
        to: &'static str,
    },
    #[error("job `{0}` already exists")]
    Duplicate(String),
    #[error("journal: {0}")]
    Journal(#[from] io::Error),
}

struct Inner {
    jobs: HashMap<String, Job>,
    journal: Option<File>,
}

/// All jobs, optionally backed by an append-only journal holding one JSON
/// job per line. The last line for an id wins on replay.
pub struct JobStore {
    inner: RwLock<Inner>,
    journal_path: Option<PathBuf>,
}

impl JobStore {
    pub fn in_memory() -> JobStore {
        JobStore {
            inner: RwLock::new(Inner {
                jobs: HashMap::new(),
                journal: None,
            }),
            journal_path: None,
        }
    }

    /// Replays `path` if it exists, then keeps appending to it.
    pub fn with_journal(path: impl AsRef<Path>) -> Result<JobStore, StoreError> {
        let path = path.as_ref().to_path_buf();
        let jobs = replay(&path)?;
        let journal = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(JobStore {
            inner: RwLock::new(Inner {
                jobs,
                journal: Some(journal),
            }),
            journal_path: Some(path),
        })
    }

    pub fn insert(&self, job: Job) -> Result<(), StoreError> {
        let mut inner = self.inner.write().expect("job store lock");
        if inner.jobs.contains_key(&job.id) {
            return Err(StoreError::Duplicate(job.id));
        }
        append(&mut inner.journal, &job)?;
        inner.jobs.insert(job.id.clone(), job);
        Ok(())
    }

    pub fn transition(&self, id: &str, transition: Transition) -> Result<Job, StoreError> {
        let mut inner = self.inner.write().expect("job store lock");
        let current = inner
            .jobs
            .get(id)
            .ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        let to = transition.target();
        if !current.status.can_become(to) {
            return Err(StoreError::IllegalTransition {
                id: id.to_string(),
                from: current.status.as_str(),
                to: to.as_str(),
            });
        }
        let mut next = current.clone();
        next.status = to;
        next.updated_at = Utc::now().max(current.updated_at);
        match transition {
            Transition::Start => {}
            Transition::Succeed(result) => next.result = Some(result),
            Transition::Fail(report) => next.exception = Some(report),
        }
        append(&mut inner.journal, &next)?;
        inner.jobs.insert(id.to_string(), next.clone());
        Ok(next)
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.inner.read().expect("job store lock").jobs.get(id).cloned()
    }

    /// Removes a job. Returns whether it existed.
    pub fn delete(&self, id: &str) -> Result<bool, StoreError> {
        let mut inner = self.inner.write().expect("job store lock");
        if inner.jobs.remove(id).is_none() {
            return Ok(false);
        }
        if let Some(path) = &self.journal_path {
            inner.journal = Some(compact(path, &inner.jobs)?);
        }
        Ok(true)
    }

    /// Jobs ordered by creation time, then id. Optionally only one process's.
    pub fn list(&self, process_id: Option<&str>) -> Vec<Job> {
        let inner = self.inner.read().expect("job store lock");
        let mut jobs: Vec<Job> = inner
            .jobs
            .values()
            .filter(|j| process_id.is_none_or(|p| j.process_id == p))
            .cloned()
            .collect();
        jobs.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        jobs
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("job store lock").jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// SHA-256 over every job in id order; equal digests mean equal stores.
    pub fn digest(&self) -> String {
        let inner = self.inner.read().expect("job store lock");
        let mut ids: Vec<&String> = inner.jobs.keys().collect();
        ids.sort();
        let mut hasher = Sha256::new();
        for id in ids {
            hasher.update(serde_json::to_vec(&inner.jobs[id]).expect("jobs serialize"));
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

fn append(journal: &mut Option<File>, job: &Job) -> io::Result<()> {
    if let Some(file) = journal {
        let mut line = serde_json::to_vec(job).expect("jobs serialize");
        line.push(b'\n');
        file.write_all(&line)?;
    }
    Ok(())
}

fn replay(path: &Path) -> Result<HashMap<String, Job>, StoreError> {
    let mut jobs = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(jobs),
        Err(e) => return Err(e.into()),
    };
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Job>(&line) {
            Ok(job) => {
                jobs.insert(job.id.clone(), job);
            }
            Err(e) => tracing::warn!("skipping journal line {}: {e}", n + 1),
        }
    }
    Ok(jobs)
}

fn compact(path: &Path, jobs: &HashMap<String, Job>) -> io::Result<File> {
    let tmp = path.with_extension("compact");
    {
        let mut out = File::create(&tmp)?;
        let mut all: Vec<&Job> = jobs.values().collect();
        all.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        for job in all {
            let mut line = serde_json::to_vec(job).expect("jobs serialize");
            line.push(b'\n');
            out.write_all(&line)?;
        }
        out.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    OpenOptions::new().append(true).open(path)
}
