//! Polling watcher that turns settled interface changes into recommendations.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{declared_types, detect_significant_change, find_missing_types, invoked_members};
use crate::analysis::{group_picture, GroupPicture, DEFAULT_THRESHOLD};
use crate::harvest::query_from_interface;
use crate::index::{is_source_file, search_mql, CorpusIndex, SearchConstraints, SearchHit};
use crate::model::{sha256_hex, InterfaceSpec, TypeName};
use crate::mql::{MethodPattern, MqlQuery, ParamPattern, ReturnPattern};

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub project_root: PathBuf,
    /// Quiet period a file must stay unchanged before it is analyzed.
    pub debounce: Duration,
    pub poll_interval: Duration,
    /// Optional JSONL file receiving every recommendation; must lie outside the project.
    pub recommendation_sink: Option<PathBuf>,
    pub constraints: SearchConstraints,
    pub group_threshold: f64,
    /// Also recommend components for referenced types the project does not declare.
    pub missing_types: bool,
}

impl AgentConfig {
    pub fn new(project_root: impl Into<PathBuf>) -> Self {
        Self {
            project_root: project_root.into(),
            debounce: Duration::from_secs(2),
            poll_interval: Duration::from_millis(500),
            recommendation_sink: None,
            constraints: SearchConstraints::default(),
            group_threshold: DEFAULT_THRESHOLD,
            missing_types: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.poll_interval.is_zero() {
            return Err("poll interval must be positive".into());
        }
        if self.debounce < self.poll_interval {
            return Err(format!(
                "debounce ({:?}) must not be shorter than the poll interval ({:?})",
                self.debounce, self.poll_interval
            ));
        }
        if !(self.group_threshold > 0.0 && self.group_threshold <= 1.0) {
            return Err("group threshold must be in (0, 1]".into());
        }
        self.constraints.validate().map_err(|e| e.to_string())?;
        if let Some(sink) = &self.recommendation_sink {
            let root = self
                .project_root
                .canonicalize()
                .map_err(|e| format!("{}: {e}", self.project_root.display()))?;
            let sink_dir = sink
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
            let sink_dir = sink_dir
                .canonicalize()
                .map_err(|e| format!("{}: {e}", sink_dir.display()))?;
            if sink_dir.starts_with(&root) {
                return Err(
                    "the recommendation sink must not be inside the watched project".into(),
                );
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Trigger {
    InterfaceChange,
    MissingType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Recommendation {
    pub trigger: Trigger,
    /// Project-relative path of the component under development.
    pub cud_path: String,
    pub query: MqlQuery,
    pub hits: Vec<SearchHit>,
    pub group_picture: Option<GroupPicture>,
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "event", content = "data")]
pub enum AgentEvent {
    Recommendation(Box<Recommendation>),
    Error { message: String },
}

enum Work {
    Interface { path: String, iface: InterfaceSpec },
    Missing { path: String, query: MqlQuery },
}

/// A running agent. Dropping it stops both threads.
pub struct AgentHandle {
    events: Receiver<AgentEvent>,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl AgentHandle {
    pub fn recv_timeout(&self, timeout: Duration) -> Option<AgentEvent> {
        self.events.recv_timeout(timeout).ok()
    }

    /// Events already emitted, without waiting.
    pub fn drain(&self) -> Vec<AgentEvent> {
        self.events.try_iter().collect()
    }

    pub fn events(&self) -> &Receiver<AgentEvent> {
        &self.events
    }

    /// Stops watching and returns the events emitted but not yet received.
    pub fn stop(mut self) -> Vec<AgentEvent> {
        self.shutdown();
        self.events.try_iter().collect()
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for AgentHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

struct FileState {
    digest: String,
    baseline: Option<String>,
    pending_since: Option<Instant>,
    declared: Vec<TypeName>,
    reported_missing: BTreeSet<String>,
}

fn snapshot(root: &Path) -> Result<BTreeMap<PathBuf, String>, String> {
    std::fs::read_dir(root).map_err(|e| format!("{}: {e}", root.display()))?;
    let mut files = BTreeMap::new();
    for entry in WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
    {
        if entry.file_type().is_file() && is_source_file(entry.path()) {
            if let Ok(text) = std::fs::read_to_string(entry.path()) {
                files.insert(entry.path().to_path_buf(), text);
            }
        }
    }
    Ok(files)
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Starts watching `cfg.project_root`. Files present at startup form the
/// baseline; afterwards each file whose content has stayed unchanged for the
/// debounce period is checked for an interface change, and every change
/// yields one recommendation. The project is only ever read.
pub fn watch_project(cfg: AgentConfig, ix: Arc<CorpusIndex>) -> Result<AgentHandle, String> {
    cfg.validate()?;
    let initial = snapshot(&cfg.project_root)?;
    let (event_tx, event_rx) = mpsc::channel();
    let (work_tx, work_rx) = mpsc::channel::<Work>();
    let stop = Arc::new(AtomicBool::new(false));

    let mut states = BTreeMap::new();
    for (path, text) in &initial {
        let baseline = detect_significant_change(None, text).new_fingerprint;
        states.insert(
            path.clone(),
            FileState {
                digest: sha256_hex(text.as_bytes()),
                baseline,
                pending_since: None,
                declared: declared_types(text),
                reported_missing: BTreeSet::new(),
            },
        );
    }
    if cfg.missing_types {
        let workspace = workspace_types(&states);
        for (path, text) in &initial {
            if let (Ok(missing), Some(st)) =
                (find_missing_types(text, &workspace), states.get_mut(path))
            {
                st.reported_missing = missing.into_iter().map(|t| t.simple).collect();
            }
        }
    }

    let watcher = {
        let cfg = cfg.clone();
        let stop = stop.clone();
        let event_tx = event_tx.clone();
        thread::spawn(move || watch_loop(&cfg, states, &stop, &work_tx, &event_tx))
    };
    let worker = {
        let cfg = cfg.clone();
        thread::spawn(move || work_loop(&cfg, &ix, &work_rx, &event_tx))
    };
    Ok(AgentHandle {
        events: event_rx,
        stop,
        threads: vec![watcher, worker],
    })
}

fn workspace_types(states: &BTreeMap<PathBuf, FileState>) -> BTreeSet<TypeName> {
    states
        .values()
        .flat_map(|s| s.declared.iter().cloned())
        .collect()
}

fn sleep_unless_stopped(total: Duration, stop: &AtomicBool) {
    let until = Instant::now() + total;
    while !stop.load(Ordering::SeqCst) {
        let now = Instant::now();
        if now >= until {
            break;
        }
        thread::sleep((until - now).min(Duration::from_millis(20)));
    }
}

fn watch_loop(
    cfg: &AgentConfig,
    mut states: BTreeMap<PathBuf, FileState>,
    stop: &AtomicBool,
    work: &Sender<Work>,
    events: &Sender<AgentEvent>,
) {
    while !stop.load(Ordering::SeqCst) {
        sleep_unless_stopped(cfg.poll_interval, stop);
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let files = match snapshot(&cfg.project_root) {
            Ok(f) => f,
            Err(message) => {
                let _ = events.send(AgentEvent::Error { message });
                break;
            }
        };
        let now = Instant::now();
        states.retain(|p, _| files.contains_key(p));
        for (path, text) in &files {
            let digest = sha256_hex(text.as_bytes());
            let st = states.entry(path.clone()).or_insert_with(|| FileState {
                digest: String::new(),
                baseline: None,
                pending_since: None,
                declared: Vec::new(),
                reported_missing: BTreeSet::new(),
            });
            if st.digest != digest {
                st.digest = digest;
                st.pending_since = Some(now);
                st.declared = declared_types(text);
            }
        }

        let settled: Vec<PathBuf> = states
            .iter()
            .filter(|(_, s)| {
                s.pending_since
                    .is_some_and(|t| now.duration_since(t) >= cfg.debounce)
            })
            .map(|(p, _)| p.clone())
            .collect();
        if settled.is_empty() {
            continue;
        }
        let workspace = workspace_types(&states);
        for path in settled {
            let text = &files[&path];
            let rel = relative(&cfg.project_root, &path);
            let st = states.get_mut(&path).expect("settled file has state");
            st.pending_since = None;
            let detection = detect_significant_change(st.baseline.as_deref(), text);
            if detection.changed {
                st.baseline = detection.new_fingerprint;
                if let Some(iface) = detection.interface {
                    let _ = work.send(Work::Interface {
                        path: rel.clone(),
                        iface,
                    });
                }
            }
            if cfg.missing_types {
                let Ok(missing) = find_missing_types(text, &workspace) else {
                    continue;
                };
                let now_missing: BTreeSet<String> =
                    missing.iter().map(|t| t.simple.clone()).collect();
                for ty in missing
                    .iter()
                    .filter(|t| !st.reported_missing.contains(&t.simple))
                {
                    let _ = work.send(Work::Missing {
                        path: rel.clone(),
                        query: missing_type_query(text, ty),
                    });
                }
                st.reported_missing = now_missing;
            }
        }
    }
}

/// Query for a missing type: its name plus every member the source invokes on it.
fn missing_type_query(source: &str, ty: &TypeName) -> MqlQuery {
    let mut q = MqlQuery::new(ty.simple.clone());
    for m in invoked_members(source, &ty.simple).unwrap_or_default() {
        q.methods.push(MethodPattern::new(
            m.name,
            vec![ParamPattern::Type("*".into()); m.arity],
            ReturnPattern::Any,
        ));
    }
    q
}

fn work_loop(
    cfg: &AgentConfig,
    ix: &CorpusIndex,
    work: &Receiver<Work>,
    events: &Sender<AgentEvent>,
) {
    for item in work.iter() {
        let (trigger, path, query) = match item {
            Work::Interface { path, iface } => {
                (Trigger::InterfaceChange, path, query_from_interface(&iface))
            }
            Work::Missing { path, query } => (Trigger::MissingType, path, query),
        };
        let event = match search_mql(ix, &query, &cfg.constraints) {
            Ok(hits) => {
                let candidates: Vec<InterfaceSpec> = hits
                    .iter()
                    .filter_map(|h| ix.get(&h.id))
                    .map(|r| r.interface.clone())
                    .collect();
                let gp = (!candidates.is_empty()).then(|| {
                    group_picture(
                        &candidates,
                        cfg.group_threshold,
                        TypeName::simple(query.class_name.clone()),
                    )
                });
                let rec = Recommendation {
                    trigger,
                    cud_path: path,
                    query,
                    hits,
                    group_picture: gp,
                    created_at: chrono::Utc::now()
                        .to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                };
                if let Some(sink) = &cfg.recommendation_sink {
                    if let Err(e) = append_jsonl(sink, &rec) {
                        let _ = events.send(AgentEvent::Error {
                            message: format!("{}: {e}", sink.display()),
                        });
                    }
                }
                AgentEvent::Recommendation(Box::new(rec))
            }
            Err(e) => AgentEvent::Error {
                message: e.to_string(),
            },
        };
        if events.send(event).is_err() {
            break;
        }
    }
}

fn append_jsonl(sink: &Path, rec: &Recommendation) -> std::io::Result<()> {
    let mut line = serde_json::to_string(rec).map_err(std::io::Error::other)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(sink)?;
    f.write_all(line.as_bytes())
}
