//! Test-driven search: infer the interface a test exercises, search for it,
//! and keep only the candidates that pass the test when executed.

mod adapt;
mod exec;
mod harness;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{infer_interface_from_test, ExtractError, TestCaseSpec};
use crate::index::{search_mql, CorpusIndex, IndexError, SearchConstraints};
use crate::model::{ComponentId, ComponentKind, ComponentRecord};
use crate::mql::{match_interface, MqlQuery};

pub use adapt::{adapt_candidate, query_from_interface, AdaptError};
pub use exec::{
    EntrySpec, ExecutionBackend, ExecutionRequest, ExecutionResult, LimitedBackend, ProcessBackend,
    RunStatus, ScriptedBackend, ScriptedRun, Stage, OUTPUT_CAP,
};
pub use harness::{generate_harness, CANDIDATE_FILE, EXECUTABLE, HARNESS_FILE};

/// Bytes of combined output kept in a candidate's log.
pub const LOG_CAP: usize = 8 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct HarvestConfig {
    pub max_candidates: usize,
    /// Wall-clock seconds for building and running one candidate.
    pub per_candidate_timeout: f64,
    pub parallelism: usize,
    pub keep_work_dirs: bool,
    /// Collapse byte-identical candidates before testing.
    pub dedupe: bool,
    /// Parent directory for per-candidate work directories; the system temp dir when unset.
    pub work_root: Option<PathBuf>,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        Self {
            max_candidates: 25,
            per_candidate_timeout: 10.0,
            parallelism: 4,
            keep_work_dirs: false,
            dedupe: false,
            work_root: None,
        }
    }
}

impl HarvestConfig {
    pub fn validate(&self) -> Result<(), HarvestError> {
        if self.max_candidates == 0 {
            return Err(HarvestError::InvalidConfig(
                "maxCandidates must be positive".into(),
            ));
        }
        if !(self.per_candidate_timeout.is_finite() && self.per_candidate_timeout > 0.0) {
            return Err(HarvestError::InvalidConfig(
                "perCandidateTimeout must be positive".into(),
            ));
        }
        if self.parallelism == 0 {
            return Err(HarvestError::InvalidConfig(
                "parallelism must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.per_candidate_timeout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    CompileError,
    RuntimeError,
    Timeout,
    AdaptError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CandidateOutcome {
    pub id: ComponentId,
    pub verdict: Verdict,
    pub duration_ms: u64,
    pub log: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HarvestResult {
    pub test_spec: TestCaseSpec,
    pub query: MqlQuery,
    pub outcomes: Vec<CandidateOutcome>,
    pub passing: Vec<ComponentId>,
}

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("execution backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("invalid harvest configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HarvestPhase {
    Extracting,
    Searching,
    Testing,
}

/// Progress callbacks for long-running harvests.
pub trait HarvestObserver: Sync {
    fn phase(&self, _phase: HarvestPhase) {}

    fn progress(&self, _tested: usize, _total: usize) {}
}

struct Silent;

impl HarvestObserver for Silent {}

/// Counts `ASSERT_OK` and `ASSERT_FAIL` protocol lines.
pub fn assertion_counts(stdout: &str) -> (usize, usize) {
    let mut ok = 0;
    let mut fail = 0;
    for line in stdout.lines() {
        let line = line.trim_end_matches('\r');
        if let Some(n) = line.strip_prefix("ASSERT_OK ") {
            if n.parse::<u64>().is_ok() {
                ok += 1;
            }
        } else if let Some(n) = line.strip_prefix("ASSERT_FAIL ") {
            if n.parse::<u64>().is_ok() {
                fail += 1;
            }
        }
    }
    (ok, fail)
}

/// Verdict for one execution.
pub fn classify(result: &ExecutionResult) -> Verdict {
    match (result.exit_status, result.stage) {
        (RunStatus::Timeout, _) => return Verdict::Timeout,
        (RunStatus::Nonzero | RunStatus::ToolMissing, Stage::Build) => {
            return Verdict::CompileError
        }
        _ => {}
    }
    let (ok, fail) = assertion_counts(&result.stdout);
    if fail > 0 {
        Verdict::Fail
    } else if result.exit_status == RunStatus::Ok && ok > 0 {
        Verdict::Pass
    } else {
        Verdict::RuntimeError
    }
}

fn truncated_log(stdout: &str, stderr: &str) -> String {
    let mut log = String::with_capacity(stdout.len() + stderr.len() + 1);
    log.push_str(stdout);
    if !stdout.is_empty() && !stdout.ends_with('\n') && !stderr.is_empty() {
        log.push('\n');
    }
    log.push_str(stderr);
    if log.len() > LOG_CAP {
        let mut cut = LOG_CAP;
        while !log.is_char_boundary(cut) {
            cut -= 1;
        }
        log.truncate(cut);
        log.push_str("\n[log truncated]\n");
    }
    log
}

/// Adapts, builds and runs one candidate against the test, outside any search.
pub fn evaluate_candidate(
    record: &ComponentRecord,
    test: &TestCaseSpec,
    query: &MqlQuery,
    harness: &str,
    cfg: &HarvestConfig,
    backend: &dyn ExecutionBackend,
) -> CandidateOutcome {
    let adapt_error = |log: String| CandidateOutcome {
        id: record.id.clone(),
        verdict: Verdict::AdaptError,
        duration_ms: 0,
        log,
    };
    if !match_interface(query, &record.interface).matched {
        return adapt_error(format!(
            "interface of {} does not match {query}",
            record.interface.class_name
        ));
    }
    let adapted = match adapt_candidate(record, &test.inferred_interface) {
        Ok(a) => a,
        Err(e) => return adapt_error(e.to_string()),
    };

    let root = cfg.work_root.clone().unwrap_or_else(std::env::temp_dir);
    let dir = match tempfile::Builder::new()
        .prefix(&format!("harvest-{}-", record.id))
        .tempdir_in(&root)
    {
        Ok(d) => d,
        Err(e) => {
            return CandidateOutcome {
                id: record.id.clone(),
                verdict: Verdict::RuntimeError,
                duration_ms: 0,
                log: format!("cannot create work directory under {}: {e}", root.display()),
            }
        }
    };
    let mut sources = BTreeMap::new();
    sources.insert(HARNESS_FILE.to_string(), harness.to_string());
    sources.insert(CANDIDATE_FILE.to_string(), adapted);
    let req = ExecutionRequest {
        label: record.id.to_string(),
        work_dir: dir.path().to_path_buf(),
        sources,
        entry: EntrySpec {
            main_source: HARNESS_FILE.to_string(),
            executable: EXECUTABLE.to_string(),
        },
        timeout: cfg.timeout(),
    };
    let result = backend.execute(&req);
    if cfg.keep_work_dirs {
        let _ = dir.keep();
    }
    CandidateOutcome {
        id: record.id.clone(),
        verdict: classify(&result),
        duration_ms: result.duration_ms,
        log: truncated_log(&result.stdout, &result.stderr),
    }
}

/// Runs the whole pipeline. Every searched candidate gets exactly one outcome,
/// in search rank order; `passing` keeps that order.
pub fn run_harvest(
    test_source: &str,
    ix: &CorpusIndex,
    cfg: &HarvestConfig,
    backend: &dyn ExecutionBackend,
) -> Result<HarvestResult, HarvestError> {
    run_harvest_observed(test_source, ix, cfg, backend, &Silent)
}

pub fn run_harvest_observed(
    test_source: &str,
    ix: &CorpusIndex,
    cfg: &HarvestConfig,
    backend: &dyn ExecutionBackend,
    observer: &dyn HarvestObserver,
) -> Result<HarvestResult, HarvestError> {
    cfg.validate()?;
    observer.phase(HarvestPhase::Extracting);
    let test = infer_interface_from_test(test_source)?;
    backend
        .check_available()
        .map_err(HarvestError::BackendUnavailable)?;

    observer.phase(HarvestPhase::Searching);
    let query = query_from_interface(&test.inferred_interface);
    let constraints = SearchConstraints {
        dedupe: cfg.dedupe,
        exclude_kinds: BTreeSet::from([ComponentKind::Test, ComponentKind::Interface]),
        max_results: cfg.max_candidates,
        path_prefix: None,
    };
    let hits = search_mql(ix, &query, &constraints)?;
    let candidates: Vec<&ComponentRecord> = hits.iter().filter_map(|h| ix.get(&h.id)).collect();

    observer.phase(HarvestPhase::Testing);
    let total = candidates.len();
    observer.progress(0, total);
    let harness = generate_harness(&test);
    let slots: Mutex<Vec<Option<CandidateOutcome>>> = Mutex::new(vec![None; total]);
    let next = AtomicUsize::new(0);
    let tested = AtomicUsize::new(0);
    let workers = cfg.parallelism.min(total).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= total {
                    break;
                }
                let outcome =
                    evaluate_candidate(candidates[i], &test, &query, &harness, cfg, backend);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(outcome);
                let done = tested.fetch_add(1, Ordering::SeqCst) + 1;
                observer.progress(done, total);
            });
        }
    });
    let outcomes: Vec<CandidateOutcome> = slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|o| o.expect("every candidate evaluated"))
        .collect();
    let passing = outcomes
        .iter()
        .filter(|o| o.verdict == Verdict::Pass)
        .map(|o| o.id.clone())
        .collect();
    Ok(HarvestResult {
        test_spec: test,
        query,
        outcomes,
        passing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(status: RunStatus, stage: Stage, stdout: &str) -> ExecutionResult {
        ExecutionResult {
            exit_status: status,
            stage,
            stdout: stdout.into(),
            stderr: String::new(),
            duration_ms: 1,
        }
    }

    #[test]
    fn classification_table() {
        use RunStatus::*;
        assert_eq!(
            classify(&result(
                Ok,
                Stage::Run,
                "ASSERT_OK 1\nASSERT_OK 2\nASSERT_OK 3\n"
            )),
            Verdict::Pass
        );
        assert_eq!(
            classify(&result(Nonzero, Stage::Run, "ASSERT_OK 1\nASSERT_FAIL 2\n")),
            Verdict::Fail
        );
        assert_eq!(
            classify(&result(Nonzero, Stage::Run, "")),
            Verdict::RuntimeError
        );
        assert_eq!(classify(&result(Ok, Stage::Run, "")), Verdict::RuntimeError);
        assert_eq!(
            classify(&result(Nonzero, Stage::Build, "")),
            Verdict::CompileError
        );
        assert_eq!(
            classify(&result(Timeout, Stage::Run, "ASSERT_OK 1\n")),
            Verdict::Timeout
        );
        assert_eq!(
            classify(&result(Ok, Stage::Run, "ASSERT_OK one\n")),
            Verdict::RuntimeError
        );
    }

    #[test]
    fn log_is_capped_on_char_boundary() {
        let long = "é".repeat(LOG_CAP);
        let log = truncated_log(&long, "");
        assert!(log.len() <= LOG_CAP + 20);
        assert!(log.ends_with("[log truncated]\n"));
    }

    #[test]
    fn config_validation() {
        assert!(HarvestConfig::default().validate().is_ok());
        let bad = HarvestConfig {
            parallelism: 0,
            ..HarvestConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
