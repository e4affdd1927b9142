//! Execution backends: a subprocess backend driving the C++ toolchain and a
//! scripted backend replaying canned transcripts.

use std::collections::BTreeMap;
use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// Cap on captured bytes per output stream.
pub const OUTPUT_CAP: usize = 64 * 1024;

const ENV_ALLOWLIST: &[&str] = &["PATH", "LANG", "LC_ALL"];

/// Abstract build-and-run description: compile `main_source` into `executable`, then run it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntrySpec {
    pub main_source: String,
    pub executable: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutionRequest {
    /// Candidate id; scripted backends key their transcripts on it.
    pub label: String,
    pub work_dir: PathBuf,
    pub sources: BTreeMap<String, String>,
    pub entry: EntrySpec,
    pub timeout: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Ok,
    Nonzero,
    Timeout,
    ToolMissing,
}

/// The step an execution ended in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Build,
    #[default]
    Run,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutionResult {
    pub exit_status: RunStatus,
    pub stage: Stage,
    pub stdout: String,
    pub stderr: String,
    pub duration_ms: u64,
}

pub trait ExecutionBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Err with a reason when the backend cannot execute anything.
    fn check_available(&self) -> Result<(), String>;

    fn execute(&self, req: &ExecutionRequest) -> ExecutionResult;
}

impl<B: ExecutionBackend + ?Sized> ExecutionBackend for Arc<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn check_available(&self) -> Result<(), String> {
        (**self).check_available()
    }

    fn execute(&self, req: &ExecutionRequest) -> ExecutionResult {
        (**self).execute(req)
    }
}

/// Runs the request with the system C++ compiler in a scrubbed environment.
///
/// Each step runs in its own process group with only `PATH`, `LANG` and
/// `LC_ALL` inherited (`HOME` and `TMPDIR` point at the work directory). Build
/// and run share one deadline; on expiry the whole group is killed.
#[derive(Debug, Clone)]
pub struct ProcessBackend {
    pub compiler: String,
    pub flags: Vec<String>,
}

impl Default for ProcessBackend {
    fn default() -> Self {
        Self {
            compiler: "g++".to_string(),
            flags: vec!["-std=c++17".into(), "-O0".into(), "-w".into()],
        }
    }
}

struct StepOutcome {
    status: RunStatus,
    stdout: String,
    stderr: String,
}

fn scrubbed(cmd: &mut Command, work_dir: &Path) {
    cmd.current_dir(work_dir).env_clear();
    for key in ENV_ALLOWLIST {
        if let Some(v) = std::env::var_os(key) {
            cmd.env(key, v);
        }
    }
    cmd.env("HOME", work_dir)
        .env("TMPDIR", work_dir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
}

fn capped_reader<R: Read + Send + 'static>(mut pipe: R) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        let mut truncated = false;
        loop {
            match pipe.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let room = OUTPUT_CAP.saturating_sub(kept.len());
                    kept.extend_from_slice(&buf[..n.min(room)]);
                    truncated |= n > room;
                }
            }
        }
        let mut text = String::from_utf8_lossy(&kept).into_owned();
        if truncated || text.len() > OUTPUT_CAP {
            const MARKER: &str = "\n[output truncated]\n";
            let mut cut = OUTPUT_CAP - MARKER.len();
            while !text.is_char_boundary(cut) {
                cut -= 1;
            }
            text.truncate(cut);
            text.push_str(MARKER);
        }
        text
    })
}

fn kill_group(pid: u32) {
    // SAFETY: killpg only sends a signal; the group was created for this child.
    unsafe {
        libc::killpg(pid as libc::pid_t, libc::SIGKILL);
    }
}

fn run_step(mut cmd: Command, work_dir: &Path, deadline: Instant) -> StepOutcome {
    scrubbed(&mut cmd, work_dir);
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => {
            return StepOutcome {
                status: RunStatus::ToolMissing,
                stdout: String::new(),
                stderr: format!("cannot start {:?}: {e}", cmd.get_program()),
            }
        }
    };
    let pid = child.id();
    let out = capped_reader(child.stdout.take().expect("piped stdout"));
    let err = capped_reader(child.stderr.take().expect("piped stderr"));
    let status = loop {
        match child.try_wait() {
            Ok(Some(s)) => break Some(s),
            Ok(None) if Instant::now() >= deadline => break None,
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(_) => break None,
        }
    };
    // Reap stragglers that inherited the group, then the child itself.
    kill_group(pid);
    if status.is_none() {
        let _ = child.wait();
    }
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    let status = match status {
        None => RunStatus::Timeout,
        Some(s) if s.success() => RunStatus::Ok,
        Some(_) => RunStatus::Nonzero,
    };
    StepOutcome {
        status,
        stdout,
        stderr,
    }
}

impl ExecutionBackend for ProcessBackend {
    fn name(&self) -> &str {
        "process"
    }

    fn check_available(&self) -> Result<(), String> {
        let out = Command::new(&self.compiler)
            .arg("--version")
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status();
        match out {
            Ok(s) if s.success() => Ok(()),
            Ok(s) => Err(format!("`{} --version` exited with {s}", self.compiler)),
            Err(e) => Err(format!("cannot run `{}`: {e}", self.compiler)),
        }
    }

    fn execute(&self, req: &ExecutionRequest) -> ExecutionResult {
        let started = Instant::now();
        let deadline = started + req.timeout;
        let finish = |step: StepOutcome, stage: Stage| ExecutionResult {
            exit_status: step.status,
            stage,
            stdout: step.stdout,
            stderr: step.stderr,
            duration_ms: started.elapsed().as_millis() as u64,
        };
        for (name, text) in &req.sources {
            if let Err(e) = std::fs::write(req.work_dir.join(name), text) {
                return finish(
                    StepOutcome {
                        status: RunStatus::Nonzero,
                        stdout: String::new(),
                        stderr: format!("cannot write {name}: {e}"),
                    },
                    Stage::Build,
                );
            }
        }

        let mut build = Command::new(&self.compiler);
        build
            .args(&self.flags)
            .arg("-o")
            .arg(&req.entry.executable)
            .arg(&req.entry.main_source);
        let built = run_step(build, &req.work_dir, deadline);
        if built.status != RunStatus::Ok {
            return finish(built, Stage::Build);
        }
        let run = Command::new(req.work_dir.join(&req.entry.executable));
        finish(run_step(run, &req.work_dir, deadline), Stage::Run)
    }
}

/// One canned execution in a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScriptedRun {
    pub exit_status: RunStatus,
    #[serde(default)]
    pub stdout: String,
    #[serde(default)]
    pub stderr: String,
    #[serde(default)]
    pub duration_ms: u64,
    #[serde(default)]
    pub stage: Stage,
}

/// Replays a transcript keyed by candidate id. Requests for ids missing from the
/// transcript fail at run time.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    pub transcript: BTreeMap<String, ScriptedRun>,
}

impl ScriptedBackend {
    pub fn new(transcript: BTreeMap<String, ScriptedRun>) -> Self {
        Self { transcript }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

impl ExecutionBackend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn check_available(&self) -> Result<(), String> {
        Ok(())
    }

    fn execute(&self, req: &ExecutionRequest) -> ExecutionResult {
        match self.transcript.get(&req.label) {
            Some(run) => ExecutionResult {
                exit_status: run.exit_status,
                stage: run.stage,
                stdout: run.stdout.clone(),
                stderr: run.stderr.clone(),
                duration_ms: run.duration_ms,
            },
            None => ExecutionResult {
                exit_status: RunStatus::Nonzero,
                stage: Stage::Run,
                stdout: String::new(),
                stderr: format!("no transcript entry for {}", req.label),
                duration_ms: 0,
            },
        }
    }
}

/// Wraps a backend so that at most `permits` executions run at once, across all callers.
pub struct LimitedBackend<B> {
    inner: B,
    permits: Mutex<usize>,
    freed: Condvar,
}

impl<B: ExecutionBackend> LimitedBackend<B> {
    pub fn new(inner: B, permits: usize) -> Self {
        Self {
            inner,
            permits: Mutex::new(permits.max(1)),
            freed: Condvar::new(),
        }
    }
}

impl<B: ExecutionBackend> ExecutionBackend for LimitedBackend<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn check_available(&self) -> Result<(), String> {
        self.inner.check_available()
    }

    fn execute(&self, req: &ExecutionRequest) -> ExecutionResult {
        {
            let mut free = self.permits.lock().unwrap_or_else(|e| e.into_inner());
            while *free == 0 {
                free = self.freed.wait(free).unwrap_or_else(|e| e.into_inner());
            }
            *free -= 1;
        }
        let result = self.inner.execute(req);
        *self.permits.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.freed.notify_one();
        result
    }
}
