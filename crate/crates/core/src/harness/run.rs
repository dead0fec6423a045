//! Subprocess execution with a CPU-time limit and resource accounting.

use std::io::{Read, Seek, SeekFrom};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::Path;
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{HarnessError, SolverSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunStatus {
    Sat,
    Unsat,
    Timeout,
    Error,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Sat => "SAT",
            RunStatus::Unsat => "UNSAT",
            RunStatus::Timeout => "TIMEOUT",
            RunStatus::Error => "ERROR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "SAT" => Some(RunStatus::Sat),
            "UNSAT" => Some(RunStatus::Unsat),
            "TIMEOUT" => Some(RunStatus::Timeout),
            "ERROR" => Some(RunStatus::Error),
            _ => None,
        }
    }

    pub fn solved(self) -> bool {
        matches!(self, RunStatus::Sat | RunStatus::Unsat)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: String,
    pub instance: String,
    pub status: RunStatus,
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
    pub limit_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<String>,
}

impl RunRecord {
    /// CPU seconds with unsolved runs counted at the limit.
    pub fn effective_seconds(&self) -> f64 {
        if self.status.solved() { self.cpu_seconds } else { self.limit_seconds }
    }
}

struct Finished {
    status: ExitStatus,
    cpu: f64,
    wall: f64,
    timed_out: bool,
}

fn tv_seconds(tv: libc::timeval) -> f64 {
    tv.tv_sec as f64 + tv.tv_usec as f64 * 1e-6
}

fn kill_group(pgid: i32) {
    // SAFETY: plain syscall; ESRCH when the group is already gone is fine
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
    }
}

/// Runs `cmd` in its own process group under an RLIMIT_CPU of `limit`
/// seconds (rounded up), with a wall-clock guard. The whole group is killed
/// once the leader exits or times out.
fn run_limited(mut cmd: Command, limit: f64) -> Result<Finished, std::io::Error> {
    let soft = limit.ceil().max(1.0) as libc::rlim_t;
    // SAFETY: only async-signal-safe calls between fork and exec
    unsafe {
        cmd.pre_exec(move || {
            if libc::setpgid(0, 0) != 0 {
                return Err(std::io::Error::last_os_error());
            }
            let rl = libc::rlimit { rlim_cur: soft, rlim_max: soft + 1 };
            if libc::setrlimit(libc::RLIMIT_CPU, &rl) != 0 {
                return Err(std::io::Error::last_os_error());
            }
            Ok(())
        });
    }
    let start = Instant::now();
    let child = cmd.spawn()?;
    let pid = child.id() as i32;
    let guard = Duration::from_secs_f64(1.5 * limit + 0.5);
    let mut timed_out = false;
    let mut sleep = Duration::from_millis(1);
    loop {
        let mut status: libc::c_int = 0;
        // SAFETY: rusage is plain data, zero-initialised is valid
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        // SAFETY: pid is our direct child
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if r == pid {
            let wall = start.elapsed().as_secs_f64();
            kill_group(pid);
            let cpu = tv_seconds(usage.ru_utime) + tv_seconds(usage.ru_stime);
            return Ok(Finished { status: ExitStatus::from_raw(status), cpu, wall, timed_out });
        }
        if r < 0 {
            let err = std::io::Error::last_os_error();
            if err.kind() != std::io::ErrorKind::Interrupted {
                kill_group(pid);
                return Err(err);
            }
        }
        if !timed_out && start.elapsed() > guard {
            timed_out = true;
            kill_group(pid);
        }
        thread::sleep(sleep);
        sleep = (sleep * 2).min(Duration::from_millis(20));
    }
}

/// Runs one solver on one instance. `extra` is appended to the spec's
/// arguments; `proof` fills the `{proof}` placeholder.
pub fn run_solver(
    spec: &SolverSpec,
    instance: &Path,
    limit: f64,
    extra: &[String],
    proof: Option<&Path>,
) -> Result<RunRecord, HarnessError> {
    if !instance.is_file() {
        return Err(HarnessError::MissingInstance(instance.to_path_buf()));
    }
    if !(limit > 0.0) {
        return Err(HarnessError::Config(format!("time limit must be positive, got {limit}")));
    }
    let mut stderr_file = tempfile::tempfile()?;
    let mut cmd = Command::new(&spec.executable);
    cmd.args(spec.render_args(instance, proof))
        .args(extra)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(stderr_file.try_clone()?);
    let done = run_limited(cmd, limit)
        .map_err(|e| HarnessError::Spawn { tool: spec.name.clone(), source: e })?;
    let signal = done.status.signal();
    let cpu_limited = matches!(signal, Some(libc::SIGXCPU) | Some(libc::SIGKILL)) && done.cpu >= limit.ceil() - 0.05;
    let mut record = RunRecord {
        solver: spec.name.clone(),
        instance: instance_name(instance),
        status: RunStatus::Error,
        cpu_seconds: done.cpu,
        wall_seconds: done.wall,
        limit_seconds: limit,
        stderr: None,
    };
    if done.timed_out || cpu_limited || done.cpu > limit {
        record.status = RunStatus::Timeout;
        record.cpu_seconds = limit;
        return Ok(record);
    }
    match done.status.code() {
        Some(c) if c == spec.sat_code => record.status = RunStatus::Sat,
        Some(c) if c == spec.unsat_code => record.status = RunStatus::Unsat,
        _ => {
            let mut text = String::new();
            stderr_file.seek(std::io::SeekFrom::Start(0))?;
            let _ = stderr_file.read_to_string(&mut text);
            let what = match (done.status.code(), signal) {
                (Some(c), _) => format!("exit code {c}"),
                (None, Some(s)) => format!("signal {s}"),
                _ => "unknown exit".to_string(),
            };
            record.stderr = Some(format!("{what}: {}", text.trim()));
        }
    }
    Ok(record)
}

/// Runs an auxiliary tool under the same limits. Returns the exit code
/// (`None` when killed or timed out) and captured stderr.
pub(crate) fn run_tool(program: &Path, args: &[String], limit: f64) -> Result<(Option<i32>, String), std::io::Error> {
    let mut stderr_file = tempfile::tempfile()?;
    let mut cmd = Command::new(program);
    cmd.args(args).stdin(Stdio::null()).stdout(Stdio::null()).stderr(stderr_file.try_clone()?);
    let done = run_limited(cmd, limit)?;
    let mut text = String::new();
    stderr_file.seek(SeekFrom::Start(0))?;
    let _ = stderr_file.read_to_string(&mut text);
    let code = if done.timed_out { None } else { done.status.code() };
    Ok((code, text))
}

/// Display name of an instance: its file name.
pub fn instance_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}
