//! External solver harness: timed runs, core detection through a proof
//! checker, solver ranking and grid-search tuning.

mod rank;
mod run;
mod tune;

use std::collections::BTreeMap;
use std::env;
use std::fmt::Write as _;
use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{match_core_clauses, parse_dimacs, write_core_file, read_dimacs_file, write_dimacs_file, CnfError, CnfFormula, CoreSet, CoreSource};
use crate::par;
use crate::postprocess::{CoreFinder, HardnessProbe, PostError};

pub use rank::{generated_source, rank_solvers, recovery_accuracy, InstanceRanking, RankingReport};
pub use run::{instance_name, run_solver, RunRecord, RunStatus};
pub use tune::{tune_grid, tuning_gain, GridPoint, Runner, SolverRunner, TuneGrid, TuneReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{tool}: executable `{path}` not found or not runnable")]
    NotRunnable { tool: String, path: PathBuf },
    #[error("instance `{0}` does not exist")]
    MissingInstance(PathBuf),
    #[error("failed to start {tool}: {source}")]
    Spawn { tool: String, source: std::io::Error },
    #[error("{0}: no proof of unsatisfiability (instance is satisfiable)")]
    NoProof(String),
    #[error("{solver} did not finish on {instance}: {status}")]
    SolverFailed { solver: String, instance: String, status: String },
    #[error("checker {checker} failed: {reason}")]
    CheckerFailed { checker: String, reason: String },
    #[error("missing record for solver {solver} on instance {instance}")]
    MissingRecord { instance: String, solver: String },
    #[error("duplicate record for solver {solver} on instance {instance}")]
    DuplicateRecord { instance: String, solver: String },
    #[error("no reference ranking for {0}")]
    MissingReference(String),
    #[error("no records to rank")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("results line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_args() -> Vec<String> {
    vec!["{instance}".to_string()]
}

fn default_sat() -> i32 {
    10
}

fn default_unsat() -> i32 {
    20
}

/// An external program and how to call it. Arguments may contain the
/// placeholders `{instance}`, `{proof}` and `{core}`. `tune_args` maps a
/// parameter name to an argument template containing `{value}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub name: String,
    pub executable: PathBuf,
    #[serde(default = "default_args")]
    pub args: Vec<String>,
    #[serde(default)]
    pub tune_args: BTreeMap<String, String>,
    #[serde(default = "default_sat")]
    pub sat_code: i32,
    #[serde(default = "default_unsat")]
    pub unsat_code: i32,
}

fn is_runnable(p: &Path) -> bool {
    fs::metadata(p).map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0).unwrap_or(false)
}

fn resolve_executable(exe: &Path) -> Option<PathBuf> {
    if exe.components().count() > 1 || exe.is_absolute() {
        return is_runnable(exe).then(|| exe.to_path_buf());
    }
    let path = env::var_os("PATH")?;
    env::split_paths(&path).map(|d| d.join(exe)).find(|p| is_runnable(p))
}

impl SolverSpec {
    pub fn new(name: impl Into<String>, executable: impl Into<PathBuf>) -> Self {
        SolverSpec {
            name: name.into(),
            executable: executable.into(),
            args: default_args(),
            tune_args: BTreeMap::new(),
            sat_code: default_sat(),
            unsat_code: default_unsat(),
        }
    }

    pub fn with_args<S: Into<String>>(mut self, args: impl IntoIterator<Item = S>) -> Self {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_tune_arg(mut self, param: impl Into<String>, template: impl Into<String>) -> Self {
        self.tune_args.insert(param.into(), template.into());
        self
    }

    /// Checks the executable and pins it to a resolved path.
    pub fn register(mut self) -> Result<Self, HarnessError> {
        if self.name.is_empty() {
            return Err(HarnessError::Config("tool name is empty".into()));
        }
        match resolve_executable(&self.executable) {
            Some(p) => {
                self.executable = p;
                Ok(self)
            }
            None => Err(HarnessError::NotRunnable { tool: self.name, path: self.executable }),
        }
    }

    fn render(&self, subs: &[(&str, &Path)]) -> Vec<String> {
        self.args
            .iter()
            .map(|a| {
                let mut a = a.clone();
                for (key, path) in subs {
                    a = a.replace(key, &path.to_string_lossy());
                }
                a
            })
            .collect()
    }

    pub(crate) fn render_args(&self, instance: &Path, proof: Option<&Path>) -> Vec<String> {
        let mut subs = vec![("{instance}", instance)];
        if let Some(p) = proof {
            subs.push(("{proof}", p));
        }
        self.render(&subs)
    }

    /// Extra arguments for a parameter assignment.
    pub fn param_args(&self, params: &[(String, f64)]) -> Result<Vec<String>, HarnessError> {
        params
            .iter()
            .map(|(name, value)| match self.tune_args.get(name) {
                Some(t) => Ok(t.replace("{value}", &value.to_string())),
                None => Err(HarnessError::Config(format!("{} has no argument for parameter `{name}`", self.name))),
            })
            .collect()
    }
}

/// Worker count for solver runs: all cores but one, at least one.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).saturating_sub(1).max(1)
}

/// Runs `jobs` on at most `workers` threads, one solver process per worker.
/// Results come back in job order.
pub fn run_pool<J, F>(jobs: &[J], workers: usize, f: F) -> Result<Vec<RunRecord>, HarnessError>
where
    J: Sync,
    F: Fn(&J) -> Result<RunRecord, HarnessError> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
        return pool.install(|| par::map(par::ExecMode::Parallel, jobs, &f)).into_iter().collect();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
    par::map(par::ExecMode::Sequential, jobs, &f).into_iter().collect()
}

/// Every solver on every instance. Records are ordered by (instance, solver).
pub fn run_matrix(
    solvers: &[SolverSpec],
    instances: &[PathBuf],
    limit: f64,
    workers: usize,
) -> Result<Vec<RunRecord>, HarnessError> {
    let jobs: Vec<(&SolverSpec, &PathBuf)> =
        instances.iter().flat_map(|i| solvers.iter().map(move |s| (s, i))).collect();
    let mut records = run_pool(&jobs, workers, |(s, i)| run_solver(s, i, limit, &[], None))?;
    records.sort_by(|a, b| (&a.instance, &a.solver).cmp(&(&b.instance, &b.solver)));
    Ok(records)
}

pub const RESULTS_HEADER: &str = "instance,solver,status,cpu_s,wall_s,limit_s";

pub fn results_csv(records: &[RunRecord]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{}",
            r.instance,
            r.solver,
            r.status.as_str(),
            r.cpu_seconds,
            r.wall_seconds,
            r.limit_seconds
        );
    }
    s
}

pub fn parse_results_csv(text: &str) -> Result<Vec<RunRecord>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RESULTS_HEADER => {}
        _ => return Err(HarnessError::Parse { line: 1, reason: format!("expected header `{RESULTS_HEADER}`") }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| HarnessError::Parse { line: i + 1, reason };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(err(format!("expected 6 columns, got {}", cols.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        out.push(RunRecord {
            instance: cols[0].to_string(),
            solver: cols[1].to_string(),
            status: RunStatus::parse(cols[2]).ok_or_else(|| err(format!("bad status `{}`", cols[2])))?,
            cpu_seconds: num(cols[3])?,
            wall_seconds: num(cols[4])?,
            limit_seconds: num(cols[5])?,
            stderr: None,
        });
    }
    Ok(out)
}

/// Solves `instance` with proof output, runs the checker to extract a core,
/// maps the core back to instance clause indices and writes it to
/// `core_out` as DIMACS with the instance's variable numbering.
pub fn detect_core_external(
    instance: &Path,
    solver: &SolverSpec,
    checker: &SolverSpec,
    limit: f64,
    core_out: &Path,
) -> Result<CoreSet, HarnessError> {
    let formula = read_dimacs_file(instance)?;
    let dir = tempfile::tempdir()?;
    let proof = dir.path().join("proof");
    let raw_core = dir.path().join("core.cnf");
    let rec = run_solver(solver, instance, limit, &[], Some(&proof))?;
    match rec.status {
        RunStatus::Unsat => {}
        RunStatus::Sat => return Err(HarnessError::NoProof(rec.instance)),
        s => {
            return Err(HarnessError::SolverFailed {
                solver: solver.name.clone(),
                instance: rec.instance,
                status: rec.stderr.unwrap_or_else(|| s.as_str().to_string()),
            })
        }
    }
    let args = checker.render(&[("{instance}", instance), ("{proof}", &proof), ("{core}", &raw_core)]);
    let fail = |reason: String| HarnessError::CheckerFailed { checker: checker.name.clone(), reason };
    let (code, stderr) = run::run_tool(&checker.executable, &args, limit)
        .map_err(|e| HarnessError::Spawn { tool: checker.name.clone(), source: e })?;
    let bytes = match fs::read(&raw_core) {
        Ok(b) => b,
        Err(_) => {
            let status = code.map_or_else(|| "killed or timed out".to_string(), |c| format!("exit code {c}"));
            return Err(fail(format!("no core written ({status}): {}", stderr.trim())));
        }
    };
    let core = parse_dimacs(&bytes).map_err(|e| fail(format!("core file: {e}")))?;
    let indices = match_core_clauses(&formula, core.clauses())?;
    let set = CoreSet::new(indices, CoreSource::ExternalChecker, formula.num_clauses())?;
    write_core_file(core_out, &formula, &set)?;
    Ok(set)
}

/// Hardness as solver CPU seconds.
pub struct SolverProbe {
    pub solver: SolverSpec,
    pub limit: f64,
}

impl HardnessProbe for SolverProbe {
    fn measure(&mut self, f: &CnfFormula) -> Result<f64, PostError> {
        let dir = tempfile::tempdir().map_err(|e| PostError::Probe(e.to_string()))?;
        let path = dir.path().join("probe.cnf");
        write_dimacs_file(&path, f)?;
        let rec = run_solver(&self.solver, &path, self.limit, &[], None).map_err(|e| PostError::Probe(e.to_string()))?;
        match rec.status {
            RunStatus::Error => Err(PostError::Probe(rec.stderr.unwrap_or_default())),
            _ => Ok(rec.effective_seconds()),
        }
    }
}

/// Core detection through an external solver and proof checker.
pub struct ExternalCoreFinder {
    pub solver: SolverSpec,
    pub checker: SolverSpec,
    pub limit: f64,
}

impl CoreFinder for ExternalCoreFinder {
    fn find_core(&mut self, f: &CnfFormula) -> Result<Option<CoreSet>, PostError> {
        let dir = tempfile::tempdir().map_err(|e| PostError::CoreFinder(e.to_string()))?;
        let path = dir.path().join("instance.cnf");
        write_dimacs_file(&path, f)?;
        match detect_core_external(&path, &self.solver, &self.checker, self.limit, &dir.path().join("core.cnf")) {
            Ok(core) => Ok(Some(core)),
            Err(HarnessError::NoProof(_)) => Ok(None),
            Err(e) => Err(PostError::CoreFinder(e.to_string())),
        }
    }
}
