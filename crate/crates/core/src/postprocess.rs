//! Core loosening: while a formula solves too fast, find its core and
//! dissolve it by adding a fresh variable to one of its clauses that is not
//! part of the original core. Also the SAT flip, which loosens the original
//! core itself.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cnf::{brute_force_sat, deletion_core, solve_with_stats, Clause, CnfError, CnfFormula, CoreSet, Lit, SatResult};

#[derive(Debug, Error)]
pub enum PostError {
    #[error("detected core lies inside the original core; nothing to loosen")]
    Converged,
    #[error("invalid hardness threshold: {0}")]
    Threshold(String),
    #[error("hardness probe failed: {0}")]
    Probe(String),
    #[error("core detection failed: {0}")]
    CoreFinder(String),
    #[error("original core is empty or missing from the formula")]
    MissingOrigin,
    #[error(transparent)]
    Cnf(#[from] CnfError),
}

/// Measures how hard a formula is; larger is harder. Implementations report
/// solver CPU seconds or a deterministic effort proxy.
pub trait HardnessProbe {
    fn measure(&mut self, f: &CnfFormula) -> Result<f64, PostError>;
}

/// Returns an unsatisfiable clause subset of `f`, or `None` when `f` is
/// satisfiable.
pub trait CoreFinder {
    fn find_core(&mut self, f: &CnfFormula) -> Result<Option<CoreSet>, PostError>;
}

/// Decision count of the internal DPLL: deterministic, machine-independent.
#[derive(Clone, Debug)]
pub struct DecisionProbe {
    pub var_limit: usize,
}

impl HardnessProbe for DecisionProbe {
    fn measure(&mut self, f: &CnfFormula) -> Result<f64, PostError> {
        let (_, stats) = solve_with_stats(f, self.var_limit)?;
        Ok(stats.decisions as f64)
    }
}

/// Deletion-based core from the internal oracle.
#[derive(Clone, Debug)]
pub struct DeletionCoreFinder {
    pub var_limit: usize,
}

impl CoreFinder for DeletionCoreFinder {
    fn find_core(&mut self, f: &CnfFormula) -> Result<Option<CoreSet>, PostError> {
        if brute_force_sat(f, self.var_limit)?.is_sat() {
            return Ok(None);
        }
        Ok(Some(deletion_core(f, self.var_limit)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HardnessThreshold {
    pub min_solve_seconds: f64,
    pub timeout: f64,
    pub max_iterations: usize,
}

impl HardnessThreshold {
    /// Half of the original instance's measured hardness.
    pub fn relative_to(original: f64, timeout: f64, max_iterations: usize) -> Self {
        HardnessThreshold { min_solve_seconds: 0.5 * original, timeout, max_iterations }
    }

    pub fn validate(&self) -> Result<(), PostError> {
        if !(self.min_solve_seconds > 0.0 && self.min_solve_seconds <= self.timeout) {
            return Err(PostError::Threshold(format!(
                "need 0 < min_solve_seconds ({}) <= timeout ({})",
                self.min_solve_seconds, self.timeout
            )));
        }
        if self.max_iterations == 0 {
            return Err(PostError::Threshold("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

fn clause_keys(clauses: &[Clause]) -> HashSet<Vec<Lit>> {
    clauses.iter().map(Clause::normalized).collect()
}

/// Appends a fresh positive variable to the first clause (in file order) of
/// `detected` whose literal set is not among `k_origin`. Returns the new
/// formula and the index of the loosened clause.
pub fn loosen_step(f: &CnfFormula, k_origin: &[Clause], detected: &CoreSet) -> Result<(CnfFormula, usize), PostError> {
    let origin = clause_keys(k_origin);
    let target = detected
        .indices()
        .iter()
        .copied()
        .find(|&i| !origin.contains(&f.clause(i).normalized()))
        .ok_or(PostError::Converged)?;
    let (out, _) = f.with_fresh_literal(target);
    Ok((out, target))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PostStatus {
    /// hardness reached the threshold
    ThresholdMet,
    /// the remaining fast core is the original one
    Converged,
    /// no core: the formula is satisfiable
    Satisfiable,
    /// stopped after `max_iterations` measurements
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub solve_seconds: f64,
    pub core_size: Option<usize>,
    pub action: String,
}

#[derive(Clone, Debug)]
pub struct PostResult {
    pub formula: CnfFormula,
    pub status: PostStatus,
    pub log: Vec<IterRecord>,
}

impl PostResult {
    pub fn log_csv(&self) -> String {
        let mut out = String::from("iter,solve_seconds,core_size,action\n");
        for r in &self.log {
            let core = r.core_size.map(|c| c.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.iter, r.solve_seconds, core, r.action);
        }
        out
    }
}

/// Loosens unexpected cores until the probe reports at least the threshold,
/// the detected core is the original one, or the iteration limit is hit.
pub fn postprocess(
    f: &CnfFormula,
    k_origin: &[Clause],
    threshold: &HardnessThreshold,
    probe: &mut dyn HardnessProbe,
    finder: &mut dyn CoreFinder,
) -> Result<PostResult, PostError> {
    threshold.validate()?;
    let mut cur = f.clone();
    let mut log = Vec::new();
    for iter in 1..=threshold.max_iterations {
        let t = probe.measure(&cur)?;
        if t >= threshold.min_solve_seconds {
            log.push(IterRecord { iter, solve_seconds: t, core_size: None, action: "accept".into() });
            return Ok(PostResult { formula: cur, status: PostStatus::ThresholdMet, log });
        }
        let Some(core) = finder.find_core(&cur)? else {
            log.push(IterRecord { iter, solve_seconds: t, core_size: None, action: "satisfiable".into() });
            return Ok(PostResult { formula: cur, status: PostStatus::Satisfiable, log });
        };
        match loosen_step(&cur, k_origin, &core) {
            Ok((next, i)) => {
                log.push(IterRecord { iter, solve_seconds: t, core_size: Some(core.len()), action: format!("loosen {i}") });
                cur = next;
            }
            Err(PostError::Converged) => {
                log.push(IterRecord { iter, solve_seconds: t, core_size: Some(core.len()), action: "converged".into() });
                return Ok(PostResult { formula: cur, status: PostStatus::Converged, log });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PostResult { formula: cur, status: PostStatus::IterationLimit, log })
}

/// Loosens clauses of the original core (falling back to the first detected
/// core clause when the detected core avoids it) until the oracle reports
/// SAT.
pub fn flip_to_sat(f: &CnfFormula, k_origin: &[Clause], var_limit: usize) -> Result<CnfFormula, PostError> {
    if k_origin.is_empty() {
        return Err(PostError::MissingOrigin);
    }
    let origin = clause_keys(k_origin);
    if !f.clauses().iter().any(|c| origin.contains(&c.normalized())) {
        return Err(PostError::MissingOrigin);
    }
    let mut cur = f.clone();
    loop {
        if let SatResult::Sat(_) = brute_force_sat(&cur, var_limit)? {
            return Ok(cur);
        }
        let core = deletion_core(&cur, var_limit)?;
        let idx = core.indices();
        let target = idx
            .iter()
            .copied()
            .find(|&i| origin.contains(&cur.clause(i).normalized()))
            .unwrap_or(idx[0]);
        cur = cur.with_fresh_literal(target).0;
    }
}
