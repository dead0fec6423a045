//! CNF formula model, DIMACS I/O, and exhaustive desk-scale oracles.
//!
//! Formulas are immutable once built. Literals use the DIMACS convention: a
//! nonzero `i32` whose absolute value is the 1-based variable index and whose
//! sign is the polarity.

mod core_set;
mod dimacs;
mod oracle;

use std::collections::BTreeSet;

use thiserror::Error;

pub use core_set::{match_core_clauses, read_core_file, write_core_file, CoreSet, CoreSource};
pub use dimacs::{
    parse_dimacs, parse_dimacs_with_warnings, read_dimacs_file, serialize_dimacs,
    write_dimacs_file, ParseWarning,
};
pub use oracle::{
    brute_force_sat, deletion_core, solve_with_stats, SatResult, SolveStats, DEFAULT_VAR_LIMIT,
};

pub type Lit = i32;

#[derive(Debug, Error)]
pub enum CnfError {
    #[error("line {line}: missing `p cnf` header before clause data")]
    MissingHeader { line: usize },
    #[error("line {line}: malformed header `{text}`")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}: duplicate `p` header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: invalid token `{token}`")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: literal {lit} out of declared range 1..={num_vars}")]
    LiteralOutOfRange { line: usize, lit: i64, num_vars: usize },
    #[error("line {line}: final clause is not terminated by 0")]
    UnterminatedClause { line: usize },
    #[error("line {line}: header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { line: usize, declared: usize, found: usize },
    #[error("literal {lit} is invalid for a formula over {num_vars} variables")]
    InvalidLiteral { lit: Lit, num_vars: usize },
    #[error("formula has {num_vars} variables, above the oracle limit of {limit}")]
    VarLimitExceeded { num_vars: usize, limit: usize },
    #[error("formula is not unsatisfiable")]
    NotUnsatisfiable,
    #[error("core index {index} out of range for {num_clauses} clauses")]
    CoreIndexOutOfRange { index: usize, num_clauses: usize },
    #[error("core clause {clause:?} has no matching clause in the instance")]
    UnmatchedCoreClause { clause: Vec<Lit> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A disjunction of literals in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn new(lits: Vec<Lit>) -> Self {
        Clause { lits }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    /// True when some variable appears with both polarities.
    pub fn is_tautology(&self) -> bool {
        let set: BTreeSet<Lit> = self.lits.iter().copied().collect();
        set.iter().any(|&l| l > 0 && set.contains(&-l))
    }

    /// Sorted, deduplicated literal list: the clause identity used when
    /// matching clauses across files.
    pub fn normalized(&self) -> Vec<Lit> {
        let mut v = self.lits.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Distinct variables (1-based) in ascending order.
    pub fn vars(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.lits.iter().map(|l| l.unsigned_abs() as usize).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn push(&mut self, lit: Lit) {
        self.lits.push(lit);
    }
}

impl From<Vec<Lit>> for Clause {
    fn from(lits: Vec<Lit>) -> Self {
        Clause { lits }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
    comments: Vec<String>,
}

impl CnfFormula {
    /// Builds a formula, checking every literal against `num_vars`.
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        for c in &clauses {
            for &l in c.lits() {
                if l == 0 || l.unsigned_abs() as usize > num_vars {
                    return Err(CnfError::InvalidLiteral { lit: l, num_vars });
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses, comments: Vec::new() })
    }

    pub fn from_lits(num_vars: usize, clauses: Vec<Vec<Lit>>) -> Result<Self, CnfError> {
        Self::new(num_vars, clauses.into_iter().map(Clause::from).collect())
    }

    pub fn with_comments(mut self, comments: Vec<String>) -> Self {
        self.comments = comments;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, index: usize) -> &Clause {
        &self.clauses[index]
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }

    /// Clauses at `indices` (in the given order) over the same variable numbering.
    pub fn subformula(&self, indices: &[usize]) -> CnfFormula {
        CnfFormula {
            num_vars: self.num_vars,
            clauses: indices.iter().map(|&i| self.clauses[i].clone()).collect(),
            comments: Vec::new(),
        }
    }

    /// Copy with a fresh positive variable appended to clause `index`.
    /// Returns the new formula and the fresh variable.
    pub fn with_fresh_literal(&self, index: usize) -> (CnfFormula, Lit) {
        let mut out = self.clone();
        out.num_vars += 1;
        let fresh = out.num_vars as Lit;
        out.clauses[index].push(fresh);
        (out, fresh)
    }

    /// Clause multiset as sorted normalized literal lists.
    pub fn normalized_multiset(&self) -> Vec<Vec<Lit>> {
        let mut v: Vec<Vec<Lit>> = self.clauses.iter().map(Clause::normalized).collect();
        v.sort();
        v
    }
}
