use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Clause, CnfError, CnfFormula, Lit};

/// Non-fatal findings while parsing; the formula is still returned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseWarning {
    /// A literal repeated inside one clause; the repeat was dropped.
    DuplicateLiteral { line: usize, clause_index: usize, lit: Lit },
    /// Clause contains a literal and its negation. Kept as is.
    Tautology { line: usize, clause_index: usize },
    /// A lone `0`. DIMACS-legal, kept, but refused by template building.
    EmptyClause { line: usize, clause_index: usize },
}

pub fn parse_dimacs(bytes: &[u8]) -> Result<CnfFormula, CnfError> {
    parse_dimacs_with_warnings(bytes).map(|(f, _)| f)
}

pub fn parse_dimacs_with_warnings(
    bytes: &[u8],
) -> Result<(CnfFormula, Vec<ParseWarning>), CnfError> {
    let text = String::from_utf8_lossy(bytes);
    let mut comments = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut warnings = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut current_start = 0usize;
    let mut last_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('c') {
            let rest = rest.strip_suffix('\r').unwrap_or(rest);
            comments.push(rest.strip_prefix(' ').unwrap_or(rest).to_string());
            continue;
        }
        if trimmed.starts_with('%') {
            // SATLIB trailer
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(CnfError::DuplicateHeader { line });
            }
            header = Some(parse_header(trimmed, line)?);
            continue;
        }
        let (num_vars, _) = header.ok_or(CnfError::MissingHeader { line })?;
        for token in trimmed.split_whitespace() {
            let lit: i64 = token
                .parse()
                .map_err(|_| CnfError::InvalidToken { line, token: token.to_string() })?;
            if lit == 0 {
                let clause_index = clauses.len();
                let start = if current.is_empty() { line } else { current_start };
                clauses.push(finish_clause(
                    std::mem::take(&mut current),
                    start,
                    clause_index,
                    &mut warnings,
                ));
                current_start = 0;
                continue;
            }
            if lit.unsigned_abs() as usize > num_vars {
                return Err(CnfError::LiteralOutOfRange { line, lit, num_vars });
            }
            if current.is_empty() {
                current_start = line;
            }
            current.push(lit as Lit);
        }
    }

    let (num_vars, declared) = header.ok_or(CnfError::MissingHeader { line: last_line })?;
    if !current.is_empty() {
        return Err(CnfError::UnterminatedClause { line: last_line });
    }
    if clauses.len() != declared {
        return Err(CnfError::ClauseCountMismatch {
            line: last_line,
            declared,
            found: clauses.len(),
        });
    }
    let formula = CnfFormula { num_vars, clauses, comments };
    Ok((formula, warnings))
}

fn parse_header(text: &str, line: usize) -> Result<(usize, usize), CnfError> {
    let malformed = || CnfError::MalformedHeader { line, text: text.trim().to_string() };
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
        return Err(malformed());
    }
    let nv = parts[2].parse().map_err(|_| malformed())?;
    let nc = parts[3].parse().map_err(|_| malformed())?;
    Ok((nv, nc))
}

fn finish_clause(
    lits: Vec<Lit>,
    line: usize,
    clause_index: usize,
    warnings: &mut Vec<ParseWarning>,
) -> Clause {
    if lits.is_empty() {
        warnings.push(ParseWarning::EmptyClause { line, clause_index });
        return Clause::default();
    }
    let mut out: Vec<Lit> = Vec::with_capacity(lits.len());
    for lit in lits {
        if out.contains(&lit) {
            warnings.push(ParseWarning::DuplicateLiteral { line, clause_index, lit });
        } else {
            out.push(lit);
        }
    }
    let clause = Clause::from(out);
    if clause.is_tautology() {
        warnings.push(ParseWarning::Tautology { line, clause_index });
    }
    clause
}

/// Canonical DIMACS: comments, header, one clause per line, `0`-terminated.
pub fn serialize_dimacs(f: &CnfFormula) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + f.num_clauses() * 12);
    for c in f.comments() {
        if c.is_empty() {
            out.extend_from_slice(b"c\n");
        } else {
            writeln!(out, "c {c}").unwrap();
        }
    }
    writeln!(out, "p cnf {} {}", f.num_vars(), f.num_clauses()).unwrap();
    for clause in f.clauses() {
        for lit in clause.lits() {
            write!(out, "{lit} ").unwrap();
        }
        out.extend_from_slice(b"0\n");
    }
    out
}

pub fn read_dimacs_file(path: impl AsRef<Path>) -> Result<CnfFormula, CnfError> {
    parse_dimacs(&fs::read(path)?)
}

pub fn write_dimacs_file(path: impl AsRef<Path>, f: &CnfFormula) -> Result<(), CnfError> {
    fs::write(path, serialize_dimacs(f))?;
    Ok(())
}
