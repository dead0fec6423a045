use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{parse_dimacs, serialize_dimacs, Clause, CnfError, CnfFormula, Lit};

/// Comment tag carrying exact clause indices inside a core DIMACS file.
const INDEX_TAG: &str = "hsg-core-indices";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoreSource {
    ExternalChecker,
    InternalOracle,
    File,
}

/// Indices into a formula's clause list whose conjunction is unsatisfiable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreSet {
    indices: Vec<usize>,
    source: CoreSource,
}

impl CoreSet {
    pub fn new(
        mut indices: Vec<usize>,
        source: CoreSource,
        num_clauses: usize,
    ) -> Result<Self, CnfError> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&index) = indices.iter().find(|&&i| i >= num_clauses) {
            return Err(CnfError::CoreIndexOutOfRange { index, num_clauses });
        }
        Ok(CoreSet { indices, source })
    }

    pub fn empty(source: CoreSource) -> Self {
        CoreSet { indices: Vec::new(), source }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn source(&self) -> CoreSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// The core as a standalone formula with the original numbering.
    pub fn to_formula(&self, f: &CnfFormula) -> CnfFormula {
        f.subformula(&self.indices)
    }
}

/// Maps each core clause to a distinct instance clause with the same
/// normalized literal multiset. Duplicated clauses are consumed in file order.
pub fn match_core_clauses(f: &CnfFormula, core: &[Clause]) -> Result<Vec<usize>, CnfError> {
    let mut by_key: HashMap<Vec<Lit>, Vec<usize>> = HashMap::new();
    for (i, c) in f.clauses().iter().enumerate().rev() {
        by_key.entry(c.normalized()).or_default().push(i);
    }
    let mut out = Vec::with_capacity(core.len());
    for c in core {
        let key = c.normalized();
        match by_key.get_mut(&key).and_then(Vec::pop) {
            Some(i) => out.push(i),
            None => return Err(CnfError::UnmatchedCoreClause { clause: key }),
        }
    }
    Ok(out)
}

/// Writes the core clauses as DIMACS with the formula's variable count. The
/// exact indices ride along in a comment so the file maps back unambiguously.
pub fn write_core_file(
    path: impl AsRef<Path>,
    f: &CnfFormula,
    core: &CoreSet,
) -> Result<(), CnfError> {
    let mut tag = INDEX_TAG.to_string();
    for i in core.indices() {
        tag.push(' ');
        tag.push_str(&i.to_string());
    }
    let out = core.to_formula(f).with_comments(vec![tag]);
    fs::write(path, serialize_dimacs(&out))?;
    Ok(())
}

/// Reads a core file against its instance. Uses the index comment when
/// present and consistent, otherwise falls back to clause matching.
pub fn read_core_file(path: impl AsRef<Path>, f: &CnfFormula) -> Result<CoreSet, CnfError> {
    let core = parse_dimacs(&fs::read(path)?)?;
    let tagged = core.comments().iter().find_map(|c| {
        let rest = c.strip_prefix(INDEX_TAG)?;
        rest.split_whitespace().map(|t| t.parse::<usize>().ok()).collect::<Option<Vec<_>>>()
    });
    if let Some(indices) = tagged {
        let consistent = indices.len() == core.num_clauses()
            && indices.iter().zip(core.clauses()).all(|(&i, c)| {
                i < f.num_clauses() && f.clause(i).normalized() == c.normalized()
            });
        if consistent {
            return CoreSet::new(indices, CoreSource::File, f.num_clauses());
        }
    }
    let indices = match_core_clauses(f, core.clauses())?;
    CoreSet::new(indices, CoreSource::File, f.num_clauses())
}
