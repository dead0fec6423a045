use std::collections::{BTreeMap, BTreeSet};

use super::{HarnessError, RunRecord};

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceRanking {
    pub instance: String,
    /// Solver names, fastest first.
    pub order: Vec<String>,
    /// Set when two adjacent solvers had equal times and name order decided.
    pub tied: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankingReport {
    /// Sorted by instance name.
    pub per_instance: Vec<InstanceRanking>,
    /// Mean 1-based rank per solver, best first.
    pub average: Vec<(String, f64)>,
}

impl RankingReport {
    pub fn get(&self, instance: &str) -> Option<&InstanceRanking> {
        self.per_instance
            .binary_search_by(|r| r.instance.as_str().cmp(instance))
            .ok()
            .map(|i| &self.per_instance[i])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("instance,ranking,tied\n");
        for r in &self.per_instance {
            s.push_str(&format!("{},{},{}\n", r.instance, r.order.join(" "), r.tied));
        }
        s
    }
}

/// Unsolved runs sort last at the limit value; equal keys fall back to name.
fn sort_key(r: &RunRecord) -> (bool, f64) {
    (!r.status.solved(), r.effective_seconds())
}

/// Ranks the solvers on every instance by ascending CPU time. Every solver
/// seen anywhere must have exactly one record on every instance.
pub fn rank_solvers(records: &[RunRecord]) -> Result<RankingReport, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Empty);
    }
    let solvers: BTreeSet<&str> = records.iter().map(|r| r.solver.as_str()).collect();
    let mut by_instance: BTreeMap<&str, BTreeMap<&str, &RunRecord>> = BTreeMap::new();
    for r in records {
        let slot = by_instance.entry(&r.instance).or_default();
        if slot.insert(&r.solver, r).is_some() {
            return Err(HarnessError::DuplicateRecord { instance: r.instance.clone(), solver: r.solver.clone() });
        }
    }
    let mut rank_sum: BTreeMap<&str, f64> = solvers.iter().map(|&s| (s, 0.0)).collect();
    let mut per_instance = Vec::with_capacity(by_instance.len());
    for (instance, recs) in &by_instance {
        if let Some(missing) = solvers.iter().find(|s| !recs.contains_key(*s)) {
            return Err(HarnessError::MissingRecord { instance: instance.to_string(), solver: missing.to_string() });
        }
        let mut rows: Vec<&RunRecord> = recs.values().copied().collect();
        rows.sort_by(|a, b| {
            let (ka, kb) = (sort_key(a), sort_key(b));
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then_with(|| a.solver.cmp(&b.solver))
        });
        let tied = rows.windows(2).any(|w| sort_key(w[0]) == sort_key(w[1]));
        for (k, r) in rows.iter().enumerate() {
            *rank_sum.get_mut(r.solver.as_str()).expect("solver set") += (k + 1) as f64;
        }
        per_instance.push(InstanceRanking {
            instance: instance.to_string(),
            order: rows.iter().map(|r| r.solver.clone()).collect(),
            tied,
        });
    }
    let n = by_instance.len() as f64;
    let mut average: Vec<(String, f64)> = rank_sum.into_iter().map(|(s, t)| (s.to_string(), t / n)).collect();
    average.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(RankingReport { per_instance, average })
}

/// Source instance name of a generated file: `<stem>.g<k>.cnf` maps to
/// `<stem>.cnf`. Other names map to themselves.
pub fn generated_source(name: &str) -> String {
    let (base, ext) = match name.strip_suffix(".cnf") {
        Some(b) => (b, ".cnf"),
        None => (name, ""),
    };
    match base.rsplit_once(".g") {
        Some((stem, k)) if !stem.is_empty() && !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) => {
            format!("{stem}{ext}")
        }
        _ => name.to_string(),
    }
}

/// Fraction of generated instances whose solver order equals that of the
/// reference instance they were generated from.
pub fn recovery_accuracy(
    generated: &RankingReport,
    reference: &RankingReport,
    source_of: impl Fn(&str) -> String,
) -> Result<f64, HarnessError> {
    if generated.per_instance.is_empty() {
        return Err(HarnessError::Empty);
    }
    let mut hits = 0usize;
    for g in &generated.per_instance {
        let src = source_of(&g.instance);
        let r = reference.get(&src).ok_or(HarnessError::MissingReference(src))?;
        if r.order == g.order {
            hits += 1;
        }
    }
    Ok(hits as f64 / generated.per_instance.len() as f64)
}
