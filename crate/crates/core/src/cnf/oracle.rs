//! DPLL with unit propagation for formulas small enough to decide exhaustively.

use super::{CnfError, CnfFormula, CoreSet, CoreSource, Lit};

pub const DEFAULT_VAR_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// `assignment[v - 1]` is the value of variable `v`.
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// Search effort counters. `decisions` is deterministic for a given formula
/// and serves as a machine-independent hardness proxy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub decisions: u64,
    pub propagations: u64,
}

pub fn brute_force_sat(f: &CnfFormula, var_limit: usize) -> Result<SatResult, CnfError> {
    solve_with_stats(f, var_limit).map(|(r, _)| r)
}

pub fn solve_with_stats(
    f: &CnfFormula,
    var_limit: usize,
) -> Result<(SatResult, SolveStats), CnfError> {
    if f.num_vars() > var_limit {
        return Err(CnfError::VarLimitExceeded { num_vars: f.num_vars(), limit: var_limit });
    }
    let clauses: Vec<&[Lit]> = f.clauses().iter().map(|c| c.lits()).collect();
    Ok(solve_clauses(&clauses, f.num_vars()))
}

fn solve_clauses(clauses: &[&[Lit]], num_vars: usize) -> (SatResult, SolveStats) {
    let mut dpll = Dpll {
        clauses,
        values: vec![0; num_vars + 1],
        trail: Vec::with_capacity(num_vars),
        stats: SolveStats::default(),
    };
    let result = if dpll.search() {
        SatResult::Sat(dpll.values[1..].iter().map(|&v| v > 0).collect())
    } else {
        SatResult::Unsat
    };
    (result, dpll.stats)
}

struct Dpll<'a> {
    clauses: &'a [&'a [Lit]],
    /// +1 true, -1 false, 0 unassigned; index 0 unused
    values: Vec<i8>,
    trail: Vec<usize>,
    stats: SolveStats,
}

impl Dpll<'_> {
    fn value(&self, lit: Lit) -> i8 {
        let v = self.values[lit.unsigned_abs() as usize];
        if lit > 0 {
            v
        } else {
            -v
        }
    }

    fn assign(&mut self, lit: Lit) {
        let var = lit.unsigned_abs() as usize;
        self.values[var] = if lit > 0 { 1 } else { -1 };
        self.trail.push(var);
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let var = self.trail.pop().unwrap();
            self.values[var] = 0;
        }
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for &clause in self.clauses {
                let mut open = 0usize;
                let mut last = 0;
                let mut satisfied = false;
                for &lit in clause {
                    match self.value(lit) {
                        1 => {
                            satisfied = true;
                            break;
                        }
                        0 => {
                            open += 1;
                            last = lit;
                        }
                        _ => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match open {
                    0 => return false,
                    1 => {
                        self.assign(last);
                        self.stats.propagations += 1;
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// First open literal of the shortest unsatisfied clause.
    fn pick_branch(&self) -> Option<Lit> {
        let mut best: Option<(usize, Lit)> = None;
        for &clause in self.clauses {
            if clause.iter().any(|&l| self.value(l) == 1) {
                continue;
            }
            let open: Vec<Lit> = clause.iter().copied().filter(|&l| self.value(l) == 0).collect();
            if let Some(&first) = open.first() {
                if best.is_none_or(|(len, _)| open.len() < len) {
                    best = Some((open.len(), first));
                }
            }
        }
        best.map(|(_, l)| l)
    }

    fn search(&mut self) -> bool {
        let mark = self.trail.len();
        if !self.propagate() {
            self.undo(mark);
            return false;
        }
        let Some(lit) = self.pick_branch() else {
            return true;
        };
        for choice in [lit, -lit] {
            self.stats.decisions += 1;
            let inner = self.trail.len();
            self.assign(choice);
            if self.search() {
                return true;
            }
            self.undo(inner);
        }
        self.undo(mark);
        false
    }
}

/// Deletion-based core: walk clauses in order, dropping each one whose
/// removal keeps the remainder unsatisfiable.
pub fn deletion_core(f: &CnfFormula, var_limit: usize) -> Result<CoreSet, CnfError> {
    if f.num_vars() > var_limit {
        return Err(CnfError::VarLimitExceeded { num_vars: f.num_vars(), limit: var_limit });
    }
    let all: Vec<&[Lit]> = f.clauses().iter().map(|c| c.lits()).collect();
    if solve_clauses(&all, f.num_vars()).0.is_sat() {
        return Err(CnfError::NotUnsatisfiable);
    }
    let mut keep: Vec<usize> = (0..f.num_clauses()).collect();
    let mut i = 0;
    while i < keep.len() {
        let trial: Vec<&[Lit]> = keep
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &c)| all[c])
            .collect();
        if solve_clauses(&trial, f.num_vars()).0.is_sat() {
            i += 1;
        } else {
            keep.remove(i);
        }
    }
    CoreSet::new(keep, CoreSource::InternalOracle, f.num_clauses())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn formula(n: usize, cls: Vec<Vec<Lit>>) -> CnfFormula {
        CnfFormula::from_lits(n, cls).unwrap()
    }

    fn satisfies(f: &CnfFormula, a: &[bool]) -> bool {
        f.clauses().iter().all(|c| {
            c.lits().iter().any(|&l| a[l.unsigned_abs() as usize - 1] == (l > 0))
        })
    }

    /// 2^n enumeration, independent of the DPLL code path.
    fn truth_table_sat(f: &CnfFormula) -> bool {
        let n = f.num_vars();
        (0u32..(1 << n)).any(|bits| {
            let a: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            satisfies(f, &a)
        })
    }

    fn random_formula(rng: &mut impl Rng, n: usize, m: usize, k: usize) -> CnfFormula {
        let cls = (0..m)
            .map(|_| {
                (0..rng.gen_range(1..=k))
                    .map(|_| {
                        let v = rng.gen_range(1..=n as Lit);
                        if rng.gen() {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect()
            })
            .collect();
        formula(n, cls)
    }

    #[test]
    fn small_cases() {
        assert_eq!(brute_force_sat(&formula(1, vec![vec![1], vec![-1]]), 24).unwrap(), SatResult::Unsat);
        assert_eq!(brute_force_sat(&CnfFormula::default(), 24).unwrap(), SatResult::Sat(vec![]));
        match brute_force_sat(&formula(2, vec![vec![1, 2], vec![-1]]), 24).unwrap() {
            SatResult::Sat(a) => assert!(!a[0] && a[1]),
            SatResult::Unsat => panic!("expected SAT"),
        }
        let with_empty = formula(1, vec![vec![1], vec![]]);
        assert_eq!(brute_force_sat(&with_empty, 24).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn var_limit_enforced() {
        let f = formula(30, vec![vec![30]]);
        assert!(matches!(brute_force_sat(&f, 24), Err(CnfError::VarLimitExceeded { .. })));
    }

    #[test]
    fn agrees_with_truth_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut unsat = 0;
        for _ in 0..400 {
            let n = rng.gen_range(1..=12);
            let m = rng.gen_range(0..=6 * n);
            let f = random_formula(&mut rng, n, m, 3);
            let r = brute_force_sat(&f, 24).unwrap();
            assert_eq!(r.is_sat(), truth_table_sat(&f));
            if let SatResult::Sat(a) = &r {
                assert!(satisfies(&f, a));
            } else {
                unsat += 1;
            }
        }
        assert!(unsat > 20, "cross-check should cover both outcomes");
    }

    #[test]
    fn deletion_core_examples() {
        let f = formula(1, vec![vec![1], vec![-1]]);
        assert_eq!(deletion_core(&f, 24).unwrap().indices(), &[0, 1]);
        let g = formula(3, vec![vec![1], vec![-1], vec![2, 3]]);
        assert_eq!(deletion_core(&g, 24).unwrap().indices(), &[0, 1]);
        let sat = formula(2, vec![vec![1, 2]]);
        assert!(matches!(deletion_core(&sat, 24), Err(CnfError::NotUnsatisfiable)));
    }

    #[test]
    fn deletion_core_is_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 30 {
            let n = rng.gen_range(3..=10);
            let f = random_formula(&mut rng, n, 6 * n, 3);
            if truth_table_sat(&f) {
                continue;
            }
            let core = deletion_core(&f, 24).unwrap();
            let sub = f.subformula(core.indices());
            assert!(!truth_table_sat(&sub));
            for skip in 0..core.len() {
                let rest: Vec<usize> =
                    core.indices().iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &c)| c).collect();
                assert!(truth_table_sat(&f.subformula(&rest)));
            }
            checked += 1;
        }
    }
}
