//! Small synthetic corpora: formulas with planted variable communities and
//! a planted unsatisfiable core, plus plain random UNSAT formulas.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cnf::{brute_force_sat, CnfFormula, CoreSet, CoreSource, Lit, SatResult, DEFAULT_VAR_LIMIT};

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedParams {
    pub num_communities: usize,
    pub vars_per_community: usize,
    pub clauses_per_community: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// probability that a clause borrows one variable from another community
    pub cross_prob: f64,
    /// the core is every sign pattern over this many variables
    pub core_vars: usize,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            num_communities: 3,
            vars_per_community: 5,
            clauses_per_community: 8,
            min_len: 2,
            max_len: 4,
            cross_prob: 0.25,
            core_vars: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub formula: CnfFormula,
    /// 0-based variable -> community id
    pub communities: Vec<usize>,
    pub core: CoreSet,
}

/// Builds one planted instance. The core clauses come first, over the
/// first `core_vars` variables of community 0.
pub fn planted_instance(p: &PlantedParams, rng: &mut impl Rng) -> PlantedInstance {
    let k = p.num_communities.max(1);
    let per = p.vars_per_community.max(p.max_len).max(p.core_vars);
    let n = k * per;
    let communities: Vec<usize> = (0..n).map(|v| v / per).collect();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    for mask in 0..(1u32 << p.core_vars) {
        clauses.push(
            (0..p.core_vars)
                .map(|i| {
                    let v = i as Lit + 1;
                    if mask >> i & 1 == 1 { -v } else { v }
                })
                .collect(),
        );
    }
    let num_core = clauses.len();
    for c in 0..k {
        let members: Vec<usize> = (c * per..(c + 1) * per).collect();
        for _ in 0..p.clauses_per_community {
            let len = rng.gen_range(p.min_len..=p.max_len);
            let mut vars: Vec<usize> = members.choose_multiple(rng, len).copied().collect();
            if k > 1 && rng.gen_bool(p.cross_prob) {
                let other = (c + rng.gen_range(1..k)) % k;
                vars[0] = other * per + rng.gen_range(0..per);
            }
            vars.sort_unstable();
            clauses.push(
                vars.into_iter()
                    .map(|v| {
                        let l = v as Lit + 1;
                        if rng.gen_bool(0.5) { l } else { -l }
                    })
                    .collect(),
            );
        }
    }
    let formula = CnfFormula::from_lits(n, clauses).expect("literals in range");
    let m = formula.num_clauses();
    let core = CoreSet::new((0..num_core).collect(), CoreSource::File, m).expect("core indices in range");
    PlantedInstance { formula, communities, core }
}

/// Random k-CNF over `n` variables with `m` clauses of distinct variables.
pub fn random_kcnf(n: usize, m: usize, k: usize, rng: &mut impl Rng) -> CnfFormula {
    let vars: Vec<usize> = (1..=n).collect();
    let clauses = (0..m)
        .map(|_| {
            vars.choose_multiple(rng, k.min(n))
                .map(|&v| if rng.gen_bool(0.5) { v as Lit } else { -(v as Lit) })
                .collect::<Vec<_>>()
        })
        .collect();
    CnfFormula::from_lits(n, clauses).expect("literals in range")
}

/// Random 3-CNF formulas above the threshold ratio, resampled until the
/// oracle reports UNSAT. `n` must stay within the oracle's variable limit.
pub fn random_unsat(n: usize, rng: &mut impl Rng) -> CnfFormula {
    assert!(n >= 3 && n <= DEFAULT_VAR_LIMIT);
    let m = 7 * n;
    loop {
        let f = random_kcnf(n, m, 3, rng);
        if brute_force_sat(&f, DEFAULT_VAR_LIMIT).expect("within limit") == SatResult::Unsat {
            return f;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planted_instance_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = PlantedParams::default();
        let inst = planted_instance(&p, &mut rng);
        assert_eq!(inst.formula.num_vars(), 15);
        assert_eq!(inst.formula.num_clauses(), 4 + 24);
        assert_eq!(inst.core.indices(), &[0, 1, 2, 3]);
        let core = inst.core.to_formula(&inst.formula);
        assert_eq!(brute_force_sat(&core, 24).unwrap(), SatResult::Unsat);
        assert_eq!(brute_force_sat(&inst.formula, 24).unwrap(), SatResult::Unsat);
        let again = planted_instance(&p, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(again.formula, inst.formula);
    }

    #[test]
    fn random_unsat_is_unsat() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [3, 8, 12] {
            let f = random_unsat(n, &mut rng);
            assert_eq!(brute_force_sat(&f, 24).unwrap(), SatResult::Unsat);
        }
    }
}
