//! Generation from a template: core scrambling, then in-community merges,
//! then cross-community merges chosen by the trained pair scorers.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Lit};
use crate::gnn::{GraphEmbedding, PairScorer};
use crate::graphrep::{lit_node, node_lit, EmbeddedGraph, GraphError};
use crate::splitter::{SplitTrace, Stage};

/// Exhaustive pair enumeration is used up to this many candidate pairs.
const ENUMERATION_LIMIT: usize = 20_000;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScrambleScope {
    Core,
    Whole,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScramblePolicy {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub scope: ScrambleScope,
    pub seed: u64,
}

impl Default for ScramblePolicy {
    fn default() -> Self {
        ScramblePolicy { p1: 0.5, p2: 0.5, p3: 0.5, scope: ScrambleScope::Core, seed: 0 }
    }
}

impl ScramblePolicy {
    pub fn new(p1: f64, p2: f64, p3: f64, seed: u64) -> Self {
        ScramblePolicy { p1, p2, p3, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2), ("p3", self.p3)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenError::Config(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }
}

/// Renaming applied by a scramble. Variables are 0-based; `var_perm[v]` is
/// the new name of `v`, `flip[v]` whether `v` changed polarity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScrambleMap {
    pub var_perm: Vec<usize>,
    pub flip: Vec<bool>,
    /// clause slots whose literals were renamed
    pub slots: Vec<usize>,
    /// slot i's renamed content now lives in slot `slot_perm[i]`
    pub slot_perm: Vec<usize>,
}

impl ScrambleMap {
    pub fn identity(num_vars: usize) -> Self {
        ScrambleMap { var_perm: (0..num_vars).collect(), flip: vec![false; num_vars], slots: vec![], slot_perm: vec![] }
    }

    pub fn apply_lit(&self, lit: Lit) -> Lit {
        let v = lit.unsigned_abs() as usize - 1;
        let neg = (lit < 0) != self.flip[v];
        let nv = self.var_perm[v] as Lit + 1;
        if neg { -nv } else { nv }
    }

    pub fn invert_lit(&self, lit: Lit) -> Lit {
        let nv = lit.unsigned_abs() as usize - 1;
        let v = self.var_perm.iter().position(|&x| x == nv).expect("permutation");
        let neg = (lit < 0) != self.flip[v];
        let l = v as Lit + 1;
        if neg { -l } else { l }
    }

    pub fn apply_clause(&self, c: &Clause) -> Clause {
        Clause::new(c.lits().iter().map(|&l| self.apply_lit(l)).collect())
    }

    pub fn invert_clause(&self, c: &Clause) -> Clause {
        Clause::new(c.lits().iter().map(|&l| self.invert_lit(l)).collect())
    }
}

/// Swaps each position with a uniformly chosen distinct one with probability `p`.
fn partial_shuffle<T>(items: &mut [T], p: f64, rng: &mut impl Rng) {
    let n = items.len();
    if n < 2 {
        return;
    }
    for i in 0..n {
        if rng.gen_bool(p) {
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            items.swap(i, j);
        }
    }
}

/// Randomizes the core (or the whole formula) by variable renaming among the
/// affected variables, clause-content permutation among the affected slots,
/// and per-variable polarity flips.
pub fn scramble_core(g: &EmbeddedGraph, policy: &ScramblePolicy) -> Result<(EmbeddedGraph, ScrambleMap), GenError> {
    policy.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let n = g.num_vars();
    let slots: Vec<usize> = match policy.scope {
        ScrambleScope::Core => g.core_slots(),
        ScrambleScope::Whole => g.alive_slots().collect(),
    };
    let vars: Vec<usize> = match policy.scope {
        ScrambleScope::Core => slots.iter().flat_map(|&s| g.clause_vars(s)).collect::<BTreeSet<_>>().into_iter().collect(),
        ScrambleScope::Whole => (0..n).collect(),
    };
    let mut map = ScrambleMap::identity(n);
    let mut targets = vars.clone();
    partial_shuffle(&mut targets, policy.p1, &mut rng);
    for (&v, &t) in vars.iter().zip(&targets) {
        map.var_perm[v] = t;
    }
    let mut order: Vec<usize> = (0..slots.len()).collect();
    partial_shuffle(&mut order, policy.p2, &mut rng);
    for &v in &vars {
        map.flip[v] = rng.gen_bool(policy.p3);
    }
    let renamed: Vec<Vec<usize>> = slots
        .iter()
        .map(|&s| g.clause_lits(s).iter().map(|&l| lit_node(map.apply_lit(node_lit(l)))).collect())
        .collect();
    // content of slots[i] moves to slots[order[i]]
    map.slots = slots.clone();
    map.slot_perm = order.iter().map(|&k| slots[k]).collect();
    let mut out = g.clone();
    for (i, lits) in renamed.into_iter().enumerate() {
        out.set_clause_lits(map.slot_perm[i], lits);
    }
    if policy.scope == ScrambleScope::Whole {
        let mut cmty = vec![0; n];
        for v in 0..n {
            cmty[map.var_perm[v]] = g.cmty_of_var(v);
        }
        out.set_community_map(cmty);
    }
    Ok((out, map))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Argmax,
    Multinomial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub alpha: f64,
    pub candidates_per_step: usize,
    pub selection: Selection,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { alpha: 1.0, candidates_per_step: 100, selection: Selection::Argmax, seed: 0 }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(GenError::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.candidates_per_step == 0 {
            return Err(GenError::Config("candidates_per_step must be positive".into()));
        }
        Ok(())
    }
}

/// Merge-step counts `(n1, n2)` for split counts `(m1, m2)`:
/// `n2 = round_half_up(alpha * m2)`, `n1` takes the rest, both clamped at 0.
pub fn merge_budget(m1: usize, m2: usize, alpha: f64) -> (usize, usize) {
    let total = m1 + m2;
    let n2 = ((alpha * m2 as f64) + 0.5).floor().max(0.0) as usize;
    let n2 = n2.min(total);
    (total - n2, n2)
}

fn communities_intersect(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Whether `(u, v)` may be merged in `stage`: distinct live non-core clauses
/// with disjoint variables whose community sets intersect (in-community) or
/// are disjoint (cross-community).
pub fn pair_allowed(g: &EmbeddedGraph, stage: Stage, u: usize, v: usize) -> bool {
    if u == v || !g.is_alive(u) || !g.is_alive(v) || g.is_core(u) || g.is_core(v) {
        return false;
    }
    let shared = communities_intersect(&g.clause_communities(u), &g.clause_communities(v));
    let stage_ok = match stage {
        Stage::InCmty => shared,
        Stage::CrossCmty => !shared,
    };
    stage_ok && g.vars_disjoint(u, v)
}

/// Up to `k` distinct valid pairs `(u, v)` with `u < v`, uniformly sampled.
/// An empty result means the stage is exhausted.
pub fn propose_pairs(g: &EmbeddedGraph, stage: Stage, k: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let slots = g.non_core_slots();
    let m = slots.len();
    if m < 2 || k == 0 {
        return Vec::new();
    }
    let comms: Vec<Vec<usize>> = slots.iter().map(|&s| g.clause_communities(s)).collect();
    let vars: Vec<Vec<usize>> = slots.iter().map(|&s| g.clause_vars(s)).collect();
    let ok = |i: usize, j: usize| {
        let shared = communities_intersect(&comms[i], &comms[j]);
        let stage_ok = match stage {
            Stage::InCmty => shared,
            Stage::CrossCmty => !shared,
        };
        stage_ok && !communities_intersect(&vars[i], &vars[j])
    };
    let total = m * (m - 1) / 2;
    if total > ENUMERATION_LIMIT {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for _ in 0..k.saturating_mul(50) {
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            if i == j {
                continue;
            }
            let (i, j) = (i.min(j), i.max(j));
            if ok(i, j) && seen.insert((i, j)) {
                out.push((slots[i], slots[j]));
                if out.len() == k {
                    return out;
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
    }
    let mut all = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if ok(i, j) {
                all.push((slots[i], slots[j]));
            }
        }
    }
    if all.len() <= k {
        return all;
    }
    let mut picked = index::sample(rng, all.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| all[i]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergeRecord {
    pub step: usize,
    pub stage: String,
    pub u: usize,
    pub v: usize,
    pub score: f64,
    pub candidates: usize,
}

/// Scores the candidates with `scorer` on the current graph, picks one and
/// merges `v` into `u`. Returns `None` when no candidate exists.
pub fn merge_step(
    g: &mut EmbeddedGraph,
    scorer: &PairScorer,
    stage: Stage,
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> Result<Option<MergeRecord>, GenError> {
    let cands = propose_pairs(g, stage, cfg.candidates_per_step, rng);
    if cands.is_empty() {
        return Ok(None);
    }
    let emb = GraphEmbedding::new(scorer, g);
    let scores: Vec<f64> = cands.iter().map(|&(u, v)| emb.score(u, v)).collect();
    let pick = select(&scores, cfg.selection, rng);
    let (u, v) = cands[pick];
    g.merge_clause_nodes(u, v)?;
    Ok(Some(MergeRecord { step: 0, stage: stage.to_string(), u, v, score: scores[pick], candidates: cands.len() }))
}

/// Index of the chosen score: first maximum, or a draw proportional to the
/// scores.
pub fn select(scores: &[f64], mode: Selection, rng: &mut impl Rng) -> usize {
    match mode {
        Selection::Argmax => {
            let mut best = 0;
            for (i, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = i;
                }
            }
            best
        }
        Selection::Multinomial => {
            let total: f64 = scores.iter().sum();
            let mut x = rng.gen::<f64>() * total;
            for (i, &s) in scores.iter().enumerate() {
                if x < s {
                    return i;
                }
                x -= s;
            }
            scores.len() - 1
        }
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub formula: CnfFormula,
    pub graph: EmbeddedGraph,
    pub scramble: ScrambleMap,
    pub log: Vec<MergeRecord>,
    pub planned: (usize, usize),
    pub executed: (usize, usize),
    /// set when a stage ran out of candidates before its budget
    pub early_stop: Option<String>,
}

impl Generated {
    /// The run log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            let _ = writeln!(out, "{}", serde_json::to_string(r).expect("plain record"));
        }
        out
    }
}

/// Scramble, then `n1` in-community and `n2` cross-community merges.
pub fn generate(
    template: &EmbeddedGraph,
    trace: &SplitTrace,
    in_scorer: &PairScorer,
    cross_scorer: &PairScorer,
    policy: &ScramblePolicy,
    cfg: &GenConfig,
) -> Result<Generated, GenError> {
    cfg.validate()?;
    let (mut g, scramble) = scramble_core(template, policy)?;
    let (n1, n2) = merge_budget(trace.m1(), trace.m2(), cfg.alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = Vec::new();
    let mut executed = (0, 0);
    let mut early_stop = None;
    for (stage, budget, scorer) in [(Stage::InCmty, n1, in_scorer), (Stage::CrossCmty, n2, cross_scorer)] {
        for i in 0..budget {
            match merge_step(&mut g, scorer, stage, cfg, &mut rng)? {
                Some(mut r) => {
                    r.step = log.len() + 1;
                    log.push(r);
                }
                None => {
                    let msg = format!("{stage} stage exhausted after {i} of {budget} merges");
                    early_stop = Some(match early_stop {
                        Some(prev) => format!("{prev}; {msg}"),
                        None => msg,
                    });
                    break;
                }
            }
            match stage {
                Stage::InCmty => executed.0 += 1,
                Stage::CrossCmty => executed.1 += 1,
            }
        }
    }
    let formula = g.to_formula()?;
    Ok(Generated { formula, graph: g, scramble, log, planned: (n1, n2), executed, early_stop })
}

/// Whether every clause of `core` appears in `f` (as normalized literal
/// multisets, respecting multiplicity).
pub fn contains_clauses(f: &CnfFormula, core: &[Clause]) -> bool {
    let mut pool: Vec<Vec<Lit>> = f.clauses().iter().map(Clause::normalized).collect();
    pool.sort();
    for c in core {
        let key = c.normalized();
        match pool.binary_search(&key) {
            Ok(i) => {
                pool.remove(i);
            }
            Err(_) => return false,
        }
    }
    true
}
