//! Two-stage clause splitting: first detach cross-community connections,
//! then break every non-core clause down to single-literal clause nodes.
//! Produces the generation template, a replayable trace, and the positive /
//! negative node pairs the merge scorers learn from.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cnf::{CnfFormula, CoreSet};
use crate::graphrep::{lit_node, node_lit, EmbeddedGraph, GraphError};

const TRACE_HEADER: &str = "HSG-TRACE 1";
const TUPLES_HEADER: &str = "HSG-TUPLES 1";

#[derive(Debug, Error)]
pub enum SplitError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("trace replay diverged at event {index}: expected new slot {expected}, got {got}")]
    ReplayMismatch { index: usize, expected: usize, got: usize },
    #[error("{file} line {line}: {reason}")]
    Parse { file: &'static str, line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    CrossCmty,
    InCmty,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::CrossCmty => "cross",
            Stage::InCmty => "in",
        })
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cross" => Ok(Stage::CrossCmty),
            "in" => Ok(Stage::InCmty),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitEvent {
    pub stage: Stage,
    pub parent: usize,
    pub new: usize,
    /// literal node ids moved from `parent` onto `new`
    pub moved: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SplitTrace {
    events: Vec<SplitEvent>,
}

impl SplitTrace {
    pub fn new(events: Vec<SplitEvent>) -> Self {
        SplitTrace { events }
    }

    pub fn events(&self) -> &[SplitEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// In-community event count.
    pub fn m1(&self) -> usize {
        self.events.iter().filter(|e| e.stage == Stage::InCmty).count()
    }

    /// Cross-community event count.
    pub fn m2(&self) -> usize {
        self.events.iter().filter(|e| e.stage == Stage::CrossCmty).count()
    }

    /// Applies the first `prefix` events to a copy of `original`.
    pub fn replay(&self, original: &EmbeddedGraph, prefix: usize) -> Result<EmbeddedGraph, SplitError> {
        let mut g = original.clone();
        self.replay_each(&mut g, prefix, |_, _| {})?;
        Ok(g)
    }

    /// Applies events in order, calling `visit(k, graph)` after the k-th
    /// event (k is the prefix length, starting at 1).
    pub fn replay_each(
        &self,
        g: &mut EmbeddedGraph,
        prefix: usize,
        mut visit: impl FnMut(usize, &EmbeddedGraph),
    ) -> Result<(), SplitError> {
        for (index, e) in self.events.iter().take(prefix).enumerate() {
            let got = g.split_clause(e.parent, &e.moved)?;
            if got != e.new {
                return Err(SplitError::ReplayMismatch { index, expected: e.new, got });
            }
            visit(index + 1, g);
        }
        Ok(())
    }

    /// Undoes every event in reverse order (merging each new node back into
    /// its parent) and drops the retired slots.
    pub fn inverse_replay(&self, template: &EmbeddedGraph) -> EmbeddedGraph {
        let mut g = template.clone();
        for e in self.events.iter().rev() {
            g.absorb(e.parent, e.new);
        }
        g.drop_dead_tail();
        g
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), SplitError> {
        let mut out = Vec::new();
        writeln!(out, "{TRACE_HEADER}")?;
        for e in &self.events {
            let lits: Vec<String> = e.moved.iter().map(|&l| node_lit(l).to_string()).collect();
            writeln!(out, "{} {} {} {}", e.stage, e.parent, e.new, lits.join(","))?;
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, SplitError> {
        let text = fs::read_to_string(path)?;
        let bad = |line: usize, reason: String| SplitError::Parse { file: "trace", line, reason };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => return Err(bad(1, format!("missing `{TRACE_HEADER}` header"))),
        }
        let mut events = Vec::new();
        for (i, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() {
                continue;
            }
            if parts.len() != 4 {
                return Err(bad(i + 1, "expected `stage parent new lit,lit,...`".into()));
            }
            let stage = parts[0].parse::<Stage>().map_err(|r| bad(i + 1, r))?;
            let num = |t: &str| t.parse::<usize>().map_err(|_| bad(i + 1, format!("bad number `{t}`")));
            let moved = parts[3]
                .split(',')
                .map(|t| {
                    t.parse::<i32>()
                        .ok()
                        .filter(|&l| l != 0)
                        .map(lit_node)
                        .ok_or_else(|| bad(i + 1, format!("bad literal `{t}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            events.push(SplitEvent { stage, parent: num(parts[1])?, new: num(parts[2])?, moved });
        }
        Ok(SplitTrace { events })
    }
}

/// One positive pair `(u_pos, v_pos)` that was split at `snapshot` (trace
/// prefix length including the split) plus a stage-consistent negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainTuple {
    pub u_pos: usize,
    pub v_pos: usize,
    pub v_neg: usize,
    pub snapshot: usize,
    pub stage: Stage,
}

pub fn write_tuples(path: impl AsRef<Path>, tuples: &[TrainTuple]) -> Result<(), SplitError> {
    let mut out = Vec::new();
    writeln!(out, "{TUPLES_HEADER}")?;
    for t in tuples {
        writeln!(out, "{} {} {} {} {}", t.stage, t.snapshot, t.u_pos, t.v_pos, t.v_neg)?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_tuples(path: impl AsRef<Path>) -> Result<Vec<TrainTuple>, SplitError> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, reason: String| SplitError::Parse { file: "tuples", line, reason };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TUPLES_HEADER => {}
        _ => return Err(bad(1, format!("missing `{TUPLES_HEADER}` header"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        if parts.len() != 5 {
            return Err(bad(i + 1, "expected `stage snapshot u v v_neg`".into()));
        }
        let stage = parts[0].parse::<Stage>().map_err(|r| bad(i + 1, r))?;
        let n: Vec<usize> = parts[1..]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| bad(i + 1, format!("bad number `{t}`"))))
            .collect::<Result<_, _>>()?;
        out.push(TrainTuple { stage, snapshot: n[0], u_pos: n[1], v_pos: n[2], v_neg: n[3] });
    }
    Ok(out)
}

/// Uniform index set with O(1) removal, iteration order fixed by insertion.
struct Pool {
    items: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl Pool {
    fn new(size: usize) -> Self {
        Pool { items: Vec::new(), pos: vec![None; size] }
    }

    fn insert(&mut self, x: usize) {
        if x >= self.pos.len() {
            self.pos.resize(x + 1, None);
        }
        if self.pos[x].is_none() {
            self.pos[x] = Some(self.items.len());
            self.items.push(x);
        }
    }

    fn remove(&mut self, x: usize) {
        if let Some(Some(i)) = self.pos.get(x).copied() {
            self.items.swap_remove(i);
            if i < self.items.len() {
                self.pos[self.items[i]] = Some(i);
            }
            self.pos[x] = None;
        }
    }

    fn pick(&self, rng: &mut impl Rng) -> Option<usize> {
        if self.items.is_empty() {
            None
        } else {
            Some(self.items[rng.gen_range(0..self.items.len())])
        }
    }
}

/// Splits until every non-core clause touches exactly one community. Each
/// event detaches all edges into one randomly chosen touched community.
pub fn split_cross_community(g: &mut EmbeddedGraph, rng: &mut impl Rng) -> Vec<SplitEvent> {
    let mut pool = Pool::new(g.num_slots());
    for s in g.non_core_slots() {
        if g.clause_communities(s).len() > 1 {
            pool.insert(s);
        }
    }
    let mut events = Vec::new();
    while let Some(parent) = pool.pick(rng) {
        let comms = g.clause_communities(parent);
        let c = comms[rng.gen_range(0..comms.len())];
        let moved: Vec<usize> =
            g.clause_lits(parent).iter().copied().filter(|&l| g.cmty_of_var(l / 2) == c).collect();
        let new = g.split_clause(parent, &moved).expect("multi-community clause splits");
        if comms.len() == 2 {
            pool.remove(parent);
        }
        events.push(SplitEvent { stage: Stage::CrossCmty, parent, new, moved });
    }
    events
}

/// Splits until every non-core clause has degree 1, moving one random edge
/// per event.
pub fn split_in_community(g: &mut EmbeddedGraph, rng: &mut impl Rng) -> Vec<SplitEvent> {
    let mut pool = Pool::new(g.num_slots());
    for s in g.non_core_slots() {
        if g.degree(s) > 1 {
            pool.insert(s);
        }
    }
    let mut events = Vec::new();
    while let Some(parent) = pool.pick(rng) {
        let lits = g.clause_lits(parent);
        let moved = vec![lits[rng.gen_range(0..lits.len())]];
        let new = g.split_clause(parent, &moved).expect("degree > 1 clause splits");
        if g.degree(parent) == 1 {
            pool.remove(parent);
        }
        events.push(SplitEvent { stage: Stage::InCmty, parent, new, moved });
    }
    events
}

/// Draws the negative partner for a split pair on the post-split graph.
///
/// With `c` the community of `v_pos`: the in-community pool is the live
/// clauses touched by `c` other than the positive pair; the cross-community
/// pool is the live non-core clauses outside `c`'s reach, other than
/// `u_pos`. Returns `None` when the pool is empty.
pub fn sample_negative(
    g: &EmbeddedGraph,
    u_pos: usize,
    v_pos: usize,
    stage: Stage,
    rng: &mut impl Rng,
) -> Option<usize> {
    let pool = negative_pool(g, u_pos, v_pos, stage);
    if pool.is_empty() {
        None
    } else {
        Some(pool[rng.gen_range(0..pool.len())])
    }
}

pub fn negative_pool(g: &EmbeddedGraph, u_pos: usize, v_pos: usize, stage: Stage) -> Vec<usize> {
    let c = g.cmty_of_var(g.clause_lits(v_pos)[0] / 2);
    let reach = g.cmty_clauses(c);
    match stage {
        Stage::InCmty => reach
            .into_iter()
            .filter(|&s| s != u_pos && s != v_pos)
            .collect(),
        Stage::CrossCmty => g
            .alive_slots()
            .filter(|&s| s != u_pos && !g.is_core(s) && !reach.contains(&s))
            .collect(),
    }
}

#[derive(Clone, Debug)]
pub struct Template {
    pub original: EmbeddedGraph,
    pub graph: EmbeddedGraph,
    pub trace: SplitTrace,
    pub tuples: Vec<TrainTuple>,
    /// events whose negative pool was empty
    pub dropped: usize,
}

/// Builds the embedded graph and runs both splitting stages, collecting one
/// training tuple per event whose negative pool is nonempty.
pub fn build_template(
    f: &CnfFormula,
    cmty: &[usize],
    core: &CoreSet,
    seed: u64,
) -> Result<Template, SplitError> {
    let original = EmbeddedGraph::build(f, cmty, core)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = original.clone();
    let mut events = split_cross_community(&mut g, &mut rng);
    events.extend(split_in_community(&mut g, &mut rng));
    let trace = SplitTrace::new(events);

    let mut tuples = Vec::new();
    let mut dropped = 0;
    let mut replay = original.clone();
    let mut neg_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    trace.replay_each(&mut replay, trace.len(), |snapshot, snap| {
        let e = &trace.events()[snapshot - 1];
        match sample_negative(snap, e.parent, e.new, e.stage, &mut neg_rng) {
            Some(v_neg) => tuples.push(TrainTuple {
                u_pos: e.parent,
                v_pos: e.new,
                v_neg,
                snapshot,
                stage: e.stage,
            }),
            None => dropped += 1,
        }
    })?;
    Ok(Template { original, graph: g, trace, tuples, dropped })
}
