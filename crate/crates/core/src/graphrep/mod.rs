//! Community- and core-embedded literal-clause graph.
//!
//! Node layout: literal nodes `0..2n` (positive literal of variable `i` is
//! `2i-2`, negative is `2i-1`), community nodes, and clause slots. Clause
//! slots are stable identifiers: splitting appends a slot, merging retires
//! one. Occurrence edges have set semantics.

mod view;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, CoreSet, Lit};

pub use view::{derive_view, GraphView, ViewKind};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("variable {var} has no community")]
    MissingCommunity { var: usize },
    #[error("community map covers {got} variables, formula has {expected}")]
    CommunityLength { expected: usize, got: usize },
    #[error("core index {index} out of range for {num_clauses} clauses")]
    CoreIndexOutOfRange { index: usize, num_clauses: usize },
    #[error("clause {index} is empty")]
    EmptyClause { index: usize },
    #[error("clause node {slot} has no literal edges")]
    IsolatedClause { slot: usize },
    #[error("unknown node {0:?}")]
    UnknownNode(Node),
    #[error("clause node {slot} belongs to the core")]
    CoreClause { slot: usize },
    #[error("clause nodes {u} and {v} share a variable")]
    OverlappingVariables { u: usize, v: usize },
    #[error("cannot merge clause node {0} with itself")]
    SameNode(usize),
    #[error("invalid split of clause node {slot}: {reason}")]
    InvalidSplit { slot: usize, reason: &'static str },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Lit(usize),
    Cmty(usize),
    Clause(usize),
}

/// Literal node id of a DIMACS literal.
pub fn lit_node(lit: Lit) -> usize {
    2 * (lit.unsigned_abs() as usize - 1) + usize::from(lit < 0)
}

/// DIMACS literal of a literal node id.
pub fn node_lit(node: usize) -> Lit {
    let var = (node / 2 + 1) as Lit;
    if node % 2 == 0 {
        var
    } else {
        -var
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddedGraph {
    num_vars: usize,
    num_cmty: usize,
    /// 0-based variable -> dense community id
    cmty_of: Vec<usize>,
    cmty_vars: Vec<Vec<usize>>,
    /// slot -> sorted literal node ids
    clause_lits: Vec<Vec<usize>>,
    alive: Vec<bool>,
    core_mask: Vec<bool>,
    lit_clauses: Vec<BTreeSet<usize>>,
    num_alive: usize,
}

impl EmbeddedGraph {
    /// Builds the embedded graph. `cmty[v]` is the community of 0-based
    /// variable `v`; ids are remapped to dense ascending order.
    pub fn build(f: &CnfFormula, cmty: &[usize], core: &CoreSet) -> Result<Self, GraphError> {
        let n = f.num_vars();
        if cmty.len() != n {
            if cmty.len() < n {
                return Err(GraphError::MissingCommunity { var: cmty.len() + 1 });
            }
            return Err(GraphError::CommunityLength { expected: n, got: cmty.len() });
        }
        let distinct: BTreeSet<usize> = cmty.iter().copied().collect();
        let dense: Vec<usize> = distinct.iter().copied().collect();
        let cmty_of: Vec<usize> =
            cmty.iter().map(|c| dense.binary_search(c).unwrap()).collect();
        let mut cmty_vars = vec![Vec::new(); dense.len()];
        for (v, &c) in cmty_of.iter().enumerate() {
            cmty_vars[c].push(v);
        }
        let m = f.num_clauses();
        if let Some(&index) = core.indices().iter().find(|&&i| i >= m) {
            return Err(GraphError::CoreIndexOutOfRange { index, num_clauses: m });
        }
        let mut g = EmbeddedGraph {
            num_vars: n,
            num_cmty: dense.len(),
            cmty_of,
            cmty_vars,
            clause_lits: Vec::with_capacity(m),
            alive: Vec::with_capacity(m),
            core_mask: Vec::with_capacity(m),
            lit_clauses: vec![BTreeSet::new(); 2 * n],
            num_alive: 0,
        };
        for (i, clause) in f.clauses().iter().enumerate() {
            if clause.is_empty() {
                return Err(GraphError::EmptyClause { index: i });
            }
            let mut lits: Vec<usize> = clause.lits().iter().map(|&l| lit_node(l)).collect();
            lits.sort_unstable();
            lits.dedup();
            g.push_slot(lits, core.contains(i));
        }
        Ok(g)
    }

    fn push_slot(&mut self, lits: Vec<usize>, core: bool) -> usize {
        let slot = self.clause_lits.len();
        for &l in &lits {
            self.lit_clauses[l].insert(slot);
        }
        self.clause_lits.push(lits);
        self.alive.push(true);
        self.core_mask.push(core);
        self.num_alive += 1;
        slot
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_lit_nodes(&self) -> usize {
        2 * self.num_vars
    }

    pub fn num_cmty(&self) -> usize {
        self.num_cmty
    }

    /// Number of live clause nodes.
    pub fn num_clauses(&self) -> usize {
        self.num_alive
    }

    /// Number of clause slots ever allocated, live or retired.
    pub fn num_slots(&self) -> usize {
        self.clause_lits.len()
    }

    pub fn is_alive(&self, slot: usize) -> bool {
        self.alive.get(slot).copied().unwrap_or(false)
    }

    pub fn is_core(&self, slot: usize) -> bool {
        self.core_mask.get(slot).copied().unwrap_or(false)
    }

    pub fn alive_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.clause_lits.len()).filter(move |&s| self.alive[s])
    }

    pub fn core_slots(&self) -> Vec<usize> {
        self.alive_slots().filter(|&s| self.core_mask[s]).collect()
    }

    pub fn non_core_slots(&self) -> Vec<usize> {
        self.alive_slots().filter(|&s| !self.core_mask[s]).collect()
    }

    pub fn occ_edge_count(&self) -> usize {
        self.alive_slots().map(|s| self.clause_lits[s].len()).sum()
    }

    /// Every variable's two literal nodes connect to its community node.
    pub fn aff_edge_count(&self) -> usize {
        2 * self.num_vars
    }

    pub fn cmty_of_var(&self, var0: usize) -> usize {
        self.cmty_of[var0]
    }

    pub fn community_map(&self) -> &[usize] {
        &self.cmty_of
    }

    pub fn community_vars(&self, c: usize) -> &[usize] {
        &self.cmty_vars[c]
    }

    /// Literal node ids of a clause slot, ascending.
    pub fn clause_lits(&self, slot: usize) -> &[usize] {
        &self.clause_lits[slot]
    }

    pub fn clause_literals(&self, slot: usize) -> Vec<Lit> {
        self.clause_lits[slot].iter().map(|&l| node_lit(l)).collect()
    }

    pub fn degree(&self, slot: usize) -> usize {
        self.clause_lits[slot].len()
    }

    /// 0-based variables of a clause slot, ascending.
    pub fn clause_vars(&self, slot: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.clause_lits[slot].iter().map(|&l| l / 2).collect();
        v.dedup();
        v
    }

    /// Communities touched by a clause, ascending.
    pub fn clause_communities(&self, slot: usize) -> Vec<usize> {
        let set: BTreeSet<usize> =
            self.clause_lits[slot].iter().map(|&l| self.cmty_of[l / 2]).collect();
        set.into_iter().collect()
    }

    pub fn lit_clauses(&self, lit_node: usize) -> &BTreeSet<usize> {
        &self.lit_clauses[lit_node]
    }

    pub fn vars_disjoint(&self, u: usize, v: usize) -> bool {
        let (a, b) = (self.clause_vars(u), self.clause_vars(v));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Live clause slots touched by community `c`'s variables.
    pub fn cmty_clauses(&self, c: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &v in &self.cmty_vars[c] {
            out.extend(self.lit_clauses[2 * v].iter().copied());
            out.extend(self.lit_clauses[2 * v + 1].iter().copied());
        }
        out
    }

    fn check_node(&self, node: Node) -> Result<(), GraphError> {
        let ok = match node {
            Node::Lit(l) => l < 2 * self.num_vars,
            Node::Cmty(c) => c < self.num_cmty,
            Node::Clause(s) => self.is_alive(s),
        };
        if ok {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(node))
        }
    }

    /// Neighbors over occurrence and affiliation edges.
    pub fn neighbors(&self, node: Node) -> Result<Vec<Node>, GraphError> {
        self.check_node(node)?;
        Ok(match node {
            Node::Lit(l) => {
                let mut out = vec![Node::Cmty(self.cmty_of[l / 2])];
                out.extend(self.lit_clauses[l].iter().map(|&s| Node::Clause(s)));
                out
            }
            Node::Cmty(c) => {
                self.cmty_vars[c].iter().flat_map(|&v| [Node::Lit(2 * v), Node::Lit(2 * v + 1)]).collect()
            }
            Node::Clause(s) => self.clause_lits[s].iter().map(|&l| Node::Lit(l)).collect(),
        })
    }

    /// Nodes reachable by a walk of exactly two edges, excluding `node`.
    pub fn two_hop(&self, node: Node) -> Result<BTreeSet<Node>, GraphError> {
        let mut out = BTreeSet::new();
        for mid in self.neighbors(node)? {
            for far in self.neighbors(mid)? {
                if far != node {
                    out.insert(far);
                }
            }
        }
        Ok(out)
    }

    /// Merges clause `v` into clause `u`; `v` is retired.
    pub fn merge_clause_nodes(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SameNode(u));
        }
        for s in [u, v] {
            self.check_node(Node::Clause(s))?;
            if self.core_mask[s] {
                return Err(GraphError::CoreClause { slot: s });
            }
        }
        if !self.vars_disjoint(u, v) {
            return Err(GraphError::OverlappingVariables { u, v });
        }
        self.absorb(u, v);
        Ok(())
    }

    /// Unchecked merge used by exact trace replay.
    pub(crate) fn absorb(&mut self, u: usize, v: usize) {
        let moved = std::mem::take(&mut self.clause_lits[v]);
        for &l in &moved {
            self.lit_clauses[l].remove(&v);
            self.lit_clauses[l].insert(u);
        }
        let target = &mut self.clause_lits[u];
        target.extend(moved);
        target.sort_unstable();
        target.dedup();
        self.alive[v] = false;
        self.num_alive -= 1;
    }

    /// Moves the given literal edges of `parent` onto a fresh clause slot.
    /// The moved set must be a nonempty proper subset of the parent's edges.
    pub fn split_clause(&mut self, parent: usize, moved: &[usize]) -> Result<usize, GraphError> {
        self.check_node(Node::Clause(parent))?;
        if self.core_mask[parent] {
            return Err(GraphError::CoreClause { slot: parent });
        }
        let lits = &self.clause_lits[parent];
        if moved.is_empty() || moved.len() >= lits.len() {
            return Err(GraphError::InvalidSplit { slot: parent, reason: "moved set must be a proper nonempty subset" });
        }
        if moved.iter().any(|l| lits.binary_search(l).is_err()) {
            return Err(GraphError::InvalidSplit { slot: parent, reason: "moved edge not on parent" });
        }
        let mut moved: Vec<usize> = moved.to_vec();
        moved.sort_unstable();
        moved.dedup();
        self.clause_lits[parent].retain(|l| moved.binary_search(l).is_err());
        for &l in &moved {
            self.lit_clauses[l].remove(&parent);
        }
        Ok(self.push_slot(moved, false))
    }

    /// Forgets retired slots at the end of the slot range.
    pub(crate) fn drop_dead_tail(&mut self) {
        while self.alive.last() == Some(&false) {
            self.alive.pop();
            self.core_mask.pop();
            self.clause_lits.pop();
        }
    }

    /// Replaces the literal set of a live slot.
    pub(crate) fn set_clause_lits(&mut self, slot: usize, mut lits: Vec<usize>) {
        for &l in &self.clause_lits[slot] {
            self.lit_clauses[l].remove(&slot);
        }
        lits.sort_unstable();
        lits.dedup();
        for &l in &lits {
            self.lit_clauses[l].insert(slot);
        }
        self.clause_lits[slot] = lits;
    }

    /// Reassigns variable communities, e.g. after a global variable renaming.
    pub(crate) fn set_community_map(&mut self, cmty_of: Vec<usize>) {
        let mut cmty_vars = vec![Vec::new(); self.num_cmty];
        for (v, &c) in cmty_of.iter().enumerate() {
            cmty_vars[c].push(v);
        }
        self.cmty_of = cmty_of;
        self.cmty_vars = cmty_vars;
    }

    /// Live clauses in slot order, literals ascending by node id.
    pub fn to_formula(&self) -> Result<CnfFormula, GraphError> {
        let mut clauses = Vec::with_capacity(self.num_alive);
        for s in self.alive_slots() {
            if self.clause_lits[s].is_empty() {
                return Err(GraphError::IsolatedClause { slot: s });
            }
            clauses.push(Clause::from(self.clause_literals(s)));
        }
        Ok(CnfFormula::new(self.num_vars, clauses).expect("literal ids stay in range"))
    }

    /// Diagnostic edge list: `L<id> C<slot>` occurrence lines, then
    /// `M<cmty> L<id>` affiliation lines.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for s in self.alive_slots() {
            for &l in &self.clause_lits[s] {
                writeln!(w, "L{l} C{s}")?;
            }
        }
        for (c, vars) in self.cmty_vars.iter().enumerate() {
            for &v in vars {
                writeln!(w, "M{c} L{}", 2 * v)?;
                writeln!(w, "M{c} L{}", 2 * v + 1)?;
            }
        }
        Ok(())
    }
}

/// Writes `var_id community_id` lines, variables 1-based.
pub fn write_community_file(path: impl AsRef<Path>, cmty: &[usize]) -> Result<(), GraphError> {
    let mut out = Vec::new();
    for (v, c) in cmty.iter().enumerate() {
        writeln!(out, "{} {}", v + 1, c)?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_community_file(
    path: impl AsRef<Path>,
    num_vars: usize,
) -> Result<Vec<usize>, GraphError> {
    parse_community_text(&fs::read_to_string(path)?, num_vars)
}

pub fn parse_community_text(text: &str, num_vars: usize) -> Result<Vec<usize>, GraphError> {
    let mut cmty: Vec<Option<usize>> = vec![None; num_vars];
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        let parse = |t: &str| {
            t.parse::<usize>().map_err(|_| GraphError::Parse { line: line_no, reason: format!("bad number `{t}`") })
        };
        if parts.len() != 2 {
            return Err(GraphError::Parse { line: line_no, reason: "expected `var community`".into() });
        }
        let var = parse(parts[0])?;
        let c = parse(parts[1])?;
        if var == 0 || var > num_vars {
            return Err(GraphError::Parse { line: line_no, reason: format!("variable {var} out of range") });
        }
        cmty[var - 1] = Some(c);
    }
    cmty.iter()
        .enumerate()
        .map(|(v, c)| c.ok_or(GraphError::MissingCommunity { var: v + 1 }))
        .collect()
}
