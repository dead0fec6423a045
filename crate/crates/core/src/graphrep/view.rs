use std::collections::BTreeSet;

use crate::cnf::CnfFormula;

use super::lit_node;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViewKind {
    /// variables; edge when two variables share a clause
    Vig,
    /// variables then clauses; bipartite occurrence
    Vcg,
    /// literals; edge when two literals share a clause
    Lig,
    /// literals then clauses; bipartite occurrence
    Lcg,
}

impl ViewKind {
    pub const ALL: [ViewKind; 4] = [ViewKind::Vig, ViewKind::Vcg, ViewKind::Lig, ViewKind::Lcg];

    pub fn name(self) -> &'static str {
        match self {
            ViewKind::Vig => "VIG",
            ViewKind::Vcg => "VCG",
            ViewKind::Lig => "LIG",
            ViewKind::Lcg => "LCG",
        }
    }
}

/// Simple undirected graph: no self-loops, no parallel edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphView {
    pub kind: ViewKind,
    pub num_nodes: usize,
    /// `(a, b)` with `a < b`, sorted
    pub edges: Vec<(usize, usize)>,
}

impl GraphView {
    pub fn from_edges(kind: ViewKind, num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let set: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        GraphView { kind, num_nodes, edges: set.into_iter().collect() }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }
}

pub fn derive_view(f: &CnfFormula, kind: ViewKind) -> GraphView {
    let n = f.num_vars();
    let m = f.num_clauses();
    let mut edges = BTreeSet::new();
    match kind {
        ViewKind::Vig | ViewKind::Lig => {
            for c in f.clauses() {
                let ids: Vec<usize> = match kind {
                    ViewKind::Vig => c.vars().iter().map(|v| v - 1).collect(),
                    _ => {
                        let mut v: Vec<usize> = c.lits().iter().map(|&l| lit_node(l)).collect();
                        v.sort_unstable();
                        v.dedup();
                        v
                    }
                };
                for (i, &a) in ids.iter().enumerate() {
                    for &b in &ids[i + 1..] {
                        edges.insert((a, b));
                    }
                }
            }
            let nodes = if kind == ViewKind::Vig { n } else { 2 * n };
            GraphView { kind, num_nodes: nodes, edges: edges.into_iter().collect() }
        }
        ViewKind::Vcg | ViewKind::Lcg => {
            let offset = if kind == ViewKind::Vcg { n } else { 2 * n };
            for (j, c) in f.clauses().iter().enumerate() {
                for &l in c.lits() {
                    let a = if kind == ViewKind::Vcg { l.unsigned_abs() as usize - 1 } else { lit_node(l) };
                    edges.insert((a, offset + j));
                }
            }
            GraphView { kind, num_nodes: offset + m, edges: edges.into_iter().collect() }
        }
    }
}
