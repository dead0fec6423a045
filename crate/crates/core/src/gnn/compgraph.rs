//! Computation graphs for message passing over the embedded LCG.
//!
//! Nodes are addressed by a global id: literal nodes `0..2n`, community
//! nodes `2n..2n+C`, clause slots after that. A [`CompGraph`] lists the
//! nodes a forward pass touches so that the nodes needed as input to layer
//! `l + 1` form a prefix of those needed at layer `l`. The full graph is the
//! special case where every layer spans all nodes.

use crate::graphrep::EmbeddedGraph;

pub const KIND_POS: u8 = 0;
pub const KIND_NEG: u8 = 1;
pub const KIND_CLAUSE: u8 = 2;
pub const KIND_CMTY: u8 = 3;

pub(crate) struct Topology<'a> {
    g: &'a EmbeddedGraph,
    cmty_base: usize,
    clause_base: usize,
}

impl<'a> Topology<'a> {
    pub(crate) fn new(g: &'a EmbeddedGraph) -> Self {
        let cmty_base = g.num_lit_nodes();
        Topology { g, cmty_base, clause_base: cmty_base + g.num_cmty() }
    }

    pub(crate) fn clause_id(&self, slot: usize) -> usize {
        self.clause_base + slot
    }

    fn kind(&self, id: usize) -> u8 {
        if id < self.cmty_base {
            if id % 2 == 0 { KIND_POS } else { KIND_NEG }
        } else if id < self.clause_base {
            KIND_CMTY
        } else {
            KIND_CLAUSE
        }
    }

    fn neighbors(&self, id: usize, out: &mut Vec<usize>) {
        out.clear();
        let g = self.g;
        if id < self.cmty_base {
            out.extend(g.lit_clauses(id).iter().map(|&s| self.clause_base + s));
            out.push(self.cmty_base + g.cmty_of_var(id / 2));
        } else if id < self.clause_base {
            for &v in g.community_vars(id - self.cmty_base) {
                out.push(2 * v);
                out.push(2 * v + 1);
            }
        } else {
            out.extend_from_slice(g.clause_lits(id - self.clause_base));
        }
    }

    fn all_nodes(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.clause_base).collect();
        ids.extend(self.g.alive_slots().map(|s| self.clause_base + s));
        ids
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompGraph {
    /// global node id per position
    pub(crate) ids: Vec<usize>,
    pub(crate) kinds: Vec<u8>,
    /// full-graph degree per position
    pub(crate) deg: Vec<f64>,
    /// node counts entering layers 0..3 and leaving the last layer
    pub(crate) sizes: [usize; 4],
    /// neighbors (as positions) of the first `sizes[1]` positions
    pub(crate) ptr: Vec<usize>,
    pub(crate) nbr: Vec<usize>,
}

impl CompGraph {
    /// Every node of `g` at every layer.
    pub fn full(g: &EmbeddedGraph) -> Self {
        let topo = Topology::new(g);
        let ids = topo.all_nodes();
        let n = ids.len();
        let mut pos = vec![usize::MAX; topo.clause_base + g.num_slots()];
        for (p, &id) in ids.iter().enumerate() {
            pos[id] = p;
        }
        Self::assemble(&topo, ids, [n, n, n, n], |id| pos[id])
    }

    /// The receptive field of `targets` under three rounds of message
    /// passing; `targets` occupy positions `0..targets.len()` (after
    /// removing duplicates).
    pub fn receptive(g: &EmbeddedGraph, targets: &[usize]) -> Self {
        let topo = Topology::new(g);
        let mut pos = std::collections::HashMap::new();
        let mut ids = Vec::new();
        for &t in targets {
            if !pos.contains_key(&t) {
                pos.insert(t, ids.len());
                ids.push(t);
            }
        }
        let mut sizes = [0usize; 4];
        sizes[3] = ids.len();
        let mut buf = Vec::new();
        let mut frontier_start = 0;
        for layer in (0..3).rev() {
            let end = ids.len();
            // only nodes added in the previous round still need expanding
            for p in frontier_start..end {
                topo.neighbors(ids[p], &mut buf);
                for &u in &buf {
                    if !pos.contains_key(&u) {
                        pos.insert(u, ids.len());
                        ids.push(u);
                    }
                }
            }
            frontier_start = end;
            sizes[layer] = ids.len();
        }
        Self::assemble(&topo, ids, sizes, |id| pos[&id])
    }

    fn assemble(topo: &Topology, ids: Vec<usize>, sizes: [usize; 4], pos: impl Fn(usize) -> usize) -> Self {
        let mut ptr = vec![0];
        let mut nbr = Vec::new();
        let mut buf = Vec::new();
        for &id in &ids[..sizes[1]] {
            topo.neighbors(id, &mut buf);
            nbr.extend(buf.iter().map(|&u| pos(u)));
            ptr.push(nbr.len());
        }
        let deg = ids
            .iter()
            .map(|&id| {
                topo.neighbors(id, &mut buf);
                buf.len() as f64
            })
            .collect();
        let kinds = ids.iter().map(|&id| topo.kind(id)).collect();
        CompGraph { ids, kinds, deg, sizes, ptr, nbr }
    }

    pub fn num_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn kinds(&self) -> &[u8] {
        &self.kinds
    }

    /// Position of a global id, if present.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub(crate) fn neighbors_of(&self, p: usize) -> &[usize] {
        &self.nbr[self.ptr[p]..self.ptr[p + 1]]
    }
}

/// Global id of a clause slot in `g`.
pub fn clause_node_id(g: &EmbeddedGraph, slot: usize) -> usize {
    Topology::new(g).clause_id(slot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{CnfFormula, CoreSet, CoreSource};

    fn small() -> EmbeddedGraph {
        let f = CnfFormula::from_lits(3, vec![vec![1, -2], vec![2, 3], vec![-3]]).unwrap();
        EmbeddedGraph::build(&f, &[0, 0, 1], &CoreSet::empty(CoreSource::File)).unwrap()
    }

    #[test]
    fn full_graph_layout() {
        let g = small();
        let cg = CompGraph::full(&g);
        // 6 literals, 2 communities, 3 clauses
        assert_eq!(cg.num_nodes(), 11);
        assert_eq!(cg.kinds[..8], [0, 1, 0, 1, 0, 1, 3, 3]);
        assert_eq!(cg.kinds[8..], [2, 2, 2]);
        // literal x1: clause 0 plus community 0
        assert_eq!(cg.neighbors_of(0), &[8, 6]);
        // community 0 holds x1, x2
        assert_eq!(cg.neighbors_of(6), &[0, 1, 2, 3]);
        let edges: usize = (0..11).map(|p| cg.neighbors_of(p).len()).sum();
        assert_eq!(edges, 2 * (g.occ_edge_count() + g.aff_edge_count()));
    }

    #[test]
    fn receptive_layers_are_nested_closed_neighborhoods() {
        let g = small();
        let full = CompGraph::full(&g);
        let c0 = clause_node_id(&g, 0);
        let cg = CompGraph::receptive(&g, &[c0, c0]);
        assert_eq!(cg.sizes[3], 1);
        for l in 0..3 {
            for p in 0..cg.sizes[l + 1] {
                for &q in cg.neighbors_of(p) {
                    assert!(q < cg.sizes[l]);
                }
            }
        }
        for (p, &id) in cg.ids.iter().enumerate() {
            let fp = full.position(id).unwrap();
            assert_eq!(cg.deg[p], full.deg[fp]);
        }
    }
}
