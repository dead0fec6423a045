//! Newman modularity, Clauset-Newman-Moore greedy agglomeration, and Louvain.
//!
//! Resolution is fixed at 1 for both detectors. CNM builds the communities
//! embedded into graph templates; Louvain partitions views for evaluation.

mod cnm;
mod louvain;

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::graphrep::GraphView;

pub use cnm::detect_cnm;
pub use louvain::detect_louvain;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("graph has no edges")]
    Edgeless,
    #[error("partition covers {got} nodes, graph has {expected}")]
    PartialAssignment { expected: usize, got: usize },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Total assignment of nodes to dense community ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    num_communities: usize,
}

impl Partition {
    /// Relabels arbitrary labels densely in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition { num_communities: map.len(), assignment }
    }

    pub fn singletons(n: usize) -> Self {
        Partition { assignment: (0..n).collect(), num_communities: n }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Q = sum_c (e_c / m - (d_c / 2m)^2).
pub fn modularity(view: &GraphView, p: &Partition) -> Result<f64, CommunityError> {
    if p.len() != view.num_nodes {
        return Err(CommunityError::PartialAssignment { expected: view.num_nodes, got: p.len() });
    }
    if view.edges.is_empty() {
        return Err(CommunityError::Edgeless);
    }
    let m = view.edges.len() as f64;
    let mut intra = vec![0usize; p.num_communities];
    let mut degree = vec![0usize; p.num_communities];
    for &(a, b) in &view.edges {
        let (ca, cb) = (p.assignment[a], p.assignment[b]);
        degree[ca] += 1;
        degree[cb] += 1;
        if ca == cb {
            intra[ca] += 1;
        }
    }
    Ok(intra
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| e as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// `node_id community_id` lines.
pub fn write_partition_file(path: impl AsRef<Path>, p: &Partition) -> Result<(), CommunityError> {
    let mut out = Vec::new();
    for (node, c) in p.assignment.iter().enumerate() {
        writeln!(out, "{node} {c}")?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_partition_file(path: impl AsRef<Path>) -> Result<Partition, CommunityError> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        let bad = || CommunityError::Parse { line: i + 1, reason: format!("expected `node community`, got `{line}`") };
        if parts.len() != 2 {
            return Err(bad());
        }
        let node: usize = parts[0].parse().map_err(|_| bad())?;
        let c: usize = parts[1].parse().map_err(|_| bad())?;
        pairs.push((node, c));
    }
    pairs.sort_unstable();
    if pairs.iter().enumerate().any(|(i, &(n, _))| n != i) {
        return Err(CommunityError::Parse { line: 0, reason: "node ids must cover 0..n exactly once".into() });
    }
    let labels: Vec<usize> = pairs.into_iter().map(|(_, c)| c).collect();
    Ok(Partition::from_labels(&labels))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graphrep::ViewKind;

    pub(crate) fn view(n: usize, edges: &[(usize, usize)]) -> GraphView {
        GraphView::from_edges(ViewKind::Vig, n, edges.iter().copied())
    }

    pub(crate) fn two_triangles_bridged() -> GraphView {
        view(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
    }

    #[test]
    fn one_community_is_zero() {
        let g = two_triangles_bridged();
        let q = modularity(&g, &Partition::from_labels(&[0; 6])).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn bridged_cliques() {
        let g = two_triangles_bridged();
        let q = modularity(&g, &Partition::from_labels(&[0, 0, 0, 1, 1, 1])).unwrap();
        // m = 7, e_c = 3, d_c = 7 each
        assert!((q - (6.0 / 7.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn singletons_are_negative() {
        let g = two_triangles_bridged();
        let q = modularity(&g, &Partition::singletons(6)).unwrap();
        let d = g.degrees();
        let expect: f64 = -d.iter().map(|&x| (x as f64 / 14.0).powi(2)).sum::<f64>();
        assert!((q - expect).abs() < 1e-12);
        assert!(q < 0.0);
    }

    #[test]
    fn relabel_invariance() {
        let g = two_triangles_bridged();
        let a = modularity(&g, &Partition::from_labels(&[0, 0, 1, 1, 2, 2])).unwrap();
        let b = modularity(&g, &Partition::from_labels(&[7, 7, 3, 3, 9, 9])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        let g = view(3, &[]);
        assert!(matches!(modularity(&g, &Partition::singletons(3)), Err(CommunityError::Edgeless)));
        let h = view(3, &[(0, 1)]);
        assert!(matches!(modularity(&h, &Partition::singletons(2)), Err(CommunityError::PartialAssignment { .. })));
    }

    #[test]
    fn partition_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = Partition::from_labels(&[0, 1, 0, 2]);
        let path = dir.path().join("p.txt");
        write_partition_file(&path, &p).unwrap();
        assert_eq!(read_partition_file(&path).unwrap(), p);
    }
}
