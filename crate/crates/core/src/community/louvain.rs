use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graphrep::GraphView;

use super::{CommunityError, Partition};

/// Weighted graph at one aggregation level. Weights are integral edge counts
/// held in f64, so gain comparisons below are exact.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    strength: Vec<f64>,
}

impl Level {
    fn from_view(view: &GraphView) -> Self {
        let n = view.num_nodes;
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &view.edges {
            adj[a].push((b, 1.0));
            adj[b].push((a, 1.0));
        }
        let strength = adj.iter().map(|r| r.len() as f64).collect();
        Level { adj, self_loops: vec![0.0; n], strength }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// One local-moving phase. Returns the community of each node and
    /// whether anything moved.
    fn local_moves(&self, two_m: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot: Vec<f64> = self.strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut any_move = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                let ki = self.strength[i];
                let mut to_comm: BTreeMap<usize, f64> = BTreeMap::new();
                for &(j, w) in &self.adj[i] {
                    *to_comm.entry(comm[j]).or_default() += w;
                }
                tot[ci] -= ki;
                let own = to_comm.get(&ci).copied().unwrap_or(0.0);
                let mut best = ci;
                let mut best_gain = own * two_m - tot[ci] * ki;
                for (&c, &w) in &to_comm {
                    let gain = w * two_m - tot[c] * ki;
                    if gain > best_gain {
                        best_gain = gain;
                        best = c;
                    }
                }
                tot[best] += ki;
                if best != ci {
                    comm[i] = best;
                    moved = true;
                    any_move = true;
                }
            }
            if !moved {
                break;
            }
        }
        (comm, any_move)
    }

    fn aggregate(&self, comm: &[usize]) -> (Level, Vec<usize>) {
        let dense = Partition::from_labels(comm);
        let k = dense.num_communities();
        let map = dense.assignment();
        let mut weights: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
        let mut self_loops = vec![0.0; k];
        for i in 0..self.len() {
            let ci = map[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                let cj = map[j];
                if ci == cj {
                    // each internal edge is seen from both ends
                    self_loops[ci] += w / 2.0;
                } else {
                    *weights[ci].entry(cj).or_default() += w;
                }
            }
        }
        let adj: Vec<Vec<(usize, f64)>> = weights.into_iter().map(|m| m.into_iter().collect()).collect();
        let strength = adj
            .iter()
            .zip(&self_loops)
            .map(|(row, s)| row.iter().map(|(_, w)| w).sum::<f64>() + 2.0 * s)
            .collect();
        (Level { adj, self_loops, strength }, map.to_vec())
    }
}

/// Two-phase Louvain: seeded local moving to the best-gain neighbor
/// community, then aggregation, until a level makes no move.
pub fn detect_louvain(view: &GraphView, seed: u64) -> Result<Partition, CommunityError> {
    if view.num_nodes == 0 {
        return Err(CommunityError::EmptyGraph);
    }
    if view.edges.is_empty() {
        return Err(CommunityError::Edgeless);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_m = 2.0 * view.edges.len() as f64;
    let mut level = Level::from_view(view);
    let mut membership: Vec<usize> = (0..view.num_nodes).collect();
    loop {
        let (comm, moved) = level.local_moves(two_m, &mut rng);
        if !moved {
            break;
        }
        let (next, map) = level.aggregate(&comm);
        for m in membership.iter_mut() {
            *m = map[*m];
        }
        level = next;
    }
    Ok(Partition::from_labels(&membership))
}
