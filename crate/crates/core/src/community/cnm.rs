use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::graphrep::GraphView;

use super::{CommunityError, Partition};

/// Greedy agglomeration from singletons, always merging the adjacent pair
/// with the largest modularity gain while that gain is positive.
///
/// Gains are kept as exact integers: for communities `i`, `j` with `e_ij`
/// edges between them and degree sums `d_i`, `d_j`, the gain scaled by
/// `2m^2` is `2m * e_ij - d_i * d_j`. Equal gains go to the lowest `(i, j)`;
/// the merged community keeps the lower id.
pub fn detect_cnm(view: &GraphView) -> Result<Partition, CommunityError> {
    let n = view.num_nodes;
    if n == 0 {
        return Err(CommunityError::EmptyGraph);
    }
    let two_m = 2 * view.edges.len() as i128;
    let mut degree: Vec<i128> = view.degrees().into_iter().map(|d| d as i128).collect();
    let mut links: Vec<BTreeMap<usize, i128>> = vec![BTreeMap::new(); n];
    for &(a, b) in &view.edges {
        *links[a].entry(b).or_default() += 1;
        *links[b].entry(a).or_default() += 1;
    }
    let mut alive = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();

    let gain = |links: &[BTreeMap<usize, i128>], degree: &[i128], i: usize, j: usize| {
        two_m * links[i][&j] - degree[i] * degree[j]
    };
    let mut heap = BinaryHeap::new();
    for i in 0..n {
        for &j in links[i].keys().filter(|&&j| j > i) {
            heap.push((gain(&links, &degree, i, j), Reverse(i), Reverse(j)));
        }
    }

    while let Some((g, Reverse(i), Reverse(j))) = heap.pop() {
        if g <= 0 {
            break;
        }
        if !alive[i] || !alive[j] || !links[i].contains_key(&j) || gain(&links, &degree, i, j) != g {
            continue;
        }
        // absorb j into i
        alive[j] = false;
        parent[j] = i;
        let j_links = std::mem::take(&mut links[j]);
        links[i].remove(&j);
        for (k, e) in j_links {
            if k == i {
                continue;
            }
            links[k].remove(&j);
            *links[k].entry(i).or_default() += e;
            *links[i].entry(k).or_default() += e;
        }
        degree[i] += degree[j];
        for &k in links[i].keys() {
            let (a, b) = if i < k { (i, k) } else { (k, i) };
            heap.push((gain(&links, &degree, a, b), Reverse(a), Reverse(b)));
        }
    }

    let labels: Vec<usize> = (0..n)
        .map(|mut v| {
            while parent[v] != v {
                v = parent[v];
            }
            v
        })
        .collect();
    Ok(Partition::from_labels(&labels))
}
