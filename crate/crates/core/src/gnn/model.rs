//! GCN and GraphSAGE encoders with hand-written backpropagation.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::compgraph::CompGraph;

pub const DIM: usize = 32;
pub const NUM_LAYERS: usize = 3;
pub const NUM_FEATURES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backbone {
    Gcn,
    Sage,
}

impl fmt::Display for Backbone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backbone::Gcn => "gcn",
            Backbone::Sage => "sage",
        })
    }
}

impl FromStr for Backbone {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Backbone::Gcn),
            "sage" => Ok(Backbone::Sage),
            other => Err(format!("unknown backbone `{other}`")),
        }
    }
}

/// Encoder weights plus the inner-product scoring head.
///
/// Parameter order: `embed.w` (4×d), `embed.b` (1×d), then per layer
/// `w` (d×d) for GCN or `q` (d×d), `qb` (1×d), `w` (2d×d) for SAGE.
#[derive(Clone, Debug, PartialEq)]
pub struct PairScorer {
    pub(crate) backbone: Backbone,
    pub(crate) params: Vec<Array2<f64>>,
}

pub(crate) struct Cache {
    /// layer inputs H0..H3
    pub(crate) h: Vec<Array2<f64>>,
    /// pre-activations of each layer's output
    pub(crate) pre: Vec<Array2<f64>>,
    /// aggregated input (GCN) or concatenated self/neighbor input (SAGE)
    pub(crate) agg: Vec<Array2<f64>>,
    /// SAGE message pre-activations H Q + q
    pub(crate) msg: Vec<Array2<f64>>,
}

fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|x| if x > 0.0 { x } else { 0.0 })
}

fn relu_mask(grad: &mut Array2<f64>, pre: &Array2<f64>) {
    grad.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0
        }
    });
}

impl PairScorer {
    pub fn new(backbone: Backbone, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shapes = Self::shapes(backbone);
        let params = shapes
            .iter()
            .map(|&(_, r, c, fan_in)| {
                let bound = 1.0 / (fan_in as f64).sqrt();
                Array2::from_shape_fn((r, c), |_| rng.gen_range(-bound..bound))
            })
            .collect();
        PairScorer { backbone, params }
    }

    /// `(name, rows, cols, fan_in)` per parameter matrix.
    pub(crate) fn shapes(backbone: Backbone) -> Vec<(String, usize, usize, usize)> {
        let mut out = vec![
            ("embed.w".to_string(), NUM_FEATURES, DIM, NUM_FEATURES),
            ("embed.b".to_string(), 1, DIM, NUM_FEATURES),
        ];
        for l in 0..NUM_LAYERS {
            match backbone {
                Backbone::Gcn => out.push((format!("layer{l}.w"), DIM, DIM, DIM)),
                Backbone::Sage => {
                    out.push((format!("layer{l}.q"), DIM, DIM, DIM));
                    out.push((format!("layer{l}.qb"), 1, DIM, DIM));
                    out.push((format!("layer{l}.w"), 2 * DIM, DIM, 2 * DIM));
                }
            }
        }
        out
    }

    pub fn backbone(&self) -> Backbone {
        self.backbone
    }

    pub fn params(&self) -> &[Array2<f64>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.params
    }

    pub fn num_weights(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// Final node embeddings for the last-layer positions of `cg`.
    pub fn embed(&self, cg: &CompGraph) -> Array2<f64> {
        let mut cache = self.forward(cg);
        cache.h.pop().expect("forward fills every layer")
    }

    pub(crate) fn forward(&self, cg: &CompGraph) -> Cache {
        let (we, be) = (&self.params[0], &self.params[1]);
        let n0 = cg.sizes[0];
        let mut h0 = Array2::zeros((n0, DIM));
        for (p, mut row) in h0.outer_iter_mut().enumerate() {
            row.assign(&we.row(cg.kinds[p] as usize));
            row += &be.row(0);
        }
        let mut cache = Cache { h: vec![h0], pre: Vec::new(), agg: Vec::new(), msg: Vec::new() };
        for l in 0..NUM_LAYERS {
            let rows = cg.sizes[l + 1];
            let h = &cache.h[l];
            let (agg, pre) = match self.backbone {
                Backbone::Gcn => {
                    let w = &self.params[2 + l];
                    let mut z = Array2::zeros((rows, DIM));
                    for i in 0..rows {
                        let di = cg.deg[i] + 1.0;
                        let mut zi = z.row_mut(i);
                        zi.scaled_add(1.0 / di, &h.row(i));
                        for &j in cg.neighbors_of(i) {
                            zi.scaled_add(1.0 / (di * (cg.deg[j] + 1.0)).sqrt(), &h.row(j));
                        }
                    }
                    let pre = z.dot(w);
                    (z, pre)
                }
                Backbone::Sage => {
                    let (q, qb, w) = (&self.params[2 + 3 * l], &self.params[3 + 3 * l], &self.params[4 + 3 * l]);
                    let mut a = h.dot(q);
                    a += &qb.row(0);
                    let m = relu(&a);
                    let mut c = Array2::zeros((rows, 2 * DIM));
                    c.slice_mut(s![.., ..DIM]).assign(&h.slice(s![..rows, ..]));
                    for i in 0..rows {
                        let nb = cg.neighbors_of(i);
                        if nb.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / nb.len() as f64;
                        let mut ni = c.slice_mut(s![i, DIM..]);
                        for &j in nb {
                            ni.scaled_add(inv, &m.row(j));
                        }
                    }
                    let pre = c.dot(w);
                    cache.msg.push(a);
                    (c, pre)
                }
            };
            let out = relu(&pre);
            cache.agg.push(agg);
            cache.pre.push(pre);
            cache.h.push(out);
        }
        cache
    }

    /// Gradients of a scalar loss given its gradient `d_out` with respect to
    /// the final embeddings.
    pub(crate) fn backward(&self, cg: &CompGraph, cache: &Cache, d_out: Array2<f64>) -> Vec<Array2<f64>> {
        let mut grads: Vec<Array2<f64>> = self.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        let mut dh = d_out;
        for l in (0..NUM_LAYERS).rev() {
            let mut dp = dh;
            relu_mask(&mut dp, &cache.pre[l]);
            let n_in = cg.sizes[l];
            let h = &cache.h[l];
            let mut dh_in = Array2::zeros((n_in, DIM));
            match self.backbone {
                Backbone::Gcn => {
                    let w = &self.params[2 + l];
                    grads[2 + l] = cache.agg[l].t().dot(&dp);
                    let dz = dp.dot(&w.t());
                    for i in 0..dz.nrows() {
                        let di = cg.deg[i] + 1.0;
                        let dzi = dz.row(i);
                        dh_in.row_mut(i).scaled_add(1.0 / di, &dzi);
                        for &j in cg.neighbors_of(i) {
                            dh_in.row_mut(j).scaled_add(1.0 / (di * (cg.deg[j] + 1.0)).sqrt(), &dzi);
                        }
                    }
                }
                Backbone::Sage => {
                    let (qi, qbi, wi) = (2 + 3 * l, 3 + 3 * l, 4 + 3 * l);
                    grads[wi] = cache.agg[l].t().dot(&dp);
                    let dc = dp.dot(&self.params[wi].t());
                    let rows = dc.nrows();
                    dh_in.slice_mut(s![..rows, ..]).assign(&dc.slice(s![.., ..DIM]));
                    let mut dm = Array2::zeros((n_in, DIM));
                    for i in 0..rows {
                        let nb = cg.neighbors_of(i);
                        if nb.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / nb.len() as f64;
                        let dni = dc.slice(s![i, DIM..]);
                        for &j in nb {
                            dm.row_mut(j).scaled_add(inv, &dni);
                        }
                    }
                    relu_mask(&mut dm, &cache.msg[l]);
                    grads[qi] = h.t().dot(&dm);
                    grads[qbi] = dm.sum_axis(Axis(0)).insert_axis(Axis(0));
                    dh_in += &dm.dot(&self.params[qi].t());
                }
            }
            dh = dh_in;
        }
        // embedding layer: one-hot rows select weight rows
        for (p, row) in dh.outer_iter().enumerate() {
            let mut gw = grads[0].row_mut(cache_kind(cg, p));
            gw += &row;
        }
        grads[1] = dh.sum_axis(Axis(0)).insert_axis(Axis(0));
        grads
    }
}

fn cache_kind(cg: &CompGraph, p: usize) -> usize {
    cg.kinds[p] as usize
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub const PROB_EPS: f64 = 1e-12;

/// σ of the inner product of two embedding rows, kept inside
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn pair_score(h: &Array2<f64>, u: usize, v: usize) -> f64 {
    clamp_prob(sigmoid(h.row(u).dot(&h.row(v))))
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{CnfFormula, CoreSet, CoreSource};
    use crate::graphrep::EmbeddedGraph;

    fn graph() -> EmbeddedGraph {
        let f = CnfFormula::from_lits(3, vec![vec![1, -2], vec![2, 3], vec![-3]]).unwrap();
        EmbeddedGraph::build(&f, &[0, 0, 1], &CoreSet::empty(CoreSource::File)).unwrap()
    }

    #[test]
    fn param_counts() {
        assert_eq!(PairScorer::new(Backbone::Gcn, 0).num_weights(), 4 * 32 + 32 + 3 * 32 * 32);
        assert_eq!(
            PairScorer::new(Backbone::Sage, 0).num_weights(),
            4 * 32 + 32 + 3 * (32 * 32 + 32 + 64 * 32)
        );
    }

    #[test]
    fn init_within_fan_in_bound() {
        let m = PairScorer::new(Backbone::Sage, 7);
        for (p, (_, _, _, fan)) in m.params.iter().zip(PairScorer::shapes(Backbone::Sage)) {
            let b = 1.0 / (fan as f64).sqrt();
            assert!(p.iter().all(|x| x.abs() <= b));
        }
        assert_eq!(m, PairScorer::new(Backbone::Sage, 7));
        assert_ne!(m, PairScorer::new(Backbone::Sage, 8));
    }

    #[test]
    fn zero_weights_give_zero_embeddings() {
        for bb in [Backbone::Gcn, Backbone::Sage] {
            let mut m = PairScorer::new(bb, 1);
            m.params.iter_mut().for_each(|p| p.fill(0.0));
            let h = m.embed(&CompGraph::full(&graph()));
            assert!(h.iter().all(|&x| x == 0.0));
            assert_eq!(pair_score(&h, 0, 1), 0.5);
        }
    }

    #[test]
    fn isolated_node_gcn_is_plain_linear_layer() {
        // single clause node, no edges
        let cg = CompGraph {
            ids: vec![0],
            kinds: vec![2],
            deg: vec![0.0],
            sizes: [1; 4],
            ptr: vec![0, 0],
            nbr: vec![],
        };
        for bb in [Backbone::Gcn, Backbone::Sage] {
            let m = PairScorer::new(bb, 3);
            let mut h = &m.params[0].row(2) + &m.params[1].row(0);
            for l in 0..NUM_LAYERS {
                let next = match bb {
                    Backbone::Gcn => h.dot(&m.params[2 + l]),
                    Backbone::Sage => {
                        let mut c = ndarray::Array1::zeros(2 * DIM);
                        c.slice_mut(s![..DIM]).assign(&h);
                        c.dot(&m.params[4 + 3 * l])
                    }
                };
                h = next.mapv(|x| x.max(0.0));
            }
            let got = m.embed(&cg);
            for k in 0..DIM {
                assert!((got[[0, k]] - h[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn receptive_field_matches_full_graph() {
        let g = graph();
        let full = CompGraph::full(&g);
        for bb in [Backbone::Gcn, Backbone::Sage] {
            let m = PairScorer::new(bb, 11);
            let hf = m.embed(&full);
            for target in 0..full.num_nodes() {
                let id = full.ids[target];
                let cg = CompGraph::receptive(&g, &[id]);
                let hr = m.embed(&cg);
                for k in 0..DIM {
                    assert!((hr[[0, k]] - hf[[target, k]]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gcn_is_permutation_equivariant() {
        let g = graph();
        let cg = CompGraph::full(&g);
        let n = cg.num_nodes();
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut ptr = vec![0];
        let mut nbr = Vec::new();
        for &old in &perm {
            nbr.extend(cg.neighbors_of(old).iter().map(|&q| inv[q]));
            ptr.push(nbr.len());
        }
        let permuted = CompGraph {
            ids: perm.iter().map(|&o| cg.ids[o]).collect(),
            kinds: perm.iter().map(|&o| cg.kinds[o]).collect(),
            deg: perm.iter().map(|&o| cg.deg[o]).collect(),
            sizes: cg.sizes,
            ptr,
            nbr,
        };
        for bb in [Backbone::Gcn, Backbone::Sage] {
            let m = PairScorer::new(bb, 5);
            let a = m.embed(&cg);
            let b = m.embed(&permuted);
            for (new, &old) in perm.iter().enumerate() {
                for k in 0..DIM {
                    assert!((a[[old, k]] - b[[new, k]]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn score_symmetric_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = Array2::from_shape_fn((20, DIM), |_| rng.gen_range(-1.0..1.0));
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        for u in 0..20 {
            for v in 0..20 {
                assert_eq!(pair_score(&h, u, v), pair_score(&h, v, u));
                let s = pair_score(&h, u, v);
                assert!(s > 0.0 && s < 1.0);
                pairs.push((h.row(u).dot(&h.row(v)), s));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
