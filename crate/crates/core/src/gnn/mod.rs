//! Pair scorers over the embedded LCG: GCN / GraphSAGE encoders, the
//! inner-product head, BCE training, and evaluation helpers.

pub mod compgraph;
mod model;
mod train;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

use crate::graphrep::EmbeddedGraph;
use crate::splitter::{SplitError, Stage};

pub use compgraph::{clause_node_id, CompGraph, KIND_CLAUSE, KIND_CMTY, KIND_NEG, KIND_POS};
pub use model::{clamp_prob, pair_score, sigmoid, Backbone, PairScorer, DIM, NUM_FEATURES, NUM_LAYERS, PROB_EPS};
pub use train::{
    build_samples, train, train_stage, EpochStats, Sample, TrainConfig, TrainReport, TrainedScorers,
};

const WEIGHTS_MAGIC: &str = "HSG-GNN";

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("empty pair set")]
    EmptyPairSet,
    #[error("no training tuples for the {0} stage")]
    EmptyStage(Stage),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("weights line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One-hot node types in full-graph order: literals, communities, live
/// clauses. Columns are positive literal, negative literal, clause,
/// community.
pub fn node_features(g: &EmbeddedGraph) -> Array2<f64> {
    let cg = CompGraph::full(g);
    let mut x = Array2::zeros((cg.num_nodes(), NUM_FEATURES));
    for (p, &k) in cg.kinds().iter().enumerate() {
        x[[p, k as usize]] = 1.0;
    }
    x
}

/// Mean positive log-loss plus mean negative log-loss, probabilities
/// clamped away from 0 and 1.
pub fn bce_loss(pos: &[f64], neg: &[f64]) -> Result<f64, GnnError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(GnnError::EmptyPairSet);
    }
    let lp: f64 = pos.iter().map(|&s| -clamp_prob(s).ln()).sum::<f64>() / pos.len() as f64;
    let ln: f64 = neg.iter().map(|&s| -(1.0 - clamp_prob(s)).ln()).sum::<f64>() / neg.len() as f64;
    Ok(lp + ln)
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> f64 {
    if pos.is_empty() || neg.is_empty() {
        return f64::NAN;
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &p in pos {
        let below = sorted.partition_point(|&x| x < p);
        let upto = sorted.partition_point(|&x| x <= p);
        wins += below as f64 + 0.5 * (upto - below) as f64;
    }
    wins / (pos.len() as f64 * neg.len() as f64)
}

/// Fraction of pairs on the correct side of 0.5 (a score of exactly 0.5
/// counts as negative).
pub fn accuracy(pos: &[f64], neg: &[f64]) -> f64 {
    let total = pos.len() + neg.len();
    if total == 0 {
        return f64::NAN;
    }
    let hits = pos.iter().filter(|&&s| s > 0.5).count() + neg.iter().filter(|&&s| s <= 0.5).count();
    hits as f64 / total as f64
}

/// Weighted BCE over scored pairs of `cg` positions and its gradient:
/// `-w_pos Σ ln s(pos) - w_neg Σ ln(1 - s(neg))`.
pub fn pairs_loss_grad(
    model: &PairScorer,
    cg: &CompGraph,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
    w_pos: f64,
    w_neg: f64,
) -> (f64, Vec<Array2<f64>>) {
    let cache = model.forward(cg);
    let h = cache.h.last().expect("forward fills every layer");
    let mut d_out = Array2::zeros(h.raw_dim());
    let mut loss = 0.0;
    for (pairs, positive) in [(pos, true), (neg, false)] {
        for &(u, v) in pairs {
            let sig = sigmoid(h.row(u).dot(&h.row(v)));
            let s = clamp_prob(sig);
            let clamped = s != sig;
            let g = if positive {
                loss -= w_pos * s.ln();
                if clamped { 0.0 } else { -w_pos * (1.0 - sig) }
            } else {
                loss -= w_neg * (1.0 - s).ln();
                if clamped { 0.0 } else { w_neg * sig }
            };
            if g != 0.0 {
                let (hu, hv) = (h.row(u).to_owned(), h.row(v).to_owned());
                d_out.row_mut(u).scaled_add(g, &hv);
                d_out.row_mut(v).scaled_add(g, &hu);
            }
        }
    }
    (loss, model.backward(cg, &cache, d_out))
}

/// Loss of `pairs_loss_grad` without the gradient.
#[cfg(test)]
pub(crate) fn pairs_loss(
    model: &PairScorer,
    cg: &CompGraph,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
    w_pos: f64,
    w_neg: f64,
) -> f64 {
    let h = model.embed(cg);
    let lp: f64 = pos.iter().map(|&(u, v)| -pair_score(&h, u, v).ln()).sum();
    let ln: f64 = neg.iter().map(|&(u, v)| -(1.0 - pair_score(&h, u, v)).ln()).sum();
    w_pos * lp + w_neg * ln
}

/// Embeddings of every node of a graph, addressable by clause slot.
pub struct GraphEmbedding {
    h: Array2<f64>,
    clause_row: Vec<Option<usize>>,
}

impl GraphEmbedding {
    pub fn new(model: &PairScorer, g: &EmbeddedGraph) -> Self {
        let cg = CompGraph::full(g);
        let h = model.embed(&cg);
        let base = clause_node_id(g, 0);
        let mut clause_row = vec![None; g.num_slots()];
        for (p, &id) in cg.ids().iter().enumerate() {
            if id >= base {
                clause_row[id - base] = Some(p);
            }
        }
        GraphEmbedding { h, clause_row }
    }

    pub fn clause_embedding(&self, slot: usize) -> Option<ndarray::ArrayView1<'_, f64>> {
        self.clause_row.get(slot).copied().flatten().map(|p| self.h.row(p))
    }

    /// Score of merging clause slots `u` and `v`.
    pub fn score(&self, u: usize, v: usize) -> f64 {
        let (pu, pv) = (self.clause_row[u].expect("live slot"), self.clause_row[v].expect("live slot"));
        pair_score(&self.h, pu, pv)
    }
}

/// CSV of final clause-node embeddings: `clause,f0,...` with one row per
/// live clause slot.
pub fn dump_clause_features(model: &PairScorer, g: &EmbeddedGraph) -> String {
    let emb = GraphEmbedding::new(model, g);
    let mut out = String::from("clause");
    for k in 0..DIM {
        let _ = write!(out, ",f{k}");
    }
    out.push('\n');
    for s in g.alive_slots() {
        let _ = write!(out, "{s}");
        for x in emb.clause_embedding(s).expect("live slot") {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

pub fn write_weights(path: impl AsRef<Path>, model: &PairScorer) -> Result<(), GnnError> {
    fs::write(path, weights_to_string(model))?;
    Ok(())
}

pub fn weights_to_string(model: &PairScorer) -> String {
    let mut out = format!("{WEIGHTS_MAGIC} 1 {} {NUM_LAYERS} {NUM_FEATURES}", model.backbone());
    for _ in 0..NUM_LAYERS {
        let _ = write!(out, " {DIM}");
    }
    out.push('\n');
    for ((name, r, c, _), p) in PairScorer::shapes(model.backbone()).iter().zip(model.params()) {
        let _ = writeln!(out, "{name} {r} {c}");
        for row in p.outer_iter() {
            let vals: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<PairScorer, GnnError> {
    parse_weights(&fs::read_to_string(path)?)
}

pub fn parse_weights(text: &str) -> Result<PairScorer, GnnError> {
    let bad = |line: usize, reason: String| GnnError::Parse { line, reason };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() < 4 || h[0] != WEIGHTS_MAGIC || h[1] != "1" {
        return Err(bad(1, format!("expected `{WEIGHTS_MAGIC} 1 <backbone> ...` header")));
    }
    let backbone: Backbone = h[2].parse().map_err(|e| bad(1, e))?;
    let mut expected = vec![NUM_LAYERS.to_string(), NUM_FEATURES.to_string()];
    expected.extend((0..NUM_LAYERS).map(|_| DIM.to_string()));
    if h[3..] != expected.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        return Err(bad(1, format!("unsupported dimensions `{}`", h[3..].join(" "))));
    }
    let mut params = Vec::new();
    for (name, r, c, _) in PairScorer::shapes(backbone) {
        let (ln, l) = lines.next().ok_or_else(|| bad(0, format!("missing matrix {name}")))?;
        let want = format!("{name} {r} {c}");
        if l.split_whitespace().collect::<Vec<_>>().join(" ") != want {
            return Err(bad(ln, format!("expected `{want}`")));
        }
        let mut m = Array2::zeros((r, c));
        for i in 0..r {
            let (ln, l) = lines.next().ok_or_else(|| bad(ln, format!("truncated matrix {name}")))?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(ln, format!("bad number `{t}`"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != c {
                return Err(bad(ln, format!("expected {c} values, found {}", vals.len())));
            }
            for (j, v) in vals.into_iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        params.push(m);
    }
    Ok(PairScorer { backbone, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{CnfFormula, CoreSet, CoreSource};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_graph(seed: u64) -> EmbeddedGraph {
        // 4 vars, 2 communities, 5 clauses: 8 + 2 + 5 = 15 nodes
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clauses: Vec<Vec<i32>> = (0..5)
            .map(|_| {
                let mut c = Vec::new();
                for v in 1..=4 {
                    if rng.gen_bool(0.5) {
                        c.push(if rng.gen_bool(0.5) { v } else { -v });
                    }
                }
                if c.is_empty() {
                    c.push(1);
                }
                c
            })
            .collect();
        let f = CnfFormula::from_lits(4, clauses).unwrap();
        EmbeddedGraph::build(&f, &[0, 0, 1, 1], &CoreSet::empty(CoreSource::File)).unwrap()
    }

    #[test]
    fn features_are_one_hot_by_type() {
        let g = small_graph(1);
        let x = node_features(&g);
        assert_eq!(x.nrows(), 8 + 2 + 5);
        assert_eq!(x.row(0).to_vec(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(x.row(1).to_vec(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(x.row(8).to_vec(), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(x.row(10).to_vec(), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(x.rows().into_iter().all(|r| r.sum() == 1.0));
    }

    #[test]
    fn bce_reference_values() {
        let l = bce_loss(&[0.5], &[0.5]).unwrap();
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!(bce_loss(&[1.0], &[0.0]).unwrap() < 1e-11);
        assert!(matches!(bce_loss(&[], &[0.5]), Err(GnnError::EmptyPairSet)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pos: Vec<f64> = (0..17).map(|_| rng.gen_range(0.01..0.99)).collect();
        let neg: Vec<f64> = (0..9).map(|_| rng.gen_range(0.01..0.99)).collect();
        let mut a = 0.0;
        for p in &pos {
            a += -p.ln();
        }
        let mut b = 0.0;
        for n in &neg {
            b += -(1.0 - n).ln();
        }
        let expected = a / 17.0 + b / 9.0;
        assert!((bce_loss(&pos, &neg).unwrap() - expected).abs() < 1e-12);
    }

    fn auc_oracle(pos: &[f64], neg: &[f64]) -> f64 {
        let mut s = 0.0;
        for p in pos {
            for n in neg {
                s += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
            }
        }
        s / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let pos: Vec<f64> = (0..rng.gen_range(1..30)).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
            let neg: Vec<f64> = (0..rng.gen_range(1..30)).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
            assert!((auc(&pos, &neg) - auc_oracle(&pos, &neg)).abs() < 1e-12);
        }
        assert_eq!(auc(&[0.9], &[0.1]), 1.0);
        assert_eq!(accuracy(&[0.9, 0.4], &[0.1, 0.5]), 0.75);
    }

    fn finite_difference_check(backbone: Backbone, seed: u64) {
        let g = small_graph(seed);
        let cg = CompGraph::full(&g);
        assert!(cg.num_nodes() <= 30);
        let mut model = PairScorer::new(backbone, seed);
        let c = cg.position(clause_node_id(&g, 0)).unwrap();
        let pos = [(c, c + 1), (c + 2, 0), (3, 9)];
        let neg = [(c + 3, c + 4), (1, c), (8, 9)];
        let (_, grads) = pairs_loss_grad(&model, &cg, &pos, &neg, 1.0 / 3.0, 1.0 / 3.0);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..model.params.len() {
            for idx in 0..model.params[k].len() {
                let orig = model.params[k].as_slice().unwrap()[idx];
                model.params[k].as_slice_mut().unwrap()[idx] = orig + h;
                let up = pairs_loss(&model, &cg, &pos, &neg, 1.0 / 3.0, 1.0 / 3.0);
                model.params[k].as_slice_mut().unwrap()[idx] = orig - h;
                let down = pairs_loss(&model, &cg, &pos, &neg, 1.0 / 3.0, 1.0 / 3.0);
                model.params[k].as_slice_mut().unwrap()[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads[k].as_slice().unwrap()[idx];
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst <= 1e-4, "{backbone}: worst relative error {worst}");
        assert!(grads.iter().any(|gr| gr.iter().any(|&x| x.abs() > 1e-6)));
    }

    #[test]
    fn gcn_gradients_match_finite_differences() {
        finite_difference_check(Backbone::Gcn, 21);
    }

    #[test]
    fn sage_gradients_match_finite_differences() {
        finite_difference_check(Backbone::Sage, 22);
    }

    #[test]
    fn weights_round_trip() {
        for bb in [Backbone::Gcn, Backbone::Sage] {
            let m = PairScorer::new(bb, 4);
            let text = weights_to_string(&m);
            assert!(text.starts_with(&format!("HSG-GNN 1 {bb} 3 4 32 32 32\n")));
            assert_eq!(parse_weights(&text).unwrap(), m);
        }
        assert!(parse_weights("HSG-GNN 1 gcn 3 4 16 16 16\n").is_err());
    }

    #[test]
    fn dump_has_one_row_per_clause_and_is_deterministic() {
        let g = small_graph(2);
        let m = PairScorer::new(Backbone::Gcn, 0);
        let d = dump_clause_features(&m, &g);
        assert_eq!(d.lines().count(), 1 + g.num_clauses());
        assert_eq!(d, dump_clause_features(&m, &g));
    }

    #[test]
    fn template_dump_collapses_equivalent_clauses() {
        // every clause is a single positive literal of a var in one
        // community: all clause nodes are structurally equivalent
        let f = CnfFormula::from_lits(3, vec![vec![1], vec![2], vec![3]]).unwrap();
        let g = EmbeddedGraph::build(&f, &[0, 0, 0], &CoreSet::empty(CoreSource::File)).unwrap();
        let d = dump_clause_features(&PairScorer::new(Backbone::Sage, 1), &g);
        let rows: std::collections::BTreeSet<String> =
            d.lines().skip(1).map(|l| l.split_once(',').unwrap().1.to_string()).collect();
        assert_eq!(rows.len(), 1);
    }
}
