//! Training loop: per-stage datasets, Adam, per-epoch metrics.

use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::compgraph::{clause_node_id, CompGraph};
use super::model::{pair_score, Backbone, PairScorer};
use super::{accuracy, auc, bce_loss, pairs_loss_grad, GnnError};
use crate::par::{self, ExecMode};
use crate::splitter::{Stage, Template};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub test_fraction: f64,
    pub backbone: Backbone,
    pub seed: u64,
    pub mode: ExecMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.001,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            test_fraction: 0.1,
            backbone: Backbone::Gcn,
            seed: 0,
            mode: ExecMode::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GnnError> {
        let err = |m: &str| Err(GnnError::Config(m.to_string()));
        if self.epochs == 0 {
            return err("epochs must be positive");
        }
        if !(self.learning_rate >= 0.0) {
            return err("learning_rate must be non-negative");
        }
        if self.batch_size == 0 {
            return err("batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return err("Adam moments must lie in [0, 1) and epsilon must be positive");
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return err("test_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

/// A training tuple rendered as the receptive field of `(u, v+, v-)` in its
/// snapshot; the three targets sit at positions 0, 1, 2.
#[derive(Clone, Debug)]
pub struct Sample {
    pub stage: Stage,
    pub cg: CompGraph,
}

impl Sample {
    fn scores(&self, model: &PairScorer) -> (f64, f64) {
        let h = model.embed(&self.cg);
        (pair_score(&h, 0, 1), pair_score(&h, 0, 2))
    }
}

/// Replays every template's trace and cuts out the receptive field of each
/// tuple at its snapshot.
pub fn build_samples(templates: &[Template], mode: ExecMode) -> Result<Vec<Sample>, GnnError> {
    let per = par::map(mode, templates, |t| -> Result<Vec<Sample>, GnnError> {
        let mut tuples = t.tuples.clone();
        tuples.sort_by_key(|x| x.snapshot);
        let mut next = 0;
        let mut out = Vec::with_capacity(tuples.len());
        let mut g = t.original.clone();
        t.trace.replay_each(&mut g, t.trace.len(), |k, snap| {
            while next < tuples.len() && tuples[next].snapshot == k {
                let tu = tuples[next];
                let ids = [tu.u_pos, tu.v_pos, tu.v_neg].map(|s| clause_node_id(snap, s));
                out.push(Sample { stage: tu.stage, cg: CompGraph::receptive(snap, &ids) });
                next += 1;
            }
        })?;
        Ok(out)
    });
    let mut all = Vec::new();
    for r in per {
        all.extend(r?);
    }
    Ok(all)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_auc: f64,
    pub train_acc: f64,
    pub test_auc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub stage: Stage,
    pub n_train: usize,
    pub n_test: usize,
    pub curve: Vec<EpochStats>,
}

impl TrainReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,train_auc,train_acc,test_auc,test_acc\n");
        for e in &self.curve {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.epoch, e.loss, e.train_auc, e.train_acc, e.test_auc, e.test_acc
            );
        }
        out
    }

    /// Means of consecutive non-overlapping windows of the loss curve.
    pub fn smoothed_loss(&self, window: usize) -> Vec<f64> {
        self.curve
            .chunks(window)
            .filter(|c| c.len() == window)
            .map(|c| c.iter().map(|e| e.loss).sum::<f64>() / window as f64)
            .collect()
    }

    pub fn final_stats(&self) -> Option<&EpochStats> {
        self.curve.last()
    }
}

struct Adam {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: i32,
}

impl Adam {
    fn new(model: &PairScorer) -> Self {
        let zeros: Vec<Array2<f64>> = model.params().iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        Adam { m: zeros.clone(), v: zeros, t: 0 }
    }

    fn step(&mut self, model: &mut PairScorer, grads: &[Array2<f64>], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (k, p) in model.params_mut().iter_mut().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads[k]);
            ndarray::Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
            });
        }
    }
}

fn evaluate(model: &PairScorer, samples: &[&Sample], mode: ExecMode) -> (f64, f64, f64) {
    if samples.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let scores = par::map(mode, samples, |s| s.scores(model));
    let (pos, neg): (Vec<f64>, Vec<f64>) = scores.into_iter().unzip();
    let loss = bce_loss(&pos, &neg).expect("nonempty");
    (loss, auc(&pos, &neg), accuracy(&pos, &neg))
}

/// Trains one scorer on the given samples. Samples are split 90/10 (by
/// default) into train and held-out sets after a seeded shuffle.
pub fn train_stage(samples: &[&Sample], stage: Stage, cfg: &TrainConfig) -> Result<(PairScorer, TrainReport), GnnError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(GnnError::EmptyStage(stage));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let n_test = ((samples.len() as f64) * cfg.test_fraction).floor() as usize;
    let n_test = n_test.min(samples.len() - 1);
    let test: Vec<&Sample> = order[..n_test].iter().map(|&i| samples[i]).collect();
    let train: Vec<&Sample> = order[n_test..].iter().map(|&i| samples[i]).collect();
    let mut batch_order = train.clone();

    let mut model = PairScorer::new(cfg.backbone, cfg.seed);
    let mut adam = Adam::new(&model);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        batch_order.shuffle(&mut rng);
        for batch in batch_order.chunks(cfg.batch_size) {
            let w = 1.0 / batch.len() as f64;
            let results = par::map(cfg.mode, batch, |s| pairs_loss_grad(&model, &s.cg, &[(0, 1)], &[(0, 2)], w, w).1);
            let mut grads = results.into_iter();
            let mut total = grads.next().expect("nonempty batch");
            for g in grads {
                for (t, x) in total.iter_mut().zip(&g) {
                    *t += x;
                }
            }
            adam.step(&mut model, &total, cfg);
        }
        let (loss, train_auc, train_acc) = evaluate(&model, &train, cfg.mode);
        let (_, test_auc, test_acc) = evaluate(&model, &test, cfg.mode);
        curve.push(EpochStats { epoch, loss, train_auc, train_acc, test_auc, test_acc });
    }
    let report = TrainReport { stage, n_train: train.len(), n_test, curve };
    Ok((model, report))
}

#[derive(Clone, Debug)]
pub struct TrainedScorers {
    pub in_cmty: PairScorer,
    pub cross_cmty: PairScorer,
    pub in_report: TrainReport,
    pub cross_report: TrainReport,
}

/// Trains the in-community and cross-community scorers independently on
/// their own stage's samples.
pub fn train(samples: &[Sample], cfg: &TrainConfig) -> Result<TrainedScorers, GnnError> {
    let pick = |stage| samples.iter().filter(|s| s.stage == stage).collect::<Vec<_>>();
    let (in_s, cross_s) = (pick(Stage::InCmty), pick(Stage::CrossCmty));
    if in_s.is_empty() {
        return Err(GnnError::EmptyStage(Stage::InCmty));
    }
    if cross_s.is_empty() {
        return Err(GnnError::EmptyStage(Stage::CrossCmty));
    }
    let (in_cmty, in_report) = train_stage(&in_s, Stage::InCmty, cfg)?;
    let cross_cfg = TrainConfig { seed: cfg.seed.wrapping_add(1), ..cfg.clone() };
    let (cross_cmty, cross_report) = train_stage(&cross_s, Stage::CrossCmty, &cross_cfg)?;
    Ok(TrainedScorers { in_cmty, cross_cmty, in_report, cross_report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{CnfFormula, CoreSet, CoreSource};
    use crate::splitter::build_template;

    fn templates() -> Vec<Template> {
        let f = CnfFormula::from_lits(
            6,
            vec![vec![1, 2, -4], vec![-1, 3, 5], vec![2, -3, 6], vec![4, 5, -6], vec![-2, -5]],
        )
        .unwrap();
        vec![build_template(&f, &[0, 0, 0, 1, 1, 1], &CoreSet::empty(CoreSource::File), 1).unwrap()]
    }

    #[test]
    fn samples_match_tuples() {
        let ts = templates();
        let samples = build_samples(&ts, ExecMode::Sequential).unwrap();
        assert_eq!(samples.len(), ts[0].tuples.len());
        for (s, tu) in samples.iter().zip(&ts[0].tuples) {
            assert_eq!(s.stage, tu.stage);
            assert_eq!(s.cg.sizes[3], 3);
        }
    }

    #[test]
    fn zero_learning_rate_keeps_weights_and_loss() {
        let samples = build_samples(&templates(), ExecMode::Sequential).unwrap();
        let refs: Vec<&Sample> = samples.iter().collect();
        let cfg = TrainConfig { epochs: 3, learning_rate: 0.0, test_fraction: 0.0, ..Default::default() };
        let (m, r) = train_stage(&refs, Stage::InCmty, &cfg).unwrap();
        assert_eq!(m, PairScorer::new(cfg.backbone, cfg.seed));
        assert!(r.curve.windows(2).all(|w| w[0].loss == w[1].loss));
    }

    #[test]
    fn training_lowers_loss_and_is_reproducible() {
        let samples = build_samples(&templates(), ExecMode::Sequential).unwrap();
        let refs: Vec<&Sample> = samples.iter().collect();
        for bb in [Backbone::Gcn, Backbone::Sage] {
            let cfg = TrainConfig { epochs: 30, learning_rate: 0.01, backbone: bb, ..Default::default() };
            let (m1, r1) = train_stage(&refs, Stage::InCmty, &cfg).unwrap();
            assert!(r1.curve.last().unwrap().loss < r1.curve[0].loss);
            let seq = TrainConfig { mode: ExecMode::Sequential, ..cfg.clone() };
            let par = TrainConfig { mode: ExecMode::Parallel, ..cfg };
            let (m2, r2) = train_stage(&refs, Stage::InCmty, &seq).unwrap();
            let (m3, r3) = train_stage(&refs, Stage::InCmty, &par).unwrap();
            assert_eq!(m2, m3);
            assert_eq!(r2.to_csv(), r3.to_csv());
            assert_eq!(r1.curve.len(), 30);
            let _ = m1;
        }
    }

    #[test]
    fn config_and_dataset_errors() {
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(GnnError::Config(_))));
        assert!(matches!(train(&[], &TrainConfig::default()), Err(GnnError::EmptyStage(Stage::InCmty))));
    }

    #[test]
    fn csv_layout() {
        let r = TrainReport {
            stage: Stage::InCmty,
            n_train: 1,
            n_test: 0,
            curve: vec![EpochStats { epoch: 1, loss: 1.5, train_auc: 0.5, train_acc: 0.5, test_auc: f64::NAN, test_acc: f64::NAN }],
        };
        assert_eq!(r.to_csv(), "epoch,loss,train_auc,train_acc,test_auc,test_acc\n1,1.5,0.5,0.5,NaN,NaN\n");
        assert_eq!(r.smoothed_loss(1), vec![1.5]);
    }
}
