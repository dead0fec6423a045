//! Structural statistics: VIG clustering, modularity on the four views,
//! the clause-degree power-law exponent, and corpus comparison tables.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::cnf::CnfFormula;
use crate::community::{detect_louvain, modularity, CommunityError};
use crate::graphrep::{derive_view, GraphView, ViewKind};
use crate::par::{self, ExecMode};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty graph")]
    EmptyGraph,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate distribution")]
    Degenerate,
    #[error("empty corpus")]
    EmptyCorpus,
}

/// Mean local clustering coefficient; nodes of degree < 2 count as 0.
pub fn clustering_coefficient(view: &GraphView) -> Result<f64, MetricsError> {
    if view.num_nodes == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    let adj = view.adjacency();
    let mut total = 0.0;
    for nb in &adj {
        let d = nb.len();
        if d < 2 {
            continue;
        }
        let mut closed = 0usize;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if adj[a].binary_search(&b).is_ok() {
                    closed += 1;
                }
            }
        }
        total += 2.0 * closed as f64 / (d * (d - 1)) as f64;
    }
    Ok(total / view.num_nodes as f64)
}

/// Louvain modularity of a view, `None` when the view has no edges.
pub fn louvain_modularity(view: &GraphView, seed: u64) -> Option<f64> {
    match detect_louvain(view, seed) {
        Ok(p) => modularity(view, &p).ok(),
        Err(CommunityError::Edgeless | CommunityError::EmptyGraph) => None,
        Err(_) => None,
    }
}

pub const MIN_POWERLAW_SAMPLES: usize = 10;

/// Discrete power-law fit: for every candidate `x_min`,
/// `alpha = 1 + n / sum(ln(x / (x_min - 0.5)))` over the tail `x >= x_min`;
/// the candidate minimizing the KS distance between the empirical and the
/// fitted tail CCDF `((x - 0.5) / (x_min - 0.5))^(1 - alpha)` wins (smallest
/// `x_min` on ties). Candidates need a tail with at least two distinct
/// values and `MIN_POWERLAW_SAMPLES` entries.
pub fn powerlaw_alpha(degrees: &[usize]) -> Result<(f64, usize), MetricsError> {
    if degrees.len() < MIN_POWERLAW_SAMPLES {
        return Err(MetricsError::TooFewSamples { needed: MIN_POWERLAW_SAMPLES, got: degrees.len() });
    }
    let mut xs: Vec<usize> = degrees.to_vec();
    xs.sort_unstable();
    if xs[0] == 0 {
        return Err(MetricsError::Degenerate);
    }
    let mut distinct = xs.clone();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(MetricsError::Degenerate);
    }
    let mut best: Option<(f64, f64, usize)> = None;
    for &x_min in &distinct[..distinct.len() - 1] {
        let start = xs.partition_point(|&x| x < x_min);
        let tail = &xs[start..];
        if tail.len() < MIN_POWERLAW_SAMPLES {
            break;
        }
        let n = tail.len() as f64;
        let shift = x_min as f64 - 0.5;
        let s: f64 = tail.iter().map(|&x| (x as f64 / shift).ln()).sum();
        let alpha = 1.0 + n / s;
        let mut ks: f64 = 0.0;
        let mut i = 0;
        while i < tail.len() {
            let x = tail[i];
            let emp = (tail.len() - i) as f64 / n;
            let fit = ((x as f64 - 0.5) / shift).powf(1.0 - alpha);
            ks = ks.max((emp - fit).abs());
            while i < tail.len() && tail[i] == x {
                i += 1;
            }
        }
        if best.map_or(true, |(b, _, _)| ks < b) {
            best = Some((ks, alpha, x_min));
        }
    }
    best.map(|(_, a, x)| (a, x)).ok_or(MetricsError::Degenerate)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StructStats {
    pub vig_clustering: Option<f64>,
    pub vig_modularity: Option<f64>,
    pub vcg_alpha_c: Option<f64>,
    pub vcg_modularity: Option<f64>,
    pub lig_modularity: Option<f64>,
    pub lcg_modularity: Option<f64>,
}

pub const METRIC_NAMES: [&str; 6] =
    ["vig_clustering", "vig_modularity", "vcg_alpha_c", "vcg_modularity", "lig_modularity", "lcg_modularity"];

impl StructStats {
    pub fn values(&self) -> [Option<f64>; 6] {
        [
            self.vig_clustering,
            self.vig_modularity,
            self.vcg_alpha_c,
            self.vcg_modularity,
            self.lig_modularity,
            self.lcg_modularity,
        ]
    }
}

/// All structural metrics of one formula, Louvain seeded with `seed`.
pub fn structure_stats(f: &CnfFormula, seed: u64) -> StructStats {
    let vig = derive_view(f, ViewKind::Vig);
    let vcg = derive_view(f, ViewKind::Vcg);
    let clause_degrees: Vec<usize> = f.clauses().iter().map(|c| c.vars().len()).collect();
    StructStats {
        vig_clustering: clustering_coefficient(&vig).ok(),
        vig_modularity: louvain_modularity(&vig, seed),
        vcg_alpha_c: powerlaw_alpha(&clause_degrees).ok().map(|(a, _)| a),
        vcg_modularity: louvain_modularity(&vcg, seed),
        lig_modularity: louvain_modularity(&derive_view(f, ViewKind::Lig), seed),
        lcg_modularity: louvain_modularity(&derive_view(f, ViewKind::Lcg), seed),
    }
}

pub fn corpus_stats(formulas: &[CnfFormula], seed: u64, mode: ExecMode) -> Vec<StructStats> {
    par::map(mode, formulas, |f| structure_stats(f, seed))
}

/// `|gen - gt| / |gt|` in percent; `None` when `gt` is zero.
pub fn relative_error_pct(gen_mean: f64, gt_mean: f64) -> Option<f64> {
    if gt_mean == 0.0 {
        None
    } else {
        Some(100.0 * (gen_mean - gt_mean).abs() / gt_mean.abs())
    }
}

/// Mean and sample standard deviation of the defined values.
pub fn mean_std(values: &[Option<f64>]) -> Option<(f64, f64)> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Some((mean, std))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub metric: String,
    pub gen: Option<(f64, f64)>,
    pub gt: Option<(f64, f64)>,
    pub rel_err_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusReport {
    pub rows: Vec<MetricRow>,
}

impl CorpusReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,gen_mean,gen_std,gt_mean,gt_std,rel_err_pct\n");
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.metric,
                opt(r.gen.map(|g| g.0)),
                opt(r.gen.map(|g| g.1)),
                opt(r.gt.map(|g| g.0)),
                opt(r.gt.map(|g| g.1)),
                opt(r.rel_err_pct)
            );
        }
        out
    }
}

pub fn corpus_report(generated: &[StructStats], ground_truth: &[StructStats]) -> Result<CorpusReport, MetricsError> {
    if generated.is_empty() || ground_truth.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let rows = METRIC_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let col = |s: &[StructStats]| s.iter().map(|x| x.values()[k]).collect::<Vec<_>>();
            let gen = mean_std(&col(generated));
            let gt = mean_std(&col(ground_truth));
            let rel_err_pct = match (gen, gt) {
                (Some(g), Some(t)) => relative_error_pct(g.0, t.0),
                _ => None,
            };
            MetricRow { metric: name.to_string(), gen, gt, rel_err_pct }
        })
        .collect();
    Ok(CorpusReport { rows })
}
