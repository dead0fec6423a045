use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{run_pool, run_solver, HarnessError, RunRecord, SolverSpec};

/// Named parameters with candidate values. Points are enumerated in
/// lexicographic order, the first parameter varying slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct TuneGrid {
    params: Vec<(String, Vec<f64>)>,
}

impl TuneGrid {
    pub fn new(params: Vec<(String, Vec<f64>)>) -> Result<Self, HarnessError> {
        if params.is_empty() {
            return Err(HarnessError::Config("grid has no parameters".into()));
        }
        for (name, values) in &params {
            if values.is_empty() {
                return Err(HarnessError::Config(format!("parameter `{name}` has no values")));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(HarnessError::Config(format!("parameter `{name}` has a non-finite value")));
            }
        }
        let mut names: Vec<&String> = params.iter().map(|p| &p.0).collect();
        names.sort();
        names.dedup();
        if names.len() != params.len() {
            return Err(HarnessError::Config("duplicate parameter name".into()));
        }
        Ok(TuneGrid { params })
    }

    pub fn params(&self) -> &[(String, Vec<f64>)] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.iter().map(|p| p.1.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Vec<(String, f64)>> {
        let mut out: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (name, values) in &self.params {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push((name.clone(), v));
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Runs a solver under a parameter assignment. An empty assignment means
/// the solver's defaults.
pub trait Runner: Sync {
    fn run(&self, instance: &Path, params: &[(String, f64)], limit: f64) -> Result<RunRecord, HarnessError>;
}

pub struct SolverRunner<'a> {
    pub spec: &'a SolverSpec,
}

impl Runner for SolverRunner<'_> {
    fn run(&self, instance: &Path, params: &[(String, f64)], limit: f64) -> Result<RunRecord, HarnessError> {
        let extra = self.spec.param_args(params)?;
        run_solver(self.spec, instance, limit, &extra, None)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub params: Vec<(String, f64)>,
    /// Mean CPU seconds on the generated corpus, unsolved runs at the limit.
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneReport {
    pub points: Vec<GridPoint>,
    pub best: Vec<(String, f64)>,
    pub t_g: f64,
    pub t_t: f64,
    pub t_default: f64,
    pub gain: f64,
}

impl TuneReport {
    pub fn best_params_string(&self) -> String {
        self.best.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(" ")
    }

    pub fn summary_csv(&self) -> String {
        format!(
            "best_params,t_g,t_t,t_default,gain_pct\n{},{:.3},{:.3},{:.3},{:+.2}\n",
            self.best_params_string(),
            self.t_g,
            self.t_t,
            self.t_default,
            100.0 * self.gain
        )
    }

    pub fn points_csv(&self) -> String {
        let mut s = String::new();
        if let Some(first) = self.points.first() {
            for (n, _) in &first.params {
                let _ = write!(s, "{n},");
            }
        }
        s.push_str("objective\n");
        for p in &self.points {
            for (_, v) in &p.params {
                let _ = write!(s, "{v},");
            }
            let _ = writeln!(s, "{:.6}", p.objective);
        }
        s
    }
}

/// Relative improvement of tuned over default runtime.
pub fn tuning_gain(t_default: f64, t_tuned: f64) -> f64 {
    (t_default - t_tuned) / t_default
}

fn mean_time(
    runner: &dyn Runner,
    corpus: &[PathBuf],
    params: &[(String, f64)],
    limit: f64,
    workers: usize,
) -> Result<f64, HarnessError> {
    let recs = run_pool(corpus, workers, |inst| runner.run(inst, params, limit))?;
    Ok(recs.iter().map(RunRecord::effective_seconds).sum::<f64>() / recs.len() as f64)
}

/// Grid search: every point is evaluated once on `generated`, the minimiser
/// (first in enumeration order on ties) is then compared with the defaults
/// on `test`.
pub fn tune_grid(
    runner: &dyn Runner,
    grid: &TuneGrid,
    generated: &[PathBuf],
    test: &[PathBuf],
    limit: f64,
    workers: usize,
) -> Result<TuneReport, HarnessError> {
    if generated.is_empty() || test.is_empty() {
        return Err(HarnessError::Config("tuning corpora must be nonempty".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for params in grid.points() {
        let objective = mean_time(runner, generated, &params, limit, workers)?;
        points.push(GridPoint { params, objective });
    }
    let best = points
        .iter()
        .fold(None::<&GridPoint>, |acc, p| match acc {
            Some(b) if b.objective <= p.objective => Some(b),
            _ => Some(p),
        })
        .expect("grid is nonempty");
    let (best, t_g) = (best.params.clone(), best.objective);
    let t_t = mean_time(runner, test, &best, limit, workers)?;
    let t_default = mean_time(runner, test, &[], limit, workers)?;
    Ok(TuneReport { points, best, t_g, t_t, t_default, gain: tuning_gain(t_default, t_t) })
}
