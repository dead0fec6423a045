//! Pipeline configuration. Every field has a default; a config file only
//! needs the keys it changes. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hsg_core::generator::{GenConfig, ScramblePolicy, ScrambleScope, Selection};
use hsg_core::gnn::{Backbone, TrainConfig};
use hsg_core::harness::{SolverSpec, TuneGrid};
use hsg_core::par::ExecMode;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub data: DataSection,
    pub build: BuildSection,
    pub train: TrainSection,
    pub generate: GenerateSection,
    pub postprocess: PostSection,
    pub harness: HarnessSection,
    pub tune: TuneSection,
    pub solvers: Vec<SolverSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: None,
            out: PathBuf::from("hsg-out"),
            data: DataSection::default(),
            build: BuildSection::default(),
            train: TrainSection::default(),
            generate: GenerateSection::default(),
            postprocess: PostSection::default(),
            harness: HarnessSection::default(),
            tune: TuneSection::default(),
            solvers: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// directory of input `.cnf` files
    pub input: Option<PathBuf>,
    /// directories holding community / core sidecars to use instead of
    /// detecting them
    pub community_dir: Option<PathBuf>,
    pub core_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildSection {
    pub internal_core: bool,
    pub var_limit: usize,
    /// solver from `solvers` used to emit proofs
    pub core_solver: Option<String>,
    pub checker: Option<SolverSpec>,
    pub core_limit_s: f64,
}

impl Default for BuildSection {
    fn default() -> Self {
        BuildSection {
            internal_core: false,
            var_limit: hsg_core::cnf::DEFAULT_VAR_LIMIT,
            core_solver: None,
            checker: None,
            core_limit_s: 600.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub backbone: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub test_fraction: f64,
    pub sequential: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            backbone: t.backbone.to_string(),
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            test_fraction: t.test_fraction,
            sequential: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateSection {
    pub alpha: f64,
    pub candidates: usize,
    /// "argmax" or "multinomial"
    pub selection: String,
    /// outputs per template
    pub count: usize,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    /// "core" or "whole"
    pub scramble_scope: String,
}

impl Default for GenerateSection {
    fn default() -> Self {
        let g = GenConfig::default();
        let s = ScramblePolicy::default();
        GenerateSection {
            alpha: g.alpha,
            candidates: g.candidates_per_step,
            selection: "argmax".into(),
            count: 1,
            p1: s.p1,
            p2: s.p2,
            p3: s.p3,
            scramble_scope: "core".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostSection {
    /// "unsat" keeps the original core; "sat" loosens it
    pub target: String,
    /// "decisions" (internal oracle) or the name of a configured solver
    pub probe: String,
    /// threshold as a fraction of the source instance's hardness
    pub relative: f64,
    /// lower bound on the threshold
    pub min_threshold: f64,
    pub timeout_s: f64,
    pub max_iterations: usize,
}

impl Default for PostSection {
    fn default() -> Self {
        PostSection {
            target: "unsat".into(),
            probe: "decisions".into(),
            relative: 0.5,
            min_threshold: 1.0,
            timeout_s: 1200.0,
            max_iterations: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessSection {
    pub limit_s: f64,
    /// 0 selects all cores but one
    pub workers: usize,
}

impl Default for HarnessSection {
    fn default() -> Self {
        HarnessSection { limit_s: 1200.0, workers: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneSection {
    pub solver: Option<String>,
    pub params: BTreeMap<String, Vec<f64>>,
}

impl Default for TuneSection {
    fn default() -> Self {
        let decay = vec![0.75, 0.8, 0.85, 0.9, 0.95, 0.99, 0.999];
        let params = [("clause_decay".to_string(), decay.clone()), ("var_decay".to_string(), decay)].into();
        TuneSection { solver: None, params }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: String| CliError::Usage(format!("config: {e}"));
        self.train_config(0).map_err(usage)?.validate().map_err(|e| usage(e.to_string()))?;
        self.gen_config(0).map_err(usage)?.validate().map_err(|e| usage(e.to_string()))?;
        self.scramble_policy(0).map_err(usage)?.validate().map_err(|e| usage(e.to_string()))?;
        if self.generate.count == 0 {
            return Err(usage("generate.count must be positive".into()));
        }
        if !matches!(self.postprocess.target.as_str(), "unsat" | "sat") {
            return Err(usage(format!("postprocess.target must be `unsat` or `sat`, got `{}`", self.postprocess.target)));
        }
        let p = &self.postprocess;
        if !(p.relative > 0.0) || !(p.min_threshold > 0.0) || !(p.timeout_s > 0.0) || p.max_iterations == 0 {
            return Err(usage("postprocess thresholds, timeout and max_iterations must be positive".into()));
        }
        if p.probe != "decisions" && self.solver(&p.probe).is_none() {
            return Err(usage(format!("postprocess.probe `{}` is neither `decisions` nor a configured solver", p.probe)));
        }
        if !(self.harness.limit_s > 0.0) || !(self.build.core_limit_s > 0.0) {
            return Err(usage("time limits must be positive".into()));
        }
        let mut names: Vec<&str> = self.solvers.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(usage("solver names must be unique".into()));
        }
        if let Some(name) = &self.build.core_solver {
            if self.solver(name).is_none() {
                return Err(usage(format!("build.core_solver `{name}` is not a configured solver")));
            }
        }
        if let Some(name) = &self.tune.solver {
            if self.solver(name).is_none() {
                return Err(usage(format!("tune.solver `{name}` is not a configured solver")));
            }
        }
        self.tune_grid().map_err(usage)?;
        Ok(())
    }

    pub fn solver(&self, name: &str) -> Option<&SolverSpec> {
        self.solvers.iter().find(|s| s.name == name)
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig, String> {
        let t = &self.train;
        Ok(TrainConfig {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            test_fraction: t.test_fraction,
            backbone: t.backbone.parse::<Backbone>()?,
            seed,
            mode: if t.sequential { ExecMode::Sequential } else { ExecMode::default() },
        })
    }

    pub fn gen_config(&self, seed: u64) -> Result<GenConfig, String> {
        let selection = match self.generate.selection.as_str() {
            "argmax" => Selection::Argmax,
            "multinomial" => Selection::Multinomial,
            other => return Err(format!("unknown selection `{other}`")),
        };
        Ok(GenConfig { alpha: self.generate.alpha, candidates_per_step: self.generate.candidates, selection, seed })
    }

    pub fn scramble_policy(&self, seed: u64) -> Result<ScramblePolicy, String> {
        let scope = match self.generate.scramble_scope.as_str() {
            "core" => ScrambleScope::Core,
            "whole" => ScrambleScope::Whole,
            other => return Err(format!("unknown scramble scope `{other}`")),
        };
        let g = &self.generate;
        Ok(ScramblePolicy { p1: g.p1, p2: g.p2, p3: g.p3, scope, seed })
    }

    pub fn tune_grid(&self) -> Result<TuneGrid, String> {
        TuneGrid::new(self.tune.params.iter().map(|(k, v)| (k.clone(), v.clone())).collect()).map_err(|e| e.to_string())
    }

    pub fn workers(&self) -> usize {
        if self.harness.workers == 0 { hsg_core::harness::default_workers() } else { self.harness.workers }
    }
}
