//! Stage commands. Each reads the previous stage's directory under the
//! output root and writes its own.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hsg_core::cnf::{
    brute_force_sat, deletion_core, match_core_clauses, parse_dimacs, read_core_file, read_dimacs_file,
    serialize_dimacs, write_core_file, Clause, CnfError, CnfFormula, CoreSet, CoreSource,
};
use hsg_core::community::detect_cnm;
use hsg_core::generator::generate;
use hsg_core::gnn::{build_samples, read_weights, train, write_weights};
use hsg_core::graphrep::{derive_view, read_community_file, write_community_file, EmbeddedGraph, ViewKind};
use hsg_core::harness::{
    detect_core_external, generated_source, rank_solvers, recovery_accuracy, results_csv, run_matrix, tune_grid,
    ExternalCoreFinder, HarnessError, RankingReport, RunRecord, SolverProbe, SolverRunner, SolverSpec,
};
use hsg_core::metrics::{corpus_report, corpus_stats};
use hsg_core::postprocess::{
    flip_to_sat, postprocess, CoreFinder, DecisionProbe, DeletionCoreFinder, HardnessProbe, HardnessThreshold,
};
use hsg_core::splitter::{build_template, read_tuples, write_tuples, SplitTrace, Template};

use crate::config::PipelineConfig;
use crate::CliError;

pub const BUILD_DIR: &str = "build";
pub const SPLIT_DIR: &str = "split";
pub const MODEL_DIR: &str = "model";
pub const GEN_DIR: &str = "generated";
pub const POST_DIR: &str = "post";
pub const EVAL_DIR: &str = "eval";

/// Seed for one named unit of work, independent of which other units exist.
pub fn derive_seed(seed: u64, tag: &str, k: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn ctx<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

fn cnf_err(path: &Path, e: CnfError) -> CliError {
    match e {
        CnfError::Io(e) => CliError::Data(format!("{}: {e}", path.display())),
        e => CliError::Data(format!("{}: {e}", path.display())),
    }
}

fn tool_or_data(e: HarnessError) -> CliError {
    match e {
        HarnessError::NotRunnable { .. }
        | HarnessError::Spawn { .. }
        | HarnessError::SolverFailed { .. }
        | HarnessError::CheckerFailed { .. } => CliError::Tool(e.to_string()),
        e => CliError::Data(e.to_string()),
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io(path))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io(path))
}

/// The `.cnf` files of a directory, sorted by name.
pub fn list_cnf(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(io(dir))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "cnf"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(CliError::Data(format!("no .cnf files in {}", dir.display())));
    }
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn stage_dir(out: &Path, name: &str, producer: &str) -> Result<PathBuf, CliError> {
    let dir = out.join(name);
    if !dir.is_dir() {
        return Err(CliError::Data(format!(
            "missing stage output {}: run `hsg {producer}` with the same --out first",
            dir.display()
        )));
    }
    Ok(dir)
}

fn read_cnf(path: &Path) -> Result<CnfFormula, CliError> {
    read_dimacs_file(path).map_err(|e| cnf_err(path, e))
}

fn require_seed(cfg: &PipelineConfig, command: &str) -> Result<u64, CliError> {
    cfg.seed.ok_or_else(|| CliError::Usage(format!("{command} needs a seed: pass --seed or set `seed` in the config")))
}

fn registered(spec: &SolverSpec) -> Result<SolverSpec, CliError> {
    spec.clone().register().map_err(tool_or_data)
}

fn core_tools(cfg: &PipelineConfig) -> Result<(SolverSpec, SolverSpec), CliError> {
    let missing = || {
        CliError::Tool(
            "no external core tool configured: set build.core_solver (a [[solvers]] entry) and [build.checker] \
             in the config, or pass --internal-core to use the built-in oracle on small instances"
                .into(),
        )
    };
    let name = cfg.build.core_solver.as_ref().ok_or_else(missing)?;
    let solver = cfg.solver(name).ok_or_else(missing)?;
    let checker = cfg.build.checker.as_ref().ok_or_else(missing)?;
    Ok((registered(solver)?, registered(checker)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildEntry {
    pub stem: String,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub communities: usize,
    pub core_size: usize,
}

/// Canonical copies of the input formulas with community and core sidecars.
pub fn cmd_build(cfg: &PipelineConfig, input: &Path, out: &Path, internal_core: bool) -> Result<Vec<BuildEntry>, CliError> {
    let files = list_cnf(input)?;
    let tools = if internal_core { None } else { Some(core_tools(cfg)?) };
    let dir = out.join(BUILD_DIR);
    create_dir(&dir)?;
    let mut summary = Vec::new();
    for path in files {
        let stem = stem(&path);
        let f = read_cnf(&path)?;
        let cmty = match &cfg.data.community_dir {
            Some(d) => {
                let p = d.join(format!("{stem}.cmty"));
                read_community_file(&p, f.num_vars()).map_err(ctx(p.display()))?
            }
            None if f.num_vars() == 0 => Vec::new(),
            None => detect_cnm(&derive_view(&f, ViewKind::Vig)).map_err(ctx(&stem))?.assignment().to_vec(),
        };
        let target = dir.join(format!("{stem}.cnf"));
        write(&target, serialize_dimacs(&f))?;
        let core = match (&cfg.data.core_dir, &tools) {
            (Some(d), _) => {
                let p = d.join(format!("{stem}.core"));
                read_core_file(&p, &f).map_err(|e| cnf_err(&p, e))?
            }
            (None, None) => internal_core_of(&f, cfg.build.var_limit, &stem)?,
            (None, Some((solver, checker))) => {
                match detect_core_external(&target, solver, checker, cfg.build.core_limit_s, &dir.join(format!("{stem}.core"))) {
                    Ok(c) => c,
                    Err(HarnessError::NoProof(_)) => CoreSet::empty(CoreSource::ExternalChecker),
                    Err(e) => return Err(tool_or_data(e)),
                }
            }
        };
        write_community_file(dir.join(format!("{stem}.cmty")), &cmty).map_err(ctx(&stem))?;
        let core_path = dir.join(format!("{stem}.core"));
        write_core_file(&core_path, &f, &core).map_err(|e| cnf_err(&core_path, e))?;
        summary.push(BuildEntry {
            stem,
            num_vars: f.num_vars(),
            num_clauses: f.num_clauses(),
            communities: cmty.iter().max().map_or(0, |&c| c + 1),
            core_size: core.len(),
        });
    }
    Ok(summary)
}

fn internal_core_of(f: &CnfFormula, var_limit: usize, stem: &str) -> Result<CoreSet, CliError> {
    let hint = |e: CnfError| match e {
        CnfError::VarLimitExceeded { .. } => {
            CliError::Data(format!("{stem}: {e}; configure an external core tool instead of --internal-core"))
        }
        e => CliError::Data(format!("{stem}: {e}")),
    };
    if brute_force_sat(f, var_limit).map_err(hint)?.is_sat() {
        return Ok(CoreSet::empty(CoreSource::InternalOracle));
    }
    deletion_core(f, var_limit).map_err(hint)
}

struct Built {
    stem: String,
    formula: CnfFormula,
    cmty: Vec<usize>,
    core: CoreSet,
}

fn load_built(out: &Path) -> Result<Vec<Built>, CliError> {
    let dir = stage_dir(out, BUILD_DIR, "build")?;
    list_cnf(&dir)?
        .into_iter()
        .map(|path| {
            let stem = stem(&path);
            let formula = read_cnf(&path)?;
            let cp = dir.join(format!("{stem}.cmty"));
            let cmty = read_community_file(&cp, formula.num_vars()).map_err(ctx(cp.display()))?;
            let kp = dir.join(format!("{stem}.core"));
            let core = read_core_file(&kp, &formula).map_err(|e| cnf_err(&kp, e))?;
            Ok(Built { stem, formula, cmty, core })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitEntry {
    pub stem: String,
    pub m1: usize,
    pub m2: usize,
    pub tuples: usize,
    pub dropped: usize,
}

/// Splits every built formula into its template and records the trace and
/// training tuples.
pub fn cmd_split(cfg: &PipelineConfig, out: &Path) -> Result<Vec<SplitEntry>, CliError> {
    let seed = require_seed(cfg, "split")?;
    let built = load_built(out)?;
    let dir = out.join(SPLIT_DIR);
    create_dir(&dir)?;
    let mut summary = Vec::new();
    for b in built {
        let t = build_template(&b.formula, &b.cmty, &b.core, derive_seed(seed, &format!("split:{}", b.stem), 0))
            .map_err(|e| CliError::Data(format!("{}: {e}", b.stem)))?;
        let tp = dir.join(format!("{}.trace", b.stem));
        t.trace.write(&tp).map_err(ctx(tp.display()))?;
        let up = dir.join(format!("{}.tuples", b.stem));
        write_tuples(&up, &t.tuples).map_err(ctx(up.display()))?;
        summary.push(SplitEntry { stem: b.stem, m1: t.trace.m1(), m2: t.trace.m2(), tuples: t.tuples.len(), dropped: t.dropped });
    }
    Ok(summary)
}

fn load_templates(out: &Path) -> Result<Vec<(String, Template)>, CliError> {
    let built = load_built(out)?;
    let dir = stage_dir(out, SPLIT_DIR, "split")?;
    built
        .into_iter()
        .map(|b| {
            let original = EmbeddedGraph::build(&b.formula, &b.cmty, &b.core).map_err(ctx(&b.stem))?;
            let tp = dir.join(format!("{}.trace", b.stem));
            let trace = SplitTrace::read(&tp).map_err(ctx(tp.display()))?;
            let up = dir.join(format!("{}.tuples", b.stem));
            let tuples = read_tuples(&up).map_err(ctx(up.display()))?;
            let graph = trace.replay(&original, trace.len()).map_err(ctx(tp.display()))?;
            Ok((b.stem, Template { original, graph, trace, tuples, dropped: 0 }))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub in_samples: usize,
    pub cross_samples: usize,
    pub in_final_auc: f64,
    pub cross_final_auc: f64,
}

/// Trains both scorers; writes weights and per-epoch curves.
pub fn cmd_train(cfg: &PipelineConfig, out: &Path) -> Result<TrainSummary, CliError> {
    let seed = require_seed(cfg, "train")?;
    let tcfg = cfg.train_config(seed).map_err(CliError::Usage)?;
    let templates: Vec<Template> = load_templates(out)?.into_iter().map(|(_, t)| t).collect();
    let samples = build_samples(&templates, tcfg.mode).map_err(ctx("samples"))?;
    let trained = train(&samples, &tcfg).map_err(ctx("train"))?;
    let dir = out.join(MODEL_DIR);
    create_dir(&dir)?;
    for (name, model) in [("in", &trained.in_cmty), ("cross", &trained.cross_cmty)] {
        let p = dir.join(format!("{name}.weights"));
        write_weights(&p, model).map_err(ctx(p.display()))?;
    }
    write(&dir.join("in_curve.csv"), trained.in_report.to_csv())?;
    write(&dir.join("cross_curve.csv"), trained.cross_report.to_csv())?;
    let fin = |r: &hsg_core::gnn::TrainReport| r.final_stats().map_or(f64::NAN, |s| s.train_auc);
    Ok(TrainSummary {
        in_samples: trained.in_report.n_train + trained.in_report.n_test,
        cross_samples: trained.cross_report.n_train + trained.cross_report.n_test,
        in_final_auc: fin(&trained.in_report),
        cross_final_auc: fin(&trained.cross_report),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenEntry {
    pub name: String,
    pub planned: (usize, usize),
    pub executed: (usize, usize),
    pub early_stop: Option<String>,
}

/// Name of the `k`-th formula generated from `stem`.
pub fn generated_name(stem: &str, k: usize) -> String {
    format!("{stem}.g{k}")
}

/// Generates `generate.count` formulas per template. Each output comes with
/// its merge log and the scrambled core as a core file.
pub fn cmd_generate(cfg: &PipelineConfig, out: &Path) -> Result<Vec<GenEntry>, CliError> {
    let seed = require_seed(cfg, "generate")?;
    let templates = load_templates(out)?;
    let mdir = stage_dir(out, MODEL_DIR, "train")?;
    let load = |name: &str| {
        let p = mdir.join(format!("{name}.weights"));
        read_weights(&p).map_err(ctx(p.display()))
    };
    let (in_scorer, cross_scorer) = (load("in")?, load("cross")?);
    let dir = out.join(GEN_DIR);
    create_dir(&dir)?;
    let mut summary = Vec::new();
    for (stem, t) in &templates {
        for k in 0..cfg.generate.count {
            let gcfg = cfg.gen_config(derive_seed(seed, &format!("merge:{stem}"), k as u64)).map_err(CliError::Usage)?;
            let policy = cfg.scramble_policy(derive_seed(seed, &format!("scramble:{stem}"), k as u64)).map_err(CliError::Usage)?;
            let g = generate(&t.graph, &t.trace, &in_scorer, &cross_scorer, &policy, &gcfg)
                .map_err(ctx(stem))?;
            let name = generated_name(stem, k);
            let cnf = dir.join(format!("{name}.cnf"));
            write(&cnf, serialize_dimacs(&g.formula))?;
            write(&dir.join(format!("{name}.jsonl")), g.log_jsonl())?;
            let core: Vec<Clause> = g.graph.core_slots().into_iter().map(|s| Clause::new(g.graph.clause_literals(s))).collect();
            let idx = match_core_clauses(&g.formula, &core).map_err(|e| cnf_err(&cnf, e))?;
            let set = CoreSet::new(idx, CoreSource::File, g.formula.num_clauses()).map_err(|e| cnf_err(&cnf, e))?;
            let kp = dir.join(format!("{name}.core"));
            write_core_file(&kp, &g.formula, &set).map_err(|e| cnf_err(&kp, e))?;
            summary.push(GenEntry { name, planned: g.planned, executed: g.executed, early_stop: g.early_stop });
        }
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostEntry {
    pub name: String,
    pub status: String,
    pub iterations: usize,
}

fn probe_for(cfg: &PipelineConfig) -> Result<Box<dyn HardnessProbe>, CliError> {
    if cfg.postprocess.probe == "decisions" {
        return Ok(Box::new(DecisionProbe { var_limit: usize::MAX }));
    }
    let spec = cfg.solver(&cfg.postprocess.probe).expect("validated");
    Ok(Box::new(SolverProbe { solver: registered(spec)?, limit: cfg.postprocess.timeout_s }))
}

/// Post-processes every generated formula: loosens unexpected cores (UNSAT
/// target) or the original core (SAT target).
pub fn cmd_postprocess(cfg: &PipelineConfig, out: &Path, internal_core: bool) -> Result<Vec<PostEntry>, CliError> {
    let gdir = stage_dir(out, GEN_DIR, "generate")?;
    let bdir = stage_dir(out, BUILD_DIR, "build")?;
    let mut finder: Box<dyn CoreFinder> = if internal_core {
        Box::new(DeletionCoreFinder { var_limit: cfg.build.var_limit })
    } else {
        let (solver, checker) = core_tools(cfg)?;
        Box::new(ExternalCoreFinder { solver, checker, limit: cfg.build.core_limit_s })
    };
    let mut probe = probe_for(cfg)?;
    let dir = out.join(POST_DIR);
    create_dir(&dir)?;
    let p = &cfg.postprocess;
    let mut summary = Vec::new();
    for path in list_cnf(&gdir)? {
        let name = stem(&path);
        let f = read_cnf(&path)?;
        let kp = gdir.join(format!("{name}.core"));
        let origin = read_core_file(&kp, &f).map_err(|e| cnf_err(&kp, e))?;
        let k_origin = origin.to_formula(&f).clauses().to_vec();
        let post_err = |e: hsg_core::postprocess::PostError| CliError::Data(format!("{name}: {e}"));
        let (formula, status, iterations, log) = if p.target == "sat" {
            let g = flip_to_sat(&f, &k_origin, cfg.build.var_limit.max(f.num_vars())).map_err(post_err)?;
            (g, "satisfiable".to_string(), 0, None)
        } else {
            let src = bdir.join(generated_source(&format!("{name}.cnf")));
            let original = read_cnf(&src)?;
            let base = probe.measure(&original).map_err(post_err)?;
            let min = (p.relative * base).max(p.min_threshold);
            let threshold = HardnessThreshold { min_solve_seconds: min, timeout: p.timeout_s.max(min), max_iterations: p.max_iterations };
            let r = postprocess(&f, &k_origin, &threshold, probe.as_mut(), finder.as_mut()).map_err(post_err)?;
            let status = format!("{:?}", r.status).to_lowercase();
            (r.formula.clone(), status, r.log.len(), Some(r.log_csv()))
        };
        let target = dir.join(format!("{name}.cnf"));
        write(&target, serialize_dimacs(&formula))?;
        if let Some(log) = log {
            write(&dir.join(format!("{name}.post.csv")), log)?;
        }
        summary.push(PostEntry { name, status, iterations });
    }
    Ok(summary)
}

fn read_corpus(dir: &Path) -> Result<Vec<(String, CnfFormula)>, CliError> {
    list_cnf(dir)?.into_iter().map(|p| Ok((stem(&p), read_cnf(&p)?))).collect()
}

/// Structural statistics of a generated corpus against ground truth.
pub fn cmd_eval_structure(cfg: &PipelineConfig, gen: &Path, gt: &Path, out: &Path) -> Result<String, CliError> {
    let seed = cfg.seed.unwrap_or(0);
    let mode = cfg.train_config(0).map_err(CliError::Usage)?.mode;
    let g: Vec<CnfFormula> = read_corpus(gen)?.into_iter().map(|x| x.1).collect();
    let t: Vec<CnfFormula> = read_corpus(gt)?.into_iter().map(|x| x.1).collect();
    let report = corpus_report(&corpus_stats(&g, seed, mode), &corpus_stats(&t, seed, mode))
        .map_err(ctx("structure"))?;
    let csv = report.to_csv();
    let dir = out.join(EVAL_DIR);
    create_dir(&dir)?;
    write(&dir.join("structure.csv"), &csv)?;
    Ok(csv)
}

fn solver_specs(cfg: &PipelineConfig) -> Result<Vec<SolverSpec>, CliError> {
    if cfg.solvers.is_empty() {
        return Err(CliError::Tool("no solvers configured: add [[solvers]] entries to the config".into()));
    }
    cfg.solvers.iter().map(registered).collect()
}

fn mean_cpu(records: &[RunRecord], solver: &str) -> f64 {
    let xs: Vec<f64> = records.iter().filter(|r| r.solver == solver).map(RunRecord::effective_seconds).collect();
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

fn avg_rank(r: &RankingReport, solver: &str) -> f64 {
    r.average.iter().find(|x| x.0 == solver).map_or(f64::NAN, |x| x.1)
}

/// Runs every solver on both corpora, ranks them and reports how often the
/// generated instances reproduce their source instance's ranking.
pub fn cmd_eval_hardness(cfg: &PipelineConfig, gen: &Path, gt: &Path, out: &Path) -> Result<String, CliError> {
    let specs = solver_specs(cfg)?;
    let (gen_files, gt_files) = (list_cnf(gen)?, list_cnf(gt)?);
    let limit = cfg.harness.limit_s;
    let gen_recs = run_matrix(&specs, &gen_files, limit, cfg.workers()).map_err(tool_or_data)?;
    let gt_recs = run_matrix(&specs, &gt_files, limit, cfg.workers()).map_err(tool_or_data)?;
    let gen_rank = rank_solvers(&gen_recs).map_err(tool_or_data)?;
    let gt_rank = rank_solvers(&gt_recs).map_err(tool_or_data)?;
    let acc = recovery_accuracy(&gen_rank, &gt_rank, generated_source).map_err(tool_or_data)?;
    let dir = out.join(EVAL_DIR);
    create_dir(&dir)?;
    write(&dir.join("hardness_gen.csv"), results_csv(&gen_recs))?;
    write(&dir.join("hardness_gt.csv"), results_csv(&gt_recs))?;
    write(&dir.join("ranking_gen.csv"), gen_rank.to_csv())?;
    write(&dir.join("ranking_gt.csv"), gt_rank.to_csv())?;
    let mut s = String::from("solver,gen_mean_cpu_s,gt_mean_cpu_s,gen_avg_rank,gt_avg_rank\n");
    for spec in &specs {
        let n = &spec.name;
        let _ = writeln!(
            s,
            "{n},{:.3},{:.3},{:.3},{:.3}",
            mean_cpu(&gen_recs, n),
            mean_cpu(&gt_recs, n),
            avg_rank(&gen_rank, n),
            avg_rank(&gt_rank, n)
        );
    }
    let _ = writeln!(s, "ranking_accuracy_pct,{:.1}", 100.0 * acc);
    write(&dir.join("hardness_summary.csv"), &s)?;
    Ok(s)
}

/// Grid-search tuning of one solver on a generated corpus, validated on a
/// test corpus.
pub fn cmd_tune(cfg: &PipelineConfig, gen: &Path, test: &Path, out: &Path) -> Result<String, CliError> {
    let name = cfg.tune.solver.as_ref().ok_or_else(|| CliError::Usage("tune.solver is not set in the config".into()))?;
    let spec = registered(cfg.solver(name).expect("validated"))?;
    let grid = cfg.tune_grid().map_err(CliError::Usage)?;
    let report = tune_grid(&SolverRunner { spec: &spec }, &grid, &list_cnf(gen)?, &list_cnf(test)?, cfg.harness.limit_s, cfg.workers())
        .map_err(tool_or_data)?;
    let dir = out.join(EVAL_DIR);
    create_dir(&dir)?;
    write(&dir.join("tune_points.csv"), report.points_csv())?;
    let summary = report.summary_csv();
    write(&dir.join("tune_summary.csv"), &summary)?;
    Ok(summary)
}

pub const DEMO_CORPUS: [(&str, &str); 3] = [
    ("php-3-2.cnf", include_str!("../demo/php-3-2.cnf")),
    ("php-4-3.cnf", include_str!("../demo/php-4-3.cnf")),
    ("php-5-4.cnf", include_str!("../demo/php-5-4.cnf")),
];

/// Writes the bundled pigeonhole corpus to `dir`.
pub fn write_demo_corpus(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    create_dir(dir)?;
    DEMO_CORPUS
        .iter()
        .map(|(name, text)| {
            let p = dir.join(name);
            parse_dimacs(text.as_bytes()).map_err(|e| cnf_err(&p, e))?;
            write(&p, text)?;
            Ok(p)
        })
        .collect()
}

/// Full pipeline on the bundled corpus with the internal core oracle. Every
/// post-processed output is checked for unsatisfiability.
pub fn cmd_demo(cfg: &PipelineConfig, out: &Path) -> Result<String, CliError> {
    require_seed(cfg, "demo")?;
    let corpus = out.join("corpus");
    write_demo_corpus(&corpus)?;
    let mut log = String::new();
    for b in cmd_build(cfg, &corpus, out, true)? {
        let _ = writeln!(log, "build {}: {} vars, {} clauses, {} communities, core {}", b.stem, b.num_vars, b.num_clauses, b.communities, b.core_size);
    }
    for s in cmd_split(cfg, out)? {
        let _ = writeln!(log, "split {}: m1 {} m2 {} tuples {}", s.stem, s.m1, s.m2, s.tuples);
    }
    let t = cmd_train(cfg, out)?;
    let _ = writeln!(log, "train: in-community auc {:.3}, cross-community auc {:.3}", t.in_final_auc, t.cross_final_auc);
    cmd_generate(cfg, out)?;
    for p in cmd_postprocess(cfg, out, true)? {
        let f = read_cnf(&out.join(POST_DIR).join(format!("{}.cnf", p.name)))?;
        let sat = brute_force_sat(&f, usize::MAX).map_err(|e| CliError::Data(e.to_string()))?.is_sat();
        let verdict = if sat { "SAT" } else { "UNSAT" };
        let _ = writeln!(log, "postprocess {}: {} after {} iterations, oracle {verdict}", p.name, p.status, p.iterations);
        if cfg.postprocess.target == "unsat" && sat {
            return Err(CliError::Data(format!("{} is satisfiable after post-processing", p.name)));
        }
    }
    let _ = writeln!(log, "{}", cmd_eval_structure(cfg, &out.join(POST_DIR), &corpus, out)?.trim_end());
    Ok(log)
}
