use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hsg_cli::config::PipelineConfig;
use hsg_cli::pipeline::{
    cmd_build, cmd_demo, cmd_eval_hardness, cmd_eval_structure, cmd_generate, cmd_postprocess, cmd_split, cmd_train,
    cmd_tune,
};
use hsg_cli::CliError;

#[derive(Parser)]
#[command(name = "hsg", version, about = "Generate hard, structurally faithful SAT formulas from a corpus")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Random seed (required by split, train, generate and demo)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root holding every stage's directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Canonicalise a CNF directory and write community and core sidecars
    Build {
        /// Directory of .cnf files (default: data.input)
        input: Option<PathBuf>,
        /// Use the built-in oracle for cores instead of an external checker
        #[arg(long)]
        internal_core: bool,
    },
    /// Split every built formula into a template with its trace
    Split,
    /// Train the in-community and cross-community scorers
    Train,
    /// Generate formulas from the templates
    Generate,
    /// Restore hardness (or flip to SAT) on generated formulas
    Postprocess {
        #[arg(long)]
        internal_core: bool,
    },
    /// Structural statistics of generated vs ground-truth formulas
    EvalStructure {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Solver runtimes and ranking on generated vs ground-truth formulas
    EvalHardness {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Grid-search a solver's parameters on generated formulas
    Tune {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Run the whole pipeline on the bundled pigeonhole corpus
    Demo,
}

fn effective_config(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(common.config.as_deref())?;
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String, CliError> {
    let cfg = effective_config(&cli.common)?;
    println!("# effective configuration\n{}", cfg.to_toml());
    let out: &Path = &cfg.out;
    let msg = match cli.command {
        Cmd::Build { input, internal_core } => {
            let input = input
                .or_else(|| cfg.data.input.clone())
                .ok_or_else(|| CliError::Usage("build needs an input directory (argument or data.input)".into()))?;
            let internal = internal_core || cfg.build.internal_core;
            cmd_build(&cfg, &input, out, internal)?
                .iter()
                .map(|b| format!("{}: {} vars, {} clauses, {} communities, core {}\n", b.stem, b.num_vars, b.num_clauses, b.communities, b.core_size))
                .collect()
        }
        Cmd::Split => cmd_split(&cfg, out)?
            .iter()
            .map(|s| format!("{}: m1 {} m2 {} tuples {} dropped {}\n", s.stem, s.m1, s.m2, s.tuples, s.dropped))
            .collect(),
        Cmd::Train => {
            let t = cmd_train(&cfg, out)?;
            format!(
                "in-community: {} samples, final train auc {:.3}\ncross-community: {} samples, final train auc {:.3}\n",
                t.in_samples, t.in_final_auc, t.cross_samples, t.cross_final_auc
            )
        }
        Cmd::Generate => cmd_generate(&cfg, out)?
            .iter()
            .map(|g| {
                let stop = g.early_stop.as_deref().map(|s| format!(" ({s})")).unwrap_or_default();
                format!("{}: merges {:?} of {:?}{stop}\n", g.name, g.executed, g.planned)
            })
            .collect(),
        Cmd::Postprocess { internal_core } => cmd_postprocess(&cfg, out, internal_core || cfg.build.internal_core)?
            .iter()
            .map(|p| format!("{}: {} after {} iterations\n", p.name, p.status, p.iterations))
            .collect(),
        Cmd::EvalStructure { gen, gt } => cmd_eval_structure(&cfg, &gen, &gt, out)?,
        Cmd::EvalHardness { gen, gt } => cmd_eval_hardness(&cfg, &gen, &gt, out)?,
        Cmd::Tune { gen, test } => cmd_tune(&cfg, &gen, &test, out)?,
        Cmd::Demo => cmd_demo(&cfg, out)?,
    };
    Ok(msg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(msg) => {
            print!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
