//! Command-line front end: training runs, evaluation, export and the
//! experiment presets.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::checkpoint::read_checkpoint;
use crate::evaluation::{export_field, relative_error, ErrorReport, ReferenceSolution};
use crate::loss::EnergyBreakdown;
use crate::network::{Activation, NetworkArch};
use crate::optimizer::ActiveSet;
use crate::problems::{ProblemSpec, SuperPotential};
use crate::trainer::{train_with, Algorithm, EnergyObjective, OutputOptions, StepInfo, TrainConfig, TrainObserver};

#[derive(Debug, Parser)]
#[command(name = "hvi", version, about = "Deep energy minimization for contact problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network on one problem.
    Train(TrainArgs),
    /// Relative energy-norm error of a checkpoint against a reference CSV.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Defaults to the problem stored in the checkpoint.
        #[arg(long)]
        problem: Option<String>,
    },
    /// Write the displacement of a checkpoint on a uniform grid.
    Export {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        problem: Option<String>,
    },
    /// Named experiment configurations.
    Preset {
        #[command(subcommand)]
        command: PresetCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetCommand {
    List,
    Run {
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory. Defaults to `$HVI_OUT_DIR/<run name>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "HVI_OUT_DIR", default_value = "runs")]
    pub out_root: PathBuf,
    /// Multiplies every epoch budget (rounded up).
    #[arg(long, default_value_t = 1.0)]
    pub epochs_scale: f64,
    /// Reference solution used to report the relative error.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Suppress progress lines on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// JSON file with TrainConfig overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// A named experiment configuration.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: TrainConfig,
    /// Relative error expected at the full budget, for comparison only.
    pub expected_relative_error: f64,
}

/// Problem-dependent defaults: activation and finest lattice step.
pub fn config_for(problem: &str, algorithm: Algorithm) -> Result<TrainConfig> {
    let spec = ProblemSpec::by_name(problem)?;
    let (activation, step) = match spec.potential {
        SuperPotential::NormalCompliance => (Activation::ReluSquared, 1.0 / 200.0),
        _ => (Activation::Tanh, 1.0 / 50.0),
    };
    let epoch_re = if algorithm == Algorithm::Blockwise { 9 } else { 41 };
    Ok(TrainConfig {
        algorithm,
        problem: problem.to_string(),
        arch: NetworkArch::standard_block(activation),
        epoch_re,
        finest_step: step,
        ..TrainConfig::default()
    })
}

pub fn presets() -> Vec<ExperimentPreset> {
    let make = |name, description, problem, algorithm, plain: bool, expected| {
        let mut config = config_for(problem, algorithm).expect("preset problems exist");
        if plain {
            config.arch = NetworkArch::standard_plain(config.arch.activation);
        }
        ExperimentPreset { name, description, config, expected_relative_error: expected }
    };
    use Algorithm::*;
    vec![
        make("bilateral-basic-resnet", "bilateral contact, basic training, plain ResNet", "bilateral", Basic, true, 0.0481),
        make("bilateral-basic-block", "bilateral contact, basic training, block ResNet", "bilateral", Basic, false, 0.0412),
        make("bilateral-blockwise", "bilateral contact, blockwise training", "bilateral", Blockwise, false, 0.0437),
        make("bilateral-multigrid", "bilateral contact, adaptive multigrid training", "bilateral", AdaptiveMultigrid, false, 0.0282),
        make("compliance-basic-resnet", "normal compliance, basic training, plain ResNet", "normal-compliance", Basic, true, 0.0706),
        make("compliance-basic-block", "normal compliance, basic training, block ResNet", "normal-compliance", Basic, false, 0.0556),
        make("compliance-blockwise", "normal compliance, blockwise training", "normal-compliance", Blockwise, false, 0.0558),
        make("compliance-multigrid", "normal compliance, adaptive multigrid training", "normal-compliance", AdaptiveMultigrid, false, 0.0435),
    ]
}

pub fn find_preset(name: &str) -> Result<ExperimentPreset> {
    presets().into_iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = presets().iter().map(|p| p.name).collect();
        anyhow::anyhow!("unknown preset `{name}`; available: {}", names.join(", "))
    })
}

/// Top-level keys of `overrides` replace those of `base`.
fn merge_config(base: &TrainConfig, overrides: &Value) -> Result<TrainConfig> {
    let mut merged = serde_json::to_value(base)?;
    let Value::Object(over) = overrides else { bail!("config file must hold a JSON object") };
    let target = merged.as_object_mut().expect("config serializes to an object");
    for (k, v) in over {
        target.insert(k.clone(), v.clone());
    }
    Ok(serde_json::from_value(merged)?)
}

pub fn config_hash(cfg: &TrainConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    format!("{:x}", Sha256::digest(&bytes))
}

struct Progress {
    every: usize,
    total: usize,
}

impl TrainObserver for Progress {
    fn on_step(&mut self, info: &StepInfo<'_>, _: &[f64], _: &[f64]) {
        if info.epoch % self.every == 0 || info.epoch == self.total {
            let block = info.block.map_or(String::new(), |b| format!(" block {b}"));
            let active = if matches!(info.active, ActiveSet::All) { "all" } else { "partial" };
            eprintln!(
                "epoch {}/{} {:?}{block} ({active}) total {:.6e}",
                info.epoch, self.total, info.phase, info.energy.total
            );
        }
    }
}

#[derive(Debug, Serialize)]
struct RunSummary {
    run: String,
    problem: String,
    algorithm: Algorithm,
    seed: u64,
    config_hash: String,
    total_epochs: usize,
    wall_time_secs: f64,
    final_energy: Option<EnergyBreakdown>,
    final_checkpoint: Option<PathBuf>,
    relative_error: Option<ErrorReport>,
    expected_relative_error: Option<f64>,
}

fn execute(name: &str, cfg: TrainConfig, run: &RunArgs, expected: Option<f64>) -> Result<Value> {
    let cfg = cfg.scaled(run.epochs_scale)?;
    let reference = match &run.reference {
        Some(path) => Some(
            ReferenceSolution::from_csv(path).with_context(|| format!("reading reference {}", path.display()))?,
        ),
        None => None,
    };
    let spec = ProblemSpec::by_name(&cfg.problem)?;
    if let Some(r) = &reference {
        r.validate(&spec)?;
    }
    let dir = run.out.clone().unwrap_or_else(|| run.out_root.join(name));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config.json"), serde_json::to_vec_pretty(&cfg)?)?;

    let objective = EnergyObjective::new(&cfg.arch, &spec)?;
    let output = OutputOptions { dir: dir.clone() };
    let mut progress = Progress { every: 1000.min(cfg.total_epochs().max(1)), total: cfg.total_epochs() };
    let observer: Option<&mut dyn TrainObserver> = if run.quiet { None } else { Some(&mut progress) };
    let (theta, record) = train_with(&cfg, &spec, &objective, observer, Some(&output))?;
    record.write_loss_csv(&dir.join("losses.csv"))?;
    if cfg.algorithm == Algorithm::AdaptiveMultigrid {
        record.write_refinements_csv(&dir.join("refinements.csv"))?;
    }
    let relative_error = match &reference {
        Some(r) => Some(relative_error(&theta, &cfg.arch, &spec, r)?),
        None => None,
    };
    let summary = RunSummary {
        run: name.to_string(),
        problem: cfg.problem.clone(),
        algorithm: cfg.algorithm,
        seed: cfg.seed,
        config_hash: config_hash(&cfg),
        total_epochs: record.epochs.len(),
        wall_time_secs: record.wall_time_secs,
        final_energy: record.final_energy(),
        final_checkpoint: record.final_checkpoint.clone(),
        relative_error,
        expected_relative_error: expected,
    };
    let value = serde_json::to_value(&summary)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&value)?)?;
    Ok(value)
}

fn load_checkpoint_problem(checkpoint: &Path, problem: Option<String>) -> Result<(NetworkArch, crate::network::ParamVector, ProblemSpec)> {
    let (header, theta) =
        read_checkpoint(checkpoint).with_context(|| format!("reading checkpoint {}", checkpoint.display()))?;
    let spec = ProblemSpec::by_name(problem.as_deref().unwrap_or(&header.problem))?;
    Ok((header.arch, theta, spec))
}

/// Executes a parsed command and returns its JSON result.
pub fn run(cli: Cli) -> Result<Value> {
    match cli.command {
        Command::Train(args) => {
            let problem = args.problem.clone().unwrap_or_else(|| "bilateral".into());
            let algorithm = args.algorithm.unwrap_or(Algorithm::AdaptiveMultigrid);
            let mut cfg = config_for(&problem, algorithm)?;
            if let Some(path) = &args.config {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                cfg = merge_config(&cfg, &serde_json::from_str(&text)?)?;
                // explicit flags win over the file
                if let Some(p) = args.problem {
                    cfg.problem = p;
                }
                if let Some(a) = args.algorithm {
                    cfg.algorithm = a;
                }
            }
            if let Some(seed) = args.run.seed {
                cfg.seed = seed;
            }
            let name = format!("{}-{}-seed{}", cfg.problem, serde_json::to_value(cfg.algorithm)?.as_str().unwrap_or("run"), cfg.seed);
            execute(&name, cfg, &args.run, None)
        }
        Command::Eval { checkpoint, reference, problem } => {
            let (arch, theta, spec) = load_checkpoint_problem(&checkpoint, problem)?;
            let reference = ReferenceSolution::from_csv(&reference)
                .with_context(|| format!("reading reference {}", reference.display()))?;
            Ok(serde_json::to_value(relative_error(&theta, &arch, &spec, &reference)?)?)
        }
        Command::Export { checkpoint, resolution, out, problem } => {
            let (arch, theta, spec) = load_checkpoint_problem(&checkpoint, problem)?;
            let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            export_field(&theta, &arch, &spec, resolution, std::io::BufWriter::new(file))?;
            Ok(json!({ "out": out, "resolution": resolution, "contact_segments": spec.contact.len() }))
        }
        Command::Preset { command: PresetCommand::List } => Ok(Value::Array(
            presets()
                .iter()
                .map(|p| {
                    json!({
                        "name": p.name,
                        "description": p.description,
                        "problem": p.config.problem,
                        "algorithm": p.config.algorithm,
                        "total_epochs": p.config.total_epochs(),
                        "expected_relative_error": p.expected_relative_error,
                    })
                })
                .collect(),
        )),
        Command::Preset { command: PresetCommand::Run { name, run } } => {
            let preset = find_preset(&name)?;
            let mut cfg = preset.config.clone();
            if let Some(seed) = run.seed {
                cfg.seed = seed;
            }
            execute(preset.name, cfg, &run, Some(preset.expected_relative_error))
        }
    }
}

/// Parses the process arguments, runs, prints the JSON result and returns
/// the exit code. Failures print `{"error": ...}` and exit nonzero.
pub fn main_with_args(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            println!("{}", json!({ "error": e.to_string().trim(), "kind": "usage" }));
            return 2;
        }
    };
    match run(cli) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).unwrap_or_default());
            0
        }
        Err(e) => {
            println!("{}", json!({ "error": format!("{e:#}"), "kind": "runtime" }));
            1
        }
    }
}
