//! Basic, blockwise and adaptive multigrid training loops.

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::GradVector;
use crate::checkpoint::{write_checkpoint, CheckpointError, CheckpointHeader};
use crate::loss::{energy_and_gradient, energy_value, EnergyBreakdown, LossError, NetworkField};
use crate::network::{init_params, Activation, BlockId, Layout, NetworkArch, NetworkError, ParamVector};
use crate::optimizer::{adam_step, ActiveSet, AdamConfig, AdamState, OptimizerError};
use crate::problems::ProblemSpec;
use crate::sampling::{build_grid, sample_from_grid, sample_uniform, BatchSizes, GridLevel, SampleBatch, SamplingError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("level losses contain NaN: {0:?}")]
    NanLevelLoss(Vec<f64>),
    #[error("non-finite energy at epoch {epoch}: {energy:?}")]
    NonFinite { epoch: usize, energy: EnergyBreakdown, record: Box<RunRecord> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Basic,
    Blockwise,
    #[serde(alias = "multigrid")]
    AdaptiveMultigrid,
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "basic" => Ok(Algorithm::Basic),
            "blockwise" => Ok(Algorithm::Blockwise),
            "multigrid" | "adaptive_multigrid" | "adaptive-multigrid" => Ok(Algorithm::AdaptiveMultigrid),
            other => Err(format!("unknown algorithm `{other}` (expected basic, blockwise or multigrid)")),
        }
    }
}

/// Training configuration. Every field has a default so a JSON config only
/// needs to list overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub problem: String,
    pub arch: NetworkArch,
    /// Epoch budget of the basic algorithm.
    pub epochs: usize,
    pub epoch_int: usize,
    pub epoch_re: usize,
    pub epoch_b: usize,
    /// Hard limit on total epochs for blockwise training.
    pub total_cap: Option<usize>,
    /// Finest lattice step `H`.
    pub finest_step: f64,
    pub sizes: BatchSizes,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Checkpoint cadence in epochs (0 disables periodic checkpoints).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::AdaptiveMultigrid,
            problem: "bilateral".into(),
            arch: NetworkArch::standard_block(Activation::Tanh),
            epochs: 50_000,
            epoch_int: 9000,
            epoch_re: 41,
            epoch_b: 1000,
            total_cap: Some(50_000),
            finest_step: 1.0 / 50.0,
            sizes: BatchSizes::default(),
            seed: 0,
            adam: AdamConfig::default(),
            checkpoint_every: 1000,
        }
    }
}

fn scale_up(n: usize, factor: f64) -> usize {
    (n as f64 * factor).ceil() as usize
}

impl TrainConfig {
    /// Shrinks (or grows) every epoch budget by `factor`, rounding up. The
    /// sweep count `epoch_re` is kept so phase proportions are preserved.
    pub fn scaled(&self, factor: f64) -> Result<Self, TrainError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(TrainError::Config(format!("epoch scale {factor} must be positive")));
        }
        let mut c = self.clone();
        c.epochs = scale_up(self.epochs, factor);
        c.epoch_int = scale_up(self.epoch_int, factor);
        c.epoch_b = scale_up(self.epoch_b, factor);
        c.total_cap = self.total_cap.map(|n| scale_up(n, factor));
        Ok(c)
    }

    /// Number of optimizer steps the configuration performs.
    pub fn total_epochs(&self) -> usize {
        let p = self.arch.blocks();
        match self.algorithm {
            Algorithm::Basic => self.epochs,
            Algorithm::Blockwise => {
                let full = self.epoch_int + self.epoch_re * p * self.epoch_b;
                self.total_cap.map_or(full, |cap| full.min(cap.max(self.epoch_int)))
            }
            Algorithm::AdaptiveMultigrid => self.epoch_int + self.epoch_re * self.epoch_b,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        self.arch.validate()?;
        if self.algorithm != Algorithm::Basic && !self.arch.is_block() {
            return Err(TrainError::Config(format!("{:?} training needs a block ResNet", self.algorithm)));
        }
        if self.algorithm == Algorithm::AdaptiveMultigrid && !(self.finest_step > 0.0) {
            return Err(TrainError::Config("finest_step must be positive".into()));
        }
        if self.sizes.domain == 0 {
            return Err(TrainError::Config("domain batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Source of energies and gradients for a parameter vector.
pub trait Objective: Sync {
    fn param_len(&self) -> usize;
    fn energy_and_gradient(&self, theta: &[f64], batch: &SampleBatch) -> Result<(EnergyBreakdown, GradVector), TrainError>;
    fn energy(&self, theta: &[f64], batch: &SampleBatch) -> Result<EnergyBreakdown, TrainError>;
}

/// The stochastic energy of a masked network on a problem.
pub struct EnergyObjective<'a> {
    pub field: NetworkField,
    pub spec: &'a ProblemSpec,
}

impl<'a> EnergyObjective<'a> {
    pub fn new(arch: &NetworkArch, spec: &'a ProblemSpec) -> Result<Self, TrainError> {
        Ok(Self { field: NetworkField::new(arch.clone(), spec.mask)?, spec })
    }
}

impl Objective for EnergyObjective<'_> {
    fn param_len(&self) -> usize {
        self.field.param_len()
    }

    fn energy_and_gradient(&self, theta: &[f64], batch: &SampleBatch) -> Result<(EnergyBreakdown, GradVector), TrainError> {
        Ok(energy_and_gradient(&self.field, theta, self.spec, batch)?)
    }

    fn energy(&self, theta: &[f64], batch: &SampleBatch) -> Result<EnergyBreakdown, TrainError> {
        Ok(energy_value(&self.field, theta, self.spec, batch)?)
    }
}

/// 1-based index of the smallest loss; ties go to the lowest index.
pub fn select_level(losses: &[f64]) -> Result<usize, TrainError> {
    if losses.is_empty() {
        return Err(TrainError::Config("no levels to select from".into()));
    }
    if losses.iter().any(|v| v.is_nan()) {
        return Err(TrainError::NanLevelLoss(losses.to_vec()));
    }
    let mut best = 0;
    for (i, &v) in losses.iter().enumerate() {
        if v < losses[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initialization,
    Refinement,
}

/// One optimizer step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub phase: Phase,
    /// 1-based parallel block being refined.
    pub block: Option<usize>,
    pub energy: EnergyBreakdown,
}

/// One adaptive level choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// 1-based sweep index.
    pub sweep: usize,
    /// Epoch count when the choice was made.
    pub epoch: usize,
    pub chosen: usize,
    pub level_losses: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub epochs: Vec<EpochLog>,
    pub refinements: Vec<Refinement>,
    pub checkpoints: Vec<PathBuf>,
    pub final_checkpoint: Option<PathBuf>,
    pub wall_time_secs: f64,
}

impl RunRecord {
    pub fn final_energy(&self) -> Option<EnergyBreakdown> {
        self.epochs.last().map(|e| e.energy)
    }

    pub fn write_loss_csv(&self, path: &Path) -> Result<(), TrainError> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["epoch", "bulk", "traction", "potential", "total"]).map_err(csv_err)?;
        for e in &self.epochs {
            let row = [e.epoch as f64, e.energy.bulk, e.energy.traction, e.energy.potential, e.energy.total];
            w.write_record(row.iter().enumerate().map(|(i, v)| if i == 0 { e.epoch.to_string() } else { v.to_string() }))
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_refinements_csv(&self, path: &Path) -> Result<(), TrainError> {
        let mut f = fs::File::create(path)?;
        writeln!(f, "sweep,epoch,chosen,level_losses")?;
        for r in &self.refinements {
            let losses: Vec<String> = r.level_losses.iter().map(f64::to_string).collect();
            writeln!(f, "{},{},{},{}", r.sweep, r.epoch, r.chosen, losses.join(";"))?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> TrainError {
    TrainError::Io(std::io::Error::other(e))
}

/// What a training step touched, passed to observers.
#[derive(Clone, Debug)]
pub struct StepInfo<'a> {
    pub epoch: usize,
    pub phase: Phase,
    pub block: Option<usize>,
    pub active: &'a ActiveSet,
    pub energy: EnergyBreakdown,
}

/// Hook invoked after every optimizer step with the parameters before and
/// after the update.
pub trait TrainObserver {
    fn on_step(&mut self, info: &StepInfo<'_>, before: &[f64], after: &[f64]);
}

/// Where and how often to write checkpoints.
#[derive(Clone, Debug)]
pub struct OutputOptions {
    pub dir: PathBuf,
}

struct Session<'a, O: Objective + ?Sized> {
    cfg: &'a TrainConfig,
    spec: &'a ProblemSpec,
    objective: &'a O,
    layout: Layout,
    theta: Vec<f64>,
    adam: AdamState,
    rng: ChaCha8Rng,
    record: RunRecord,
    observer: Option<&'a mut dyn TrainObserver>,
    output: Option<&'a OutputOptions>,
    epoch: usize,
}

impl<'a, O: Objective + ?Sized> Session<'a, O> {
    fn new(
        cfg: &'a TrainConfig,
        spec: &'a ProblemSpec,
        objective: &'a O,
        observer: Option<&'a mut dyn TrainObserver>,
        output: Option<&'a OutputOptions>,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        let layout = Layout::of(&cfg.arch)?;
        let theta = init_params(&cfg.arch, cfg.seed)?.0;
        if objective.param_len() != theta.len() {
            return Err(TrainError::Config(format!(
                "objective expects {} parameters, architecture has {}",
                objective.param_len(),
                theta.len()
            )));
        }
        // a separate stream keeps sampling independent of initialization
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        if let Some(out) = output {
            fs::create_dir_all(out.dir.join("checkpoints"))?;
        }
        Ok(Self {
            adam: AdamState::new(theta.len(), cfg.adam),
            cfg,
            spec,
            objective,
            layout,
            theta,
            rng,
            record: RunRecord { seed: cfg.seed, ..RunRecord::default() },
            observer,
            output,
            epoch: 0,
        })
    }

    /// Input block plus the 1-based parallel block `p`.
    fn block_active(&self, p: usize) -> Result<ActiveSet, TrainError> {
        let input = self.layout.block_range(BlockId::Input);
        let block = self.layout.block_range(BlockId::Parallel(p - 1));
        match (input, block) {
            (Some(a), Some(b)) => Ok(ActiveSet::Ranges(vec![a, b])),
            _ => Err(TrainError::Config(format!("architecture has no parallel block {p}"))),
        }
    }

    fn step(&mut self, batch: &SampleBatch, active: &ActiveSet, phase: Phase, block: Option<usize>) -> Result<(), TrainError> {
        let (energy, grad) = self.objective.energy_and_gradient(&self.theta, batch)?;
        if !energy.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(TrainError::NonFinite {
                epoch: self.epoch + 1,
                energy,
                record: Box::new(self.record.clone()),
            });
        }
        let before = self.observer.as_ref().map(|_| self.theta.clone());
        adam_step(&mut self.adam, &mut self.theta, &grad, active)?;
        self.epoch += 1;
        self.record.epochs.push(EpochLog { epoch: self.epoch, phase, block, energy });
        if let (Some(obs), Some(before)) = (self.observer.as_mut(), before) {
            let info = StepInfo { epoch: self.epoch, phase, block, active, energy };
            obs.on_step(&info, &before, &self.theta);
        }
        if self.cfg.checkpoint_every > 0 && self.epoch % self.cfg.checkpoint_every == 0 {
            self.checkpoint()?;
        }
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<(), TrainError> {
        let Some(out) = self.output else { return Ok(()) };
        let path = out.dir.join("checkpoints").join(format!("epoch-{:06}.ckpt", self.epoch));
        if self.record.checkpoints.last() == Some(&path) {
            return Ok(());
        }
        write_checkpoint(&path, &self.header(), &ParamVector(self.theta.clone()))?;
        self.record.checkpoints.push(path);
        Ok(())
    }

    fn header(&self) -> CheckpointHeader {
        CheckpointHeader { arch: self.cfg.arch.clone(), problem: self.cfg.problem.clone(), epoch: self.epoch }
    }

    fn uniform_batch(&mut self) -> Result<SampleBatch, TrainError> {
        Ok(sample_uniform(self.spec, self.cfg.sizes, &mut self.rng)?)
    }

    fn initialization(&mut self, epochs: usize) -> Result<(), TrainError> {
        for _ in 0..epochs {
            let batch = self.uniform_batch()?;
            self.step(&batch, &ActiveSet::All, Phase::Initialization, None)?;
        }
        Ok(())
    }

    fn finish(mut self, start: Instant) -> Result<(ParamVector, RunRecord), TrainError> {
        if let Some(out) = self.output {
            let path = out.dir.join("final.ckpt");
            write_checkpoint(&path, &self.header(), &ParamVector(self.theta.clone()))?;
            self.record.final_checkpoint = Some(path);
        }
        self.record.wall_time_secs = start.elapsed().as_secs_f64();
        Ok((ParamVector(self.theta), self.record))
    }

    fn run_basic(mut self) -> Result<(ParamVector, RunRecord), TrainError> {
        let start = Instant::now();
        self.initialization(self.cfg.epochs)?;
        self.finish(start)
    }

    fn run_blockwise(mut self) -> Result<(ParamVector, RunRecord), TrainError> {
        let start = Instant::now();
        let cfg = self.cfg;
        self.initialization(cfg.epoch_int)?;
        self.checkpoint()?;
        let cap = cfg.total_epochs();
        'sweeps: for _ in 0..cfg.epoch_re {
            for p in 1..=cfg.arch.blocks() {
                let active = self.block_active(p)?;
                for _ in 0..cfg.epoch_b {
                    if self.epoch >= cap {
                        break 'sweeps;
                    }
                    let batch = self.uniform_batch()?;
                    self.step(&batch, &active, Phase::Refinement, Some(p))?;
                }
            }
        }
        self.finish(start)
    }

    fn run_multigrid(mut self) -> Result<(ParamVector, RunRecord), TrainError> {
        let start = Instant::now();
        let cfg = self.cfg;
        let levels = cfg.arch.blocks();
        let grids: Vec<GridLevel> = (1..=levels)
            .map(|p| build_grid(self.spec, p, cfg.finest_step, levels))
            .collect::<Result<_, _>>()?;
        self.initialization(cfg.epoch_int)?;
        self.checkpoint()?;
        for sweep in 1..=cfg.epoch_re {
            let mut losses = Vec::with_capacity(levels);
            for grid in &grids {
                let batch = sample_from_grid(grid, self.spec, cfg.sizes, &mut self.rng)?;
                losses.push(self.objective.energy(&self.theta, &batch)?.total);
            }
            let chosen = select_level(&losses)?;
            self.record.refinements.push(Refinement { sweep, epoch: self.epoch, chosen, level_losses: losses });
            let active = self.block_active(chosen)?;
            for _ in 0..cfg.epoch_b {
                let batch = sample_from_grid(&grids[chosen - 1], self.spec, cfg.sizes, &mut self.rng)?;
                self.step(&batch, &active, Phase::Refinement, Some(chosen))?;
            }
        }
        self.finish(start)
    }
}

/// Runs the configured algorithm against an arbitrary objective.
pub fn train_with<'a, O: Objective + ?Sized>(
    cfg: &'a TrainConfig,
    spec: &'a ProblemSpec,
    objective: &'a O,
    observer: Option<&'a mut dyn TrainObserver>,
    output: Option<&'a OutputOptions>,
) -> Result<(ParamVector, RunRecord), TrainError> {
    let session = Session::new(cfg, spec, objective, observer, output)?;
    match cfg.algorithm {
        Algorithm::Basic => session.run_basic(),
        Algorithm::Blockwise => session.run_blockwise(),
        Algorithm::AdaptiveMultigrid => session.run_multigrid(),
    }
}

/// Trains the masked network of `cfg.arch` on `spec` with the stochastic
/// energy as objective.
pub fn train(cfg: &TrainConfig, spec: &ProblemSpec, output: Option<&OutputOptions>) -> Result<(ParamVector, RunRecord), TrainError> {
    let objective = EnergyObjective::new(&cfg.arch, spec)?;
    train_with(cfg, spec, &objective, None, output)
}

fn with_algorithm(cfg: &TrainConfig, algorithm: Algorithm) -> Result<TrainConfig, TrainError> {
    if cfg.algorithm != algorithm {
        return Err(TrainError::Config(format!("configuration selects {:?}, not {algorithm:?}", cfg.algorithm)));
    }
    Ok(cfg.clone())
}

pub fn train_basic(cfg: &TrainConfig, spec: &ProblemSpec) -> Result<(ParamVector, RunRecord), TrainError> {
    train(&with_algorithm(cfg, Algorithm::Basic)?, spec, None)
}

pub fn train_blockwise(cfg: &TrainConfig, spec: &ProblemSpec) -> Result<(ParamVector, RunRecord), TrainError> {
    train(&with_algorithm(cfg, Algorithm::Blockwise)?, spec, None)
}

pub fn train_adaptive_multigrid(cfg: &TrainConfig, spec: &ProblemSpec) -> Result<(ParamVector, RunRecord), TrainError> {
    train(&with_algorithm(cfg, Algorithm::AdaptiveMultigrid)?, spec, None)
}

/// Contiguous index ranges not covered by `active`.
pub fn inactive_ranges(active: &ActiveSet, len: usize) -> Vec<Range<usize>> {
    let ActiveSet::Ranges(ranges) = active else { return Vec::new() };
    let mut sorted = ranges.clone();
    sorted.sort_by_key(|r| r.start);
    let mut out = Vec::new();
    let mut cursor = 0;
    for r in sorted {
        if r.start > cursor {
            out.push(cursor..r.start);
        }
        cursor = cursor.max(r.end);
    }
    if cursor < len {
        out.push(cursor..len);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::normal_compliance;

    /// Quadratic pull towards zero with energies chosen per lattice level.
    struct Stub {
        len: usize,
        level_energy: fn(usize) -> f64,
    }

    impl Objective for Stub {
        fn param_len(&self) -> usize {
            self.len
        }
        fn energy_and_gradient(&self, theta: &[f64], batch: &SampleBatch) -> Result<(EnergyBreakdown, GradVector), TrainError> {
            Ok((self.energy(theta, batch)?, GradVector(theta.to_vec())))
        }
        fn energy(&self, _: &[f64], batch: &SampleBatch) -> Result<EnergyBreakdown, TrainError> {
            Ok(EnergyBreakdown::new(batch.level.map_or(0.0, self.level_energy), 0.0, 0.0))
        }
    }

    fn tiny_block() -> NetworkArch {
        NetworkArch::block((1, 3), 3, (1, 2), Activation::Tanh)
    }

    fn stub_config(algorithm: Algorithm) -> TrainConfig {
        TrainConfig {
            algorithm,
            arch: tiny_block(),
            epochs: 7,
            epoch_int: 3,
            epoch_re: 2,
            epoch_b: 4,
            total_cap: Some(20),
            finest_step: 1.0 / 20.0,
            sizes: BatchSizes { domain: 8, traction: 2, contact: 2 },
            problem: "normal-compliance".into(),
            checkpoint_every: 0,
            ..TrainConfig::default()
        }
    }

    fn run_stub(cfg: &TrainConfig, level_energy: fn(usize) -> f64) -> RunRecord {
        let spec = normal_compliance();
        let stub = Stub { len: Layout::of(&cfg.arch).unwrap().len(), level_energy };
        train_with(cfg, &spec, &stub, None, None).unwrap().1
    }

    #[test]
    fn select_level_argmin_and_ties() {
        assert_eq!(select_level(&[5.0, 5.0, 5.0]).unwrap(), 1);
        assert_eq!(select_level(&[0.2, 0.1, 0.3]).unwrap(), 2);
        assert_eq!(select_level(&[3.0, 1.0, 2.0]).unwrap(), 2);
        assert_eq!(select_level(&[7.0]).unwrap(), 1);
        assert!(matches!(select_level(&[1.0, f64::NAN]), Err(TrainError::NanLevelLoss(_))));
        assert!(select_level(&[]).is_err());
    }

    #[test]
    fn epoch_totals() {
        for (alg, expected) in [(Algorithm::Basic, 7), (Algorithm::Blockwise, 20), (Algorithm::AdaptiveMultigrid, 11)] {
            let cfg = stub_config(alg);
            assert_eq!(cfg.total_epochs(), expected);
            assert_eq!(run_stub(&cfg, |p| p as f64).epochs.len(), expected);
        }
    }

    #[test]
    fn blockwise_without_cap_runs_full_sweeps() {
        let mut cfg = stub_config(Algorithm::Blockwise);
        cfg.total_cap = None;
        let rec = run_stub(&cfg, |_| 0.0);
        assert_eq!(rec.epochs.len(), 3 + 2 * 3 * 4);
        let blocks: Vec<Option<usize>> = rec.epochs.iter().map(|e| e.block).collect();
        assert_eq!(&blocks[3..7], &[Some(1); 4]);
        assert_eq!(&blocks[7..11], &[Some(2); 4]);
    }

    #[test]
    fn multigrid_follows_the_smallest_level_loss() {
        let cfg = stub_config(Algorithm::AdaptiveMultigrid);
        let rec = run_stub(&cfg, |p| p as f64);
        assert!(rec.refinements.iter().all(|r| r.chosen == 1));
        let rec = run_stub(&cfg, |p| [3.0, 1.0, 2.0][p - 1]);
        assert!(rec.refinements.iter().all(|r| r.chosen == 2));
        assert_eq!(rec.refinements[0].level_losses, vec![3.0, 1.0, 2.0]);
        assert!(rec.epochs[3..].iter().all(|e| e.block == Some(2)));
    }

    #[test]
    fn zero_epochs_return_the_initialization() {
        let mut cfg = stub_config(Algorithm::Basic);
        cfg.epochs = 0;
        let spec = normal_compliance();
        let stub = Stub { len: Layout::of(&cfg.arch).unwrap().len(), level_energy: |_| 0.0 };
        let (theta, rec) = train_with(&cfg, &spec, &stub, None, None).unwrap();
        assert_eq!(theta, init_params(&cfg.arch, cfg.seed).unwrap());
        assert!(rec.epochs.is_empty());
    }

    #[test]
    fn scaling_rounds_up_and_keeps_sweeps() {
        let c = TrainConfig::default().scaled(0.01).unwrap();
        assert_eq!((c.epochs, c.epoch_int, c.epoch_re, c.epoch_b, c.total_cap), (500, 90, 41, 10, Some(500)));
        assert_eq!(c.total_epochs(), 500);
        let b = TrainConfig { algorithm: Algorithm::Blockwise, epoch_re: 9, ..TrainConfig::default() };
        assert_eq!(b.total_epochs(), 50_000);
        assert!(TrainConfig::default().scaled(0.0).is_err());
    }

    #[test]
    fn block_algorithms_reject_plain_networks() {
        let cfg = TrainConfig { arch: NetworkArch::plain(1, 2, Activation::Tanh), ..stub_config(Algorithm::Blockwise) };
        assert!(matches!(cfg.validate(), Err(TrainError::Config(_))));
    }

    #[test]
    fn inactive_complement() {
        let a = ActiveSet::Ranges(vec![5..8, 0..2]);
        assert_eq!(inactive_ranges(&a, 10), vec![2..5, 8..10]);
        assert!(inactive_ranges(&ActiveSet::All, 10).is_empty());
    }

    #[test]
    fn algorithm_names_parse() {
        assert_eq!("multigrid".parse::<Algorithm>().unwrap(), Algorithm::AdaptiveMultigrid);
        assert!("sgd".parse::<Algorithm>().is_err());
        let cfg: TrainConfig = serde_json::from_str(r#"{"algorithm":"multigrid","epochs":3}"#).unwrap();
        assert_eq!((cfg.algorithm, cfg.epochs, cfg.epoch_int), (Algorithm::AdaptiveMultigrid, 3, 9000));
    }
}
