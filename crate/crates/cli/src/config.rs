use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rotman::estimator::OracleConfig;
use rotman::neuralnet::{TargetSource, TrainConfig};
use rotman::posegen::{Axis, GridSpec};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, CliResult};

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "ROTMAN_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub identities: usize,
    pub landmarks: usize,
    /// Standard deviation of the per-coordinate identity perturbation.
    pub variation: f64,
    /// Share of identities used for decomposition and training.
    pub train_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { identities: 20, landmarks: 30, variation: 0.05, train_fraction: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    /// Explicit `[id, yaw, pitch, roll, feature]` ranks; overrides `rotation_rank`.
    pub ranks: Option<Vec<usize>>,
    /// Rank kept for the three rotation modes; identity and feature modes stay full.
    pub rotation_rank: usize,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self { ranks: None, rotation_rank: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Angle spacing of the tables the heads are trained on, degrees.
    pub fine_step: f64,
    pub max_iterations: usize,
    pub rel_tol: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { fine_step: 0.01, max_iterations: 5000, rel_tol: 1e-10 }
    }
}

/// Optimizer settings of one network; seeds derive from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub standardize: bool,
}

impl Hyper {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            standardize: self.standardize,
            ..TrainConfig::default()
        }
    }
}

impl Default for Hyper {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            epochs: d.epochs,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            standardize: d.standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub encoder: Hyper,
    pub head: Hyper,
    pub targets: TargetSource,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { encoder: Hyper::default(), head: Hyper::default(), targets: TargetSource::Raw }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Random off-grid poses rendered for the held-out identities.
    pub test_poses: usize,
    /// Leading test samples also run through the reconstruction estimator.
    pub oracle_sample: usize,
    /// Minimum number of timed frames.
    pub bench_frames: usize,
    /// Evaluate on this dataset-format file instead of synthetic held-out poses.
    pub external: Option<PathBuf>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { test_poses: 500, oracle_sample: 50, bench_frames: 1000, external: None }
    }
}

/// Artifact file names, relative to `out_dir` unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub out_dir: PathBuf,
    pub dataset: PathBuf,
    pub tensor: PathBuf,
    pub factors: PathBuf,
    pub spectra: PathBuf,
    pub params: PathBuf,
    pub bundle: PathBuf,
    pub losses: PathBuf,
    pub report: PathBuf,
    pub metrics: PathBuf,
    pub intervals: PathBuf,
    pub predictions: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            out_dir: "rotman-out".into(),
            dataset: "dataset.jsonl".into(),
            tensor: "tensor.nlml".into(),
            factors: "factors.nlml".into(),
            spectra: "spectra.tsv".into(),
            params: "params.json".into(),
            bundle: "bundle.json".into(),
            losses: "losses.tsv".into(),
            report: "report.json".into(),
            metrics: "metrics.tsv".into(),
            intervals: "intervals.tsv".into(),
            predictions: "predictions.jsonl".into(),
        }
    }
}

impl Paths {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn all(&self) -> [(&'static str, &PathBuf); 11] {
        [
            ("dataset", &self.dataset),
            ("tensor", &self.tensor),
            ("factors", &self.factors),
            ("spectra", &self.spectra),
            ("params", &self.params),
            ("bundle", &self.bundle),
            ("losses", &self.losses),
            ("report", &self.report),
            ("metrics", &self.metrics),
            ("intervals", &self.intervals),
            ("predictions", &self.predictions),
        ]
    }
}

/// Every knob of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker cap for batch prediction; all cores when absent.
    pub threads: Option<usize>,
    pub data: DataConfig,
    pub grid: GridSpec,
    pub decomposition: DecompositionConfig,
    pub fit: FitSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub oracle: OracleConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            threads: None,
            data: DataConfig::default(),
            grid: GridSpec::default(),
            decomposition: DecompositionConfig::default(),
            fit: FitSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            oracle: OracleConfig::default(),
            paths: Paths::default(),
        }
    }
}

/// Purpose tags mixed into the run seed so independent random streams never coincide.
#[derive(Debug, Clone, Copy)]
pub enum SeedUse {
    Shapes,
    Split,
    EncoderInit,
    EncoderShuffle,
    HeadInit(Axis),
    HeadShuffle(Axis),
    TestPoses,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|source| CliError::Config { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        self.paths.resolve(p)
    }

    pub fn derived_seed(&self, purpose: SeedUse) -> u64 {
        let tag: u64 = match purpose {
            SeedUse::Shapes => 0,
            SeedUse::Split => 1,
            SeedUse::EncoderInit => 2,
            SeedUse::EncoderShuffle => 3,
            SeedUse::HeadInit(a) => 10 + axis_index(a),
            SeedUse::HeadShuffle(a) => 20 + axis_index(a),
            SeedUse::TestPoses => 30,
        };
        if tag == 0 {
            self.seed
        } else {
            self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag)
        }
    }

    /// Decomposition ranks for a tensor with the given dims.
    pub fn ranks(&self, dims: &[usize]) -> Vec<usize> {
        match &self.decomposition.ranks {
            Some(r) => r.clone(),
            None => rotman::multilinear::default_pose_ranks(dims, self.decomposition.rotation_rank),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        self.grid.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        for axis in Axis::ALL {
            let r = self.grid.range(axis);
            if (r.min + r.max).abs() > 1e-9 || r.max <= 0.0 {
                return usage(format!("{axis} range [{}, {}] must be symmetric about 0", r.min, r.max));
            }
        }
        if self.data.identities < 2 {
            return usage("need at least two identities to split".into());
        }
        if self.data.landmarks < 4 {
            return usage("need at least four landmarks".into());
        }
        if !(self.data.variation >= 0.0 && self.data.variation.is_finite()) {
            return usage(format!("identity variation {}", self.data.variation));
        }
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return usage(format!("train fraction {} not in (0, 1)", self.data.train_fraction));
        }
        if let Some(r) = &self.decomposition.ranks {
            if r.len() != 5 || r.contains(&0) {
                return usage(format!("ranks must be five positive integers, got {r:?}"));
            }
        }
        if self.decomposition.rotation_rank == 0 {
            return usage("rotation rank must be positive".into());
        }
        if !(self.fit.fine_step > 0.0 && self.fit.fine_step.is_finite()) {
            return usage(format!("fine step {}", self.fit.fine_step));
        }
        if self.fit.max_iterations == 0 {
            return usage("fit iteration cap must be positive".into());
        }
        for (name, h) in [("encoder", &self.train.encoder), ("head", &self.train.head)] {
            h.train_config(0).validate().map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        }
        if self.threads == Some(0) {
            return usage("threads must be at least 1".into());
        }
        if self.eval.test_poses == 0 && self.eval.external.is_none() {
            return usage("no evaluation samples requested".into());
        }
        let mut seen = BTreeSet::new();
        for (name, p) in self.paths.all() {
            if !seen.insert(self.path(p)) {
                return usage(format!("artifact path for {name} collides with another artifact"));
            }
        }
        Ok(())
    }

    pub fn workers(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
            .max(1)
    }
}

fn axis_index(a: Axis) -> u64 {
    match a {
        Axis::Yaw => 0,
        Axis::Pitch => 1,
        Axis::Roll => 2,
    }
}
