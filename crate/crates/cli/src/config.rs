//! Experiment configuration: a TOML file describing datasets, missing
//! rates, methods, and replicate seeds, plus overridable run parameters.
//!
//! Every parameter has a default, so a minimal config only lists datasets.
//! The fully resolved configuration is serialized back into the report for
//! provenance. `POS2FS_SEED` overrides the top-level seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use pos2fs_core::data::{Dataset, MaskSpec, StreamOrder};
use pos2fs_core::knn::KnnConfig;
use pos2fs_core::pipeline::{ImputeMode, LfaParams, RunConfig, SplitConfig};
use pos2fs_core::rng::derive_seed;
use pos2fs_core::swarm::PsoConfig;
use pos2fs_core::synth::{generate, SynthSpec};
use pos2fs_core::threeway::{CiTestConfig, DecisionThresholds};

use crate::csv::{load_csv, LabelColumn, LoadedDataset};
use crate::harness::Method;
use crate::CliError;

pub const SEED_ENV_VAR: &str = "POS2FS_SEED";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub run: RunOverrides,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("pos2fs_out")
}

fn default_rates() -> Vec<f64> {
    vec![0.1, 0.5, 0.7]
}

fn default_methods() -> Vec<Method> {
    vec![Method::Pos2fsLfa, Method::Pos2fsZero]
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_workers() -> usize {
    1
}

/// One dataset: either a CSV file or a synthetic generator spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub label_column: Option<LabelColumnSpec>,
    #[serde(default)]
    pub synth: Option<SynthTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumnSpec {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthTable {
    pub instances: usize,
    pub informative: usize,
    #[serde(default)]
    pub redundant: usize,
    #[serde(default)]
    pub noise: usize,
    pub classes: usize,
    #[serde(default = "default_noise_level")]
    pub noise_level: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_noise_level() -> f64 {
    0.1
}

impl From<SynthTable> for SynthSpec {
    fn from(t: SynthTable) -> Self {
        SynthSpec {
            instances: t.instances,
            informative: t.informative,
            redundant: t.redundant,
            noise: t.noise,
            classes: t.classes,
            noise_level: t.noise_level,
            seed: t.seed,
        }
    }
}

/// Overridable run parameters, mirroring the pipeline defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOverrides {
    pub block_width: usize,
    /// Release features in a seeded shuffled order instead of column order.
    pub stream_shuffle: bool,
    pub train_fraction: f64,
    pub lfa: LfaOverrides,
    pub pso: PsoOverrides,
    pub thresholds: ThresholdOverrides,
    pub ci: CiOverrides,
    pub knn: KnnOverrides,
    pub cv: CvOverrides,
}

impl Default for RunOverrides {
    fn default() -> Self {
        RunOverrides {
            block_width: 10,
            stream_shuffle: false,
            train_fraction: 0.7,
            lfa: LfaOverrides::default(),
            pso: PsoOverrides::default(),
            thresholds: ThresholdOverrides::default(),
            ci: CiOverrides::default(),
            knn: KnnOverrides::default(),
            cv: CvOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LfaOverrides {
    pub rank: usize,
    pub lambda: f64,
    pub eta: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub init_scale: f64,
    pub warm_start: bool,
}

impl Default for LfaOverrides {
    fn default() -> Self {
        let d = LfaParams::default();
        LfaOverrides {
            rank: d.rank,
            lambda: d.lambda,
            eta: d.eta,
            max_epochs: d.max_epochs,
            tolerance: d.tolerance,
            init_scale: d.init_scale,
            warm_start: d.warm_start,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoOverrides {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub candidate_threshold: f64,
    pub velocity_clamp: f64,
    pub per_dimension_rand: bool,
}

impl Default for PsoOverrides {
    fn default() -> Self {
        let d = PsoConfig::default();
        PsoOverrides {
            particles: d.particle_count,
            iterations: d.iterations,
            inertia: d.inertia,
            cognitive: d.cognitive,
            social: d.social,
            candidate_threshold: d.candidate_threshold,
            velocity_clamp: d.velocity_clamp,
            per_dimension_rand: d.per_dimension_rand,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdOverrides {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ThresholdOverrides {
    fn default() -> Self {
        ThresholdOverrides {
            alpha: 0.9,
            beta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CiOverrides {
    pub significance: f64,
    pub max_conditioning: usize,
}

impl Default for CiOverrides {
    fn default() -> Self {
        let d = CiTestConfig::default();
        CiOverrides {
            significance: d.significance(),
            max_conditioning: d.max_conditioning(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnOverrides {
    pub neighbors: usize,
}

impl Default for KnnOverrides {
    fn default() -> Self {
        KnnOverrides { neighbors: 3 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvOverrides {
    pub folds: usize,
}

impl Default for CvOverrides {
    fn default() -> Self {
        CvOverrides { folds: 3 }
    }
}

/// A dataset loaded (or generated) and ready to run.
#[derive(Debug, Clone)]
pub struct LoadedSource {
    pub name: String,
    pub dataset: Arc<Dataset>,
    pub observed: Option<Arc<Vec<bool>>>,
}

/// The resolved experiment: loaded datasets, the cell list, and the
/// fully resolved config for provenance. A dataset that fails to load does
/// not abort the run; its cells fail individually while the rest complete.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub config: ExperimentConfig,
    pub sources: Vec<Result<LoadedSource, String>>,
    pub cells: Vec<CellSpec>,
}

/// One cell of the experiment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub dataset_index: usize,
    pub dataset: String,
    pub rate: f64,
    pub method: Method,
    pub seed: u64,
}

impl CellSpec {
    pub fn label(&self) -> String {
        format!(
            "{}/rate{}/{}/seed{}",
            self.dataset,
            self.rate,
            self.method.as_str(),
            self.seed
        )
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut config: ExperimentConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Ok(seed_text) = std::env::var(SEED_ENV_VAR) {
        let seed = seed_text.parse::<u64>().map_err(|_| {
            CliError::Config(format!("{SEED_ENV_VAR}='{seed_text}' is not a valid seed"))
        })?;
        config.seed = seed;
    }
    validate_config(&config)?;
    Ok(config)
}

fn validate_config(config: &ExperimentConfig) -> Result<(), CliError> {
    if config.datasets.is_empty() {
        return Err(CliError::Config("datasets: list is empty".into()));
    }
    if config.rates.is_empty() {
        return Err(CliError::Config("rates: list is empty".into()));
    }
    if config.methods.is_empty() {
        return Err(CliError::Config("methods: list is empty".into()));
    }
    if config.seeds.is_empty() {
        return Err(CliError::Config("seeds: list is empty".into()));
    }
    for rate in &config.rates {
        if !(0.0..1.0).contains(rate) {
            return Err(CliError::Config(format!("rates: {rate} outside [0, 1)")));
        }
    }
    if config.workers == 0 {
        return Err(CliError::Config("workers: must be at least 1".into()));
    }
    let mut names: Vec<&str> = config.datasets.iter().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != config.datasets.len() {
        return Err(CliError::Config("datasets: duplicate names".into()));
    }
    for spec in &config.datasets {
        if spec.name.is_empty() || spec.name.contains([',', ';', '\n']) {
            return Err(CliError::Config(format!(
                "datasets: name '{}' must be nonempty without ',', ';' or newlines (it keys the report CSVs)",
                spec.name
            )));
        }
    }
    for spec in &config.datasets {
        match (&spec.path, &spec.synth) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(format!(
                    "datasets.{}: both path and synth given",
                    spec.name
                )))
            }
            (None, None) => {
                return Err(CliError::Config(format!(
                    "datasets.{}: needs either path or synth",
                    spec.name
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Load every dataset and enumerate the cell matrix in a fixed order
/// (dataset, rate, method, seed).
pub fn resolve_plan(
    config: ExperimentConfig,
    config_dir: &Path,
) -> Result<ExperimentPlan, CliError> {
    let mut sources = Vec::with_capacity(config.datasets.len());
    for spec in &config.datasets {
        sources.push(load_source(spec, config_dir).map_err(|e| e.to_string()));
    }
    let mut cells = Vec::new();
    for (dataset_index, spec) in config.datasets.iter().enumerate() {
        for &rate in &config.rates {
            for &method in &config.methods {
                for &seed in &config.seeds {
                    cells.push(CellSpec {
                        dataset_index,
                        dataset: spec.name.clone(),
                        rate,
                        method,
                        seed,
                    });
                }
            }
        }
    }
    Ok(ExperimentPlan {
        config,
        sources,
        cells,
    })
}

fn load_source(spec: &DatasetSpec, config_dir: &Path) -> Result<LoadedSource, CliError> {
    if let Some(synth) = &spec.synth {
        let generated = generate(&(*synth).into()).map_err(|e| CliError::Dataset {
            name: spec.name.clone(),
            message: e.to_string(),
        })?;
        return Ok(LoadedSource {
            name: spec.name.clone(),
            dataset: Arc::new(generated.dataset),
            observed: None,
        });
    }
    let raw_path = spec.path.as_ref().expect("validated");
    let path = if raw_path.is_relative() {
        config_dir.join(raw_path)
    } else {
        raw_path.clone()
    };
    let label_column = match &spec.label_column {
        Some(LabelColumnSpec::Index(i)) => LabelColumn::Index(*i),
        Some(LabelColumnSpec::Name(name)) => LabelColumn::Name(name.clone()),
        None => LabelColumn::Name("label".into()),
    };
    let LoadedDataset { dataset, observed } = load_csv(&path, &label_column)?;
    Ok(LoadedSource {
        name: spec.name.clone(),
        dataset: Arc::new(dataset),
        observed: observed.map(Arc::new),
    })
}

// Seed stream labels for the per-cell generators.
const STREAM_MASK: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_LFA: u64 = 3;
const STREAM_PSO: u64 = 4;
const STREAM_CV: u64 = 5;
const STREAM_SHUFFLE: u64 = 6;

/// Build the core run configuration for one cell.
///
/// All seeds derive from `(top seed, dataset, replicate seed)` and not from
/// the method or the rate, so paired methods see identical masks and splits
/// and all rates of a cell share one train/test partition.
pub fn build_run_config(config: &ExperimentConfig, cell: &CellSpec) -> Result<RunConfig, CliError> {
    let run = &config.run;
    let base = derive_seed(
        derive_seed(config.seed, cell.dataset_index as u64),
        cell.seed,
    );
    let bad = |message: String| CliError::Cell {
        cell: cell.label(),
        message,
    };

    let mask =
        MaskSpec::new(cell.rate, derive_seed(base, STREAM_MASK)).map_err(|e| bad(e.to_string()))?;
    let thresholds = DecisionThresholds::new(run.thresholds.alpha, run.thresholds.beta)
        .map_err(|e| bad(e.to_string()))?;
    let ci = CiTestConfig::new(run.ci.significance, run.ci.max_conditioning)
        .map_err(|e| bad(e.to_string()))?;
    let knn = KnnConfig::new(run.knn.neighbors).map_err(|e| bad(e.to_string()))?;

    Ok(RunConfig {
        block_width: run.block_width,
        stream_order: if run.stream_shuffle {
            StreamOrder::Shuffled(derive_seed(base, STREAM_SHUFFLE))
        } else {
            StreamOrder::InOrder
        },
        mask,
        lfa: LfaParams {
            rank: run.lfa.rank,
            lambda: run.lfa.lambda,
            eta: run.lfa.eta,
            max_epochs: run.lfa.max_epochs,
            tolerance: run.lfa.tolerance,
            init_seed: derive_seed(base, STREAM_LFA),
            init_scale: run.lfa.init_scale,
            warm_start: run.lfa.warm_start,
        },
        pso: PsoConfig {
            particle_count: run.pso.particles,
            iterations: run.pso.iterations,
            inertia: run.pso.inertia,
            cognitive: run.pso.cognitive,
            social: run.pso.social,
            candidate_threshold: run.pso.candidate_threshold,
            velocity_clamp: run.pso.velocity_clamp,
            per_dimension_rand: run.pso.per_dimension_rand,
            seed: derive_seed(base, STREAM_PSO),
        },
        thresholds,
        ci,
        knn,
        cv_folds: run.cv.folds,
        cv_seed: derive_seed(base, STREAM_CV),
        split: SplitConfig {
            train_fraction: run.train_fraction,
            seed: derive_seed(base, STREAM_SPLIT),
        },
        impute: match cell.method {
            Method::Pos2fsLfa => ImputeMode::LatentFactor,
            Method::Pos2fsZero => ImputeMode::ZeroFill,
        },
    })
}

/// The resolved config as TOML, embedded in reports for provenance.
pub fn resolved_config_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).unwrap_or_else(|e| format!("# serialization failed: {e}"))
}
