//! End-to-end selection runs: split, mask, stream, impute, search, commit,
//! evaluate.
//!
//! Masking applies to the training rows only; the held-out test rows stay
//! fully observed and are first read by the final evaluation. That final
//! classifier trains on the completed training matrix exactly as the method
//! produced it — factor-imputed or zero-filled — so reported accuracy
//! reflects completion quality as well as subset quality, mirroring how the
//! comparison baselines are treated. [`evaluate_final`] is the standalone
//! clean-data variant. All per-step generators derive from the configured
//! seeds, so a run is a pure function of `(dataset, config)`.

use alloc::vec::Vec;
use core::fmt;

use crate::data::{
    make_stream, CompletedBlock, DataError, Dataset, MaskSpec, MaskedDataset, StreamOrder,
};
use crate::knn::{self, CvProtocol, KnnConfig, KnnError};
use crate::lfa::{self, LatentFactorModel, LfaError, LfaTrainConfig};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, Rng};
use crate::swarm::{self, FitnessContext, PsoConfig, SwarmError};
use crate::threeway::{
    integrate_block, partition, CiError, CiTestConfig, DecisionThresholds, SelectedFeatureSet,
};

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    Data(DataError),
    Lfa(LfaError),
    Swarm(SwarmError),
    Ci(CiError),
    Knn(KnnError),
    InvalidTrainFraction { fraction: f64 },
    DegenerateSplit,
    EmptyTestSet,
    InvalidFeatureId { id: usize, features: usize },
    ObservedMaskLength { expected: usize, got: usize },
    EmptyTrainColumn { col: usize },
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Data(e) => write!(f, "data error: {e}"),
            PipelineError::Lfa(e) => write!(f, "imputation error: {e}"),
            PipelineError::Swarm(e) => write!(f, "swarm error: {e}"),
            PipelineError::Ci(e) => write!(f, "selection error: {e}"),
            PipelineError::Knn(e) => write!(f, "classifier error: {e}"),
            PipelineError::InvalidTrainFraction { fraction } => {
                write!(f, "train fraction {fraction} outside (0, 1)")
            }
            PipelineError::DegenerateSplit => {
                write!(f, "train split has fewer than 2 classes or rows")
            }
            PipelineError::EmptyTestSet => write!(f, "test split is empty"),
            PipelineError::InvalidFeatureId { id, features } => {
                write!(f, "feature id {id} out of range for {features} features")
            }
            PipelineError::ObservedMaskLength { expected, got } => {
                write!(f, "observed mask has {got} flags, expected {expected}")
            }
            PipelineError::EmptyTrainColumn { col } => {
                write!(
                    f,
                    "column {col} has no observed entries in the training rows"
                )
            }
        }
    }
}

impl core::error::Error for PipelineError {}

impl From<DataError> for PipelineError {
    fn from(e: DataError) -> Self {
        PipelineError::Data(e)
    }
}
impl From<LfaError> for PipelineError {
    fn from(e: LfaError) -> Self {
        PipelineError::Lfa(e)
    }
}
impl From<SwarmError> for PipelineError {
    fn from(e: SwarmError) -> Self {
        PipelineError::Swarm(e)
    }
}
impl From<CiError> for PipelineError {
    fn from(e: CiError) -> Self {
        PipelineError::Ci(e)
    }
}
impl From<KnnError> for PipelineError {
    fn from(e: KnnError) -> Self {
        PipelineError::Knn(e)
    }
}

/// How to complete missing block entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputeMode {
    /// Train a latent factor model per block.
    LatentFactor,
    /// Write zeros, the baseline treatment.
    ZeroFill,
}

/// Stratified train/test split parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Latent-factor hyperparameters and the per-block training rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfaParams {
    pub rank: usize,
    pub lambda: f64,
    pub eta: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub init_seed: u64,
    pub init_scale: f64,
    /// Carry the instance factors over from the previous block instead of
    /// re-seeding them.
    pub warm_start: bool,
}

impl Default for LfaParams {
    fn default() -> Self {
        LfaParams {
            rank: 8,
            lambda: 0.05,
            eta: 0.01,
            max_epochs: 500,
            tolerance: 1e-4,
            init_seed: 0,
            init_scale: 0.25,
            warm_start: false,
        }
    }
}

/// Full configuration of one selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub block_width: usize,
    pub stream_order: StreamOrder,
    pub mask: MaskSpec,
    pub lfa: LfaParams,
    pub pso: PsoConfig,
    pub thresholds: DecisionThresholds,
    pub ci: CiTestConfig,
    pub knn: KnnConfig,
    pub cv_folds: usize,
    pub cv_seed: u64,
    pub split: SplitConfig,
    pub impute: ImputeMode,
}

impl RunConfig {
    fn validate(&self) -> Result<(), PipelineError> {
        if self.block_width == 0 {
            return Err(PipelineError::Data(DataError::ZeroBlockWidth));
        }
        self.pso.validate()?;
        let fraction = self.split.train_fraction;
        if fraction.is_nan() || fraction <= 0.0 || fraction >= 1.0 {
            return Err(PipelineError::InvalidTrainFraction {
                fraction: self.split.train_fraction,
            });
        }
        CvProtocol::new(self.cv_folds, 0, true)?;
        let lfa_cfg = LfaTrainConfig {
            max_epochs: self.lfa.max_epochs,
            tolerance: self.lfa.tolerance,
            init_seed: self.lfa.init_seed,
            init_scale: self.lfa.init_scale,
        };
        lfa_cfg.validate()?;
        Ok(())
    }
}

/// Region a feature landed in, for the per-step decision log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Pos,
    Bnd,
    Neg,
    /// Admitted in an earlier block, revisited by the redundancy pass.
    Prior,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Pos => "pos",
            Region::Bnd => "bnd",
            Region::Neg => "neg",
            Region::Prior => "prior",
        }
    }
}

/// One row of the decision log.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDecision {
    pub feature_id: usize,
    pub region: Region,
    pub admitted: bool,
    pub eliminated: bool,
}

/// Diagnostics for one stream step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub step_index: usize,
    pub gbest_fitness: f64,
    /// Per-iteration global-best fitness from the swarm run.
    pub swarm_trace: Vec<f64>,
    /// Per-epoch mean loss from imputation training (empty for zero-fill).
    pub lfa_loss_trace: Vec<f64>,
    pub decisions: Vec<FeatureDecision>,
}

/// Outcome of a full selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Final selected feature ids, in admission order.
    pub selected_ids: Vec<usize>,
    pub selected_count: usize,
    /// Test accuracy over the selected features.
    pub accuracy: f64,
    /// The selection came up empty and accuracy fell back to
    /// majority-class prediction.
    pub degenerate_evaluation: bool,
    /// Some cross-validation fold could not hold every class.
    pub fold_warning: bool,
    pub steps: Vec<StepTrace>,
}

/// Deterministic stratified split: per class (ascending label order),
/// shuffle and cut at the train fraction, keeping at least one row per
/// class in the training side.
pub fn stratified_split(labels: &[i64], split: &SplitConfig) -> (Vec<usize>, Vec<usize>) {
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = Rng::seeded(split.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in classes {
        let mut indices: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut indices);
        let len = indices.len();
        let want = libm::floor(split.train_fraction * len as f64 + 0.5) as usize;
        let take = want.clamp(1, if len > 1 { len - 1 } else { 1 });
        train.extend_from_slice(&indices[..take]);
        test.extend_from_slice(&indices[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn derive(seed: u64, step: usize) -> u64 {
    derive_seed(seed, step as u64 + 1)
}

/// Run the full selection over a dataset.
///
/// `file_observed` marks entries already missing in the source data
/// (row-major over the whole dataset); pass `None` for fully observed
/// input. Synthetic masking composes on top of it for the training rows.
pub fn run_selection(
    dataset: &Dataset,
    file_observed: Option<&[bool]>,
    cfg: &RunConfig,
) -> Result<SelectionResult, PipelineError> {
    cfg.validate()?;
    let total_entries = dataset.instance_count() * dataset.feature_count();
    if let Some(mask) = file_observed {
        if mask.len() != total_entries {
            return Err(PipelineError::ObservedMaskLength {
                expected: total_entries,
                got: mask.len(),
            });
        }
    }

    let (train_idx, test_idx) = stratified_split(dataset.labels(), &cfg.split);
    if train_idx.len() < 2 {
        return Err(PipelineError::DegenerateSplit);
    }
    if test_idx.is_empty() {
        return Err(PipelineError::EmptyTestSet);
    }
    let train_labels: Vec<i64> = train_idx.iter().map(|&i| dataset.labels()[i]).collect();
    {
        let mut distinct = train_labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(PipelineError::DegenerateSplit);
        }
    }
    let train_values = dataset.values().select_rows(&train_idx);
    let train_dataset = Dataset::new(train_values, train_labels.clone(), None)?;

    // Compose the file's own missingness (train rows only) with the
    // synthetic mask.
    let cols = dataset.feature_count();
    let base = match file_observed {
        Some(mask) => {
            let mut train_observed = Vec::with_capacity(train_idx.len() * cols);
            for &row in &train_idx {
                train_observed.extend_from_slice(&mask[row * cols..(row + 1) * cols]);
            }
            MaskedDataset::from_observed(train_dataset, train_observed).map_err(|e| match e {
                DataError::EmptyColumn { col } => PipelineError::EmptyTrainColumn { col },
                other => PipelineError::Data(other),
            })?
        }
        None => train_dataset.fully_observed(),
    };
    let masked = base.apply_additional_mask(&cfg.mask);

    let stream = make_stream(&masked, cfg.block_width, cfg.stream_order)?;

    let mut selected = SelectedFeatureSet::new();
    let mut steps = Vec::with_capacity(stream.len());
    let mut warm_factors: Option<Matrix> = None;
    // Training matrix as the method completed it, reassembled in dataset
    // column order; the final classifier trains on this.
    let mut completed_train = Matrix::zeros(train_idx.len(), cols);
    // Stratification is best-effort when a class has fewer members than
    // folds; that depends only on the train labels, so compute it once.
    let fold_warning = {
        let mut counts: alloc::collections::BTreeMap<i64, usize> =
            alloc::collections::BTreeMap::new();
        for &l in &train_labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts.values().any(|&c| c < cfg.cv_folds)
    };

    for block in &stream {
        let t = block.step_index();
        let (completed, lfa_loss_trace) = match cfg.impute {
            ImputeMode::ZeroFill => (CompletedBlock::zero_filled(block), Vec::new()),
            ImputeMode::LatentFactor => {
                let block_seed = derive(cfg.lfa.init_seed, t);
                let mut model = match (&warm_factors, cfg.lfa.warm_start) {
                    (Some(p), true) => {
                        let fresh = lfa::init_factors(
                            block.row_count(),
                            block.block_width(),
                            cfg.lfa.rank,
                            block_seed,
                            cfg.lfa.init_scale,
                            cfg.lfa.lambda,
                            cfg.lfa.eta,
                        )?;
                        LatentFactorModel::from_parts(
                            p.clone(),
                            fresh.feature_factors().clone(),
                            cfg.lfa.lambda,
                            cfg.lfa.eta,
                        )?
                    }
                    _ => lfa::init_factors(
                        block.row_count(),
                        block.block_width(),
                        cfg.lfa.rank,
                        block_seed,
                        cfg.lfa.init_scale,
                        cfg.lfa.lambda,
                        cfg.lfa.eta,
                    )?,
                };
                let train_cfg = LfaTrainConfig {
                    max_epochs: cfg.lfa.max_epochs,
                    tolerance: cfg.lfa.tolerance,
                    init_seed: block_seed,
                    init_scale: cfg.lfa.init_scale,
                };
                let trace = lfa::train(&mut model, block, &train_cfg)?;
                let completed = lfa::reconstruct(&model, block);
                warm_factors = Some(model.instance_factors().clone());
                (completed, trace)
            }
        };

        let cv = CvProtocol::new(cfg.cv_folds, derive(cfg.cv_seed, t), true)?;
        let ctx = FitnessContext::new(completed.values(), &train_labels, cfg.knn, cv)?;
        let eval = swarm::optimize(
            &ctx,
            block.block_width(),
            &cfg.pso.with_seed(derive(cfg.pso.seed, t)),
        )?;

        for (local, &global) in completed.global_ids().iter().enumerate() {
            for row in 0..completed.values().rows() {
                completed_train.set(row, global, completed.values().get(row, local));
            }
        }

        let outcome = partition(&eval.gbest, &cfg.thresholds, t);
        let prior_ids = selected.ids();
        let integration =
            integrate_block(&outcome, &completed, &mut selected, &train_labels, &cfg.ci)?;

        let mut decisions = Vec::with_capacity(block.block_width());
        for h in 0..block.block_width() {
            let feature_id = block.global_ids()[h];
            let region = if outcome.pos.contains(&h) {
                Region::Pos
            } else if outcome.bnd.contains(&h) {
                Region::Bnd
            } else {
                Region::Neg
            };
            let admitted =
                integration.pos_added.contains(&h) || integration.bnd_admitted.contains(&h);
            let eliminated = integration.eliminated.contains(&feature_id);
            decisions.push(FeatureDecision {
                feature_id,
                region,
                admitted,
                eliminated,
            });
        }
        for &gone in &integration.eliminated {
            if prior_ids.contains(&gone) {
                decisions.push(FeatureDecision {
                    feature_id: gone,
                    region: Region::Prior,
                    admitted: true,
                    eliminated: true,
                });
            }
        }

        steps.push(StepTrace {
            step_index: t,
            gbest_fitness: eval.gbest_fitness,
            swarm_trace: eval.trace,
            lfa_loss_trace,
            decisions,
        });
    }

    let selected_ids = selected.ids();
    let test_labels: Vec<i64> = test_idx.iter().map(|&i| dataset.labels()[i]).collect();
    let final_eval = if selected_ids.is_empty() {
        FinalEvaluation {
            accuracy: majority_class_accuracy(&train_labels, &test_labels),
            degenerate: true,
        }
    } else {
        let test_values = dataset.values().select_rows(&test_idx);
        let accuracy = knn::accuracy(
            &completed_train,
            &train_labels,
            &test_values,
            &test_labels,
            &selected_ids,
            &cfg.knn,
        )?;
        FinalEvaluation {
            accuracy,
            degenerate: false,
        }
    };
    Ok(SelectionResult {
        selected_count: selected.len(),
        selected_ids,
        accuracy: final_eval.accuracy,
        degenerate_evaluation: final_eval.degenerate,
        fold_warning,
        steps,
    })
}

/// Fraction of test labels equal to the training majority class (smallest
/// label wins ties).
fn majority_class_accuracy(train_labels: &[i64], test_labels: &[i64]) -> f64 {
    let mut counts: alloc::collections::BTreeMap<i64, usize> = alloc::collections::BTreeMap::new();
    for &l in train_labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut majority = 0;
    let mut best = 0;
    for (&label, &count) in &counts {
        if count > best {
            majority = label;
            best = count;
        }
    }
    let correct = test_labels.iter().filter(|&&l| l == majority).count();
    correct as f64 / test_labels.len() as f64
}

/// Final evaluation outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalEvaluation {
    pub accuracy: f64,
    /// Empty selection: accuracy is majority-class prediction.
    pub degenerate: bool,
}

/// Split the dataset with the run's seed and score the selected columns by
/// k-NN accuracy on the held-out rows. An empty selection falls back to
/// predicting the training majority class, flagged degenerate.
pub fn evaluate_final(
    dataset: &Dataset,
    selected_ids: &[usize],
    split: &SplitConfig,
    knn_cfg: &KnnConfig,
) -> Result<FinalEvaluation, PipelineError> {
    for &id in selected_ids {
        if id >= dataset.feature_count() {
            return Err(PipelineError::InvalidFeatureId {
                id,
                features: dataset.feature_count(),
            });
        }
    }
    let (train_idx, test_idx) = stratified_split(dataset.labels(), split);
    if test_idx.is_empty() {
        return Err(PipelineError::EmptyTestSet);
    }
    let train_labels: Vec<i64> = train_idx.iter().map(|&i| dataset.labels()[i]).collect();
    let test_labels: Vec<i64> = test_idx.iter().map(|&i| dataset.labels()[i]).collect();

    if selected_ids.is_empty() {
        return Ok(FinalEvaluation {
            accuracy: majority_class_accuracy(&train_labels, &test_labels),
            degenerate: true,
        });
    }

    let train = dataset.values().select_rows(&train_idx);
    let test = dataset.values().select_rows(&test_idx);
    let accuracy = knn::accuracy(
        &train,
        &train_labels,
        &test,
        &test_labels,
        selected_ids,
        knn_cfg,
    )?;
    Ok(FinalEvaluation {
        accuracy,
        degenerate: false,
    })
}
