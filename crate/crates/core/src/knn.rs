//! k-nearest-neighbors classification over a column subset, plus the
//! cross-validated correct-count that drives swarm fitness.
//!
//! Tie rules make prediction a pure function: equal distances break toward
//! the lower row index, equal votes toward the smallest label value.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum KnnError {
    EmptyTrainingSet,
    EmptyTestSet,
    EmptyFeatureMask,
    ZeroNeighbors,
    InvalidFoldCount { folds: usize },
    LabelCountMismatch { rows: usize, labels: usize },
    ColumnOutOfRange { col: usize, cols: usize },
}

impl fmt::Display for KnnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnnError::EmptyTrainingSet => write!(f, "empty training set"),
            KnnError::EmptyTestSet => write!(f, "empty test set"),
            KnnError::EmptyFeatureMask => write!(f, "no feature columns selected"),
            KnnError::ZeroNeighbors => write!(f, "neighbor count must be at least 1"),
            KnnError::InvalidFoldCount { folds } => {
                write!(f, "fold count must be at least 2, got {folds}")
            }
            KnnError::LabelCountMismatch { rows, labels } => {
                write!(f, "{labels} labels for {rows} rows")
            }
            KnnError::ColumnOutOfRange { col, cols } => {
                write!(f, "column {col} out of range for {cols} columns")
            }
        }
    }
}

impl core::error::Error for KnnError {}

/// Neighbor count for the Euclidean-distance classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnConfig {
    k: usize,
}

impl KnnConfig {
    pub fn new(k: usize) -> Result<Self, KnnError> {
        if k == 0 {
            return Err(KnnError::ZeroNeighbors);
        }
        Ok(KnnConfig { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Cross-validation protocol for the fitness correct-count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvProtocol {
    fold_count: usize,
    seed: u64,
    stratified: bool,
}

impl CvProtocol {
    pub fn new(fold_count: usize, seed: u64, stratified: bool) -> Result<Self, KnnError> {
        if fold_count < 2 {
            return Err(KnnError::InvalidFoldCount { folds: fold_count });
        }
        Ok(CvProtocol {
            fold_count,
            seed,
            stratified,
        })
    }

    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same protocol with a different seed (the pipeline re-seeds per
    /// stream step).
    pub fn with_seed(self, seed: u64) -> Self {
        CvProtocol { seed, ..self }
    }
}

/// Result of one cross-validation pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOutcome {
    /// Instances predicted correctly (each instance predicted exactly once).
    pub correct: usize,
    /// Some class had fewer members than folds, so stratification was
    /// best-effort.
    pub fold_warning: bool,
}

#[inline]
fn distance_sq(a: &[f64], b: &[f64], columns: &[usize]) -> f64 {
    let mut acc = 0.0;
    for &c in columns {
        let d = a[c] - b[c];
        acc += d * d;
    }
    acc
}

fn validate_columns(columns: &[usize], cols: usize) -> Result<(), KnnError> {
    if columns.is_empty() {
        return Err(KnnError::EmptyFeatureMask);
    }
    for &c in columns {
        if c >= cols {
            return Err(KnnError::ColumnOutOfRange { col: c, cols });
        }
    }
    Ok(())
}

/// Predict a label for `query` from the training rows listed in
/// `train_indices`, using the columns in `columns` only.
///
/// When `k` exceeds the training-set size every training row votes.
fn predict_from_indices(
    rows: &Matrix,
    labels: &[i64],
    train_indices: &[usize],
    columns: &[usize],
    query: &[f64],
    cfg: &KnnConfig,
) -> i64 {
    let mut distances: Vec<(f64, usize)> = train_indices
        .iter()
        .map(|&i| (distance_sq(rows.row(i), query, columns), i))
        .collect();
    distances.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let k_eff = cfg.k.min(distances.len());
    let mut votes: BTreeMap<i64, usize> = BTreeMap::new();
    for &(_, idx) in &distances[..k_eff] {
        *votes.entry(labels[idx]).or_insert(0) += 1;
    }
    // BTreeMap iterates labels ascending, so the first max wins vote ties
    // with the smallest label value.
    let mut best_label = 0;
    let mut best_count = 0;
    for (&label, &count) in &votes {
        if count > best_count {
            best_label = label;
            best_count = count;
        }
    }
    best_label
}

/// Majority label among the `k` nearest training rows by Euclidean distance
/// over the selected columns.
pub fn knn_predict(
    train: &Matrix,
    labels: &[i64],
    columns: &[usize],
    query: &[f64],
    cfg: &KnnConfig,
) -> Result<i64, KnnError> {
    if train.rows() == 0 {
        return Err(KnnError::EmptyTrainingSet);
    }
    if labels.len() != train.rows() {
        return Err(KnnError::LabelCountMismatch {
            rows: train.rows(),
            labels: labels.len(),
        });
    }
    validate_columns(columns, train.cols())?;
    let all: Vec<usize> = (0..train.rows()).collect();
    Ok(predict_from_indices(
        train, labels, &all, columns, query, cfg,
    ))
}

/// Fold id per row. Stratified dealing keeps class proportions roughly
/// equal across folds; a rotating cursor balances fold sizes.
fn build_folds(labels: &[i64], cv: &CvProtocol) -> (Vec<usize>, bool) {
    let n = labels.len();
    let mut rng = Rng::seeded(cv.seed);
    let mut fold_of = alloc::vec![0usize; n];
    let mut warning = false;

    if cv.stratified {
        let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, &label) in labels.iter().enumerate() {
            by_class.entry(label).or_default().push(i);
        }
        let mut cursor = 0usize;
        for indices in by_class.values() {
            if indices.len() < cv.fold_count {
                warning = true;
            }
            let mut shuffled = indices.clone();
            rng.shuffle(&mut shuffled);
            for idx in shuffled {
                fold_of[idx] = cursor % cv.fold_count;
                cursor += 1;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        for (pos, idx) in order.into_iter().enumerate() {
            fold_of[idx] = pos % cv.fold_count;
        }
    }
    (fold_of, warning)
}

/// Count how many instances are classified correctly when each is predicted
/// from the folds that do not contain it. Deterministic per seed.
pub fn cross_val_correct(
    rows: &Matrix,
    labels: &[i64],
    columns: &[usize],
    knn_cfg: &KnnConfig,
    cv: &CvProtocol,
) -> Result<CvOutcome, KnnError> {
    if rows.rows() == 0 {
        return Err(KnnError::EmptyTrainingSet);
    }
    if labels.len() != rows.rows() {
        return Err(KnnError::LabelCountMismatch {
            rows: rows.rows(),
            labels: labels.len(),
        });
    }
    validate_columns(columns, rows.cols())?;

    let (fold_of, fold_warning) = build_folds(labels, cv);
    let mut correct = 0;
    for fold in 0..cv.fold_count {
        let train_indices: Vec<usize> = (0..rows.rows()).filter(|&i| fold_of[i] != fold).collect();
        if train_indices.is_empty() {
            continue;
        }
        for i in (0..rows.rows()).filter(|&i| fold_of[i] == fold) {
            let predicted =
                predict_from_indices(rows, labels, &train_indices, columns, rows.row(i), knn_cfg);
            if predicted == labels[i] {
                correct += 1;
            }
        }
    }
    Ok(CvOutcome {
        correct,
        fold_warning,
    })
}

/// Fraction of test rows predicted correctly from the training rows, using
/// the selected columns only.
pub fn accuracy(
    train: &Matrix,
    train_labels: &[i64],
    test: &Matrix,
    test_labels: &[i64],
    columns: &[usize],
    cfg: &KnnConfig,
) -> Result<f64, KnnError> {
    if test.rows() == 0 {
        return Err(KnnError::EmptyTestSet);
    }
    if test_labels.len() != test.rows() {
        return Err(KnnError::LabelCountMismatch {
            rows: test.rows(),
            labels: test_labels.len(),
        });
    }
    let mut correct = 0;
    for (i, &expected) in test_labels.iter().enumerate() {
        if knn_predict(train, train_labels, columns, test.row(i), cfg)? == expected {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.rows() as f64)
}
