//! Datasets, missing-entry masks, and feature streams.
//!
//! A [`Dataset`] is a dense, fully finite feature matrix with one integer
//! class label per row. Masking hides entries at a configured rate (with a
//! repair pass so no column loses every observation), and
//! [`make_stream`] releases the columns of a [`MaskedDataset`] in blocks of
//! `H` features, which is the unit the rest of the pipeline consumes.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    LabelCountMismatch { rows: usize, labels: usize },
    TooFewInstances { rows: usize },
    SingleClassLabels,
    NonFiniteValue { row: usize, col: usize },
    InvalidMissingRate { rate: f64 },
    ZeroBlockWidth,
    EmptyColumn { col: usize },
    ObservedMaskLength { expected: usize, got: usize },
    DuplicateEntry { row: usize, col: usize },
    EntryOutOfRange { row: usize, col: usize },
    InvalidSynthSpec(&'static str),
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::LabelCountMismatch { rows, labels } => {
                write!(f, "{labels} labels for {rows} rows")
            }
            DataError::TooFewInstances { rows } => {
                write!(f, "need at least 2 instances, got {rows}")
            }
            DataError::SingleClassLabels => write!(f, "labels contain a single class"),
            DataError::NonFiniteValue { row, col } => {
                write!(f, "non-finite value at row {row}, column {col}")
            }
            DataError::InvalidMissingRate { rate } => {
                write!(f, "missing rate {rate} outside [0, 1)")
            }
            DataError::ZeroBlockWidth => write!(f, "block width must be at least 1"),
            DataError::EmptyColumn { col } => {
                write!(f, "column {col} has no observed entries")
            }
            DataError::ObservedMaskLength { expected, got } => {
                write!(f, "observed mask has {got} flags, expected {expected}")
            }
            DataError::DuplicateEntry { row, col } => {
                write!(f, "duplicate block entry at ({row}, {col})")
            }
            DataError::EntryOutOfRange { row, col } => {
                write!(f, "block entry ({row}, {col}) out of range")
            }
            DataError::InvalidSynthSpec(msg) => write!(f, "invalid generator spec: {msg}"),
        }
    }
}

impl core::error::Error for DataError {}

/// Dense labelled dataset. Rows are instances, columns are features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Matrix,
    labels: Vec<i64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        values: Matrix,
        labels: Vec<i64>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self, DataError> {
        if labels.len() != values.rows() {
            return Err(DataError::LabelCountMismatch {
                rows: values.rows(),
                labels: labels.len(),
            });
        }
        if values.rows() < 2 {
            return Err(DataError::TooFewInstances {
                rows: values.rows(),
            });
        }
        if labels.windows(2).all(|w| w[0] == w[1]) {
            return Err(DataError::SingleClassLabels);
        }
        for r in 0..values.rows() {
            for c in 0..values.cols() {
                if !values.get(r, c).is_finite() {
                    return Err(DataError::NonFiniteValue { row: r, col: c });
                }
            }
        }
        if let Some(names) = &feature_names {
            assert_eq!(names.len(), values.cols(), "one name per feature column");
        }
        Ok(Dataset {
            values,
            labels,
            feature_names,
        })
    }

    pub fn instance_count(&self) -> usize {
        self.values.rows()
    }

    pub fn feature_count(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Hide entries independently with probability `spec.missing_rate`,
    /// then repair any fully-masked column by re-observing one uniformly
    /// chosen entry. Deterministic for a fixed seed.
    pub fn apply_mask(&self, spec: &MaskSpec) -> MaskedDataset {
        let observed = vec![true; self.values.rows() * self.values.cols()];
        mask_entries(self, observed, spec)
    }

    /// All entries observed (missing rate zero equivalent).
    pub fn fully_observed(&self) -> MaskedDataset {
        MaskedDataset {
            dataset: self.clone(),
            observed: vec![true; self.values.rows() * self.values.cols()],
        }
    }
}

/// Masking parameters: entry-hiding probability and generator seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    missing_rate: f64,
    seed: u64,
}

impl MaskSpec {
    pub fn new(missing_rate: f64, seed: u64) -> Result<Self, DataError> {
        if !(0.0..1.0).contains(&missing_rate) {
            return Err(DataError::InvalidMissingRate { rate: missing_rate });
        }
        Ok(MaskSpec { missing_rate, seed })
    }

    pub fn missing_rate(&self) -> f64 {
        self.missing_rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

fn mask_entries(dataset: &Dataset, mut observed: Vec<bool>, spec: &MaskSpec) -> MaskedDataset {
    let rows = dataset.values.rows();
    let cols = dataset.values.cols();
    let mut rng = Rng::seeded(spec.seed);
    if spec.missing_rate > 0.0 {
        for flag in observed.iter_mut() {
            // Draw for every entry so the stream is independent of the
            // pre-existing mask shape.
            let hide = rng.next_f64() < spec.missing_rate;
            if hide {
                *flag = false;
            }
        }
    }
    // Repair: every column must keep at least one observation, otherwise
    // the factor model has nothing to fit for it.
    for c in 0..cols {
        if (0..rows).any(|r| observed[r * cols + c]) {
            continue;
        }
        let r = rng.index(rows);
        observed[r * cols + c] = true;
    }
    MaskedDataset {
        dataset: dataset.clone(),
        observed,
    }
}

/// A dataset plus a per-entry observed/missing flag.
///
/// Values at missing positions are retained internally (they back oracle
/// tests and repair) but are never released into a stream block.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedDataset {
    dataset: Dataset,
    observed: Vec<bool>,
}

impl MaskedDataset {
    /// Wrap a dataset with an explicit observed mask (row-major), e.g. from
    /// a file that already contained missing cells. Every column must keep
    /// at least one observation.
    pub fn from_observed(dataset: Dataset, observed: Vec<bool>) -> Result<Self, DataError> {
        let expected = dataset.values.rows() * dataset.values.cols();
        if observed.len() != expected {
            return Err(DataError::ObservedMaskLength {
                expected,
                got: observed.len(),
            });
        }
        let cols = dataset.values.cols();
        for c in 0..cols {
            if !(0..dataset.values.rows()).any(|r| observed[r * cols + c]) {
                return Err(DataError::EmptyColumn { col: c });
            }
        }
        Ok(MaskedDataset { dataset, observed })
    }

    /// Hide additional entries on top of the current mask. The repair pass
    /// only re-observes entries that were observed before this call.
    pub fn apply_additional_mask(&self, spec: &MaskSpec) -> MaskedDataset {
        let rows = self.dataset.values.rows();
        let cols = self.dataset.values.cols();
        let mut rng = Rng::seeded(spec.seed);
        let mut observed = self.observed.clone();
        if spec.missing_rate > 0.0 {
            for flag in observed.iter_mut() {
                let hide = rng.next_f64() < spec.missing_rate;
                if hide {
                    *flag = false;
                }
            }
        }
        for c in 0..cols {
            if (0..rows).any(|r| observed[r * cols + c]) {
                continue;
            }
            let candidates: Vec<usize> =
                (0..rows).filter(|&r| self.observed[r * cols + c]).collect();
            if candidates.is_empty() {
                // Column was already empty in the base mask; nothing to
                // restore. from_observed rejects this, so unreachable from
                // public constructors.
                continue;
            }
            let r = candidates[rng.index(candidates.len())];
            observed[r * cols + c] = true;
        }
        MaskedDataset {
            dataset: self.dataset.clone(),
            observed,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn labels(&self) -> &[i64] {
        &self.dataset.labels
    }

    pub fn instance_count(&self) -> usize {
        self.dataset.values.rows()
    }

    pub fn feature_count(&self) -> usize {
        self.dataset.values.cols()
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[row * self.dataset.values.cols() + col]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn missing_count(&self) -> usize {
        self.observed.len() - self.observed_count()
    }
}

/// Order in which feature columns enter the stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamOrder {
    /// Dataset column order (the reproducible default).
    InOrder,
    /// Seeded shuffle of the column order, for sensitivity studies.
    Shuffled(u64),
}

/// The `H` feature columns arriving at one stream step, sparse: only
/// observed entries are present.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFeatureBlock {
    step_index: usize,
    row_count: usize,
    block_width: usize,
    global_ids: Vec<usize>,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseFeatureBlock {
    /// `entries` are `(row, local column, value)` triples; every pair must
    /// be unique, in range, and every local column must appear at least
    /// once.
    pub fn new(
        step_index: usize,
        row_count: usize,
        global_ids: Vec<usize>,
        entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self, DataError> {
        let block_width = global_ids.len();
        if block_width == 0 {
            return Err(DataError::ZeroBlockWidth);
        }
        let mut column_seen = vec![false; block_width];
        let mut entry_seen = vec![false; row_count * block_width];
        for &(n, j, _) in &entries {
            if n >= row_count || j >= block_width {
                return Err(DataError::EntryOutOfRange { row: n, col: j });
            }
            let slot = n * block_width + j;
            if entry_seen[slot] {
                return Err(DataError::DuplicateEntry { row: n, col: j });
            }
            entry_seen[slot] = true;
            column_seen[j] = true;
        }
        if let Some(col) = column_seen.iter().position(|&seen| !seen) {
            return Err(DataError::EmptyColumn { col });
        }
        Ok(SparseFeatureBlock {
            step_index,
            row_count,
            block_width,
            global_ids,
            entries,
        })
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn block_width(&self) -> usize {
        self.block_width
    }

    /// Dataset-level feature id of each local column.
    pub fn global_ids(&self) -> &[usize] {
        &self.global_ids
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }
}

/// Whether a completed-block entry was observed in the stream or imputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Observed,
    Imputed,
}

/// A block with every entry filled in; observed entries carry their
/// original values exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedBlock {
    step_index: usize,
    values: Matrix,
    provenance: Vec<Provenance>,
    global_ids: Vec<usize>,
}

impl CompletedBlock {
    pub(crate) fn from_parts(
        step_index: usize,
        values: Matrix,
        provenance: Vec<Provenance>,
        global_ids: Vec<usize>,
    ) -> Self {
        assert_eq!(values.rows() * values.cols(), provenance.len());
        assert_eq!(values.cols(), global_ids.len());
        CompletedBlock {
            step_index,
            values,
            provenance,
            global_ids,
        }
    }

    /// Complete a block by writing 0.0 into every missing entry — the
    /// treatment the comparison baseline applies instead of factor
    /// imputation.
    pub fn zero_filled(block: &SparseFeatureBlock) -> Self {
        let mut values = Matrix::zeros(block.row_count, block.block_width);
        let mut provenance = vec![Provenance::Imputed; block.row_count * block.block_width];
        for &(n, j, v) in &block.entries {
            values.set(n, j, v);
            provenance[n * block.block_width + j] = Provenance::Observed;
        }
        CompletedBlock {
            step_index: block.step_index,
            values,
            provenance,
            global_ids: block.global_ids.clone(),
        }
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn provenance(&self, row: usize, col: usize) -> Provenance {
        self.provenance[row * self.values.cols() + col]
    }

    pub fn global_ids(&self) -> &[usize] {
        &self.global_ids
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.values.column(col)
    }
}

/// Release the masked dataset's columns as a sequence of sparse blocks of
/// `block_width` features; the final block may be narrower.
pub fn make_stream(
    masked: &MaskedDataset,
    block_width: usize,
    order: StreamOrder,
) -> Result<Vec<SparseFeatureBlock>, DataError> {
    if block_width == 0 {
        return Err(DataError::ZeroBlockWidth);
    }
    let rows = masked.instance_count();
    let cols = masked.feature_count();
    let mut column_order: Vec<usize> = (0..cols).collect();
    if let StreamOrder::Shuffled(seed) = order {
        Rng::seeded(seed).shuffle(&mut column_order);
    }

    let mut blocks = Vec::new();
    for (step_index, chunk) in column_order.chunks(block_width).enumerate() {
        let mut entries = Vec::new();
        for (local, &global) in chunk.iter().enumerate() {
            for row in 0..rows {
                if masked.is_observed(row, global) {
                    entries.push((row, local, masked.dataset.values.get(row, global)));
                }
            }
        }
        blocks.push(SparseFeatureBlock::new(
            step_index,
            rows,
            chunk.to_vec(),
            entries,
        )?);
    }
    Ok(blocks)
}

/// Min-max normalize each column to [0, 1] over its observed entries.
///
/// `observed` is a row-major flag vector; pass `None` when every entry is
/// present. Constant columns map to 0.5. Values at missing positions are
/// rescaled with the same parameters so later un-masking stays consistent.
pub fn normalize_columns(values: &mut Matrix, observed: Option<&[bool]>) {
    let rows = values.rows();
    let cols = values.cols();
    for c in 0..cols {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..rows {
            if observed.is_none_or(|m| m[r * cols + c]) {
                let v = values.get(r, c);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            // No observed entries; leave the column alone.
            continue;
        }
        let span = hi - lo;
        for r in 0..rows {
            let v = values.get(r, c);
            let scaled = if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.5
            };
            values.set(r, c, scaled);
        }
    }
}
