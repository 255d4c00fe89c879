//! Three-way commitment of block features into the running selected set.
//!
//! The swarm's global-best vector scores each feature of a block. Scores at
//! or above `alpha` are accepted outright (POS), scores at or below `beta`
//! are rejected (NEG), and the band in between (BND) is deferred to a
//! conditional-independence check: a boundary feature enters the selected
//! set only if it stays dependent on the labels given every already
//! selected feature. After each block a redundancy pass removes any feature
//! some small conditioning subset renders independent of the labels.
//!
//! "P(C | F, X) != P(C | X)" is operationalized as a Fisher-Z test on the
//! partial correlation, the same device the streaming-selection literature
//! uses. Labels enter the test numerically: binary classes as a 0/1
//! indicator, multi-class one-vs-rest (dependent if any class test is).

use alloc::vec::Vec;
use core::fmt;

use crate::data::CompletedBlock;
use crate::stats::{critical_value, fisher_z, StatsError};

#[derive(Debug, Clone, PartialEq)]
pub enum CiError {
    InvalidThresholds { alpha: f64, beta: f64 },
    InvalidSignificance { alpha: f64 },
    LabelCountMismatch { expected: usize, got: usize },
    Stats(StatsError),
}

impl fmt::Display for CiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CiError::InvalidThresholds { alpha, beta } => {
                write!(f, "thresholds must satisfy 0 <= beta < alpha <= 1, got alpha={alpha}, beta={beta}")
            }
            CiError::InvalidSignificance { alpha } => {
                write!(f, "significance {alpha} outside (0, 1)")
            }
            CiError::LabelCountMismatch { expected, got } => {
                write!(f, "{got} labels for {expected} rows")
            }
            CiError::Stats(e) => write!(f, "independence test failed: {e}"),
        }
    }
}

impl core::error::Error for CiError {}

impl From<StatsError> for CiError {
    fn from(e: StatsError) -> Self {
        CiError::Stats(e)
    }
}

/// Acceptance/rejection thresholds on the global-best score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionThresholds {
    alpha: f64,
    beta: f64,
}

impl DecisionThresholds {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, CiError> {
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) || beta >= alpha {
            return Err(CiError::InvalidThresholds { alpha, beta });
        }
        Ok(DecisionThresholds { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Disjoint, exhaustive partition of a block's local feature indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    pub pos: Vec<usize>,
    pub bnd: Vec<usize>,
    pub neg: Vec<usize>,
    pub step_index: usize,
}

/// Score `alpha` and above is POS, `beta` and below is NEG, strictly in
/// between is BND.
pub fn partition(
    gbest: &[f64],
    thresholds: &DecisionThresholds,
    step_index: usize,
) -> DecisionOutcome {
    let mut pos = Vec::new();
    let mut bnd = Vec::new();
    let mut neg = Vec::new();
    for (h, &score) in gbest.iter().enumerate() {
        if score >= thresholds.alpha {
            pos.push(h);
        } else if score <= thresholds.beta {
            neg.push(h);
        } else {
            bnd.push(h);
        }
    }
    DecisionOutcome {
        pos,
        bnd,
        neg,
        step_index,
    }
}

/// Fisher-Z test configuration: significance level and the cap on
/// conditioning-subset size during redundancy elimination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiTestConfig {
    significance: f64,
    max_conditioning: usize,
}

impl Default for CiTestConfig {
    fn default() -> Self {
        CiTestConfig {
            significance: 0.05,
            max_conditioning: 3,
        }
    }
}

impl CiTestConfig {
    pub fn new(significance: f64, max_conditioning: usize) -> Result<Self, CiError> {
        if significance.is_nan() || significance <= 0.0 || significance >= 1.0 {
            return Err(CiError::InvalidSignificance {
                alpha: significance,
            });
        }
        Ok(CiTestConfig {
            significance,
            max_conditioning,
        })
    }

    pub fn significance(&self) -> f64 {
        self.significance
    }

    pub fn max_conditioning(&self) -> usize {
        self.max_conditioning
    }
}

/// Outcome of one conditional-dependence decision with diagnostics from the
/// underlying partial correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiOutcome {
    pub dependent: bool,
    /// Conditioning columns were linearly dependent; the projection used
    /// the spanned subspace (pseudo-inverse behavior).
    pub rank_deficient: bool,
    /// A residual carried no variance, forcing the correlation to zero.
    pub degenerate: bool,
}

fn label_targets(labels: &[i64]) -> Vec<Vec<f64>> {
    let mut distinct: Vec<i64> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() <= 2 {
        // Binary (or constant): a single 0/1 indicator carries everything,
        // and any affine relabeling gives the same correlation.
        let target = *distinct.last().unwrap();
        alloc::vec![labels
            .iter()
            .map(|&l| if l == target { 1.0 } else { 0.0 })
            .collect()]
    } else {
        distinct
            .iter()
            .map(|&class| {
                labels
                    .iter()
                    .map(|&l| if l == class { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

/// Is the feature conditionally dependent on the labels given the
/// conditioning columns, at the configured significance?
pub fn is_conditionally_dependent(
    feature: &[f64],
    labels: &[i64],
    conditioning: &[&[f64]],
    cfg: &CiTestConfig,
) -> Result<CiOutcome, CiError> {
    if labels.len() != feature.len() {
        return Err(CiError::LabelCountMismatch {
            expected: feature.len(),
            got: labels.len(),
        });
    }
    let crit = critical_value(cfg.significance);
    let mut outcome = CiOutcome {
        dependent: false,
        rank_deficient: false,
        degenerate: false,
    };
    for target in label_targets(labels) {
        let z = fisher_z(feature, &target, conditioning)?;
        outcome.rank_deficient |= z.rank_deficient;
        outcome.degenerate |= z.degenerate;
        if libm::fabs(z.statistic) > crit {
            outcome.dependent = true;
        }
    }
    Ok(outcome)
}

/// The running selected feature subset: ordered (by admission) pairs of
/// global feature id and column data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectedFeatureSet {
    entries: Vec<(usize, Vec<f64>)>,
}

impl SelectedFeatureSet {
    pub fn new() -> Self {
        SelectedFeatureSet::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.entries.iter().map(|(id, _)| *id).collect()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.entries.iter().any(|(fid, _)| *fid == id)
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.iter().map(|(_, col)| col.as_slice())
    }

    /// Append a feature. Panics on a duplicate id or a column length
    /// mismatch; both indicate a pipeline bug, not bad input.
    pub fn push(&mut self, id: usize, column: Vec<f64>) {
        assert!(!self.contains(id), "duplicate feature id {id}");
        if let Some((_, first)) = self.entries.first() {
            assert_eq!(first.len(), column.len(), "column length mismatch");
        }
        self.entries.push((id, column));
    }

    fn remove_at(&mut self, index: usize) -> (usize, Vec<f64>) {
        self.entries.remove(index)
    }
}

/// Should a boundary feature enter the selected set? Vacuously yes when the
/// set is empty; otherwise it must stay dependent on the labels given every
/// already selected feature as a singleton conditioning set.
pub fn admit_boundary(
    feature: &[f64],
    selected: &SelectedFeatureSet,
    labels: &[i64],
    cfg: &CiTestConfig,
) -> Result<bool, CiError> {
    for column in selected.columns() {
        let outcome = is_conditionally_dependent(feature, labels, &[column], cfg)?;
        if !outcome.dependent {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Visit all `size`-element index combinations of `0..n` in lexicographic
/// order; stop early when the visitor returns `true`.
fn visit_combinations<E>(
    n: usize,
    size: usize,
    visit: &mut dyn FnMut(&[usize]) -> Result<bool, E>,
) -> Result<bool, E> {
    if size > n {
        return Ok(false);
    }
    let mut indices: Vec<usize> = (0..size).collect();
    loop {
        if visit(&indices)? {
            return Ok(true);
        }
        // Advance to the next combination.
        let mut i = size;
        loop {
            if i == 0 {
                return Ok(false);
            }
            i -= 1;
            if indices[i] != i + n - size {
                break;
            }
            if i == 0 {
                return Ok(false);
            }
        }
        indices[i] += 1;
        for j in i + 1..size {
            indices[j] = indices[j - 1] + 1;
        }
    }
}

/// Remove features that some conditioning subset of the other selected
/// features renders independent of the labels.
///
/// Candidates are visited in reverse admission order; subsets are searched
/// smallest-first (the empty set tests marginal dependence) up to the
/// configured cap, and a redundant feature is removed immediately so later
/// decisions see the reduced set. Returns the removed ids in removal order.
pub fn eliminate_redundant(
    selected: &mut SelectedFeatureSet,
    labels: &[i64],
    cfg: &CiTestConfig,
) -> Result<Vec<usize>, CiError> {
    let mut removed = Vec::new();
    let mut candidate = selected.len();
    while candidate > 0 {
        candidate -= 1;
        let feature = selected.entries[candidate].1.clone();
        let others: Vec<&[f64]> = selected
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != candidate)
            .map(|(_, (_, col))| col.as_slice())
            .collect();

        let mut redundant = false;
        let max_size = cfg.max_conditioning.min(others.len());
        'sizes: for size in 0..=max_size {
            let found = visit_combinations(others.len(), size, &mut |combo: &[usize]| {
                let conditioning: Vec<&[f64]> = combo.iter().map(|&i| others[i]).collect();
                let outcome = is_conditionally_dependent(&feature, labels, &conditioning, cfg)?;
                Ok::<bool, CiError>(!outcome.dependent)
            })?;
            if found {
                redundant = true;
                break 'sizes;
            }
        }
        if redundant {
            let (id, _) = selected.remove_at(candidate);
            removed.push(id);
        }
    }
    Ok(removed)
}

/// What happened to each feature while integrating one block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockIntegration {
    /// Local indices appended from the POS region.
    pub pos_added: Vec<usize>,
    /// Boundary indices that passed the dependence check.
    pub bnd_admitted: Vec<usize>,
    /// Boundary indices that failed it.
    pub bnd_rejected: Vec<usize>,
    /// Global feature ids removed by the redundancy pass (may include
    /// features admitted in earlier blocks).
    pub eliminated: Vec<usize>,
}

/// Commit one block: POS features append unconditionally, BND features pass
/// through `admit_boundary`, NEG features drop, then one redundancy pass
/// runs over the updated set.
pub fn integrate_block(
    outcome: &DecisionOutcome,
    block: &CompletedBlock,
    selected: &mut SelectedFeatureSet,
    labels: &[i64],
    cfg: &CiTestConfig,
) -> Result<BlockIntegration, CiError> {
    if labels.len() != block.values().rows() {
        return Err(CiError::LabelCountMismatch {
            expected: block.values().rows(),
            got: labels.len(),
        });
    }
    let mut integration = BlockIntegration::default();
    for &h in &outcome.pos {
        selected.push(block.global_ids()[h], block.column(h));
        integration.pos_added.push(h);
    }
    for &h in &outcome.bnd {
        let column = block.column(h);
        if admit_boundary(&column, selected, labels, cfg)? {
            selected.push(block.global_ids()[h], column);
            integration.bnd_admitted.push(h);
        } else {
            integration.bnd_rejected.push(h);
        }
    }
    integration.eliminated = eliminate_redundant(selected, labels, cfg)?;
    Ok(integration)
}
