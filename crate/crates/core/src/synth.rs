//! Synthetic dataset generation with planted ground truth.
//!
//! Informative features carry class-dependent means, redundant features are
//! noisy affine images of informative ones (so the redundancy pass has
//! something real to find), and noise features are uniform. Column order is
//! shuffled so the informative set does not concentrate in the first stream
//! block; the returned id lists describe the post-shuffle layout.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{DataError, Dataset};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub instances: usize,
    pub informative: usize,
    pub redundant: usize,
    pub noise: usize,
    pub classes: usize,
    /// Standard deviation of the Gaussian jitter on informative features.
    pub noise_level: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.classes < 2 {
            return Err(DataError::InvalidSynthSpec("need at least 2 classes"));
        }
        if self.instances < 2 * self.classes {
            return Err(DataError::InvalidSynthSpec(
                "need at least 2 instances per class",
            ));
        }
        if self.informative == 0 {
            return Err(DataError::InvalidSynthSpec(
                "need at least 1 informative feature",
            ));
        }
        if self.redundant > 0 && self.informative == 0 {
            return Err(DataError::InvalidSynthSpec(
                "redundant features need informative sources",
            ));
        }
        if self.noise_level < 0.0 || !self.noise_level.is_finite() {
            return Err(DataError::InvalidSynthSpec("noise level must be >= 0"));
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.informative + self.redundant + self.noise
    }
}

/// A generated dataset plus its planted ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub dataset: Dataset,
    /// Column ids of informative features after the column shuffle.
    pub informative_ids: Vec<usize>,
    /// `(redundant column id, informative source column id)` pairs.
    pub redundant_ids: Vec<(usize, usize)>,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthDataset, DataError> {
    spec.validate()?;
    let mut rng = Rng::seeded(spec.seed);
    let n = spec.instances;
    let total = spec.feature_count();

    // Balanced labels, shuffled so classes interleave.
    let mut labels: Vec<i64> = (0..n).map(|i| (i % spec.classes) as i64).collect();
    rng.shuffle(&mut labels);

    // Class centers per informative feature: evenly spaced in [0.15, 0.85],
    // with a per-feature permutation of which class sits where.
    let span = 0.7;
    let base = 0.15;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(total);
    for _ in 0..spec.informative {
        let mut class_order: Vec<usize> = (0..spec.classes).collect();
        rng.shuffle(&mut class_order);
        let centers: Vec<f64> = (0..spec.classes)
            .map(|c| base + span * class_order[c] as f64 / (spec.classes - 1).max(1) as f64)
            .collect();
        let column = labels
            .iter()
            .map(|&l| (centers[l as usize] + spec.noise_level * rng.normal()).clamp(0.0, 1.0))
            .collect();
        columns.push(column);
    }
    // Redundant features: flipped or shrunk affine images with small jitter.
    let jitter = (0.25 * spec.noise_level).max(0.01);
    let mut redundant_sources = Vec::with_capacity(spec.redundant);
    for r in 0..spec.redundant {
        let source = r % spec.informative;
        redundant_sources.push(source);
        let flip = rng.next_bool();
        let column = columns[source]
            .iter()
            .map(|&v| {
                let mapped = if flip { 1.0 - v } else { 0.8 * v + 0.1 };
                (mapped + jitter * rng.normal()).clamp(0.0, 1.0)
            })
            .collect();
        columns.push(column);
    }
    for _ in 0..spec.noise {
        columns.push((0..n).map(|_| rng.next_f64()).collect());
    }

    // Shuffle column order; destination[j] = where original column j lands.
    let mut destination: Vec<usize> = (0..total).collect();
    rng.shuffle(&mut destination);
    let mut values = Matrix::zeros(n, total);
    for (original, &dest) in destination.iter().enumerate() {
        for (row, &v) in columns[original].iter().enumerate() {
            values.set(row, dest, v);
        }
    }

    let informative_ids: Vec<usize> = (0..spec.informative).map(|j| destination[j]).collect();
    let redundant_ids: Vec<(usize, usize)> = redundant_sources
        .iter()
        .enumerate()
        .map(|(r, &source)| (destination[spec.informative + r], destination[source]))
        .collect();

    let names: Vec<String> = (0..total).map(|j| format!("f{j}")).collect();
    let dataset = Dataset::new(values, labels, Some(names))?;
    Ok(SynthDataset {
        dataset,
        informative_ids,
        redundant_ids,
    })
}
