//! Particle swarm search over binary feature subsets of a completed block.
//!
//! Particles move in `[0, 1]^H`; a position decodes to a candidate subset
//! by thresholding each component, and fitness is one minus the
//! cross-validated correct-count scaled by `N * H`, so lower is better and
//! every value lies in `[1 - 1/H, 1]`. Personal and global bests only move
//! on strict improvement, which makes the global-best trace non-increasing.

use alloc::vec::Vec;
use core::fmt;

use crate::knn::{cross_val_correct, CvProtocol, KnnConfig, KnnError};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum SwarmError {
    TooFewParticles { count: usize },
    ZeroIterations,
    InvalidThreshold { rho: f64 },
    InvalidVelocityClamp { v_max: f64 },
    LabelCountMismatch { rows: usize, labels: usize },
    Fitness(KnnError),
}

impl fmt::Display for SwarmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwarmError::TooFewParticles { count } => {
                write!(f, "need at least 2 particles, got {count}")
            }
            SwarmError::ZeroIterations => write!(f, "iteration count must be at least 1"),
            SwarmError::InvalidThreshold { rho } => {
                write!(f, "selection threshold {rho} outside (0, 1)")
            }
            SwarmError::InvalidVelocityClamp { v_max } => {
                write!(f, "velocity clamp {v_max} must be positive")
            }
            SwarmError::LabelCountMismatch { rows, labels } => {
                write!(f, "{labels} labels for {rows} rows")
            }
            SwarmError::Fitness(e) => write!(f, "fitness evaluation failed: {e}"),
        }
    }
}

impl core::error::Error for SwarmError {}

impl From<KnnError> for SwarmError {
    fn from(e: KnnError) -> Self {
        SwarmError::Fitness(e)
    }
}

/// Swarm parameters. Positions live in `[0, 1]`, velocities are clamped to
/// `[-velocity_clamp, velocity_clamp]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoConfig {
    pub particle_count: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Position components strictly above this threshold mark their feature
    /// as a temporary candidate.
    pub candidate_threshold: f64,
    pub velocity_clamp: f64,
    /// Draw the two acceleration coefficients per dimension instead of per
    /// particle.
    pub per_dimension_rand: bool,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            particle_count: 30,
            iterations: 50,
            inertia: 1.0,
            cognitive: 2.0,
            social: 2.0,
            candidate_threshold: 0.5,
            velocity_clamp: 0.6,
            per_dimension_rand: false,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), SwarmError> {
        if self.particle_count < 2 {
            return Err(SwarmError::TooFewParticles {
                count: self.particle_count,
            });
        }
        if self.iterations == 0 {
            return Err(SwarmError::ZeroIterations);
        }
        let rho = self.candidate_threshold;
        if rho.is_nan() || rho <= 0.0 || rho >= 1.0 {
            return Err(SwarmError::InvalidThreshold { rho });
        }
        if self.velocity_clamp.is_nan() || self.velocity_clamp <= 0.0 {
            return Err(SwarmError::InvalidVelocityClamp {
                v_max: self.velocity_clamp,
            });
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        PsoConfig { seed, ..self }
    }
}

/// One candidate solution: position, velocity, and its best visited point.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    position: Vec<f64>,
    velocity: Vec<f64>,
    pbest: Vec<f64>,
    pbest_fitness: f64,
}

impl Particle {
    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn pbest(&self) -> &[f64] {
        &self.pbest
    }

    pub fn pbest_fitness(&self) -> f64 {
        self.pbest_fitness
    }

    /// Velocity update: inertia plus cognitive pull toward the personal
    /// best plus social pull toward the global best, then clamp.
    pub fn update_velocity(&mut self, gbest: &[f64], cfg: &PsoConfig, r1: f64, r2: f64) {
        for (h, v) in self.velocity.iter_mut().enumerate() {
            let raw = cfg.inertia * *v
                + cfg.cognitive * r1 * (self.pbest[h] - self.position[h])
                + cfg.social * r2 * (gbest[h] - self.position[h]);
            *v = raw.clamp(-cfg.velocity_clamp, cfg.velocity_clamp);
        }
    }

    /// Position update: add the velocity, clamp to `[0, 1]`.
    pub fn update_position(&mut self) {
        for (x, &v) in self.position.iter_mut().zip(&self.velocity) {
            *x = (*x + v).clamp(0.0, 1.0);
        }
    }

    /// Replace the personal best iff the fitness strictly improves; ties
    /// keep the incumbent. Returns whether it moved.
    pub fn maybe_update_pbest(&mut self, fitness: f64) -> bool {
        if fitness < self.pbest_fitness {
            self.pbest.clone_from(&self.position);
            self.pbest_fitness = fitness;
            true
        } else {
            false
        }
    }
}

/// Everything fitness evaluation needs: the completed block, labels, and
/// the classifier protocol (fold seed fixed per stream step).
#[derive(Debug, Clone, Copy)]
pub struct FitnessContext<'a> {
    features: &'a Matrix,
    labels: &'a [i64],
    knn: KnnConfig,
    cv: CvProtocol,
}

impl<'a> FitnessContext<'a> {
    pub fn new(
        features: &'a Matrix,
        labels: &'a [i64],
        knn: KnnConfig,
        cv: CvProtocol,
    ) -> Result<Self, SwarmError> {
        if labels.len() != features.rows() {
            return Err(SwarmError::LabelCountMismatch {
                rows: features.rows(),
                labels: labels.len(),
            });
        }
        Ok(FitnessContext {
            features,
            labels,
            knn,
            cv,
        })
    }

    pub fn instance_count(&self) -> usize {
        self.features.rows()
    }

    pub fn block_width(&self) -> usize {
        self.features.cols()
    }
}

/// Threshold a position into a candidate mask: component `h` selects its
/// feature iff `position[h] > rho` (strict).
pub fn decode_candidate(position: &[f64], rho: f64) -> Vec<bool> {
    position.iter().map(|&x| x > rho).collect()
}

/// `1 - correct / (instances * block_width)`.
pub fn fitness_from_correct(correct: usize, instances: usize, block_width: usize) -> f64 {
    1.0 - correct as f64 / (instances as f64 * block_width as f64)
}

/// Decode the position and score the candidate subset by cross-validated
/// k-NN. An empty candidate set classifies nothing, so its fitness is the
/// worst possible value, 1.
pub fn evaluate_fitness(
    position: &[f64],
    ctx: &FitnessContext<'_>,
    rho: f64,
) -> Result<f64, SwarmError> {
    let mask = decode_candidate(position, rho);
    let columns: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter_map(|(i, &selected)| selected.then_some(i))
        .collect();
    if columns.is_empty() {
        return Ok(1.0);
    }
    let outcome = cross_val_correct(ctx.features, ctx.labels, &columns, &ctx.knn, &ctx.cv)?;
    Ok(fitness_from_correct(
        outcome.correct,
        ctx.instance_count(),
        position.len(),
    ))
}

/// Swarm state: particles, the global best, and the iteration counter.
#[derive(Debug, Clone)]
pub struct Swarm {
    particles: Vec<Particle>,
    gbest: Vec<f64>,
    gbest_fitness: f64,
    iteration: usize,
    rng: Rng,
}

impl Swarm {
    /// Positions uniform in `[0, 1)`, velocities uniform in
    /// `[-v_max, v_max)`, personal bests at the initial positions, global
    /// best the strictly best initial personal best (first index wins ties).
    pub fn init(
        block_width: usize,
        ctx: &FitnessContext<'_>,
        cfg: &PsoConfig,
    ) -> Result<Self, SwarmError> {
        cfg.validate()?;
        let mut rng = Rng::seeded(cfg.seed);
        let mut particles = Vec::with_capacity(cfg.particle_count);
        for _ in 0..cfg.particle_count {
            let position: Vec<f64> = (0..block_width).map(|_| rng.next_f64()).collect();
            let velocity: Vec<f64> = (0..block_width)
                .map(|_| rng.range_f64(-cfg.velocity_clamp, cfg.velocity_clamp))
                .collect();
            let fitness = evaluate_fitness(&position, ctx, cfg.candidate_threshold)?;
            particles.push(Particle {
                pbest: position.clone(),
                pbest_fitness: fitness,
                position,
                velocity,
            });
        }
        let mut gbest = particles[0].pbest.clone();
        let mut gbest_fitness = particles[0].pbest_fitness;
        for particle in &particles[1..] {
            if particle.pbest_fitness < gbest_fitness {
                gbest_fitness = particle.pbest_fitness;
                gbest.clone_from(&particle.pbest);
            }
        }
        Ok(Swarm {
            particles,
            gbest,
            gbest_fitness,
            iteration: 0,
            rng,
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn gbest(&self) -> &[f64] {
        &self.gbest
    }

    pub fn gbest_fitness(&self) -> f64 {
        self.gbest_fitness
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// One iteration: move and re-score every particle against the global
    /// best from the previous iteration, then reduce the personal bests
    /// into the global best (strict improvement only).
    pub fn step(&mut self, ctx: &FitnessContext<'_>, cfg: &PsoConfig) -> Result<(), SwarmError> {
        let gbest_snapshot = self.gbest.clone();
        for particle in &mut self.particles {
            if cfg.per_dimension_rand {
                for (h, v) in particle.velocity.iter_mut().enumerate() {
                    let r1 = self.rng.next_f64();
                    let r2 = self.rng.next_f64();
                    let raw = cfg.inertia * *v
                        + cfg.cognitive * r1 * (particle.pbest[h] - particle.position[h])
                        + cfg.social * r2 * (gbest_snapshot[h] - particle.position[h]);
                    *v = raw.clamp(-cfg.velocity_clamp, cfg.velocity_clamp);
                }
            } else {
                let r1 = self.rng.next_f64();
                let r2 = self.rng.next_f64();
                particle.update_velocity(&gbest_snapshot, cfg, r1, r2);
            }
            particle.update_position();
            let fitness = evaluate_fitness(&particle.position, ctx, cfg.candidate_threshold)?;
            particle.maybe_update_pbest(fitness);
        }
        for particle in &self.particles {
            if particle.pbest_fitness < self.gbest_fitness {
                self.gbest_fitness = particle.pbest_fitness;
                self.gbest.clone_from(&particle.pbest);
            }
        }
        self.iteration += 1;
        Ok(())
    }
}

/// Outcome of a swarm run: the global-best position (the per-feature
/// evaluation scores consumed by the three-way selector), its fitness, and
/// the per-iteration global-best-fitness trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub gbest: Vec<f64>,
    pub gbest_fitness: f64,
    pub trace: Vec<f64>,
}

/// Initialize a swarm and run the configured number of iterations.
pub fn optimize(
    ctx: &FitnessContext<'_>,
    block_width: usize,
    cfg: &PsoConfig,
) -> Result<EvaluationResult, SwarmError> {
    let mut swarm = Swarm::init(block_width, ctx, cfg)?;
    let mut trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        swarm.step(ctx, cfg)?;
        trace.push(swarm.gbest_fitness);
    }
    Ok(EvaluationResult {
        gbest: swarm.gbest,
        gbest_fitness: swarm.gbest_fitness,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use alloc::vec;

    fn context_data(seed: u64, n: usize, width: usize) -> (Matrix, Vec<i64>) {
        // Two informative columns (0 and 1), the rest noise.
        let mut rng = Rng::seeded(seed);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = (i % 2) as i64;
            let center = if class == 0 { 0.25 } else { 0.75 };
            let mut row: Vec<f64> = (0..width).map(|_| rng.next_f64()).collect();
            row[0] = (center + 0.1 * (rng.next_f64() - 0.5)).clamp(0.0, 1.0);
            row[1] = (center + 0.1 * (rng.next_f64() - 0.5)).clamp(0.0, 1.0);
            rows.push(row);
            labels.push(class);
        }
        (Matrix::from_rows(&rows), labels)
    }

    fn basic_cfg(seed: u64) -> PsoConfig {
        PsoConfig {
            particle_count: 12,
            iterations: 10,
            seed,
            ..PsoConfig::default()
        }
    }

    #[test]
    fn decode_uses_strict_inequality() {
        assert_eq!(
            decode_candidate(&[0.9, 0.4, 0.5], 0.5),
            vec![true, false, false]
        );
        assert_eq!(decode_candidate(&[0.6, 0.7, 0.8], 0.5), vec![true; 3]);
        assert_eq!(decode_candidate(&[0.5], 0.5), vec![false]);
    }

    #[test]
    fn fitness_formula() {
        assert_eq!(fitness_from_correct(0, 10, 4), 1.0);
        assert!((fitness_from_correct(8, 10, 4) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_candidate_set_scores_worst() {
        let (features, labels) = context_data(1, 20, 4);
        let ctx = FitnessContext::new(
            &features,
            &labels,
            KnnConfig::new(3).unwrap(),
            CvProtocol::new(3, 0, true).unwrap(),
        )
        .unwrap();
        let fitness = evaluate_fitness(&[0.1, 0.2, 0.3, 0.4], &ctx, 0.5).unwrap();
        assert_eq!(fitness, 1.0);
    }

    #[test]
    fn separable_single_feature_reaches_floor() {
        // With the informative feature selected the cross-validated count
        // is N, so fitness hits its floor 1 - 1/H.
        let (features, labels) = context_data(2, 30, 4);
        let ctx = FitnessContext::new(
            &features,
            &labels,
            KnnConfig::new(3).unwrap(),
            CvProtocol::new(3, 0, true).unwrap(),
        )
        .unwrap();
        let fitness = evaluate_fitness(&[0.9, 0.1, 0.1, 0.1], &ctx, 0.5).unwrap();
        assert!((fitness - (1.0 - 1.0 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn velocity_update_stationary_point() {
        let mut particle = Particle {
            position: vec![0.5, 0.5],
            velocity: vec![0.0, 0.0],
            pbest: vec![0.5, 0.5],
            pbest_fitness: 0.5,
        };
        particle.update_velocity(&[0.5, 0.5], &PsoConfig::default(), 0.7, 0.3);
        assert_eq!(particle.velocity, vec![0.0, 0.0]);
    }

    #[test]
    fn velocity_update_arithmetic() {
        // w=1, c1=c2=2, r1=0.3, r2=0.6, x=0.5, p=0.7, g=0.9, v=0.1:
        // 0.1 + 0.12 + 0.48 = 0.70 before the clamp.
        let cfg = PsoConfig {
            velocity_clamp: 1.0,
            ..PsoConfig::default()
        };
        let mut particle = Particle {
            position: vec![0.5],
            velocity: vec![0.1],
            pbest: vec![0.7],
            pbest_fitness: 0.5,
        };
        particle.update_velocity(&[0.9], &cfg, 0.3, 0.6);
        assert!((particle.velocity[0] - 0.70).abs() < 1e-12);
    }

    #[test]
    fn velocity_matches_scalar_oracle() {
        let mut rng = Rng::seeded(44);
        for _ in 0..100 {
            let cfg = PsoConfig {
                inertia: rng.next_f64() * 1.2,
                cognitive: rng.next_f64() * 2.5,
                social: rng.next_f64() * 2.5,
                velocity_clamp: 0.2 + rng.next_f64(),
                ..PsoConfig::default()
            };
            let x = rng.next_f64();
            let p = rng.next_f64();
            let g = rng.next_f64();
            let v = rng.range_f64(-0.5, 0.5);
            let r1 = rng.next_f64();
            let r2 = rng.next_f64();
            let mut particle = Particle {
                position: vec![x],
                velocity: vec![v],
                pbest: vec![p],
                pbest_fitness: 0.5,
            };
            particle.update_velocity(&[g], &cfg, r1, r2);
            let raw = cfg.inertia * v + cfg.cognitive * r1 * (p - x) + cfg.social * r2 * (g - x);
            let expected = raw.clamp(-cfg.velocity_clamp, cfg.velocity_clamp);
            assert!((particle.velocity[0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn position_update_cases() {
        let mut particle = Particle {
            position: vec![0.5, 0.5, 0.2],
            velocity: vec![0.0, 0.7, 0.3],
            pbest: vec![0.5, 0.5, 0.2],
            pbest_fitness: 0.5,
        };
        particle.update_position();
        assert_eq!(particle.position[0], 0.5);
        assert_eq!(particle.position[1], 1.0); // clamped
        assert!((particle.position[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pbest_tie_keeps_incumbent() {
        let mut particle = Particle {
            position: vec![0.9],
            velocity: vec![0.0],
            pbest: vec![0.2],
            pbest_fitness: 0.5,
        };
        assert!(!particle.maybe_update_pbest(0.5));
        assert_eq!(particle.pbest(), &[0.2]);
        assert!(particle.maybe_update_pbest(0.4));
        assert_eq!(particle.pbest(), &[0.9]);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let (features, labels) = context_data(3, 24, 5);
        let ctx = FitnessContext::new(
            &features,
            &labels,
            KnnConfig::new(3).unwrap(),
            CvProtocol::new(3, 1, true).unwrap(),
        )
        .unwrap();
        let cfg = basic_cfg(9);
        let a = Swarm::init(5, &ctx, &cfg).unwrap();
        let b = Swarm::init(5, &ctx, &cfg).unwrap();
        assert_eq!(a.particles(), b.particles());
        for particle in a.particles() {
            for &x in particle.position() {
                assert!((0.0..=1.0).contains(&x));
            }
            for &v in particle.velocity() {
                assert!(v.abs() <= cfg.velocity_clamp);
            }
        }
    }

    #[test]
    fn init_gbest_is_min_over_pbests() {
        let (features, labels) = context_data(4, 24, 5);
        let ctx = FitnessContext::new(
            &features,
            &labels,
            KnnConfig::new(3).unwrap(),
            CvProtocol::new(3, 1, true).unwrap(),
        )
        .unwrap();
        let swarm = Swarm::init(5, &ctx, &basic_cfg(13)).unwrap();
        let oracle = swarm
            .particles()
            .iter()
            .map(Particle::pbest_fitness)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(swarm.gbest_fitness(), oracle);
    }

    #[test]
    fn step_preserves_bounds_and_gbest_monotonicity() {
        let (features, labels) = context_data(5, 30, 6);
        let ctx = FitnessContext::new(
            &features,
            &labels,
            KnnConfig::new(3).unwrap(),
            CvProtocol::new(3, 2, true).unwrap(),
        )
        .unwrap();
        let cfg = basic_cfg(17);
        let mut swarm = Swarm::init(6, &ctx, &cfg).unwrap();
        let mut previous = swarm.gbest_fitness();
        for _ in 0..8 {
            swarm.step(&ctx, &cfg).unwrap();
            assert!(swarm.gbest_fitness() <= previous);
            previous = swarm.gbest_fitness();
            for particle in swarm.particles() {
                for &x in particle.position() {
                    assert!((0.0..=1.0).contains(&x), "position {x}");
                }
                for &v in particle.velocity() {
                    assert!(v.abs() <= cfg.velocity_clamp + 1e-15, "velocity {v}");
                }
            }
        }
    }

    #[test]
    fn optimize_trace_shape_and_reproducibility() {
        let (features, labels) = context_data(6, 24, 5);
        let ctx = FitnessContext::new(
            &features,
            &labels,
            KnnConfig::new(3).unwrap(),
            CvProtocol::new(3, 3, true).unwrap(),
        )
        .unwrap();
        let single = PsoConfig {
            iterations: 1,
            ..basic_cfg(23)
        };
        assert_eq!(optimize(&ctx, 5, &single).unwrap().trace.len(), 1);

        let cfg = basic_cfg(23);
        let a = optimize(&ctx, 5, &cfg).unwrap();
        let b = optimize(&ctx, 5, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.windows(2).all(|w| w[1] <= w[0]), "non-increasing");
    }

    #[test]
    fn fitness_values_respect_theoretical_range() {
        let (features, labels) = context_data(7, 20, 5);
        let ctx = FitnessContext::new(
            &features,
            &labels,
            KnnConfig::new(3).unwrap(),
            CvProtocol::new(3, 4, true).unwrap(),
        )
        .unwrap();
        let mut rng = Rng::seeded(12);
        for _ in 0..200 {
            let position: Vec<f64> = (0..5).map(|_| rng.next_f64()).collect();
            let fitness = evaluate_fitness(&position, &ctx, 0.5).unwrap();
            assert!(fitness >= 1.0 - 1.0 / 5.0 - 1e-12);
            assert!(fitness <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let base = PsoConfig::default();
        let cfg = PsoConfig {
            particle_count: 1,
            ..base
        };
        assert!(matches!(
            cfg.validate(),
            Err(SwarmError::TooFewParticles { count: 1 })
        ));
        let cfg = PsoConfig {
            iterations: 0,
            ..base
        };
        assert!(cfg.validate().is_err());
        let cfg = PsoConfig {
            candidate_threshold: 1.0,
            ..base
        };
        assert!(cfg.validate().is_err());
        let cfg = PsoConfig {
            velocity_clamp: 0.0,
            ..base
        };
        assert!(cfg.validate().is_err());
    }
}
