//! Statistical primitives: partial correlation with its Fisher-Z transform,
//! and the Wilcoxon signed-rank test used for paired method comparison.

use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum StatsError {
    LengthMismatch { expected: usize, got: usize },
    TooFewSamples { needed: usize, got: usize },
    EmptySample,
    NonFiniteInput,
    TooManyPairs { max: usize, got: usize },
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::LengthMismatch { expected, got } => {
                write!(f, "vector length {got}, expected {expected}")
            }
            StatsError::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            StatsError::EmptySample => write!(f, "empty sample"),
            StatsError::NonFiniteInput => write!(f, "non-finite input value"),
            StatsError::TooManyPairs { max, got } => {
                write!(f, "exact enumeration supports up to {max} pairs, got {got}")
            }
        }
    }
}

impl core::error::Error for StatsError {}

/// Partial correlation of `x` and `y` given the conditioning columns, with
/// degeneracy diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialCorrelation {
    /// Correlation of the projection residuals, in [-1, 1]. Zero when a
    /// residual has (numerically) no variance.
    pub value: f64,
    /// A residual had no variance left after projection — e.g. `x` is an
    /// exact linear function of the conditioning set.
    pub degenerate: bool,
    /// The conditioning columns were linearly dependent; the projection
    /// used the spanned subspace only.
    pub rank_deficient: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of span{1, conditioning...} via modified Gram-Schmidt.
/// Near-dependent columns are dropped; returns whether any were.
fn orthonormal_basis(n: usize, conditioning: &[&[f64]]) -> (Vec<Vec<f64>>, bool) {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(conditioning.len() + 1);
    let intercept = libm::sqrt(1.0 / n as f64);
    basis.push(alloc::vec![intercept; n]);
    let mut dropped = false;
    for col in conditioning {
        let mut v = col.to_vec();
        let original_norm = libm::sqrt(dot(&v, &v));
        for b in &basis {
            let coef = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= coef * bi;
            }
        }
        let norm = libm::sqrt(dot(&v, &v));
        if norm <= 1e-10 * original_norm.max(1.0) {
            dropped = true;
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }
    (basis, dropped)
}

fn residual(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for b in basis {
        let coef = dot(&r, b);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= coef * bi;
        }
    }
    r
}

/// Correlation of the residuals of `x` and `y` after least-squares
/// projection onto the conditioning columns plus an intercept. Empty
/// conditioning reduces to the Pearson correlation.
///
/// Requires `n > conditioning.len() + 3` so the Fisher transform of the
/// result has positive degrees of freedom.
pub fn partial_correlation(
    x: &[f64],
    y: &[f64],
    conditioning: &[&[f64]],
) -> Result<PartialCorrelation, StatsError> {
    let n = x.len();
    if y.len() != n {
        return Err(StatsError::LengthMismatch {
            expected: n,
            got: y.len(),
        });
    }
    for col in conditioning {
        if col.len() != n {
            return Err(StatsError::LengthMismatch {
                expected: n,
                got: col.len(),
            });
        }
    }
    let needed = conditioning.len() + 4;
    if n < needed {
        return Err(StatsError::TooFewSamples { needed, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite())
        || conditioning
            .iter()
            .flat_map(|c| c.iter())
            .any(|v| !v.is_finite())
    {
        return Err(StatsError::NonFiniteInput);
    }

    let (basis, rank_deficient) = orthonormal_basis(n, conditioning);
    let rx = residual(x, &basis);
    let ry = residual(y, &basis);
    let nx = libm::sqrt(dot(&rx, &rx));
    let ny = libm::sqrt(dot(&ry, &ry));

    // Scale-relative threshold: a residual this small means the vector lay
    // (numerically) inside the conditioning span.
    let x_scale = centered_norm(x);
    let y_scale = centered_norm(y);
    if nx <= 1e-8 * x_scale.max(1e-300) || ny <= 1e-8 * y_scale.max(1e-300) {
        return Ok(PartialCorrelation {
            value: 0.0,
            degenerate: true,
            rank_deficient,
        });
    }

    let r = (dot(&rx, &ry) / (nx * ny)).clamp(-1.0, 1.0);
    Ok(PartialCorrelation {
        value: r,
        degenerate: false,
        rank_deficient,
    })
}

fn centered_norm(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    libm::sqrt(v.iter().map(|x| (x - mean) * (x - mean)).sum())
}

/// Fisher-Z statistic of a partial correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherZ {
    pub statistic: f64,
    pub partial_correlation: f64,
    pub degenerate: bool,
    pub rank_deficient: bool,
}

/// `sqrt(n - |conditioning| - 3) * atanh(r)` with `|r|` clamped to
/// `1 - 1e-12` so the transform stays finite at saturation.
pub fn fisher_z(x: &[f64], y: &[f64], conditioning: &[&[f64]]) -> Result<FisherZ, StatsError> {
    let pc = partial_correlation(x, y, conditioning)?;
    let clamp = 1.0 - 1e-12;
    let r = pc.value.clamp(-clamp, clamp);
    let df = x.len() as f64 - conditioning.len() as f64 - 3.0;
    let statistic = libm::sqrt(df) * 0.5 * libm::log((1.0 + r) / (1.0 - r));
    Ok(FisherZ {
        statistic,
        partial_correlation: pc.value,
        degenerate: pc.degenerate,
        rank_deficient: pc.rank_deficient,
    })
}

/// Standard normal quantile (inverse CDF), Acklam's rational approximation
/// (absolute error below 1.2e-9 on (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument must be in (0, 1)");

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Two-sided critical value at significance `alpha`: `Phi^-1(1 - alpha/2)`.
pub fn critical_value(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

/// Paired observations, one pair per dataset/condition.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSamples {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, StatsError> {
        if a.is_empty() {
            return Err(StatsError::EmptySample);
        }
        if a.len() != b.len() {
            return Err(StatsError::LengthMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFiniteInput);
        }
        Ok(PairedSamples { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Wilcoxon signed-rank sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSums {
    /// Sum of ranks where `a > b`.
    pub r_plus: f64,
    /// Sum of ranks where `a < b`.
    pub r_minus: f64,
    /// Pairs remaining after zero differences are dropped.
    pub n_effective: usize,
}

/// Ranks of the absolute differences, mid-ranks for ties. Zero differences
/// are dropped first, so `r_plus + r_minus = n(n+1)/2` over the survivors.
pub fn wilcoxon_signed_rank(samples: &PairedSamples) -> RankSums {
    let diffs: Vec<f64> = samples
        .a
        .iter()
        .zip(&samples.b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let ranks = midranks_of_abs(&diffs);
    let mut r_plus = 0.0;
    let mut r_minus = 0.0;
    for (d, rank) in diffs.iter().zip(&ranks) {
        if *d > 0.0 {
            r_plus += rank;
        } else {
            r_minus += rank;
        }
    }
    RankSums {
        r_plus,
        r_minus,
        n_effective: diffs.len(),
    }
}

fn midranks_of_abs(diffs: &[f64]) -> Vec<f64> {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| libm::fabs(diffs[i]).total_cmp(&libm::fabs(diffs[j])));
    let mut ranks = alloc::vec![0.0; n];
    let mut pos = 0;
    while pos < n {
        let mut end = pos + 1;
        while end < n && libm::fabs(diffs[order[end]]) == libm::fabs(diffs[order[pos]]) {
            end += 1;
        }
        // Positions pos..end share ranks pos+1..end+1; assign their mean.
        let midrank = (pos + 1 + end) as f64 / 2.0;
        for &idx in &order[pos..end] {
            ranks[idx] = midrank;
        }
        pos = end;
    }
    ranks
}

const EXACT_ENUMERATION_MAX: usize = 20;

/// Exact two-sided p-value by enumerating all sign assignments of the
/// observed absolute-difference ranks: the probability, under the
/// symmetric null, that `min(R+, R-)` is at most the observed minimum.
///
/// Feasible for small n only; errors beyond 2^20 assignments. With no
/// nonzero differences the p-value is 1.
pub fn wilcoxon_exact_p_value(samples: &PairedSamples) -> Result<f64, StatsError> {
    let diffs: Vec<f64> = samples
        .a
        .iter()
        .zip(&samples.b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }
    if n > EXACT_ENUMERATION_MAX {
        return Err(StatsError::TooManyPairs {
            max: EXACT_ENUMERATION_MAX,
            got: n,
        });
    }
    let ranks = midranks_of_abs(&diffs);
    let total: f64 = ranks.iter().sum();
    let observed = wilcoxon_signed_rank(samples);
    let observed_min = observed.r_plus.min(observed.r_minus);

    let assignments = 1u64 << n;
    let mut extreme = 0u64;
    for bits in 0..assignments {
        let mut plus = 0.0;
        for (i, rank) in ranks.iter().enumerate() {
            if bits >> i & 1 == 1 {
                plus += rank;
            }
        }
        let min_sum = plus.min(total - plus);
        if min_sum <= observed_min + 1e-9 {
            extreme += 1;
        }
    }
    Ok(extreme as f64 / assignments as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn pearson_of_identical_vectors_is_one() {
        let x = alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let pc = partial_correlation(&x, &x, &[]).unwrap();
        assert!((pc.value - 1.0).abs() < 1e-12);
        assert!(!pc.degenerate);
    }

    #[test]
    fn orthogonal_vectors_have_zero_correlation() {
        let x = alloc::vec![1.0, -1.0, 1.0, -1.0];
        let y = alloc::vec![1.0, 1.0, -1.0, -1.0];
        let pc = partial_correlation(&x, &y, &[]).unwrap();
        assert!(pc.value.abs() < 1e-12);
    }

    #[test]
    fn chain_structure_vanishes_given_middle() {
        // x -> z -> y: conditioning on z should wipe out the x-y link.
        let mut rng = Rng::seeded(21);
        let n = 2000;
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let z: Vec<f64> = x.iter().map(|&xv| 0.8 * xv + 0.6 * rng.normal()).collect();
        let y: Vec<f64> = z.iter().map(|&zv| 0.8 * zv + 0.6 * rng.normal()).collect();
        let marginal = partial_correlation(&x, &y, &[]).unwrap().value;
        let partial = partial_correlation(&x, &y, &[&z]).unwrap().value;
        assert!(marginal > 0.4, "marginal {marginal}");
        assert!(partial.abs() < 0.06, "partial {partial}");
    }

    #[test]
    fn partial_matches_residual_regression_oracle() {
        // 3 variables, 10 rows: regress out z from x and y by closed-form
        // simple regression, then correlate the residuals.
        let x = alloc::vec![0.2, 1.1, 0.5, 1.9, 0.3, 1.4, 0.8, 0.1, 1.7, 0.6];
        let y = alloc::vec![1.0, 0.4, 0.9, 0.2, 1.3, 0.5, 0.7, 1.6, 0.3, 1.1];
        let z = alloc::vec![0.5, 0.9, 0.4, 1.5, 0.2, 1.2, 0.6, 0.3, 1.4, 0.8];

        fn residuals(v: &[f64], z: &[f64]) -> Vec<f64> {
            let n = v.len() as f64;
            let mv = v.iter().sum::<f64>() / n;
            let mz = z.iter().sum::<f64>() / n;
            let cov: f64 = v.iter().zip(z).map(|(a, b)| (a - mv) * (b - mz)).sum();
            let var: f64 = z.iter().map(|b| (b - mz) * (b - mz)).sum();
            let beta = cov / var;
            v.iter()
                .zip(z)
                .map(|(a, b)| a - mv - beta * (b - mz))
                .collect()
        }
        let rx = residuals(&x, &z);
        let ry = residuals(&y, &z);
        let num: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
        let den = libm::sqrt(
            rx.iter().map(|a| a * a).sum::<f64>() * ry.iter().map(|a| a * a).sum::<f64>(),
        );
        let oracle = num / den;

        let pc = partial_correlation(&x, &y, &[&z]).unwrap();
        assert!(
            (pc.value - oracle).abs() < 1e-10,
            "{} vs oracle {oracle}",
            pc.value
        );
    }

    #[test]
    fn degenerate_residual_flagged() {
        let x = alloc::vec![0.1, 0.5, 0.9, 0.3, 0.7, 0.2];
        let y = alloc::vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        // Conditioning on x itself leaves no residual variance.
        let pc = partial_correlation(&x, &y, &[&x]).unwrap();
        assert!(pc.degenerate);
        assert_eq!(pc.value, 0.0);
    }

    #[test]
    fn rank_deficient_conditioning_flagged() {
        let mut rng = Rng::seeded(4);
        let n = 30;
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let z2: Vec<f64> = z.iter().map(|v| 2.0 * v - 1.0).collect();
        let pc = partial_correlation(&x, &y, &[&z, &z2]).unwrap();
        assert!(pc.rank_deficient);
        // Projection equals conditioning on z alone.
        let single = partial_correlation(&x, &y, &[&z]).unwrap();
        assert!((pc.value - single.value).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples_rejected() {
        let x = alloc::vec![1.0, 2.0, 3.0, 4.0];
        let z = alloc::vec![0.3, 0.1, 0.4, 0.2];
        assert!(matches!(
            partial_correlation(&x, &x, &[&z]),
            Err(StatsError::TooFewSamples { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn quantile_reference_points() {
        assert!((normal_quantile(0.975) - 1.959964).abs() < 1e-5);
        assert!(normal_quantile(0.5).abs() < 1e-9);
        assert!((normal_quantile(0.025) + normal_quantile(0.975)).abs() < 1e-9);
        assert!((critical_value(0.05) - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn all_wins_rank_sums() {
        let a = alloc::vec![0.9, 0.8, 0.95, 0.7, 0.85, 0.75];
        let b = alloc::vec![0.5, 0.6, 0.55, 0.65, 0.45, 0.4];
        let sums = wilcoxon_signed_rank(&PairedSamples::new(a, b).unwrap());
        assert_eq!(sums.r_plus, 21.0);
        assert_eq!(sums.r_minus, 0.0);
        assert_eq!(sums.n_effective, 6);
    }

    #[test]
    fn single_smallest_loss_gives_twenty_one() {
        // One pair flipped with the smallest absolute difference: its rank
        // is 1, so the split is 20 / 1.
        let a = alloc::vec![0.9, 0.8, 0.95, 0.7, 0.85, 0.50];
        let b = alloc::vec![0.5, 0.6, 0.55, 0.45, 0.45, 0.52];
        let sums = wilcoxon_signed_rank(&PairedSamples::new(a, b).unwrap());
        assert_eq!(sums.r_plus, 20.0);
        assert_eq!(sums.r_minus, 1.0);
    }

    #[test]
    fn all_zero_differences() {
        let a = alloc::vec![0.3, 0.4, 0.5];
        let sums = wilcoxon_signed_rank(&PairedSamples::new(a.clone(), a.clone()).unwrap());
        assert_eq!(sums.r_plus, 0.0);
        assert_eq!(sums.r_minus, 0.0);
        assert_eq!(sums.n_effective, 0);
        let p = wilcoxon_exact_p_value(&PairedSamples::new(a.clone(), a).unwrap()).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn exact_p_for_six_unanimous_wins() {
        // All six differences positive with distinct magnitudes: only the
        // two unanimous assignments reach min rank sum 0, so p = 2/64.
        let a = alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = alloc::vec![0.0; 6];
        let p = wilcoxon_exact_p_value(&PairedSamples::new(a, b).unwrap()).unwrap();
        assert!((p - 0.03125).abs() < 1e-12);
    }

    #[test]
    fn exact_p_rejects_large_n() {
        let a: Vec<f64> = (0..25).map(|i| i as f64 + 1.0).collect();
        let b = alloc::vec![0.0; 25];
        assert!(matches!(
            wilcoxon_exact_p_value(&PairedSamples::new(a, b).unwrap()),
            Err(StatsError::TooManyPairs { .. })
        ));
    }

    proptest! {
        #[test]
        fn rank_sum_conservation(pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..30)) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let sums = wilcoxon_signed_rank(&PairedSamples::new(a, b).unwrap());
            let n = sums.n_effective as f64;
            prop_assert!((sums.r_plus + sums.r_minus - n * (n + 1.0) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn rank_sums_antisymmetric(pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20)) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let fwd = wilcoxon_signed_rank(&PairedSamples::new(a.clone(), b.clone()).unwrap());
            let rev = wilcoxon_signed_rank(&PairedSamples::new(b, a).unwrap());
            prop_assert_eq!(fwd.r_plus, rev.r_minus);
            prop_assert_eq!(fwd.r_minus, rev.r_plus);
        }

        #[test]
        fn partial_correlation_symmetric_and_scale_invariant(
            seed in 0u64..1000,
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let mut rng = Rng::seeded(seed);
            let n = 40;
            let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let z_scaled: Vec<f64> = z.iter().map(|v| scale * v + shift).collect();

            let xy = partial_correlation(&x, &y, &[&z]).unwrap().value;
            let yx = partial_correlation(&y, &x, &[&z]).unwrap().value;
            let rescaled = partial_correlation(&x, &y, &[&z_scaled]).unwrap().value;
            prop_assert!((xy - yx).abs() < 1e-12);
            prop_assert!((xy - rescaled).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_p_matches_bruteforce_reimplementation() {
        // Independent oracle: recompute the enumeration with a separate
        // naive ranking (O(n^2) rank-by-counting) for random sign patterns.
        let mut rng = Rng::seeded(17);
        for _ in 0..20 {
            let n = 3 + rng.index(7);
            let a: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let samples = PairedSamples::new(a.clone(), b.clone()).unwrap();

            let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let abs: Vec<f64> = diffs.iter().map(|d| libm::fabs(*d)).collect();
            let naive_rank = |i: usize| -> f64 {
                let below = abs.iter().filter(|&&v| v < abs[i]).count();
                let equal = abs.iter().filter(|&&v| v == abs[i]).count();
                below as f64 + (equal as f64 + 1.0) / 2.0
            };
            let ranks: Vec<f64> = (0..n).map(naive_rank).collect();
            let total: f64 = ranks.iter().sum();
            let obs_plus: f64 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| ranks[i]).sum();
            let obs_min = obs_plus.min(total - obs_plus);
            let mut extreme = 0u64;
            for bits in 0..(1u64 << n) {
                let plus: f64 = (0..n)
                    .filter(|&i| bits >> i & 1 == 1)
                    .map(|i| ranks[i])
                    .sum();
                if plus.min(total - plus) <= obs_min + 1e-9 {
                    extreme += 1;
                }
            }
            let oracle = extreme as f64 / (1u64 << n) as f64;
            let p = wilcoxon_exact_p_value(&samples).unwrap();
            assert!((p - oracle).abs() < 1e-12, "p {p} vs oracle {oracle}");
        }
    }
}
