//! Finite-family generalization-bound calculator.
//!
//! For a finite model family of size `|F|`, a bounded loss with range
//! `[a, b]`, a sample of `m` points, and an error tolerance `ε`, the
//! Hoeffding-plus-union-bound failure probability is
//! `δ = 2·|F|·exp(−2·m·ε² / (b−a)²)`: with probability at least `1 − δ`,
//! every family member's empirical risk sits within `ε` of its true risk.
//! This module evaluates that expression, inverts it for `ε`, and checks it
//! empirically by training real models on resampled training sets.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::models::{self, ArchSpec, TrainConfig};
use crate::rng::{derive_seed, rng_from};

const TAG_TRIAL: u64 = 0x30;
const TAG_INIT: u64 = 0x31;
const TAG_FIT: u64 = 0x32;

/// Inputs to the bound: sample count, tolerance, family size, loss range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub sample_count: usize,
    pub epsilon: f64,
    pub family_size: usize,
    /// `(a, b)` with `b > a`.
    pub loss_range: (f64, f64),
}

impl BoundQuery {
    pub fn new(
        sample_count: usize,
        epsilon: f64,
        family_size: usize,
        loss_range: (f64, f64),
    ) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!(
                "error tolerance must be positive, got {epsilon}"
            )));
        }
        if family_size == 0 {
            return Err(Error::Domain("family size must be at least 1".into()));
        }
        let (a, b) = loss_range;
        if !a.is_finite() || !b.is_finite() || b <= a {
            return Err(Error::Domain(format!(
                "loss range must satisfy b > a, got ({a}, {b})"
            )));
        }
        Ok(Self {
            sample_count,
            epsilon,
            family_size,
            loss_range,
        })
    }

    fn width(&self) -> f64 {
        self.loss_range.1 - self.loss_range.0
    }
}

/// The raw bound `2·|F|·exp(−2·m·ε²/(b−a)²)`, without clamping. Strictly
/// decreasing in `m` and `ε`, strictly increasing in `|F|` and the range
/// width.
pub fn delta_unclamped(q: &BoundQuery) -> f64 {
    let exponent = -2.0 * q.sample_count as f64 * q.epsilon * q.epsilon / (q.width() * q.width());
    2.0 * q.family_size as f64 * exponent.exp()
}

/// The failure-probability bound, clamped to `[0, 1]` (a probability bound
/// above 1 is vacuous). With `m = 0` the raw value is `2·|F| ≥ 2`, so the
/// result is 1.
pub fn delta_for(q: &BoundQuery) -> f64 {
    delta_unclamped(q).min(1.0)
}

/// Inverts the bound for the tolerance:
/// `ε = (b−a)·√(ln(2·|F|/δ) / (2m))`. Round-trips with [`delta_for`] when
/// the bound is not clamped.
pub fn epsilon_for(
    sample_count: usize,
    delta: f64,
    family_size: usize,
    loss_range: (f64, f64),
) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::Domain(
            "cannot invert the bound for zero samples".into(),
        ));
    }
    if family_size == 0 {
        return Err(Error::Domain("family size must be at least 1".into()));
    }
    let (a, b) = loss_range;
    if !a.is_finite() || !b.is_finite() || b <= a {
        return Err(Error::Domain(format!(
            "loss range must satisfy b > a, got ({a}, {b})"
        )));
    }
    let ceiling = 2.0 * family_size as f64;
    if !(delta > 0.0) || delta >= ceiling {
        return Err(Error::Domain(format!(
            "delta must lie in (0, {ceiling}), got {delta}"
        )));
    }
    Ok((b - a) * ((ceiling / delta).ln() / (2.0 * sample_count as f64)).sqrt())
}

/// Which risk the gap checker measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapMetric {
    /// Misclassification rate (`1 − accuracy`), naturally bounded in [0, 1].
    ZeroOne,
    /// The clamped cross-entropy; its range comes from the architectures.
    CrossEntropy,
}

/// Configuration for the empirical gap check.
#[derive(Debug, Clone, Copy)]
pub struct GapConfig {
    /// Training-set size `m` drawn fresh from the pool each trial. When it
    /// equals the pool size, the trial trains on the whole pool.
    pub train_size: usize,
    pub trials: usize,
    /// The tolerance the violation count is measured against.
    pub epsilon: f64,
    pub metric: GapMetric,
    /// Local training recipe for each family member.
    pub train: TrainConfig,
    pub seed: u64,
}

/// Result of the empirical gap check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    /// `max_f |L_S(f) − L_test(f)|` per trial.
    pub per_trial_max_gap: Vec<f64>,
    /// Fraction of trials whose max gap exceeded `epsilon`.
    pub violation_rate: f64,
    pub epsilon: f64,
    /// The loss range used; feeds the matching [`BoundQuery`].
    pub loss_range: (f64, f64),
}

impl GapReport {
    /// The bound this run is measured against.
    pub fn bound(&self, sample_count: usize, family_size: usize) -> Result<f64> {
        Ok(delta_for(&BoundQuery::new(
            sample_count,
            self.epsilon,
            family_size,
            self.loss_range,
        )?))
    }
}

/// Trains every family member on a freshly drawn size-`m` training set per
/// trial and measures `max_f |L_S(f) − L_test(f)|`, where the held-out set
/// stands in for the true risk. Requires the held-out set to be at least
/// 10x the training size so the stand-in is meaningful.
pub fn empirical_gap(
    pool: &Dataset,
    test: &Dataset,
    family: &[ArchSpec],
    cfg: &GapConfig,
) -> Result<GapReport> {
    if family.is_empty() {
        return Err(Error::Config("model family is empty".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    if cfg.train_size == 0 || cfg.train_size > pool.len() {
        return Err(Error::Capacity {
            required: cfg.train_size.max(1),
            available: pool.len(),
        });
    }
    // The held-out set stands in for the true risk, so it must dwarf the
    // training set — except in the degenerate train-equals-test case, where
    // both risks are evaluated on identical rows and the gap is zero by
    // construction.
    let degenerate = pool == test && cfg.train_size == pool.len();
    if !degenerate && test.len() < 10 * cfg.train_size {
        return Err(Error::Config(format!(
            "held-out set must be at least 10x the training size: {} vs {}",
            test.len(),
            cfg.train_size
        )));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "error tolerance must be positive, got {}",
            cfg.epsilon
        )));
    }

    let loss_range = match cfg.metric {
        GapMetric::ZeroOne => (0.0, 1.0),
        GapMetric::CrossEntropy => {
            let hi = family
                .iter()
                .map(|a| a.loss_range().1)
                .fold(f64::NEG_INFINITY, f64::max);
            (0.0, hi)
        }
    };

    let test_rows: Vec<usize> = (0..test.len()).collect();
    let per_trial_max_gap: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = derive_seed(cfg.seed, &[TAG_TRIAL, trial as u64]);
            let mut train_idx: Vec<usize> =
                sample_indices(&mut rng_from(trial_seed), pool.len(), cfg.train_size).into_vec();
            train_idx.sort_unstable();
            let mut worst: f64 = 0.0;
            for (k, arch) in family.iter().enumerate() {
                let init = models::init_params(
                    arch,
                    derive_seed(cfg.seed, &[TAG_INIT, trial as u64, k as u64]),
                );
                let fitted = models::fit(
                    &init,
                    pool,
                    &train_idx,
                    &cfg.train,
                    derive_seed(cfg.seed, &[TAG_FIT, trial as u64, k as u64]),
                )?;
                let gap = match cfg.metric {
                    GapMetric::ZeroOne => {
                        let train_err = 1.0 - models::accuracy_on(&fitted, pool, &train_idx)?;
                        let test_err = 1.0 - models::accuracy_on(&fitted, test, &test_rows)?;
                        (train_err - test_err).abs()
                    }
                    GapMetric::CrossEntropy => {
                        let train_loss = models::mean_loss(&fitted, pool, &train_idx)?;
                        let test_loss = models::mean_loss(&fitted, test, &test_rows)?;
                        (train_loss - test_loss).abs()
                    }
                };
                worst = worst.max(gap);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;

    let violations = per_trial_max_gap.iter().filter(|&&g| g > cfg.epsilon).count();
    Ok(GapReport {
        violation_rate: violations as f64 / cfg.trials as f64,
        per_trial_max_gap,
        epsilon: cfg.epsilon,
        loss_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_blobs, ring_centers};
    use crate::models::Activation;

    #[test]
    fn canonical_bound_value_is_exact() {
        let q = BoundQuery::new(200, 0.1, 10, (0.0, 1.0)).unwrap();
        let expected = 20.0 * (-4.0f64).exp();
        assert!((delta_for(&q) - expected).abs() < 1e-12);
        assert!((delta_for(&q) - 0.366_312_777_774_683_6).abs() < 1e-12);
    }

    #[test]
    fn zero_samples_clamp_to_one() {
        let q = BoundQuery::new(0, 0.1, 10, (0.0, 1.0)).unwrap();
        assert_eq!(delta_for(&q), 1.0);
        assert_eq!(delta_unclamped(&q), 20.0);
    }

    #[test]
    fn doubling_samples_strictly_shrinks_the_raw_bound() {
        let q1 = BoundQuery::new(100, 0.05, 3, (0.0, 2.0)).unwrap();
        let q2 = BoundQuery::new(200, 0.05, 3, (0.0, 2.0)).unwrap();
        assert!(delta_unclamped(&q2) < delta_unclamped(&q1));
    }

    #[test]
    fn invalid_queries_are_domain_errors() {
        assert!(matches!(
            BoundQuery::new(10, 0.0, 3, (0.0, 1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BoundQuery::new(10, -0.5, 3, (0.0, 1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BoundQuery::new(10, 0.1, 0, (0.0, 1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BoundQuery::new(10, 0.1, 3, (1.0, 1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BoundQuery::new(10, 0.1, 3, (2.0, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inversion_round_trips_to_machine_precision() {
        let q = BoundQuery::new(200, 0.1, 10, (0.0, 1.0)).unwrap();
        let delta = delta_for(&q);
        let eps = epsilon_for(q.sample_count, delta, q.family_size, q.loss_range).unwrap();
        assert!((eps - q.epsilon).abs() < 1e-12, "round trip gave {eps}");
        // And with the textbook rounded delta, epsilon comes out near 0.1.
        let eps = epsilon_for(200, 0.36631, 10, (0.0, 1.0)).unwrap();
        assert!((eps - 0.1).abs() < 1e-4, "{eps}");
    }

    #[test]
    fn inversion_rejects_out_of_range_delta() {
        assert!(matches!(
            epsilon_for(0, 0.5, 10, (0.0, 1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            epsilon_for(100, 0.0, 10, (0.0, 1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            epsilon_for(100, 20.0, 10, (0.0, 1.0)),
            Err(Error::Domain(_))
        ));
        // delta = 1 (a clamped bound) still inverts fine.
        assert!(epsilon_for(100, 1.0, 10, (0.0, 1.0)).is_ok());
    }

    fn small_family() -> Vec<ArchSpec> {
        vec![
            ArchSpec::logistic(2, 3).unwrap(),
            ArchSpec::mlp(2, &[4], 3, Activation::Relu).unwrap(),
            ArchSpec::mlp(2, &[8], 3, Activation::Tanh).unwrap(),
        ]
    }

    #[test]
    fn gap_is_zero_when_train_equals_test() {
        let data = generate_blobs(3, 40, &ring_centers(3, 6.0), 1.0, 3).unwrap();
        for metric in [GapMetric::CrossEntropy, GapMetric::ZeroOne] {
            let cfg = GapConfig {
                train_size: data.len(),
                trials: 2,
                epsilon: 0.05,
                metric,
                train: TrainConfig::default(),
                seed: 5,
            };
            let report = empirical_gap(&data, &data, &small_family(), &cfg).unwrap();
            assert!(
                report.per_trial_max_gap.iter().all(|&g| g == 0.0),
                "gaps {:?} with {metric:?}",
                report.per_trial_max_gap
            );
            assert_eq!(report.violation_rate, 0.0);
        }
    }

    #[test]
    fn more_training_data_shrinks_the_mean_gap() {
        let pool = generate_blobs(3, 300, &ring_centers(3, 8.0), 2.0, 11).unwrap();
        let test = generate_blobs(3, 1700, &ring_centers(3, 8.0), 2.0, 12).unwrap();
        let family = small_family();
        let mk = |train_size| GapConfig {
            train_size,
            trials: 20,
            epsilon: 0.5,
            metric: GapMetric::ZeroOne,
            train: TrainConfig::default(),
            seed: 21,
        };
        let small = empirical_gap(&pool, &test, &family, &mk(50)).unwrap();
        let large = empirical_gap(&pool, &test, &family, &mk(500)).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&large.per_trial_max_gap) <= mean(&small.per_trial_max_gap),
            "m=500 mean gap {} vs m=50 mean gap {}",
            mean(&large.per_trial_max_gap),
            mean(&small.per_trial_max_gap)
        );
    }

    #[test]
    fn gap_checker_validates_its_inputs() {
        let pool = generate_blobs(3, 10, &ring_centers(3, 6.0), 1.0, 1).unwrap();
        let test = generate_blobs(3, 100, &ring_centers(3, 6.0), 1.0, 2).unwrap();
        let family = small_family();
        let cfg = GapConfig {
            train_size: 30,
            trials: 1,
            epsilon: 0.1,
            metric: GapMetric::ZeroOne,
            train: TrainConfig::default(),
            seed: 1,
        };
        // 300 test rows satisfy the 10x rule for train_size 30.
        assert!(empirical_gap(&pool, &test, &family, &cfg).is_ok());
        // 60 test rows do not.
        let tiny_test = generate_blobs(3, 20, &ring_centers(3, 6.0), 1.0, 2).unwrap();
        assert!(matches!(
            empirical_gap(&pool, &tiny_test, &family, &cfg),
            Err(Error::Config(_))
        ));
        let bad = GapConfig { train_size: 0, ..cfg };
        assert!(matches!(
            empirical_gap(&pool, &test, &family, &bad),
            Err(Error::Capacity { .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn monotonicities_hold_before_clamping(
                m in 1usize..10_000,
                eps in 1e-3f64..2.0,
                fam in 1usize..50,
                width in 0.1f64..10.0,
            ) {
                let q = BoundQuery::new(m, eps, fam, (0.0, width)).unwrap();
                let base = delta_unclamped(&q);
                // Below ~1e-300 the exp underflows and strictness collapses.
                prop_assume!(base > 1e-300);

                let more_data = BoundQuery::new(2 * m, eps, fam, (0.0, width)).unwrap();
                prop_assert!(delta_unclamped(&more_data) < base);

                let looser = BoundQuery::new(m, eps * 1.5, fam, (0.0, width)).unwrap();
                prop_assert!(delta_unclamped(&looser) < base);

                let bigger_family = BoundQuery::new(m, eps, fam + 1, (0.0, width)).unwrap();
                prop_assert!(delta_unclamped(&bigger_family) > base);

                let wider = BoundQuery::new(m, eps, fam, (0.0, width * 2.0)).unwrap();
                prop_assert!(delta_unclamped(&wider) > base);
            }

            #[test]
            fn inversion_is_exact_in_the_unclamped_regime(
                m in 1usize..10_000,
                eps in 1e-3f64..2.0,
                fam in 1usize..50,
            ) {
                let q = BoundQuery::new(m, eps, fam, (0.0, 1.0)).unwrap();
                let delta = delta_unclamped(&q);
                prop_assume!(delta > 1e-300);
                let back = epsilon_for(m, delta, fam, (0.0, 1.0)).unwrap();
                prop_assert!((back - eps).abs() <= 1e-12 * eps.max(1.0));
            }
        }
    }
}
