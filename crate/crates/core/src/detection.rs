//! Single-event Monte Carlo accumulation over a screen pattern and the
//! statistics used to compare counts against analytic patterns.
//!
//! Events are drawn from the normalized pattern by inverse-CDF lookup, not
//! by per-event wavefunction collapse; the two are distributionally
//! identical here and the former is O(1) per event. Sampling is sharded in
//! fixed blocks of [`SHARD_SIZE`] events; shard `i` uses ChaCha8 stream `i`
//! of the run seed, so a parallel run merges to exactly the sequential
//! result and identical `(pattern, n_events, seed)` triples produce
//! bit-identical histograms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::experiment::{visibility_of_samples, window_indices, IntensityPattern};
use crate::grid::GridSpec;

/// Events per RNG shard.
pub const SHARD_SIZE: u64 = 1 << 16;

/// ChaCha stream reserved for bootstrap resampling.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

/// Number of bootstrap replicas behind a visibility standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Detected event counts over the screen grid of the sampled pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionHistogram {
    screen: GridSpec,
    counts: Vec<u64>,
    total: u64,
    seed: u64,
}

impl DetectionHistogram {
    pub fn screen(&self) -> &GridSpec {
        &self.screen
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Counts as floats, for the shared pattern-analysis routines.
    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

fn shard_counts(
    cdf: &[f64],
    events: u64,
    seed: u64,
    stream: u64,
) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut counts = vec![0u64; cdf.len()];
    for _ in 0..events {
        let u: f64 = rng.random();
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        counts[idx] += 1;
    }
    counts
}

/// Draw `n_events` i.i.d. detections from the normalized pattern.
pub fn sample_detections(
    pattern: &IntensityPattern,
    n_events: u64,
    seed: u64,
) -> Result<DetectionHistogram> {
    if n_events == 0 {
        return Err(Error::parameter("n_events", "must be at least 1"));
    }
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let probabilities = pattern.probabilities()?;
    let mut cdf = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in &probabilities {
        acc += p;
        cdf.push(acc);
    }
    // swallow the last-ulps of rounding so every draw lands in a bin
    *cdf.last_mut().expect("non-empty") = 1.0;

    let shards = n_events.div_ceil(SHARD_SIZE);
    let per_shard: Vec<Vec<u64>> = (0..shards)
        .into_par_iter()
        .map(|i| {
            let events = SHARD_SIZE.min(n_events - i * SHARD_SIZE);
            shard_counts(&cdf, events, seed, i)
        })
        .collect();
    let mut counts = vec![0u64; cdf.len()];
    for shard in per_shard {
        for (total, c) in counts.iter_mut().zip(shard) {
            *total += c;
        }
    }
    Ok(DetectionHistogram {
        screen: pattern.screen().clone(),
        counts,
        total: n_events,
        seed,
    })
}

/// Pearson chi-square result.
#[derive(Debug, Clone, Copy)]
pub struct GofReport {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of a histogram against the bin probabilities of a
/// pattern, merging adjacent bins until every group expects at least 5
/// counts.
pub fn histogram_gof(hist: &DetectionHistogram, pattern: &IntensityPattern) -> Result<GofReport> {
    if hist.screen != *pattern.screen() {
        return Err(Error::GridMismatch {
            context: "histogram_gof",
        });
    }
    if hist.total == 0 {
        return Err(Error::NoData);
    }
    let probabilities = pattern.probabilities()?;
    let total = hist.total as f64;

    let mut groups: Vec<(f64, f64)> = Vec::new(); // (expected, observed)
    let mut exp_acc = 0.0;
    let mut obs_acc = 0.0;
    for (p, &c) in probabilities.iter().zip(hist.counts.iter()) {
        exp_acc += p * total;
        obs_acc += c as f64;
        if exp_acc >= 5.0 {
            groups.push((exp_acc, obs_acc));
            exp_acc = 0.0;
            obs_acc = 0.0;
        }
    }
    if exp_acc > 0.0 || obs_acc > 0.0 {
        if let Some(last) = groups.last_mut() {
            last.0 += exp_acc;
            last.1 += obs_acc;
        }
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientCounts {
            reason: "fewer than two merged bins with expected counts >= 5".into(),
        });
    }
    let chi2: f64 = groups
        .iter()
        .map(|(e, o)| (o - e) * (o - e) / e)
        .sum();
    let dof = groups.len() - 1;
    let p_value = gamma_ur(dof as f64 / 2.0, chi2 / 2.0);
    Ok(GofReport { chi2, dof, p_value })
}

/// Multinomial resample of the histogram by chained binomials.
fn resample(counts: &[u64], total: u64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = vec![0.0f64; counts.len()];
    let mut remaining_n = total;
    let mut remaining_w = total as f64;
    for (k, &c) in counts.iter().enumerate() {
        if remaining_n == 0 {
            break;
        }
        let w = c as f64;
        let p = if remaining_w > 0.0 { (w / remaining_w).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if p >= 1.0 {
            remaining_n
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(remaining_n, p).expect("valid binomial").sample(rng)
        };
        out[k] = draw as f64;
        remaining_n -= draw;
        remaining_w -= w;
    }
    out
}

/// Visibility of the count histogram over a window, with a bootstrap
/// standard error ([`BOOTSTRAP_RESAMPLES`] replicas seeded from the run
/// seed).
pub fn visibility_from_histogram(hist: &DetectionHistogram, window: f64) -> Result<(f64, f64)> {
    if hist.total == 0 {
        return Err(Error::NoData);
    }
    let (lo, hi) = window_indices(&hist.screen, window)?;
    let in_window: u64 = hist.counts[lo..=hi].iter().sum();
    let bins = (hi - lo + 1) as u64;
    // envelope-level sufficiency: ≥ 10 expected per window bin on average
    if in_window < 10 * bins {
        return Err(Error::InsufficientCounts {
            reason: format!(
                "{in_window} events over {bins} window bins; need an average of at least 10"
            ),
        });
    }
    let values = hist.counts_f64();
    let estimate = visibility_of_samples(&hist.screen, &values, window)?;

    let mut rng = ChaCha8Rng::seed_from_u64(hist.seed);
    rng.set_stream(BOOTSTRAP_STREAM);
    let mut replicas = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let sample = resample(&hist.counts, hist.total, &mut rng);
        replicas.push(visibility_of_samples(&hist.screen, &sample, window)?);
    }
    let mean = replicas.iter().sum::<f64>() / replicas.len() as f64;
    let var = replicas.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (replicas.len() - 1) as f64;
    Ok((estimate, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn uniform_pattern(bins: usize) -> IntensityPattern {
        let screen = make_grid(-0.5, 0.5, bins, false).unwrap();
        IntensityPattern::from_samples(screen, &vec![1.0; bins]).unwrap()
    }

    #[test]
    fn uniform_sampling_is_binomially_consistent() {
        let pattern = uniform_pattern(100);
        let n = 1_000_000u64;
        let hist = sample_detections(&pattern, n, 42).unwrap();
        assert_eq!(hist.total(), n);
        assert_eq!(hist.counts().iter().sum::<u64>(), n);
        let p = 0.01f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in hist.counts() {
            assert!((c as f64 - n as f64 * p).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn delta_pattern_sends_every_event_to_one_bin() {
        let screen = make_grid(-0.5, 0.5, 16, false).unwrap();
        let mut values = vec![0.0; 16];
        values[5] = 3.0;
        let pattern = IntensityPattern::from_samples(screen, &values).unwrap();
        let hist = sample_detections(&pattern, 10_000, 7).unwrap();
        assert_eq!(hist.counts()[5], 10_000);
    }

    #[test]
    fn sampling_is_deterministic_and_matches_sequential_shards() {
        let pattern = uniform_pattern(64);
        let n = 3 * SHARD_SIZE / 2; // straddles a shard boundary
        let a = sample_detections(&pattern, n, 99).unwrap();
        let b = sample_detections(&pattern, n, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_detections(&pattern, n, 100).unwrap());

        // sequential shard walk reproduces the parallel merge
        let probabilities = pattern.probabilities().unwrap();
        let mut cdf: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for p in probabilities {
            acc += p;
            cdf.push(acc);
        }
        *cdf.last_mut().unwrap() = 1.0;
        let mut manual = vec![0u64; cdf.len()];
        let mut remaining = n;
        let mut stream = 0u64;
        while remaining > 0 {
            let events = SHARD_SIZE.min(remaining);
            for (total, c) in manual.iter_mut().zip(shard_counts(&cdf, events, 99, stream)) {
                *total += c;
            }
            remaining -= events;
            stream += 1;
        }
        assert_eq!(a.counts(), manual.as_slice());
    }

    #[test]
    fn rejects_empty_patterns_and_zero_events() {
        let screen = make_grid(-0.5, 0.5, 16, false).unwrap();
        let empty = IntensityPattern::from_samples(screen, &vec![0.0; 16]).unwrap();
        assert!(matches!(
            sample_detections(&empty, 10, 1),
            Err(Error::EmptyPattern)
        ));
        assert!(sample_detections(&uniform_pattern(16), 0, 1).is_err());
    }

    #[test]
    fn gof_is_calibrated_under_the_null() {
        let pattern = uniform_pattern(50);
        let mut below = 0;
        for seed in 0..100 {
            let hist = sample_detections(&pattern, 20_000, seed).unwrap();
            let report = histogram_gof(&hist, &pattern).unwrap();
            if report.p_value < 0.05 {
                below += 1;
            }
        }
        // binomial CI on the 5% quantile over 100 runs
        assert!(
            (1..=12).contains(&below),
            "{below} of 100 p-values below 0.05"
        );
    }

    #[test]
    fn gof_distinguishes_wrong_patterns_and_rejects_no_data() {
        let screen = make_grid(-0.5, 0.5, 50, false).unwrap();
        let flat = uniform_pattern(50);
        let sloped: Vec<f64> = (0..50).map(|k| 1.0 + 0.2 * k as f64 / 50.0).collect();
        let sloped = IntensityPattern::from_samples(screen, &sloped).unwrap();
        let hist = sample_detections(&sloped, 100_000, 5).unwrap();
        let wrong = histogram_gof(&hist, &flat).unwrap();
        assert!(wrong.p_value < 1e-6, "p = {}", wrong.p_value);
        let right = histogram_gof(&hist, &sloped).unwrap();
        assert!(right.p_value > 0.01);

        let none = DetectionHistogram {
            screen: flat.screen().clone(),
            counts: vec![0; 50],
            total: 0,
            seed: 0,
        };
        assert!(matches!(histogram_gof(&none, &flat), Err(Error::NoData)));
    }

    fn fringed_pattern() -> IntensityPattern {
        // three fringes across the screen, V = 1
        let screen = make_grid(-7.5e-4, 7.5e-4, 60, false).unwrap();
        let spacing = 5e-4;
        let values: Vec<f64> = (0..60)
            .map(|k| {
                let x = screen.point(k);
                1.0 + (std::f64::consts::TAU * x / spacing).cos()
            })
            .collect();
        IntensityPattern::from_samples(screen, &values).unwrap()
    }

    #[test]
    fn histogram_visibility_converges_with_events() {
        let pattern = fringed_pattern();
        let window = 1.5e-3;
        let analytic = crate::experiment::visibility(&pattern, window).unwrap();
        let hist = sample_detections(&pattern, 1_000_000, 31).unwrap();
        let (v, stderr_large) = visibility_from_histogram(&hist, window).unwrap();
        assert!((v - analytic).abs() < 0.02, "V = {v} vs {analytic}");

        let small = sample_detections(&pattern, 1_000, 31).unwrap();
        let (_, stderr_small) = visibility_from_histogram(&small, window).unwrap();
        assert!(
            stderr_small >= 5.0 * stderr_large,
            "stderr {stderr_small} vs {stderr_large}"
        );

        let starved = sample_detections(&pattern, 300, 31).unwrap();
        assert!(matches!(
            visibility_from_histogram(&starved, window),
            Err(Error::InsufficientCounts { .. })
        ));
    }

    #[test]
    fn disjoint_seeds_produce_compatible_histograms() {
        let pattern = fringed_pattern();
        let mut failures = 0;
        for pair in 0..20u64 {
            let a = sample_detections(&pattern, 40_000, 1000 + 2 * pair).unwrap();
            let b = sample_detections(&pattern, 40_000, 1001 + 2 * pair).unwrap();
            // two-sample chi-square with adjacent merging
            let mut groups: Vec<(f64, f64)> = Vec::new();
            let (mut acc_a, mut acc_b) = (0.0, 0.0);
            for (&ca, &cb) in a.counts().iter().zip(b.counts()) {
                acc_a += ca as f64;
                acc_b += cb as f64;
                if acc_a + acc_b >= 10.0 {
                    groups.push((acc_a, acc_b));
                    acc_a = 0.0;
                    acc_b = 0.0;
                }
            }
            let chi2: f64 = groups
                .iter()
                .filter(|(x, y)| x + y > 0.0)
                .map(|(x, y)| (x - y) * (x - y) / (x + y))
                .sum();
            let dof = groups.len().saturating_sub(1);
            let p = gamma_ur(dof as f64 / 2.0, chi2 / 2.0);
            if p <= 0.001 {
                failures += 1;
            }
        }
        assert!(failures <= 1, "{failures} of 20 pairs incompatible");
    }
}
