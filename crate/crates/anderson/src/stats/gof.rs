//! Goodness-of-fit primitives: Kolmogorov–Smirnov against an arbitrary CDF
//! and chi-square with small-expectation bin merging.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Result of a one-sample KS test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample KS statistic sup|F_n − F| for a sample against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x).clamp(0.0, 1.0);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic Kolmogorov survival function Q(t) = 2Σ(−1)^{k−1}e^{−2k²t²}.
fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test with the Stephens small-sample correction of the
/// asymptotic p-value.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let n = sample.len();
    assert!(n > 0, "KS test on an empty sample");
    let d = ks_statistic(sample, cdf);
    let sqrt_n = (n as f64).sqrt();
    let t = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(t),
        n,
    }
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins after merging low-expectation cells.
    pub bins_used: usize,
    /// Test could not run (fewer than two usable bins).
    pub underpowered: bool,
}

/// Chi-square GOF of observed counts against expected counts. Adjacent bins
/// are merged until every expected cell is ≥ 5. `fitted_params` reduces the
/// degrees of freedom.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], fitted_params: usize) -> ChiSquareResult {
    assert_eq!(observed.len(), expected.len());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0f64, 0.0f64);
    for (&o, &e) in observed.iter().zip(expected) {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= 5.0 {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        if let Some(last) = merged.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            merged.push(acc);
        }
    }
    let bins_used = merged.len();
    if bins_used < 2 {
        return ChiSquareResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            bins_used,
            underpowered: true,
        };
    }
    let statistic: f64 = merged
        .iter()
        .map(|&(o, e)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let dof = bins_used.saturating_sub(1 + fitted_params).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    ChiSquareResult {
        statistic,
        dof,
        p_value: (1.0 - dist.cdf(statistic)).clamp(0.0, 1.0),
        bins_used,
        underpowered: false,
    }
}

/// Poisson pmf P(N = k) for mean `mu`.
pub fn poisson_pmf(k: usize, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let mut log_p = -mu + k as f64 * mu.ln();
    for i in 1..=k {
        log_p -= (i as f64).ln();
    }
    log_p.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn ks_statistic_hand_example() {
        // single point at 0.5 vs uniform: D = 0.5 exactly
        let d = ks_statistic(&[0.5], |x| x);
        assert!((d - 0.5).abs() < 1e-12);
        // perfectly placed grid i/(n+1)… D = 1/(n+1) + small
        let n = 99;
        let grid: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let d = ks_statistic(&grid, |x| x);
        assert!(d <= 1.0 / n as f64 + 1e-9, "{d}");
    }

    #[test]
    fn ks_accepts_true_law_and_rejects_wrong_law() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let sample: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
        let ok = ks_test(&sample, |x| x.clamp(0.0, 1.0));
        assert!(ok.p_value > 0.01, "true law rejected: p={}", ok.p_value);
        // exponential(1) data against uniform must reject decisively
        let exp_sample: Vec<f64> = sample.iter().map(|u| -(1.0 - u).ln()).collect();
        let bad = ks_test(&exp_sample, |x| x.clamp(0.0, 1.0));
        assert!(bad.p_value < 1e-6, "wrong law accepted: p={}", bad.p_value);
    }

    #[test]
    fn ks_p_value_roughly_uniform_under_null() {
        // calibration: the 1% rejection rate should be ≈ 1%
        let mut rejections = 0;
        for seed in 0..300 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let sample: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
            if ks_test(&sample, |x| x.clamp(0.0, 1.0)).p_value < 0.01 {
                rejections += 1;
            }
        }
        assert!(rejections <= 9, "{rejections} rejections out of 300 at 1%");
    }

    #[test]
    fn chi_square_known_example() {
        // fair die, 120 rolls: observed vs expected 20 each
        let observed = [22.0, 17.0, 20.0, 26.0, 15.0, 20.0];
        let expected = [20.0; 6];
        let r = chi_square_gof(&observed, &expected, 0);
        assert_eq!(r.dof, 5);
        // statistic = (4+9+0+36+25+0)/20 = 3.7
        assert!((r.statistic - 3.7).abs() < 1e-12);
        assert!(r.p_value > 0.5 && r.p_value < 0.7, "p={}", r.p_value);
    }

    #[test]
    fn chi_square_merges_small_bins() {
        let observed = [50.0, 30.0, 2.0, 1.0, 1.0];
        let expected = [48.0, 30.0, 3.0, 2.0, 1.0];
        let r = chi_square_gof(&observed, &expected, 0);
        assert!(r.bins_used < 5);
        assert!(!r.underpowered);
    }

    #[test]
    fn chi_square_degenerate_is_underpowered() {
        let r = chi_square_gof(&[3.0], &[3.0], 0);
        assert!(r.underpowered);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn poisson_pmf_normalizes() {
        let mu = 3.7;
        let total: f64 = (0..60).map(|k| poisson_pmf(k, mu)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((poisson_pmf(0, mu) - (-mu).exp()).abs() < 1e-15);
        // mean
        let m: f64 = (0..60).map(|k| k as f64 * poisson_pmf(k, mu)).sum();
        assert!((m - mu).abs() < 1e-10);
    }
}
