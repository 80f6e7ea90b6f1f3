//! Statistical estimators and hypothesis checks: density of states, Wegner
//! and Minami ratios, Poisson goodness-of-fit, eigenfunction decay and
//! quasimode verification, eigenvalue matching across decomposition scales,
//! and the a-priori tail bound.

pub mod decay;
pub mod dos;
pub mod gof;
pub mod matching;
pub mod poisson;
pub mod tail;
pub mod wegner;

/// Wilson score interval for a binomial proportion: `successes` out of `n`
/// at critical value `z` (1.96 for 95%).
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    assert!(n > 0, "Wilson interval of an empty sample");
    assert!(successes <= n);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (0 for fewer than two points).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn stderr(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::INFINITY;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}
