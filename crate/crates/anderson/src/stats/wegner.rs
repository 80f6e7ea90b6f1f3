//! Wegner and Minami window scans: empirical first and second factorial
//! moments of eigenvalue counts in small energy windows.

use serde::{Deserialize, Serialize};

use crate::operator::OperatorError;
use crate::spectral::{count_in, Interval};
use crate::stats::dos::Ensemble;
use crate::stats::{mean, stderr};

/// One window row of a Wegner scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WegnerRow {
    pub window: (f64, f64),
    pub mean_count: f64,
    pub stderr: f64,
    /// Ê[N]/(|Λ||J|).
    pub ratio: f64,
    /// 95% CI of the ratio (infinite for a single sample).
    pub ratio_ci: (f64, f64),
}

/// Empirical Wegner report over a grid of windows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WegnerReport {
    pub rows: Vec<WegnerRow>,
    /// max ratio over windows.
    pub c_w_hat: f64,
    /// Analytic bound ‖ρ‖_∞/λ for an absolutely continuous potential.
    pub theory_bound: f64,
    pub n_samples: usize,
}

/// Per-realization counts for every window: the raw material of both scans.
fn window_counts(ens: &Ensemble, windows: &[Interval]) -> Result<Vec<Vec<usize>>, OperatorError> {
    let mut all = Vec::with_capacity(windows.len());
    for _ in windows {
        all.push(Vec::with_capacity(ens.n_samples));
    }
    for index in 0..ens.n_samples as u64 {
        let h = ens.hamiltonian(index)?;
        for (w, counts) in windows.iter().zip(all.iter_mut()) {
            counts.push(count_in(&h, *w).expect("count within dense cap"));
        }
    }
    Ok(all)
}

/// Empirical Wegner scan: Ê[N(H,J)]/(|Λ||J|) per window.
pub fn wegner_scan(ens: &Ensemble, windows: &[Interval]) -> Result<WegnerReport, OperatorError> {
    assert!(!windows.is_empty());
    let volume = (ens.side as f64).powi(ens.dim as i32);
    let counts = window_counts(ens, windows)?;
    let mut rows = Vec::with_capacity(windows.len());
    for (w, cs) in windows.iter().zip(&counts) {
        let xs: Vec<f64> = cs.iter().map(|&c| c as f64).collect();
        let m = mean(&xs);
        let se = stderr(&xs);
        let denom = volume * w.width();
        let half = 1.96 * se / denom;
        let ratio = m / denom;
        let ci = if xs.len() < 2 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (ratio - half, ratio + half)
        };
        rows.push(WegnerRow {
            window: (w.lo, w.hi),
            mean_count: m,
            stderr: se,
            ratio,
            ratio_ci: ci,
        });
    }
    let c_w_hat = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    Ok(WegnerReport {
        rows,
        c_w_hat,
        theory_bound: ens.potential.density_sup() / ens.lambda,
        n_samples: ens.n_samples,
    })
}

/// One window row of a Minami scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinamiRow {
    pub window: (f64, f64),
    /// Ê[Σ k(k−1)1_{N=k}] = Ê[N(N−1)].
    pub sum_kk1: f64,
    pub stderr: f64,
    /// sum/(|Λ|²|J|²).
    pub ratio: f64,
    pub ratio_ci: (f64, f64),
    /// P̂(N ≥ 2): the B-term probability for this window.
    pub p_ge2: f64,
}

/// Empirical Minami report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinamiReport {
    pub rows: Vec<MinamiRow>,
    pub c_m_hat: f64,
    pub n_samples: usize,
}

/// Empirical Minami scan: Ê[N(N−1)]/(|Λ|²|J|²) per window, plus P(N≥2).
pub fn minami_scan(ens: &Ensemble, windows: &[Interval]) -> Result<MinamiReport, OperatorError> {
    assert!(!windows.is_empty());
    let volume = (ens.side as f64).powi(ens.dim as i32);
    let counts = window_counts(ens, windows)?;
    let mut rows = Vec::with_capacity(windows.len());
    for (w, cs) in windows.iter().zip(&counts) {
        let xs: Vec<f64> = cs.iter().map(|&c| (c * c.saturating_sub(1)) as f64).collect();
        let m = mean(&xs);
        let se = stderr(&xs);
        let denom = (volume * w.width()).powi(2);
        let ratio = m / denom;
        let half = 1.96 * se / denom;
        let ci = if xs.len() < 2 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (ratio - half, ratio + half)
        };
        let ge2 = cs.iter().filter(|&&c| c >= 2).count() as f64 / cs.len().max(1) as f64;
        rows.push(MinamiRow {
            window: (w.lo, w.hi),
            sum_kk1: m,
            stderr: se,
            ratio,
            ratio_ci: ci,
            p_ge2: ge2,
        });
    }
    let c_m_hat = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    Ok(MinamiReport {
        rows,
        c_m_hat,
        n_samples: ens.n_samples,
    })
}

/// Mid-spectrum window grid: `count` adjacent windows of width `width`
/// centered on `e0`.
pub fn window_grid(e0: f64, width: f64, count: usize) -> Vec<Interval> {
    let start = e0 - width * count as f64 / 2.0;
    (0..count)
        .map(|i| Interval::new(start + i as f64 * width, start + (i + 1) as f64 * width))
        .collect()
}
