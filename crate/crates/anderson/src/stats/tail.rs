//! A-priori tail bound check: the rescaled process integrated against a
//! Cauchy-type kernel is controlled by a Wegner term plus a far-tail term.

use serde::{Deserialize, Serialize};

/// ξ(f) for the Cauchy kernel f(x) = τ/((x−σ)²+τ²) on scaled energies.
pub fn xi_cauchy(scaled_energies: &[f64], sigma: f64, tau: f64) -> f64 {
    scaled_energies
        .iter()
        .map(|x| {
            let d = x - sigma;
            tau / (d * d + tau * tau)
        })
        .sum()
}

/// ∫_{|x|<m} τ/((x−σ)²+τ²) dx = atan((m−σ)/τ) + atan((m+σ)/τ).
pub fn cauchy_mass_within(m: f64, sigma: f64, tau: f64) -> f64 {
    ((m - sigma) / tau).atan() + ((m + sigma) / tau).atan()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    /// Per-realization left-hand sides ξ_r(g).
    pub lhs: Vec<f64>,
    /// Common right-hand side C_W·∫_{|x|<r|Λ|}|g| + C_R/(r²|Λ|).
    pub rhs: f64,
    pub fraction_holding: f64,
    pub mean_lhs: f64,
}

/// Check ξ_r(g) ≤ C_W·∫_{|x|<r|Λ|}|g| + C_R/(r²|Λ|) per realization, with
/// g the Cauchy kernel (σ, τ) in scaled energy.
///
/// * `samples` — scaled energies (|Λ|(E_j − E0)) of every eigenvalue, one
///   vector per realization.
/// * `c_w` — Wegner constant (e.g. ‖ρ‖_∞/λ).
/// * `r` — distance of E0 to the boundary of the energy region (unscaled).
/// * `c_r`, `big_r` — tail-domination constants: |g(x)| ≤ C_R/x² for |x| ≥ R.
#[allow(clippy::too_many_arguments)]
pub fn apriori_tail_check(
    samples: &[Vec<f64>],
    volume: f64,
    c_w: f64,
    r: f64,
    sigma: f64,
    tau: f64,
    c_r: f64,
    big_r: f64,
) -> TailReport {
    assert!(
        r * volume >= big_r,
        "precondition violated: r|Λ| = {} < R = {big_r}",
        r * volume
    );
    let rhs = c_w * cauchy_mass_within(r * volume, sigma, tau) + c_r / (r * r * volume);
    let lhs: Vec<f64> = samples
        .iter()
        .map(|es| xi_cauchy(es, sigma, tau))
        .collect();
    let holding = lhs.iter().filter(|&&v| v <= rhs).count();
    let mean_lhs = crate::stats::mean(&lhs);
    TailReport {
        fraction_holding: if lhs.is_empty() {
            1.0
        } else {
            holding as f64 / lhs.len() as f64
        },
        lhs,
        rhs,
        mean_lhs,
    }
}
