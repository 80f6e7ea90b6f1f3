//! Density-of-states estimators: window-count histogram and Cauchy-kernel
//! (imaginary part of the Green trace).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::operator::{
    assemble, sample_potential, BoundaryCondition, Hamiltonian, OperatorError, PotentialSpec,
};
use crate::spectral::{count_in, Interval};
use crate::stats::{mean, stderr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosMethod {
    Histogram,
    CauchyKernel,
}

/// A density-of-states point estimate n̂(E0) with its Monte Carlo error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DosEstimate {
    pub e0: f64,
    pub n_hat: f64,
    pub stderr: f64,
    pub method: DosMethod,
    /// Energy half-width (histogram) or scaled Cauchy width τ (kernel).
    pub bandwidth: f64,
    pub n_samples: usize,
    /// Realizations dropped because of singular solves.
    pub skipped: usize,
}

/// Monte Carlo ensemble description shared by the estimator drivers.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub potential: PotentialSpec,
    pub dim: usize,
    pub side: i64,
    pub lambda: f64,
    pub bc: BoundaryCondition,
    pub seed: u64,
    pub n_samples: usize,
}

impl Ensemble {
    /// Assemble the Hamiltonian of realization `index`.
    pub fn hamiltonian(&self, index: u64) -> Result<Hamiltonian, OperatorError> {
        let box_ = crate::lattice::LatticeBox::new(self.dim, self.side, vec![0; self.dim])
            .expect("validated ensemble geometry");
        let real = sample_potential(&self.potential, &box_, self.seed, index)?;
        assemble(&box_, &real, self.lambda, self.bc)
    }
}

/// Histogram estimator: n̂ = Ê[N(H, I(E0, h))]/(2h|Λ|).
pub fn estimate_dos_histogram(
    ens: &Ensemble,
    e0: f64,
    halfwidth: f64,
) -> Result<DosEstimate, OperatorError> {
    assert!(halfwidth > 0.0, "halfwidth must be positive");
    assert!(ens.n_samples > 0, "zero samples");
    let window = Interval::centered(e0, halfwidth);
    let mut densities = Vec::with_capacity(ens.n_samples);
    for index in 0..ens.n_samples as u64 {
        let h = ens.hamiltonian(index)?;
        let volume = h.len() as f64;
        let n = count_in(&h, window).expect("count within dense cap");
        densities.push(n as f64 / (volume * 2.0 * halfwidth));
    }
    Ok(DosEstimate {
        e0,
        n_hat: mean(&densities),
        stderr: stderr(&densities),
        method: DosMethod::Histogram,
        bandwidth: halfwidth,
        n_samples: densities.len(),
        skipped: 0,
    })
}

/// Normalized Green trace (1/|Λ|)·Im Tr G(z): one factorization, |Λ| solves.
pub fn im_trace_green(h: &Hamiltonian, z: Complex64) -> Result<f64, OperatorError> {
    let n = h.len();
    let mut total = 0.0;
    for y in 0..n {
        let g = crate::operator::green_column(h, z, y)?;
        total += g[y].im;
    }
    Ok(total / n as f64)
}

/// Cauchy-kernel estimator: n̂ = (1/π|Λ|)·Ê[Im Tr G(E0 + iτ/|Λ|)].
/// τ is in scaled energy units. Singular realizations are skipped and
/// counted.
pub fn estimate_dos_cauchy(ens: &Ensemble, e0: f64, tau: f64) -> Result<DosEstimate, OperatorError> {
    assert!(tau > 0.0, "tau must be positive");
    assert!(ens.n_samples > 0, "zero samples");
    let mut values = Vec::with_capacity(ens.n_samples);
    let mut skipped = 0usize;
    for index in 0..ens.n_samples as u64 {
        let h = ens.hamiltonian(index)?;
        let volume = h.len() as f64;
        let z = Complex64::new(e0, tau / volume);
        match im_trace_green(&h, z) {
            Ok(t) => values.push(t / std::f64::consts::PI),
            Err(OperatorError::SingularEnergy(..)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    assert!(!values.is_empty(), "all realizations skipped");
    Ok(DosEstimate {
        e0,
        n_hat: mean(&values),
        stderr: stderr(&values),
        method: DosMethod::CauchyKernel,
        bandwidth: tau,
        n_samples: values.len(),
        skipped,
    })
}

/// Exact free d=1 density of states 1/(π√(4−E²)) (|E| < 2).
pub fn free_dos_1d(e: f64) -> f64 {
    if e.abs() >= 2.0 {
        0.0
    } else {
        1.0 / (std::f64::consts::PI * (4.0 - e * e).sqrt())
    }
}
