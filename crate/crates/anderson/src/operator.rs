//! The Anderson Hamiltonian H = hopping + λV on a finite box, its disorder,
//! Green functions, and (γ, E)-regularity certification.
//!
//! Disorder is sampled counter-based: a master seed selects the generator and
//! the realization index selects the stream, so distinct realizations are
//! independent and reproducible under any parallel execution order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{boundary_sets, LatticeBox, LatticeError};

pub mod solve;

/// Relative pivot below which a shifted system counts as singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-12;
/// Residual tolerance for Green-function solves.
pub const GREEN_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("invalid potential parameters: {0}")]
    BadPotential(String),
    #[error("realization was sampled on a different box")]
    BoxMismatch,
    #[error("site {0:?} not contained in the box")]
    SiteOutsideBox(Vec<i64>),
    #[error("energy z = {0} is (numerically) in the spectrum: relative pivot {1:.3e}")]
    SingularEnergy(Complex64, f64),
    #[error("green solve residual {0:.3e} exceeds tolerance")]
    ResidualTooLarge(f64),
    #[error("regularity check requires a box of odd side centered at the probe site")]
    NotCentered,
    #[error("n_samples must be >= 1")]
    ZeroSamples,
}

/// On-site potential distribution ν. All kinds sample i.i.d. across sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// Uniform on [lo, hi).
    Uniform { lo: f64, hi: f64 },
    /// ±1 valued, P(+1) = p. No density; `density_sup` is ∞.
    Bernoulli { p: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), OperatorError> {
        match *self {
            PotentialSpec::Uniform { lo, hi } if !(hi > lo) => Err(OperatorError::BadPotential(
                format!("uniform needs lo < hi, got [{lo}, {hi})"),
            )),
            PotentialSpec::Bernoulli { p } if !(0.0..=1.0).contains(&p) => Err(
                OperatorError::BadPotential(format!("bernoulli needs p in [0,1], got {p}")),
            ),
            PotentialSpec::Gaussian { std, .. } if !(std > 0.0) => Err(
                OperatorError::BadPotential(format!("gaussian needs std > 0, got {std}")),
            ),
            _ => Ok(()),
        }
    }

    /// ‖ρ‖_∞ of the single-site density; ∞ for atomic distributions.
    pub fn density_sup(&self) -> f64 {
        match *self {
            PotentialSpec::Uniform { lo, hi } => 1.0 / (hi - lo),
            PotentialSpec::Bernoulli { .. } => f64::INFINITY,
            PotentialSpec::Gaussian { std, .. } => 1.0 / (std * (2.0 * std::f64::consts::PI).sqrt()),
        }
    }

    fn sample_one<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            PotentialSpec::Uniform { lo, hi } => rng.gen::<f64>() * (hi - lo) + lo,
            PotentialSpec::Bernoulli { p } => {
                if rng.gen::<f64>() < p {
                    1.0
                } else {
                    -1.0
                }
            }
            PotentialSpec::Gaussian { mean, std } => {
                rand_distr::Normal::new(mean, std).unwrap().sample(rng)
            }
        }
    }
}

/// Deterministic per-realization generator: the master seed keys the cipher
/// and the realization index selects the stream.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One sample of the potential field V_ω on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub box_: LatticeBox,
    /// V_ω(x) in box site order.
    pub values: Vec<f64>,
    pub seed: u64,
    pub index: u64,
}

/// Draw i.i.d. potential values on `box_`, reproducible from (seed, index).
pub fn sample_potential(
    spec: &PotentialSpec,
    box_: &LatticeBox,
    seed: u64,
    index: u64,
) -> Result<DisorderRealization, OperatorError> {
    spec.validate()?;
    let mut rng = realization_rng(seed, index);
    let values = (0..box_.len()).map(|_| spec.sample_one(&mut rng)).collect();
    Ok(DisorderRealization {
        box_: box_.clone(),
        values,
        seed,
        index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Periodic,
}

/// H_Λ as diagonal λV plus unit hopping edges. The edge list keeps each
/// unordered pair once.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    box_: LatticeBox,
    coupling: f64,
    bc: BoundaryCondition,
    diag: Vec<f64>,
    hops: Vec<(usize, usize)>,
}

/// Assemble H_Λ = hopping + λ·diag(V) under the requested boundary condition.
pub fn assemble(
    box_: &LatticeBox,
    realization: &DisorderRealization,
    lambda: f64,
    bc: BoundaryCondition,
) -> Result<Hamiltonian, OperatorError> {
    if realization.box_ != *box_ {
        return Err(OperatorError::BoxMismatch);
    }
    let diag = realization.values.iter().map(|v| lambda * v).collect();
    let mut hops = Vec::new();
    let side = box_.side();
    for i in 0..box_.len() {
        let x = box_.site(i);
        for axis in 0..box_.dim() {
            let mut y = x.clone();
            y[axis] += 1;
            if let Some(j) = box_.index_of(&y) {
                hops.push((i, j));
            } else if bc == BoundaryCondition::Periodic && side > 2 {
                // wrap edge; side <= 2 wraps would duplicate an existing edge
                y[axis] -= side;
                let j = box_.index_of(&y).expect("wrapped site is in the box");
                hops.push((i.min(j), i.max(j)));
            }
        }
    }
    hops.sort_unstable();
    hops.dedup();
    Ok(Hamiltonian {
        box_: box_.clone(),
        coupling: lambda,
        bc,
        diag,
        hops,
    })
}

impl Hamiltonian {
    pub fn box_(&self) -> &LatticeBox {
        &self.box_
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn hops(&self) -> &[(usize, usize)] {
        &self.hops
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// ‖H‖ upper bound (row-sum): 2d + max |λV|.
    pub fn norm_bound(&self) -> f64 {
        let vmax = self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        2.0 * self.box_.dim() as f64 + vmax
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, xi)| d * xi).collect();
        for &(i, j) in &self.hops {
            y[i] += x[j];
            y[j] += x[i];
        }
        y
    }

    pub fn matvec_c(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y: Vec<Complex64> = self.diag.iter().zip(x).map(|(d, xi)| d * xi).collect();
        for &(i, j) in &self.hops {
            y[i] += x[j];
            y[j] += x[i];
        }
        y
    }

    /// ‖Hx − Ex‖₂.
    pub fn residual(&self, x: &[f64], e: f64) -> f64 {
        self.matvec(x)
            .iter()
            .zip(x)
            .map(|(hx, xi)| (hx - e * xi).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for &(i, j) in &self.hops {
            m[(i, j)] += 1.0;
            m[(j, i)] += 1.0;
        }
        m
    }

    /// A one-dimensional chain (site order equals chain order).
    pub fn is_chain(&self) -> bool {
        self.box_.dim() == 1 && self.bc == BoundaryCondition::Dirichlet
    }

    /// A one-dimensional ring with a single wrap edge.
    pub fn is_ring(&self) -> bool {
        self.box_.dim() == 1 && self.bc == BoundaryCondition::Periodic && self.box_.side() > 2
    }

    /// Dirichlet restriction of this operator to a subset of site indices
    /// (kept in ascending index order).
    pub fn restrict(&self, sub: &[usize]) -> (Vec<f64>, Vec<(usize, usize)>) {
        let mut pos = vec![usize::MAX; self.len()];
        for (k, &i) in sub.iter().enumerate() {
            pos[i] = k;
        }
        let diag = sub.iter().map(|&i| self.diag[i]).collect();
        let hops = self
            .hops
            .iter()
            .filter_map(|&(i, j)| {
                let (a, b) = (pos[i], pos[j]);
                (a != usize::MAX && b != usize::MAX).then_some((a.min(b), a.max(b)))
            })
            .collect();
        (diag, hops)
    }
}

/// Factor (H − z) once; solves give Green columns.
pub(crate) enum ShiftedFactor {
    Chain(solve::TridiagFactor),
    Ring(solve::CyclicFactor),
    Dense(nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl ShiftedFactor {
    pub(crate) fn new(h: &Hamiltonian, z: Complex64) -> Self {
        let n = h.len();
        let shifted: Vec<Complex64> = h.diag.iter().map(|d| Complex64::new(*d, 0.0) - z).collect();
        if h.is_chain() && n > 1 {
            let off = vec![1.0; n - 1];
            ShiftedFactor::Chain(solve::TridiagFactor::new(&shifted, &off))
        } else if h.is_ring() {
            let off = vec![1.0; n - 1];
            ShiftedFactor::Ring(solve::CyclicFactor::new(&shifted, &off, 1.0))
        } else {
            let dense = h.to_dense().map(|v| Complex64::new(v, 0.0))
                - DMatrix::from_diagonal_element(n, n, z);
            ShiftedFactor::Dense(dense.lu())
        }
    }

    /// Smallest relative pivot of the factorization.
    pub(crate) fn pivot_ratio(&self) -> f64 {
        match self {
            ShiftedFactor::Chain(f) => f.pivot_ratio(),
            ShiftedFactor::Ring(f) => f.pivot_ratio(),
            ShiftedFactor::Dense(lu) => {
                let u = lu.u();
                let n = u.nrows();
                let mut min = f64::INFINITY;
                let mut max: f64 = 0.0;
                for i in 0..n {
                    let p = u[(i, i)].norm();
                    min = min.min(p);
                    max = max.max(p);
                }
                if max == 0.0 {
                    0.0
                } else {
                    min / max
                }
            }
        }
    }

    pub(crate) fn solve(&self, b: &mut Vec<Complex64>) {
        match self {
            ShiftedFactor::Chain(f) => f.solve(b),
            ShiftedFactor::Ring(f) => f.solve(b),
            ShiftedFactor::Dense(lu) => {
                let rhs = nalgebra::DVector::from_column_slice(b);
                let x = lu.solve(&rhs).expect("pivot check precedes dense solve");
                b.copy_from_slice(x.as_slice());
            }
        }
    }
}

/// Full Green column G(z; ·, y) = (H − z)^{-1} δ_y, with residual check.
pub fn green_column(
    h: &Hamiltonian,
    z: Complex64,
    y_index: usize,
) -> Result<Vec<Complex64>, OperatorError> {
    let factor = ShiftedFactor::new(h, z);
    let ratio = factor.pivot_ratio();
    if ratio < SINGULAR_PIVOT_TOL {
        return Err(OperatorError::SingularEnergy(z, ratio));
    }
    let mut g = vec![Complex64::new(0.0, 0.0); h.len()];
    g[y_index] = Complex64::new(1.0, 0.0);
    factor.solve(&mut g);
    // residual ||(H - z)g - delta_y||
    let mut r = h.matvec_c(&g);
    for (ri, gi) in r.iter_mut().zip(&g) {
        *ri -= z * gi;
    }
    r[y_index] -= 1.0;
    let res: f64 = r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if res > GREEN_RESIDUAL_TOL {
        return Err(OperatorError::ResidualTooLarge(res));
    }
    Ok(g)
}

/// ⟨δ_x, (H − z)^{-1} δ_y⟩ for sites given as lattice points.
pub fn green(
    h: &Hamiltonian,
    z: Complex64,
    x: &[i64],
    y: &[i64],
) -> Result<Complex64, OperatorError> {
    let xi = h
        .box_
        .index_of(x)
        .ok_or_else(|| OperatorError::SiteOutsideBox(x.to_vec()))?;
    let yi = h
        .box_
        .index_of(y)
        .ok_or_else(|| OperatorError::SiteOutsideBox(y.to_vec()))?;
    Ok(green_column(h, z, yi)?[xi])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    Singular,
    Undecided,
}

/// Bracketed (γ, E)-regularity result: the ε-grid maximum is a lower bracket
/// of sup_ε |G|, the eigen-expansion sum an upper bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub energy: f64,
    pub gamma: f64,
    pub threshold: f64,
    pub sup_estimate: f64,
    pub upper_certificate: f64,
    pub verdict: Verdict,
    /// E ∈ σ(H_Λ) within tolerance, violating the definition's premise.
    pub sigma_violation: bool,
}

/// ε grid for the sup bracket: ε = 0 plus 16 log-spaced points in [1e-8, 1].
fn epsilon_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    let (lo, hi, n) = (1e-8f64, 1.0f64, 16);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        grid.push(lo * (hi / lo).powf(t));
    }
    grid
}

/// Check whether the (odd-sided, centered) box of `h` is (γ, E)-regular.
pub fn regularity_check(
    h: &Hamiltonian,
    e: f64,
    gamma: f64,
    x_center: &[i64],
) -> Result<RegularityReport, OperatorError> {
    let box_ = h.box_();
    if box_.side() % 2 == 0 || box_.center() != x_center {
        return Err(OperatorError::NotCentered);
    }
    let center_idx = box_.index_of(x_center).expect("center is in the box");
    let l = box_.side();
    let threshold = (-gamma * l as f64 / 2.0).exp();

    let spectral = crate::spectral::eigendecompose(h).expect("regularity boxes are small");
    let boundary: Vec<usize> = boundary_sets(box_)
        .inner
        .iter()
        .map(|y| box_.index_of(y).unwrap())
        .collect();

    // Upper bracket: sum_n |psi_n(x) psi_n(y)| / |lambda_n - E|, maximized
    // over boundary sites. Also detects E in sigma(H).
    let min_gap = spectral
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, ev| m.min((ev - e).abs()));
    let sigma_violation = min_gap <= SINGULAR_PIVOT_TOL * h.norm_bound();
    let mut upper_certificate = f64::INFINITY;
    if !sigma_violation {
        upper_certificate = boundary
            .iter()
            .map(|&y| {
                spectral
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(n, ev)| {
                        let psi = &spectral.eigenvectors[n];
                        (psi[center_idx] * psi[y]).abs() / (ev - e).abs()
                    })
                    .sum::<f64>()
            })
            .fold(0.0f64, f64::max);
    }

    // Lower bracket: max over the epsilon grid of |G(E + i eps; x, y)|.
    let mut sup_estimate: f64 = 0.0;
    for eps in epsilon_grid() {
        let z = Complex64::new(e, eps);
        match green_column(h, z, center_idx) {
            Ok(g) => {
                for &y in &boundary {
                    sup_estimate = sup_estimate.max(g[y].norm());
                }
            }
            // E numerically on the spectrum at eps = 0: the sup is infinite
            Err(OperatorError::SingularEnergy(..)) | Err(OperatorError::ResidualTooLarge(..)) => {
                sup_estimate = f64::INFINITY;
            }
            Err(other) => return Err(other),
        }
    }

    let verdict = if sigma_violation || sup_estimate > threshold {
        Verdict::Singular
    } else if upper_certificate <= threshold {
        Verdict::Regular
    } else {
        Verdict::Undecided
    };
    Ok(RegularityReport {
        energy: e,
        gamma,
        threshold,
        sup_estimate: sup_estimate.min(upper_certificate),
        upper_certificate,
        verdict,
        sigma_violation,
    })
}

/// Monte Carlo estimate of P(Λ_L(0) is (γ, E)-regular for every E in the grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityProbability {
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub n_samples: usize,
    pub n_regular: usize,
    /// 1 − L^{−p} when a probability exponent is supplied.
    pub target: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn regularity_probability(
    spec: &PotentialSpec,
    dim: usize,
    l: i64,
    lambda: f64,
    energies: &[f64],
    gamma: f64,
    n_samples: usize,
    seed: u64,
    p_exponent: Option<f64>,
) -> Result<RegularityProbability, OperatorError> {
    if n_samples == 0 {
        return Err(OperatorError::ZeroSamples);
    }
    let box_ = LatticeBox::centered(dim, l, &vec![0; dim])?;
    let center = box_.center();
    let mut n_regular = 0usize;
    for index in 0..n_samples as u64 {
        let real = sample_potential(spec, &box_, seed, index)?;
        let h = assemble(&box_, &real, lambda, BoundaryCondition::Dirichlet)?;
        let all_regular = energies.iter().all(|&e| {
            regularity_check(&h, e, gamma, &center)
                .map(|r| r.verdict == Verdict::Regular)
                .unwrap_or(false)
        });
        if all_regular {
            n_regular += 1;
        }
    }
    let (wilson_low, wilson_high) = crate::stats::wilson_interval(n_regular, n_samples, 1.96);
    Ok(RegularityProbability {
        p_hat: n_regular as f64 / n_samples as f64,
        wilson_low,
        wilson_high,
        n_samples,
        n_regular,
        target: p_exponent.map(|p| 1.0 - (l as f64).powf(-p)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain_box(l: i64) -> LatticeBox {
        LatticeBox::new(1, l, vec![0]).unwrap()
    }

    fn zero_potential(box_: &LatticeBox) -> DisorderRealization {
        DisorderRealization {
            box_: box_.clone(),
            values: vec![0.0; box_.len()],
            seed: 0,
            index: 0,
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = chain_box(16);
        let spec = PotentialSpec::Uniform { lo: 0.0, hi: 1.0 };
        let a = sample_potential(&spec, &b, 42, 3).unwrap();
        let c = sample_potential(&spec, &b, 42, 3).unwrap();
        assert_eq!(a.values, c.values);
        let d = sample_potential(&spec, &b, 42, 4).unwrap();
        assert_ne!(a.values, d.values);
    }

    #[test]
    fn uniform_support_and_mean() {
        let b = chain_box(100_000);
        let spec = PotentialSpec::Uniform { lo: 0.0, hi: 1.0 };
        let r = sample_potential(&spec, &b, 7, 0).unwrap();
        assert!(r.values.iter().all(|v| (0.0..1.0).contains(v)));
        let mean: f64 = r.values.iter().sum::<f64>() / r.values.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "LLN violated: mean {mean}");
    }

    #[test]
    fn bernoulli_values() {
        let b = chain_box(1000);
        let r = sample_potential(&PotentialSpec::Bernoulli { p: 0.5 }, &b, 1, 0).unwrap();
        assert!(r.values.iter().all(|v| *v == 1.0 || *v == -1.0));
    }

    #[test]
    fn assemble_free_chain() {
        let b = chain_box(3);
        let h = assemble(&b, &zero_potential(&b), 0.0, BoundaryCondition::Dirichlet).unwrap();
        let m = h.to_dense();
        let expected = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 1., 0., 1., 0.]);
        assert_eq!(m, expected);
    }

    #[test]
    fn assemble_triangle_ring() {
        let b = chain_box(3);
        let h = assemble(&b, &zero_potential(&b), 0.0, BoundaryCondition::Periodic).unwrap();
        let m = h.to_dense();
        // triangle adjacency: eigenvalues {2, -1, -1} via 2cos(2 pi j / 3)
        let eig = m.symmetric_eigenvalues();
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn assemble_with_potential() {
        let b = chain_box(2);
        let real = DisorderRealization {
            box_: b.clone(),
            values: vec![3.0, -1.0],
            seed: 0,
            index: 0,
        };
        let h = assemble(&b, &real, 1.0, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(
            h.to_dense(),
            DMatrix::from_row_slice(2, 2, &[3., 1., 1., -1.])
        );
    }

    #[test]
    fn assemble_rejects_mismatched_box() {
        let b = chain_box(3);
        let other = chain_box(4);
        let real = zero_potential(&other);
        assert!(matches!(
            assemble(&b, &real, 1.0, BoundaryCondition::Dirichlet),
            Err(OperatorError::BoxMismatch)
        ));
    }

    #[test]
    fn assembly_linearity() {
        let b = chain_box(8);
        let spec = PotentialSpec::Uniform { lo: -1.0, hi: 1.0 };
        let real = sample_potential(&spec, &b, 5, 0).unwrap();
        let lambda = 3.5;
        let h = assemble(&b, &real, lambda, BoundaryCondition::Dirichlet).unwrap();
        let h0 = assemble(&b, &real, 0.0, BoundaryCondition::Dirichlet).unwrap();
        let diff = h.to_dense() - h0.to_dense();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let expected = if i == j { lambda * real.values[i] } else { 0.0 };
                assert_abs_diff_eq!(diff[(i, j)], expected, epsilon = 0.0);
            }
        }
        // trace identity
        assert_abs_diff_eq!(
            h.trace(),
            lambda * real.values.iter().sum::<f64>(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn green_scalar_box() {
        let b = chain_box(1);
        let real = DisorderRealization {
            box_: b.clone(),
            values: vec![2.0],
            seed: 0,
            index: 0,
        };
        let h = assemble(&b, &real, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let z = Complex64::new(0.5, 0.25);
        let g = green(&h, z, &[0], &[0]).unwrap();
        let expected = Complex64::new(1.0, 0.0) / (Complex64::new(2.0, 0.0) - z);
        assert!((g - expected).norm() < 1e-14);
    }

    #[test]
    fn green_symmetry_and_positivity() {
        let b = chain_box(9);
        let spec = PotentialSpec::Uniform { lo: 0.0, hi: 1.0 };
        let real = sample_potential(&spec, &b, 11, 2).unwrap();
        let h = assemble(&b, &real, 2.0, BoundaryCondition::Periodic).unwrap();
        let z = Complex64::new(0.3, 1e-3);
        let g_xy = green(&h, z, &[1], &[6]).unwrap();
        let g_yx = green(&h, z, &[6], &[1]).unwrap();
        assert!((g_xy - g_yx).norm() < 1e-10);
        for x in 0..9 {
            let g_xx = green(&h, z, &[x], &[x]).unwrap();
            assert!(g_xx.im > 0.0, "Im G must be positive for Im z > 0");
        }
    }

    #[test]
    fn green_matches_dense_inverse_oracle() {
        // d=1, L=3 free chain at z = i against the explicit dense inverse
        let b = chain_box(3);
        let h = assemble(&b, &zero_potential(&b), 0.0, BoundaryCondition::Dirichlet).unwrap();
        let z = Complex64::new(0.0, 1.0);
        let dense = h.to_dense().map(|v| Complex64::new(v, 0.0))
            - DMatrix::from_diagonal_element(3, 3, z);
        let inv = dense.lu().try_inverse().unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let g = green(&h, z, &[x as i64], &[y as i64]).unwrap();
                assert!((g - inv[(x, y)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn green_detects_singular_energy() {
        let b = chain_box(1);
        let real = DisorderRealization {
            box_: b.clone(),
            values: vec![1.0],
            seed: 0,
            index: 0,
        };
        let h = assemble(&b, &real, 1.0, BoundaryCondition::Dirichlet).unwrap();
        // z exactly on the single eigenvalue
        assert!(matches!(
            green(&h, Complex64::new(1.0, 0.0), &[0], &[0]),
            Err(OperatorError::SingularEnergy(..))
        ));
    }

    #[test]
    fn regularity_scalar_box() {
        let b = chain_box(1);
        let gamma = 1.0;
        // |lambda v - E| = 3 >= e^{gamma/2}: regular
        let real = DisorderRealization {
            box_: b.clone(),
            values: vec![3.0],
            seed: 0,
            index: 0,
        };
        let h = assemble(&b, &real, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let report = regularity_check(&h, 0.0, gamma, &[0]).unwrap();
        assert_eq!(report.verdict, Verdict::Regular);
        assert!(report.sup_estimate <= report.upper_certificate);

        // E on the eigenvalue: singular with the sigma flag
        let report = regularity_check(&h, 3.0, gamma, &[0]).unwrap();
        assert_eq!(report.verdict, Verdict::Singular);
        assert!(report.sigma_violation);
    }

    #[test]
    fn regularity_brackets_against_dense_oracle() {
        // grid-sup from the implementation must match a brute-force dense
        // inverse at each grid epsilon
        let b = LatticeBox::centered(1, 9, &[0]).unwrap();
        let spec = PotentialSpec::Uniform { lo: 0.0, hi: 1.0 };
        let real = sample_potential(&spec, &b, 123, 0).unwrap();
        let h = assemble(&b, &real, 5.0, BoundaryCondition::Dirichlet).unwrap();
        let e = 2.5;
        let report = regularity_check(&h, e, 0.5, &[0]).unwrap();

        let n = h.len();
        let mut oracle_sup: f64 = 0.0;
        for eps in super::epsilon_grid() {
            let z = Complex64::new(e, eps);
            let dense = h.to_dense().map(|v| Complex64::new(v, 0.0))
                - DMatrix::from_diagonal_element(n, n, z);
            if let Some(inv) = dense.lu().try_inverse() {
                let center = h.box_().index_of(&[0]).unwrap();
                for y in [0usize, n - 1] {
                    oracle_sup = oracle_sup.max(inv[(center, y)].norm());
                }
            }
        }
        assert!((report.sup_estimate - oracle_sup).abs() <= 1e-9 * oracle_sup.max(1.0));
        assert!(report.sup_estimate <= report.upper_certificate * (1.0 + 1e-12));
    }

    #[test]
    fn regularity_probability_free_operator() {
        // lambda = 0: no decay at band energies, so with a huge gamma the
        // regular probability is 0
        let spec = PotentialSpec::Uniform { lo: 0.0, hi: 1.0 };
        let r = regularity_probability(&spec, 1, 9, 0.0, &[0.0], 10.0, 1, 0, None).unwrap();
        assert_eq!(r.p_hat, 0.0);
        assert!(matches!(
            regularity_probability(&spec, 1, 9, 0.0, &[0.0], 10.0, 0, 0, None),
            Err(OperatorError::ZeroSamples)
        ));
    }

    #[test]
    fn regularity_probability_strong_disorder() {
        let spec = PotentialSpec::Uniform { lo: 0.0, hi: 1.0 };
        let energies: Vec<f64> = (-5..=5).map(|i| i as f64 / 5.0).collect();
        let r =
            regularity_probability(&spec, 1, 13, 8.0, &energies, 0.5, 40, 9, Some(7.0)).unwrap();
        assert!(r.p_hat >= 0.0 && r.p_hat <= 1.0);
        assert!(r.wilson_low <= r.p_hat && r.p_hat <= r.wilson_high);
        // CI width bound 2 * 1.96 / sqrt(n)
        assert!(r.wilson_high - r.wilson_low <= 2.0 * 1.96 / (40.0f64).sqrt() + 1e-12);
    }
}
