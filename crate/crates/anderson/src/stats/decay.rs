//! Eigenfunction decay diagnostics and quasimode verification: outside-mass
//! thresholds, self-calibrated decay rates, residual bounds, and the
//! Gram-matrix linear-independence certificate.

use serde::{Deserialize, Serialize};

use crate::lattice::{l1_distance, LatticeBox};

/// ℓ² mass of `psi` on the complement of `region` (site indices).
pub fn outside_mass(psi: &[f64], region: &[usize]) -> f64 {
    let mut inside = vec![false; psi.len()];
    for &i in region {
        inside[i] = true;
    }
    psi.iter()
        .enumerate()
        .filter(|(i, _)| !inside[*i])
        .map(|(_, x)| x * x)
        .sum::<f64>()
        .sqrt()
}

/// ℓ¹ distance between sites, wrapped around the torus when `periodic`.
fn site_distance(x: &[i64], c: &[i64], side: i64, periodic: bool) -> i64 {
    if !periodic {
        return l1_distance(x, c);
    }
    x.iter()
        .zip(c)
        .map(|(a, b)| {
            let d = (a - b).abs();
            d.min(side - d)
        })
        .sum()
}

/// Self-calibrated decay rate: regress ln‖ψ·1_{|x−c|≥r}‖ against r and
/// return −slope. Distance wraps when `periodic` (torus geometry). None if
/// fewer than 3 usable radii.
pub fn fit_gamma(psi: &[f64], center: usize, box_: &LatticeBox, periodic: bool) -> Option<f64> {
    let c = box_.site(center);
    let side = box_.side();
    let r_max = box_
        .sites()
        .map(|s| site_distance(&s, &c, side, periodic))
        .max()
        .unwrap_or(0);
    let mut points: Vec<(f64, f64)> = Vec::new();
    for r in 1..=r_max {
        let m: f64 = box_
            .sites()
            .enumerate()
            .filter(|(_, s)| site_distance(s, &c, side, periodic) >= r)
            .map(|(i, _)| psi[i] * psi[i])
            .sum::<f64>()
            .sqrt();
        // stay well above the eigensolver noise floor: beyond it the mass
        // curve plateaus and would flatten the fitted slope
        if m > 1e-7 {
            points.push((r as f64, m.ln()));
        } else {
            break;
        }
    }
    if points.len() < 3 {
        return None;
    }
    // least-squares slope
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return None;
    }
    Some(-(n * sxy - sx * sy) / denom)
}

/// Aggregated decay diagnostics over a family of eigenfunctions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub outside_masses: Vec<f64>,
    pub threshold: f64,
    pub pass_fraction: f64,
    /// Median self-calibrated decay rate (NaN when nothing fit).
    pub gamma_fit: f64,
    pub n_functions: usize,
}

/// Compare per-function outside masses against `threshold` and summarize.
pub fn decay_report(outside_masses: Vec<f64>, gamma_fits: &[f64], threshold: f64) -> DecayReport {
    let n = outside_masses.len();
    let passed = outside_masses.iter().filter(|&&m| m <= threshold).count();
    let gamma_fit = median(gamma_fits);
    DecayReport {
        pass_fraction: if n == 0 { 1.0 } else { passed as f64 / n as f64 },
        outside_masses,
        threshold,
        gamma_fit,
        n_functions: n,
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// One truncated eigenfunction acting as a quasimode of a block operator.
#[derive(Debug, Clone)]
pub struct Quasimode {
    /// ‖(H_block − E)χψ‖ of the normalized truncation.
    pub residual: f64,
    /// ‖(1−χ)ψ‖: eigenfunction mass outside the truncation region.
    pub outside_mass: f64,
    /// Normalized truncated vector (block coordinates).
    pub vector: Vec<f64>,
}

/// Quasimode verification for one block: residual bounds and the Gram
/// certificate of linear independence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasimodeReport {
    pub residuals: Vec<f64>,
    pub residual_bounds: Vec<f64>,
    /// residual ≤ √2·outside_mass per function (structural bound).
    pub residual_bound_holds: bool,
    /// Largest off-diagonal |⟨ψ_i, ψ_j⟩|.
    pub max_overlap: f64,
    /// Minimum eigenvalue of the Gram matrix.
    pub gram_min_eigenvalue: f64,
    pub independent: bool,
}

/// Check the √2·outside-mass residual bound and the Gram certificate for a
/// family of quasimodes from one block.
pub fn quasimode_check(modes: &[Quasimode]) -> QuasimodeReport {
    let sqrt2 = std::f64::consts::SQRT_2;
    let residuals: Vec<f64> = modes.iter().map(|m| m.residual).collect();
    let residual_bounds: Vec<f64> = modes.iter().map(|m| sqrt2 * m.outside_mass).collect();
    let residual_bound_holds = residuals
        .iter()
        .zip(&residual_bounds)
        .all(|(r, b)| *r <= b + 1e-10);

    let k = modes.len();
    let mut gram = nalgebra::DMatrix::zeros(k, k);
    let mut max_overlap = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let dot: f64 = modes[i]
                .vector
                .iter()
                .zip(&modes[j].vector)
                .map(|(a, b)| a * b)
                .sum();
            gram[(i, j)] = dot;
            if i != j {
                max_overlap = max_overlap.max(dot.abs());
            }
        }
    }
    let gram_min_eigenvalue = if k == 0 {
        1.0
    } else {
        gram.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    QuasimodeReport {
        residuals,
        residual_bounds,
        residual_bound_holds,
        max_overlap,
        gram_min_eigenvalue,
        independent: gram_min_eigenvalue > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble, sample_potential, BoundaryCondition, PotentialSpec};
    use crate::spectral::eigendecompose;

    #[test]
    fn outside_mass_cases() {
        // delta function inside the region → 0
        let psi = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(outside_mass(&psi, &[0, 1]), 0.0);
        // all mass outside
        assert_eq!(outside_mass(&psi, &[2, 3]), 1.0);
        // split
        let v = 1.0 / 2.0f64.sqrt();
        let psi2 = [v, 0.0, v, 0.0];
        assert!((outside_mass(&psi2, &[0]) - v).abs() < 1e-12);
    }

    #[test]
    fn fit_gamma_recovers_planted_rate() {
        let b = LatticeBox::new(1, 41, vec![0]).unwrap();
        let gamma = 0.8;
        let center = 20usize;
        let mut psi: Vec<f64> = (0..41)
            .map(|i| (-(gamma) * (i as f64 - 20.0).abs()).exp())
            .collect();
        let n: f64 = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|x| *x /= n);
        let fit = fit_gamma(&psi, center, &b, false).unwrap();
        assert!((fit - gamma).abs() < 0.05, "fit {fit} vs {gamma}");
    }

    #[test]
    fn delocalized_states_fail_decay_threshold() {
        // free chain: sine eigenvectors have O(1) outside mass
        let b = LatticeBox::new(1, 60, vec![0]).unwrap();
        let real = sample_potential(&PotentialSpec::Uniform { lo: 0.0, hi: 1.0 }, &b, 1, 0).unwrap();
        let mut zero = real.clone();
        zero.values.iter_mut().for_each(|v| *v = 0.0);
        let h = assemble(&b, &zero, 0.0, BoundaryCondition::Dirichlet).unwrap();
        let s = eigendecompose(&h).unwrap();
        let masses: Vec<f64> = s
            .eigenvectors
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let c = s.centers[j].canonical;
                let region: Vec<usize> =
                    (c.saturating_sub(5)..=(c + 5).min(59)).collect();
                outside_mass(v, &region)
            })
            .collect();
        let rep = decay_report(masses, &[], 0.1);
        assert!(rep.pass_fraction < 0.1, "{}", rep.pass_fraction);
    }

    #[test]
    fn localized_states_pass_decay_threshold() {
        // strong disorder: most eigenfunctions concentrate within a few sites
        let b = LatticeBox::new(1, 80, vec![0]).unwrap();
        let real =
            sample_potential(&PotentialSpec::Uniform { lo: 0.0, hi: 1.0 }, &b, 5, 0).unwrap();
        let h = assemble(&b, &real, 10.0, BoundaryCondition::Dirichlet).unwrap();
        let s = eigendecompose(&h).unwrap();
        let mut masses = Vec::new();
        let mut fits = Vec::new();
        for (j, v) in s.eigenvectors.iter().enumerate() {
            let c = s.centers[j].canonical;
            let region: Vec<usize> = (c.saturating_sub(10)..=(c + 10).min(79)).collect();
            masses.push(outside_mass(v, &region));
            if let Some(g) = fit_gamma(v, c, &b, false) {
                fits.push(g);
            }
        }
        let rep = decay_report(masses, &fits, 0.05);
        assert!(rep.pass_fraction > 0.9, "{}", rep.pass_fraction);
        assert!(rep.gamma_fit > 0.5, "gamma_fit {}", rep.gamma_fit);
    }

    #[test]
    fn quasimode_orthonormal_family() {
        let modes = vec![
            Quasimode {
                residual: 0.0,
                outside_mass: 0.0,
                vector: vec![1.0, 0.0],
            },
            Quasimode {
                residual: 0.0,
                outside_mass: 0.0,
                vector: vec![0.0, 1.0],
            },
        ];
        let rep = quasimode_check(&modes);
        assert!(rep.residual_bound_holds);
        assert!((rep.gram_min_eigenvalue - 1.0).abs() < 1e-12);
        assert!(rep.independent);
        assert_eq!(rep.max_overlap, 0.0);
    }

    #[test]
    fn quasimode_duplicate_vectors_fail_independence() {
        let v = vec![0.6, 0.8];
        let modes = vec![
            Quasimode {
                residual: 0.0,
                outside_mass: 0.0,
                vector: v.clone(),
            },
            Quasimode {
                residual: 0.0,
                outside_mass: 0.0,
                vector: v,
            },
        ];
        let rep = quasimode_check(&modes);
        assert!(rep.gram_min_eigenvalue.abs() < 1e-10);
        assert!(!rep.independent || rep.gram_min_eigenvalue < 1e-10);
    }

    #[test]
    fn quasimode_residual_bound_violation_detected() {
        let modes = vec![Quasimode {
            residual: 1.0,
            outside_mass: 0.1,
            vector: vec![1.0],
        }];
        assert!(!quasimode_check(&modes).residual_bound_holds);
    }

    #[test]
    fn median_and_empty_report() {
        let rep = decay_report(vec![], &[], 0.5);
        assert_eq!(rep.pass_fraction, 1.0);
        assert!(rep.gamma_fit.is_nan());
        assert_eq!(median(&[1.0, 3.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
    }
}
