//! Rescaled eigenvalue/localization-center point processes.
//!
//! Each finite-volume eigenpair (E_j, x_j) becomes an atom
//! (|Λ|(E_j − E0), (x_j − origin)/L): energies are blown up by the box volume
//! around the reference energy, centers are squeezed into the unit cube.
//! Block processes reuse the *parent* volume and side so that contributions
//! from sub-boxes live on the same scale as the parent process.

use serde::{Deserialize, Serialize};

use crate::lattice::LatticeBox;
use crate::spectral::{Interval, SpectralData};

/// One atom of a (possibly weighted) rescaled point process.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atom {
    /// Scaled energy |Λ|(E − E0).
    pub energy: f64,
    /// Scaled center, one coordinate per dimension, each in [0, 1).
    pub position: Vec<f64>,
    /// Mass carried by the atom; 1 for plain counting processes.
    pub weight: f64,
}

/// A finite rescaled point process, atoms sorted by (energy, position).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledPointProcess {
    /// Reference energy E0 (unscaled).
    pub e0: f64,
    /// Volume |Λ| used for the energy scaling.
    pub volume: f64,
    /// Side L used for the position scaling.
    pub side: f64,
    pub dim: usize,
    /// Origin of the box whose coordinates normalize the positions.
    pub origin: Vec<i64>,
    pub atoms: Vec<Atom>,
}

/// Axis-aligned box in the scaled position coordinates, half-open per axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceWindow(pub Vec<(f64, f64)>);

impl SpaceWindow {
    /// The whole unit cube.
    pub fn full(dim: usize) -> Self {
        Self(vec![(0.0, 1.0); dim])
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.0
            .iter()
            .zip(u)
            .all(|(&(lo, hi), &x)| lo <= x && x < hi)
    }

    pub fn volume(&self) -> f64 {
        self.0.iter().map(|&(lo, hi)| (hi - lo).max(0.0)).product()
    }
}

/// Test functions integrated against the process.
pub enum TestFunction {
    /// 1_{A×B}: scaled-energy interval times a position window.
    Indicator {
        energy: Interval,
        space: SpaceWindow,
    },
    /// Cauchy kernel f(x) = τ/((x−σ)² + τ²) in scaled energy, restricted to a
    /// position window.
    Cauchy {
        sigma: f64,
        tau: f64,
        space: SpaceWindow,
    },
}

impl TestFunction {
    pub fn eval(&self, atom: &Atom) -> f64 {
        match self {
            TestFunction::Indicator { energy, space } => {
                if energy.contains(atom.energy) && space.contains(&atom.position) {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Cauchy { sigma, tau, space } => {
                if space.contains(&atom.position) {
                    let d = atom.energy - sigma;
                    tau / (d * d + tau * tau)
                } else {
                    0.0
                }
            }
        }
    }
}

impl ScaledPointProcess {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Number of atoms in a scaled-energy interval and position window
    /// (weights ignored; use `mass` for weighted processes).
    pub fn count(&self, energy: Interval, space: &SpaceWindow) -> usize {
        self.atoms
            .iter()
            .filter(|a| energy.contains(a.energy) && space.contains(&a.position))
            .count()
    }

    /// Total weight in a scaled-energy interval and position window.
    pub fn mass(&self, energy: Interval, space: &SpaceWindow) -> f64 {
        self.atoms
            .iter()
            .filter(|a| energy.contains(a.energy) && space.contains(&a.position))
            .map(|a| a.weight)
            .sum()
    }

    /// ∫ f dξ = Σ_j w_j f(atom_j).
    pub fn integrate(&self, f: &TestFunction) -> f64 {
        self.atoms.iter().map(|a| a.weight * f.eval(a)).sum()
    }

    /// Sorted scaled energies (marginal onto the energy axis).
    pub fn marginal_energy(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.energy).collect()
    }

    /// Scaled positions in atom order.
    pub fn marginal_space(&self) -> Vec<Vec<f64>> {
        self.atoms.iter().map(|a| a.position.clone()).collect()
    }
}

fn sort_atoms(atoms: &mut [Atom]) {
    atoms.sort_by(|a, b| {
        a.energy.total_cmp(&b.energy).then_with(|| {
            a.position
                .iter()
                .zip(&b.position)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
}

fn scale_position(site: &[i64], origin: &[i64], side: f64) -> Vec<f64> {
    site.iter()
        .zip(origin)
        .map(|(&x, &o)| (x - o) as f64 / side)
        .collect()
}

/// Rescaled process of a single box: atoms (|Λ|(E_j − E0), (x_j − o)/L) for
/// every eigenpair in `s`, unit weights.
pub fn build_process(s: &SpectralData, e0: f64) -> ScaledPointProcess {
    let volume = s.box_.len() as f64;
    let side = s.box_.side() as f64;
    scaled_from(s, e0, volume, side, s.box_.origin(), None)
}

/// Rescaled process of a sub-box solve, measured on its parent's scale:
/// energies scaled by |parent|, centers by the parent's side and origin, so
/// block processes superpose with the parent process.
pub fn build_block_process(
    s: &SpectralData,
    parent: &LatticeBox,
    e0: f64,
) -> ScaledPointProcess {
    scaled_from(
        s,
        e0,
        parent.len() as f64,
        parent.side() as f64,
        parent.origin(),
        None,
    )
}

/// Like `build_process`, but each atom j carries `weights[j]` (e.g. the
/// squared mass of the eigenfunction on a core region).
pub fn build_weighted(
    s: &SpectralData,
    e0: f64,
    weights: &[f64],
) -> ScaledPointProcess {
    assert_eq!(weights.len(), s.len());
    let volume = s.box_.len() as f64;
    let side = s.box_.side() as f64;
    scaled_from(s, e0, volume, side, s.box_.origin(), Some(weights))
}

fn scaled_from(
    s: &SpectralData,
    e0: f64,
    volume: f64,
    side: f64,
    origin: &[i64],
    weights: Option<&[f64]>,
) -> ScaledPointProcess {
    let mut atoms: Vec<Atom> = s
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &e)| Atom {
            energy: volume * (e - e0),
            position: scale_position(&s.center_site(j), origin, side),
            weight: weights.map_or(1.0, |w| w[j]),
        })
        .collect();
    sort_atoms(&mut atoms);
    ScaledPointProcess {
        e0,
        volume,
        side,
        dim: s.box_.dim(),
        origin: origin.to_vec(),
        atoms,
    }
}

/// Superposition Σ_p of block processes sharing a common scaling.
pub fn superpose(parts: &[ScaledPointProcess]) -> ScaledPointProcess {
    assert!(!parts.is_empty());
    let first = &parts[0];
    for p in parts {
        assert_eq!(p.volume, first.volume, "superposing incompatible scalings");
        assert_eq!(p.side, first.side);
        assert_eq!(p.origin, first.origin);
    }
    let mut atoms: Vec<Atom> = parts.iter().flat_map(|p| p.atoms.clone()).collect();
    sort_atoms(&mut atoms);
    ScaledPointProcess {
        e0: first.e0,
        volume: first.volume,
        side: first.side,
        dim: first.dim,
        origin: first.origin.clone(),
        atoms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;
    use crate::operator::{assemble, sample_potential, BoundaryCondition, PotentialSpec};
    use crate::spectral::eigendecompose;
    use approx::assert_abs_diff_eq;

    fn sample_data(l: i64, seed: u64) -> SpectralData {
        let b = LatticeBox::new(1, l, vec![0]).unwrap();
        let spec = PotentialSpec::Uniform { lo: 0.0, hi: 1.0 };
        let real = sample_potential(&spec, &b, seed, 0).unwrap();
        let h = assemble(&b, &real, 5.0, BoundaryCondition::Dirichlet).unwrap();
        eigendecompose(&h).unwrap()
    }

    #[test]
    fn atom_scaling_matches_definition() {
        let s = sample_data(20, 1);
        let e0 = 2.5;
        let p = build_process(&s, e0);
        assert_eq!(p.len(), 20);
        // find the atom for the smallest eigenvalue
        let e_min = s.eigenvalues[0];
        let expected = 20.0 * (e_min - e0);
        assert!(p
            .atoms
            .iter()
            .any(|a| (a.energy - expected).abs() < 1e-9));
        for a in &p.atoms {
            assert!(a.position[0] >= 0.0 && a.position[0] < 1.0);
            assert_eq!(a.weight, 1.0);
        }
        // atoms sorted by energy
        for w in p.atoms.windows(2) {
            assert!(w[0].energy <= w[1].energy);
        }
    }

    #[test]
    fn total_count_is_preserved() {
        let s = sample_data(30, 2);
        let p = build_process(&s, 2.0);
        let everything = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(p.count(everything, &SpaceWindow::full(1)), 30);
    }

    #[test]
    fn indicator_counts_match_manual_filter() {
        let s = sample_data(30, 3);
        let p = build_process(&s, 2.5);
        let j = Interval::new(-10.0, 10.0);
        let w = SpaceWindow(vec![(0.25, 0.75)]);
        let manual = p
            .atoms
            .iter()
            .filter(|a| j.contains(a.energy) && w.contains(&a.position))
            .count();
        assert_eq!(p.count(j, &w), manual);
        let f = TestFunction::Indicator {
            energy: j,
            space: w,
        };
        assert_abs_diff_eq!(p.integrate(&f), manual as f64, epsilon = 1e-12);
    }

    #[test]
    fn cauchy_integral_scalar_oracle() {
        // single atom at scaled energy x with weight 1: ∫f dξ = τ/((x−σ)²+τ²)
        let p = ScaledPointProcess {
            e0: 0.0,
            volume: 1.0,
            side: 1.0,
            dim: 1,
            origin: vec![0],
            atoms: vec![Atom {
                energy: 3.0,
                position: vec![0.5],
                weight: 1.0,
            }],
        };
        let f = TestFunction::Cauchy {
            sigma: 1.0,
            tau: 2.0,
            space: SpaceWindow::full(1),
        };
        assert_abs_diff_eq!(p.integrate(&f), 2.0 / (4.0 + 4.0), epsilon = 1e-15);
    }

    #[test]
    fn weighted_mass_and_superposition() {
        let s = sample_data(10, 4);
        let weights: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        let p = build_weighted(&s, 2.0, &weights);
        let all = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        let total: f64 = weights.iter().sum();
        assert_abs_diff_eq!(p.mass(all, &SpaceWindow::full(1)), total, epsilon = 1e-12);

        let q = build_process(&s, 2.0);
        let sup = superpose(&[p.clone(), q.clone()]);
        assert_eq!(sup.len(), 20);
        assert_abs_diff_eq!(
            sup.mass(all, &SpaceWindow::full(1)),
            total + 10.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn block_process_uses_parent_scale() {
        // sub-box solve, parent scaling: positions land in the sub-box's
        // slice of the parent's unit cube
        let parent = LatticeBox::new(1, 20, vec![0]).unwrap();
        let sub = LatticeBox::new(1, 5, vec![10]).unwrap();
        let spec = PotentialSpec::Uniform { lo: 0.0, hi: 1.0 };
        let real = sample_potential(&spec, &sub, 9, 0).unwrap();
        let h = assemble(&sub, &real, 5.0, BoundaryCondition::Dirichlet).unwrap();
        let s = eigendecompose(&h).unwrap();
        let p = build_block_process(&s, &parent, 2.0);
        assert_eq!(p.volume, 20.0);
        for a in &p.atoms {
            assert!(a.position[0] >= 0.5 && a.position[0] < 0.75);
        }
        // energies use the parent volume
        let expected = 20.0 * (s.eigenvalues[0] - 2.0);
        assert!(p.atoms.iter().any(|a| (a.energy - expected).abs() < 1e-9));
    }

    #[test]
    #[should_panic(expected = "incompatible")]
    fn superpose_rejects_mixed_scalings() {
        let s = sample_data(10, 5);
        let a = build_process(&s, 0.0);
        let mut b = a.clone();
        b.volume = 99.0;
        let _ = superpose(&[a, b]);
    }
}
