//! Eigenvalue matching between a parent box and its decomposition blocks:
//! ε-cluster assignment, per-realization matching records, the Monte Carlo
//! matching experiment, and its Minami-stratified variant.

use serde::{Deserialize, Serialize};

use crate::lattice::{decompose, LatticeBox};
use crate::operator::{assemble, BoundaryCondition, DisorderRealization, OperatorError};
use crate::pointprocess::{build_block_process, build_process, superpose, SpaceWindow};
use crate::spectral::{eigen_window, Interval, SpectralData};
use crate::stats::dos::Ensemble;
use crate::stats::mean;

/// Injective assignment between two sorted energy lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchOutcome {
    /// (left index, right index, |distance|) per matched pair.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_left: usize,
    pub unmatched_right: usize,
    pub max_distance: f64,
}

/// Split sorted values into ε-clusters: maximal runs whose consecutive gaps
/// are ≤ 2ε (two points interact when their ε-intervals overlap).
pub fn epsilon_clusters(sorted: &[f64], eps: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for i in 1..sorted.len() {
        if sorted[i] - sorted[i - 1] > 2.0 * eps {
            out.push(start..i);
            start = i;
        }
    }
    if start < sorted.len() {
        out.push(start..sorted.len());
    }
    out
}

/// Optimal injective matching of two sorted energy lists. A pair may match
/// only if |l − r| ≤ cap; the assignment maximizes matched pairs and, among
/// those, minimizes the total distance (dynamic-program alignment, which is
/// optimal for sorted one-dimensional inputs).
pub fn match_energies(left: &[f64], right: &[f64], cap: f64) -> MatchOutcome {
    debug_assert!(left.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(right.windows(2).all(|w| w[0] <= w[1]));
    let (n, m) = (left.len(), right.len());
    let skip = cap.max(1e-300); // per-unmatched penalty; match beats two skips
    let inf = f64::INFINITY;
    let mut dp = vec![vec![0.0f64; m + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = inf;
            if i > 0 {
                best = best.min(dp[i - 1][j] + skip);
            }
            if j > 0 {
                best = best.min(dp[i][j - 1] + skip);
            }
            if i > 0 && j > 0 {
                let d = (left[i - 1] - right[j - 1]).abs();
                if d <= cap {
                    best = best.min(dp[i - 1][j - 1] + d);
                }
            }
            dp[i][j] = best;
        }
    }
    // backtrack
    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let cur = dp[i][j];
        if i > 0 && j > 0 {
            let d = (left[i - 1] - right[j - 1]).abs();
            if d <= cap && (dp[i - 1][j - 1] + d - cur).abs() < 1e-12 * (1.0 + cur.abs()) {
                pairs.push((i - 1, j - 1, d));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && (dp[i - 1][j] + skip - cur).abs() < 1e-12 * (1.0 + cur.abs()) {
            i -= 1;
            continue;
        }
        j -= 1;
    }
    pairs.reverse();
    let max_distance = pairs.iter().map(|p| p.2).fold(0.0f64, f64::max);
    MatchOutcome {
        unmatched_left: n - pairs.len(),
        unmatched_right: m - pairs.len(),
        pairs,
        max_distance,
    }
}

/// Geometry and window parameters of one matching level.
#[derive(Debug, Clone)]
pub struct MatchingConfig {
    /// Monte Carlo ensemble of the PARENT box (side = L_{k+1} of the level).
    pub ens: Ensemble,
    /// Block side L_k.
    pub l_k: i64,
    /// Core shrink / decay scale L_{k−1}.
    pub l_km1: i64,
    pub e0: f64,
    /// Scaled half-width a of the window J = I(E0, a/|Λ_parent|).
    pub a: f64,
    /// Self-calibrated γ'; ε = e^{−γ'·L_{k−1}/2}.
    pub gamma_prime: f64,
    /// Energy side of the indicator test function f = 1_{f_energy × K}
    /// (scaled units).
    pub f_energy: Interval,
}

impl MatchingConfig {
    pub fn epsilon(&self) -> f64 {
        (-self.gamma_prime * self.l_km1 as f64 / 2.0).exp()
    }

    /// Matching distance bound L_k^d·ε (unscaled energy units).
    pub fn distance_cap(&self) -> f64 {
        (self.l_k as f64).powi(self.ens.dim as i32) * self.epsilon()
    }
}

/// One realization of the matching experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationMatch {
    pub index: u64,
    /// Matched |E_parent − E_block| distances, pooled over blocks (unscaled).
    pub distances: Vec<f64>,
    /// Parent window eigenvalues centered in some C_p but unmatched (II-term
    /// witnesses).
    pub unmatched_parent: usize,
    /// Block window eigenvalues with no parent partner (III/IV-term
    /// witnesses).
    pub unmatched_block: usize,
    /// Parent window eigenvalues centered outside every core (∪D_p∖C_p or
    /// remainder).
    pub boundary_centers: usize,
    /// |ξ⁽¹⁾(f) − η(f)| for the configured indicator f.
    pub discrepancy: f64,
    /// Per-block (N(parent, J, C_p), N(block, J')) count pairs.
    pub block_counts: Vec<(usize, usize)>,
}

/// Aggregated matching report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchingReport {
    pub realizations: Vec<RealizationMatch>,
    /// Fraction of matched pairs with distance ≤ L_k^d·ε.
    pub within_bound_fraction: f64,
    pub mean_discrepancy: f64,
    pub total_matched: usize,
    pub total_unmatched_parent: usize,
    pub total_unmatched_block: usize,
    pub distance_cap: f64,
    pub epsilon: f64,
}

/// Minami-stratified matching report (event partition over block counts).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinamiMatchingReport {
    /// Mean |contribution| of blocks with exactly one window eigenvalue.
    pub a1_term: f64,
    /// Mean unmatched-parent contribution on single-eigenvalue blocks.
    pub a2_term: f64,
    /// Mean contribution of blocks with ≥ 2 window eigenvalues (B term).
    pub b_term: f64,
    /// Fraction of (realization, block) cells with N(block, J') ≥ 2.
    pub multi_block_fraction: f64,
    /// Realizations violating N(parent,J,C_p) ≤ N(block,J') for some p.
    pub count_violations: usize,
    pub n_realizations: usize,
}

/// Block Hamiltonian of block `p`: parent potential restricted to the block
/// box, assembled with periodic boundary conditions.
pub(crate) fn block_hamiltonian(
    parent_real: &DisorderRealization,
    block: &LatticeBox,
    lambda: f64,
) -> Result<crate::operator::Hamiltonian, OperatorError> {
    let values: Vec<f64> = block
        .sites()
        .map(|s| {
            let i = parent_real
                .box_
                .index_of(&s)
                .expect("block site inside parent");
            parent_real.values[i]
        })
        .collect();
    let real = DisorderRealization {
        box_: block.clone(),
        values,
        seed: parent_real.seed,
        index: parent_real.index,
    };
    assemble(block, &real, lambda, BoundaryCondition::Periodic)
}

/// Core of one realization: windowed parent solve, block solves, grouping by
/// localization center, per-block matching, and the discrepancy ξ⁽¹⁾(f)−η(f).
fn run_realization(
    cfg: &MatchingConfig,
    index: u64,
    decoupled: bool,
) -> Result<RealizationMatch, OperatorError> {
    let parent_box = LatticeBox::new(cfg.ens.dim, cfg.ens.side, vec![0; cfg.ens.dim])
        .expect("validated geometry");
    let parent_real = crate::operator::sample_potential(
        &cfg.ens.potential,
        &parent_box,
        cfg.ens.seed,
        index,
    )?;
    let volume = parent_box.len() as f64;
    let radius = cfg.a / volume;
    let eps = cfg.epsilon();
    let dec = decompose(&parent_box, cfg.l_k, cfg.l_km1).expect("valid decomposition scales");

    // block solves (periodic bc, window J + I(0, ε)); when decoupled, the
    // parent is the direct sum of Dirichlet block operators instead
    let block_bc = if decoupled {
        BoundaryCondition::Dirichlet
    } else {
        BoundaryCondition::Periodic
    };
    let mut block_specs: Vec<SpectralData> = Vec::with_capacity(dec.block_count());
    for block in &dec.blocks {
        let h = if decoupled {
            let values: Vec<f64> = block
                .sites()
                .map(|s| parent_real.values[parent_real.box_.index_of(&s).unwrap()])
                .collect();
            let real = DisorderRealization {
                box_: block.clone(),
                values,
                seed: parent_real.seed,
                index,
            };
            assemble(block, &real, cfg.ens.lambda, block_bc)?
        } else {
            block_hamiltonian(&parent_real, block, cfg.ens.lambda)?
        };
        let w = eigen_window(&h, cfg.e0, radius + eps).expect("block window solve");
        block_specs.push(w.data);
    }

    // parent windowed solve; in decoupled mode assemble eigenpairs from the
    // block solves themselves (exact spectrum of the cut operator)
    let (parent_energies, parent_centers): (Vec<f64>, Vec<crate::lattice::Site>) = if decoupled {
        let mut pairs: Vec<(f64, crate::lattice::Site)> = Vec::new();
        for s in &block_specs {
            for (j, &e) in s.eigenvalues.iter().enumerate() {
                if (e - cfg.e0).abs() <= radius {
                    pairs.push((e, s.center_site(j)));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    } else {
        let parent_h = assemble(&parent_box, &parent_real, cfg.ens.lambda, cfg.ens.bc)?;
        let w = eigen_window(&parent_h, cfg.e0, radius).expect("parent window solve");
        let centers = (0..w.data.len()).map(|j| w.data.center_site(j)).collect();
        (w.data.eigenvalues.clone(), centers)
    };

    // group parent eigenvalues by the core containing their center
    let mut per_core: Vec<Vec<f64>> = vec![Vec::new(); dec.block_count()];
    let mut boundary_centers = 0usize;
    for (e, site) in parent_energies.iter().zip(&parent_centers) {
        match dec.cores.iter().position(|c| c.contains(site)) {
            Some(p) => per_core[p].push(*e),
            None => boundary_centers += 1,
        }
    }

    // per-block matching
    let cap = cfg.distance_cap().max(1e-9);
    let block_window = Interval::new(cfg.e0 - radius - eps, cfg.e0 + radius + eps);
    let mut distances = Vec::new();
    let mut unmatched_parent = 0usize;
    let mut unmatched_block = 0usize;
    let mut block_counts = Vec::with_capacity(dec.block_count());
    for (p, spec) in block_specs.iter().enumerate() {
        let block_energies: Vec<f64> = spec
            .eigenvalues
            .iter()
            .copied()
            .filter(|e| *e >= block_window.lo && *e <= block_window.hi)
            .collect();
        let outcome = match_energies(&per_core[p], &block_energies, cap);
        distances.extend(outcome.pairs.iter().map(|p| p.2));
        unmatched_parent += outcome.unmatched_left;
        unmatched_block += outcome.unmatched_right;
        block_counts.push((per_core[p].len(), block_energies.len()));
    }

    // discrepancy |ξ⁽¹⁾(f) − η(f)| on the configured indicator
    let f = crate::pointprocess::TestFunction::Indicator {
        energy: cfg.f_energy,
        space: SpaceWindow::full(cfg.ens.dim),
    };
    let xi1: f64 = {
        // parent atoms restricted to centers inside some core
        let mut total = 0.0;
        for (e, site) in parent_energies.iter().zip(&parent_centers) {
            if dec.cores.iter().any(|c| c.contains(site)) {
                let scaled = volume * (e - cfg.e0);
                if cfg.f_energy.contains(scaled) {
                    total += 1.0;
                }
            }
        }
        total
    };
    let eta: f64 = {
        let parts: Vec<_> = block_specs
            .iter()
            .map(|s| build_block_process(s, &parent_box, cfg.e0))
            .collect();
        if parts.is_empty() {
            0.0
        } else {
            superpose(&parts).integrate(&f)
        }
    };

    Ok(RealizationMatch {
        index,
        distances,
        unmatched_parent,
        unmatched_block,
        boundary_centers,
        discrepancy: (xi1 - eta).abs(),
        block_counts,
    })
}

fn aggregate(cfg: &MatchingConfig, realizations: Vec<RealizationMatch>) -> MatchingReport {
    let cap = cfg.distance_cap();
    let all_d: Vec<f64> = realizations
        .iter()
        .flat_map(|r| r.distances.iter().copied())
        .collect();
    let within = all_d.iter().filter(|&&d| d <= cap).count();
    let discrepancies: Vec<f64> = realizations.iter().map(|r| r.discrepancy).collect();
    MatchingReport {
        within_bound_fraction: if all_d.is_empty() {
            1.0
        } else {
            within as f64 / all_d.len() as f64
        },
        mean_discrepancy: mean(&discrepancies),
        total_matched: all_d.len(),
        total_unmatched_parent: realizations.iter().map(|r| r.unmatched_parent).sum(),
        total_unmatched_block: realizations.iter().map(|r| r.unmatched_block).sum(),
        distance_cap: cap,
        epsilon: cfg.epsilon(),
        realizations,
    }
}

/// Monte Carlo matching experiment over `cfg.ens.n_samples` realizations.
pub fn matching_experiment(cfg: &MatchingConfig) -> Result<MatchingReport, OperatorError> {
    let mut rs = Vec::with_capacity(cfg.ens.n_samples);
    for index in 0..cfg.ens.n_samples as u64 {
        rs.push(run_realization(cfg, index, false)?);
    }
    Ok(aggregate(cfg, rs))
}

/// Sanity variant: the parent operator is replaced by the direct sum of the
/// Dirichlet block operators, so every in-window eigenvalue must match its
/// own block exactly.
pub fn decoupled_sanity(cfg: &MatchingConfig) -> Result<MatchingReport, OperatorError> {
    let mut rs = Vec::with_capacity(cfg.ens.n_samples);
    for index in 0..cfg.ens.n_samples as u64 {
        rs.push(run_realization(cfg, index, true)?);
    }
    Ok(aggregate(cfg, rs))
}

/// Minami-stratified variant: discrepancy terms split over the events
/// N(block, J') = 1 vs ≥ 2, plus the per-block counting inequality.
pub fn matching_minami_variant(cfg: &MatchingConfig) -> Result<MinamiMatchingReport, OperatorError> {
    let mut a1 = Vec::new();
    let mut a2 = Vec::new();
    let mut b = Vec::new();
    let mut multi = 0usize;
    let mut cells = 0usize;
    let mut violations = 0usize;
    for index in 0..cfg.ens.n_samples as u64 {
        let r = run_realization(cfg, index, false)?;
        let mut violated = false;
        let mut a1_r = 0.0;
        let mut a2_r = 0.0;
        let mut b_r = 0.0;
        for &(n_parent, n_block) in &r.block_counts {
            cells += 1;
            if n_block >= 2 {
                multi += 1;
                b_r += (n_parent as f64 - n_block as f64).abs();
            } else if n_block == 1 {
                a1_r += (n_parent as f64 - 1.0).abs().min(1.0);
                if n_parent == 0 {
                    a2_r += 1.0;
                }
            }
            if n_parent > n_block {
                violated = true;
            }
        }
        if violated {
            violations += 1;
        }
        a1.push(a1_r);
        a2.push(a2_r);
        b.push(b_r);
    }
    Ok(MinamiMatchingReport {
        a1_term: mean(&a1),
        a2_term: mean(&a2),
        b_term: mean(&b),
        multi_block_fraction: if cells == 0 {
            0.0
        } else {
            multi as f64 / cells as f64
        },
        count_violations: violations,
        n_realizations: cfg.ens.n_samples,
    })
}

/// Convenience: rescaled parent process of one realization (used by callers
/// assembling ξ and η streams for reports).
pub fn parent_process(
    cfg: &MatchingConfig,
    index: u64,
) -> Result<crate::pointprocess::ScaledPointProcess, OperatorError> {
    let parent_box = LatticeBox::new(cfg.ens.dim, cfg.ens.side, vec![0; cfg.ens.dim])
        .expect("validated geometry");
    let real =
        crate::operator::sample_potential(&cfg.ens.potential, &parent_box, cfg.ens.seed, index)?;
    let h = assemble(&parent_box, &real, cfg.ens.lambda, cfg.ens.bc)?;
    let w = eigen_window(&h, cfg.e0, cfg.a / parent_box.len() as f64).expect("window solve");
    Ok(build_process(&w.data, cfg.e0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::PotentialSpec;

    #[test]
    fn clusters_split_on_large_gaps() {
        let xs = [0.0, 0.1, 0.2, 1.0, 1.05, 3.0];
        let cl = epsilon_clusters(&xs, 0.1);
        assert_eq!(cl, vec![0..3, 3..5, 5..6]);
        assert!(epsilon_clusters(&[], 0.1).is_empty());
    }

    #[test]
    fn matching_identical_lists_is_perfect() {
        let xs = [1.0, 2.0, 3.0];
        let m = match_energies(&xs, &xs, 0.5);
        assert_eq!(m.pairs.len(), 3);
        assert_eq!(m.max_distance, 0.0);
        assert_eq!(m.unmatched_left + m.unmatched_right, 0);
    }

    #[test]
    fn matching_respects_cap_and_injectivity() {
        let left = [0.0, 0.1, 5.0];
        let right = [0.05, 9.0];
        let m = match_energies(&left, &right, 0.2);
        // only one of {0.0, 0.1} can take 0.05; 5.0 and 9.0 stay unmatched
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.unmatched_left, 2);
        assert_eq!(m.unmatched_right, 1);
        let mut seen_r = std::collections::HashSet::new();
        for &(_, r, _) in &m.pairs {
            assert!(seen_r.insert(r), "right index matched twice");
        }
    }

    #[test]
    fn matching_prefers_closer_assignment() {
        let left = [0.0, 1.0];
        let right = [0.1, 1.1];
        let m = match_energies(&left, &right, 0.5);
        assert_eq!(m.pairs.len(), 2);
        for &(l, r, d) in &m.pairs {
            assert_eq!(l, r);
            assert!((d - 0.1).abs() < 1e-12);
        }
    }

    fn test_cfg(side: i64, n: usize, seed: u64) -> MatchingConfig {
        MatchingConfig {
            ens: Ensemble {
                potential: PotentialSpec::Uniform { lo: 0.0, hi: 1.0 },
                dim: 1,
                side,
                lambda: 5.0,
                bc: BoundaryCondition::Periodic,
                seed,
                n_samples: n,
            },
            l_k: 23,
            l_km1: 8,
            e0: 2.5,
            a: 4.0,
            gamma_prime: 0.5,
            f_energy: Interval::new(-2.0, 2.0),
        }
    }

    #[test]
    fn decoupled_parent_matches_perfectly() {
        let cfg = test_cfg(110, 10, 3);
        let rep = decoupled_sanity(&cfg).unwrap();
        assert_eq!(rep.total_unmatched_parent, 0, "{rep:?}");
        for r in &rep.realizations {
            for &d in &r.distances {
                assert!(d <= 1e-9, "distance {d} exceeds solver tolerance");
            }
        }
        assert_eq!(rep.within_bound_fraction, 1.0);
    }

    #[test]
    fn zero_test_function_gives_zero_discrepancy() {
        let mut cfg = test_cfg(110, 5, 4);
        cfg.f_energy = Interval::new(0.0, 0.0); // empty support
        let rep = matching_experiment(&cfg).unwrap();
        for r in &rep.realizations {
            assert_eq!(r.discrepancy, 0.0);
        }
    }

    #[test]
    fn coupled_run_produces_reasonable_matching() {
        let cfg = test_cfg(110, 20, 5);
        let rep = matching_experiment(&cfg).unwrap();
        // most pairs should satisfy the theory cap with a healthy γ'
        assert!(rep.within_bound_fraction >= 0.5, "{}", rep.within_bound_fraction);
        // injectivity and bookkeeping
        for r in &rep.realizations {
            let matched: usize = rep.total_matched;
            assert!(matched >= r.distances.len());
        }
    }

    #[test]
    fn minami_variant_counts_are_consistent() {
        let cfg = test_cfg(110, 20, 6);
        let rep = matching_minami_variant(&cfg).unwrap();
        assert!(rep.multi_block_fraction >= 0.0 && rep.multi_block_fraction <= 1.0);
        assert!(rep.b_term >= 0.0);
        assert!(rep.count_violations <= rep.n_realizations);
    }

    #[test]
    fn counting_identity_partition() {
        // Σ_p N(J, C_p) + boundary + remainder centers = N(J) exactly
        let cfg = test_cfg(110, 8, 7);
        for index in 0..cfg.ens.n_samples as u64 {
            let r = run_realization(&cfg, index, false).unwrap();
            let total_in_cores: usize = r.block_counts.iter().map(|c| c.0).sum();
            let p = parent_process(&cfg, index).unwrap();
            assert_eq!(total_in_cores + r.boundary_centers, p.len());
        }
    }
}
