//! Poisson-limit goodness-of-fit suite for rescaled eigenvalue/center
//! processes, plus the block-process (null-array) diagnostics.

use serde::{Deserialize, Serialize};

use crate::pointprocess::{ScaledPointProcess, SpaceWindow};
use crate::spectral::Interval;
use crate::stats::gof::{chi_square_gof, ks_test, poisson_pmf, ChiSquareResult, KsResult};
use crate::stats::{mean, variance};

/// Counting-law statistics over the reference rectangle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountingStats {
    pub chi: ChiSquareResult,
    pub mean: f64,
    pub variance: f64,
    pub var_over_mean: f64,
    pub expected_mean: f64,
}

/// Empirical Σ_p P(η_p(A) ≥ 1) and ≥ 2 against their limit targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockSums {
    pub sum_p_ge1: f64,
    pub sum_p_ge2: f64,
    /// Binomial standard error of sum_p_ge1.
    pub sigma_ge1: f64,
    /// Target n̂·|A| for sum_p_ge1 (the ≥2 target is 0).
    pub target_ge1: f64,
    pub n_blocks: usize,
}

/// Full Poisson goodness-of-fit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonReport {
    /// Nearest-neighbor gaps of the energy marginal vs Exponential(n̂).
    pub gap_ks: KsResult,
    pub counting: CountingStats,
    /// Center uniformity over equal bins of the first coordinate.
    pub spatial: ChiSquareResult,
    /// 2×2 contingency energy-sign × position-half independence test.
    pub independence: ChiSquareResult,
    pub block_sums: Option<BlockSums>,
    pub n_realizations: usize,
    pub total_atoms: usize,
    pub underpowered: bool,
}

impl PoissonReport {
    /// Does the suite reject the Poisson hypothesis at level `alpha`?
    pub fn rejects(&self, alpha: f64) -> bool {
        self.gap_ks.p_value < alpha
            || (!self.counting.chi.underpowered && self.counting.chi.p_value < alpha)
            || (!self.spatial.underpowered && self.spatial.p_value < alpha)
    }
}

/// Run the Poisson suite.
///
/// * `processes` — one rescaled process per realization, covering at least
///   the scaled-energy window [−a, a].
/// * `n_hat` — density-of-states estimate: intensity per unit scaled energy.
/// * `a` — half-width of the analysis window in scaled energy.
/// * `rect` — energy side of the counting rectangle A (space side is all of K).
/// * `m_bins` — spatial uniformity bins along each axis.
pub fn poisson_suite(
    processes: &[ScaledPointProcess],
    n_hat: f64,
    a: f64,
    rect: Interval,
    m_bins: usize,
    block_processes: Option<&[Vec<ScaledPointProcess>]>,
) -> PoissonReport {
    assert!(!processes.is_empty(), "no realizations");
    assert!(n_hat > 0.0, "n_hat must be positive");
    assert!(a > 0.0 && m_bins >= 2);
    let window = Interval::new(-a, a);
    let full = SpaceWindow::full(processes[0].dim);

    // (a) pooled nearest-neighbor gaps vs Exponential(n_hat)
    let mut gaps: Vec<f64> = Vec::new();
    let mut positions: Vec<f64> = Vec::new();
    let mut pooled_atoms: Vec<(f64, f64)> = Vec::new();
    for p in processes {
        let es: Vec<f64> = p
            .atoms
            .iter()
            .filter(|at| window.contains(at.energy))
            .map(|at| at.energy)
            .collect();
        for w in es.windows(2) {
            gaps.push(w[1] - w[0]);
        }
        for at in &p.atoms {
            if window.contains(at.energy) {
                positions.push(at.position[0]);
                pooled_atoms.push((at.energy, at.position[0]));
            }
        }
    }
    let gap_ks = if gaps.is_empty() {
        KsResult {
            statistic: 1.0,
            p_value: 0.0,
            n: 0,
        }
    } else {
        let cdf = windowed_gap_cdf(n_hat, 2.0 * a);
        ks_test(&gaps, cdf)
    };

    // (b) counting law in A = rect × K
    let counts: Vec<usize> = processes.iter().map(|p| p.count(rect, &full)).collect();
    let mu = n_hat * rect.width();
    let k_max = counts.iter().copied().max().unwrap_or(0).max(3) + 3;
    let n_real = processes.len() as f64;
    let mut observed = vec![0.0f64; k_max + 1];
    for &c in &counts {
        observed[c.min(k_max)] += 1.0;
    }
    let mut expected: Vec<f64> = (0..=k_max).map(|k| n_real * poisson_pmf(k, mu)).collect();
    // fold the residual tail mass into the last cell
    let tail = n_real - expected.iter().sum::<f64>();
    if let Some(last) = expected.last_mut() {
        *last += tail.max(0.0);
    }
    let chi = chi_square_gof(&observed, &expected, 0);
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (m, v) = (mean(&xs), variance(&xs));
    let counting = CountingStats {
        chi,
        mean: m,
        variance: v,
        var_over_mean: if m > 0.0 { v / m } else { f64::NAN },
        expected_mean: mu,
    };

    // (c) spatial uniformity of centers over m_bins equal bins
    let spatial = {
        let mut obs = vec![0.0f64; m_bins];
        for &u in &positions {
            let b = ((u * m_bins as f64) as usize).min(m_bins - 1);
            obs[b] += 1.0;
        }
        let exp = vec![positions.len() as f64 / m_bins as f64; m_bins];
        chi_square_gof(&obs, &exp, 0)
    };

    // energy-sign × position-half 2×2 contingency test
    let independence = contingency_2x2(&pooled_atoms);

    let block_sums = block_processes.map(|bps| block_sums(bps, rect, n_hat));

    let total_atoms = positions.len();
    PoissonReport {
        gap_ks,
        counting,
        spatial,
        independence,
        block_sums,
        n_realizations: processes.len(),
        total_atoms,
        underpowered: processes.len() < 200 || total_atoms < 50,
    }
}

/// CDF of nearest-neighbor gaps of a rate-ν Poisson process observed through
/// a window of length `t`: density ∝ (t−g)·νe^{−νg} on (0, t). The (t−g)
/// factor is the finite-window correction to the exponential law — a gap g
/// has only t−g admissible left endpoints, so the plain Exponential(ν) CDF
/// is biased for windows that are not ≫ 1/ν.
pub fn windowed_gap_cdf(nu: f64, t: f64) -> impl Fn(f64) -> f64 {
    let raw = move |g: f64| {
        let g = g.clamp(0.0, t);
        t * (1.0 - (-nu * g).exp()) - (1.0 - (-nu * g).exp() * (1.0 + nu * g)) / nu
    };
    let z = raw(t);
    move |g: f64| {
        if g <= 0.0 {
            0.0
        } else if g >= t {
            1.0
        } else {
            (raw(g) / z).clamp(0.0, 1.0)
        }
    }
}

fn contingency_2x2(atoms: &[(f64, f64)]) -> ChiSquareResult {
    let n = atoms.len() as f64;
    if atoms.len() < 20 {
        return ChiSquareResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            bins_used: 0,
            underpowered: true,
        };
    }
    // median split in energy, half split in space
    let mut es: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    es.sort_by(f64::total_cmp);
    let med = es[es.len() / 2];
    let mut table = [[0.0f64; 2]; 2];
    for &(e, u) in atoms {
        let i = usize::from(e >= med);
        let j = usize::from(u >= 0.5);
        table[i][j] += 1.0;
    }
    let row: Vec<f64> = (0..2).map(|i| table[i][0] + table[i][1]).collect();
    let col: Vec<f64> = (0..2).map(|j| table[0][j] + table[1][j]).collect();
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = row[i] * col[j] / n;
            if e > 0.0 {
                let d = table[i][j] - e;
                stat += d * d / e;
            }
        }
    }
    let dist = statrs::distribution::ChiSquared::new(1.0).unwrap();
    use statrs::distribution::ContinuousCDF;
    ChiSquareResult {
        statistic: stat,
        dof: 1,
        p_value: (1.0 - dist.cdf(stat)).clamp(0.0, 1.0),
        bins_used: 4,
        underpowered: false,
    }
}

/// Σ_p P̂(η_p(A) ≥ 1) and ≥ 2 across realizations of block processes.
/// `bps[r][p]` is block p of realization r; block count must be constant.
pub fn block_sums(bps: &[Vec<ScaledPointProcess>], rect: Interval, n_hat: f64) -> BlockSums {
    assert!(!bps.is_empty());
    let n_blocks = bps[0].len();
    let full = SpaceWindow::full(bps[0][0].dim);
    let n = bps.len() as f64;
    let mut sum1 = 0.0;
    let mut sum2 = 0.0;
    let mut var1 = 0.0;
    for p in 0..n_blocks {
        let mut ge1 = 0usize;
        let mut ge2 = 0usize;
        for r in bps {
            assert_eq!(r.len(), n_blocks, "ragged block structure");
            let c = r[p].count(rect, &full);
            if c >= 1 {
                ge1 += 1;
            }
            if c >= 2 {
                ge2 += 1;
            }
        }
        let p1 = ge1 as f64 / n;
        sum1 += p1;
        sum2 += ge2 as f64 / n;
        var1 += p1 * (1.0 - p1) / n;
    }
    BlockSums {
        sum_p_ge1: sum1,
        sum_p_ge2: sum2,
        sigma_ge1: var1.sqrt(),
        target_ge1: n_hat * rect.width(),
        n_blocks,
    }
}

/// Null-array diagnostic: sup_p P̂(η_p(A) ≥ 1) and the tail law of the
/// superposed count, per decomposition level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullArrayRow {
    pub level: usize,
    pub sup_p_ge1: f64,
    /// P̂(Σ_p η_p(A) ≥ t) for each t in the requested grid.
    pub tail: Vec<(usize, f64)>,
}

/// Evaluate the null-array table for several levels of block processes.
pub fn null_array_check(
    levels: &[(usize, &[Vec<ScaledPointProcess>])],
    rect: Interval,
    t_grid: &[usize],
) -> Vec<NullArrayRow> {
    levels
        .iter()
        .map(|&(level, bps)| {
            let full = SpaceWindow::full(bps[0][0].dim);
            let n = bps.len() as f64;
            let n_blocks = bps[0].len();
            let mut sup = 0.0f64;
            for p in 0..n_blocks {
                let ge1 = bps.iter().filter(|r| r[p].count(rect, &full) >= 1).count();
                sup = sup.max(ge1 as f64 / n);
            }
            let totals: Vec<usize> = bps
                .iter()
                .map(|r| r.iter().map(|b| b.count(rect, &full)).sum())
                .collect();
            let tail = t_grid
                .iter()
                .map(|&t| {
                    let frac = totals.iter().filter(|&&s| s >= t).count() as f64 / n;
                    (t, frac)
                })
                .collect();
            NullArrayRow {
                level,
                sup_p_ge1: sup,
                tail,
            }
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::pointprocess::Atom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Simulate one realization of a Poisson process with intensity `nu` per
    /// unit energy on [−a, a] × [0,1).
    pub(crate) fn simulate_poisson(rng: &mut ChaCha12Rng, nu: f64, a: f64) -> ScaledPointProcess {
        let mut atoms = Vec::new();
        let mut e = -a;
        loop {
            e += -(1.0 - rng.gen::<f64>()).ln() / nu;
            if e >= a {
                break;
            }
            atoms.push(Atom {
                energy: e,
                position: vec![rng.gen::<f64>()],
                weight: 1.0,
            });
        }
        ScaledPointProcess {
            e0: 0.0,
            volume: 1.0,
            side: 1.0,
            dim: 1,
            origin: vec![0],
            atoms,
        }
    }

    fn poisson_sample(seed: u64, n_real: usize, nu: f64, a: f64) -> Vec<ScaledPointProcess> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n_real).map(|_| simulate_poisson(&mut rng, nu, a)).collect()
    }

    #[test]
    fn accepts_true_poisson_input() {
        let nu = 0.15;
        let procs = poisson_sample(1, 400, nu, 30.0);
        let rep = poisson_suite(&procs, nu, 30.0, Interval::new(-2.0, 2.0), 10, None);
        assert!(!rep.rejects(0.01), "true Poisson rejected: {rep:?}");
        assert!((rep.counting.var_over_mean - 1.0).abs() <= 0.15);
        assert!(!rep.underpowered);
    }

    #[test]
    fn rejects_rigid_spectrum() {
        // picket-fence atoms: gaps deterministic, counting variance ~ 0
        let nu = 0.5;
        let mut procs = Vec::new();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..300 {
            let jitter: f64 = rng.gen::<f64>() / nu;
            let atoms: Vec<Atom> = (0..40)
                .map(|i| Atom {
                    energy: -20.0 / nu + (i as f64 + jitter) / nu,
                    position: vec![rng.gen::<f64>()],
                    weight: 1.0,
                })
                .collect();
            procs.push(ScaledPointProcess {
                e0: 0.0,
                volume: 1.0,
                side: 1.0,
                dim: 1,
                origin: vec![0],
                atoms,
            });
        }
        let rep = poisson_suite(&procs, nu, 20.0 / nu, Interval::new(-2.0, 2.0), 10, None);
        assert!(rep.rejects(0.01), "rigid spectrum accepted");
        assert!(rep.counting.var_over_mean < 0.5);
    }

    #[test]
    fn calibration_rejection_rate_is_small() {
        // repeated true-null suites at 1%: rejection rate must stay small
        let nu = 0.2;
        let mut rejections = 0;
        for seed in 0..40 {
            let procs = poisson_sample(100 + seed, 250, nu, 25.0);
            if poisson_suite(&procs, nu, 25.0, Interval::new(-2.0, 2.0), 10, None).rejects(0.01) {
                rejections += 1;
            }
        }
        assert!(rejections <= 3, "{rejections}/40 null suites rejected");
    }

    #[test]
    fn single_atom_is_underpowered() {
        let p = ScaledPointProcess {
            e0: 0.0,
            volume: 1.0,
            side: 1.0,
            dim: 1,
            origin: vec![0],
            atoms: vec![Atom {
                energy: 0.1,
                position: vec![0.3],
                weight: 1.0,
            }],
        };
        let rep = poisson_suite(&[p], 1.0, 5.0, Interval::new(-2.0, 2.0), 10, None);
        assert!(rep.underpowered);
    }

    #[test]
    fn block_sums_poisson_identity() {
        // independent Poisson blocks: Σ_p P(≥1) ≈ Σ_p (1−e^{−μ_p}) ≈ n_hat|A|
        let nu = 0.1;
        let n_blocks = 10;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut bps = Vec::new();
        for _ in 0..500 {
            let blocks: Vec<ScaledPointProcess> = (0..n_blocks)
                .map(|_| simulate_poisson(&mut rng, nu / n_blocks as f64, 4.0))
                .collect();
            bps.push(blocks);
        }
        let rect = Interval::new(-2.0, 2.0);
        let bs = block_sums(&bps, rect, nu);
        // per-block mean μ_p = (nu/10)·4 = 0.04; P(≥2) tiny
        assert!(bs.sum_p_ge2 < 0.05, "{}", bs.sum_p_ge2);
        assert!(
            (bs.sum_p_ge1 - bs.target_ge1).abs() <= 3.0 * bs.sigma_ge1 + 0.05,
            "{} vs {}",
            bs.sum_p_ge1,
            bs.target_ge1
        );
    }

    #[test]
    fn null_array_rows_behave() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let coarse: Vec<Vec<ScaledPointProcess>> = (0..200)
            .map(|_| (0..4).map(|_| simulate_poisson(&mut rng, 0.05, 4.0)).collect())
            .collect();
        let fine: Vec<Vec<ScaledPointProcess>> = (0..200)
            .map(|_| (0..20).map(|_| simulate_poisson(&mut rng, 0.01, 4.0)).collect())
            .collect();
        let rows = null_array_check(
            &[(0, coarse.as_slice()), (1, fine.as_slice())],
            Interval::new(-2.0, 2.0),
            &[1, 2],
        );
        assert_eq!(rows.len(), 2);
        // finer level: smaller per-block hit probability
        assert!(rows[1].sup_p_ge1 <= rows[0].sup_p_ge1 + 0.05);
        for row in &rows {
            for w in row.tail.windows(2) {
                assert!(w[1].1 <= w[0].1, "tail not monotone");
            }
        }
    }

    #[test]
    fn empty_rect_counts_zero() {
        let procs = poisson_sample(11, 50, 0.3, 10.0);
        let bs = block_sums(
            &procs.iter().map(|p| vec![p.clone()]).collect::<Vec<_>>(),
            Interval::new(5.0, 5.0),
            0.3,
        );
        assert_eq!(bs.sum_p_ge1, 0.0);
        assert_eq!(bs.sum_p_ge2, 0.0);
    }
}
