//! Geometry of finite boxes in Z^d.
//!
//! Boxes are axis-aligned cubes with a fixed per-axis side length and a
//! deterministic lexicographic site ordering. The ℓ¹ metric is used
//! throughout. Also provides the multiscale schedule L_{k+1} = round(L_k^α)
//! and the decomposition of a box into disjoint blocks with cores and shells.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A lattice point in Z^d.
pub type Site = Vec<i64>;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("dimension must be >= 1, got {0}")]
    BadDimension(usize),
    #[error("side length must be >= 1, got {0}")]
    BadSide(i64),
    #[error("centered box requires odd side length, got {0}")]
    EvenCenteredSide(i64),
    #[error("growth exponent alpha = {alpha} outside admissible interval (1, {limit})")]
    BadAlpha { alpha: f64, limit: f64 },
    #[error("gamma' = {gamma_prime} must satisfy 0 < gamma' < gamma = {gamma}")]
    BadGamma { gamma: f64, gamma_prime: f64 },
    #[error("schedule depth must be >= 1")]
    EmptySchedule,
    #[error("block side {l_k} must exceed twice the strip width {l_km1} (core would be empty)")]
    EmptyCore { l_k: i64, l_km1: i64 },
    #[error("block side {l_k} must be smaller than the parent side {parent}")]
    BlockTooLarge { l_k: i64, parent: i64 },
}

/// ℓ¹ distance between two sites.
pub fn l1_distance(x: &[i64], y: &[i64]) -> i64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// A finite box {origin, .., origin + side - 1}^d with lexicographic site order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    dim: usize,
    side: i64,
    origin: Site,
}

impl LatticeBox {
    /// Build a box with `side^dim` sites whose lowest corner is `origin`.
    pub fn new(dim: usize, side: i64, origin: Site) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::BadDimension(dim));
        }
        if side < 1 {
            return Err(LatticeError::BadSide(side));
        }
        assert_eq!(origin.len(), dim, "origin dimension mismatch");
        Ok(Self { dim, side, origin })
    }

    /// Centered constructor Λ_L(x). Only odd sides have an unambiguous center,
    /// so even sides are rejected; every site then satisfies |x − y|₁-per-axis
    /// ≤ L/2.
    pub fn centered(dim: usize, side: i64, center: &[i64]) -> Result<Self, LatticeError> {
        if side >= 1 && side % 2 == 0 {
            return Err(LatticeError::EvenCenteredSide(side));
        }
        let half = side / 2;
        let origin = center.iter().map(|c| c - half).collect();
        Self::new(dim, side, origin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> i64 {
        self.side
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    /// Number of sites |Λ| = side^dim.
    pub fn len(&self) -> usize {
        (self.side as usize).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false // a valid box always has at least one site
    }

    /// Center site (exact for odd sides, rounded down otherwise).
    pub fn center(&self) -> Site {
        self.origin.iter().map(|o| o + self.side / 2).collect()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim
            && x.iter()
                .zip(&self.origin)
                .all(|(xi, oi)| *xi >= *oi && *xi < *oi + self.side)
    }

    /// Lexicographic index of a site (first coordinate most significant).
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        for (xi, oi) in x.iter().zip(&self.origin) {
            idx = idx * self.side as usize + (xi - oi) as usize;
        }
        Some(idx)
    }

    /// Site at a given lexicographic index.
    pub fn site(&self, mut idx: usize) -> Site {
        assert!(idx < self.len(), "site index out of range");
        let mut coords = vec![0i64; self.dim];
        for axis in (0..self.dim).rev() {
            coords[axis] = self.origin[axis] + (idx % self.side as usize) as i64;
            idx /= self.side as usize;
        }
        coords
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(|i| self.site(i))
    }

    /// The 2d unit-ℓ¹ neighbors of a site (in Z^d, not clipped to the box).
    pub fn neighbors(x: &[i64]) -> Vec<Site> {
        let mut out = Vec::with_capacity(2 * x.len());
        for axis in 0..x.len() {
            for delta in [-1i64, 1] {
                let mut y = x.to_vec();
                y[axis] += delta;
                out.push(y);
            }
        }
        out
    }

    /// Shrink by `margin` on every face; None when nothing is left.
    pub fn shrink(&self, margin: i64) -> Option<Self> {
        let side = self.side - 2 * margin;
        if side < 1 {
            return None;
        }
        let origin = self.origin.iter().map(|o| o + margin).collect();
        Some(Self {
            dim: self.dim,
            side,
            origin,
        })
    }
}

/// Inner boundary ∂Λ and the directed edge pairs ∂̃Λ crossing out of Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySets {
    pub inner: Vec<Site>,
    pub edge_pairs: Vec<(Site, Site)>,
}

/// Compute ∂Λ (sites with a neighbor outside) and ∂̃Λ (ordered pairs ⟨y, y'⟩,
/// y ∈ Λ, y' ∉ Λ, |y − y'|₁ = 1).
pub fn boundary_sets(b: &LatticeBox) -> BoundarySets {
    let mut inner = Vec::new();
    let mut edge_pairs = Vec::new();
    for y in b.sites() {
        let mut on_boundary = false;
        for yp in LatticeBox::neighbors(&y) {
            if !b.contains(&yp) {
                on_boundary = true;
                edge_pairs.push((y.clone(), yp));
            }
        }
        if on_boundary {
            inner.push(y);
        }
    }
    BoundarySets { inner, edge_pairs }
}

/// An arbitrary finite set of sites, kept sorted for O(log n) membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteSet {
    sites: Vec<Site>,
}

impl SiteSet {
    pub fn from_sites(mut sites: Vec<Site>) -> Self {
        sites.sort();
        sites.dedup();
        Self { sites }
    }

    pub fn empty() -> Self {
        Self { sites: Vec::new() }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.sites.binary_search_by(|s| s.as_slice().cmp(x)).is_ok()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter()
    }

    /// ℓ¹ distance from `x` to the set; None for the empty set.
    pub fn distance(&self, x: &[i64]) -> Option<i64> {
        self.sites.iter().map(|s| l1_distance(s, x)).min()
    }
}

impl FromIterator<Site> for SiteSet {
    fn from_iter<T: IntoIterator<Item = Site>>(iter: T) -> Self {
        Self::from_sites(iter.into_iter().collect())
    }
}

/// Multiscale schedule L_{k+1} = round(L_k^α) together with the rate pair
/// (γ, γ') and the probability exponent p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub l0: i64,
    pub alpha: f64,
    pub p_exponent: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub levels: Vec<i64>,
}

impl ScaleSchedule {
    /// Upper limit of the admissible α interval, 2p/(p + 2d).
    pub fn alpha_limit(p_exponent: f64, dim: usize) -> f64 {
        2.0 * p_exponent / (p_exponent + 2.0 * dim as f64)
    }
}

/// Build the scale schedule. `alpha` must lie strictly inside
/// (1, 2p/(p + 2d)) and 0 < γ' < γ.
pub fn build_schedule(
    dim: usize,
    l0: i64,
    alpha: f64,
    p_exponent: f64,
    gamma: f64,
    gamma_prime: f64,
    depth: usize,
) -> Result<ScaleSchedule, LatticeError> {
    if dim == 0 {
        return Err(LatticeError::BadDimension(dim));
    }
    if l0 < 1 {
        return Err(LatticeError::BadSide(l0));
    }
    if depth == 0 {
        return Err(LatticeError::EmptySchedule);
    }
    let limit = ScaleSchedule::alpha_limit(p_exponent, dim);
    if !(alpha > 1.0 && alpha < limit) {
        return Err(LatticeError::BadAlpha { alpha, limit });
    }
    if !(gamma_prime > 0.0 && gamma_prime < gamma) {
        return Err(LatticeError::BadGamma { gamma, gamma_prime });
    }
    let mut levels = vec![l0];
    for _ in 1..depth {
        let prev = *levels.last().unwrap() as f64;
        levels.push(prev.powf(alpha).round() as i64);
    }
    Ok(ScaleSchedule {
        l0,
        alpha,
        p_exponent,
        gamma,
        gamma_prime,
        levels,
    })
}

impl ScaleSchedule {
    /// ε_{k−1} = exp(−γ' L_{k−1} / 2) for level index k ≥ 1.
    pub fn epsilon(&self, k: usize) -> f64 {
        assert!(k >= 1 && k < self.levels.len(), "epsilon needs 1 <= k < depth");
        epsilon_for(self.gamma_prime, self.levels[k - 1])
    }
}

/// exp(−γ' L / 2).
pub fn epsilon_for(gamma_prime: f64, l: i64) -> f64 {
    (-gamma_prime * l as f64 / 2.0).exp()
}

/// A box split into disjoint blocks D_p of side L_k with cores C_p and the
/// shell regions S_p (in the parent) and T_p (inside D_p) around the strip
/// D_p ∖ C_p.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub parent: LatticeBox,
    pub blocks: Vec<LatticeBox>,
    pub cores: Vec<LatticeBox>,
    pub shells_s: Vec<SiteSet>,
    pub shells_t: Vec<SiteSet>,
    /// Parent sites not covered by any block (nonempty when L_k does not
    /// divide the parent side).
    pub remainder: SiteSet,
    pub l_k: i64,
    pub l_km1: i64,
}

impl Decomposition {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Sites of D_p ∖ C_p.
    pub fn strip(&self, p: usize) -> SiteSet {
        let core = &self.cores[p];
        self.blocks[p]
            .sites()
            .filter(|x| !core.contains(x))
            .collect()
    }
}

/// Decompose `parent` into ⌊side/L_k⌋^d disjoint blocks of side `l_k`; the
/// strip width `l_km1` defines the cores and shells. Requires
/// l_km1 < l_k < parent side and l_k > 2·l_km1.
pub fn decompose(
    parent: &LatticeBox,
    l_k: i64,
    l_km1: i64,
) -> Result<Decomposition, LatticeError> {
    if l_k >= parent.side() {
        return Err(LatticeError::BlockTooLarge {
            l_k,
            parent: parent.side(),
        });
    }
    if l_k <= 2 * l_km1 {
        return Err(LatticeError::EmptyCore { l_k, l_km1 });
    }
    let d = parent.dim();
    let per_axis = parent.side() / l_k;

    // Block origins on the regular grid, lexicographic in the grid index.
    let mut blocks = Vec::new();
    let mut grid = vec![0i64; d];
    loop {
        let origin: Site = parent
            .origin()
            .iter()
            .zip(&grid)
            .map(|(o, g)| o + g * l_k)
            .collect();
        blocks.push(LatticeBox::new(d, l_k, origin)?);
        // advance the grid counter
        let mut axis = d;
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            grid[axis] += 1;
            if grid[axis] < per_axis {
                break;
            }
            grid[axis] = 0;
            if axis == 0 {
                break;
            }
        }
        if grid.iter().all(|g| *g == 0) {
            break;
        }
    }
    debug_assert_eq!(blocks.len(), (per_axis as usize).pow(d as u32));

    let cores: Vec<LatticeBox> = blocks
        .iter()
        .map(|b| {
            b.shrink(l_km1)
                .expect("core nonempty by the l_k > 2 l_km1 precondition")
        })
        .collect();

    let remainder: SiteSet = parent
        .sites()
        .filter(|x| !blocks.iter().any(|b| b.contains(x)))
        .collect();

    let mut shells_s = Vec::with_capacity(blocks.len());
    let mut shells_t = Vec::with_capacity(blocks.len());
    for (block, core) in blocks.iter().zip(&cores) {
        // Boundary of the strip D_p ∖ C_p: strip sites with a neighbor
        // outside the strip.
        let strip: Vec<Site> = block.sites().filter(|x| !core.contains(x)).collect();
        let strip_set = SiteSet::from_sites(strip.clone());
        let strip_boundary: SiteSet = strip
            .into_iter()
            .filter(|x| {
                LatticeBox::neighbors(x)
                    .iter()
                    .any(|y| !strip_set.contains(y))
            })
            .collect();
        let s_p: SiteSet = parent
            .sites()
            .filter(|x| strip_boundary.distance(x).is_some_and(|r| r <= l_km1))
            .collect();
        let t_p: SiteSet = block
            .sites()
            .filter(|x| strip_boundary.distance(x).is_some_and(|r| r <= l_km1))
            .collect();
        shells_s.push(s_p);
        shells_t.push(t_p);
    }

    Ok(Decomposition {
        parent: parent.clone(),
        blocks,
        cores,
        shells_s,
        shells_t,
        remainder,
        l_k,
        l_km1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_1d_box() {
        let b = LatticeBox::centered(1, 5, &[0]).unwrap();
        let sites: Vec<Site> = b.sites().collect();
        assert_eq!(sites, vec![vec![-2], vec![-1], vec![0], vec![1], vec![2]]);
        for y in b.sites() {
            assert!(l1_distance(&y, &[0]) <= 5 / 2);
        }
    }

    #[test]
    fn box_2d_origin() {
        let b = LatticeBox::new(2, 3, vec![1, 1]).unwrap();
        assert_eq!(b.len(), 9);
        for y in b.sites() {
            assert!(y.iter().all(|c| (1..=3).contains(c)));
        }
        // index_of is a bijection consistent with site()
        for i in 0..b.len() {
            assert_eq!(b.index_of(&b.site(i)), Some(i));
        }
    }

    #[test]
    fn singleton_box() {
        let b = LatticeBox::new(1, 1, vec![0]).unwrap();
        assert_eq!(b.sites().collect::<Vec<_>>(), vec![vec![0]]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LatticeBox::new(0, 3, vec![]).is_err());
        assert!(LatticeBox::new(1, 0, vec![0]).is_err());
        assert!(LatticeBox::centered(1, 4, &[0]).is_err());
    }

    #[test]
    fn boundary_1d_three_sites() {
        let b = LatticeBox::new(1, 3, vec![0]).unwrap();
        let bs = boundary_sets(&b);
        assert_eq!(bs.inner, vec![vec![0], vec![2]]);
        assert_eq!(
            bs.edge_pairs,
            vec![(vec![0], vec![-1]), (vec![2], vec![3])]
        );
    }

    #[test]
    fn boundary_singleton() {
        let b = LatticeBox::new(1, 1, vec![0]).unwrap();
        let bs = boundary_sets(&b);
        assert_eq!(bs.inner, vec![vec![0]]);
        assert_eq!(
            bs.edge_pairs,
            vec![(vec![0], vec![-1]), (vec![0], vec![1])]
        );
    }

    #[test]
    fn boundary_2d_two_by_two() {
        // Brute-force oracle: every site of a 2x2 box touches the outside.
        let b = LatticeBox::new(2, 2, vec![0, 0]).unwrap();
        let bs = boundary_sets(&b);
        assert_eq!(bs.inner.len(), 4);
        assert_eq!(bs.edge_pairs.len(), 8);
        for (y, yp) in &bs.edge_pairs {
            assert!(b.contains(y));
            assert!(!b.contains(yp));
            assert_eq!(l1_distance(y, yp), 1);
        }
    }

    #[test]
    fn schedule_levels_round_to_nearest() {
        // 8^1.5 = 22.63 -> 23, 23^1.5 = 110.3 -> 110
        let s = build_schedule(1, 8, 1.5, 7.0, 0.5, 0.2, 3).unwrap();
        assert_eq!(s.levels, vec![8, 23, 110]);
    }

    #[test]
    fn schedule_epsilon() {
        let s = build_schedule(1, 8, 1.5, 7.0, 0.5, 0.2, 3).unwrap();
        // e^{-0.2 * 23 / 2} = e^{-2.3}
        let eps = s.epsilon(2);
        assert!((eps - (-2.3f64).exp()).abs() < 1e-15);
        assert!((eps - 0.1003).abs() < 1e-4);
    }

    #[test]
    fn schedule_rejects_boundary_alpha() {
        // alpha exactly at 2p/(p+2d) is excluded
        let p = 7.0;
        let limit = ScaleSchedule::alpha_limit(p, 1);
        assert!(build_schedule(1, 8, limit, p, 0.5, 0.2, 3).is_err());
        assert!(build_schedule(1, 8, 1.0, p, 0.5, 0.2, 3).is_err());
        assert!(build_schedule(1, 8, 1.2, p, 0.2, 0.5, 3).is_err());
    }

    #[test]
    fn schedule_admissibility_monotone_in_p() {
        // widening p widens the admissible alpha interval
        let a = ScaleSchedule::alpha_limit(7.0, 1);
        let b = ScaleSchedule::alpha_limit(14.0, 1);
        assert!(b > a);
    }

    #[test]
    fn decompose_1d_strip_removal() {
        let parent = LatticeBox::new(1, 9, vec![1]).unwrap();
        let dec = decompose(&parent, 3, 1).unwrap();
        assert_eq!(dec.block_count(), 3);
        let block_sites: Vec<Vec<Site>> =
            dec.blocks.iter().map(|b| b.sites().collect()).collect();
        assert_eq!(
            block_sites,
            vec![
                vec![vec![1], vec![2], vec![3]],
                vec![vec![4], vec![5], vec![6]],
                vec![vec![7], vec![8], vec![9]],
            ]
        );
        let cores: Vec<Vec<Site>> = dec.cores.iter().map(|c| c.sites().collect()).collect();
        assert_eq!(cores, vec![vec![vec![2]], vec![vec![5]], vec![vec![8]]]);
        assert!(dec.remainder.is_empty());
    }

    #[test]
    fn decompose_rejects_empty_core() {
        let parent = LatticeBox::new(1, 9, vec![1]).unwrap();
        assert!(matches!(
            decompose(&parent, 3, 2),
            Err(LatticeError::EmptyCore { l_k: 3, l_km1: 2 })
        ));
    }

    #[test]
    fn decompose_2d_inner_cores() {
        let parent = LatticeBox::new(2, 8, vec![1, 1]).unwrap();
        let dec = decompose(&parent, 4, 1).unwrap();
        assert_eq!(dec.block_count(), 4);
        for (block, core) in dec.blocks.iter().zip(&dec.cores) {
            assert_eq!(core.len(), 4); // inner 2x2
            // brute-force distance-to-boundary oracle
            let boundary = boundary_sets(block);
            let oracle: Vec<Site> = block
                .sites()
                .filter(|x| {
                    boundary
                        .inner
                        .iter()
                        .map(|b| l1_distance(b, x))
                        .min()
                        .unwrap()
                        >= 1
                })
                .collect();
            let core_sites: Vec<Site> = core.sites().collect();
            assert_eq!(core_sites, oracle);
        }
    }

    #[test]
    fn decompose_partition_property() {
        let parent = LatticeBox::new(1, 11, vec![0]).unwrap();
        let dec = decompose(&parent, 3, 1).unwrap();
        // blocks cover floor(11/3)*3 = 9 sites, remainder = 2
        assert_eq!(dec.remainder.len(), 2);
        let mut all: Vec<Site> = dec
            .blocks
            .iter()
            .flat_map(|b| b.sites().collect::<Vec<_>>())
            .chain(dec.remainder.iter().cloned())
            .collect();
        all.sort();
        let expected: Vec<Site> = parent.sites().collect();
        assert_eq!(all, expected);
        // pairwise disjoint
        let total: usize = dec.blocks.iter().map(|b| b.len()).sum::<usize>() + dec.remainder.len();
        assert_eq!(total, parent.len());
    }

    #[test]
    fn core_distance_invariant() {
        let parent = LatticeBox::new(2, 9, vec![0, 0]).unwrap();
        let dec = decompose(&parent, 8, 2).unwrap();
        for (block, core) in dec.blocks.iter().zip(&dec.cores) {
            let boundary = boundary_sets(block);
            for x in core.sites() {
                let dist = boundary
                    .inner
                    .iter()
                    .map(|b| l1_distance(b, &x))
                    .min()
                    .unwrap();
                assert!(dist >= dec.l_km1);
            }
        }
    }

    #[test]
    fn shells_cover_strip_boundary() {
        let parent = LatticeBox::new(1, 9, vec![1]).unwrap();
        let dec = decompose(&parent, 3, 1).unwrap();
        for p in 0..dec.block_count() {
            let strip = dec.strip(p);
            // T_p sits inside D_p, S_p inside the parent
            for x in dec.shells_t[p].iter() {
                assert!(dec.blocks[p].contains(x));
            }
            for x in dec.shells_s[p].iter() {
                assert!(dec.parent.contains(x));
            }
            // every strip site is within l_km1 of its own boundary here
            for x in strip.iter() {
                assert!(dec.shells_t[p].contains(x));
            }
        }
    }
}
