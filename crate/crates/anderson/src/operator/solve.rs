//! Linear solves for shifted d=1 operators: tridiagonal LU with partial
//! pivoting and the cyclic (ring) variant via a rank-2 Woodbury correction.
//! Complex shifts are the common case (Green functions), real shifts reuse
//! the same code path.

use num_complex::Complex64;

type C = Complex64;

/// LU factorization of a symmetric tridiagonal matrix with partial pivoting
/// (gttrf-style: one extra superdiagonal of fill).
pub struct TridiagFactor {
    n: usize,
    dl: Vec<C>,
    d: Vec<C>,
    du: Vec<C>,
    du2: Vec<C>,
    swap: Vec<bool>,
    min_pivot: f64,
    max_pivot: f64,
}

impl TridiagFactor {
    pub fn new(diag: &[C], off: &[f64]) -> Self {
        Self::with_fixup(diag, off, 0.0)
    }

    /// Like `new`, but pivots with |pivot| < fixup are replaced by fixup
    /// (phase preserved). Used by inverse iteration at near-eigenvalue shifts.
    pub fn with_fixup(diag: &[C], off: &[f64], fixup: f64) -> Self {
        let n = diag.len();
        assert!(n >= 1 && off.len() + 1 == n || n == 1);
        let mut d = diag.to_vec();
        let mut dl: Vec<C> = off.iter().map(|&o| C::new(o, 0.0)).collect();
        let mut du: Vec<C> = dl.clone();
        let mut du2 = vec![C::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];

        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                // no interchange
                let pivot = fix(d[i], fixup);
                d[i] = pivot;
                if pivot.norm() > 0.0 {
                    let fact = dl[i] / pivot;
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                // interchange rows i and i+1
                swap[i] = true;
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
            }
        }
        if n >= 1 {
            d[n - 1] = fix(d[n - 1], fixup);
        }
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot: f64 = 0.0;
        for p in &d {
            min_pivot = min_pivot.min(p.norm());
            max_pivot = max_pivot.max(p.norm());
        }
        Self {
            n,
            dl,
            d,
            du,
            du2,
            swap,
            min_pivot,
            max_pivot,
        }
    }

    /// min |pivot| / max |pivot|; 0 for an exactly singular factorization.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn solve(&self, b: &mut [C]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            let bi = b[i];
            b[i + 1] -= self.dl[i] * bi;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn fix(p: C, fixup: f64) -> C {
    if fixup > 0.0 && p.norm() < fixup {
        if p.norm() == 0.0 {
            C::new(fixup, 0.0)
        } else {
            p / p.norm() * fixup
        }
    } else {
        p
    }
}

/// Shifted ring matrix T + c(e₀e_{n−1}ᵀ + e_{n−1}e₀ᵀ) factored via Woodbury:
/// two extra tridiagonal solves and a 2×2 capacitance system per solve.
pub struct CyclicFactor {
    tri: TridiagFactor,
    w1: Vec<C>,
    w2: Vec<C>,
    /// capacitance matrix C⁻¹ + Uᵀ T⁻¹ U, row-major
    m: [C; 4],
    det_scale: f64,
}

impl CyclicFactor {
    pub fn new(diag: &[C], off: &[f64], corner: f64) -> Self {
        Self::with_fixup(diag, off, corner, 0.0)
    }

    pub fn with_fixup(diag: &[C], off: &[f64], corner: f64, fixup: f64) -> Self {
        let n = diag.len();
        assert!(n >= 3, "ring solve needs n >= 3");
        let tri = TridiagFactor::with_fixup(diag, off, fixup);
        let mut w1 = vec![C::new(0.0, 0.0); n];
        w1[0] = C::new(1.0, 0.0);
        tri.solve(&mut w1);
        let mut w2 = vec![C::new(0.0, 0.0); n];
        w2[n - 1] = C::new(1.0, 0.0);
        tri.solve(&mut w2);
        let cinv = C::new(1.0 / corner, 0.0);
        let m = [
            w1[0],
            w2[0] + cinv,
            w1[n - 1] + cinv,
            w2[n - 1],
        ];
        let det_scale = m.iter().map(|x| x.norm()).fold(0.0f64, f64::max).powi(2);
        Self {
            tri,
            w1,
            w2,
            m,
            det_scale,
        }
    }

    pub fn pivot_ratio(&self) -> f64 {
        let det = (self.m[0] * self.m[3] - self.m[1] * self.m[2]).norm();
        let cap_ratio = if self.det_scale == 0.0 {
            0.0
        } else {
            det / self.det_scale
        };
        self.tri.pivot_ratio().min(cap_ratio)
    }

    pub fn solve(&self, b: &mut [C]) {
        let n = b.len();
        self.tri.solve(b);
        let v0 = b[0];
        let v1 = b[n - 1];
        // 2x2 solve M y = v
        let mut det = self.m[0] * self.m[3] - self.m[1] * self.m[2];
        // relative floor keeps inverse iteration at an exact eigenvalue from
        // overflowing; exact singularity is reported through pivot_ratio
        let floor = f64::EPSILON * self.det_scale.max(f64::MIN_POSITIVE.sqrt());
        if det.norm() < floor {
            det = if det.norm() == 0.0 {
                C::new(floor, 0.0)
            } else {
                det / det.norm() * floor
            };
        }
        let y0 = (self.m[3] * v0 - self.m[1] * v1) / det;
        let y1 = (self.m[0] * v1 - self.m[2] * v0) / det;
        for i in 0..n {
            b[i] -= self.w1[i] * y0 + self.w2[i] * y1;
        }
    }
}
