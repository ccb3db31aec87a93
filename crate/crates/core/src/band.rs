//! Banded Gaussian elimination with partial pivoting.
//!
//! The 5-point stencils assembled in this crate produce matrices whose
//! bandwidth equals the grid row length, so a band solver covers every linear
//! system here: Newton steps, auxiliary Dirichlet problems and the inverse
//! power iteration. Partial pivoting widens the upper band by `kl`, which the
//! storage pre-allocates. The factorization also tracks the determinant sign
//! (pivot signs and row swaps), used to tag Jacobians along solution branches.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major storage of width `2*kl + ku + 1`; entry `(i, j)` lives at
    /// `data[i * width + (j + kl - i)]`. The extra `kl` columns hold pivoting
    /// fill-in.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, data: vec![0.0; n * width] }
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width() + (j + self.kl - i)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// `y = A x` using the original (unfactored) entries.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let jmin = i.saturating_sub(self.kl);
            let jmax = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in jmin..=jmax {
                acc += self.data[self.slot(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// LU factorization with partial pivoting; consumes the matrix.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let ku_eff = self.ku + kl;
        let mut pivots = vec![0usize; n];
        let mut det_sign: i8 = 1;

        for k in 0..n {
            // pivot search within the subdiagonal band
            let imax = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in (k + 1)..=imax {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularSystem(k));
            }
            pivots[k] = p;
            if p != k {
                det_sign = -det_sign;
                let jmax = (k + ku_eff).min(n - 1);
                for j in k..=jmax {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            if pivot < 0.0 {
                det_sign = -det_sign;
            }
            for i in (k + 1)..=imax {
                let m = self.get(i, k) / pivot;
                self.set(i, k, m);
                if m != 0.0 {
                    let jmax = (k + ku_eff).min(n - 1);
                    for j in (k + 1)..=jmax {
                        let akj = self.data[self.slot(k, j)];
                        if akj != 0.0 {
                            let s = self.slot(i, j);
                            self.data[s] -= m * akj;
                        }
                    }
                }
            }
        }

        Ok(BandLu { mat: self, pivots, det_sign })
    }
}

/// Factored form of a [`BandMatrix`]; solves share the factorization.
#[derive(Clone, Debug)]
pub struct BandLu {
    mat: BandMatrix,
    pivots: Vec<usize>,
    det_sign: i8,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.mat.n
    }

    /// Sign of the determinant: `+1`, `-1` (never `0`; zero pivots fail `factor`).
    pub fn det_sign(&self) -> i8 {
        self.det_sign
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.mat.n;
        assert_eq!(b.len(), n);
        let kl = self.mat.kl;
        let ku_eff = self.mat.ku + kl;
        // forward substitution with the stored multipliers
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let imax = (k + kl).min(n - 1);
            let bk = b[k];
            if bk != 0.0 {
                for i in (k + 1)..=imax {
                    b[i] -= self.mat.get(i, k) * bk;
                }
            }
        }
        // back substitution
        for k in (0..n).rev() {
            let jmax = (k + ku_eff).min(n - 1);
            let mut acc = b[k];
            for j in (k + 1)..=jmax {
                acc -= self.mat.get(k, j) * b[j];
            }
            b[k] = acc / self.mat.get(k, k);
        }
    }
}
