//! Real band matrices with an LU factorization without pivoting, solved
//! against complex right-hand sides.
//!
//! Only used for the per-mode implicit systems, whose row-scaled form has a
//! positive definite symmetric part, so elimination without pivoting is
//! stable.

use rustfft::num_complex::Complex64;

#[derive(Clone, Debug)]
pub(crate) struct Band {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl Band {
    pub(crate) fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Band {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        i * (self.kl + self.ku + 1) + j + self.kl - i
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub(crate) fn scale_row(&mut self, i: usize, s: f64) {
        for j in i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n) {
            let k = self.idx(i, j);
            self.data[k] *= s;
        }
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub(crate) fn mul(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.cols(i).map(|j| x[j] * self.get(i, j)).sum();
        }
    }

    fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.cols(i).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// LU factors of a [`Band`], stored alongside the original for residual
/// checks.
#[derive(Clone, Debug)]
pub(crate) struct BandLu {
    a: Band,
    lu: Band,
    norm: f64,
}

impl BandLu {
    /// Returns `None` on a zero pivot.
    pub(crate) fn new(a: Band) -> Option<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        for k in 0..n {
            let piv = lu.get(k, k);
            if piv == 0.0 || !piv.is_finite() {
                return None;
            }
            for i in k + 1..(k + lu.kl + 1).min(n) {
                let l = lu.get(i, k) / piv;
                lu.set(i, k, l);
                for j in k + 1..(k + lu.ku + 1).min(n) {
                    let v = lu.get(i, j) - l * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        let norm = a.inf_norm();
        Some(BandLu { a, lu, norm })
    }

    /// Solves `A x = b` in place and returns the normwise relative residual
    /// `|A x - b| / (|A| |x| + |b|)`. `scratch` needs room for `2 n` values.
    pub(crate) fn solve(&self, b: &mut [Complex64], scratch: &mut [Complex64]) -> f64 {
        let lu = &self.lu;
        let n = lu.n;
        scratch[..n].copy_from_slice(&b[..n]);
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(lu.kl)..i {
                s -= b[j] * lu.get(i, j);
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + lu.ku + 1).min(n) {
                s -= b[j] * lu.get(i, j);
            }
            b[i] = s / lu.get(i, i);
        }
        let max = |v: &[Complex64]| v.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let bnorm = max(&scratch[..n]);
        let xnorm = max(&b[..n]);
        let (orig, ax) = scratch.split_at_mut(n);
        self.a.mul(b, &mut ax[..n]);
        let r = ax[..n]
            .iter()
            .zip(orig.iter())
            .fold(0.0f64, |m, (p, q)| m.max((p - q).norm()));
        let denom = self.norm * xnorm + bnorm;
        if denom == 0.0 {
            0.0
        } else {
            r / denom
        }
    }
}
