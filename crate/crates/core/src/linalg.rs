//! Banded symmetric storage and a root-free LDLᵀ factorization that exposes
//! the inertia of the factored matrix.
//!
//! Frame meshes numbered along their chain produce narrow bands, so the
//! factorization runs in O(n·w²) and the count of negative pivots equals the
//! number of negative eigenvalues (Sylvester's law of inertia).

use crate::error::{Error, Result};

/// Symmetric matrix stored as its lower band, row by row.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bw: bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            None
        } else {
            Some(r * (self.bw + 1) + (c + self.bw - r))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entry (i, j). Only call once per symmetric pair.
    ///
    /// Panics if (i, j) falls outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside bandwidth {}", self.bw));
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[i * (self.bw + 1) + (j + self.bw - i)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[i * (self.bw + 1) + self.bw] * x[i];
        }
        y
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * (self.bw + 1) + self.bw].abs())
            .fold(0.0, f64::max)
    }

    /// LDLᵀ without pivoting. Fails on a pivot that is zero relative to the
    /// largest diagonal entry.
    pub fn factor(&self) -> Result<Ldl> {
        let n = self.n;
        let w = self.bw;
        let stride = w + 1;
        let mut l = self.data.clone();
        let mut d = vec![0.0; n];
        let scale = self.max_abs_diag().max(f64::MIN_POSITIVE);
        let mut work = vec![0.0; stride];
        for j in 0..n {
            let lo = j.saturating_sub(w);
            // work[k - lo] = L[j][k] * d[k]
            let mut djj = l[j * stride + w];
            for k in lo..j {
                let ljk = l[j * stride + (k + w - j)];
                let t = ljk * d[k];
                work[k - lo] = t;
                djj -= ljk * t;
            }
            if !djj.is_finite() || djj.abs() <= 1e-14 * scale {
                return Err(Error::SingularMatrix {
                    pivot: j,
                    value: djj,
                });
            }
            d[j] = djj;
            l[j * stride + w] = 1.0;
            let hi = (j + w + 1).min(n);
            for i in (j + 1)..hi {
                let ilo = i.saturating_sub(w).max(lo);
                let mut s = l[i * stride + (j + w - i)];
                for k in ilo..j {
                    s -= l[i * stride + (k + w - i)] * work[k - lo];
                }
                l[i * stride + (j + w - i)] = s / djj;
            }
        }
        Ok(Ldl { n, bw: w, l, d })
    }
}

/// Result of [`SymBand::factor`].
#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let w = self.bw;
        let stride = w + 1;
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(w);
            let mut s = x[i];
            for k in lo..i {
                s -= self.l[i * stride + (k + w - i)] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let hi = (i + w + 1).min(n);
            let mut s = x[i];
            for k in (i + 1)..hi {
                s -= self.l[k * stride + (i + w - k)] * x[k];
            }
            x[i] = s;
        }
        x
    }

    /// Solve with one step of iterative refinement against the original matrix.
    pub fn solve_refined(&self, a: &SymBand, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = self.solve(&r);
        x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
        x
    }
}
