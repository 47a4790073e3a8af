use alloc::vec::Vec;

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation with a fixed split order, so results are
/// reproducible regardless of how callers batch their terms.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    if terms.len() <= PAIRWISE_BLOCK {
        return terms.iter().fold(0.0, |acc, &t| acc + t);
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// [`pairwise_sum`] of `term(0), …, term(n − 1)` without materializing them.
pub(crate) fn pairwise_sum_by(n: usize, term: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            return (lo..hi).fold(0.0, |acc, i| acc + term(i));
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, term) + go(mid, hi, term)
    }
    go(0, n, term)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum_by(a.len().min(b.len()), &|i| a[i] * b[i])
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn powi(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| abs(x - y)).fold(0.0, f64::max)
}

/// log Σ exp(θ_i), shifted by the max for stability.
pub(crate) fn log_sum_exp(theta: &[f64]) -> f64 {
    let m = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let terms: Vec<f64> = theta.iter().map(|t| exp(t - m)).collect();
    m + ln(pairwise_sum(&terms))
}

/// Dense lower-triangular Cholesky factor `L` with `A = L Lᵀ`, row-major.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub(crate) fn factor(a: &[f64], dim: usize) -> Result<Self> {
        let mut lower = alloc::vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut s = a[i * dim + j];
                for k in 0..j {
                    s -= lower[i * dim + k] * lower[j * dim + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    lower[i * dim + i] = sqrt(s);
                } else {
                    lower[i * dim + j] = s / lower[j * dim + j];
                }
            }
        }
        Ok(Self { dim, lower })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let l = &self.lower;
        let mut y = alloc::vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut x = alloc::vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        x
    }
}
