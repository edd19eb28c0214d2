//! Dense vector helpers. Vectors are plain `Vec<f64>`; these functions keep
//! the arithmetic in one place.

use alloc::vec::Vec;

use crate::{Error, Result};

pub type Vector = Vec<f64>;

pub fn zeros(d: usize) -> Vector {
    alloc::vec![0.0; d]
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(libm::fabs(*x)))
}

pub fn ensure_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_dim(v: &[f64], d: usize) -> Result<()> {
    if v.len() == d {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        })
    }
}
