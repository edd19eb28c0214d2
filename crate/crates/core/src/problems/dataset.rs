use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `n` records of dimension `d`, stored row-major, with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    features: Vec<f64>,
    labels: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(d: usize, features: Vec<f64>, labels: Option<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if features.is_empty() || features.len() % d != 0 {
            return Err(Error::invalid(format!(
                "feature buffer of length {} does not hold a whole number of rows of width {d}",
                features.len()
            )));
        }
        let n = features.len() / d;
        crate::vector::ensure_finite(&features, "dataset features")?;
        if let Some(y) = &labels {
            if y.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: y.len(),
                });
            }
            crate::vector::ensure_finite(y, "dataset labels")?;
        }
        Ok(Dataset { d, features, labels })
    }

    /// Builds a dataset from rows, each of length `d`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut features = Vec::with_capacity(rows.len() * d);
        for r in rows {
            crate::vector::ensure_dim(r, d)?;
            features.extend_from_slice(r);
        }
        Self::new(d, features, labels)
    }

    pub fn n(&self) -> usize {
        self.features.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// Label of row `i`, or 0 for unlabelled data.
    pub fn y(&self, i: usize) -> f64 {
        self.labels.as_ref().map_or(0.0, |y| y[i])
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// The dataset with row `i` replaced.
    pub fn with_row(&self, i: usize, x: &[f64], y: f64) -> Result<Self> {
        crate::vector::ensure_dim(x, self.d)?;
        if i >= self.n() {
            return Err(Error::invalid(format!("row {i} out of range")));
        }
        let mut out = self.clone();
        out.features[i * self.d..(i + 1) * self.d].copy_from_slice(x);
        if let Some(lab) = &mut out.labels {
            lab[i] = y;
        }
        Ok(out)
    }

    /// The rows listed in `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            features.extend_from_slice(self.x(i));
        }
        let labels = self.labels.as_ref().map(|y| idx.iter().map(|&i| y[i]).collect());
        Self::new(self.d, features, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_access() {
        let ds = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], Some(vec![1.0, -1.0])).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.x(1), &[3.0, 4.0]);
        assert_eq!(ds.y(1), -1.0);
        let sel = ds.select(&[1, 1, 0]).unwrap();
        assert_eq!(sel.n(), 3);
        assert_eq!(sel.x(2), &[1.0, 2.0]);
        assert_eq!(sel.y(0), -1.0);
        let rep = ds.with_row(0, &[9.0, 9.0], 1.0).unwrap();
        assert_eq!(rep.x(0), &[9.0, 9.0]);
        assert_eq!(ds.x(0), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Dataset::new(2, vec![1.0, 2.0, 3.0], None).is_err());
        assert!(Dataset::new(2, vec![], None).is_err());
        assert!(Dataset::new(1, vec![f64::NAN], None).is_err());
        assert!(Dataset::new(1, vec![1.0, 2.0], Some(vec![1.0])).is_err());
    }
}
