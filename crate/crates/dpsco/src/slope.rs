//! Log-log rate fits of mean excess risk against `n`.

use crate::error::{HarnessError, HarnessResult};
use crate::records::RunRecord;

/// A record field that can define a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Algorithm,
    Epsilon,
    D,
    P,
    Delta,
}

impl GroupKey {
    pub fn parse(s: &str) -> HarnessResult<Self> {
        match s.trim() {
            "algo" | "algorithm" => Ok(GroupKey::Algorithm),
            "eps" | "epsilon" => Ok(GroupKey::Epsilon),
            "d" => Ok(GroupKey::D),
            "p" => Ok(GroupKey::P),
            "delta" => Ok(GroupKey::Delta),
            other => Err(HarnessError::config(format!(
                "unknown group key {other:?}; use algo, eps, d, p or delta"
            ))),
        }
    }

    /// Parses a comma-separated list such as `algo,eps,d`.
    pub fn parse_list(s: &str) -> HarnessResult<Vec<Self>> {
        s.split(',').filter(|k| !k.trim().is_empty()).map(Self::parse).collect()
    }

    fn label(&self) -> &'static str {
        match self {
            GroupKey::Algorithm => "algo",
            GroupKey::Epsilon => "eps",
            GroupKey::D => "d",
            GroupKey::P => "p",
            GroupKey::Delta => "delta",
        }
    }

    fn value(&self, r: &RunRecord) -> String {
        match self {
            GroupKey::Algorithm => r.algorithm.clone(),
            GroupKey::Epsilon => r.epsilon.to_string(),
            GroupKey::D => r.d.to_string(),
            GroupKey::P => r.p.to_string(),
            GroupKey::Delta => r.delta.to_string(),
        }
    }
}

fn group_label(keys: &[GroupKey], r: &RunRecord) -> String {
    keys.iter()
        .map(|k| format!("{}={}", k.label(), k.value(r)))
        .collect::<Vec<_>>()
        .join(",")
}

/// Mean excess risk of one `(group, n)` cell over its non-refused trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub group: String,
    pub n: usize,
    pub mean: f64,
    /// Standard error of the mean across trials (infinite with one trial).
    pub std_error: f64,
    pub count: usize,
    pub refused: usize,
}

/// Cells in order of first appearance of their group, then increasing `n`.
pub fn summarize(records: &[RunRecord], keys: &[GroupKey]) -> Vec<CellSummary> {
    let mut groups: Vec<String> = Vec::new();
    let mut cells: Vec<(String, usize, Vec<f64>, usize)> = Vec::new();
    for r in records {
        let g = group_label(keys, r);
        if !groups.contains(&g) {
            groups.push(g.clone());
        }
        let idx = match cells.iter().position(|(cg, cn, _, _)| *cg == g && *cn == r.n) {
            Some(i) => i,
            None => {
                cells.push((g, r.n, Vec::new(), 0));
                cells.len() - 1
            }
        };
        match r.excess_risk {
            Some(v) if !r.refused => cells[idx].2.push(v),
            _ => cells[idx].3 += 1,
        }
    }
    let mut out: Vec<CellSummary> = cells
        .into_iter()
        .map(|(group, n, vals, refused)| {
            let k = vals.len();
            let mean = if k == 0 { f64::NAN } else { vals.iter().sum::<f64>() / k as f64 };
            let std_error = if k < 2 {
                f64::INFINITY
            } else {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
                (var / k as f64).sqrt()
            };
            CellSummary {
                group,
                n,
                mean,
                std_error,
                count: k,
                refused,
            }
        })
        .collect();
    out.sort_by_key(|c| (groups.iter().position(|g| *g == c.group), c.n));
    out
}

/// Ordinary least squares `y = slope x + intercept`; returns `(slope, intercept, r^2)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub group: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Cells used in the fit.
    pub points: usize,
    pub warnings: Vec<String>,
}

/// Fits `log(mean excess risk)` against `log n` per group. Cells whose mean
/// is not positive, or that have no accepted trials, are dropped with a
/// warning; a group needs at least three remaining distinct `n`.
pub fn fit_slope(records: &[RunRecord], keys: &[GroupKey]) -> HarnessResult<Vec<SlopeFit>> {
    let cells = summarize(records, keys);
    let mut fits = Vec::new();
    let mut start = 0;
    while start < cells.len() {
        let group = cells[start].group.clone();
        let end = start + cells[start..].iter().take_while(|c| c.group == group).count();
        let mut warnings = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for c in &cells[start..end] {
            if c.count == 0 {
                warnings.push(format!("n={} excluded: every trial was refused", c.n));
            } else if !(c.mean > 0.0) {
                warnings.push(format!("n={} excluded: mean excess risk {} is not positive", c.n, c.mean));
            } else {
                xs.push((c.n as f64).ln());
                ys.push(c.mean.ln());
            }
        }
        if xs.len() < 3 {
            return Err(HarnessError::config(format!(
                "group {group:?} has {} usable n values; at least 3 are needed",
                xs.len()
            )));
        }
        let (slope, intercept, r2) = ols(&xs, &ys);
        fits.push(SlopeFit {
            group,
            slope,
            intercept,
            r2,
            points: xs.len(),
            warnings,
        });
        start = end;
    }
    Ok(fits)
}
