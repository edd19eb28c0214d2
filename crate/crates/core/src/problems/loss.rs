use alloc::format;
use libm::{exp, log1p, sqrt};

use crate::vector::{self, Vector};
use crate::{Error, Result};

/// Functional form of a loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `ln(1 + exp(-y <w, x>))` with labels `y` in `{-1, +1}`.
    Logistic,
    /// `0.5 * ||w - x||_2^2`; labels are ignored.
    MeanPoint,
    /// `h^2 (sqrt(1 + r^2 / h^2) - 1)` with residual `r = <w, x> - y`.
    PseudoHuber { h: f64 },
}

/// A convex loss together with the constants the solvers rely on.
///
/// `lipschitz` and `smoothness` are stated for the primal norm `||.||_p` with
/// `p = norm_p` (gradients measured in the dual norm). `strong_convexity` is
/// the modulus with respect to `||.||_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    kind: LossKind,
    lipschitz: f64,
    smoothness: f64,
    strong_convexity: f64,
    norm_p: f64,
    full_rank_hessian: bool,
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive and finite, got {x}")))
    }
}

impl LossModel {
    /// Logistic loss for features with `||x||_q <= feature_bound`, where `q`
    /// is dual to `p`.
    pub fn logistic(feature_bound: f64, p: f64) -> Result<Self> {
        positive(feature_bound, "feature bound")?;
        Ok(LossModel {
            kind: LossKind::Logistic,
            lipschitz: feature_bound,
            smoothness: feature_bound * feature_bound / 4.0,
            strong_convexity: 0.0,
            norm_p: p,
            full_rank_hessian: false,
        })
    }

    /// The quadratic `0.5 ||w - x||_2^2`. It is only Lipschitz on bounded
    /// domains, so the caller supplies `sup ||w - x||_2` over the domain.
    pub fn mean_point(lipschitz: f64) -> Result<Self> {
        positive(lipschitz, "Lipschitz bound")?;
        Ok(LossModel {
            kind: LossKind::MeanPoint,
            lipschitz,
            smoothness: 1.0,
            strong_convexity: 1.0,
            norm_p: 2.0,
            full_rank_hessian: true,
        })
    }

    /// Pseudo-Huber regression with transition scale `h` and
    /// `||x||_q <= feature_bound`.
    pub fn pseudo_huber(h: f64, feature_bound: f64, p: f64) -> Result<Self> {
        positive(h, "pseudo-Huber scale")?;
        positive(feature_bound, "feature bound")?;
        Ok(LossModel {
            kind: LossKind::PseudoHuber { h },
            lipschitz: h * feature_bound,
            smoothness: feature_bound * feature_bound,
            strong_convexity: 0.0,
            norm_p: p,
            full_rank_hessian: false,
        })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
    pub fn norm_p(&self) -> f64 {
        self.norm_p
    }

    /// Whether the declared constants are valid w.r.t. `||.||_p`. The
    /// mean-point constants hold for every `p <= 2`; the linear-model losses
    /// only for the `p` they were built with.
    pub fn constants_hold_for(&self, p: f64) -> bool {
        match self.kind {
            LossKind::MeanPoint => p > 1.0 && p <= 2.0,
            _ => (self.norm_p - p).abs() <= 1e-12,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LossKind::Logistic => "logistic",
            LossKind::MeanPoint => "mean_point",
            LossKind::PseudoHuber { .. } => "pseudo_huber",
        }
    }

    /// Upper bound on the rank of the per-sample Hessian in dimension `d`.
    pub fn hessian_rank(&self, d: usize) -> usize {
        if self.full_rank_hessian {
            d
        } else {
            d.min(1)
        }
    }

    pub fn value(&self, w: &[f64], x: &[f64], y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => softplus(-y * vector::dot(w, x)),
            LossKind::MeanPoint => {
                let d = vector::l2_dist(w, x);
                0.5 * d * d
            }
            LossKind::PseudoHuber { h } => {
                let r = vector::dot(w, x) - y;
                let u = r / h;
                // h^2 (sqrt(1 + u^2) - 1) without cancellation for small u
                h * h * u * u / (sqrt(1.0 + u * u) + 1.0)
            }
        }
    }

    /// Adds `scale * grad l(w; x, y)` to `out`.
    pub fn add_gradient(&self, w: &[f64], x: &[f64], y: f64, scale: f64, out: &mut [f64]) {
        match self.kind {
            LossKind::Logistic => {
                let m = y * vector::dot(w, x);
                vector::axpy(-scale * y * sigmoid(-m), x, out);
            }
            LossKind::MeanPoint => {
                for ((o, wi), xi) in out.iter_mut().zip(w).zip(x) {
                    *o += scale * (wi - xi);
                }
            }
            LossKind::PseudoHuber { h } => {
                let r = vector::dot(w, x) - y;
                let psi = r / sqrt(1.0 + (r / h) * (r / h));
                vector::axpy(scale * psi, x, out);
            }
        }
    }

    pub fn gradient(&self, w: &[f64], x: &[f64], y: f64) -> Vector {
        let mut g = vector::zeros(w.len());
        self.add_gradient(w, x, y, 1.0, &mut g);
        g
    }
}

/// `ln(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + log1p(exp(-t))
    } else {
        log1p(exp(t))
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + exp(-t))
    } else {
        let e = exp(t);
        e / (1.0 + e)
    }
}
