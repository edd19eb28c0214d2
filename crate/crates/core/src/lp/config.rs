use alloc::vec::Vec;

use crate::mechanisms::ShuffleConstants;
use crate::space::SpaceSpec;
use crate::vector::Vector;
use crate::Warning;

/// Multipliers for the schedules that are only known up to constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdConstants {
    /// Multiplier of the automatic iteration / batch count.
    pub t_scale: f64,
    /// Multiplier of the automatic truncation offset.
    pub lambda_scale: f64,
    /// Multiplier of the per-batch noise variance of the batched variant.
    pub batch_sigma2_scale: f64,
    pub shuffle: ShuffleConstants,
}

impl Default for MdConstants {
    fn default() -> Self {
        MdConstants {
            t_scale: 1.0,
            lambda_scale: 1.0,
            batch_sigma2_scale: 1.0,
            shuffle: ShuffleConstants::default(),
        }
    }
}

/// Settings shared by the mirror-descent solvers. `None` fields are chosen
/// automatically from the utility analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdConfig {
    pub space: SpaceSpec,
    /// Iterations (regularised MD) or batches (truncated MD).
    pub t: Option<usize>,
    /// Weight of the `alpha * phi` regulariser.
    pub alpha_reg: Option<f64>,
    /// Constant mirror step scale.
    pub gamma: Option<f64>,
    /// Truncation offset: gradients with dual norm above `beta M + lambda` are dropped.
    pub lambda_trunc: Option<f64>,
    pub constants: MdConstants,
    /// Refuse shuffled runs outside the amplification regime.
    pub enforce_privacy_regime: bool,
    /// Permute the data before batching (shuffled variant only).
    pub shuffle_data: bool,
    /// Mirror-step tolerance is `mirror_tol_scale * gamma * M^2`.
    pub mirror_tol_scale: f64,
    pub mirror_max_iter: usize,
}

impl MdConfig {
    pub fn new(space: SpaceSpec) -> Self {
        MdConfig {
            space,
            t: None,
            alpha_reg: None,
            gamma: None,
            lambda_trunc: None,
            constants: MdConstants::default(),
            enforce_privacy_regime: true,
            shuffle_data: true,
            mirror_tol_scale: 1e-8,
            mirror_max_iter: 10_000,
        }
    }
}

/// Counts for the truncation step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TruncationStats {
    pub total: u64,
    pub zeroed: u64,
    /// Largest dual norm seen before truncation.
    pub max_norm: f64,
    /// Largest dual norm among the gradients that were kept.
    pub max_kept_norm: f64,
}

impl TruncationStats {
    pub fn zeroed_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.zeroed as f64 / self.total as f64
        }
    }

    pub fn merge(&mut self, other: &TruncationStats) {
        self.total += other.total;
        self.zeroed += other.zeroed;
        self.max_norm = self.max_norm.max(other.max_norm);
        self.max_kept_norm = self.max_kept_norm.max(other.max_kept_norm);
    }
}

/// Output of the mirror-descent solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct MdOutput {
    pub w: Vector,
    pub t: usize,
    pub gamma: f64,
    pub alpha_reg: f64,
    pub lambda_trunc: f64,
    /// Standard deviation parameter of the GG noise per release.
    pub sigma: f64,
    pub truncation: TruncationStats,
    /// Largest mirror-step optimality residual accepted.
    pub max_step_residual: f64,
    pub warnings: Vec<Warning>,
}
