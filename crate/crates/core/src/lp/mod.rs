//! Private solvers in `lp` geometry: noisy regularised mirror descent for
//! unconstrained smooth losses, the shuffled and batched truncated mirror
//! descent methods for heavy-tailed gradients over `la` balls, and the
//! reduction to phased DP-SGD for `p >= 2`.

mod config;
mod highp;
mod mirror;
mod regmd;
mod truncated;

use alloc::format;

pub use config::{MdConfig, MdConstants, MdOutput, TruncationStats};
pub use highp::{l2_norm_factor, lipschitz_high_p, HighPOutput};
pub use mirror::{mirror_objective, mirror_step_constrained, truncate_gradient, MirrorStep};
pub use regmd::{noisy_reg_md, reg_md_auto_iterations, reg_md_output_weights, reg_md_sigma2};
pub use truncated::{
    batch_bounds, batched_sigma2, batched_truncated_md, shuffled_truncated_md, truncated_schedule,
    TruncatedSchedule,
};

use crate::problems::{Dataset, LossModel};
use crate::space::SpaceSpec;
use crate::{Error, Result};

fn check_problem(data: &Dataset, loss: &LossModel, spec: &SpaceSpec) -> Result<()> {
    if !spec.has_mirror_map() {
        return Err(Error::UnsupportedGeometry(format!(
            "mirror descent needs 1 < p < 2, got p = {}",
            spec.p()
        )));
    }
    if data.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: data.d(),
        });
    }
    if data.n() == 0 {
        return Err(Error::invalid("dataset is empty"));
    }
    if !loss.constants_hold_for(spec.p()) {
        return Err(Error::invalid(format!(
            "loss constants are stated for p = {}, geometry has p = {}",
            loss.norm_p(),
            spec.p()
        )));
    }
    Ok(())
}
