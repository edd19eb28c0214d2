use alloc::format;
use libm::pow;
use rand::Rng;

use crate::euclidean::{phased_dp_sgd, PhasedSgdConfig, PhasedSgdOutput};
use crate::problems::{Dataset, LossModel};
use crate::{Error, Result};

/// Output of [`lipschitz_high_p`].
#[derive(Debug, Clone, PartialEq)]
pub struct HighPOutput {
    pub inner: PhasedSgdOutput,
    /// `d^{1/2 - 1/p}`, the factor in `||w||_2 <= d^{1/2-1/p} ||w||_p`.
    pub l2_norm_factor: f64,
}

/// `d^{1/2 - 1/p}` for `p >= 2`.
pub fn l2_norm_factor(p: f64, d: usize) -> f64 {
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    pow(d as f64, 0.5 - inv_p)
}

/// Private solver for `2 <= p <= inf`. Lipschitz and smoothness constants
/// declared w.r.t. `||.||_p` bound the Euclidean ones (`||g||_2 <= ||g||_q`
/// and `||x||_p <= ||x||_2`), so phased DP-SGD runs with them unchanged.
pub fn lipschitz_high_p<R: Rng + ?Sized>(
    data: &Dataset,
    loss: &LossModel,
    cfg: &PhasedSgdConfig,
    rng: &mut R,
) -> Result<HighPOutput> {
    let p = loss.norm_p();
    if !(p >= 2.0) {
        return Err(Error::UnsupportedGeometry(format!(
            "the high-p solver needs p >= 2, got {p}"
        )));
    }
    let inner = phased_dp_sgd(data, loss, cfg, rng)?;
    Ok(HighPOutput {
        inner,
        l2_norm_factor: l2_norm_factor(p, data.d()),
    })
}
