//! Centralized full-CSI coordinated beamforming for the MIMO interference
//! channel, plus the single-user full-reuse and orthogonal baselines.

mod baseline;
mod ia;
mod max_sinr;
mod reconfigurable;
mod wmmse;

pub use baseline::{baseline_full_reuse_su, baseline_orthogonal_su, su_waterfilling};
pub use ia::{ia, ia_stream_count, relative_leakage, IA_LEAKAGE_TOLERANCE, IA_MAX_SWEEPS};
pub use max_sinr::max_sinr;
pub use reconfigurable::reconfigurable;
pub use wmmse::{wmmse, wmmse_with_streams, WMMSE_STREAM_THRESHOLD};

use crate::error::{Error, Result};
use crate::model::ChannelDrop;
use crate::numerics::{dominant_right_singular_vectors, CMat};

/// Relative change of an objective below which an iterative scheme is
/// declared converged.
pub(crate) const CONVERGENCE_TOL: f64 = 1e-6;

pub(crate) fn require_one_mt_per_bs(drop: &ChannelDrop, scheme: &str) -> Result<()> {
    let b = drop.num_bs();
    if drop.num_mts() != b || (0..b).any(|bs| drop.serving[bs] != bs) {
        return Err(Error::Incompatible {
            scheme: scheme.into(),
            reason: "requires exactly one MT per BS".into(),
        });
    }
    Ok(())
}

/// `d` dominant right singular vectors of each MT's desired channel.
pub(crate) fn svd_init(drop: &ChannelDrop, streams: &[usize]) -> Vec<CMat> {
    (0..drop.num_mts())
        .map(|u| dominant_right_singular_vectors(drop.desired(u), streams[u]))
        .collect()
}

pub(crate) fn relative_change(prev: f64, next: f64) -> f64 {
    (next - prev).abs() / prev.abs().max(1e-12)
}
