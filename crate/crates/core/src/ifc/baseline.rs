use crate::error::Result;
use crate::eval::mmse_receivers;
use crate::model::ChannelDrop;
use crate::model::ScenarioConfig;
use crate::numerics::{svd_sorted, waterfill, CMat};
use crate::strategy::{SchemeOutput, TxStrategy};

/// Eigenbeamforming with waterfilling over `h` for a white noise floor.
///
/// Returns the active right singular vectors and their powers.
pub fn su_waterfilling(h: &CMat, noise_floor: f64, budget: f64) -> Result<(CMat, Vec<f64>)> {
    let (sigma, _, right) = svd_sorted(h);
    let gains: Vec<f64> = sigma.iter().map(|s| s * s / noise_floor).collect();
    let wf = waterfill(&gains, budget)?;
    let active: Vec<usize> = (0..gains.len()).filter(|&i| wf.powers[i] > 0.0).collect();
    let mut v = CMat::zeros(h.ncols(), active.len());
    for (dst, &src) in active.iter().enumerate() {
        v.set_column(dst, &right.column(src));
    }
    Ok((v, active.iter().map(|&i| wf.powers[i]).collect()))
}

/// Every BS waterfills over its own channel, ignoring all interference.
pub fn baseline_full_reuse_su(drop: &ChannelDrop, cfg: &ScenarioConfig, oci_cov: &CMat) -> Result<SchemeOutput> {
    let mut precoders = Vec::with_capacity(drop.num_mts());
    let mut powers = Vec::with_capacity(drop.num_mts());
    for u in 0..drop.num_mts() {
        let share = cfg.power_budget_per_bs / drop.mts_of(drop.serving[u]).count() as f64;
        let (v, p) = su_waterfilling(drop.desired(u), drop.noise_var, share)?;
        precoders.push(v);
        powers.push(p);
    }
    let tx = TxStrategy { precoders, powers };
    let rx = mmse_receivers(drop, &tx, oci_cov)?;
    Ok(SchemeOutput::closed_form(tx, rx))
}

/// Same transmission as full reuse; the rate is evaluated without ICI and
/// scaled by `1 / B`.
pub fn baseline_orthogonal_su(drop: &ChannelDrop, cfg: &ScenarioConfig, oci_cov: &CMat) -> Result<SchemeOutput> {
    baseline_full_reuse_su(drop, cfg, oci_cov)
}
