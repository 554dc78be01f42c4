//! Interference alignment by alternating leakage minimization.
//!
//! Receivers take the `d` least-interfered directions of their interference
//! covariance, then transmitters take the `d` directions leaking least into
//! the other receivers of the reciprocal network. Desired channels enter
//! only through the initialization.

use crate::error::{Error, Result};
use crate::model::{ChannelDrop, ScenarioConfig};
use crate::numerics::{min_eigenvectors, CMat};
use crate::strategy::{RxStrategy, SchemeOutput, TxStrategy};

use super::{require_one_mt_per_bs, svd_init};

pub const IA_MAX_SWEEPS: usize = 500;
pub const IA_LEAKAGE_TOLERANCE: f64 = 1e-10;

/// Stream count used by IA and max-SINR, after feasibility checks.
pub fn ia_stream_count(cfg: &ScenarioConfig) -> Result<usize> {
    let d = cfg.default_streams_per_mt();
    let (n, m, b) = (cfg.antennas_bs, cfg.antennas_mt, cfg.num_bs);
    if d == 0 || d > n.min(m) {
        return Err(Error::Infeasible(format!("{d} streams on a {n}x{m} link")));
    }
    if n + m < (b + 1) * d {
        return Err(Error::Infeasible(format!(
            "N + M = {} < (B + 1) d = {} for B={b}, d={d}",
            n + m,
            (b + 1) * d
        )));
    }
    Ok(d)
}

/// Post-combining ICI energy over post-combining signal energy, per MT.
pub fn relative_leakage(drop: &ChannelDrop, tx: &TxStrategy, rx: &RxStrategy) -> Vec<f64> {
    (0..drop.num_mts())
        .map(|u| {
            let w = &rx.combiners[u];
            let signal = (w * drop.desired(u) * tx.scaled_precoder(u)).norm_squared();
            let leak: f64 = (0..drop.num_mts())
                .filter(|&o| drop.serving[o] != drop.serving[u])
                .map(|o| (w * drop.channel(u, drop.serving[o]) * tx.scaled_precoder(o)).norm_squared())
                .sum();
            if leak == 0.0 {
                0.0
            } else {
                leak / signal
            }
        })
        .collect()
}

fn receiver_step(drop: &ChannelDrop, precoders: &[CMat], d: usize) -> Vec<CMat> {
    (0..drop.num_mts())
        .map(|u| {
            let m = drop.desired(u).nrows();
            let mut q = CMat::zeros(m, m);
            for (l, v) in precoders.iter().enumerate() {
                if l != drop.serving[u] {
                    let hv = drop.channel(u, l) * v;
                    q += &hv * hv.adjoint();
                }
            }
            min_eigenvectors(&q, d)
        })
        .collect()
}

fn transmitter_step(drop: &ChannelDrop, receivers: &[CMat], d: usize) -> Vec<CMat> {
    (0..drop.num_bs())
        .map(|l| {
            let n = drop.channel(0, l).ncols();
            let mut q = CMat::zeros(n, n);
            for (u, w) in receivers.iter().enumerate() {
                if drop.serving[u] != l {
                    let wh = w.adjoint() * drop.channel(u, l);
                    q += wh.adjoint() * wh;
                }
            }
            min_eigenvectors(&q, d)
        })
        .collect()
}

pub fn ia(drop: &ChannelDrop, cfg: &ScenarioConfig) -> Result<SchemeOutput> {
    require_one_mt_per_bs(drop, "ia")?;
    let d = ia_stream_count(cfg)?;
    let mut precoders = svd_init(drop, &vec![d; drop.num_mts()]);
    let budgets = vec![cfg.power_budget_per_bs; drop.num_mts()];

    let mut converged = false;
    let mut receivers = receiver_step(drop, &precoders, d);
    for _ in 0..IA_MAX_SWEEPS {
        precoders = transmitter_step(drop, &receivers, d);
        let tx = TxStrategy::equal_power(precoders.clone(), &budgets);
        let rx = RxStrategy {
            combiners: receivers.iter().map(|w| w.adjoint()).collect(),
        };
        let worst = relative_leakage(drop, &tx, &rx).into_iter().fold(0.0, f64::max);
        if worst < IA_LEAKAGE_TOLERANCE {
            converged = true;
            break;
        }
        receivers = receiver_step(drop, &precoders, d);
    }

    let tx = TxStrategy::equal_power(precoders, &budgets);
    let rx = RxStrategy {
        combiners: receivers.iter().map(|w| w.adjoint()).collect(),
    };
    Ok(SchemeOutput {
        converged,
        ..SchemeOutput::closed_form(tx, rx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_drop;

    #[test]
    fn zero_cross_links_give_zero_leakage() {
        let cfg = ScenarioConfig::interference_channel(3, 4, 2).with_interference(0.0, 0.0);
        let drop = generate_drop(&cfg, 0, 10.0).unwrap();
        let out = ia(&drop, &cfg).unwrap();
        assert!(out.converged);
        assert!(relative_leakage(&drop, &out.tx, &out.rx).iter().all(|&l| l == 0.0));
    }

    #[test]
    fn nulls_interference_on_random_drops() {
        let cfg = ScenarioConfig::interference_channel(3, 4, 2);
        for i in 0..20 {
            let drop = generate_drop(&cfg, i, 10.0).unwrap();
            let out = ia(&drop, &cfg).unwrap();
            assert!(out.converged);
            assert_eq!(out.tx.stream_counts(), vec![1, 1, 1]);
            // residual interference computed directly from W H V
            for u in 0..3 {
                let w = &out.rx.combiners[u];
                let sig = (w * drop.channel(u, u) * &out.tx.precoders[u]).norm_squared();
                let leak: f64 = (0..3)
                    .filter(|&l| l != u)
                    .map(|l| (w * drop.channel(u, l) * &out.tx.precoders[l]).norm_squared())
                    .sum();
                assert!(leak < 1e-8 * sig, "drop {i} mt {u}: {leak} vs {sig}");
            }
        }
    }

    #[test]
    fn infeasible_stream_request() {
        let mut cfg = ScenarioConfig::interference_channel(3, 2, 2);
        cfg.streams_per_mt = Some(2);
        let drop = generate_drop(&cfg, 0, 10.0).unwrap();
        assert!(matches!(ia(&drop, &cfg), Err(Error::Infeasible(_))));
    }

    #[test]
    fn miso_toy_shape_is_feasible() {
        let cfg = ScenarioConfig::interference_channel(2, 2, 1);
        assert_eq!(ia_stream_count(&cfg).unwrap(), 1);
        let drop = generate_drop(&cfg, 4, 15.0).unwrap();
        let out = ia(&drop, &cfg).unwrap();
        assert!(out.converged);
    }

    #[test]
    fn rejects_multiple_mts_per_bs() {
        let mut cfg = ScenarioConfig::interference_channel(2, 4, 4);
        cfg.mts_per_bs = vec![2, 2];
        let drop = generate_drop(&cfg, 0, 10.0).unwrap();
        assert!(matches!(ia(&drop, &cfg), Err(Error::Incompatible { .. })));
    }
}
