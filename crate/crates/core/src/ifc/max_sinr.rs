//! Per-stream max-SINR beamforming with reciprocal-network precoder updates.

use crate::error::Result;
use crate::eval::{mmse_receivers, rx_rate};
use crate::model::{oci_covariance, ChannelDrop, ScenarioConfig};
use crate::numerics::{hpd_solve, normalize_columns, scaled_identity, CMat};
use crate::strategy::{RxStrategy, SchemeOutput, TxStrategy};

use super::{ia_stream_count, relative_change, require_one_mt_per_bs, svd_init, CONVERGENCE_TOL};

/// Reverse-link update: each precoder column becomes the SINR-maximizing
/// receiver of the reciprocal network, where MTs transmit along their
/// combiners with the forward stream powers.
fn reverse_step(drop: &ChannelDrop, tx: &TxStrategy, rx: &RxStrategy, reverse_noise: f64) -> Result<Vec<CMat>> {
    (0..drop.num_mts())
        .map(|u| {
            let b = drop.serving[u];
            let n = drop.channel(u, b).ncols();
            let mut total = scaled_identity(n, reverse_noise);
            for m in 0..drop.num_mts() {
                let g = drop.channel(m, b).adjoint() * rx.combiners[m].adjoint();
                for (j, &p) in tx.powers[m].iter().enumerate() {
                    let col = g.column(j);
                    total += (col * col.adjoint()).scale(p);
                }
            }
            let directions = drop.desired(u).adjoint() * rx.combiners[u].adjoint();
            let mut v = hpd_solve(&total, &directions)?;
            normalize_columns(&mut v);
            Ok(v)
        })
        .collect()
}

fn total_rate(drop: &ChannelDrop, tx: &TxStrategy, rx: &RxStrategy, oci: &CMat) -> f64 {
    (0..drop.num_mts()).map(|u| rx_rate(u, drop, tx, rx, oci)).sum()
}

pub fn max_sinr(drop: &ChannelDrop, cfg: &ScenarioConfig) -> Result<SchemeOutput> {
    require_one_mt_per_bs(drop, "max_sinr")?;
    let d = ia_stream_count(cfg)?;
    let oci = oci_covariance(cfg, drop);
    let budgets = vec![cfg.power_budget_per_bs; drop.num_mts()];
    let reverse_noise = drop.noise_var + drop.oci_elem_power;

    let mut tx = TxStrategy::equal_power(svd_init(drop, &vec![d; drop.num_mts()]), &budgets);
    let mut rx = mmse_receivers(drop, &tx, &oci)?;
    let mut objective = total_rate(drop, &tx, &rx, &oci);
    let mut trace = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iterations {
        tx = TxStrategy::equal_power(reverse_step(drop, &tx, &rx, reverse_noise)?, &budgets);
        rx = mmse_receivers(drop, &tx, &oci)?;
        let next = total_rate(drop, &tx, &rx, &oci);
        trace.push(next);
        let change = relative_change(objective, next);
        objective = next;
        if change < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }

    Ok(SchemeOutput {
        tx,
        rx,
        iterations_used: trace.len(),
        converged,
        objective_trace: trace,
        feedback_rx: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::stream_sinrs;
    use crate::model::generate_drop;
    use crate::numerics::svd_sorted;

    #[test]
    fn single_link_reaches_dominant_eigenmode() {
        let cfg = ScenarioConfig::interference_channel(1, 4, 2).with_interference(0.0, 0.0);
        let drop = generate_drop(&cfg, 2, 10.0).unwrap();
        let out = max_sinr(&drop, &cfg).unwrap();
        let oci = oci_covariance(&cfg, &drop);
        let sinr = stream_sinrs(0, &drop, &out.tx, &out.rx, &oci)[0];
        let (sigma, _, _) = svd_sorted(drop.desired(0));
        let expected = sigma[0] * sigma[0] * cfg.power_budget_per_bs / drop.noise_var;
        assert!((sinr - expected).abs() / expected < 1e-6, "{sinr} vs {expected}");
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let mut cfg = ScenarioConfig::interference_channel(3, 4, 2);
        cfg.max_iterations = 0;
        let drop = generate_drop(&cfg, 1, 10.0).unwrap();
        let out = max_sinr(&drop, &cfg).unwrap();
        assert_eq!(out.iterations_used, 0);
        assert!(out.objective_trace.is_empty());
        let init = svd_init(&drop, &[1, 1, 1]);
        assert_eq!(out.tx.precoders, init);
    }

    #[test]
    fn respects_iteration_budget_and_power() {
        let cfg = ScenarioConfig::interference_channel(3, 4, 2).with_interference(1.0, 0.1);
        for i in 0..5 {
            let drop = generate_drop(&cfg, i, 20.0).unwrap();
            let out = max_sinr(&drop, &cfg).unwrap();
            assert!(out.iterations_used <= cfg.max_iterations);
            assert_eq!(out.objective_trace.len(), out.iterations_used);
            assert!(out.tx.satisfies_constraints(&drop.serving, 3, cfg.power_budget_per_bs));
            assert!(out.rx.rows_unit_norm());
        }
    }
}
