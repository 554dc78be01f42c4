//! Weighted-MMSE sum-rate optimization under per-BS power constraints.
//!
//! Each iteration updates MMSE receivers, then MMSE weight matrices, then
//! precoders. The precoder step solves the per-BS quadratic problem exactly:
//! the Lagrange multiplier of the power constraint is found by bisection in
//! the eigenbasis of the weighted channel Gram matrix. The surrogate recorded
//! in the trace is `sum_u ln det E_u`, the weighted-MMSE objective minimized
//! over receivers and weights, which equals minus the sum rate in nats.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::eval::{mmse_receivers, received_covariance, sum_rate};
use crate::model::ChannelDrop;
use crate::model::ScenarioConfig;
use crate::numerics::{hermitian_eigen, hermitize, hpd_solve, scaled_identity, CMat};
use crate::strategy::{SchemeOutput, TxStrategy};

use super::{relative_change, svd_init, CONVERGENCE_TOL};

/// Eigen-streams below this fraction of the budget count as switched off.
pub const WMMSE_STREAM_THRESHOLD: f64 = 1e-6;

const BISECTION_STEPS: usize = 200;

/// Unnormalized precoders, `precoders[u]` is `N x d_u`.
struct State {
    precoders: Vec<CMat>,
}

impl State {
    fn as_tx(&self) -> TxStrategy {
        // unit columns carrying the column energy as power
        let mut precoders = Vec::with_capacity(self.precoders.len());
        let mut powers = Vec::with_capacity(self.precoders.len());
        for v in &self.precoders {
            let mut unit = v.clone();
            let mut p = Vec::with_capacity(v.ncols());
            for k in 0..v.ncols() {
                let n = v.column(k).norm();
                p.push(n * n);
                if n > 0.0 {
                    unit.column_mut(k).unscale_mut(n);
                } else {
                    unit.column_mut(k).fill(Complex64::new(0.0, 0.0));
                    unit[(k.min(v.nrows() - 1), k)] = Complex64::new(1.0, 0.0);
                }
            }
            precoders.push(unit);
            powers.push(p);
        }
        TxStrategy { precoders, powers }
    }
}

/// MMSE receive matrices `U_u` (M x d) and weights `W_u = E_u^{-1}`.
fn receivers_and_weights(drop: &ChannelDrop, tx: &TxStrategy, state: &State, noise_cov: &CMat) -> Result<Vec<(CMat, CMat)>> {
    (0..drop.num_mts())
        .map(|u| {
            let mut total = received_covariance(drop, tx, u, |_| true);
            total += noise_cov;
            let hv = drop.desired(u) * &state.precoders[u];
            let recv = hpd_solve(&total, &hv)?;
            let d = hv.ncols();
            let error = hermitize(&(scaled_identity(d, 1.0) - recv.adjoint() * &hv));
            let weight = hpd_solve(&error, &scaled_identity(d, 1.0))?;
            Ok((recv, hermitize(&weight)))
        })
        .collect()
}

/// Exact precoder update of one BS: `V_u = (A + mu I)^{-1} B_u` with the
/// smallest `mu >= 0` meeting the power budget.
fn precoder_step(
    drop: &ChannelDrop,
    bs: usize,
    rw: &[(CMat, CMat)],
    budget: f64,
) -> Result<Vec<(usize, CMat)>> {
    let n = drop.channel(0, bs).ncols();
    let mut gram = CMat::zeros(n, n);
    for (m, (recv, weight)) in rw.iter().enumerate() {
        let g = drop.channel(m, bs).adjoint() * recv;
        gram += &g * weight * g.adjoint();
    }
    let served: Vec<usize> = drop.mts_of(bs).collect();
    let rhs: Vec<CMat> = served
        .iter()
        .map(|&u| drop.desired(u).adjoint() * &rw[u].0 * &rw[u].1)
        .collect();

    let (lambda, q) = hermitian_eigen(&gram);
    let proj: Vec<CMat> = rhs.iter().map(|b| q.adjoint() * b).collect();
    // energy of the right-hand side along each eigenvector
    let energy: Vec<f64> = (0..n)
        .map(|i| proj.iter().map(|p| p.row(i).norm_squared()).sum())
        .collect();
    let scale = lambda.iter().fold(0.0f64, |a, &l| a.max(l.abs())).max(1e-300);
    let floor = 1e-13 * scale;
    let power = |mu: f64| -> f64 {
        (0..n)
            .map(|i| {
                if energy[i] == 0.0 {
                    0.0
                } else {
                    let den = lambda[i].max(0.0) + mu;
                    if den <= floor {
                        f64::INFINITY
                    } else {
                        energy[i] / (den * den)
                    }
                }
            })
            .sum()
    };

    let mu = if power(0.0) <= budget {
        0.0
    } else {
        let mut hi = scale.max(1e-12);
        let mut guard = 0;
        while power(hi) > budget {
            hi *= 2.0;
            guard += 1;
            if guard > 2000 || !hi.is_finite() {
                return Err(Error::Bisection { bs });
            }
        }
        let mut lo = 0.0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if power(mid) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    };
    if !mu.is_finite() {
        return Err(Error::Bisection { bs });
    }

    Ok(served
        .iter()
        .zip(&proj)
        .map(|(&u, p)| {
            let mut scaled = p.clone();
            for i in 0..n {
                let den = lambda[i].max(0.0) + mu;
                let f = if den <= floor { 0.0 } else { 1.0 / den };
                scaled.row_mut(i).scale_mut(f);
            }
            (u, &q * scaled)
        })
        .collect())
}

fn objective(drop: &ChannelDrop, tx: &TxStrategy, oci: &CMat) -> Result<f64> {
    Ok(-sum_rate(drop, tx, oci)? * LN_2)
}

/// WMMSE starting from `streams[u]` streams per MT.
pub fn wmmse_with_streams(
    drop: &ChannelDrop,
    cfg: &ScenarioConfig,
    oci_cov: &CMat,
    streams: &[usize],
) -> Result<SchemeOutput> {
    let budget = cfg.power_budget_per_bs;
    let noise_cov = oci_cov + scaled_identity(oci_cov.nrows(), drop.noise_var);

    let mut dirs = svd_init(drop, streams);
    for b in 0..drop.num_bs() {
        let total: usize = drop.mts_of(b).map(|u| dirs[u].ncols()).sum();
        let amp = (budget / total.max(1) as f64).sqrt();
        for u in drop.mts_of(b).collect::<Vec<_>>() {
            dirs[u].scale_mut(amp);
        }
    }
    let mut state = State { precoders: dirs };
    let mut tx = state.as_tx();
    let mut current = objective(drop, &tx, oci_cov)?;
    let mut trace = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iterations {
        let rw = receivers_and_weights(drop, &tx, &state, &noise_cov)?;
        for b in 0..drop.num_bs() {
            for (u, v) in precoder_step(drop, b, &rw, budget)? {
                state.precoders[u] = v;
            }
        }
        tx = state.as_tx();
        let next = objective(drop, &tx, oci_cov)?;
        trace.push(next);
        let change = relative_change(current, next);
        current = next;
        if change < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }

    let covs: Vec<CMat> = (0..drop.num_mts()).map(|u| tx.covariance(u)).collect();
    let tx = TxStrategy::from_covariances(&covs, WMMSE_STREAM_THRESHOLD * budget);
    let rx = mmse_receivers(drop, &tx, oci_cov)?;
    Ok(SchemeOutput {
        tx,
        rx,
        iterations_used: trace.len(),
        converged,
        objective_trace: trace,
        feedback_rx: None,
    })
}

/// WMMSE initialized with `min(N, M)` streams per MT.
pub fn wmmse(drop: &ChannelDrop, cfg: &ScenarioConfig, oci_cov: &CMat) -> Result<SchemeOutput> {
    let (n, m) = drop.antennas();
    wmmse_with_streams(drop, cfg, oci_cov, &vec![n.min(m); drop.num_mts()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::achievable_rate;
    use crate::model::{generate_drop, oci_covariance};
    use crate::numerics::{svd_sorted, waterfill};

    #[test]
    fn single_user_reaches_waterfilling_capacity() {
        let mut cfg = ScenarioConfig::interference_channel(1, 4, 2).with_interference(0.0, 0.0);
        cfg.max_iterations = 300;
        for i in 0..5 {
            let drop = generate_drop(&cfg, i, 5.0).unwrap();
            let oci = oci_covariance(&cfg, &drop);
            let out = wmmse(&drop, &cfg, &oci).unwrap();
            let got = achievable_rate(0, &drop, &out.tx, &oci).unwrap();
            let (sigma, _, _) = svd_sorted(drop.desired(0));
            let gains: Vec<f64> = sigma.iter().map(|s| s * s / drop.noise_var).collect();
            let wf = waterfill(&gains, 1.0).unwrap();
            let cap: f64 = gains.iter().zip(&wf.powers).map(|(g, p)| (1.0 + g * p).log2()).sum();
            assert!((got - cap).abs() < 1e-4, "{got} vs {cap}");
        }
    }

    #[test]
    fn objective_never_increases() {
        let cfg = ScenarioConfig::interference_channel(3, 4, 2).with_interference(1.0, 0.1);
        for i in 0..10 {
            let drop = generate_drop(&cfg, i, 15.0).unwrap();
            let oci = oci_covariance(&cfg, &drop);
            let out = wmmse(&drop, &cfg, &oci).unwrap();
            for w in out.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "{:?}", out.objective_trace);
            }
            assert!(out.tx.satisfies_constraints(&drop.serving, 3, 1.0));
            assert_eq!(out.objective_trace.len(), out.iterations_used);
        }
    }
}
