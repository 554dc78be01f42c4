//! Reconfigurable coordinated beamforming: single-user waterfilling on an
//! interference-whitened channel, priced by the MMSE loss it causes in the
//! rest of the network.
//!
//! MTs are updated one after another. MT `u` of BS `b` sees its current
//! interference-plus-noise covariance `R_u` and a leakage price
//! `L = sum_{m != u} H_{m,b}^H (R_m^{-1} - (R_m + S_m)^{-1}) H_{m,b}`, the
//! gradient of the other MTs' rates with respect to `u`'s transmit
//! covariance. It then solves
//!
//! `max_Q log det(I + R_u^{-1} H Q H^H) - tr((L + mu I) Q)`
//!
//! in closed form: with `G = R_u^{-1/2} H (L + mu I)^{-1/2}` and singular
//! pairs `(s_i, y_i)`, the optimum is waterfilling at unit level,
//! `Q = (L + mu I)^{-1/2} Y diag((1 - 1/s_i^2)^+) Y^H (L + mu I)^{-1/2}`,
//! with `mu >= 0` the dual variable of the MT's power share. The number of
//! active eigenchannels is the reported stream count.

use crate::error::{Error, Result};
use crate::eval::{interference_plus_noise, mmse_receivers, received_covariance, sum_rate, InterferenceView};
use crate::model::ChannelDrop;
use crate::model::ScenarioConfig;
use crate::numerics::{hermitian_eigen, hpd_solve, inv_sqrt_hpd, scaled_identity, svd_sorted, CMat};
use crate::strategy::{SchemeOutput, TxStrategy};

use super::{relative_change, su_waterfilling, CONVERGENCE_TOL};

const BISECTION_STEPS: usize = 80;

struct Priced {
    cov: CMat,
    streams: usize,
}

/// Optimal priced covariance for a fixed multiplier `mu`.
fn priced_covariance(whitened_h: &CMat, price_eig: &(Vec<f64>, CMat), mu: f64, floor: f64) -> Option<Priced> {
    let (ell, z) = price_eig;
    let n = z.nrows();
    let mut inv_sqrt = z.clone();
    for i in 0..n {
        let t = ell[i].max(0.0) + mu;
        if t <= floor {
            return None;
        }
        inv_sqrt.column_mut(i).scale_mut(1.0 / t.sqrt());
    }
    let t_inv_sqrt = &inv_sqrt * z.adjoint();
    let g = whitened_h * &t_inv_sqrt;
    let (s, _, y) = svd_sorted(&g);
    let mut xy = y.clone();
    let mut streams = 0;
    for (i, &si) in s.iter().enumerate() {
        let x = if si * si > 1.0 { 1.0 - 1.0 / (si * si) } else { 0.0 };
        if x > 0.0 {
            streams += 1;
        }
        xy.column_mut(i).scale_mut(x.sqrt());
    }
    let half = &t_inv_sqrt * xy;
    Some(Priced {
        cov: &half * half.adjoint(),
        streams,
    })
}

fn trace_re(q: &CMat) -> f64 {
    (0..q.nrows()).map(|i| q[(i, i)].re).sum()
}

fn update_mt(drop: &ChannelDrop, tx: &TxStrategy, oci: &CMat, u: usize, share: f64) -> Result<(CMat, Vec<f64>)> {
    let b = drop.serving[u];
    let n = drop.channel(u, b).ncols();

    let r_u = interference_plus_noise(drop, tx, u, oci, InterferenceView::default());
    let whitened = inv_sqrt_hpd(&r_u)? * drop.desired(u);

    let mut price = CMat::zeros(n, n);
    for m in 0..drop.num_mts() {
        if m == u {
            continue;
        }
        let h = drop.channel(m, b);
        if h.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let r_m = interference_plus_noise(drop, tx, m, oci, InterferenceView::default());
        let s_m = received_covariance(drop, tx, m, |o| o == m);
        let k = r_m.nrows();
        let pi = hpd_solve(&r_m, &scaled_identity(k, 1.0))? - hpd_solve(&(&r_m + s_m), &scaled_identity(k, 1.0))?;
        price += h.adjoint() * pi * h;
    }
    let eig = hermitian_eigen(&price);
    let scale = eig.0.first().copied().unwrap_or(0.0).abs().max(whitened.norm_squared());
    let floor = 1e-13 * scale.max(1e-300);

    let power_at = |mu: f64| priced_covariance(&whitened, &eig, mu, floor);
    let within = |p: &Option<Priced>| p.as_ref().is_some_and(|q| trace_re(&q.cov) <= share);

    let start = power_at(0.0);
    let chosen = if within(&start) {
        start
    } else {
        let mut hi = scale.max(1e-12);
        let mut guard = 0;
        while !within(&power_at(hi)) {
            hi *= 2.0;
            guard += 1;
            if guard > 2000 || !hi.is_finite() {
                return Err(Error::Bisection { bs: b });
            }
        }
        let mut lo = 0.0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if within(&power_at(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        power_at(hi)
    };
    let priced = chosen.ok_or(Error::Bisection { bs: b })?;

    let (values, vectors) = hermitian_eigen(&priced.cov);
    let d = priced.streams;
    let v = vectors.columns(0, d).into_owned();
    let p = values[..d].iter().map(|&x| x.max(0.0)).collect();
    Ok((v, p))
}

pub fn reconfigurable(drop: &ChannelDrop, cfg: &ScenarioConfig, oci_cov: &CMat) -> Result<SchemeOutput> {
    let shares: Vec<f64> = (0..drop.num_mts())
        .map(|u| cfg.power_budget_per_bs / drop.mts_of(drop.serving[u]).count() as f64)
        .collect();

    let mut precoders = Vec::with_capacity(drop.num_mts());
    let mut powers = Vec::with_capacity(drop.num_mts());
    for (u, &share) in shares.iter().enumerate() {
        let (v, p) = su_waterfilling(drop.desired(u), drop.noise_var + drop.oci_elem_power, share)?;
        precoders.push(v);
        powers.push(p);
    }
    let mut tx = TxStrategy { precoders, powers };
    let mut current = sum_rate(drop, &tx, oci_cov)?;
    let mut trace = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iterations {
        for (u, &share) in shares.iter().enumerate() {
            let (v, p) = update_mt(drop, &tx, oci_cov, u, share)?;
            tx.precoders[u] = v;
            tx.powers[u] = p;
        }
        let next = sum_rate(drop, &tx, oci_cov)?;
        trace.push(next);
        let change = relative_change(current, next);
        current = next;
        if change < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }

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
