//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use cbsim::feedback::Codebook;
use cbsim::ifc::wmmse;
use cbsim::model::{generate_drop, oci_covariance, ScenarioConfig};
use cbsim::numerics::{combiner_sinr, mmse_combiner, CMat, CVec};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Matrix with i.i.d. unit-variance circular Gaussian entries.
pub fn random_channel(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
    })
}

/// Random Hermitian positive definite matrix.
pub fn random_hpd(rng: &mut impl Rng, n: usize) -> CMat {
    let a = random_channel(rng, n, n + 2);
    &a * a.adjoint() + CMat::identity(n, n) * Complex64::new(0.1, 0.0)
}

/// Exhaustive argmax of `|entry^H h|`, lowest index on ties.
pub fn brute_force_pmi(h: &CMat, cb: &Codebook) -> usize {
    let h: CVec = h.column(0).into_owned();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, e) in cb.entries.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..e.len() {
            acc += e[k].conj() * h[k];
        }
        if acc.norm() > best.1 {
            best = (i, acc.norm());
        }
    }
    best.0
}

/// WMMSE objective trace never increases on `drops` random IFC drops.
pub fn wmmse_trace_monotone(rng: &mut impl Rng, drops: usize) -> bool {
    (0..drops).all(|_| {
        let mut cfg = ScenarioConfig::interference_channel(3, 4, 2)
            .with_interference(rng.random_range(0.0..1.0), rng.random_range(0.0..0.5));
        cfg.rng_seed = rng.random();
        let snr = rng.random_range(-5.0..30.0);
        let drop = generate_drop(&cfg, 0, snr).unwrap();
        let out = wmmse(&drop, &cfg, &oci_covariance(&cfg, &drop)).unwrap();
        out.objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0))
    })
}

/// The IRC combiner's SINR is at least that of `tries` random combiners.
pub fn irc_beats_random(rng: &mut impl Rng, cases: usize, tries: usize) -> bool {
    (0..cases).all(|_| {
        let m = rng.random_range(2..6);
        let h = random_channel(rng, m, 1);
        let r = random_hpd(rng, m);
        let w = mmse_combiner(&h, &r).unwrap();
        let hv: CVec = h.column(0).into_owned();
        let best = combiner_sinr(&w, &hv, &r);
        (0..tries).all(|_| combiner_sinr(&random_channel(rng, 1, m), &hv, &r) <= best * (1.0 + 1e-9))
    })
}
