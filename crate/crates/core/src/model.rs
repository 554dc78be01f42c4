//! Scenario parameters and channel-drop generation.
//!
//! Every MT `u` served by BS `b` sees a unit-variance Rayleigh channel from
//! its own BS and channels of entry variance `alpha / (B - 1)` from the other
//! BSs of the cluster. Out-of-cluster interference is white with per-antenna
//! power `beta * S / M`, where `S = M * P` is the nominal desired received
//! power for a per-BS budget `P`. Noise is scaled so that `S / (M * noise)`
//! equals the linear SNR.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{scaled_identity, CMat, CVec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_bs: usize,
    pub antennas_bs: usize,
    pub antennas_mt: usize,
    pub mts_per_bs: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub snr_db_grid: Vec<f64>,
    #[serde(default = "default_nakagami")]
    pub nakagami_m: f64,
    pub num_drops: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_budget")]
    pub power_budget_per_bs: f64,
    /// Streams per MT for IA and max-SINR; `None` uses `max(1, min(N, M) / 2)`.
    #[serde(default)]
    pub streams_per_mt: Option<usize>,
}

fn default_nakagami() -> f64 {
    1.0
}
fn default_iterations() -> usize {
    10
}
fn default_budget() -> f64 {
    1.0
}

impl ScenarioConfig {
    /// IFC scenario with one MT per BS and default iteration budget.
    pub fn interference_channel(num_bs: usize, antennas_bs: usize, antennas_mt: usize) -> Self {
        Self {
            num_bs,
            antennas_bs,
            antennas_mt,
            mts_per_bs: vec![1; num_bs],
            alpha: 1.0,
            beta: 0.0,
            snr_db_grid: vec![15.0],
            nakagami_m: default_nakagami(),
            num_drops: 100,
            rng_seed: 0,
            max_iterations: default_iterations(),
            power_budget_per_bs: default_budget(),
            streams_per_mt: None,
        }
    }

    pub fn with_interference(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_bs == 0 {
            return bad("num_bs must be positive".into());
        }
        if self.antennas_bs == 0 || self.antennas_mt == 0 {
            return bad("antenna counts must be positive".into());
        }
        if self.mts_per_bs.len() != self.num_bs {
            return bad(format!(
                "mts_per_bs has {} entries for {} BSs",
                self.mts_per_bs.len(),
                self.num_bs
            ));
        }
        if self.mts_per_bs.contains(&0) {
            return bad("every BS must serve at least one MT".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta {} outside [0, 1]", self.beta));
        }
        if !(self.nakagami_m >= 0.5) {
            return bad(format!("nakagami_m {} below 0.5", self.nakagami_m));
        }
        if self.num_drops == 0 {
            return bad("num_drops must be positive".into());
        }
        if !(self.power_budget_per_bs > 0.0) {
            return bad("power_budget_per_bs must be positive".into());
        }
        if self.snr_db_grid.iter().any(|s| !s.is_finite()) {
            return bad("snr_db_grid contains a non-finite value".into());
        }
        if self.num_bs == 1 && self.alpha > 0.0 {
            return bad("alpha > 0 needs at least two BSs to carry intra-cluster interference".into());
        }
        Ok(())
    }

    pub fn num_mts(&self) -> usize {
        self.mts_per_bs.iter().sum()
    }

    /// Serving BS of every MT, MTs numbered BS by BS.
    pub fn serving_map(&self) -> Vec<usize> {
        self.mts_per_bs
            .iter()
            .enumerate()
            .flat_map(|(b, &k)| std::iter::repeat_n(b, k))
            .collect()
    }

    /// Nominal expected desired received power `S` summed over a BS's MTs.
    pub fn nominal_signal_power(&self) -> f64 {
        self.antennas_mt as f64 * self.power_budget_per_bs
    }

    pub fn noise_var(&self, snr_db: f64) -> f64 {
        let snr = db_to_linear(snr_db);
        self.nominal_signal_power() / (self.antennas_mt as f64 * snr)
    }

    pub fn oci_elem_power(&self) -> f64 {
        self.beta * self.nominal_signal_power() / self.antennas_mt as f64
    }

    pub fn cross_link_variance(&self) -> f64 {
        if self.num_bs > 1 {
            self.alpha / (self.num_bs - 1) as f64
        } else {
            0.0
        }
    }

    pub fn default_streams_per_mt(&self) -> usize {
        self.streams_per_mt
            .unwrap_or_else(|| (self.antennas_bs.min(self.antennas_mt) / 2).max(1))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One fading realization of every MT-BS channel in the cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDrop {
    /// `channels[u][b]` is the `M x N` matrix from BS `b` to MT `u`.
    pub channels: Vec<Vec<CMat>>,
    pub serving: Vec<usize>,
    pub oci_elem_power: f64,
    pub noise_var: f64,
    pub drop_index: u64,
}

impl ChannelDrop {
    pub fn num_mts(&self) -> usize {
        self.serving.len()
    }

    pub fn num_bs(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn antennas(&self) -> (usize, usize) {
        let h = &self.channels[0][0];
        (h.ncols(), h.nrows())
    }

    pub fn channel(&self, mt: usize, bs: usize) -> &CMat {
        &self.channels[mt][bs]
    }

    pub fn desired(&self, mt: usize) -> &CMat {
        &self.channels[mt][self.serving[mt]]
    }

    pub fn mts_of(&self, bs: usize) -> impl Iterator<Item = usize> + '_ {
        self.serving
            .iter()
            .enumerate()
            .filter(move |(_, &b)| b == bs)
            .map(|(u, _)| u)
    }

    /// Same channels with noise rescaled for another SNR point.
    pub fn at_snr(&self, cfg: &ScenarioConfig, snr_db: f64) -> Self {
        Self {
            noise_var: cfg.noise_var(snr_db),
            ..self.clone()
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream for one (drop, purpose, indices) tuple.
///
/// Streams depend only on their own coordinates, so MT `k` of BS `b` sees the
/// same channel regardless of how many MTs the scenario has, how many
/// workers run, or which alpha/beta values scale it.
pub fn derived_rng(seed: u64, drop_index: u64, coords: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed ^ 0x5EED);
    h = splitmix64(h ^ drop_index);
    for &c in coords {
        h = splitmix64(h ^ c);
    }
    ChaCha8Rng::seed_from_u64(h)
}

const STREAM_CHANNEL: u64 = 1;
const STREAM_OCI: u64 = 2;

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws the channels of one drop at the given SNR.
pub fn generate_drop(cfg: &ScenarioConfig, drop_index: u64, snr_db: f64) -> Result<ChannelDrop> {
    cfg.validate()?;
    let (n, m) = (cfg.antennas_bs, cfg.antennas_mt);
    let cross_std = cfg.cross_link_variance().sqrt();
    let mut channels = Vec::with_capacity(cfg.num_mts());
    let mut serving = Vec::with_capacity(cfg.num_mts());
    for (b, &count) in cfg.mts_per_bs.iter().enumerate() {
        for k in 0..count {
            let row = (0..cfg.num_bs)
                .map(|l| {
                    let mut rng = derived_rng(
                        cfg.rng_seed,
                        drop_index,
                        &[STREAM_CHANNEL, b as u64, k as u64, l as u64],
                    );
                    let scale = if l == b { 1.0 } else { cross_std };
                    DMatrix::from_fn(m, n, |_, _| complex_gaussian(&mut rng) * scale)
                })
                .collect();
            channels.push(row);
            serving.push(b);
        }
    }
    Ok(ChannelDrop {
        channels,
        serving,
        oci_elem_power: cfg.oci_elem_power(),
        noise_var: cfg.noise_var(snr_db),
        drop_index,
    })
}

/// Random stream for OCI realizations of MT `mt` in a drop.
pub fn oci_rng(cfg: &ScenarioConfig, drop: &ChannelDrop, mt: usize) -> ChaCha8Rng {
    derived_rng(cfg.rng_seed, drop.drop_index, &[STREAM_OCI, mt as u64])
}

/// One OCI vector with Nakagami-m amplitudes and uniform phases.
pub fn sample_oci(drop: &ChannelDrop, cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<CVec> {
    if !(cfg.nakagami_m >= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "nakagami_m {} below 0.5",
            cfg.nakagami_m
        )));
    }
    let m = cfg.antennas_mt;
    let omega = drop.oci_elem_power;
    if omega == 0.0 {
        return Ok(CVec::zeros(m));
    }
    // |g|^2 ~ Gamma(m, omega / m)
    let power = Gamma::new(cfg.nakagami_m, omega / cfg.nakagami_m)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(CVec::from_fn(m, |_, _| {
        let amp = power.sample(rng).sqrt();
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        Complex64::from_polar(amp, phase)
    }))
}

/// Covariance used for OCI in receiver design and rate evaluation.
pub fn oci_covariance(cfg: &ScenarioConfig, drop: &ChannelDrop) -> CMat {
    scaled_identity(cfg.antennas_mt, drop.oci_elem_power)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_433() -> ScenarioConfig {
        ScenarioConfig::interference_channel(3, 4, 2)
    }

    #[test]
    fn zero_alpha_gives_zero_cross_links() {
        let cfg = cfg_433().with_interference(0.0, 0.0);
        let d = generate_drop(&cfg, 0, 10.0).unwrap();
        for u in 0..3 {
            for l in 0..3 {
                if l != u {
                    assert!(d.channel(u, l).iter().all(|z| *z == Complex64::new(0.0, 0.0)));
                } else {
                    assert!(d.channel(u, l).norm() > 0.0);
                }
            }
        }
    }

    #[test]
    fn cross_link_power_is_half_for_three_bs() {
        let cfg = cfg_433().with_interference(1.0, 0.0);
        let drops = 10_000;
        let samples: Vec<f64> = (0..drops)
            .map(|i| generate_drop(&cfg, i, 0.0).unwrap().channel(0, 1).norm_squared())
            .collect();
        let mean = samples.iter().sum::<f64>() / drops as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (drops - 1) as f64;
        let se = (var / drops as f64).sqrt();
        assert!((mean - 4.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn drops_are_deterministic() {
        let cfg = cfg_433();
        assert_eq!(generate_drop(&cfg, 7, 5.0).unwrap(), generate_drop(&cfg, 7, 5.0).unwrap());
        assert_ne!(generate_drop(&cfg, 7, 5.0).unwrap(), generate_drop(&cfg, 8, 5.0).unwrap());
    }

    #[test]
    fn drops_share_channels_across_alpha_and_mt_counts() {
        let a = cfg_433().with_interference(1.0, 0.0);
        let b = cfg_433().with_interference(0.25, 0.25);
        let da = generate_drop(&a, 3, 15.0).unwrap();
        let db = generate_drop(&b, 3, 15.0).unwrap();
        assert_eq!(da.desired(1), db.desired(1));
        let ratio = (0.125f64 / 0.5).sqrt();
        assert!((da.channel(0, 2).map(|z| z * ratio) - db.channel(0, 2)).norm() < 1e-12);

        let mut wide = a.clone();
        wide.mts_per_bs = vec![2, 2, 2];
        let dw = generate_drop(&wide, 3, 15.0).unwrap();
        // MT 0 of BS 1 is global index 1 in `a` and 2 in `wide`
        assert_eq!(da.channel(1, 1), dw.channel(2, 1));
    }

    #[test]
    fn power_calibration() {
        let mut cfg = cfg_433().with_interference(0.5, 0.3);
        cfg.power_budget_per_bs = 2.5;
        for snr_db in [-5.0, 0.0, 12.5, 30.0] {
            let s = cfg.nominal_signal_power();
            let m = cfg.antennas_mt as f64;
            let lin = db_to_linear(snr_db);
            assert!((s / (m * cfg.noise_var(snr_db) * lin) - 1.0).abs() < 1e-12);
            assert!((m * cfg.oci_elem_power() / s - cfg.beta).abs() < 1e-12);
        }
    }

    #[test]
    fn single_bs_with_alpha_rejected() {
        let cfg = ScenarioConfig::interference_channel(1, 4, 2).with_interference(0.5, 0.0);
        assert!(matches!(generate_drop(&cfg, 0, 0.0), Err(Error::InvalidConfig(_))));
        let ok = ScenarioConfig::interference_channel(1, 4, 2).with_interference(0.0, 0.2);
        assert!(generate_drop(&ok, 0, 0.0).is_ok());
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut c = cfg_433();
        c.mts_per_bs = vec![1, 1];
        assert!(c.validate().is_err());
        let mut c = cfg_433();
        c.alpha = 1.5;
        assert!(c.validate().is_err());
        let mut c = cfg_433();
        c.nakagami_m = 0.3;
        assert!(c.validate().is_err());
        let mut c = cfg_433();
        c.mts_per_bs = vec![1, 0, 1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn oci_zero_power_is_zero_vector() {
        let cfg = cfg_433().with_interference(1.0, 0.0);
        let d = generate_drop(&cfg, 0, 0.0).unwrap();
        let g = sample_oci(&d, &cfg, &mut oci_rng(&cfg, &d, 0)).unwrap();
        assert!(g.iter().all(|z| z.norm() == 0.0));
        assert!(oci_covariance(&cfg, &d).norm() == 0.0);
    }

    fn oci_moments(cfg: &ScenarioConfig, power: f64, n: usize) -> (f64, f64) {
        let mut d = generate_drop(cfg, 0, 0.0).unwrap();
        d.oci_elem_power = power;
        let mut rng = oci_rng(cfg, &d, 0);
        let (mut m2, mut m4, mut count) = (0.0, 0.0, 0usize);
        for _ in 0..n {
            for z in sample_oci(&d, cfg, &mut rng).unwrap().iter() {
                let p = z.norm_sqr();
                m2 += p;
                m4 += p * p;
                count += 1;
            }
        }
        (m2 / count as f64, m4 / count as f64)
    }

    #[test]
    fn rayleigh_oci_second_moment() {
        let cfg = cfg_433().with_interference(1.0, 0.5);
        let (m2, m4) = oci_moments(&cfg, 0.5, 100_000);
        assert!((m2 / 0.5 - 1.0).abs() < 0.01, "{m2}");
        // Rayleigh envelope: E|g|^4 = 2 (E|g|^2)^2
        assert!((m4 / (m2 * m2) - 2.0).abs() < 0.04);
    }

    #[test]
    fn nakagami_three_moments() {
        let mut cfg = cfg_433().with_interference(1.0, 0.5);
        cfg.nakagami_m = 3.0;
        let (m2, m4) = oci_moments(&cfg, 2.0, 100_000);
        assert!((m2 / 2.0 - 1.0).abs() < 0.01, "{m2}");
        assert!((m4 / (m2 * m2) / (4.0 / 3.0) - 1.0).abs() < 0.02, "{}", m4 / (m2 * m2));
    }

    #[test]
    fn oci_sample_covariance_matches_model() {
        let cfg = cfg_433().with_interference(1.0, 0.5);
        let d = generate_drop(&cfg, 1, 0.0).unwrap();
        let mut rng = oci_rng(&cfg, &d, 1);
        let n = 100_000;
        let mut acc = CMat::zeros(2, 2);
        for _ in 0..n {
            let g = sample_oci(&d, &cfg, &mut rng).unwrap();
            acc += &g * g.adjoint();
        }
        acc.unscale_mut(n as f64);
        let model = oci_covariance(&cfg, &d);
        assert!((acc - &model).norm() / model.norm() < 0.02);
    }
}
