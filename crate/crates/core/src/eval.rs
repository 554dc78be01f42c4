//! Rate evaluation and the Monte Carlo ergodic-rate engine.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{generate_drop, oci_covariance, ChannelDrop, ScenarioConfig};
use crate::numerics::{hpd_solve, ln_det_hpd, normalize_rows, scaled_identity, CMat};
use crate::scheme::Scheme;
use crate::strategy::{RxStrategy, TxStrategy};

/// Which interference terms enter the covariance seen by an MT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterferenceView {
    /// Streams of other BSs in the cluster.
    pub include_ici: bool,
}

impl Default for InterferenceView {
    fn default() -> Self {
        Self { include_ici: true }
    }
}

/// Received covariance at `mt` from every MT's signal selected by `keep`.
pub fn received_covariance(
    drop: &ChannelDrop,
    tx: &TxStrategy,
    mt: usize,
    keep: impl Fn(usize) -> bool,
) -> CMat {
    let m = drop.desired(mt).nrows();
    let mut acc = CMat::zeros(m, m);
    for other in 0..drop.num_mts() {
        if !keep(other) || tx.stream_count(other) == 0 {
            continue;
        }
        let h = drop.channel(mt, drop.serving[other]);
        let hv = h * tx.scaled_precoder(other);
        acc += &hv * hv.adjoint();
    }
    acc
}

/// Interference-plus-noise covariance at `mt`, excluding its own signal.
pub fn interference_plus_noise(
    drop: &ChannelDrop,
    tx: &TxStrategy,
    mt: usize,
    oci_cov: &CMat,
    view: InterferenceView,
) -> CMat {
    let own_bs = drop.serving[mt];
    let mut r = received_covariance(drop, tx, mt, |o| {
        o != mt && (view.include_ici || drop.serving[o] == own_bs)
    });
    r += oci_cov;
    r += scaled_identity(r.nrows(), drop.noise_var);
    r
}

/// Mutual information of MT `mt` with an optimal receiver, in bits.
pub fn achievable_rate(
    mt: usize,
    drop: &ChannelDrop,
    tx: &TxStrategy,
    oci_cov: &CMat,
) -> Result<f64> {
    achievable_rate_with(mt, drop, tx, oci_cov, InterferenceView::default())
}

pub fn achievable_rate_with(
    mt: usize,
    drop: &ChannelDrop,
    tx: &TxStrategy,
    oci_cov: &CMat,
    view: InterferenceView,
) -> Result<f64> {
    if tx.stream_count(mt) == 0 {
        return Ok(0.0);
    }
    let r = interference_plus_noise(drop, tx, mt, oci_cov, view);
    let hv = drop.desired(mt) * tx.scaled_precoder(mt);
    let total = &r + &hv * hv.adjoint();
    let rate = (ln_det_hpd(&total)? - ln_det_hpd(&r)?) / LN_2;
    Ok(rate.max(0.0))
}

/// Post-combining SINR of every stream of `mt` under the given combiners.
pub fn stream_sinrs(
    mt: usize,
    drop: &ChannelDrop,
    tx: &TxStrategy,
    rx: &RxStrategy,
    oci_cov: &CMat,
) -> Vec<f64> {
    let r_others = interference_plus_noise(drop, tx, mt, oci_cov, InterferenceView::default());
    let hv = drop.desired(mt) * tx.scaled_precoder(mt);
    let w = &rx.combiners[mt];
    (0..tx.stream_count(mt))
        .map(|k| {
            let wk = w.row(k).into_owned();
            let mut noise = (&wk * &r_others * wk.adjoint())[(0, 0)].re;
            let mut signal = 0.0;
            for j in 0..hv.ncols() {
                let g = (&wk * hv.column(j))[(0, 0)].norm_sqr();
                if j == k {
                    signal = g;
                } else {
                    noise += g;
                }
            }
            signal / noise
        })
        .collect()
}

/// Rate achieved by a fixed linear combiner, `sum log2(1 + SINR)` over streams.
pub fn rx_rate(
    mt: usize,
    drop: &ChannelDrop,
    tx: &TxStrategy,
    rx: &RxStrategy,
    oci_cov: &CMat,
) -> f64 {
    stream_sinrs(mt, drop, tx, rx, oci_cov)
        .into_iter()
        .map(|s| (1.0 + s).log2())
        .sum()
}

/// Per-stream MMSE combiners for the given transmit strategy.
pub fn mmse_receivers(drop: &ChannelDrop, tx: &TxStrategy, oci_cov: &CMat) -> Result<RxStrategy> {
    let combiners = (0..drop.num_mts())
        .map(|u| {
            let m = drop.desired(u).nrows();
            if tx.stream_count(u) == 0 {
                return Ok(CMat::zeros(0, m));
            }
            let mut total = received_covariance(drop, tx, u, |_| true);
            total += oci_cov;
            total += scaled_identity(m, drop.noise_var);
            let directions = drop.desired(u) * &tx.precoders[u];
            let mut w = hpd_solve(&total, &directions)?.adjoint();
            normalize_rows(&mut w);
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RxStrategy { combiners })
}

/// Sum of optimal-receiver rates over all MTs.
pub fn sum_rate(drop: &ChannelDrop, tx: &TxStrategy, oci_cov: &CMat) -> Result<f64> {
    (0..drop.num_mts()).map(|u| achievable_rate(u, drop, tx, oci_cov)).sum()
}

/// Scales a rate by the resource share of the scheme.
pub fn prelog_adjust(rate: f64, scheme: &Scheme, num_bs: usize) -> f64 {
    rate * scheme.prelog(num_bs)
}

/// Ergodic rates of one scheme at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_mt_rate: Vec<f64>,
    pub per_mt_stderr: Vec<f64>,
    pub per_bs_sum: Vec<f64>,
    pub per_bs_stderr: Vec<f64>,
    pub cluster_sum: f64,
    /// Standard error of the cluster sum rate.
    pub stderr: f64,
    pub num_drops_used: usize,
    pub excluded_drops: usize,
}

impl RateReport {
    pub fn per_bs_mean(&self) -> f64 {
        self.cluster_sum / self.per_bs_sum.len() as f64
    }
}

/// Per-drop per-MT rates of one scheme at one SNR; `None` marks an excluded drop.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSamples {
    pub snr_db: f64,
    pub serving: Vec<usize>,
    pub num_bs: usize,
    pub drops: Vec<Option<Vec<f64>>>,
}

impl SnrSamples {
    /// Cluster sum rates of the drops that were not excluded, in drop order.
    pub fn cluster_sums(&self) -> Vec<f64> {
        self.drops.iter().flatten().map(|r| r.iter().sum()).collect()
    }

    pub fn report(&self) -> RateReport {
        let used: Vec<&Vec<f64>> = self.drops.iter().flatten().collect();
        let n = used.len();
        let num_mts = self.serving.len();
        let col = |f: &dyn Fn(&Vec<f64>) -> f64| -> (f64, f64) {
            let xs: Vec<f64> = used.iter().map(|r| f(r)).collect();
            mean_stderr(&xs)
        };
        let (per_mt_rate, per_mt_stderr): (Vec<f64>, Vec<f64>) =
            (0..num_mts).map(|u| col(&|r| r[u])).unzip();
        let (per_bs_sum, per_bs_stderr): (Vec<f64>, Vec<f64>) = (0..self.num_bs)
            .map(|b| {
                col(&|r| {
                    r.iter()
                        .zip(&self.serving)
                        .filter(|(_, &s)| s == b)
                        .map(|(x, _)| x)
                        .sum()
                })
            })
            .unzip();
        let (_, stderr) = col(&|r| r.iter().sum());
        RateReport {
            cluster_sum: per_bs_sum.iter().sum(),
            per_mt_rate,
            per_mt_stderr,
            per_bs_sum,
            per_bs_stderr,
            stderr,
            num_drops_used: n,
            excluded_drops: self.drops.len() - n,
        }
    }
}

/// Sample mean and standard error; the error is 0 for fewer than two samples.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// All samples of one scheme across the SNR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSamples {
    pub scheme: String,
    pub points: Vec<SnrSamples>,
}

impl SchemeSamples {
    pub fn at(&self, snr_db: f64) -> Option<&SnrSamples> {
        self.points.iter().find(|p| (p.snr_db - snr_db).abs() < 1e-9)
    }

    pub fn reports(&self) -> Vec<(f64, RateReport)> {
        self.points.iter().map(|p| (p.snr_db, p.report())).collect()
    }
}

/// Environment variable selecting the number of Monte Carlo worker threads.
pub const WORKERS_ENV: &str = "CBSIM_WORKERS";

/// Per-MT rates of `scheme` on one drop, prelog applied.
pub fn evaluate_drop(scheme: &Scheme, drop: &ChannelDrop, cfg: &ScenarioConfig) -> Result<Vec<f64>> {
    let oci = oci_covariance(cfg, drop);
    let out = scheme.run(drop, cfg, &oci)?;
    let view = InterferenceView {
        include_ici: !scheme.excludes_ici(),
    };
    (0..drop.num_mts())
        .map(|u| {
            achievable_rate_with(u, drop, &out.tx, &oci, view)
                .map(|r| prelog_adjust(r, scheme, cfg.num_bs))
        })
        .collect()
}

/// Runs every scheme on `cfg.num_drops` drops at every SNR point.
///
/// Drop `i` has the same channels for every scheme and SNR (common random
/// numbers). Drops where zero-forcing is impossible are excluded and counted.
pub fn monte_carlo_samples(cfg: &ScenarioConfig, schemes: &[Scheme]) -> Result<Vec<SchemeSamples>> {
    cfg.validate()?;
    let scheme_cfgs = schemes
        .iter()
        .map(|s| s.scenario_for(cfg))
        .collect::<Result<Vec<_>>>()?;

    let work = || -> Result<Vec<Vec<Vec<Option<Vec<f64>>>>>> {
        (0..cfg.num_drops as u64)
            .into_par_iter()
            .map(|i| {
                schemes
                    .iter()
                    .zip(&scheme_cfgs)
                    .map(|(scheme, scfg)| {
                        let base = generate_drop(scfg, i, 0.0)?;
                        scfg.snr_db_grid
                            .iter()
                            .map(|&snr| {
                                let drop = base.at_snr(scfg, snr);
                                match evaluate_drop(scheme, &drop, scfg) {
                                    Ok(r) => Ok(Some(r)),
                                    Err(Error::RankDeficient { .. }) => Ok(None),
                                    Err(e) => Err(Error::SchemeFailure {
                                        scheme: scheme.name(),
                                        snr_db: snr,
                                        drop: i,
                                        source: Box::new(e),
                                    }),
                                }
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    };

    let per_drop = match std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work)?,
        _ => work()?,
    };

    Ok(schemes
        .iter()
        .zip(&scheme_cfgs)
        .enumerate()
        .map(|(s, (scheme, scfg))| SchemeSamples {
            scheme: scheme.name(),
            points: scfg
                .snr_db_grid
                .iter()
                .enumerate()
                .map(|(k, &snr)| SnrSamples {
                    snr_db: snr,
                    serving: scfg.serving_map(),
                    num_bs: scfg.num_bs,
                    drops: per_drop.iter().map(|d| d[s][k].clone()).collect(),
                })
                .collect(),
        })
        .collect())
}

/// `(scheme name, [(snr_db, report)])` for each scheme.
pub type SchemeReports = Vec<(String, Vec<(f64, RateReport)>)>;

/// Ergodic rate reports per scheme and SNR point.
pub fn monte_carlo(cfg: &ScenarioConfig, schemes: &[Scheme]) -> Result<SchemeReports> {
    Ok(monte_carlo_samples(cfg, schemes)?
        .into_iter()
        .map(|s| {
            let reports = s.reports();
            (s.scheme, reports)
        })
        .collect())
}
