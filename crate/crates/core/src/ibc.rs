//! Two-cell interference broadcast channel schemes with equivalent-MISO
//! feedback, zero-forcing at the BS and IRC receivers at the MTs.
//!
//! Downlink IA: BS `l` restricts its transmission to a fixed reference basis
//! of `N - 1` dimensions, so the interference it causes at any MT of the other
//! cell lies in a known `N - 1` dimensional subspace. The MT receives along a
//! direction orthogonal to that subspace and feeds back the resulting MISO
//! channel. Eigenbeams: the MT receives along the dominant left singular
//! vector of its own channel.

use crate::error::{Error, Result};
use crate::eval::mmse_receivers;
use crate::model::{ChannelDrop, ScenarioConfig};
use crate::numerics::{self, adjoint_row, dominant_left_singular_vector, hermitian_eigen, CMat, CVec};
use crate::strategy::{RxStrategy, SchemeOutput, TxStrategy};

/// Rows of the stacked channel with singular values below this fraction of
/// the largest are treated as rank deficient.
pub const ZF_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IbcKind {
    DownlinkIa,
    Eigenbeams,
}

impl IbcKind {
    pub fn name(self) -> &'static str {
        match self {
            IbcKind::DownlinkIa => "downlink_ia",
            IbcKind::Eigenbeams => "eigenbeams",
        }
    }

    /// MTs served per BS for `N` BS antennas.
    pub fn mts_per_bs(self, antennas_bs: usize) -> usize {
        match self {
            IbcKind::DownlinkIa => antennas_bs - 1,
            IbcKind::Eigenbeams => antennas_bs,
        }
    }

    pub fn check_shape(self, cfg: &ScenarioConfig) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::Incompatible {
                scheme: self.name().into(),
                reason,
            })
        };
        if cfg.num_bs != 2 {
            return fail(format!("needs 2 BSs, got {}", cfg.num_bs));
        }
        if cfg.antennas_bs < 2 {
            return fail("needs at least 2 BS antennas".into());
        }
        if self == IbcKind::DownlinkIa && cfg.antennas_mt < cfg.antennas_bs {
            return fail(format!("needs M >= N, got M={} N={}", cfg.antennas_mt, cfg.antennas_bs));
        }
        let k = self.mts_per_bs(cfg.antennas_bs);
        if cfg.mts_per_bs.iter().any(|&x| x != k) {
            return fail(format!("needs {k} MTs per BS, got {:?}", cfg.mts_per_bs));
        }
        Ok(())
    }
}

/// Receive direction of one MT and the MISO channel it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentMiso {
    pub mt: usize,
    pub combiner_dir: CVec,
    /// `combiner_dir^H H_desired`, a `1 x N` row.
    pub eq_channel: CMat,
}

/// Fixed transmit subspace used by Downlink IA: the first `N - 1` columns of `I_N`.
pub fn reference_basis(antennas_bs: usize) -> CMat {
    numerics::scaled_identity(antennas_bs, 1.0)
        .columns(0, antennas_bs - 1)
        .into_owned()
}

/// Best desired-channel direction inside the orthogonal complement of the
/// column space of `interference`.
pub fn interference_free_direction(interference: &CMat, desired: &CMat) -> Result<CVec> {
    let m = interference.nrows();
    let (values, vectors) = hermitian_eigen(&(interference * interference.adjoint()));
    let top = values.first().copied().unwrap_or(0.0);
    let rank = if top <= 0.0 {
        0
    } else {
        values.iter().filter(|&&l| l > 1e-12 * top).count()
    };
    if rank >= m {
        return Err(Error::Infeasible("interference spans the whole receive space".into()));
    }
    let complement = vectors.columns(rank, m - rank).into_owned();
    if complement.ncols() == 1 {
        return Ok(complement.column(0).into_owned());
    }
    let inner = dominant_left_singular_vector(&(complement.adjoint() * desired))?;
    let mut w = &complement * inner;
    numerics::fix_phase(&mut w);
    Ok(w)
}

fn equivalent(drop: &ChannelDrop, mt: usize, w: CVec) -> EquivalentMiso {
    let eq_channel = adjoint_row(&w) * drop.desired(mt);
    EquivalentMiso {
        mt,
        combiner_dir: w,
        eq_channel,
    }
}

/// Equivalent MISO channels of every MT for the given scheme.
pub fn equivalent_channels(kind: IbcKind, drop: &ChannelDrop) -> Result<Vec<EquivalentMiso>> {
    let (n, _) = drop.antennas();
    let basis = reference_basis(n);
    (0..drop.num_mts())
        .map(|u| {
            let w = match kind {
                IbcKind::DownlinkIa => {
                    let other = 1 - drop.serving[u];
                    interference_free_direction(&(drop.channel(u, other) * &basis), drop.desired(u))?
                }
                IbcKind::Eigenbeams => dominant_left_singular_vector(drop.desired(u))?,
            };
            Ok(equivalent(drop, u, w))
        })
        .collect()
}

/// Zero-forcing directions for stacked rows `rows` (K x N), optionally
/// restricted to the column space of an orthonormal `basis`.
///
/// Returns unit-norm `N x K` precoders with `rows_i v_j = 0` for `i != j`.
pub fn zero_forcing(rows: &CMat, basis: Option<&CMat>, bs: usize) -> Result<CMat> {
    let reduced = match basis {
        Some(b) => rows * b,
        None => rows.clone(),
    };
    let (sigma, _, _) = numerics::svd_sorted(&reduced);
    let k = rows.nrows();
    if sigma.len() < k || sigma[k - 1] <= ZF_RANK_TOL * sigma[0] {
        return Err(Error::RankDeficient { bs });
    }
    let gram = &reduced * reduced.adjoint();
    let inv = numerics::hpd_solve(&gram, &numerics::scaled_identity(k, 1.0))?;
    let a = reduced.adjoint() * inv;
    let mut v = match basis {
        Some(b) => b * a,
        None => a,
    };
    numerics::normalize_columns(&mut v);
    Ok(v)
}

/// Zero-forcing transmit strategy from per-MT feedback rows, equal power per MT.
pub fn zf_strategy(
    kind: IbcKind,
    drop: &ChannelDrop,
    cfg: &ScenarioConfig,
    feedback_rows: &[CMat],
) -> Result<TxStrategy> {
    let (n, _) = drop.antennas();
    let basis = reference_basis(n);
    let mut precoders = vec![CMat::zeros(n, 1); drop.num_mts()];
    for bs in 0..drop.num_bs() {
        let served: Vec<usize> = drop.mts_of(bs).collect();
        let mut stacked = CMat::zeros(served.len(), n);
        for (i, &u) in served.iter().enumerate() {
            stacked.set_row(i, &feedback_rows[u].row(0));
        }
        let v = match kind {
            IbcKind::DownlinkIa => zero_forcing(&stacked, Some(&basis), bs)?,
            IbcKind::Eigenbeams => zero_forcing(&stacked, None, bs)?,
        };
        for (i, &u) in served.iter().enumerate() {
            precoders[u] = v.columns(i, 1).into_owned();
        }
    }
    let shares: Vec<f64> = drop
        .serving
        .iter()
        .map(|&b| cfg.power_budget_per_bs / drop.mts_of(b).count() as f64)
        .collect();
    Ok(TxStrategy::equal_power(precoders, &shares))
}

/// Full pipeline given the feedback rows the BSs act on.
pub(crate) fn run_with_feedback(
    kind: IbcKind,
    drop: &ChannelDrop,
    cfg: &ScenarioConfig,
    miso: &[EquivalentMiso],
    feedback_rows: &[CMat],
    oci_cov: &CMat,
) -> Result<SchemeOutput> {
    let tx = zf_strategy(kind, drop, cfg, feedback_rows)?;
    let feedback_rx = RxStrategy {
        combiners: miso.iter().map(|e| adjoint_row(&e.combiner_dir)).collect(),
    };
    // IRC with the exact covariance of every other stream, OCI and noise
    let rx = mmse_receivers(drop, &tx, oci_cov)?;
    Ok(SchemeOutput {
        feedback_rx: Some(feedback_rx),
        ..SchemeOutput::closed_form(tx, rx)
    })
}

fn run_ideal(kind: IbcKind, drop: &ChannelDrop, cfg: &ScenarioConfig) -> Result<SchemeOutput> {
    kind.check_shape(cfg)?;
    let miso = equivalent_channels(kind, drop)?;
    let rows: Vec<CMat> = miso.iter().map(|e| e.eq_channel.clone()).collect();
    let oci = crate::model::oci_covariance(cfg, drop);
    run_with_feedback(kind, drop, cfg, &miso, &rows, &oci)
}

pub fn downlink_ia(drop: &ChannelDrop, cfg: &ScenarioConfig) -> Result<SchemeOutput> {
    run_ideal(IbcKind::DownlinkIa, drop, cfg)
}

pub fn eigenbeams(drop: &ChannelDrop, cfg: &ScenarioConfig) -> Result<SchemeOutput> {
    run_ideal(IbcKind::Eigenbeams, drop, cfg)
}

/// Scenario of the WMMSE reference: `N - 1` single-stream MTs per BS.
pub fn wmmse_ibc_scenario(cfg: &ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig {
        mts_per_bs: vec![cfg.antennas_bs.saturating_sub(1).max(1); cfg.num_bs],
        ..cfg.clone()
    }
}

/// WMMSE on the broadcast configuration, one initial stream per MT.
pub fn wmmse_ibc_reference(drop: &ChannelDrop, cfg: &ScenarioConfig, oci_cov: &CMat) -> Result<SchemeOutput> {
    crate::ifc::wmmse_with_streams(drop, cfg, oci_cov, &vec![1; drop.num_mts()])
}
