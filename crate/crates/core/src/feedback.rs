//! Limited feedback: PMI codebooks, equivalent-channel quantization and CQI.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ibc::{equivalent_channels, run_with_feedback, IbcKind};
use crate::model::{oci_covariance, ChannelDrop, ScenarioConfig};
use crate::numerics::{adjoint_row, CMat, CVec};
use crate::strategy::SchemeOutput;

pub const CODEBOOK_BITS: u32 = 8;
pub const CODEBOOK_SIZE: usize = 1 << CODEBOOK_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Dual-polarized dual-stage rank-1 family for 4 antennas.
    LteDualStage,
    /// Oversampled DFT beams.
    DftGrid,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::LteDualStage => "lte_dual_stage",
            Construction::DftGrid => "dft_grid",
        }
    }
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lte_dual_stage" => Ok(Construction::LteDualStage),
            "dft_grid" => Ok(Construction::DftGrid),
            other => Err(Error::Codebook(format!("unknown construction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// Unit-norm precoders in PMI order.
    pub entries: Vec<CVec>,
    pub construction: Construction,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries.first().map_or(0, |e| e.len())
    }

    /// Codebook from arbitrary vectors, normalized to unit norm.
    pub fn from_entries(entries: Vec<CVec>, construction: Construction) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Codebook("no entries".into()));
        }
        let dim = entries[0].len();
        let entries = entries
            .into_iter()
            .map(|e| {
                if e.len() != dim {
                    return Err(Error::Codebook("entries differ in length".into()));
                }
                let n = e.norm();
                if n == 0.0 {
                    return Err(Error::Codebook("zero entry".into()));
                }
                Ok(e.unscale(n))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            entries,
            construction,
        })
    }

    /// Text form: one entry per line, comma-separated `re+imj` values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line: Vec<String> = e.iter().map(|z| format_complex(*z)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn from_text(text: &str, construction: Construction) -> Result<Self> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                line.split(',')
                    .map(|tok| {
                        parse_complex(tok.trim())
                            .ok_or_else(|| Error::Codebook(format!("line {}: bad value `{tok}`", i + 1)))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(CVec::from_vec)
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.is_empty() {
            return Err(Error::Codebook("empty codebook file".into()));
        }
        let dim = entries[0].len();
        if entries.iter().any(|e| e.len() != dim) {
            return Err(Error::Codebook("entries differ in length".into()));
        }
        Ok(Self {
            entries,
            construction,
        })
    }
}

fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}j", z.re, sign, z.im.abs())
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let body = s.strip_suffix('j')?;
    // the imaginary sign is the last '+' or '-' not at the start and not after an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split + 1..].parse().ok()?;
    let im = if bytes[split] == b'-' { -im } else { im };
    Some(Complex64::new(re, im))
}

/// Builds the 256-entry codebook of the given construction.
///
/// `LteDualStage` (4 antennas only) indexes `pmi = 16 i1 + i2`: `i1` picks a
/// group of two adjacent beams out of 32 for each polarization, `i2` picks
/// the beam within the group and one of 8 co-phasing values, giving
/// `w = [v_m; phi_n v_m] / 2` with `v_m = [1, e^{j 2 pi m / 32}]`,
/// `m = 2 i1 + i2 / 8` and `phi_n = e^{j pi n / 4}`, `n = i2 mod 8`.
pub fn build_codebook(antennas: usize, construction: Construction) -> Result<Codebook> {
    match construction {
        Construction::LteDualStage => {
            if antennas != 4 {
                return Err(Error::Codebook(format!(
                    "lte_dual_stage is defined for 4 antennas, got {antennas}"
                )));
            }
            let entries = (0..CODEBOOK_SIZE)
                .map(|pmi| {
                    let (i1, i2) = (pmi / 16, pmi % 16);
                    let m = 2 * i1 + i2 / 8;
                    let n = i2 % 8;
                    let beam = Complex64::from_polar(1.0, TAU * m as f64 / 32.0);
                    let cophase = Complex64::from_polar(1.0, PI * n as f64 / 4.0);
                    CVec::from_vec(vec![
                        Complex64::new(0.5, 0.0),
                        beam * 0.5,
                        cophase * 0.5,
                        cophase * beam * 0.5,
                    ])
                })
                .collect();
            Ok(Codebook {
                entries,
                construction,
            })
        }
        Construction::DftGrid => build_dft_codebook(antennas, CODEBOOK_SIZE),
    }
}

/// `size` DFT beams `e_k[n] = e^{j 2 pi k n / size} / sqrt(N)`.
pub fn build_dft_codebook(antennas: usize, size: usize) -> Result<Codebook> {
    if antennas < 2 {
        return Err(Error::Codebook(format!("dft_grid needs at least 2 antennas, got {antennas}")));
    }
    if size == 0 {
        return Err(Error::Codebook("empty dft_grid".into()));
    }
    let amp = 1.0 / (antennas as f64).sqrt();
    let entries = (0..size)
        .map(|k| {
            CVec::from_fn(antennas, |n, _| {
                Complex64::from_polar(amp, TAU * (k * n) as f64 / size as f64)
            })
        })
        .collect();
    Ok(Codebook {
        entries,
        construction: Construction::DftGrid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackReport {
    pub pmi: usize,
    /// Quantized SINR in dB, see [`quantize_cqi`].
    pub cqi: f64,
    pub quantization_chordal_dist: f64,
}

pub const CQI_MIN_DB: f64 = -6.0;
pub const CQI_MAX_DB: f64 = 24.0;
pub const CQI_LEVELS: usize = 16;

/// Rounds an SINR down to a 4-bit uniform grid over [-6, 24] dB.
pub fn quantize_cqi(sinr_db: f64) -> f64 {
    let step = (CQI_MAX_DB - CQI_MIN_DB) / (CQI_LEVELS - 1) as f64;
    if !(sinr_db > CQI_MIN_DB) {
        return CQI_MIN_DB;
    }
    let level = ((sinr_db - CQI_MIN_DB) / step + 1e-9).floor().min((CQI_LEVELS - 1) as f64);
    CQI_MIN_DB + level * step
}

/// `|entry^H h|` for unit `h`, for every entry.
fn correlations(h: &CVec, cb: &Codebook) -> Vec<f64> {
    cb.entries.iter().map(|e| e.dotc(h).norm()).collect()
}

/// Index of the entry closest in chordal distance to the direction of
/// `channel` (a column vector or a `1 x N` row, treated as its conjugate
/// transpose). Ties go to the lowest index. The CQI is the post-combining
/// gain along the chosen entry times `snr_scale`.
pub fn quantize_scaled(channel: &CMat, cb: &Codebook, snr_scale: f64) -> Result<FeedbackReport> {
    let h: CVec = if channel.nrows() == 1 {
        channel.row(0).adjoint()
    } else {
        channel.column(0).into_owned()
    };
    if h.len() != cb.dim() {
        return Err(Error::Codebook(format!(
            "channel has {} entries, codebook {}",
            h.len(),
            cb.dim()
        )));
    }
    let norm = h.norm();
    if norm == 0.0 {
        return Err(Error::ZeroInput);
    }
    let unit = h.unscale(norm);
    let corr = correlations(&unit, cb);
    let mut best = 0;
    for (i, &c) in corr.iter().enumerate() {
        if c > corr[best] {
            best = i;
        }
    }
    let c = corr[best].min(1.0);
    let gain = norm * norm * c * c * snr_scale;
    Ok(FeedbackReport {
        pmi: best,
        cqi: quantize_cqi(10.0 * gain.max(1e-300).log10()),
        quantization_chordal_dist: (1.0 - c * c).max(0.0).sqrt(),
    })
}

pub fn quantize(channel: &CMat, cb: &Codebook) -> Result<FeedbackReport> {
    quantize_scaled(channel, cb, 1.0)
}

/// Limited-feedback variant of Downlink IA or Eigenbeams: the BS zero-forces
/// on the codebook entries fed back by its MTs, and the MTs then compute
/// exact IRC receivers.
pub fn run_quantized_scheme(
    kind: IbcKind,
    drop: &ChannelDrop,
    cfg: &ScenarioConfig,
    cb: &Codebook,
) -> Result<SchemeOutput> {
    quantized_with_reports(kind, drop, cfg, cb).map(|(out, _)| out)
}

pub fn quantized_with_reports(
    kind: IbcKind,
    drop: &ChannelDrop,
    cfg: &ScenarioConfig,
    cb: &Codebook,
) -> Result<(SchemeOutput, Vec<FeedbackReport>)> {
    kind.check_shape(cfg)?;
    let miso = equivalent_channels(kind, drop)?;
    let oci = oci_covariance(cfg, drop);
    let floor = drop.oci_elem_power + drop.noise_var;
    let reports = miso
        .iter()
        .map(|e| {
            let share = cfg.power_budget_per_bs / drop.mts_of(drop.serving[e.mt]).count() as f64;
            quantize_scaled(&e.eq_channel, cb, share / floor)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<CMat> = reports.iter().map(|r| adjoint_row(&cb.entries[r.pmi])).collect();
    let out = run_with_feedback(kind, drop, cfg, &miso, &rows, &oci)?;
    Ok((out, reports))
}
