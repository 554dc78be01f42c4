//! Registry of scheme identifiers used by the Monte Carlo engine and the CLI.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::feedback::{build_codebook, run_quantized_scheme, Codebook, Construction};
use crate::ibc::{downlink_ia, eigenbeams, wmmse_ibc_reference, wmmse_ibc_scenario, IbcKind};
use crate::ifc::{baseline_full_reuse_su, baseline_orthogonal_su, ia, ia_stream_count, max_sinr, reconfigurable, wmmse};
use crate::model::{ChannelDrop, ScenarioConfig};
use crate::numerics::CMat;
use crate::strategy::SchemeOutput;

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Ia,
    MaxSinr,
    Wmmse,
    Reconfigurable,
    FullReuseSu,
    OrthogonalSu,
    DownlinkIa,
    Eigenbeams,
    WmmseIbc,
    /// Downlink IA or Eigenbeams driven by PMI feedback.
    Quantized { kind: IbcKind, codebook: Arc<Codebook> },
}

pub const IFC_SCHEMES: [&str; 6] = ["ia", "max_sinr", "wmmse", "reconfigurable", "full_reuse_su", "orthogonal_su"];
pub const IBC_SCHEMES: [&str; 3] = ["downlink_ia", "eigenbeams", "wmmse_ibc"];

impl Scheme {
    /// Quantized variant of an IBC scheme.
    pub fn quantized(kind: IbcKind, codebook: Codebook) -> Self {
        Scheme::Quantized {
            kind,
            codebook: Arc::new(codebook),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Scheme::Ia => "ia".into(),
            Scheme::MaxSinr => "max_sinr".into(),
            Scheme::Wmmse => "wmmse".into(),
            Scheme::Reconfigurable => "reconfigurable".into(),
            Scheme::FullReuseSu => "full_reuse_su".into(),
            Scheme::OrthogonalSu => "orthogonal_su".into(),
            Scheme::DownlinkIa => "downlink_ia".into(),
            Scheme::Eigenbeams => "eigenbeams".into(),
            Scheme::WmmseIbc => "wmmse_ibc".into(),
            Scheme::Quantized { kind, codebook } => {
                format!("{}@{}", kind.name(), codebook.construction.name())
            }
        }
    }

    /// The broadcast-channel family, if any.
    pub fn ibc_kind(&self) -> Option<IbcKind> {
        match self {
            Scheme::DownlinkIa => Some(IbcKind::DownlinkIa),
            Scheme::Eigenbeams => Some(IbcKind::Eigenbeams),
            Scheme::Quantized { kind, .. } => Some(*kind),
            _ => None,
        }
    }

    /// Resource share of the scheme: `1 / B` for orthogonal transmission.
    pub fn prelog(&self, num_bs: usize) -> f64 {
        match self {
            Scheme::OrthogonalSu => 1.0 / num_bs.max(1) as f64,
            _ => 1.0,
        }
    }

    /// Whether the rate is evaluated without intra-cluster interference.
    pub fn excludes_ici(&self) -> bool {
        matches!(self, Scheme::OrthogonalSu)
    }

    /// The scenario this scheme is evaluated on, derived from `cfg`.
    ///
    /// Interference-channel schemes need one MT per BS. Broadcast schemes
    /// set the number of MTs per BS their construction serves. Incompatible
    /// shapes are rejected here, before any drop is simulated.
    pub fn scenario_for(&self, cfg: &ScenarioConfig) -> Result<ScenarioConfig> {
        let incompatible = |reason: String| Error::Incompatible {
            scheme: self.name(),
            reason,
        };
        let adapted = if let Some(kind) = self.ibc_kind() {
            let adapted = ScenarioConfig {
                mts_per_bs: vec![kind.mts_per_bs(cfg.antennas_bs); cfg.num_bs],
                ..cfg.clone()
            };
            kind.check_shape(&adapted)
                .map_err(|e| incompatible(e.to_string()))?;
            if let Scheme::Quantized { codebook, .. } = self {
                if codebook.dim() != cfg.antennas_bs {
                    return Err(incompatible(format!(
                        "codebook dimension {} does not match {} BS antennas",
                        codebook.dim(),
                        cfg.antennas_bs
                    )));
                }
            }
            adapted
        } else if matches!(self, Scheme::WmmseIbc) {
            if cfg.antennas_bs < 2 {
                return Err(incompatible("needs at least 2 BS antennas".into()));
            }
            wmmse_ibc_scenario(cfg)
        } else {
            if cfg.mts_per_bs.iter().any(|&k| k != 1) {
                return Err(incompatible("requires exactly one MT per BS".into()));
            }
            if matches!(self, Scheme::Ia) {
                ia_stream_count(cfg).map_err(|e| incompatible(e.to_string()))?;
            }
            cfg.clone()
        };
        adapted.validate()?;
        Ok(adapted)
    }

    pub fn run(&self, drop: &ChannelDrop, cfg: &ScenarioConfig, oci_cov: &CMat) -> Result<SchemeOutput> {
        match self {
            Scheme::Ia => ia(drop, cfg),
            Scheme::MaxSinr => max_sinr(drop, cfg),
            Scheme::Wmmse => wmmse(drop, cfg, oci_cov),
            Scheme::Reconfigurable => reconfigurable(drop, cfg, oci_cov),
            Scheme::FullReuseSu => baseline_full_reuse_su(drop, cfg, oci_cov),
            Scheme::OrthogonalSu => baseline_orthogonal_su(drop, cfg, oci_cov),
            Scheme::DownlinkIa => downlink_ia(drop, cfg),
            Scheme::Eigenbeams => eigenbeams(drop, cfg),
            Scheme::WmmseIbc => wmmse_ibc_reference(drop, cfg, oci_cov),
            Scheme::Quantized { kind, codebook } => run_quantized_scheme(*kind, drop, cfg, codebook),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses `id` or `id@construction`; the codebook is built for 4 antennas.
/// Use [`parse_scheme`] when the antenna count differs.
impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_scheme(s, 4)
    }
}

pub fn parse_scheme(id: &str, antennas_bs: usize) -> Result<Scheme> {
    if let Some((base, construction)) = id.split_once('@') {
        let kind = match base {
            "downlink_ia" => IbcKind::DownlinkIa,
            "eigenbeams" => IbcKind::Eigenbeams,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "scheme `{other}` has no quantized variant"
                )))
            }
        };
        let construction: Construction = construction.parse()?;
        return Ok(Scheme::quantized(kind, build_codebook(antennas_bs, construction)?));
    }
    Ok(match id {
        "ia" => Scheme::Ia,
        "max_sinr" => Scheme::MaxSinr,
        "wmmse" => Scheme::Wmmse,
        "reconfigurable" => Scheme::Reconfigurable,
        "full_reuse_su" => Scheme::FullReuseSu,
        "orthogonal_su" => Scheme::OrthogonalSu,
        "downlink_ia" => Scheme::DownlinkIa,
        "eigenbeams" => Scheme::Eigenbeams,
        "wmmse_ibc" => Scheme::WmmseIbc,
        other => return Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
    })
}
