//! Experiment specifications: figure presets, TOML config files and
//! command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::feedback::Construction;
use crate::model::ScenarioConfig;
use crate::scheme::{parse_scheme, Scheme};

use super::CliError;

/// Figures with canned scenario presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [FigureId::Fig2, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }
}

impl FromStr for FigureId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown preset `{s}` (expected fig2..fig6)")))
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the BSs learn the equivalent channels of broadcast schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    Ideal,
    /// Adds a codebook-quantized run next to every ideal broadcast scheme.
    Quantized(Construction),
}

impl FromStr for FeedbackMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s == "ideal" {
            return Ok(FeedbackMode::Ideal);
        }
        s.parse::<Construction>()
            .map(FeedbackMode::Quantized)
            .map_err(|_| CliError::Config(format!("unknown feedback mode `{s}` (ideal, lte_dual_stage, dft_grid)")))
    }
}

/// Curves of the closed-form two-cell example.
pub const THEORY_CURVES: [&str; 4] = ["full_reuse", "orthogonal", "ia", "jt"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Base scenario; `alpha` is replaced by each entry of `alpha_sweep`.
    pub scenario: ScenarioConfig,
    pub alpha_sweep: Vec<f64>,
    pub schemes: Vec<String>,
    pub feedback_mode: FeedbackMode,
    pub output_path: Option<PathBuf>,
    pub figure_id: Option<FigureId>,
}

pub const DEFAULT_DROPS: usize = 1000;

pub fn default_snr_grid() -> Vec<f64> {
    (0..=6).map(|k| 5.0 * k as f64).collect()
}

fn strings(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

/// Scenario and scheme list of a figure, field for field from its caption.
pub fn preset(figure: FigureId) -> ExperimentSpec {
    let base = |b, n, m, alpha, beta| ScenarioConfig {
        snr_db_grid: default_snr_grid(),
        num_drops: DEFAULT_DROPS,
        ..ScenarioConfig::interference_channel(b, n, m).with_interference(alpha, beta)
    };
    let ifc = strings(&["ia", "max_sinr", "wmmse", "reconfigurable", "full_reuse_su", "orthogonal_su"]);
    let (scenario, alpha_sweep, schemes, feedback_mode) = match figure {
        FigureId::Fig2 => (base(2, 2, 1, 1.0, 0.25), vec![1.0, 0.25], strings(&THEORY_CURVES), FeedbackMode::Ideal),
        FigureId::Fig3 => (base(3, 4, 2, 1.0, 0.0), vec![1.0], ifc, FeedbackMode::Ideal),
        FigureId::Fig4 => (base(3, 4, 2, 0.25, 0.25), vec![0.25], ifc, FeedbackMode::Ideal),
        FigureId::Fig5 => {
            let mut s = base(2, 4, 4, 1.0, 0.25);
            s.mts_per_bs = vec![3, 3];
            (s, vec![1.0, 0.25], strings(&["downlink_ia", "eigenbeams", "wmmse_ibc"]), FeedbackMode::Ideal)
        }
        FigureId::Fig6 => {
            let mut s = base(2, 4, 4, 1.0, 0.25);
            s.mts_per_bs = vec![3, 3];
            (
                s,
                vec![1.0],
                strings(&["downlink_ia", "eigenbeams"]),
                FeedbackMode::Quantized(Construction::LteDualStage),
            )
        }
    };
    ExperimentSpec {
        scenario,
        alpha_sweep,
        schemes,
        feedback_mode,
        output_path: None,
        figure_id: Some(figure),
    }
}

impl ExperimentSpec {
    pub fn is_theory(&self) -> bool {
        self.figure_id == Some(FigureId::Fig2)
    }

    /// Scheme list with quantized counterparts per the feedback mode.
    pub fn expanded_schemes(&self) -> Vec<String> {
        let mut out = Vec::new();
        for id in &self.schemes {
            out.push(id.clone());
            if let FeedbackMode::Quantized(c) = self.feedback_mode {
                if matches!(id.as_str(), "downlink_ia" | "eigenbeams") {
                    out.push(format!("{id}@{}", c.name()));
                }
            }
        }
        out.dedup();
        out
    }

    /// Parsed schemes, validated against the scenario shapes.
    pub fn resolve_schemes(&self) -> Result<Vec<Scheme>, CliError> {
        if self.is_theory() {
            return Ok(Vec::new());
        }
        self.expanded_schemes()
            .iter()
            .map(|id| {
                let scheme = parse_scheme(id, self.scenario.antennas_bs).map_err(|e| CliError::Config(e.to_string()))?;
                scheme
                    .scenario_for(&self.scenario)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                Ok(scheme)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.alpha_sweep.is_empty() {
            return Err(CliError::Config("alpha list is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(CliError::Config("scheme list is empty".into()));
        }
        if self.scenario.snr_db_grid.is_empty() {
            return Err(CliError::Config("snr grid is empty".into()));
        }
        for &alpha in &self.alpha_sweep {
            ScenarioConfig {
                alpha,
                ..self.scenario.clone()
            }
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.is_theory() {
            if let Some(bad) = self.schemes.iter().find(|s| !THEORY_CURVES.contains(&s.as_str())) {
                return Err(CliError::Config(format!(
                    "fig2 curves are {}; got `{bad}`",
                    THEORY_CURVES.join(", ")
                )));
            }
            return Ok(());
        }
        self.resolve_schemes().map(|_| ())
    }
}

/// `[scenario]` table of a config file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioOverrides {
    num_bs: Option<usize>,
    antennas_bs: Option<usize>,
    antennas_mt: Option<usize>,
    mts_per_bs: Option<Vec<usize>>,
    beta: Option<f64>,
    snr_db_grid: Option<Vec<f64>>,
    nakagami_m: Option<f64>,
    num_drops: Option<usize>,
    rng_seed: Option<u64>,
    max_iterations: Option<usize>,
    power_budget_per_bs: Option<f64>,
    streams_per_mt: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<FigureId>,
    alpha: Option<Vec<f64>>,
    schemes: Option<Vec<String>>,
    feedback: Option<String>,
    out: Option<PathBuf>,
    #[serde(default)]
    scenario: ScenarioOverrides,
}

/// Builds a spec from TOML text. Without `preset`, the scenario shape
/// (`num_bs`, `antennas_bs`, `antennas_mt`, `beta`), `alpha` and `schemes`
/// are required.
pub fn parse_config(text: &str, origin: &Path) -> Result<ExperimentSpec, CliError> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))?;
    let missing = |field: &str| CliError::Config(format!("{}: missing `{field}` (no preset given)", origin.display()));

    let mut spec = match file.preset {
        Some(figure) => preset(figure),
        None => {
            let o = &file.scenario;
            let num_bs = o.num_bs.ok_or_else(|| missing("scenario.num_bs"))?;
            let n = o.antennas_bs.ok_or_else(|| missing("scenario.antennas_bs"))?;
            let m = o.antennas_mt.ok_or_else(|| missing("scenario.antennas_mt"))?;
            let beta = o.beta.ok_or_else(|| missing("scenario.beta"))?;
            let alpha = file.alpha.clone().filter(|a| !a.is_empty()).ok_or_else(|| missing("alpha"))?;
            if file.schemes.is_none() {
                return Err(missing("schemes"));
            }
            ExperimentSpec {
                scenario: ScenarioConfig {
                    snr_db_grid: default_snr_grid(),
                    num_drops: DEFAULT_DROPS,
                    ..ScenarioConfig::interference_channel(num_bs, n, m).with_interference(alpha[0], beta)
                },
                alpha_sweep: alpha,
                schemes: Vec::new(),
                feedback_mode: FeedbackMode::Ideal,
                output_path: None,
                figure_id: None,
            }
        }
    };

    let o = file.scenario;
    let s = &mut spec.scenario;
    if let Some(v) = o.num_bs {
        s.num_bs = v;
        if o.mts_per_bs.is_none() {
            s.mts_per_bs = vec![s.mts_per_bs.first().copied().unwrap_or(1); v];
        }
    }
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = o.$field { s.$field = v; })*};
    }
    set!(antennas_bs, antennas_mt, mts_per_bs, beta, snr_db_grid, nakagami_m, num_drops, rng_seed, max_iterations, power_budget_per_bs);
    if o.streams_per_mt.is_some() {
        s.streams_per_mt = o.streams_per_mt;
    }
    if let Some(a) = file.alpha {
        spec.alpha_sweep = a;
    }
    if let Some(ids) = file.schemes {
        spec.schemes = ids;
    }
    if let Some(f) = file.feedback {
        spec.feedback_mode = f.parse()?;
    }
    if file.out.is_some() {
        spec.output_path = file.out;
    }
    Ok(spec)
}

/// Command-line overrides; every field that is `Some` wins.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub snr: Option<Vec<f64>>,
    pub drops: Option<usize>,
    pub seed: Option<u64>,
    pub schemes: Option<Vec<String>>,
    pub feedback: Option<FeedbackMode>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(self, spec: &mut ExperimentSpec) {
        if let Some(a) = self.alpha {
            spec.alpha_sweep = a;
        }
        if let Some(b) = self.beta {
            spec.scenario.beta = b;
        }
        if let Some(g) = self.snr {
            spec.scenario.snr_db_grid = g;
        }
        if let Some(d) = self.drops {
            spec.scenario.num_drops = d;
        }
        if let Some(s) = self.seed {
            spec.scenario.rng_seed = s;
        }
        if let Some(ids) = self.schemes {
            spec.schemes = ids;
        }
        if let Some(f) = self.feedback {
            spec.feedback_mode = f;
        }
        if self.out.is_some() {
            spec.output_path = self.out;
        }
    }
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("bad range `{s}`"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| start + k as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(format!("bad grid `{s}` (use a,b,c or start:stop:step)")),
    }
}
