//! Figure presets against the checked-in table of caption parameters.

use std::collections::BTreeMap;

use cbsim::cli::{preset, FeedbackMode, FigureId};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
struct Caption {
    num_bs: usize,
    antennas_bs: usize,
    antennas_mt: usize,
    mts_per_bs: Vec<usize>,
    alpha: Vec<f64>,
    beta: f64,
    max_iterations: Option<usize>,
    schemes: Vec<String>,
    feedback: String,
}

fn captions() -> BTreeMap<String, Caption> {
    toml::from_str(include_str!("data/presets.toml")).unwrap()
}

#[test]
fn presets_match_captions() {
    let table = captions();
    assert_eq!(table.len(), 5);
    for (name, c) in &table {
        let spec = preset(name.parse::<FigureId>().unwrap());
        let s = &spec.scenario;
        assert_eq!(s.num_bs, c.num_bs, "{name}");
        assert_eq!(s.antennas_bs, c.antennas_bs, "{name}");
        assert_eq!(s.antennas_mt, c.antennas_mt, "{name}");
        assert_eq!(s.mts_per_bs, c.mts_per_bs, "{name}");
        assert_eq!(spec.alpha_sweep, c.alpha, "{name}");
        assert_eq!(s.beta, c.beta, "{name}");
        if let Some(it) = c.max_iterations {
            assert_eq!(s.max_iterations, it, "{name}");
        }
        assert_eq!(spec.schemes, c.schemes, "{name}");
        assert_eq!(spec.feedback_mode, c.feedback.parse::<FeedbackMode>().unwrap(), "{name}");
        assert_eq!(s.nakagami_m, 1.0, "{name}");
        spec.validate().unwrap();
    }
}

#[test]
fn presets_resolve_their_schemes() {
    for name in captions().keys() {
        let spec = preset(name.parse().unwrap());
        let schemes = spec.resolve_schemes().unwrap();
        if spec.is_theory() {
            assert!(schemes.is_empty());
        } else {
            assert_eq!(schemes.len(), spec.expanded_schemes().len(), "{name}");
        }
    }
}

#[test]
fn limited_feedback_preset_adds_quantized_runs() {
    let spec = preset(FigureId::Fig6);
    assert_eq!(
        spec.expanded_schemes(),
        ["downlink_ia", "downlink_ia@lte_dual_stage", "eigenbeams", "eigenbeams@lte_dual_stage"]
    );
}
