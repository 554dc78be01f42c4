//! Closed-form per-MT rate bounds for a two-BS cluster with one
//! single-antenna MT per BS.

use crate::model::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyScenario {
    pub snr_linear: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ToyScenario {
    pub fn new(snr_db: f64, alpha: f64, beta: f64) -> Self {
        Self {
            snr_linear: db_to_linear(snr_db),
            alpha,
            beta,
        }
    }

    fn oci_plus_noise(&self) -> f64 {
        self.beta * self.snr_linear + 1.0
    }
}

/// Every BS transmits on every resource, ICI treated as noise.
pub fn rate_full_reuse(s: &ToyScenario) -> f64 {
    (1.0 + s.snr_linear / (s.alpha * s.snr_linear + s.oci_plus_noise())).log2()
}

/// Resources split between the two BSs: no ICI, half the prelog.
pub fn rate_orthogonal(s: &ToyScenario) -> f64 {
    0.5 * (1.0 + s.snr_linear / s.oci_plus_noise()).log2()
}

/// ICI nulled by alignment, full prelog.
pub fn rate_ia(s: &ToyScenario) -> f64 {
    (1.0 + s.snr_linear / s.oci_plus_noise()).log2()
}

/// Ideal joint transmission: the interfering BS's power adds coherently.
pub fn rate_jt(s: &ToyScenario) -> f64 {
    (1.0 + (1.0 + s.alpha) * s.snr_linear / s.oci_plus_noise()).log2()
}

/// Percentage gain of `rate` over `baseline`.
pub fn gain_percent(rate: f64, baseline: f64) -> f64 {
    (rate / baseline - 1.0) * 100.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRow {
    pub snr_db: f64,
    pub full_reuse: f64,
    pub orthogonal: f64,
    pub ia: f64,
    pub jt: f64,
    pub full_reuse_gain: f64,
    pub ia_gain: f64,
    pub jt_gain: f64,
}

/// One row per SNR point; gains are relative to orthogonal sharing.
pub fn gain_table(snr_db_grid: &[f64], alpha: f64, beta: f64) -> Vec<GainRow> {
    snr_db_grid
        .iter()
        .map(|&snr_db| {
            let s = ToyScenario::new(snr_db, alpha, beta);
            let (fr, orth, ia, jt) = (rate_full_reuse(&s), rate_orthogonal(&s), rate_ia(&s), rate_jt(&s));
            GainRow {
                snr_db,
                full_reuse: fr,
                orthogonal: orth,
                ia,
                jt,
                full_reuse_gain: gain_percent(fr, orth),
                ia_gain: gain_percent(ia, orth),
                jt_gain: gain_percent(jt, orth),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SNR_15DB: f64 = 31.6228;

    fn toy(snr_linear: f64, alpha: f64, beta: f64) -> ToyScenario {
        ToyScenario { snr_linear, alpha, beta }
    }

    #[test]
    fn full_reuse_values() {
        assert!(rate_full_reuse(&toy(1e-6, 1.0, 0.25)) < 2e-6);
        assert!((rate_full_reuse(&toy(1.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((rate_full_reuse(&toy(SNR_15DB, 1.0, 0.25)) - 0.8321).abs() < 5e-5);
    }

    #[test]
    fn orthogonal_values() {
        assert!((rate_orthogonal(&toy(3.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((rate_orthogonal(&toy(SNR_15DB, 0.5, 0.25)) - 1.0931).abs() < 5e-5);
        assert_eq!(rate_orthogonal(&toy(7.0, 0.0, 0.3)), rate_orthogonal(&toy(7.0, 1.0, 0.3)));
    }

    #[test]
    fn ia_values() {
        let s = toy(SNR_15DB, 1.0, 0.25);
        assert!((rate_ia(&s) - 2.0 * rate_orthogonal(&s)).abs() < 1e-12);
        // the quoted 2.1862 is twice the rounded orthogonal rate; exact value 2.18614
        assert!((rate_ia(&s) - 2.1862).abs() < 1e-4);
        assert!((rate_ia(&toy(1e6, 1.0, 1.0)) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn jt_values() {
        let s = toy(SNR_15DB, 1.0, 0.25);
        assert!((rate_jt(&s) - 3.0182).abs() < 5e-5);
        assert_eq!(rate_jt(&toy(9.0, 0.0, 0.1)), rate_ia(&toy(9.0, 0.0, 0.1)));
        let g = gain_percent(rate_jt(&s), rate_orthogonal(&s));
        assert!((g - 176.0).abs() < 1.0, "{g}");
    }

    #[test]
    fn table_gains() {
        let rows = gain_table(&[0.0, 15.0, 30.0], 1.0, 0.25);
        let r15 = rows[1];
        assert!((r15.ia_gain - 100.0).abs() < 1e-9);
        let low = gain_table(&[15.0], 0.25, 0.25)[0];
        assert!((low.jt_gain - 124.0).abs() < 0.5, "{}", low.jt_gain);
        assert!(rows.iter().all(|r| r.ia_gain >= 0.0));
    }

    #[test]
    fn interference_limited_ceilings() {
        let s = toy(1e8, 0.5, 0.25);
        assert!((rate_ia(&s) - (1.0 + 1.0 / 0.25f64).log2()).abs() < 1e-3);
        assert!((rate_full_reuse(&s) - (1.0 + 1.0 / 0.75f64).log2()).abs() < 1e-3);
    }
}
