//! Invariants checked on randomly generated inputs.

use cbsim::eval::{achievable_rate, mmse_receivers};
use cbsim::feedback::{build_codebook, build_dft_codebook, quantize, Codebook, Construction};
use cbsim::model::{generate_drop, oci_covariance, ScenarioConfig};
use cbsim::numerics::{hermitian_eigen, svd_sorted, waterfill, CMat, CVec};
use cbsim::theory::{rate_full_reuse, rate_ia, rate_jt, rate_orthogonal, ToyScenario};
use cbsim::Scheme;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{brute_force_pmi, irc_beats_random, random_channel, random_hpd, wmmse_trace_monotone};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn toy(snr_linear: f64, alpha: f64, beta: f64) -> ToyScenario {
    ToyScenario { snr_linear, alpha, beta }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_forms_order_and_identities(snr in 0.0f64..1e4, alpha in 0.0f64..=1.0, beta in 0.0f64..=1.0) {
        let s = toy(snr, alpha, beta);
        prop_assert!((rate_ia(&s) - 2.0 * rate_orthogonal(&s)).abs() <= 1e-12 * rate_ia(&s).max(1.0));
        prop_assert!(rate_jt(&s) >= rate_ia(&s) - 1e-12);
        prop_assert!(rate_ia(&s) >= rate_orthogonal(&s));
        prop_assert!((rate_jt(&toy(snr, 0.0, beta)) - rate_ia(&toy(snr, 0.0, beta))).abs() <= 1e-12);
    }

    #[test]
    fn closed_forms_monotone(snr in 0.0f64..1e4, ds in 0.0f64..1e3, alpha in 0.0f64..=1.0, beta in 0.0f64..0.9, db in 0.0f64..0.1) {
        let rates: [fn(&ToyScenario) -> f64; 4] = [rate_full_reuse, rate_orthogonal, rate_ia, rate_jt];
        for f in rates {
            prop_assert!(f(&toy(snr + ds, alpha, beta)) >= f(&toy(snr, alpha, beta)) - 1e-12);
            prop_assert!(f(&toy(snr, alpha, beta + db)) <= f(&toy(snr, alpha, beta)) + 1e-12);
        }
    }

    #[test]
    fn waterfill_satisfies_kkt(gains in prop::collection::vec(1e-3f64..1e3, 1..8), budget in 1e-3f64..1e2) {
        let wf = waterfill(&gains, budget).unwrap();
        let total: f64 = wf.powers.iter().sum();
        prop_assert!((total - budget).abs() <= 1e-9 * budget);
        for (&g, &p) in gains.iter().zip(&wf.powers) {
            prop_assert!(p >= 0.0);
            if p > 0.0 {
                prop_assert!((p + 1.0 / g - wf.water_level).abs() <= 1e-9 * wf.water_level);
            } else {
                prop_assert!(1.0 / g >= wf.water_level * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn waterfill_beats_equal_power(gains in prop::collection::vec(1e-3f64..1e3, 1..8), budget in 1e-3f64..1e2) {
        let rate = |p: &[f64]| gains.iter().zip(p).map(|(g, p)| (1.0 + g * p).log2()).sum::<f64>();
        let wf = waterfill(&gains, budget).unwrap();
        let equal = vec![budget / gains.len() as f64; gains.len()];
        prop_assert!(rate(&wf.powers) >= rate(&equal) - 1e-12);
    }

    #[test]
    fn hermitian_eigen_reconstructs(seed: u64, n in 1usize..6) {
        let a = random_hpd(&mut rng(seed), n);
        let (values, vectors) = hermitian_eigen(&a);
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]) || values.windows(2).all(|w| w[0] >= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(n, values.iter().map(|&v| Complex64::new(v, 0.0))));
        let back = &vectors * d * vectors.adjoint();
        prop_assert!((back - &a).norm() <= 1e-9 * a.norm());
    }

    #[test]
    fn singular_values_sorted_and_reconstruct(seed: u64, m in 1usize..5, n in 1usize..5) {
        let a = random_channel(&mut rng(seed), m, n);
        let (sigma, u, v) = svd_sorted(&a);
        prop_assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
        let s = CMat::from_diagonal(&CVec::from_iterator(sigma.len(), sigma.iter().map(|&x| Complex64::new(x, 0.0))));
        prop_assert!((&u * s * v.adjoint() - &a).norm() <= 1e-9 * a.norm().max(1.0));
    }

    #[test]
    fn irc_maximizes_sinr(seed: u64) {
        prop_assert!(irc_beats_random(&mut rng(seed), 4, 25));
    }

    #[test]
    fn lte_quantizer_is_exhaustive_argmax(seed: u64) {
        let cb = build_codebook(4, Construction::LteDualStage).unwrap();
        let h = random_channel(&mut rng(seed), 4, 1);
        prop_assert_eq!(quantize(&h, &cb).unwrap().pmi, brute_force_pmi(&h, &cb));
    }

    #[test]
    fn chordal_distance_matches_definition(seed: u64, size in 2usize..300) {
        let cb = build_dft_codebook(4, size).unwrap();
        let h = random_channel(&mut rng(seed), 4, 1);
        let report = quantize(&h, &cb).unwrap();
        let hv: CVec = h.column(0).into_owned();
        let c = cb.entries[report.pmi].dotc(&hv).norm() / hv.norm();
        let expected = (1.0 - c * c).max(0.0).sqrt();
        prop_assert!((report.quantization_chordal_dist - expected).abs() < 1e-12);
        // no entry is strictly closer
        for e in &cb.entries {
            let ce = e.dotc(&hv).norm() / hv.norm();
            prop_assert!((1.0 - ce * ce).max(0.0).sqrt() >= report.quantization_chordal_dist - 1e-12);
        }
    }

    #[test]
    fn quantizer_ignores_channel_scale_and_phase(seed: u64, scale in 1e-3f64..1e3, phase in 0.0f64..std::f64::consts::TAU) {
        let cb = build_codebook(4, Construction::LteDualStage).unwrap();
        let h = random_channel(&mut rng(seed), 4, 1);
        let g = &h * Complex64::from_polar(scale, phase);
        let (a, b) = (quantize(&h, &cb).unwrap(), quantize(&g, &cb).unwrap());
        prop_assert_eq!(a.pmi, b.pmi);
        prop_assert!((a.quantization_chordal_dist - b.quantization_chordal_dist).abs() < 1e-12);
    }

    #[test]
    fn codebook_text_round_trips(seed: u64, dim in 1usize..6, size in 1usize..20) {
        let mut r = rng(seed);
        let entries = (0..size).map(|_| random_channel(&mut r, dim, 1).column(0).into_owned()).collect();
        let cb = Codebook::from_entries(entries, Construction::DftGrid).unwrap();
        let back = Codebook::from_text(&cb.to_text(), Construction::DftGrid).unwrap();
        prop_assert_eq!(back.entries, cb.entries);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wmmse_objective_is_monotone(seed: u64) {
        prop_assert!(wmmse_trace_monotone(&mut rng(seed), 2));
    }

    #[test]
    fn interference_channel_schemes_respect_budgets(
        seed: u64,
        num_bs in 2usize..4,
        antennas_bs in 2usize..5,
        antennas_mt in 1usize..4,
        alpha in 0.0f64..=1.0,
        beta in 0.0f64..=1.0,
        snr in -5.0f64..30.0,
    ) {
        let mut base = ScenarioConfig::interference_channel(num_bs, antennas_bs, antennas_mt).with_interference(alpha, beta);
        base.rng_seed = seed;
        for s in [Scheme::Ia, Scheme::MaxSinr, Scheme::Wmmse, Scheme::Reconfigurable, Scheme::FullReuseSu, Scheme::OrthogonalSu] {
            let Ok(cfg) = s.scenario_for(&base) else { continue };
            let d = generate_drop(&cfg, 0, snr).unwrap();
            let oci = oci_covariance(&cfg, &d);
            let out = match s.run(&d, &cfg, &oci) {
                Ok(out) => out,
                Err(cbsim::Error::Infeasible(_)) => continue,
                Err(e) => return Err(TestCaseError::fail(format!("{s}: {e}"))),
            };
            prop_assert!(out.tx.satisfies_constraints(&d.serving, num_bs, cfg.power_budget_per_bs), "{}", s);
            prop_assert!(out.rx.rows_unit_norm(), "{}", s);
            for u in 0..d.num_mts() {
                let r = achievable_rate(u, &d, &out.tx, &oci).unwrap();
                prop_assert!(r.is_finite() && r >= 0.0, "{}: {}", s, r);
            }
        }
    }

    #[test]
    fn broadcast_schemes_respect_budgets(seed: u64, alpha in 0.0f64..=1.0, beta in 0.0f64..=1.0, snr in -5.0f64..30.0) {
        let mut base = ScenarioConfig::interference_channel(2, 4, 4).with_interference(alpha, beta);
        base.rng_seed = seed;
        let lte = build_codebook(4, Construction::LteDualStage).unwrap();
        for s in [
            Scheme::DownlinkIa,
            Scheme::Eigenbeams,
            Scheme::WmmseIbc,
            Scheme::quantized(cbsim::ibc::IbcKind::DownlinkIa, lte.clone()),
        ] {
            let cfg = s.scenario_for(&base).unwrap();
            let d = generate_drop(&cfg, 0, snr).unwrap();
            let oci = oci_covariance(&cfg, &d);
            match s.run(&d, &cfg, &oci) {
                Ok(out) => {
                    prop_assert!(out.tx.satisfies_constraints(&d.serving, 2, cfg.power_budget_per_bs), "{}", s);
                    // receivers are the IRC ones for the chosen transmit strategy
                    let irc = mmse_receivers(&d, &out.tx, &oci).unwrap();
                    for (a, b) in irc.combiners.iter().zip(&out.rx.combiners) {
                        prop_assert!((a - b).norm() < 1e-9, "{}", s);
                    }
                }
                Err(cbsim::Error::RankDeficient { .. }) => {}
                Err(e) => prop_assert!(false, "{}: {}", s, e),
            }
        }
    }
}
