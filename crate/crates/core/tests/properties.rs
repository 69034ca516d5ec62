use proptest::prelude::*;
use twinbeam::analysis::{gamma_profile, Provenance, ShotSeries};
use twinbeam::oracle::twin_moments;
use twinbeam::source::negative_binomial_pmf;
use twinbeam::{detect_pmf, Arms, CollectionModel, DetectedShot, DetectorArm, SourceModel};

fn moments(p: &[f64]) -> (f64, f64) {
    let m1 = p.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    let m2 = p.iter().enumerate().map(|(n, w)| (n * n) as f64 * w).sum();
    (m1, m2)
}

proptest! {
    #[test]
    fn detect_pmf_transforms_first_two_moments(
        modes in 0.5f64..30.0,
        nbar in 0.0f64..3.0,
        eta in 0.0f64..=1.0,
    ) {
        let photons = negative_binomial_pmf(modes, nbar, 400);
        let detected = detect_pmf(&photons, eta).unwrap();
        let (n1, n2) = moments(&photons);
        let (m1, m2) = moments(&detected);
        let mass: f64 = photons.iter().sum();
        prop_assert!((detected.iter().sum::<f64>() - mass).abs() < 1e-12);
        prop_assert!((m1 - eta * n1).abs() <= 1e-9 * n1.max(1.0));
        let expected2 = eta * eta * n2 + eta * (1.0 - eta) * n1;
        prop_assert!((m2 - expected2).abs() <= 1e-9 * expected2.max(1.0));
    }

    #[test]
    fn uncorrected_gamma_is_a_correlation(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..200),
    ) {
        let series = ShotSeries::new(
            pairs.iter().map(|&(m_s, m_i)| DetectedShot { m_s, m_i }).collect(),
            Provenance::Measured,
        );
        if let Ok(g) = gamma_profile(&series, 0, false) {
            prop_assert!(g[0].abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn moment_set_is_consistent(
        mu in 1u32..100,
        nbar in 0.01f64..100.0,
        eta_s in 0.01f64..=1.0,
        eta_i in 0.01f64..=1.0,
        t_s in 0.0f64..=1.0,
        t_i in 0.0f64..=1.0,
        bg in 0.0f64..50.0,
    ) {
        let c = CollectionModel::matched().with_transmission(t_s, t_i).with_background(bg, bg);
        let arms = Arms::new(DetectorArm::ideal(eta_s), DetectorArm::ideal(eta_i));
        let m = twin_moments(&SourceModel::twin(mu, nbar).unwrap(), &c, &arms).unwrap();
        prop_assert!(m.var_m.iter().all(|&v| v >= 0.0));
        prop_assert!(m.cov_m * m.cov_m <= m.var_m[0] * m.var_m[1] * (1.0 + 1e-12));
        // Closed-form R in terms of the combined efficiencies.
        let (a_s, a_i) = (eta_s * t_s, eta_i * t_i);
        let n = f64::from(mu) * nbar;
        let var_n = n * (1.0 + nbar);
        let num = (a_s - a_i).powi(2) * var_n + a_s * (1.0 - a_s) * n + a_i * (1.0 - a_i) * n
            + eta_s * bg + eta_i * bg;
        let den = a_s * n + a_i * n + eta_s * bg + eta_i * bg;
        if den > 0.0 {
            prop_assert!((m.r - num / den).abs() <= 1e-9 * (num / den).max(1.0));
        }
    }
}
