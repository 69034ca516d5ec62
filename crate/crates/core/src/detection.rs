//! Detector model: Bernoulli thinning at the quantum efficiency, additive
//! Gaussian electronic noise and the voltage-per-electron calibration.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::analysis::{Provenance, ShotSeries};
use crate::error::{ensure_nonneg, ensure_unit, Error, Result};
use crate::rng::{substream, Exec, DOMAIN_DARK};
use crate::source::PhotonShot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorArm {
    /// Overall detection efficiency.
    pub eta: f64,
    /// r.m.s. electronic noise in electrons.
    #[serde(default)]
    pub dark_sigma: f64,
    /// Residual offset in electrons.
    #[serde(default)]
    pub dark_mean: f64,
    #[serde(default = "default_gain", rename = "gain_uv_per_electron")]
    pub gain_uv_per_electron: f64,
}

fn default_gain() -> f64 {
    1.0
}

impl DetectorArm {
    /// Noise-free detector with unit gain.
    pub fn ideal(eta: f64) -> Self {
        DetectorArm {
            eta,
            dark_sigma: 0.0,
            dark_mean: 0.0,
            gain_uv_per_electron: 1.0,
        }
    }

    pub fn with_noise(mut self, dark_sigma: f64) -> Self {
        self.dark_sigma = dark_sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_unit("eta", self.eta)?;
        ensure_nonneg("dark_sigma", self.dark_sigma)?;
        if !self.dark_mean.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dark_mean",
                value: self.dark_mean,
                reason: "must be finite",
            });
        }
        if !(self.gain_uv_per_electron > 0.0 && self.gain_uv_per_electron.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gain_uv_per_electron",
                value: self.gain_uv_per_electron,
                reason: "must be positive",
            });
        }
        Ok(())
    }

    pub fn to_microvolts(&self, electrons: f64) -> f64 {
        electrons * self.gain_uv_per_electron
    }

    pub fn to_electrons(&self, microvolts: f64) -> f64 {
        microvolts / self.gain_uv_per_electron
    }

    /// One sample of the electronic noise.
    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.dark_sigma == 0.0 {
            return self.dark_mean;
        }
        Normal::new(self.dark_mean, self.dark_sigma)
            .expect("validated sigma")
            .sample(rng)
    }
}

/// Signal and idler detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arms {
    pub signal: DetectorArm,
    pub idler: DetectorArm,
}

impl Arms {
    pub fn new(signal: DetectorArm, idler: DetectorArm) -> Self {
        Arms { signal, idler }
    }

    pub fn balanced(arm: DetectorArm) -> Self {
        Arms {
            signal: arm,
            idler: arm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.idler.validate()
    }
}

/// Calibrated detector output of one pulse, in electrons.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectedShot {
    pub m_s: f64,
    pub m_i: f64,
}

impl DetectedShot {
    pub fn difference(&self) -> f64 {
        self.m_s - self.m_i
    }
}

/// Keeps each of `n` photons independently with probability `eta`.
pub fn thin<R: Rng + ?Sized>(n: u64, eta: f64, rng: &mut R) -> u64 {
    if n == 0 || eta <= 0.0 {
        0
    } else if eta >= 1.0 {
        n
    } else {
        Binomial::new(n, eta).expect("eta in (0, 1)").sample(rng)
    }
}

pub fn detect_shot<R: Rng + ?Sized>(shot: PhotonShot, arms: &Arms, rng: &mut R) -> DetectedShot {
    let m_s = thin(shot.n_s, arms.signal.eta, rng) as f64 + arms.signal.noise(rng);
    let m_i = thin(shot.n_i, arms.idler.eta, rng) as f64 + arms.idler.noise(rng);
    DetectedShot { m_s, m_i }
}

/// Records `count` pulses with the light blocked.
pub fn dark_run(arms: &Arms, count: usize, seed: u64, exec: Exec) -> Result<ShotSeries> {
    arms.validate()?;
    if count == 0 {
        return Err(Error::EmptySeries);
    }
    let shots = exec.map_indexed(count, |k| {
        let mut rng = substream(seed, DOMAIN_DARK, k as u64);
        DetectedShot {
            m_s: arms.signal.noise(&mut rng),
            m_i: arms.idler.noise(&mut rng),
        }
    });
    Ok(ShotSeries::new(shots, Provenance::SimulatedDark))
}

/// Exact detected-count pmf: `P(m) = sum_n C(n, m) eta^m (1 - eta)^(n - m) P(n)`.
///
/// The output has the same support `0..=n_max` as the input.
pub fn detect_pmf(photon_pmf: &[f64], eta: f64) -> Result<Vec<f64>> {
    ensure_unit("eta", eta)?;
    let len = photon_pmf.len();
    let mut out = vec![0.0; len];
    if eta == 1.0 {
        out.copy_from_slice(photon_pmf);
        return Ok(out);
    }
    if eta == 0.0 {
        if len > 0 {
            out[0] = photon_pmf.iter().sum();
        }
        return Ok(out);
    }
    for (n, &p) in photon_pmf.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (m, w) in binomial_row(n, eta).into_iter().enumerate() {
            out[m] += p * w;
        }
    }
    Ok(out)
}

/// `Binomial(n, p)` pmf over `0..=n`, built outward from the mode so no term
/// underflows before it is genuinely negligible.
pub fn binomial_row(n: usize, p: f64) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    if p <= 0.0 {
        row[0] = 1.0;
        return row;
    }
    if p >= 1.0 {
        row[n] = 1.0;
        return row;
    }
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    let ratio = p / (1.0 - p);
    row[mode] = 1.0;
    for m in mode..n {
        row[m + 1] = row[m] * ((n - m) as f64 / (m + 1) as f64) * ratio;
    }
    for m in (1..=mode).rev() {
        row[m - 1] = row[m] * (m as f64 / (n - m + 1) as f64) / ratio;
    }
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|w| *w /= total);
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::negative_binomial_pmf;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_and_blocked_detectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(thin(37, 1.0, &mut rng), 37);
        assert_eq!(thin(37, 0.0, &mut rng), 0);
        assert_eq!(thin(0, 0.4, &mut rng), 0);
    }

    #[test]
    fn zero_light_zero_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let arms = Arms::balanced(DetectorArm::ideal(0.55));
        let d = detect_shot(PhotonShot::default(), &arms, &mut rng);
        assert_eq!(d, DetectedShot { m_s: 0.0, m_i: 0.0 });
    }

    #[test]
    fn noiseless_dark_run_is_zero() {
        let arms = Arms::balanced(DetectorArm::ideal(0.55));
        let dark = dark_run(&arms, 500, 3, Exec::default()).unwrap();
        assert!(dark.shots().iter().all(|s| s.m_s == 0.0 && s.m_i == 0.0));
        assert_eq!(
            dark_run(&arms, 0, 3, Exec::default()).unwrap_err(),
            Error::EmptySeries
        );
    }

    #[test]
    fn rejects_invalid_arm() {
        assert!(DetectorArm::ideal(1.2).validate().is_err());
        assert!(DetectorArm::ideal(0.5).with_noise(-1.0).validate().is_err());
        let mut arm = DetectorArm::ideal(0.5);
        arm.gain_uv_per_electron = 0.0;
        assert!(arm.validate().is_err());
    }

    #[test]
    fn calibration_round_trip() {
        let mut arm = DetectorArm::ideal(0.55);
        arm.gain_uv_per_electron = 33.087;
        for e in [0.0, 1.0, 528.25, -159.5, 1e6 + 0.125] {
            let back = arm.to_electrons(arm.to_microvolts(e));
            assert!((back - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn detect_pmf_small_cases() {
        let delta0 = [1.0, 0.0, 0.0];
        assert_eq!(detect_pmf(&delta0, 0.3).unwrap(), vec![1.0, 0.0, 0.0]);
        let out = detect_pmf(&[0.0, 0.0, 1.0], 0.5).unwrap();
        assert_relative_eq!(out[0], 0.25, max_relative = 1e-14);
        assert_relative_eq!(out[1], 0.5, max_relative = 1e-14);
        assert_relative_eq!(out[2], 0.25, max_relative = 1e-14);
    }

    #[test]
    fn thermal_stays_thermal() {
        // Brute-force binomial convolution against the closed-form thermal law.
        let (nbar, eta) = (3.0, 0.55);
        let n_max = 200;
        let detected = detect_pmf(&negative_binomial_pmf(1.0, nbar, n_max), eta).unwrap();
        let expected = negative_binomial_pmf(1.0, eta * nbar, n_max);
        for m in 0..60 {
            assert_relative_eq!(
                detected[m],
                expected[m],
                max_relative = 1e-10,
                epsilon = 1e-300
            );
        }
    }

    #[test]
    fn binomial_row_matches_direct_formula() {
        let row = binomial_row(10, 0.3);
        let mut c = 1.0;
        for (m, &w) in row.iter().enumerate() {
            let direct = c * 0.3f64.powi(m as i32) * 0.7f64.powi(10 - m as i32);
            assert_relative_eq!(w, direct, max_relative = 1e-12);
            c = c * (10 - m) as f64 / (m + 1) as f64;
        }
    }
}
