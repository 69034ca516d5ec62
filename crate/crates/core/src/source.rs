//! Photon-number laws of the twin beam and of the classical reference sources.
//!
//! A spontaneous twin beam with `mu` equally populated temporal modes has a
//! negative-binomial (multithermal) photon number, identical in both arms.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonneg, Error, Result};
use crate::rng::{substream, Exec, DOMAIN_SHOTS};

/// Above this mode count the multithermal law is sampled as a Gamma-Poisson
/// mixture instead of a sum of geometric variates. Both are exact.
const GEOMETRIC_SUM_MAX_MODES: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// Pairwise emission: `n_s = n_i`, multithermal.
    TwinSpontaneous,
    /// Independent Poisson arms with mean `mu * nbar` each.
    CoherentPair,
    /// Independent multithermal arms.
    IndependentThermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    /// Number of temporal modes.
    pub mu: u32,
    /// Mean photons per mode per pulse.
    pub nbar: f64,
    #[serde(default = "default_kind")]
    pub kind: SourceKind,
}

fn default_kind() -> SourceKind {
    SourceKind::TwinSpontaneous
}

impl Default for SourceModel {
    /// Twin beam fitted to a detected mean of about 560 photons at 55 % efficiency.
    fn default() -> Self {
        SourceModel {
            mu: 20,
            nbar: 50.9,
            kind: SourceKind::TwinSpontaneous,
        }
    }
}

impl SourceModel {
    pub fn new(kind: SourceKind, mu: u32, nbar: f64) -> Result<Self> {
        let model = SourceModel { mu, nbar, kind };
        model.validate()?;
        Ok(model)
    }

    pub fn twin(mu: u32, nbar: f64) -> Result<Self> {
        Self::new(SourceKind::TwinSpontaneous, mu, nbar)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu < 1 {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: f64::from(self.mu),
                reason: "at least one mode is required",
            });
        }
        ensure_nonneg("nbar", self.nbar)
    }

    /// Mean photon number per arm.
    pub fn mean(&self) -> f64 {
        f64::from(self.mu) * self.nbar
    }

    /// Photon-number variance per arm.
    pub fn variance(&self) -> f64 {
        match self.kind {
            SourceKind::CoherentPair => self.mean(),
            _ => self.mean() * (1.0 + self.nbar),
        }
    }

    /// Covariance between the signal and idler photon numbers.
    pub fn cross_covariance(&self) -> f64 {
        match self.kind {
            SourceKind::TwinSpontaneous => self.variance(),
            _ => 0.0,
        }
    }

    /// The same law with `factor` times as many modes (independent areas summed).
    pub fn scaled_modes(&self, factor: u32) -> SourceModel {
        SourceModel {
            mu: self.mu * factor,
            ..*self
        }
    }
}

/// Photon numbers of one pulse at the crystal output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PhotonShot {
    pub n_s: u64,
    pub n_i: u64,
}

/// Draws one multithermal variate: `mu` thermal modes of mean `nbar`.
pub fn sample_multithermal<R: Rng + ?Sized>(mu: u32, nbar: f64, rng: &mut R) -> u64 {
    if nbar <= 0.0 || mu == 0 {
        return 0;
    }
    if mu <= GEOMETRIC_SUM_MAX_MODES {
        let geo = Geometric::new(1.0 / (1.0 + nbar)).expect("p in (0, 1]");
        (0..mu).map(|_| geo.sample(rng)).sum()
    } else {
        let rate = Gamma::new(f64::from(mu), nbar)
            .expect("positive shape and scale")
            .sample(rng);
        sample_poisson(rate, rng)
    }
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Draws one pulse from `model`.
pub fn sample_shot<R: Rng + ?Sized>(model: &SourceModel, rng: &mut R) -> PhotonShot {
    match model.kind {
        SourceKind::TwinSpontaneous => {
            let n = sample_multithermal(model.mu, model.nbar, rng);
            PhotonShot { n_s: n, n_i: n }
        }
        SourceKind::CoherentPair => PhotonShot {
            n_s: sample_poisson(model.mean(), rng),
            n_i: sample_poisson(model.mean(), rng),
        },
        SourceKind::IndependentThermal => PhotonShot {
            n_s: sample_multithermal(model.mu, model.nbar, rng),
            n_i: sample_multithermal(model.mu, model.nbar, rng),
        },
    }
}

/// Draws `count` pulses; pulse `k` uses its own substream of `seed`.
pub fn sample_shots(
    model: &SourceModel,
    count: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<PhotonShot>> {
    model.validate()?;
    if count == 0 {
        return Err(Error::EmptySeries);
    }
    Ok(exec.map_indexed(count, |k| {
        let mut rng = substream(seed, DOMAIN_SHOTS, k as u64);
        sample_shot(model, &mut rng)
    }))
}

/// Marginal photon-number pmf of one arm over `0..=n_max`.
pub fn photon_pmf(model: &SourceModel, n_max: usize) -> Result<Vec<f64>> {
    model.validate()?;
    Ok(match model.kind {
        SourceKind::CoherentPair => poisson_pmf(model.mean(), n_max),
        _ => negative_binomial_pmf(f64::from(model.mu), model.nbar, n_max),
    })
}

/// Multithermal pmf for a possibly fractional number of modes.
pub fn negative_binomial_pmf(modes: f64, nbar: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if nbar <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ln_q = (nbar / (1.0 + nbar)).ln();
    let mut ln_p = -modes * nbar.ln_1p();
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = ln_p.exp();
        let n = n as f64;
        ln_p += ((n + modes) / (n + 1.0)).ln() + ln_q;
    }
    out
}

pub fn poisson_pmf(mean: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if mean <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ln_mean = mean.ln();
    let mut ln_p = -mean;
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = ln_p.exp();
        ln_p += ln_mean - ((n + 1) as f64).ln();
    }
    out
}
