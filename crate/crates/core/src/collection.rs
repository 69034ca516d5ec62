//! Pinhole / coherence-area matching.
//!
//! The collected light is `whole_modes` independent twin coherence areas,
//! transmitted per arm with probabilities `t_s`, `t_i`, plus uncorrelated
//! Poisson background. Transmission thins the shared twin photon number
//! independently in each arm, so `t_s != t_i` destroys pairwise correlation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detection::thin;
use crate::detection::Arms;
use crate::error::{ensure_nonneg, ensure_unit, Error, Result};
use crate::source::{sample_poisson, sample_shot, PhotonShot, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionModel {
    /// Twin coherence areas inside both pinholes. Zero collects background only.
    #[serde(default = "one")]
    pub whole_modes: u32,
    #[serde(default = "unit")]
    pub t_s: f64,
    #[serde(default = "unit")]
    pub t_i: f64,
    /// Mean uncorrelated background photons per pulse, before detection.
    #[serde(default)]
    pub bg_s: f64,
    #[serde(default)]
    pub bg_i: f64,
}

fn one() -> u32 {
    1
}

fn unit() -> f64 {
    1.0
}

impl Default for CollectionModel {
    fn default() -> Self {
        Self::matched()
    }
}

impl CollectionModel {
    /// A single twin area, fully transmitted, no background.
    pub fn matched() -> Self {
        CollectionModel {
            whole_modes: 1,
            t_s: 1.0,
            t_i: 1.0,
            bg_s: 0.0,
            bg_i: 0.0,
        }
    }

    pub fn with_transmission(mut self, t_s: f64, t_i: f64) -> Self {
        self.t_s = t_s;
        self.t_i = t_i;
        self
    }

    pub fn with_background(mut self, bg_s: f64, bg_i: f64) -> Self {
        self.bg_s = bg_s;
        self.bg_i = bg_i;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_unit("t_s", self.t_s)?;
        ensure_unit("t_i", self.t_i)?;
        ensure_nonneg("bg_s", self.bg_s)?;
        ensure_nonneg("bg_i", self.bg_i)
    }

    /// Collection for pinhole-to-area ratios `rho_s`, `rho_i`, where one
    /// coherence area carries `area_mean` photons on average.
    ///
    /// With both ratios at least one, `floor(min rho)` whole areas are kept and
    /// the excess pinhole area admits uncorrelated light. Otherwise a single
    /// area is only partly transmitted.
    pub fn from_area_ratios(rho_s: f64, rho_i: f64, area_mean: f64) -> Result<Self> {
        ensure_nonneg("rho_s", rho_s)?;
        ensure_nonneg("rho_i", rho_i)?;
        ensure_nonneg("area_mean", area_mean)?;
        if rho_s >= 1.0 && rho_i >= 1.0 {
            let whole = rho_s.min(rho_i).floor();
            Ok(CollectionModel {
                whole_modes: whole as u32,
                t_s: 1.0,
                t_i: 1.0,
                bg_s: (rho_s - whole) * area_mean,
                bg_i: (rho_i - whole) * area_mean,
            })
        } else {
            Ok(CollectionModel {
                whole_modes: 1,
                t_s: rho_s.min(1.0),
                t_i: rho_i.min(1.0),
                bg_s: 0.0,
                bg_i: 0.0,
            })
        }
    }
}

/// Applies pinhole transmission and background to the twin light of one pulse.
pub fn apply_collection<R: Rng + ?Sized>(
    shot: PhotonShot,
    model: &CollectionModel,
    rng: &mut R,
) -> PhotonShot {
    PhotonShot {
        n_s: thin(shot.n_s, model.t_s, rng) + sample_poisson(model.bg_s, rng),
        n_i: thin(shot.n_i, model.t_i, rng) + sample_poisson(model.bg_i, rng),
    }
}

/// Draws the light reaching both detectors for one pulse.
pub fn collect_shot<R: Rng + ?Sized>(
    source: &SourceModel,
    model: &CollectionModel,
    rng: &mut R,
) -> PhotonShot {
    let mut twin = PhotonShot::default();
    for _ in 0..model.whole_modes {
        let area = sample_shot(source, rng);
        twin.n_s += area.n_s;
        twin.n_i += area.n_i;
    }
    apply_collection(twin, model, rng)
}

/// One row of a user-supplied pump table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpTableRow {
    pub intensity: f64,
    pub rho_s: f64,
    pub rho_i: f64,
    pub nbar: f64,
}

/// Maps pump intensity to area ratios and photons per mode.
///
/// Coherence areas grow as `I^area_exponent` (idler: `area_exponent *
/// idler_area_skew`, since the two colours diverge differently); at
/// `matched_intensity` one area fills each pinhole exactly. Photons per mode
/// scale as `I^gain_exponent`. A non-empty `table` replaces the power laws
/// with linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpMapping {
    pub matched_intensity: f64,
    pub area_exponent: f64,
    pub idler_area_skew: f64,
    pub gain_exponent: f64,
    pub table: Vec<PumpTableRow>,
}

impl Default for PumpMapping {
    fn default() -> Self {
        PumpMapping {
            matched_intensity: 1.0,
            area_exponent: 1.0,
            idler_area_skew: 1.5,
            gain_exponent: 1.0,
            table: Vec::new(),
        }
    }
}

impl PumpMapping {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("matched_intensity", self.matched_intensity),
            ("area_exponent", self.area_exponent),
            ("idler_area_skew", self.idler_area_skew),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                });
            }
        }
        if !self.gain_exponent.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gain_exponent",
                value: self.gain_exponent,
                reason: "must be finite",
            });
        }
        for pair in self.table.windows(2) {
            if pair[1].intensity <= pair[0].intensity {
                return Err(Error::InvalidParameter {
                    name: "table.intensity",
                    value: pair[1].intensity,
                    reason: "table rows must have increasing intensity",
                });
            }
        }
        for row in &self.table {
            ensure_nonneg("table.rho_s", row.rho_s)?;
            ensure_nonneg("table.rho_i", row.rho_i)?;
            ensure_nonneg("table.nbar", row.nbar)?;
        }
        Ok(())
    }

    /// `(rho_s, rho_i, nbar)` at `intensity`.
    pub fn evaluate(&self, intensity: f64, base_nbar: f64) -> (f64, f64, f64) {
        if !self.table.is_empty() {
            return self.interpolate(intensity);
        }
        let x = intensity / self.matched_intensity;
        let rho_s = x.powf(-self.area_exponent);
        let rho_i = x.powf(-self.area_exponent * self.idler_area_skew);
        (rho_s, rho_i, base_nbar * x.powf(self.gain_exponent))
    }

    fn interpolate(&self, intensity: f64) -> (f64, f64, f64) {
        let rows = &self.table;
        let first = rows[0];
        let last = rows[rows.len() - 1];
        if intensity <= first.intensity {
            return (first.rho_s, first.rho_i, first.nbar);
        }
        if intensity >= last.intensity {
            return (last.rho_s, last.rho_i, last.nbar);
        }
        let k = rows.partition_point(|r| r.intensity <= intensity);
        let (a, b) = (rows[k - 1], rows[k]);
        let w = (intensity - a.intensity) / (b.intensity - a.intensity);
        let lerp = |x: f64, y: f64| x + w * (y - x);
        (
            lerp(a.rho_s, b.rho_s),
            lerp(a.rho_i, b.rho_i),
            lerp(a.nbar, b.nbar),
        )
    }
}

/// A simulation-ready configuration for one pump intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpSweepPoint {
    pub pump_intensity: f64,
    pub rho_s: f64,
    pub rho_i: f64,
    pub source: SourceModel,
    pub collection: CollectionModel,
    pub arms: Arms,
}

pub fn sweep_pump(
    intensities: &[f64],
    mapping: &PumpMapping,
    base: &SourceModel,
    arms: &Arms,
) -> Result<Vec<PumpSweepPoint>> {
    if intensities.is_empty() {
        return Err(Error::EmptySweep);
    }
    mapping.validate()?;
    base.validate()?;
    arms.validate()?;
    intensities
        .iter()
        .map(|&pump_intensity| {
            if !(pump_intensity > 0.0 && pump_intensity.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "pump_intensity",
                    value: pump_intensity,
                    reason: "must be positive",
                });
            }
            let (rho_s, rho_i, nbar) = mapping.evaluate(pump_intensity, base.nbar);
            let source = SourceModel { nbar, ..*base };
            source.validate()?;
            let collection = CollectionModel::from_area_ratios(rho_s, rho_i, source.mean())?;
            Ok(PumpSweepPoint {
                pump_intensity,
                rho_s,
                rho_i,
                source,
                collection,
                arms: *arms,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::DetectorArm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_matching_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [0, 1, 17, 1000] {
            let shot = PhotonShot { n_s: n, n_i: n };
            assert_eq!(
                apply_collection(shot, &CollectionModel::matched(), &mut rng),
                shot
            );
        }
    }

    #[test]
    fn area_ratio_regimes() {
        let c = CollectionModel::from_area_ratios(1.0, 1.0, 1000.0).unwrap();
        assert_eq!(c, CollectionModel::matched());

        let c = CollectionModel::from_area_ratios(0.8, 0.8, 1000.0).unwrap();
        assert_eq!((c.whole_modes, c.t_s, c.t_i, c.bg_s), (1, 0.8, 0.8, 0.0));

        let c = CollectionModel::from_area_ratios(3.0, 3.0, 1000.0).unwrap();
        assert_eq!((c.whole_modes, c.t_s, c.bg_s, c.bg_i), (3, 1.0, 0.0, 0.0));

        let c = CollectionModel::from_area_ratios(2.5, 3.25, 100.0).unwrap();
        assert_eq!(c.whole_modes, 2);
        assert!((c.bg_s - 50.0).abs() < 1e-12 && (c.bg_i - 125.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let arms = Arms::balanced(DetectorArm::ideal(0.55));
        let err = sweep_pump(&[], &PumpMapping::default(), &SourceModel::default(), &arms);
        assert_eq!(err.unwrap_err(), Error::EmptySweep);
    }

    #[test]
    fn sweep_matched_point_and_monotone_areas() {
        let arms = Arms::balanced(DetectorArm::ideal(0.55));
        let grid = [0.25, 0.5, 1.0, 1.5, 2.0];
        let pts = sweep_pump(
            &grid,
            &PumpMapping::default(),
            &SourceModel::default(),
            &arms,
        )
        .unwrap();
        assert_eq!(pts[2].collection, CollectionModel::matched());
        assert_eq!(pts[2].source, SourceModel::default());
        for w in pts.windows(2) {
            assert!(w[1].rho_s < w[0].rho_s && w[1].rho_i < w[0].rho_i);
            assert!(w[1].source.nbar > w[0].source.nbar);
        }
        assert!(pts[4].collection.t_i < pts[4].collection.t_s);
    }

    #[test]
    fn table_interpolation() {
        let mapping = PumpMapping {
            table: vec![
                PumpTableRow {
                    intensity: 1.0,
                    rho_s: 2.0,
                    rho_i: 2.0,
                    nbar: 10.0,
                },
                PumpTableRow {
                    intensity: 3.0,
                    rho_s: 1.0,
                    rho_i: 0.5,
                    nbar: 30.0,
                },
            ],
            ..PumpMapping::default()
        };
        mapping.validate().unwrap();
        assert_eq!(mapping.evaluate(2.0, 0.0), (1.5, 1.25, 20.0));
        assert_eq!(mapping.evaluate(0.1, 0.0), (2.0, 2.0, 10.0));
        assert_eq!(mapping.evaluate(9.0, 0.0), (1.0, 0.5, 30.0));
    }
}
