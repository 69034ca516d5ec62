//! Estimators over recorded shot series: lagged correlation, difference
//! statistics and noise reduction, Fano factors and conditional selection.
//!
//! Variances use the population convention `<m^2> - <m>^2`. When dark
//! correction is on, the dark-run variances (and the optional dark
//! covariance) are subtracted and the dark pedestal is removed from the means.

use serde::{Deserialize, Serialize};

use crate::detection::DetectedShot;
use crate::error::{Error, Result};
use crate::reduce::{sum_many, sum_range};
use crate::rng::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Simulated,
    SimulatedDark,
    Measured,
    MeasuredDark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Signal,
    Idler,
}

/// Per-arm moments of a dark run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DarkStats {
    pub mean_s: f64,
    pub mean_i: f64,
    pub var_s: f64,
    pub var_i: f64,
    /// Dark covariance between the arms; zero unless supplied.
    pub cov: f64,
    pub count: usize,
}

impl DarkStats {
    /// Means and variances of a dark series. The covariance is left at zero;
    /// use [`DarkStats::with_covariance`] to subtract a measured one.
    pub fn from_series(dark: &ShotSeries) -> Result<Self> {
        let m = dark.moments()?;
        Ok(DarkStats {
            mean_s: m.mean_s,
            mean_i: m.mean_i,
            var_s: m.var_s,
            var_i: m.var_i,
            cov: 0.0,
            count: dark.len(),
        })
    }

    pub fn with_covariance(mut self, cov: f64) -> Self {
        self.cov = cov;
        self
    }

    pub fn var_d(&self) -> f64 {
        self.var_s + self.var_i - 2.0 * self.cov
    }
}

/// First and second moments of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean_s: f64,
    pub mean_i: f64,
    pub var_s: f64,
    pub var_i: f64,
    pub cov: f64,
}

impl Moments {
    pub fn var_d(&self) -> f64 {
        self.var_s + self.var_i - 2.0 * self.cov
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotSeries {
    shots: Vec<DetectedShot>,
    dark: Option<DarkStats>,
    provenance: Provenance,
    exec: Exec,
}

impl ShotSeries {
    pub fn new(shots: Vec<DetectedShot>, provenance: Provenance) -> Self {
        ShotSeries {
            shots,
            dark: None,
            provenance,
            exec: Exec::default(),
        }
    }

    pub fn with_dark(mut self, dark: DarkStats) -> Self {
        self.dark = Some(dark);
        self
    }

    /// Execution mode used by the estimators on this series.
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn shots(&self) -> &[DetectedShot] {
        &self.shots
    }

    pub fn into_shots(self) -> Vec<DetectedShot> {
        self.shots
    }

    pub fn dark(&self) -> Option<&DarkStats> {
        self.dark.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.shots.is_empty() {
            Err(Error::EmptySeries)
        } else if self.shots.len() < needed {
            Err(Error::TooFewShots {
                needed,
                got: self.shots.len(),
            })
        } else {
            Ok(())
        }
    }

    fn dark_or_err(&self, corrected: bool) -> Result<Option<&DarkStats>> {
        match (corrected, self.dark.as_ref()) {
            (false, _) => Ok(None),
            (true, Some(d)) => Ok(Some(d)),
            (true, None) => Err(Error::MissingDarkStatistics),
        }
    }

    /// Uncorrected two-pass moments.
    pub fn moments(&self) -> Result<Moments> {
        self.require(2)?;
        let k = self.shots.len() as f64;
        let [ss, si] = sum_many(self.exec, &self.shots, |s| [s.m_s, s.m_i]);
        let (mean_s, mean_i) = (ss / k, si / k);
        let [vs, vi, c] = sum_many(self.exec, &self.shots, |s| {
            let (a, b) = (s.m_s - mean_s, s.m_i - mean_i);
            [a * a, b * b, a * b]
        });
        Ok(Moments {
            mean_s,
            mean_i,
            var_s: vs / k,
            var_i: vi / k,
            cov: c / k,
        })
    }

    /// Contiguous sub-series sharing this series' dark statistics.
    fn slice(&self, range: std::ops::Range<usize>) -> ShotSeries {
        ShotSeries {
            shots: self.shots[range].to_vec(),
            dark: self.dark,
            provenance: self.provenance,
            exec: Exec::Sequential,
        }
    }
}

/// Options shared by the series estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    /// Largest lag of the correlation profile.
    pub j_max: usize,
    /// Subtract dark-run statistics.
    pub corrected: bool,
    /// Histogram bin width in electrons.
    pub bin_width: f64,
    /// Detection efficiency used to classify R against the `1 - eta` floor.
    pub eta: Option<f64>,
    /// Number of contiguous batches used for standard errors.
    pub batches: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            j_max: 10,
            corrected: true,
            bin_width: 1.0,
            eta: None,
            batches: 100,
        }
    }
}

impl AnalysisOptions {
    pub fn uncorrected() -> Self {
        AnalysisOptions {
            corrected: false,
            ..Self::default()
        }
    }
}

/// Signal, idler and cross moments after optional dark subtraction.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Corrected {
    mean_s: f64,
    mean_i: f64,
    var_s: f64,
    var_i: f64,
    cov: f64,
    var_d: f64,
    var_d_dark: f64,
}

fn corrected_moments(series: &ShotSeries, corrected: bool) -> Result<Corrected> {
    let dark = series.dark_or_err(corrected)?;
    let m = series.moments()?;
    let d = dark.copied().unwrap_or_default();
    Ok(Corrected {
        mean_s: m.mean_s - d.mean_s,
        mean_i: m.mean_i - d.mean_i,
        var_s: m.var_s - d.var_s,
        var_i: m.var_i - d.var_i,
        cov: m.cov - d.cov,
        var_d: m.var_d(),
        var_d_dark: d.var_d(),
    })
}

/// Normalized lagged cross-correlation `Gamma(j)` for `j = 0..=j_max`.
///
/// The lag-`j` covariance averages over the `K - j` available pairs. With
/// `corrected`, dark variances and covariance are subtracted; a non-positive
/// corrected variance is an error.
pub fn gamma_profile(series: &ShotSeries, j_max: usize, corrected: bool) -> Result<Vec<f64>> {
    series.require(2)?;
    let len = series.len();
    if j_max >= len {
        return Err(Error::LagTooLarge { lag: j_max, len });
    }
    let c = corrected_moments(series, corrected)?;
    if c.var_s <= 0.0 {
        return Err(Error::OverSubtraction {
            quantity: "signal variance",
            value: c.var_s,
        });
    }
    if c.var_i <= 0.0 {
        return Err(Error::OverSubtraction {
            quantity: "idler variance",
            value: c.var_i,
        });
    }
    let dark_cov = if corrected {
        series.dark.map_or(0.0, |d| d.cov)
    } else {
        0.0
    };
    let norm = (c.var_s * c.var_i).sqrt();
    let raw_mean_s = c.mean_s
        + if corrected {
            series.dark.map_or(0.0, |d| d.mean_s)
        } else {
            0.0
        };
    let raw_mean_i = c.mean_i
        + if corrected {
            series.dark.map_or(0.0, |d| d.mean_i)
        } else {
            0.0
        };
    let shots = series.shots();
    Ok((0..=j_max)
        .map(|j| {
            let pairs = len - j;
            let [sum] = sum_range(series.exec, pairs, |k| {
                [(shots[k].m_s - raw_mean_s) * (shots[k + j].m_i - raw_mean_i)]
            });
            (sum / pairs as f64 - dark_cov) / norm
        })
        .collect())
}

/// Fixed-width histogram; bin `k` covers `[k * width, (k + 1) * width)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub first_bin: i64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_values(values: impl IntoIterator<Item = f64>, bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "bin_width",
                value: bin_width,
                reason: "must be positive",
            });
        }
        let bins: Vec<i64> = values
            .into_iter()
            .map(|v| (v / bin_width).floor() as i64)
            .collect();
        let (Some(&lo), Some(&hi)) = (bins.iter().min(), bins.iter().max()) else {
            return Err(Error::EmptySeries);
        };
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for b in bins {
            counts[(b - lo) as usize] += 1;
        }
        Ok(Histogram {
            bin_width,
            first_bin: lo,
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(left edge, count, probability)` per bin.
    pub fn rows(&self) -> Vec<(f64, u64, f64)> {
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let edge = (self.first_bin + k as i64) as f64 * self.bin_width;
                (edge, c, c as f64 / total)
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        let total = self.total() as f64;
        self.rows()
            .iter()
            .map(|&(edge, c, _)| (edge + 0.5 * self.bin_width) * c as f64)
            .sum::<f64>()
            / total
    }
}

/// Distribution of `d = m_s - m_i`.
pub fn difference_histogram(series: &ShotSeries, bin_width: f64) -> Result<Histogram> {
    series.require(1)?;
    Histogram::from_values(
        series.shots().iter().map(DetectedShot::difference),
        bin_width,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `R >= 1`: compatible with classical light.
    Classical,
    /// `1 - eta <= R < 1`.
    Nonclassical,
    /// `R` below the `1 - eta` floor beyond statistical tolerance.
    OverSubtracted,
}

/// Classifies `r` with tolerance `tol` (typically three standard errors).
/// Without an efficiency only the classical boundary is tested.
pub fn classify(r: f64, tol: f64, eta: Option<f64>) -> Classification {
    if r >= 1.0 - tol {
        Classification::Classical
    } else if eta.is_some_and(|eta| r < 1.0 - eta - tol) {
        Classification::OverSubtracted
    } else {
        Classification::Nonclassical
    }
}

pub fn to_decibels(r: f64) -> Result<f64> {
    if r > 0.0 {
        Ok(10.0 * r.log10())
    } else {
        Err(Error::NonPositiveNoiseReduction(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub shots: usize,
    pub corrected: bool,
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub covariance: f64,
    pub gamma: Vec<f64>,
    pub sigma2_d: f64,
    pub sigma2_d_dark: f64,
    pub snl: f64,
    pub r_linear: f64,
    /// `None` when `r_linear <= 0`.
    pub r_db: Option<f64>,
    pub r_std_error: f64,
    pub fano_s: Option<f64>,
    pub fano_i: Option<f64>,
    pub classification: Classification,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// Noise reduction `R = (sigma2_d - sigma2_d_dark) / (<m_s> + <m_i>)` with the
/// rest of the report.
pub fn noise_reduction(series: &ShotSeries, options: &AnalysisOptions) -> Result<AnalysisReport> {
    let c = corrected_moments(series, options.corrected)?;
    let snl = c.mean_s + c.mean_i;
    if snl <= 0.0 {
        return Err(Error::ZeroMean);
    }
    let r_linear = (c.var_d - c.var_d_dark) / snl;
    let gamma = gamma_profile(
        series,
        options.j_max.min(series.len() - 1),
        options.corrected,
    )?;
    let r_std_error = batch_standard_error(series, options.batches, |b| {
        let c = corrected_moments(b, options.corrected)?;
        Ok((c.var_d - c.var_d_dark) / (c.mean_s + c.mean_i))
    })
    .unwrap_or(f64::NAN);
    let tol = if r_std_error.is_finite() {
        3.0 * r_std_error
    } else {
        0.0
    };
    Ok(AnalysisReport {
        shots: series.len(),
        corrected: options.corrected,
        means: [c.mean_s, c.mean_i],
        variances: [c.var_s, c.var_i],
        covariance: c.cov,
        gamma,
        sigma2_d: c.var_d,
        sigma2_d_dark: c.var_d_dark,
        snl,
        r_linear,
        r_db: to_decibels(r_linear).ok(),
        r_std_error,
        fano_s: ratio(c.var_s, c.mean_s),
        fano_i: ratio(c.var_i, c.mean_i),
        classification: classify(r_linear, tol, options.eta),
    })
}

/// Dark-corrected (when requested) Fano factor of one arm.
pub fn marginal_fano(series: &ShotSeries, arm: Arm, corrected: bool) -> Result<f64> {
    let c = corrected_moments(series, corrected)?;
    let (var, mean) = match arm {
        Arm::Signal => (c.var_s, c.mean_s),
        Arm::Idler => (c.var_i, c.mean_i),
    };
    if mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok(var / mean)
}

/// Idler statistics of the shots whose signal falls in a closed window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalResult {
    pub window: [f64; 2],
    pub retained: usize,
    pub success_probability: f64,
    pub mean: f64,
    pub variance: f64,
    pub fano: f64,
    /// Delta-method standard error of `fano`.
    pub fano_std_error: f64,
    pub histogram: Histogram,
}

impl ConditionalResult {
    pub fn is_sub_poissonian(&self) -> bool {
        self.fano < 1.0
    }
}

/// Conditional idler distribution `P(m_i | m_s in [lo, hi])`.
pub fn conditional_distribution(
    series: &ShotSeries,
    window: (f64, f64),
    options: &AnalysisOptions,
) -> Result<ConditionalResult> {
    let (lo, hi) = window;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidWindow { lo, hi });
    }
    series.require(1)?;
    let dark = series
        .dark_or_err(options.corrected)?
        .copied()
        .unwrap_or_default();
    let kept: Vec<f64> = series
        .shots()
        .iter()
        .filter(|s| s.m_s >= lo && s.m_s <= hi)
        .map(|s| s.m_i)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptySelection { lo, hi });
    }
    if kept.len() < 2 {
        return Err(Error::TooFewShots {
            needed: 2,
            got: kept.len(),
        });
    }
    let n = kept.len() as f64;
    let raw_mean = kept.iter().sum::<f64>() / n;
    let raw_var = kept.iter().map(|x| (x - raw_mean).powi(2)).sum::<f64>() / n;
    let mean = raw_mean - dark.mean_i;
    let variance = raw_var - dark.var_i;
    if mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    let fano = variance / mean;
    // Influence function of (v - v_dark) / (m - m_dark).
    let influence_sq = kept
        .iter()
        .map(|x| {
            let dv = (x - raw_mean).powi(2) - raw_var;
            let dm = x - raw_mean;
            ((dv - fano * dm) / mean).powi(2)
        })
        .sum::<f64>()
        / n;
    Ok(ConditionalResult {
        window: [lo, hi],
        retained: kept.len(),
        success_probability: n / series.len() as f64,
        mean,
        variance,
        fano,
        fano_std_error: (influence_sq / n).sqrt(),
        histogram: Histogram::from_values(kept.iter().copied(), options.bin_width)?,
    })
}

/// Window on `m_s` spanning the empirical quantiles
/// `[upper_quantile - success, upper_quantile]`, so that about a fraction
/// `success` of shots is retained.
pub fn quantile_window(
    series: &ShotSeries,
    upper_quantile: f64,
    success: f64,
) -> Result<(f64, f64)> {
    series.require(1)?;
    if !(success > 0.0 && success <= upper_quantile && upper_quantile <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "success",
            value: success,
            reason: "need 0 < success <= upper_quantile <= 1",
        });
    }
    let mut signal: Vec<f64> = series.shots().iter().map(|s| s.m_s).collect();
    signal.sort_by(f64::total_cmp);
    let k = signal.len();
    let hi_idx = ((upper_quantile * k as f64).floor() as usize).clamp(1, k) - 1;
    let count = ((success * k as f64).round() as usize).max(1);
    let lo_idx = (hi_idx + 1).saturating_sub(count);
    Ok((signal[lo_idx], signal[hi_idx]))
}

/// Standard error of `estimator` from `batches` contiguous batches
/// (`sd(batch values) / sqrt(batches)`).
pub fn batch_standard_error<F>(series: &ShotSeries, batches: usize, estimator: F) -> Result<f64>
where
    F: Fn(&ShotSeries) -> Result<f64> + Sync + Send,
{
    let len = series.len();
    if batches < 2 || len < 2 * batches {
        return Err(Error::TooFewShots {
            needed: 2 * batches.max(2),
            got: len,
        });
    }
    let values = series.exec.map_indexed(batches, |b| {
        let range = (b * len / batches)..((b + 1) * len / batches);
        estimator(&series.slice(range))
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let b = batches as f64;
    let mean = values.iter().sum::<f64>() / b;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Ok((var / b).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series(pairs: &[(f64, f64)]) -> ShotSeries {
        ShotSeries::new(
            pairs
                .iter()
                .map(|&(m_s, m_i)| DetectedShot { m_s, m_i })
                .collect(),
            Provenance::Measured,
        )
    }

    #[test]
    fn identical_arms_have_unit_gamma() {
        let s = series(&[(1.0, 1.0), (4.0, 4.0), (2.0, 2.0), (7.0, 7.0)]);
        let g = gamma_profile(&s, 0, false).unwrap();
        assert_relative_eq!(g[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn gamma_lag_uses_available_pairs() {
        // m_i is m_s shifted by one shot.
        let s = series(&[(1.0, 0.0), (3.0, 1.0), (2.0, 3.0), (6.0, 2.0), (0.0, 6.0)]);
        let g = gamma_profile(&s, 1, false).unwrap();
        let m = s.moments().unwrap();
        let shots = s.shots();
        let lag1: f64 = (0..4)
            .map(|k| (shots[k].m_s - m.mean_s) * (shots[k + 1].m_i - m.mean_i))
            .sum::<f64>()
            / 4.0;
        assert_relative_eq!(
            g[1],
            lag1 / (m.var_s * m.var_i).sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn gamma_errors() {
        let s = series(&[(1.0, 2.0), (3.0, 1.0), (2.0, 2.5)]);
        assert!(matches!(
            gamma_profile(&s, 3, false),
            Err(Error::LagTooLarge { .. })
        ));
        assert_eq!(
            gamma_profile(&s, 0, true),
            Err(Error::MissingDarkStatistics)
        );
        let noisy = s.clone().with_dark(DarkStats {
            var_s: 100.0,
            var_i: 0.1,
            ..DarkStats::default()
        });
        assert!(matches!(
            gamma_profile(&noisy, 0, true),
            Err(Error::OverSubtraction {
                quantity: "signal variance",
                ..
            })
        ));
        assert_eq!(
            gamma_profile(&series(&[(1.0, 1.0)]), 0, false).unwrap_err(),
            Error::TooFewShots { needed: 2, got: 1 }
        );
    }

    #[test]
    fn noise_reduction_by_hand() {
        let s = series(&[(10.0, 9.0), (12.0, 12.0), (8.0, 9.0), (14.0, 12.0)]);
        let opts = AnalysisOptions {
            batches: 2,
            ..AnalysisOptions::uncorrected()
        };
        let r = noise_reduction(&s, &opts).unwrap();
        // d = 1, 0, -1, 2 -> mean 0.5, variance 1.25; SNL = 11 + 10.5.
        assert_relative_eq!(r.sigma2_d, 1.25, max_relative = 1e-14);
        assert_relative_eq!(r.snl, 21.5, max_relative = 1e-14);
        assert_relative_eq!(r.r_linear, 1.25 / 21.5, max_relative = 1e-14);
        assert_relative_eq!(
            r.r_db.unwrap(),
            10.0 * (1.25f64 / 21.5).log10(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn dark_correction_subtracts_variance_and_pedestal() {
        let s =
            series(&[(10.0, 9.0), (12.0, 12.0), (8.0, 9.0), (14.0, 12.0)]).with_dark(DarkStats {
                mean_s: 1.0,
                mean_i: 0.5,
                var_s: 0.25,
                var_i: 0.5,
                cov: 0.0,
                count: 10,
            });
        let opts = AnalysisOptions {
            batches: 2,
            ..AnalysisOptions::default()
        };
        let r = noise_reduction(&s, &opts).unwrap();
        assert_relative_eq!(r.sigma2_d_dark, 0.75);
        assert_relative_eq!(r.snl, 20.0);
        assert_relative_eq!(r.r_linear, 0.5 / 20.0, max_relative = 1e-14);
        assert_eq!(
            noise_reduction(&series(&[(1.0, 1.0), (2.0, 2.0)]), &opts).unwrap_err(),
            Error::MissingDarkStatistics
        );
    }

    #[test]
    fn zero_means_and_non_positive_r() {
        let opts = AnalysisOptions {
            batches: 2,
            ..AnalysisOptions::uncorrected()
        };
        let zero = series(&[(1.0, -1.0), (-1.0, 1.0)]);
        assert_eq!(noise_reduction(&zero, &opts).unwrap_err(), Error::ZeroMean);
        assert!(to_decibels(0.0).is_err());
        assert!(to_decibels(-0.2).is_err());
        let twin = series(&[(3.0, 3.0), (5.0, 5.0), (4.0, 4.0), (6.0, 6.0)]);
        let r = noise_reduction(&twin, &opts).unwrap();
        assert_eq!(r.r_linear, 0.0);
        assert_eq!(r.r_db, None);
    }

    #[test]
    fn classification_boundaries() {
        assert_eq!(classify(1.01, 0.0, Some(0.55)), Classification::Classical);
        assert_eq!(classify(0.99, 0.02, Some(0.55)), Classification::Classical);
        assert_eq!(
            classify(0.6, 0.01, Some(0.55)),
            Classification::Nonclassical
        );
        assert_eq!(
            classify(0.44, 0.02, Some(0.55)),
            Classification::Nonclassical
        );
        assert_eq!(
            classify(0.3, 0.01, Some(0.55)),
            Classification::OverSubtracted
        );
        assert_eq!(classify(0.3, 0.01, None), Classification::Nonclassical);
    }

    #[test]
    fn perfect_twin_histogram_is_a_spike() {
        let s = series(&[(3.0, 3.0), (7.0, 7.0), (1.0, 1.0)]);
        let h = difference_histogram(&s, 1.0).unwrap();
        assert_eq!(h.first_bin, 0);
        assert_eq!(h.counts, vec![3]);
        assert!(Histogram::from_values([1.0], 0.0).is_err());
    }

    #[test]
    fn unrestricted_window_reproduces_marginal() {
        let s = series(&[(1.0, 2.0), (3.0, 5.0), (2.0, 2.0), (6.0, 9.0), (4.0, 1.0)]);
        let opts = AnalysisOptions::uncorrected();
        let c = conditional_distribution(&s, (f64::NEG_INFINITY, f64::INFINITY), &opts).unwrap();
        assert_eq!(c.success_probability, 1.0);
        assert_relative_eq!(
            c.fano,
            marginal_fano(&s, Arm::Idler, false).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn conditional_errors() {
        let s = series(&[(1.0, 2.0), (3.0, 5.0)]);
        let opts = AnalysisOptions::uncorrected();
        assert!(matches!(
            conditional_distribution(&s, (10.0, 20.0), &opts),
            Err(Error::EmptySelection { .. })
        ));
        assert!(matches!(
            conditional_distribution(&s, (2.0, 1.0), &opts),
            Err(Error::InvalidWindow { .. })
        ));
        assert_eq!(
            conditional_distribution(&s, (0.0, 5.0), &AnalysisOptions::default()).unwrap_err(),
            Error::MissingDarkStatistics
        );
    }

    #[test]
    fn quantile_window_retains_requested_fraction() {
        let s = series(&(0..1000).map(|k| (k as f64, 0.0)).collect::<Vec<_>>());
        let (lo, hi) = quantile_window(&s, 0.9, 0.05).unwrap();
        let kept = s
            .shots()
            .iter()
            .filter(|x| x.m_s >= lo && x.m_s <= hi)
            .count();
        assert_eq!(kept, 50);
        assert_eq!(hi, 899.0);
    }

    #[test]
    fn batch_error_of_constant_is_zero() {
        let s = series(&vec![(2.0, 1.0); 100]);
        let se = batch_standard_error(&s, 10, |b| Ok(b.moments()?.mean_s)).unwrap();
        assert_eq!(se, 0.0);
        assert!(batch_standard_error(&s, 80, |_| Ok(0.0)).is_err());
    }
}
