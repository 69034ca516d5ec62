//! Closed-form expectations and exact small-instance references.
//!
//! Moments propagate through three stages. Transmission `t` and detection
//! `eta` are both binomial thinnings, background is additive Poisson. For a
//! thinning at `p`: `<m> = p <n>`, `Var m = p^2 Var n + p (1 - p) <n>`, and
//! thinning two arms of a shared number scales the covariance by `p_s p_i`.

use serde::Serialize;

use crate::collection::CollectionModel;
use crate::detection::{binomial_row, detect_pmf, Arms};
use crate::error::{ensure_nonneg, ensure_unit, Error, Result};
use crate::source::{negative_binomial_pmf, poisson_pmf, SourceKind, SourceModel};

/// Upper bound on `n_max` for [`joint_pmf_bruteforce`].
pub const BRUTE_FORCE_LIMIT: usize = 200;
/// Largest probability mass the brute-force table may lose to truncation.
pub const TRUNCATION_TOLERANCE: f64 = 1e-9;

const FIT_BRACKET: (f64, f64) = (1e-3, 1e6);
const FIT_TOLERANCE: f64 = 1e-9;

/// Photon-number moments of one coherence area. Modes may be fractional.
#[derive(Debug, Clone, Copy, PartialEq)]
struct AreaLaw {
    mean: f64,
    var: f64,
    cross: f64,
}

impl AreaLaw {
    fn of(source: &SourceModel) -> Self {
        AreaLaw {
            mean: source.mean(),
            var: source.variance(),
            cross: source.cross_covariance(),
        }
    }

    /// Twin multithermal area with `modes` modes and total mean `mean`.
    fn twin(modes: f64, mean: f64) -> Self {
        let var = mean * (1.0 + mean / modes);
        AreaLaw {
            mean,
            var,
            cross: var,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    /// Photons reaching each detector.
    pub mean_n: [f64; 2],
    pub var_n: [f64; 2],
    pub cov_n: f64,
    /// Detected photoelectrons, without electronic noise.
    pub mean_m: [f64; 2],
    pub var_m: [f64; 2],
    pub cov_m: f64,
    pub sigma2_d: f64,
    pub snl: f64,
    pub r: f64,
    pub fano: [f64; 2],
}

impl MomentSet {
    pub fn r_db(&self) -> f64 {
        10.0 * self.r.log10()
    }

    /// `Gamma(0)`, optionally with electronic-noise variances added.
    pub fn gamma0(&self, dark_var: [f64; 2]) -> f64 {
        self.cov_m / ((self.var_m[0] + dark_var[0]) * (self.var_m[1] + dark_var[1])).sqrt()
    }
}

fn moments_from_law(law: AreaLaw, collection: &CollectionModel, arms: &Arms) -> MomentSet {
    let k = f64::from(collection.whole_modes);
    let (mean, var, cross) = (k * law.mean, k * law.var, k * law.cross);
    let t = [collection.t_s, collection.t_i];
    let bg = [collection.bg_s, collection.bg_i];
    let eta = [arms.signal.eta, arms.idler.eta];

    let mean_n = [0, 1].map(|j| t[j] * mean + bg[j]);
    let var_n = [0, 1].map(|j| t[j] * t[j] * var + t[j] * (1.0 - t[j]) * mean + bg[j]);
    let cov_n = t[0] * t[1] * cross;

    let mean_m = [0, 1].map(|j| eta[j] * mean_n[j]);
    let var_m = [0, 1].map(|j| eta[j] * eta[j] * var_n[j] + eta[j] * (1.0 - eta[j]) * mean_n[j]);
    let cov_m = eta[0] * eta[1] * cov_n;

    let sigma2_d = var_m[0] + var_m[1] - 2.0 * cov_m;
    let snl = mean_m[0] + mean_m[1];
    MomentSet {
        mean_n,
        var_n,
        cov_n,
        mean_m,
        var_m,
        cov_m,
        sigma2_d,
        snl,
        r: sigma2_d / snl,
        fano: [0, 1].map(|j| var_m[j] / mean_m[j]),
    }
}

fn validate_all(source: &SourceModel, collection: &CollectionModel, arms: &Arms) -> Result<()> {
    source.validate()?;
    collection.validate()?;
    arms.validate()
}

/// Exact first and second moments of the detected counts.
pub fn twin_moments(
    source: &SourceModel,
    collection: &CollectionModel,
    arms: &Arms,
) -> Result<MomentSet> {
    validate_all(source, collection, arms)?;
    Ok(moments_from_law(AreaLaw::of(source), collection, arms))
}

/// Expected `Gamma(0)`. Uncorrected, the arms' electronic-noise variances
/// enter the denominator.
pub fn gamma0_expected(
    source: &SourceModel,
    collection: &CollectionModel,
    arms: &Arms,
    corrected: bool,
) -> Result<f64> {
    let m = twin_moments(source, collection, arms)?;
    Ok(m.gamma0(dark_variances(arms, corrected)))
}

fn dark_variances(arms: &Arms, corrected: bool) -> [f64; 2] {
    if corrected {
        [0.0; 2]
    } else {
        [
            arms.signal.dark_sigma.powi(2),
            arms.idler.dark_sigma.powi(2),
        ]
    }
}

/// Mode number that makes a balanced, matched twin beam with detected mean
/// `mean_m` at efficiency `eta` show the corrected `Gamma(0) = gamma0`.
pub fn fit_mode_number(gamma0: f64, mean_m: f64, eta: f64) -> Result<f64> {
    ensure_unit("eta", eta)?;
    if !(eta > 0.0 && mean_m > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mean_m",
            value: mean_m,
            reason: "detected mean and efficiency must be positive",
        });
    }
    let arms = Arms::balanced(crate::detection::DetectorArm::ideal(eta));
    fit_mode_number_for(
        gamma0,
        mean_m / eta,
        &CollectionModel::matched(),
        &arms,
        true,
    )
}

/// General form of [`fit_mode_number`]: `area_mean` photons per coherence
/// area, arbitrary collection and detectors.
pub fn fit_mode_number_for(
    gamma0: f64,
    area_mean: f64,
    collection: &CollectionModel,
    arms: &Arms,
    corrected: bool,
) -> Result<f64> {
    if !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::InvalidParameter {
            name: "gamma0",
            value: gamma0,
            reason: "must lie in (0, 1)",
        });
    }
    collection.validate()?;
    arms.validate()?;
    ensure_nonneg("area_mean", area_mean)?;
    let dark = dark_variances(arms, corrected);
    let gamma = |modes: f64| {
        moments_from_law(AreaLaw::twin(modes, area_mean), collection, arms).gamma0(dark)
    };

    // Gamma(0) falls monotonically with the mode count; bisect in log space.
    let (mut lo, mut hi) = (FIT_BRACKET.0.ln(), FIT_BRACKET.1.ln());
    let (g_lo, g_hi) = (gamma(FIT_BRACKET.0), gamma(FIT_BRACKET.1));
    if !(gamma0 <= g_lo && gamma0 >= g_hi) {
        return Err(Error::Unattainable {
            target: gamma0,
            lo: FIT_BRACKET.0,
            hi: FIT_BRACKET.1,
        });
    }
    while hi.exp() - lo.exp() > FIT_TOLERANCE * lo.exp() {
        let mid = 0.5 * (lo + hi);
        if gamma(mid.exp()) > gamma0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Idler transmission `t_i` (signal fully transmitted) at which the matched
/// single-area beam reaches noise reduction `target_r`.
pub fn mismatch_for_r(target_r: f64, source: &SourceModel, arms: &Arms) -> Result<f64> {
    let r = |t_i: f64| -> Result<f64> {
        let c = CollectionModel::matched().with_transmission(1.0, t_i);
        Ok(twin_moments(source, &c, arms)?.r)
    };
    let (r_hi_t, r_lo_t) = (r(1.0)?, r(0.0)?);
    if !(target_r >= r_hi_t && target_r <= r_lo_t) {
        return Err(Error::Unattainable {
            target: target_r,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if r(mid)? > target_r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Noise reduction of a coherently seeded amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeededR {
    pub exact: f64,
    /// Large-seed approximation `1 - eta + eta / (2 |nu|^2)`.
    pub asymptote: f64,
}

/// `R = 1 - eta / (1 + alpha^2 / (2 nu2 (1 + alpha^2)))` for seed amplitude
/// `alpha` and amplifier gain `nu2 = |nu|^2`.
pub fn seeded_r(eta: f64, alpha: f64, nu2: f64) -> Result<SeededR> {
    ensure_unit("eta", eta)?;
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "seed amplitude must be non-negative",
        });
    }
    if !(nu2 > 0.0 && nu2.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "nu2",
            value: nu2,
            reason: "amplifier gain must be positive",
        });
    }
    let a2 = alpha * alpha;
    let seed_fraction = if a2.is_infinite() {
        1.0
    } else {
        a2 / (1.0 + a2)
    };
    Ok(SeededR {
        exact: 1.0 - eta / (1.0 + seed_fraction / (2.0 * nu2)),
        asymptote: 1.0 - eta + eta / (2.0 * nu2),
    })
}

/// Exact noiseless joint distribution `P(m_s, m_i)`, indexed `[m_s][m_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    size: usize,
    p: Vec<f64>,
}

impl JointPmf {
    pub fn n_max(&self) -> usize {
        self.size - 1
    }

    pub fn get(&self, m_s: usize, m_i: usize) -> f64 {
        self.p[m_s * self.size + m_i]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn marginal_s(&self) -> Vec<f64> {
        (0..self.size)
            .map(|s| self.p[s * self.size..(s + 1) * self.size].iter().sum())
            .collect()
    }

    pub fn marginal_i(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for row in self.p.chunks(self.size) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    /// `([mean_s, mean_i], [var_s, var_i], cov)`.
    pub fn moments(&self) -> ([f64; 2], [f64; 2], f64) {
        let (mut ms, mut mi, mut ss, mut ii, mut si) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for s in 0..self.size {
            for i in 0..self.size {
                let w = self.get(s, i);
                let (x, y) = (s as f64, i as f64);
                ms += w * x;
                mi += w * y;
                ss += w * x * x;
                ii += w * y * y;
                si += w * x * y;
            }
        }
        ([ms, mi], [ss - ms * ms, ii - mi * mi], si - ms * mi)
    }

    /// Idler law given `lo <= m_s <= hi`: `(pmf, success probability)`.
    pub fn conditional_idler(&self, lo: usize, hi: usize) -> Result<(Vec<f64>, f64)> {
        let mut out = vec![0.0; self.size];
        for s in lo..=hi.min(self.size - 1) {
            for (o, i) in out.iter_mut().zip(0..self.size) {
                *o += self.get(s, i);
            }
        }
        let success: f64 = out.iter().sum();
        if success <= 0.0 {
            return Err(Error::EmptySelection {
                lo: lo as f64,
                hi: hi as f64,
            });
        }
        out.iter_mut().for_each(|v| *v /= success);
        Ok((out, success))
    }

    /// Fano factor of the conditional idler law.
    pub fn conditional_fano(&self, lo: usize, hi: usize) -> Result<f64> {
        let (pmf, _) = self.conditional_idler(lo, hi)?;
        Ok(fano_of(&pmf))
    }
}

/// Fano factor of a pmf over `0..len`.
pub fn fano_of(pmf: &[f64]) -> f64 {
    let mean: f64 = pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let second: f64 = pmf
        .iter()
        .enumerate()
        .map(|(n, p)| (n * n) as f64 * p)
        .sum();
    (second - mean * mean) / mean
}

fn check_mass(mass: f64, n_max: usize) -> Result<()> {
    if 1.0 - mass > TRUNCATION_TOLERANCE {
        Err(Error::Truncation {
            mass: 1.0 - mass,
            n_max,
        })
    } else {
        Ok(())
    }
}

/// Exact joint detected-count table for a noiseless detector, by summing
/// binomial kernels over photon numbers.
pub fn joint_pmf_bruteforce(
    source: &SourceModel,
    collection: &CollectionModel,
    arms: &Arms,
    n_max: usize,
) -> Result<JointPmf> {
    if n_max > BRUTE_FORCE_LIMIT {
        return Err(Error::CostGuard {
            n_max,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    validate_all(source, collection, arms)?;
    let size = n_max + 1;
    let p_s = arms.signal.eta * collection.t_s;
    let p_i = arms.idler.eta * collection.t_i;
    let areas = collection.whole_modes;

    // Photon law of `areas` summed coherence areas in one arm.
    let area_pmf = || -> Vec<f64> {
        let modes = f64::from(source.mu) * f64::from(areas);
        match source.kind {
            _ if areas == 0 => poisson_pmf(0.0, n_max),
            SourceKind::CoherentPair => poisson_pmf(f64::from(areas) * source.mean(), n_max),
            _ => negative_binomial_pmf(modes, source.nbar, n_max),
        }
    };

    let mut p = vec![0.0; size * size];
    match source.kind {
        SourceKind::TwinSpontaneous => {
            let photons = area_pmf();
            check_mass(photons.iter().sum(), n_max)?;
            for (n, &w) in photons.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let row_s = binomial_row(n, p_s);
                let row_i = binomial_row(n, p_i);
                for (s, &bs) in row_s.iter().enumerate() {
                    let base = s * size;
                    for (i, &bi) in row_i.iter().enumerate() {
                        p[base + i] += w * bs * bi;
                    }
                }
            }
        }
        SourceKind::CoherentPair | SourceKind::IndependentThermal => {
            let photons = area_pmf();
            check_mass(photons.iter().sum(), n_max)?;
            let ds = detect_pmf(&photons, p_s)?;
            let di = detect_pmf(&photons, p_i)?;
            for (s, &a) in ds.iter().enumerate() {
                for (i, &b) in di.iter().enumerate() {
                    p[s * size + i] = a * b;
                }
            }
        }
    }

    let bg_s = poisson_pmf(arms.signal.eta * collection.bg_s, n_max);
    let bg_i = poisson_pmf(arms.idler.eta * collection.bg_i, n_max);
    if collection.bg_s > 0.0 {
        p = convolve_axis(&p, size, &bg_s, true);
    }
    if collection.bg_i > 0.0 {
        p = convolve_axis(&p, size, &bg_i, false);
    }
    let table = JointPmf { size, p };
    check_mass(table.total(), n_max)?;
    Ok(table)
}

/// Convolves the table with `kernel` along the signal (`along_s`) or idler
/// axis, truncating at the table edge.
fn convolve_axis(p: &[f64], size: usize, kernel: &[f64], along_s: bool) -> Vec<f64> {
    let mut out = vec![0.0; size * size];
    for s in 0..size {
        for i in 0..size {
            let w = p[s * size + i];
            if w == 0.0 {
                continue;
            }
            let (start, stride) = if along_s { (s, size) } else { (i, 1) };
            for (shift, &k) in kernel.iter().enumerate().take(size - start) {
                let idx = s * size + i + shift * stride;
                out[idx] += w * k;
            }
        }
    }
    out
}
