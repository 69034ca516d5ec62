//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use log::{info, warn};
use serde::Serialize;
use twinbeam::analysis::{quantile_window, to_decibels};
use twinbeam::oracle::fit_mode_number_for;
use twinbeam::{
    conditional_distribution, difference_histogram, gamma_profile, noise_reduction, sweep_pump,
    twin_moments, AnalysisOptions, AnalysisReport, Arms, Classification, CollectionModel,
    DarkStats, DetectedShot, DetectorArm, Exec, Experiment, Provenance, ShotSeries,
};

use crate::config::{ExperimentConfig, WindowSpec};
use crate::failure::{Failure, Outcome};
use crate::io::{self, fmt17};
use crate::report::to_json;
use crate::{
    AnalysisArgs, AnalyzeArgs, ConditionalArgs, FitArgs, InputArgs, ModelArgs, SimulateArgs,
    SweepArgs,
};

/// Conditional Fano factor reported for the published measurement.
pub const PUBLISHED_CONDITIONAL_FANO: f64 = 0.062;

fn apply_model(config: &mut ExperimentConfig, m: &ModelArgs) -> Outcome<()> {
    if let Some(mu) = m.mu {
        config.source.mu = mu;
    }
    if let Some(nbar) = m.nbar {
        config.source.nbar = nbar;
    }
    if let Some(eta) = m.eta {
        config.arms.signal.eta = eta;
        config.arms.idler.eta = eta;
    }
    if let Some(sigma) = m.dark_sigma {
        config.arms.signal.dark_sigma = sigma;
        config.arms.idler.dark_sigma = sigma;
    }
    if let Some(n) = m.shots {
        config.run.shots = n;
    }
    if let Some(n) = m.dark_shots {
        config.run.dark_shots = n;
    }
    config.validate()?;
    if config.run.shots == 0 {
        return Err(Failure::config(anyhow!("shot count must be positive")));
    }
    Ok(())
}

fn options(config: &ExperimentConfig, a: &AnalysisArgs) -> Outcome<AnalysisOptions> {
    let mut o = config.options();
    if a.uncorrected {
        o.corrected = false;
    }
    if let Some(j) = a.j_max {
        o.j_max = j;
    }
    if let Some(w) = a.bin_width {
        o.bin_width = w;
    }
    if let Some(b) = a.batches {
        o.batches = b;
    }
    if let Some(eta) = a.eta {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Failure::config(anyhow!(
                "--eta must lie in [0, 1], got {eta}"
            )));
        }
        o.eta = Some(eta);
    }
    if !(o.bin_width > 0.0 && o.bin_width.is_finite()) {
        return Err(Failure::config(anyhow!("bin width must be positive")));
    }
    if o.batches < 2 {
        return Err(Failure::config(anyhow!("need at least 2 batches")));
    }
    Ok(o)
}

fn default_dark_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "shots".into(), |s| s.to_string_lossy().into_owned());
    let ext = out
        .extension()
        .map_or_else(|| "csv".into(), |e| e.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_dark.{ext}"))
}

#[derive(Serialize)]
struct SimulateSummary {
    seed: u64,
    shots: usize,
    dark_shots: usize,
    means: [f64; 2],
    expected_means: [f64; 2],
    dark_means: Option<[f64; 2]>,
}

pub fn simulate(config: &mut ExperimentConfig, args: &SimulateArgs, exec: Exec) -> Outcome<()> {
    apply_model(config, &args.model)?;
    let exp = config.experiment();
    let expected = exp.expected()?;
    let series = exp.simulate(config.run.shots, args.seed, exec)?;
    io::write_shots(&args.out, series.shots())?;
    let moments = series.moments().ok();
    let mut dark_means = None;
    if config.run.dark_shots > 0 {
        let dark = exp.dark_run(config.run.dark_shots, args.seed, exec)?;
        let path = args
            .dark_out
            .clone()
            .unwrap_or_else(|| default_dark_path(&args.out));
        io::write_shots(&path, dark.shots())?;
        dark_means = dark.moments().ok().map(|m| [m.mean_s, m.mean_i]);
        info!("wrote {} dark shots to {}", dark.len(), path.display());
    }
    info!("wrote {} shots to {}", series.len(), args.out.display());
    let summary = SimulateSummary {
        seed: args.seed,
        shots: series.len(),
        dark_shots: config.run.dark_shots,
        means: moments.map_or([series.shots()[0].m_s, series.shots()[0].m_i], |m| {
            [m.mean_s, m.mean_i]
        }),
        expected_means: expected.mean_m,
        dark_means,
    };
    io::emit(None, &to_json(&summary))
}

/// Loads the shot file and, when given, the dark file as attached statistics.
fn load_series(config: &ExperimentConfig, input: &InputArgs, exec: Exec) -> Outcome<ShotSeries> {
    let convert = |shots: Vec<DetectedShot>| -> Vec<DetectedShot> {
        if !input.microvolts {
            return shots;
        }
        let (s, i) = (config.arms.signal, config.arms.idler);
        shots
            .into_iter()
            .map(|d| DetectedShot {
                m_s: s.to_electrons(d.m_s),
                m_i: i.to_electrons(d.m_i),
            })
            .collect()
    };
    let shots = convert(io::read_shots(&input.shots)?);
    let mut series = ShotSeries::new(shots, Provenance::Measured).with_exec(exec);
    if let Some(path) = &input.dark {
        let dark = ShotSeries::new(convert(io::read_shots(path)?), Provenance::MeasuredDark)
            .with_exec(exec);
        if dark.len() != series.len() {
            warn!(
                "dark file has {} shots, shot file has {}; dark run is used for moments only",
                dark.len(),
                series.len()
            );
        }
        let stats =
            DarkStats::from_series(&dark).map_err(|e| Failure::from(e).context("dark file"))?;
        if input.dark_covariance {
            let cov = dark.moments()?.cov;
            info!("subtracting dark covariance {cov}");
            series = series.with_dark(stats.with_covariance(cov));
        } else {
            series = series.with_dark(stats);
        }
    }
    Ok(series)
}

fn require_dark(series: &ShotSeries, options: &AnalysisOptions) -> Outcome<()> {
    if options.corrected && series.dark().is_none() {
        return Err(Failure::data(anyhow!(
            "dark correction needs a dark file (--dark), or pass --uncorrected"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeOutput {
    #[serde(flatten)]
    report: AnalysisReport,
    dark_shots: Option<usize>,
    eta: Option<f64>,
    floor_linear: Option<f64>,
    nonclassical: bool,
}

pub fn analyze(config: &mut ExperimentConfig, args: &AnalyzeArgs, exec: Exec) -> Outcome<()> {
    let options = options(config, &args.analysis)?;
    let series = load_series(config, &args.input, exec)?;
    require_dark(&series, &options)?;
    let report = noise_reduction(&series, &options)?;
    to_decibels(report.r_linear)?;
    if let Some(path) = &args.gamma_csv {
        let rows: Vec<Vec<String>> = report
            .gamma
            .iter()
            .enumerate()
            .map(|(j, g)| vec![j.to_string(), fmt17(*g)])
            .collect();
        io::write_table(Some(path), &["j", "gamma"], &rows)?;
    }
    if let Some(path) = &args.pd_csv {
        let h = difference_histogram(&series, options.bin_width)?;
        io::write_table(
            Some(path),
            &["d", "count", "probability"],
            &io::histogram_rows(&h),
        )?;
    }
    let output = AnalyzeOutput {
        nonclassical: report.classification == Classification::Nonclassical,
        dark_shots: series.dark().map(|d| d.count),
        eta: options.eta,
        floor_linear: options.eta.map(|eta| 1.0 - eta),
        report,
    };
    io::emit(args.out.as_deref(), &to_json(&output))
}

const SWEEP_HEADER: [&str; 15] = [
    "intensity",
    "rho_s",
    "rho_i",
    "nbar",
    "whole_modes",
    "mean_detected",
    "mean_s",
    "mean_i",
    "r_linear",
    "r_std_error",
    "r_db",
    "r_oracle",
    "r_db_oracle",
    "snl_db",
    "floor_db",
];

pub fn sweep(config: &mut ExperimentConfig, args: &SweepArgs, exec: Exec) -> Outcome<()> {
    apply_model(config, &args.model)?;
    let analysis = AnalysisArgs {
        uncorrected: args.uncorrected,
        ..AnalysisArgs::default()
    };
    let options = options(config, &analysis)?;
    let mut grid = config.sweep.clone().unwrap_or_default();
    if let Some(i) = &args.intensities {
        grid.intensities = i.clone();
    }
    let points = sweep_pump(
        &grid.intensities,
        &grid.mapping,
        &config.source,
        &config.arms,
    )?;
    let floor_db = options.eta.and_then(|eta| to_decibels(1.0 - eta).ok());
    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        let exp = Experiment::new(p.source, p.collection, p.arms);
        let series = if options.corrected {
            exp.simulate_with_dark(
                config.run.shots,
                config.run.dark_shots.max(2),
                args.seed,
                exec,
            )?
        } else {
            exp.simulate(config.run.shots, args.seed, exec)?
        };
        let report = noise_reduction(&series, &options)?;
        let oracle = twin_moments(&p.source, &p.collection, &p.arms)?;
        info!("intensity {}: R = {}", p.pump_intensity, report.r_linear);
        let [ms, mi] = report.means;
        rows.push(vec![
            fmt17(p.pump_intensity),
            fmt17(p.rho_s),
            fmt17(p.rho_i),
            fmt17(p.source.nbar),
            p.collection.whole_modes.to_string(),
            fmt17(0.5 * (ms + mi)),
            fmt17(ms),
            fmt17(mi),
            fmt17(report.r_linear),
            fmt17(report.r_std_error),
            report.r_db.map_or_else(String::new, fmt17),
            fmt17(oracle.r),
            to_decibels(oracle.r).map_or_else(|_| String::new(), fmt17),
            fmt17(0.0),
            floor_db.map_or_else(String::new, fmt17),
        ]);
    }
    io::write_table(args.out.as_deref(), &SWEEP_HEADER, &rows)
}

#[derive(Serialize)]
struct ConditionalOutput {
    window: [f64; 2],
    shots: usize,
    retained: usize,
    success_probability: f64,
    corrected: bool,
    mean: f64,
    variance: f64,
    fano: f64,
    fano_std_error: f64,
    sub_poissonian: bool,
    eta: Option<f64>,
    /// `1 - eta`, the lowest Fano factor binomial detection allows.
    fano_floor: Option<f64>,
    /// Fano factor is at or above the floor within three standard errors.
    consistent_with_floor: Option<bool>,
    published_fano: f64,
    /// The published value lies below the detection floor.
    published_below_floor: Option<bool>,
}

pub fn conditional(
    config: &mut ExperimentConfig,
    args: &ConditionalArgs,
    exec: Exec,
) -> Outcome<()> {
    let options = options(config, &args.analysis)?;
    let series = load_series(config, &args.input, exec)?;
    require_dark(&series, &options)?;
    let spec = match (&args.window, args.success) {
        (Some(w), _) => WindowSpec::Range { lo: w[0], hi: w[1] },
        (None, Some(success)) => WindowSpec::Tail {
            upper_quantile: args.upper_quantile,
            success,
        },
        (None, None) => config.analysis.window.ok_or_else(|| {
            Failure::config(anyhow!("no window: pass --window LO HI or --success P"))
        })?,
    };
    let window = match spec {
        WindowSpec::Range { lo, hi } => (lo, hi),
        WindowSpec::Tail {
            upper_quantile,
            success,
        } => quantile_window(&series, upper_quantile, success)?,
    };
    let c = conditional_distribution(&series, window, &options)?;
    if let Some(path) = &args.hist_csv {
        io::write_table(
            Some(path),
            &["m_i", "count", "probability"],
            &io::histogram_rows(&c.histogram),
        )?;
    }
    let floor = options.eta.map(|eta| 1.0 - eta);
    let output = ConditionalOutput {
        window: c.window,
        shots: series.len(),
        retained: c.retained,
        success_probability: c.success_probability,
        corrected: options.corrected,
        mean: c.mean,
        variance: c.variance,
        fano: c.fano,
        fano_std_error: c.fano_std_error,
        sub_poissonian: c.is_sub_poissonian(),
        eta: options.eta,
        fano_floor: floor,
        consistent_with_floor: floor.map(|f| c.fano >= f - 3.0 * c.fano_std_error),
        published_fano: PUBLISHED_CONDITIONAL_FANO,
        published_below_floor: floor.map(|f| PUBLISHED_CONDITIONAL_FANO < f),
    };
    io::emit(args.out.as_deref(), &to_json(&output))
}

#[derive(Serialize)]
struct FitOutput {
    shots: usize,
    corrected: bool,
    gamma0: f64,
    means: [f64; 2],
    eta: [f64; 2],
    /// Photons per coherence area before detection.
    area_mean: f64,
    background: [f64; 2],
    mu: f64,
    nbar: f64,
}

/// Fits the mode number to the measured `Gamma(0)`. The weaker arm fixes the
/// correlated photon number; any excess in the other arm is treated as
/// uncorrelated background.
pub fn fit(config: &mut ExperimentConfig, args: &FitArgs, exec: Exec) -> Outcome<()> {
    let options = options(config, &args.analysis)?;
    let series = load_series(config, &args.input, exec)?;
    require_dark(&series, &options)?;
    let gamma0 = gamma_profile(&series, 0, options.corrected)?[0];
    let report = noise_reduction(
        &series,
        &AnalysisOptions {
            j_max: 0,
            ..options
        },
    )?;
    let mut arms = config.arms;
    if let Some(eta) = args.analysis.eta {
        arms.signal.eta = eta;
        arms.idler.eta = eta;
    }
    if options.corrected {
        arms = Arms::new(
            DetectorArm::ideal(arms.signal.eta),
            DetectorArm::ideal(arms.idler.eta),
        );
    }
    let eta = [arms.signal.eta, arms.idler.eta];
    if eta.iter().any(|&e| e <= 0.0) {
        return Err(Failure::config(anyhow!(
            "efficiencies must be positive to fit"
        )));
    }
    let photons = [report.means[0] / eta[0], report.means[1] / eta[1]];
    if photons.iter().any(|&p| p <= 0.0) {
        return Err(twinbeam::Error::ZeroMean.into());
    }
    let area_mean = photons[0].min(photons[1]);
    let background = [photons[0] - area_mean, photons[1] - area_mean];
    let collection = CollectionModel::matched().with_background(background[0], background[1]);
    let mu = fit_mode_number_for(gamma0, area_mean, &collection, &arms, options.corrected)?;
    let output = FitOutput {
        shots: series.len(),
        corrected: options.corrected,
        gamma0,
        means: report.means,
        eta,
        area_mean,
        background,
        mu,
        nbar: area_mean / mu,
    };
    io::emit(args.out.as_deref(), &to_json(&output))
}
