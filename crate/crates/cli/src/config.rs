//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use twinbeam::{AnalysisOptions, Arms, CollectionModel, Experiment, PumpMapping, SourceModel};

use crate::failure::{Failure, Outcome};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "TWINBEAM_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceModel,
    #[serde(default)]
    pub collection: CollectionModel,
    pub arms: Arms,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub shots: usize,
    pub dark_shots: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            shots: 100_000,
            dark_shots: 100_000,
        }
    }
}

/// Conditioning window on the signal count: explicit bounds or a tail
/// quantile window retaining a target fraction of shots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum WindowSpec {
    Range { lo: f64, hi: f64 },
    Tail { upper_quantile: f64, success: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub j_max: usize,
    pub corrected: bool,
    pub bin_width: f64,
    pub batches: usize,
    pub window: Option<WindowSpec>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let o = AnalysisOptions::default();
        AnalysisConfig {
            j_max: o.j_max,
            corrected: o.corrected,
            bin_width: o.bin_width,
            batches: o.batches,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub intensities: Vec<f64>,
    #[serde(default)]
    pub mapping: PumpMapping,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let exp = Experiment::operating_point();
        ExperimentConfig {
            source: exp.source,
            collection: exp.collection,
            arms: exp.arms,
            run: RunConfig::default(),
            analysis: AnalysisConfig::default(),
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Outcome<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(Failure::config)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path`, or returns the built-in operating point when `None`.
    pub fn load(path: Option<&Path>) -> Outcome<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::config(e).context(format!("reading {}", p.display())))?;
                Self::from_json(&text).map_err(|e| e.context(format!("in {}", p.display())))
            }
        }
    }

    pub fn experiment(&self) -> Experiment {
        Experiment::new(self.source, self.collection, self.arms)
    }

    pub fn validate(&self) -> Outcome<()> {
        self.experiment().validate()?;
        let a = &self.analysis;
        if !(a.bin_width > 0.0 && a.bin_width.is_finite()) {
            return Err(Failure::config(anyhow::anyhow!(
                "analysis.bin_width must be positive"
            )));
        }
        if a.batches < 2 {
            return Err(Failure::config(anyhow::anyhow!(
                "analysis.batches must be at least 2"
            )));
        }
        if let Some(sweep) = &self.sweep {
            sweep.mapping.validate()?;
            if sweep.intensities.is_empty() {
                return Err(twinbeam::Error::EmptySweep.into());
            }
        }
        Ok(())
    }

    /// Analysis options; `eta` is the mean of the two arms' efficiencies.
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            j_max: self.analysis.j_max,
            corrected: self.analysis.corrected,
            bin_width: self.analysis.bin_width,
            eta: Some(0.5 * (self.arms.signal.eta + self.arms.idler.eta)),
            batches: self.analysis.batches,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"source": {"mu": 3, "nbar": 1.0, "colour": 1},
                       "arms": {"signal": {"eta": 0.5}, "idler": {"eta": 0.5}}}"#;
        let err = ExperimentConfig::from_json(text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let text = r#"{"source": {"mu": 3, "nbar": 1.0},
                       "arms": {"signal": {"eta": 0.5}, "idler": {"eta": 0.5}},
                       "runs": {}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let text = r#"{"source": {"mu": 3, "nbar": 1.0},
                       "arms": {"signal": {"eta": 0.5}, "idler": {"eta": 0.7}},
                       "analysis": {"window": {"tail": {"upper_quantile": 0.99, "success": 0.01}}}}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.collection, CollectionModel::matched());
        assert_eq!(c.run, RunConfig::default());
        assert!((c.options().eta.unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let text = r#"{"source": {"mu": 0, "nbar": 1.0},
                       "arms": {"signal": {"eta": 0.5}, "idler": {"eta": 0.5}}}"#;
        assert_eq!(
            ExperimentConfig::from_json(text).unwrap_err().exit_code(),
            2
        );
        let text = r#"{"source": {"mu": 1, "nbar": 1.0},
                       "arms": {"signal": {"eta": 1.5}, "idler": {"eta": 0.5}}}"#;
        assert_eq!(
            ExperimentConfig::from_json(text).unwrap_err().exit_code(),
            2
        );
    }

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }
}
