//! Simulation and estimation toolkit for mesoscopic twin-beam photodetection.
//!
//! The pipeline draws per-pulse photon numbers from a multimode
//! parametric-downconversion source ([`source`]), passes them through a
//! pinhole collection model ([`collection`]) and a detector model with
//! quantum efficiency and electronic noise ([`detection`]), and estimates
//! correlation, noise reduction and Fano factors from the resulting records
//! ([`analysis`]). [`oracle`] holds the closed forms and exact tables used to
//! check every sampler and estimator.
//!
//! Shot `k` of a run is generated from its own random substream, so results
//! are identical with and without the `parallel` feature.

pub mod analysis;
pub mod collection;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod reduce;
pub mod rng;
pub mod source;

pub use analysis::{
    conditional_distribution, difference_histogram, gamma_profile, marginal_fano, noise_reduction,
    AnalysisOptions, AnalysisReport, Arm, Classification, ConditionalResult, DarkStats, Histogram,
    Provenance, ShotSeries,
};
pub use collection::{apply_collection, sweep_pump, CollectionModel, PumpMapping, PumpSweepPoint};
pub use detection::{detect_pmf, detect_shot, thin, Arms, DetectedShot, DetectorArm};
pub use error::{Error, Result};
pub use experiment::Experiment;
pub use oracle::{
    fit_mode_number, gamma0_expected, joint_pmf_bruteforce, seeded_r, twin_moments, MomentSet,
};
pub use rng::Exec;
pub use source::{photon_pmf, sample_shots, PhotonShot, SourceKind, SourceModel};
