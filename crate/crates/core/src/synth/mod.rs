//! Planted-motif benchmark: data generation, perturbation baselines, metrics
//! and the experiment harness.

pub mod experiment;
pub mod generate;
pub mod metrics;
pub mod noise;
pub mod seeds;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, Method, TrialRecord};
pub use generate::{generate, plant, GroundTruth, MotifRole, PlantedScenario, PlantedSeries, ScenarioKind};
pub use metrics::{jaccard, pair_detected, Interval, DETECTION_THRESHOLD};
pub use noise::add_gaussian_noise;
