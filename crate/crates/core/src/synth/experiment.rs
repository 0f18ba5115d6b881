//! Scripted planted-motif experiments comparing sharing strategies.
//!
//! For every (scenario, attack length, trial) one planted series is generated;
//! each method then produces the artifact a modeler would receive (the plain
//! profile, the PatternHide profile, or the profile of a noise-perturbed
//! series). Both proposed attacks and the short-motif utility task run on
//! that artifact.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{run_attack, AttackConfig, ScoreVariant};
use crate::defense::{pattern_hide, DefenseConfig};
use crate::error::{Error, Result};
use crate::profile::compute_mp;
use crate::series::rolling_stats;
use crate::synth::generate::{generate, GroundTruth, MotifRole, PlantedScenario, ScenarioKind};
use crate::synth::metrics::{pair_detected, Interval, DETECTION_THRESHOLD};
use crate::synth::noise::add_gaussian_noise;
use crate::synth::seeds::derive_seed;
use crate::MatrixProfile;

/// What the data owner shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    ShareMp,
    SharePmp,
    /// Raw series standardized and perturbed with Gaussian noise of this variance.
    Noise(f64),
}

impl Method {
    fn seed_tag(self) -> u64 {
        match self {
            Method::ShareMp => 1,
            Method::SharePmp => 2,
            Method::Noise(v) => 3 ^ v.to_bits().rotate_left(8),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::ShareMp => f.write_str("share_mp"),
            Method::SharePmp => f.write_str("share_pmp"),
            Method::Noise(v) => write!(f, "noise:{v}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "share_mp" => Ok(Method::ShareMp),
            "share_pmp" => Ok(Method::SharePmp),
            _ => {
                let v = s
                    .strip_prefix("noise:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| *v >= 0.0 && v.is_finite())
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown method `{s}` (expected share_mp, share_pmp or noise:<variance>)"
                        ))
                    })?;
                Ok(Method::Noise(v))
            }
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

fn default_n() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenarios: Vec<ScenarioKind>,
    pub l_util: usize,
    pub l_attack_list: Vec<usize>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Attack histogram bucket width; defaults to the attack length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<usize>,
    /// Attack run tolerance; defaults to the attack length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<usize>,
    /// Defense perm length; defaults to `l_util / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm_length: Option<usize>,
    /// Attack length assumed by the defender when it differs from the attacker's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defender_l_attack: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() || self.l_attack_list.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("scenarios, l_attack_list and methods must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if let Some(&l) = self.l_attack_list.iter().find(|&&l| l <= self.l_util) {
            return Err(Error::Config(format!(
                "attack length {l} must exceed the utility length {}",
                self.l_util
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub location: bool,
    pub entropy: bool,
}

impl AttackOutcome {
    pub fn get(&self, variant: ScoreVariant) -> bool {
        match variant {
            ScoreVariant::Location => self.location,
            ScoreVariant::Entropy => self.entropy,
            ScoreVariant::DistSum => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: ScenarioKind,
    pub l_attack: usize,
    pub method: Method,
    pub trial: usize,
    /// Seed of the planted series, shared by every method of this trial.
    pub data_seed: u64,
    /// Seed of the method's own randomness (defense thresholds or noise).
    pub method_seed: u64,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub attack_success: AttackOutcome,
    pub utility_success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: ScenarioKind,
    pub l_attack: usize,
    pub method: Method,
    pub attack_variant: ScoreVariant,
    pub attack_rate: f64,
    pub utility_rate: f64,
    /// Valid trials contributing to the rates.
    pub trials: usize,
    pub invalid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentReport {
    pub fn aggregate(&self, scenario: ScenarioKind, l_attack: usize, method: Method, variant: ScoreVariant) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| {
            a.scenario == scenario && a.l_attack == l_attack && a.method == method && a.attack_variant == variant
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Summary CSV: scenario, l_attack, method, attack_variant, attack_rate, utility_rate, trials.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["scenario", "l_attack", "method", "attack_variant", "attack_rate", "utility_rate", "trials"])
            .map_err(csv_err)?;
        for a in &self.aggregates {
            w.write_record([
                a.scenario.name().to_string(),
                a.l_attack.to_string(),
                a.method.to_string(),
                a.attack_variant.to_string(),
                format!("{:.4}", a.attack_rate),
                format!("{:.4}", a.utility_rate),
                a.trials.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Outcome of one attack/utility evaluation on a shared profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub attack_success: AttackOutcome,
    pub utility_success: bool,
    pub attack_windows: [[Interval; 2]; 2],
    pub utility_pair: [Interval; 2],
}

/// Runs both proposed attacks against the long motif and the motif-pair
/// utility task (global distance minimum and its neighbor) against the short
/// motif.
pub fn evaluate(
    mp: &MatrixProfile,
    truth: &GroundTruth,
    l_attack: usize,
    bin_width: Option<usize>,
    tolerance: Option<usize>,
) -> Result<Evaluation> {
    let long = truth.intervals(MotifRole::Long);
    let short = truth.intervals(MotifRole::Short);
    let mut attack_success = AttackOutcome::default();
    let mut attack_windows = [[Interval::new(0, 0); 2]; 2];
    for (k, variant) in ScoreVariant::PROPOSED.into_iter().enumerate() {
        let mut cfg = AttackConfig::new(l_attack, variant);
        if let Some(b) = bin_width {
            cfg = cfg.with_bin_width(b);
        }
        if let Some(t) = tolerance {
            cfg = cfg.with_tolerance(t);
        }
        let r = run_attack(mp, &cfg)?;
        let pred = [Interval::with_len(r.idx1, l_attack), Interval::with_len(r.idx2, l_attack)];
        let hit = pair_detected(pred, &long, DETECTION_THRESHOLD);
        match variant {
            ScoreVariant::Location => attack_success.location = hit,
            _ => attack_success.entropy = hit,
        }
        attack_windows[k] = pred;
    }
    let i = mp.argmin();
    let l = mp.window();
    let utility_pair = [Interval::with_len(i, l), Interval::with_len(mp.mpi()[i], l)];
    Ok(Evaluation {
        attack_success,
        utility_success: pair_detected(utility_pair, &short, DETECTION_THRESHOLD),
        attack_windows,
        utility_pair,
    })
}

fn scenario_tag(kind: ScenarioKind) -> u64 {
    match kind {
        ScenarioKind::Independent => 1,
        ScenarioKind::Correlation => 2,
    }
}

/// Seed of the planted series for one trial; independent of the method.
pub fn trial_data_seed(master: u64, kind: ScenarioKind, l_attack: usize, trial: usize) -> u64 {
    derive_seed(&[master, scenario_tag(kind), l_attack as u64, trial as u64])
}

pub fn method_seed(data_seed: u64, method: Method) -> u64 {
    derive_seed(&[data_seed, method.seed_tag()])
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_progress(cfg, |_, _| {})
}

/// Like [`run_experiment`], calling `progress(done, total)` after each trial.
/// Trials run in parallel; the report is ordered by scenario, attack length,
/// method and trial regardless of completion order.
pub fn run_experiment_with_progress<F>(cfg: &ExperimentConfig, progress: F) -> Result<ExperimentReport>
where
    F: Fn(usize, usize) + Sync,
{
    cfg.validate()?;
    let units: Vec<(ScenarioKind, usize, usize)> = cfg
        .scenarios
        .iter()
        .flat_map(|&s| {
            cfg.l_attack_list
                .iter()
                .flat_map(move |&l| (0..cfg.trials).map(move |t| (s, l, t)))
        })
        .collect();
    let done = AtomicUsize::new(0);
    let total = units.len();
    let mut records: Vec<TrialRecord> = units
        .par_iter()
        .flat_map_iter(|&(kind, l_attack, trial)| {
            let recs = run_trial(cfg, kind, l_attack, trial);
            progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
            recs
        })
        .collect();

    let method_rank = |m: &Method| cfg.methods.iter().position(|x| x == m).unwrap_or(usize::MAX);
    let scenario_rank = |s: &ScenarioKind| cfg.scenarios.iter().position(|x| x == s).unwrap_or(usize::MAX);
    let attack_rank = |l: &usize| cfg.l_attack_list.iter().position(|x| x == l).unwrap_or(usize::MAX);
    records.sort_by_key(|r| (scenario_rank(&r.scenario), attack_rank(&r.l_attack), method_rank(&r.method), r.trial));

    let mut aggregates = Vec::new();
    for &scenario in &cfg.scenarios {
        for &l_attack in &cfg.l_attack_list {
            for &method in &cfg.methods {
                let group: Vec<&TrialRecord> = records
                    .iter()
                    .filter(|r| r.scenario == scenario && r.l_attack == l_attack && r.method == method)
                    .collect();
                let valid: Vec<&&TrialRecord> = group.iter().filter(|r| r.valid).collect();
                let rate = |f: &dyn Fn(&TrialRecord) -> bool| {
                    if valid.is_empty() {
                        0.0
                    } else {
                        valid.iter().filter(|r| f(r)).count() as f64 / valid.len() as f64
                    }
                };
                let utility_rate = rate(&|r| r.utility_success);
                for variant in ScoreVariant::PROPOSED {
                    aggregates.push(AggregateRow {
                        scenario,
                        l_attack,
                        method,
                        attack_variant: variant,
                        attack_rate: rate(&|r| r.attack_success.get(variant)),
                        utility_rate,
                        trials: valid.len(),
                        invalid: group.len() - valid.len(),
                    });
                }
            }
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        trials: records,
        aggregates,
    })
}

fn run_trial(cfg: &ExperimentConfig, kind: ScenarioKind, l_attack: usize, trial: usize) -> Vec<TrialRecord> {
    let data_seed = trial_data_seed(cfg.master_seed, kind, l_attack, trial);
    let scenario = PlantedScenario::new(kind, cfg.l_util, l_attack, data_seed).with_n(cfg.n);
    let planted = generate(&scenario);
    let mut raw_mp: Option<Result<MatrixProfile>> = None;

    cfg.methods
        .iter()
        .map(|&method| {
            let mseed = method_seed(data_seed, method);
            let outcome = planted.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                let shared = match method {
                    Method::ShareMp | Method::SharePmp => {
                        let mp = raw_mp
                            .get_or_insert_with(|| compute_mp(&p.series, cfg.l_util))
                            .as_ref()
                            .map_err(|e| e.to_string())?;
                        if method == Method::ShareMp {
                            mp.clone()
                        } else {
                            let mut dcfg = DefenseConfig::new(cfg.l_util, cfg.defender_l_attack.unwrap_or(l_attack), mseed);
                            if let Some(perm) = cfg.perm_length {
                                dcfg = dcfg.with_perm_length(perm);
                            }
                            pattern_hide(&p.series, mp, &dcfg).map_err(|e| e.to_string())?.pmp
                        }
                    }
                    Method::Noise(var) => {
                        let noisy = add_gaussian_noise(&p.series, var, mseed).map_err(|e| e.to_string())?;
                        if rolling_stats(&noisy, cfg.l_util).map_err(|e| e.to_string())?.has_degenerate() {
                            return Err("degenerate windows in perturbed series".to_string());
                        }
                        compute_mp(&noisy, cfg.l_util).map_err(|e| e.to_string())?
                    }
                };
                evaluate(&shared, &p.truth, l_attack, cfg.bin_width, cfg.tolerance).map_err(|e| e.to_string())
            });
            let (valid, error, attack_success, utility_success) = match outcome {
                Ok(e) => (true, None, e.attack_success, e.utility_success),
                Err(msg) => (false, Some(msg), AttackOutcome::default(), false),
            };
            TrialRecord {
                scenario: kind,
                l_attack,
                method,
                trial,
                data_seed,
                method_seed: mseed,
                valid,
                error,
                attack_success,
                utility_success,
            }
        })
        .collect()
}
