//! Random-walk series with planted sine-mixture motifs.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::metrics::Interval;
use crate::synth::seeds::rng_from;
use crate::TimeSeries;

/// Cumulative sum of i.i.d. standard normal steps.
pub fn random_walk(n: usize, seed: u64) -> TimeSeries {
    let mut rng = rng_from(seed);
    random_walk_with(n.max(1), &mut rng)
}

fn random_walk_with(n: usize, rng: &mut ChaCha8Rng) -> TimeSeries {
    let mut x = 0.0;
    let values = (0..n)
        .map(|_| {
            x += rng.sample::<f64, _>(StandardNormal);
            x
        })
        .collect();
    TimeSeries::new(values).expect("finite walk")
}

/// Shape `p(x) = sum_k A_k sin(alpha_k x + beta_k)` over five harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifSpec {
    pub length: usize,
    pub amplitudes: [f64; 5],
    pub frequencies: [f64; 5],
    pub phases: [f64; 5],
    /// Per-point uniform noise as a fraction of the instance's range.
    pub noise_fraction: f64,
}

impl MotifSpec {
    /// Draws amplitudes in [0, 10], frequencies in [-2, 2] and phases in
    /// [-pi, pi], redrawing the (measure-zero) all-zero amplitude case.
    pub fn random(length: usize, noise_fraction: f64, rng: &mut impl Rng) -> Self {
        loop {
            let mut spec = Self {
                length,
                amplitudes: [0.0; 5],
                frequencies: [0.0; 5],
                phases: [0.0; 5],
                noise_fraction,
            };
            for k in 0..5 {
                spec.amplitudes[k] = rng.gen_range(0.0..=10.0);
                spec.frequencies[k] = rng.gen_range(-2.0..=2.0);
                spec.phases[k] = rng.gen_range(-PI..=PI);
            }
            if spec.validate().is_ok() {
                return spec;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |v: &[f64; 5], lo: f64, hi: f64| v.iter().all(|x| (lo..=hi).contains(x));
        if self.length == 0
            || !in_range(&self.amplitudes, 0.0, 10.0)
            || !in_range(&self.frequencies, -2.0, 2.0)
            || !in_range(&self.phases, -PI, PI)
            || !(self.noise_fraction >= 0.0 && self.noise_fraction.is_finite())
        {
            return Err(Error::Config(format!("motif parameters out of range: {self:?}")));
        }
        if self.amplitudes.iter().all(|&a| a == 0.0) {
            return Err(Error::Config("motif has all-zero amplitudes".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> Vec<f64> {
        (0..self.length)
            .map(|x| {
                let x = x as f64;
                (0..5)
                    .map(|k| self.amplitudes[k] * (self.frequencies[k] * x + self.phases[k]).sin())
                    .sum()
            })
            .collect()
    }
}

/// One noisy instance of a motif.
pub fn render_motif(spec: &MotifSpec, rng: &mut impl Rng) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut p = spec.shape();
    let (lo, hi) = p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let amp = spec.noise_fraction * (hi - lo);
    if amp > 0.0 {
        for v in &mut p {
            *v += rng.gen_range(-amp..=amp);
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// A short and a long motif, two instances each, all disjoint.
    Independent,
    /// A long motif with two instances and a short motif with three, two of
    /// which sit inside the long instances.
    Correlation,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Independent => "independent",
            ScenarioKind::Correlation => "correlation",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(ScenarioKind::Independent),
            "correlation" => Ok(ScenarioKind::Correlation),
            other => Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotifRole {
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub motif: MotifRole,
    pub start: usize,
    /// Inclusive.
    pub end: usize,
}

impl PlantedInstance {
    pub fn interval(&self) -> Interval {
        Interval::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub instances: Vec<PlantedInstance>,
}

impl GroundTruth {
    pub fn intervals(&self, role: MotifRole) -> Vec<Interval> {
        self.instances
            .iter()
            .filter(|i| i.motif == role)
            .map(PlantedInstance::interval)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedScenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub l_util: usize,
    pub l_attack: usize,
    pub noise_fraction: f64,
    pub seed: u64,
}

impl PlantedScenario {
    pub fn new(kind: ScenarioKind, l_util: usize, l_attack: usize, seed: u64) -> Self {
        Self {
            kind,
            n: 10_000,
            l_util,
            l_attack,
            noise_fraction: 0.05,
            seed,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.l_util == 0 || self.l_attack <= self.l_util {
            return Err(Error::Config(format!(
                "need 0 < l_util < l_attack, got {} and {}",
                self.l_util, self.l_attack
            )));
        }
        let needed = match self.kind {
            ScenarioKind::Independent => 2 * self.l_util + 2 * self.l_attack + 3 * self.l_util,
            ScenarioKind::Correlation => 2 * self.l_attack + self.l_util + 2 * self.l_util,
        };
        if needed >= self.n {
            return Err(Error::Scenario(format!(
                "series of length {} cannot hold the planted instances ({needed} samples with gaps)",
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlantedSeries {
    pub series: TimeSeries,
    pub truth: GroundTruth,
    pub short_motif: MotifSpec,
    pub long_motif: MotifSpec,
}

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Random walk of `scenario.n` samples with the scenario's motifs planted.
pub fn generate(scenario: &PlantedScenario) -> Result<PlantedSeries> {
    scenario.validate()?;
    let mut rng = rng_from(scenario.seed);
    let walk = random_walk_with(scenario.n, &mut rng);
    plant_with(&walk, scenario, &mut rng)
}

/// Plants the scenario's motifs into `series` using the scenario seed.
pub fn plant(series: &TimeSeries, scenario: &PlantedScenario) -> Result<PlantedSeries> {
    scenario.validate()?;
    if series.len() != scenario.n {
        return Err(Error::Config(format!(
            "scenario expects {} samples, series has {}",
            scenario.n,
            series.len()
        )));
    }
    let mut rng = rng_from(scenario.seed);
    plant_with(series, scenario, &mut rng)
}

fn plant_with(series: &TimeSeries, sc: &PlantedScenario, rng: &mut ChaCha8Rng) -> Result<PlantedSeries> {
    let short_motif = MotifSpec::random(sc.l_util, sc.noise_fraction, rng);
    let long_motif = MotifSpec::random(sc.l_attack, sc.noise_fraction, rng);
    let instances = place(sc, rng)?;

    let mut values = series.values().to_vec();
    // Long instances first so that nested short instances overwrite them.
    for role in [MotifRole::Long, MotifRole::Short] {
        let spec = if role == MotifRole::Long { &long_motif } else { &short_motif };
        for inst in instances.iter().filter(|i| i.motif == role) {
            let shape = render_motif(spec, rng)?;
            splice(&mut values, inst.start, &shape);
        }
    }
    Ok(PlantedSeries {
        series: TimeSeries::new(values)?,
        truth: GroundTruth { instances },
        short_motif,
        long_motif,
    })
}

/// Replaces `values[start..]` with `shape`, shifted so its first sample
/// equals the value already at `start`.
fn splice(values: &mut [f64], start: usize, shape: &[f64]) {
    let offset = values[start] - shape[0];
    for (v, s) in values[start..start + shape.len()].iter_mut().zip(shape) {
        *v = s + offset;
    }
}

fn gap(a: &PlantedInstance, b: &PlantedInstance) -> usize {
    if a.end < b.start {
        b.start - a.end - 1
    } else if b.end < a.start {
        a.start - b.end - 1
    } else {
        0
    }
}

fn overlaps(a: &PlantedInstance, b: &PlantedInstance) -> bool {
    a.start <= b.end && b.start <= a.end
}

/// Placement rules: instances of distinct motifs are disjoint with at least
/// `l_util` samples between them (except the nested short instances of the
/// correlation scenario); instances of the same motif start at least
/// `2 * l_attack` apart.
fn compatible(sc: &PlantedScenario, placed: &[PlantedInstance], cand: &PlantedInstance) -> bool {
    placed.iter().all(|p| {
        if p.motif == cand.motif {
            p.start.abs_diff(cand.start) >= 2 * sc.l_attack && !overlaps(p, cand)
        } else {
            !overlaps(p, cand) && gap(p, cand) >= sc.l_util
        }
    })
}

fn draw(sc: &PlantedScenario, role: MotifRole, rng: &mut ChaCha8Rng) -> PlantedInstance {
    let len = match role {
        MotifRole::Short => sc.l_util,
        MotifRole::Long => sc.l_attack,
    };
    let start = rng.gen_range(0..=sc.n - len);
    PlantedInstance {
        motif: role,
        start,
        end: start + len - 1,
    }
}

fn place(sc: &PlantedScenario, rng: &mut ChaCha8Rng) -> Result<Vec<PlantedInstance>> {
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        if let Some(instances) = try_place(sc, rng) {
            return Ok(instances);
        }
    }
    Err(Error::Scenario(format!(
        "no valid placement for {} scenario (n={}, l_util={}, l_attack={}) after {MAX_PLACEMENT_ATTEMPTS} attempts",
        sc.kind.name(),
        sc.n,
        sc.l_util,
        sc.l_attack
    )))
}

fn try_place(sc: &PlantedScenario, rng: &mut ChaCha8Rng) -> Option<Vec<PlantedInstance>> {
    let mut placed: Vec<PlantedInstance> = Vec::new();
    let add = |role: MotifRole, placed: &mut Vec<PlantedInstance>, rng: &mut ChaCha8Rng| {
        for _ in 0..100 {
            let cand = draw(sc, role, rng);
            if compatible(sc, placed, &cand) {
                placed.push(cand);
                return true;
            }
        }
        false
    };
    match sc.kind {
        ScenarioKind::Independent => {
            for role in [MotifRole::Long, MotifRole::Long, MotifRole::Short, MotifRole::Short] {
                if !add(role, &mut placed, rng) {
                    return None;
                }
            }
        }
        ScenarioKind::Correlation => {
            for _ in 0..2 {
                if !add(MotifRole::Long, &mut placed, rng) {
                    return None;
                }
            }
            // The short motif occupies the same offset inside both long instances.
            let offset = rng.gen_range(0..=sc.l_attack - sc.l_util);
            let nested: Vec<PlantedInstance> = placed
                .iter()
                .map(|long| PlantedInstance {
                    motif: MotifRole::Short,
                    start: long.start + offset,
                    end: long.start + offset + sc.l_util - 1,
                })
                .collect();
            let mut free = None;
            for _ in 0..100 {
                let cand = draw(sc, MotifRole::Short, rng);
                let clear_of_long = placed.iter().all(|p| !overlaps(p, &cand) && gap(p, &cand) >= sc.l_util);
                let spaced = nested.iter().all(|s| s.start.abs_diff(cand.start) >= 2 * sc.l_attack);
                if clear_of_long && spaced {
                    free = Some(cand);
                    break;
                }
            }
            placed.extend(nested);
            placed.push(free?);
        }
    }
    placed.sort_by_key(|p| p.start);
    Some(placed)
}
