//! Equivalence classes, backend contract, baseline calibration, classification.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::de::Deserializer;
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::catalog::InstructionInstance;
use crate::error::BackendError;
use crate::oracle::{DataEnvironment, MicroarchProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EquivalenceClass {
    #[serde(rename = "ASSISTS.FP")]
    FpAssist,
    #[serde(rename = "ASSISTS.HARDWARE")]
    HwAssist,
    #[serde(rename = "ASSISTS.PAGE_FAULT")]
    PageFaultAssist,
    #[serde(rename = "ASSISTS.SSE_AVX_MIX")]
    SseAvxMix,
    #[serde(rename = "MACHINE_CLEARS.DISAMBIGUATION")]
    McDisambiguation,
    #[serde(rename = "MACHINE_CLEARS.MEMORY_ORDERING")]
    McMemoryOrdering,
    #[serde(rename = "MACHINE_CLEARS.SMC")]
    McSmc,
    #[serde(rename = "BR_MISP_RETIRED.ALL_BRANCHES")]
    BrMispredict,
    #[serde(rename = "TOPDOWN.BR_MISPREDICT_SLOTS")]
    TopdownBrMispredict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    MicrocodeAssist,
    MachineClear,
    BranchMisprediction,
}

impl EquivalenceClass {
    /// Row order of the counter table; also the tie-break order.
    pub const ALL: [EquivalenceClass; 9] = [
        EquivalenceClass::FpAssist,
        EquivalenceClass::HwAssist,
        EquivalenceClass::PageFaultAssist,
        EquivalenceClass::SseAvxMix,
        EquivalenceClass::McDisambiguation,
        EquivalenceClass::McMemoryOrdering,
        EquivalenceClass::McSmc,
        EquivalenceClass::BrMispredict,
        EquivalenceClass::TopdownBrMispredict,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn event_name(self) -> &'static str {
        match self {
            EquivalenceClass::FpAssist => "ASSISTS.FP",
            EquivalenceClass::HwAssist => "ASSISTS.HARDWARE",
            EquivalenceClass::PageFaultAssist => "ASSISTS.PAGE_FAULT",
            EquivalenceClass::SseAvxMix => "ASSISTS.SSE_AVX_MIX",
            EquivalenceClass::McDisambiguation => "MACHINE_CLEARS.DISAMBIGUATION",
            EquivalenceClass::McMemoryOrdering => "MACHINE_CLEARS.MEMORY_ORDERING",
            EquivalenceClass::McSmc => "MACHINE_CLEARS.SMC",
            EquivalenceClass::BrMispredict => "BR_MISP_RETIRED.ALL_BRANCHES",
            EquivalenceClass::TopdownBrMispredict => "TOPDOWN.BR_MISPREDICT_SLOTS",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EquivalenceClass::FpAssist => "FP_ASSIST",
            EquivalenceClass::HwAssist => "HW_ASSIST",
            EquivalenceClass::PageFaultAssist => "PAGE_FAULT_ASSIST",
            EquivalenceClass::SseAvxMix => "SSE_AVX_MIX",
            EquivalenceClass::McDisambiguation => "MC_DISAMBIGUATION",
            EquivalenceClass::McMemoryOrdering => "MC_MEMORY_ORDERING",
            EquivalenceClass::McSmc => "MC_SMC",
            EquivalenceClass::BrMispredict => "BR_MISPREDICT",
            EquivalenceClass::TopdownBrMispredict => "TOPDOWN_BR_MISPREDICT",
        }
    }

    pub fn category(self) -> Category {
        match self.index() {
            0..=3 => Category::MicrocodeAssist,
            4..=6 => Category::MachineClear,
            _ => Category::BranchMisprediction,
        }
    }
}

impl fmt::Display for EquivalenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.event_name())
    }
}

impl FromStr for EquivalenceClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EquivalenceClass::ALL
            .into_iter()
            .find(|c| c.event_name().eq_ignore_ascii_case(s) || c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown equivalence class `{s}`"))
    }
}

/// Dense per-class table, serialized as a map keyed by event name.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassMap<T>(pub [T; 9]);

impl<T: Copy + Default> ClassMap<T> {
    pub fn splat(v: T) -> Self {
        ClassMap([v; 9])
    }

    pub fn from_fn(f: impl FnMut(EquivalenceClass) -> T) -> Self {
        ClassMap(EquivalenceClass::ALL.map(f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EquivalenceClass, T)> + '_ {
        EquivalenceClass::ALL.into_iter().zip(self.0.iter().copied())
    }

    pub fn map<U: Copy + Default>(&self, mut f: impl FnMut(EquivalenceClass, T) -> U) -> ClassMap<U> {
        ClassMap::from_fn(|c| f(c, self[c]))
    }
}

impl<T> Index<EquivalenceClass> for ClassMap<T> {
    type Output = T;
    fn index(&self, c: EquivalenceClass) -> &T {
        &self.0[c.index()]
    }
}

impl<T> IndexMut<EquivalenceClass> for ClassMap<T> {
    fn index_mut(&mut self, c: EquivalenceClass) -> &mut T {
        &mut self.0[c.index()]
    }
}

impl<T: Serialize> Serialize for ClassMap<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(9))?;
        for (c, v) in EquivalenceClass::ALL.iter().zip(&self.0) {
            m.serialize_entry(c.event_name(), v)?;
        }
        m.end()
    }
}

impl<'de, T: Deserialize<'de> + Copy + Default> Deserialize<'de> for ClassMap<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<String, T> = BTreeMap::deserialize(d)?;
        let mut out = ClassMap::<T>::default();
        for (k, v) in raw {
            let c: EquivalenceClass = k.parse().map_err(serde::de::Error::custom)?;
            out[c] = v;
        }
        Ok(out)
    }
}

impl ClassMap<u64> {
    pub fn add(&mut self, other: &ClassMap<u64>) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }

    pub fn scaled(&self, k: u64) -> ClassMap<u64> {
        ClassMap(self.0.map(|v| v * k))
    }
}

// ------------------------------------------------------------------ backend contract

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capabilities {
    pub reentrant: bool,
    pub microarch_profile: MicroarchProfile,
    /// Fewest neutral samples accepted by calibration.
    pub min_calibration_samples: usize,
}

/// Raw counter readings for one run of a sequence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub counts: ClassMap<u64>,
    /// False when execution faulted or timed out; counts are then zero.
    pub valid: bool,
}

impl Measurement {
    pub fn invalid() -> Self {
        Measurement { counts: ClassMap::default(), valid: false }
    }
}

pub trait FitnessBackend: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    fn measure(
        &self,
        seq: &[InstructionInstance],
        reps: u32,
        env: &DataEnvironment,
    ) -> Result<Measurement, BackendError>;
}

// ------------------------------------------------------------------ observations

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitnessObservation {
    pub raw_counts: ClassMap<u64>,
    pub excess: ClassMap<f64>,
    pub fired: ClassMap<bool>,
    pub reps: u32,
    pub valid: bool,
}

impl FitnessObservation {
    pub fn zero(reps: u32, valid: bool) -> Self {
        FitnessObservation { reps, valid, ..Default::default() }
    }

    pub fn fired_classes(&self) -> Vec<EquivalenceClass> {
        self.fired.iter().filter(|&(_, f)| f).map(|(c, _)| c).collect()
    }

    pub fn any_fired(&self) -> bool {
        self.fired.0.iter().any(|&f| f)
    }
}

/// Noise floor; every quantity is expressed per repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineProfile {
    pub mean: ClassMap<f64>,
    pub stddev: ClassMap<f64>,
    pub threshold: ClassMap<f64>,
    pub k: f64,
    pub samples: usize,
    pub reps: u32,
}

impl BaselineProfile {
    pub fn zero() -> Self {
        BaselineProfile {
            mean: ClassMap::default(),
            stddev: ClassMap::default(),
            threshold: ClassMap::default(),
            k: 3.0,
            samples: 0,
            reps: 1,
        }
    }

    /// Builds a profile from neutral-kernel readings taken at `reps`.
    pub fn from_samples(samples: &[ClassMap<u64>], reps: u32, k: f64) -> Self {
        let n = samples.len();
        if n == 0 {
            return BaselineProfile { k, reps, ..Self::zero() };
        }
        let r = reps.max(1) as f64;
        let mut mean = ClassMap::<f64>::default();
        let mut stddev = ClassMap::<f64>::default();
        for c in EquivalenceClass::ALL {
            let xs: Vec<f64> = samples.iter().map(|s| s[c] as f64 / r).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let var = if n > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            mean[c] = m;
            stddev[c] = var.sqrt();
        }
        let threshold = ClassMap::from_fn(|c| (mean[c] + k * stddev[c]).max(0.0));
        BaselineProfile { mean, stddev, threshold, k, samples: n, reps }
    }

    pub fn observe(&self, m: &Measurement, reps: u32) -> FitnessObservation {
        if !m.valid {
            return FitnessObservation::zero(reps, false);
        }
        let r = reps.max(1) as f64;
        let excess = ClassMap::from_fn(|c| ((m.counts[c] as f64 - self.mean[c] * r).max(0.0)) / r);
        let fired = ClassMap::from_fn(|c| excess[c] > self.threshold[c]);
        FitnessObservation { raw_counts: m.counts, excess, fired, reps, valid: true }
    }
}

pub const DEFAULT_K: f64 = 3.0;

pub fn calibrate_baseline(
    backend: &dyn FitnessBackend,
    samples: usize,
    reps: u32,
    env: &DataEnvironment,
) -> Result<BaselineProfile, BackendError> {
    calibrate_baseline_k(backend, samples, reps, env, DEFAULT_K)
}

pub fn calibrate_baseline_k(
    backend: &dyn FitnessBackend,
    samples: usize,
    reps: u32,
    env: &DataEnvironment,
    k: f64,
) -> Result<BaselineProfile, BackendError> {
    let needed = backend.capabilities().min_calibration_samples;
    if samples < needed || (needed > 0 && samples == 0) {
        return Err(BackendError::TooFewSamples { needed, got: samples });
    }
    let mut readings = Vec::with_capacity(samples);
    for _ in 0..samples {
        let m = backend.measure(&[], reps, env)?;
        if m.valid {
            readings.push(m.counts);
        }
    }
    if needed > 0 && readings.len() < needed {
        return Err(BackendError::TooFewSamples { needed, got: readings.len() });
    }
    Ok(BaselineProfile::from_samples(&readings, reps, k))
}

pub fn evaluate(
    backend: &dyn FitnessBackend,
    seq: &[InstructionInstance],
    reps: u32,
    env: &DataEnvironment,
    baseline: &BaselineProfile,
) -> Result<FitnessObservation, BackendError> {
    let reps = reps.max(1);
    let m = backend.measure(seq, reps, env)?;
    Ok(baseline.observe(&m, reps))
}

/// Binds a backend to a baseline, rep count and data environment.
pub struct Evaluator<'a> {
    pub backend: &'a dyn FitnessBackend,
    pub baseline: BaselineProfile,
    pub reps: u32,
    pub env: DataEnvironment,
}

impl<'a> Evaluator<'a> {
    pub fn new(backend: &'a dyn FitnessBackend, baseline: BaselineProfile, reps: u32, env: DataEnvironment) -> Self {
        Evaluator { backend, baseline, reps: reps.max(1), env }
    }

    pub fn reentrant(&self) -> bool {
        self.backend.capabilities().reentrant
    }

    /// Backend failures become zero observations flagged invalid.
    pub fn evaluate(&self, seq: &[InstructionInstance]) -> FitnessObservation {
        evaluate(self.backend, seq, self.reps, &self.env, &self.baseline)
            .unwrap_or_else(|_| FitnessObservation::zero(self.reps, false))
    }

    pub fn try_evaluate(&self, seq: &[InstructionInstance]) -> Result<FitnessObservation, BackendError> {
        evaluate(self.backend, seq, self.reps, &self.env, &self.baseline)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: EquivalenceClass,
    pub fitness: f64,
}

pub fn classify(obs: &FitnessObservation) -> Option<Classification> {
    let mut best: Option<(EquivalenceClass, f64)> = None;
    let mut total = 0.0;
    for c in EquivalenceClass::ALL {
        if !obs.fired[c] {
            continue;
        }
        let e = obs.excess[c];
        total += e;
        // strict comparison keeps the earliest row on ties
        if best.is_none_or(|(_, b)| e > b) {
            best = Some((c, e));
        }
    }
    best.map(|(class, _)| Classification { class, fitness: total })
}

/// Fitness scalar of an observation (zero when nothing fired).
pub fn fitness_of(obs: &FitnessObservation) -> f64 {
    classify(obs).map_or(0.0, |c| c.fitness)
}
