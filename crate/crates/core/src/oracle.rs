//! Rule-based simulated microarchitecture used as a deterministic fitness backend.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, InstructionInstance, InstructionSpec, Operand};
use crate::error::BackendError;
use crate::fitness::{
    BaselineProfile, Capabilities, ClassMap, EquivalenceClass, FitnessBackend, FitnessObservation, Measurement,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicroarchProfile {
    AlderLake,
    CometLake,
    SapphireRapids,
    IceLake,
}

impl MicroarchProfile {
    pub const ALL: [MicroarchProfile; 4] = [
        MicroarchProfile::AlderLake,
        MicroarchProfile::CometLake,
        MicroarchProfile::SapphireRapids,
        MicroarchProfile::IceLake,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MicroarchProfile::AlderLake => "alder_lake",
            MicroarchProfile::CometLake => "comet_lake",
            MicroarchProfile::SapphireRapids => "sapphire_rapids",
            MicroarchProfile::IceLake => "ice_lake",
        }
    }
}

impl fmt::Display for MicroarchProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MicroarchProfile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MicroarchProfile::ALL
            .into_iter()
            .find(|p| p.id() == s.trim().to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| format!("unknown microarchitecture profile `{s}`"))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataEnvironment {
    /// Vector register indices groomed with a denormal bit pattern.
    pub denormal_registers: BTreeSet<u8>,
    /// Byte pattern repeated across the scratch region.
    pub scratch_init: Vec<u8>,
}

impl DataEnvironment {
    pub fn clean() -> Self {
        DataEnvironment::default()
    }

    pub fn with_denormals(regs: impl IntoIterator<Item = u8>) -> Self {
        DataEnvironment { denormal_registers: regs.into_iter().collect(), scratch_init: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.denormal_registers.iter().find(|&&r| r > 15) {
            Some(r) => Err(format!("denormal register index {r} outside 0-15")),
            None => Ok(()),
        }
    }

    pub fn is_denormal(&self, reg: u8) -> bool {
        self.denormal_registers.contains(&reg)
    }
}

// ------------------------------------------------------------------ rules

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    SimdVectorIntermix,
    PrecisionIntermix,
    FmaDenormal,
    AesSseDenormal,
}

impl RuleId {
    pub const ALL: [RuleId; 4] =
        [RuleId::SimdVectorIntermix, RuleId::PrecisionIntermix, RuleId::FmaDenormal, RuleId::AesSseDenormal];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }
}

/// Static description of one rule. Window and rep figures are reporting metadata only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleMeta {
    pub id: RuleId,
    pub name: String,
    pub contributes: Vec<EquivalenceClass>,
    pub profiles: Vec<MicroarchProfile>,
    pub register_dependency: bool,
    pub window_size: u32,
    pub min_reps: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub rules: Vec<RuleMeta>,
}

impl Default for RuleTable {
    fn default() -> Self {
        use EquivalenceClass::*;
        use MicroarchProfile::*;
        let gen12 = vec![AlderLake, SapphireRapids];
        let all = MicroarchProfile::ALL.to_vec();
        RuleTable {
            rules: vec![
                RuleMeta {
                    id: RuleId::SimdVectorIntermix,
                    name: "SIMD-vector intermix".into(),
                    contributes: vec![McSmc, SseAvxMix],
                    profiles: gen12.clone(),
                    register_dependency: false,
                    window_size: 17,
                    min_reps: 1,
                },
                RuleMeta {
                    id: RuleId::PrecisionIntermix,
                    name: "precision intermix".into(),
                    contributes: vec![HwAssist, McSmc, McMemoryOrdering],
                    profiles: gen12,
                    register_dependency: true,
                    window_size: 20,
                    min_reps: 100,
                },
                RuleMeta {
                    id: RuleId::FmaDenormal,
                    name: "FMA denormal".into(),
                    contributes: vec![FpAssist],
                    profiles: all.clone(),
                    register_dependency: false,
                    window_size: 12,
                    min_reps: 32,
                },
                RuleMeta {
                    id: RuleId::AesSseDenormal,
                    name: "AES to SSE denormal".into(),
                    contributes: vec![FpAssist, McSmc],
                    profiles: all,
                    register_dependency: true,
                    window_size: 12,
                    min_reps: 32,
                },
            ],
        }
    }
}

impl RuleTable {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let t: RuleTable = toml::from_str(text).map_err(|e| e.to_string())?;
        for id in RuleId::ALL {
            if !t.rules.iter().any(|r| r.id == id) {
                return Err(format!("rule table lacks {id:?}"));
            }
        }
        Ok(t)
    }

    pub fn get(&self, id: RuleId) -> &RuleMeta {
        self.rules.iter().find(|r| r.id == id).expect("rule table is complete")
    }

    pub fn enabled(&self, id: RuleId, profile: MicroarchProfile) -> bool {
        self.get(id).profiles.contains(&profile)
    }

    fn per_firing(&self, id: RuleId) -> ClassMap<u64> {
        let mut m = ClassMap::default();
        for &c in &self.get(id).contributes {
            m[c] += 1;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Firing {
    /// Instruction indices that produced this firing.
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub rule: RuleId,
    pub fired: bool,
    pub firings: Vec<Firing>,
    pub per_firing: ClassMap<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleTrace {
    pub rules: Vec<RuleRecord>,
}

impl RuleTrace {
    pub fn is_empty(&self) -> bool {
        self.rules.iter().all(|r| !r.fired)
    }

    /// Counter totals for `reps` repetitions of the traced sequence.
    pub fn counts(&self, reps: u32) -> ClassMap<u64> {
        let mut out = ClassMap::default();
        for r in &self.rules {
            out.add(&r.per_firing.scaled(r.firings.len() as u64 * reps as u64));
        }
        out
    }

    pub fn fired_rules(&self) -> Vec<RuleId> {
        self.rules.iter().filter(|r| r.fired).map(|r| r.rule).collect()
    }

    pub fn record(&self, id: RuleId) -> Option<&RuleRecord> {
        self.rules.iter().find(|r| r.rule == id)
    }
}

// ------------------------------------------------------------------ dataflow helpers

fn vector_regs<'a>(
    spec: &'a InstructionSpec,
    ops: &'a [Operand],
    pick: impl Fn(crate::catalog::Access) -> bool + 'a,
) -> impl Iterator<Item = u8> + 'a {
    spec.slots.iter().zip(ops).filter_map(move |(s, o)| match o {
        Operand::Register(r) if s.kind.is_vector() && pick(s.access) => Some(*r),
        _ => None,
    })
}

fn reads(spec: &InstructionSpec, ops: &[Operand]) -> BTreeSet<u8> {
    vector_regs(spec, ops, |a| a.reads()).collect()
}

fn writes(spec: &InstructionSpec, ops: &[Operand]) -> BTreeSet<u8> {
    vector_regs(spec, ops, |a| a.writes()).collect()
}

struct Decoded<'a> {
    spec: &'a InstructionSpec,
    reads: BTreeSet<u8>,
    writes: BTreeSet<u8>,
}

/// RAW edges `(writer, reader, register)` with last-writer-wins per register index.
fn raw_edges(seq: &[Decoded]) -> Vec<(usize, usize, u8)> {
    let mut last: [Option<usize>; 16] = [None; 16];
    let mut out = Vec::new();
    for (j, d) in seq.iter().enumerate() {
        for &r in &d.reads {
            if let Some(i) = last[r as usize] {
                out.push((i, j, r));
            }
        }
        for &r in &d.writes {
            last[r as usize] = Some(j);
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Precision {
    Single,
    Double,
}

fn precision(spec: &InstructionSpec) -> Option<Precision> {
    if spec.attributes.is_single_precision_fp {
        Some(Precision::Single)
    } else if spec.attributes.is_double_precision_fp {
        Some(Precision::Double)
    } else {
        None
    }
}

pub fn trace_with(
    catalog: &Catalog,
    rules: &RuleTable,
    seq: &[InstructionInstance],
    profile: MicroarchProfile,
    env: &DataEnvironment,
) -> RuleTrace {
    let dec: Vec<Decoded> = seq
        .iter()
        .map(|i| {
            let spec = catalog.spec_of(i);
            Decoded { spec, reads: reads(spec, &i.operands), writes: writes(spec, &i.operands) }
        })
        .collect();
    let edges = raw_edges(&dec);
    let mut out = RuleTrace::default();
    let mut push = |id: RuleId, firings: Vec<Firing>| {
        if rules.enabled(id, profile) {
            out.rules.push(RuleRecord { rule: id, fired: !firings.is_empty(), firings, per_firing: rules.per_firing(id) });
        }
    };

    // rule 1: transitions between legacy SSE and VEX/EVEX in the SIMD subsequence
    let simd: Vec<usize> = (0..dec.len()).filter(|&i| dec[i].spec.is_simd()).collect();
    let r1 = simd
        .windows(2)
        .filter(|w| dec[w[0]].spec.attributes.is_legacy_sse != dec[w[1]].spec.attributes.is_legacy_sse)
        .map(|w| Firing { indices: vec![w[0], w[1]] })
        .collect();
    push(RuleId::SimdVectorIntermix, r1);

    // rule 2: RAW across precisions without a conversion in between
    let r2 = edges
        .iter()
        .filter(|&&(i, j, _)| {
            let (pw, pr) = (precision(dec[i].spec), precision(dec[j].spec));
            pw.is_some() && pr.is_some() && pw != pr && !(i + 1..j).any(|k| dec[k].spec.attributes.is_precision_convert)
        })
        .map(|&(i, j, _)| Firing { indices: vec![i, j] })
        .collect();
    push(RuleId::PrecisionIntermix, r2);

    // rule 3: FMA reading a groomed denormal register
    let r3 = (0..dec.len())
        .filter(|&i| dec[i].spec.attributes.is_fma_family && dec[i].reads.iter().any(|&r| env.is_denormal(r)))
        .map(|i| Firing { indices: vec![i] })
        .collect();
    push(RuleId::FmaDenormal, r3);

    // rule 4: AES result consumed by a legacy SSE floating-point instruction, denormal inputs
    let r4 = edges
        .iter()
        .filter(|&&(i, j, _)| {
            let (w, r) = (&dec[i], &dec[j]);
            w.spec.attributes.is_aes_family
                && r.spec.attributes.is_legacy_sse
                && precision(r.spec).is_some()
                && w.reads.iter().chain(&r.reads).any(|&x| env.is_denormal(x))
        })
        .map(|&(i, j, _)| Firing { indices: vec![i, j] })
        .collect();
    push(RuleId::AesSseDenormal, r4);
    out
}

pub fn trace(
    catalog: &Catalog,
    seq: &[InstructionInstance],
    profile: MicroarchProfile,
    env: &DataEnvironment,
) -> RuleTrace {
    trace_with(catalog, &RuleTable::default(), seq, profile, env)
}

/// Noiseless simulation; excess is counts per rep against an all-zero baseline.
pub fn simulate(
    catalog: &Catalog,
    seq: &[InstructionInstance],
    reps: u32,
    profile: MicroarchProfile,
    env: &DataEnvironment,
) -> FitnessObservation {
    let counts = trace(catalog, seq, profile, env).counts(reps);
    BaselineProfile::zero().observe(&Measurement { counts, valid: true }, reps)
}

// ------------------------------------------------------------------ backend

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub lambda: f64,
    pub seed: u64,
}

pub struct SimBackend {
    catalog: Arc<Catalog>,
    profile: MicroarchProfile,
    rules: RuleTable,
    noise: Option<(Poisson<f64>, Mutex<ChaCha8Rng>)>,
}

impl SimBackend {
    pub fn new(catalog: Arc<Catalog>, profile: MicroarchProfile) -> Self {
        SimBackend { catalog, profile, rules: RuleTable::default(), noise: None }
    }

    pub fn with_rules(mut self, rules: RuleTable) -> Self {
        self.rules = rules;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self, BackendError> {
        let dist = Poisson::new(noise.lambda)
            .map_err(|e| BackendError::Unavailable(format!("noise lambda {}: {e}", noise.lambda)))?;
        self.noise = Some((dist, Mutex::new(ChaCha8Rng::seed_from_u64(noise.seed))));
        Ok(self)
    }

    pub fn profile(&self) -> MicroarchProfile {
        self.profile
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn trace(&self, seq: &[InstructionInstance], env: &DataEnvironment) -> RuleTrace {
        trace_with(&self.catalog, &self.rules, seq, self.profile, env)
    }
}

impl FitnessBackend for SimBackend {
    fn capabilities(&self) -> Capabilities {
        // a shared noise stream would make results depend on evaluation order
        Capabilities { reentrant: self.noise.is_none(), microarch_profile: self.profile, min_calibration_samples: 0 }
    }

    fn measure(&self, seq: &[InstructionInstance], reps: u32, env: &DataEnvironment) -> Result<Measurement, BackendError> {
        for inst in seq {
            if self.catalog.by_opcode(inst.opcode).is_none() {
                return Err(crate::error::DecodeError::UnknownOpcode(inst.opcode).into());
            }
        }
        let mut counts = self.trace(seq, env).counts(reps);
        if let Some((dist, rng)) = &self.noise {
            let mut rng = rng.lock().expect("noise rng poisoned");
            for c in EquivalenceClass::ALL {
                counts[c] += dist.sample(&mut *rng) as u64;
            }
        }
        Ok(Measurement { counts, valid: true })
    }
}
