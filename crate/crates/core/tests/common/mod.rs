#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use specswarm::catalog::{Access, Catalog, InstructionInstance, Operand, OperandKind};
use specswarm::fitness::EquivalenceClass;
use specswarm::oracle::{DataEnvironment, MicroarchProfile};
use specswarm::load_catalog;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn full_catalog() -> Arc<Catalog> {
    static CAT: OnceLock<Arc<Catalog>> = OnceLock::new();
    CAT.get_or_init(|| Arc::new(load_catalog(repo_path("data/instructions.xml")).expect("reference catalog loads")))
        .clone()
}

pub fn mini_catalog() -> Arc<Catalog> {
    Arc::new(load_catalog(repo_path("data/fixtures/mini.xml")).expect("fixture loads"))
}

pub fn spec_by_iform(c: &Catalog, iform: &str) -> u32 {
    c.find(iform).unwrap_or_else(|| panic!("{iform} missing")).opcode_index
}

pub fn regs(c: &Catalog, iform: &str, r: &[u8]) -> InstructionInstance {
    let op = spec_by_iform(c, iform);
    c.instance(op, r.iter().map(|&x| Operand::Register(x)).collect()).unwrap()
}

// ------------------------------------------------------------------ reference rule checker

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prec {
    Sp,
    Dp,
}

/// What the reference checker needs to know about one instruction.
#[derive(Clone, Debug)]
pub struct RefInst {
    pub legacy_sse: bool,
    pub vex: bool,
    pub prec: Option<Prec>,
    pub convert: bool,
    pub fma: bool,
    pub aes: bool,
    pub reads: Vec<u8>,
    pub writes: Vec<u8>,
}

impl RefInst {
    fn simd(&self) -> bool {
        self.legacy_sse || self.vex
    }
}

/// Hand-written facts for the fixture mnemonics: (sse, vex, prec, convert, fma, aes, reads, writes)
/// with reads/writes given as operand positions.
pub fn mini_facts(mnemonic: &str) -> (bool, bool, Option<Prec>, bool, bool, bool, &'static [usize], &'static [usize]) {
    match mnemonic {
        "XORPS" => (true, false, Some(Prec::Sp), false, false, false, &[0, 1], &[0]),
        "VPADDD" => (false, true, None, false, false, false, &[1, 2], &[0]),
        "VADDPS" => (false, true, Some(Prec::Sp), false, false, false, &[1, 2], &[0]),
        "VMULPD" => (false, true, Some(Prec::Dp), false, false, false, &[1, 2], &[0]),
        "CVTPD2PS" => (true, false, None, true, false, false, &[1], &[0]),
        "VFMADD213PD" => (false, true, Some(Prec::Dp), false, true, false, &[0, 1, 2], &[0]),
        "AESDECLAST" => (true, false, None, false, false, true, &[0, 1], &[0]),
        "MULSS" => (true, false, Some(Prec::Sp), false, false, false, &[0, 1], &[0]),
        other => panic!("no reference facts for {other}"),
    }
}

pub fn mini_ref(c: &Catalog, inst: &InstructionInstance) -> RefInst {
    let spec = c.spec_of(inst);
    let (sse, vex, prec, convert, fma, aes, r, w) = mini_facts(&spec.mnemonic);
    let reg = |i: usize| match inst.operands[i] {
        Operand::Register(x) => x,
        ref o => panic!("unexpected operand {o:?}"),
    };
    RefInst {
        legacy_sse: sse,
        vex,
        prec,
        convert,
        fma,
        aes,
        reads: r.iter().map(|&i| reg(i)).collect(),
        writes: w.iter().map(|&i| reg(i)).collect(),
    }
}

/// Reference facts taken from catalog attributes; the dataflow is recomputed here.
pub fn catalog_ref(c: &Catalog, inst: &InstructionInstance) -> RefInst {
    let spec = c.spec_of(inst);
    let a = &spec.attributes;
    let mut reads = Vec::new();
    let mut writes = Vec::new();
    for (slot, op) in spec.slots.iter().zip(&inst.operands) {
        let vector = matches!(slot.kind, OperandKind::Xmm | OperandKind::Ymm | OperandKind::Zmm);
        if let (true, Operand::Register(r)) = (vector, op) {
            if matches!(slot.access, Access::Read | Access::ReadWrite) {
                reads.push(*r);
            }
            if matches!(slot.access, Access::Write | Access::ReadWrite) {
                writes.push(*r);
            }
        }
    }
    RefInst {
        legacy_sse: a.is_legacy_sse,
        vex: a.is_vex_or_evex,
        prec: if a.is_single_precision_fp {
            Some(Prec::Sp)
        } else if a.is_double_precision_fp {
            Some(Prec::Dp)
        } else {
            None
        },
        convert: a.is_precision_convert,
        fma: a.is_fma_family,
        aes: a.is_aes_family,
        reads,
        writes,
    }
}

fn gen12(p: MicroarchProfile) -> bool {
    matches!(p, MicroarchProfile::AlderLake | MicroarchProfile::SapphireRapids)
}

/// Index of the instruction that last wrote `r` before position `j`, if any.
fn last_writer(seq: &[RefInst], j: usize, r: u8) -> Option<usize> {
    (0..j).rev().find(|&i| seq[i].writes.contains(&r))
}

/// Quadratic re-statement of the four rules, returning the fired class set.
pub fn reference_fired(seq: &[RefInst], profile: MicroarchProfile, env: &DataEnvironment) -> BTreeSet<EquivalenceClass> {
    use EquivalenceClass::*;
    let mut out = BTreeSet::new();
    let n = seq.len();
    if gen12(profile) {
        for i in 0..n {
            for j in i + 1..n {
                let adjacent_simd = seq[i].simd() && seq[j].simd() && !(i + 1..j).any(|k| seq[k].simd());
                if adjacent_simd && seq[i].legacy_sse != seq[j].legacy_sse {
                    out.insert(McSmc);
                    out.insert(SseAvxMix);
                }
            }
        }
        for j in 0..n {
            for &r in &seq[j].reads {
                let Some(i) = last_writer(seq, j, r) else { continue };
                let (a, b) = (seq[i].prec, seq[j].prec);
                let mixed = a.is_some() && b.is_some() && a != b;
                if mixed && !(i + 1..j).any(|k| seq[k].convert) {
                    out.insert(HwAssist);
                    out.insert(McSmc);
                    out.insert(McMemoryOrdering);
                }
            }
        }
    }
    for x in seq {
        if x.fma && x.reads.iter().any(|r| env.denormal_registers.contains(r)) {
            out.insert(FpAssist);
        }
    }
    for j in 0..n {
        for &r in &seq[j].reads {
            let Some(i) = last_writer(seq, j, r) else { continue };
            let groomed = seq[i].reads.iter().chain(&seq[j].reads).any(|x| env.denormal_registers.contains(x));
            if seq[i].aes && seq[j].legacy_sse && seq[j].prec.is_some() && groomed {
                out.insert(FpAssist);
                out.insert(McSmc);
            }
        }
    }
    out
}

/// Every register assignment over `pool` for each slot of `opcode`.
pub fn all_register_instances(c: &Catalog, opcode: u32, pool: &[u8]) -> Vec<InstructionInstance> {
    let spec = c.by_opcode(opcode).unwrap();
    let mut acc: Vec<Vec<Operand>> = vec![vec![]];
    for _ in &spec.slots {
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                pool.iter().map(move |&r| {
                    let mut v = prefix.clone();
                    v.push(Operand::Register(r));
                    v
                })
            })
            .collect();
    }
    acc.into_iter().map(|ops| c.instance(opcode, ops).unwrap()).collect()
}

pub fn median(v: &[u64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_unstable();
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2] as f64
    } else {
        (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0
    }
}
