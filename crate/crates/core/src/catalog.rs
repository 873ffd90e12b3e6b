//! Instruction catalog ingestion, pools and operand sampling.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CatalogError;

/// Immediates are drawn from this set only.
pub const IMMEDIATE_VALUES: [u8; 4] = [0x00, 0x01, 0x7f, 0xff];

/// Number of 64-byte cells in the scratch region addressed by memory slots.
pub const SCRATCH_SLOTS: u8 = 16;

pub const MAX_SLOTS: usize = 5;

const GPR64_NAMES: [&str; 16] = [
    "rax", "rcx", "rdx", "rbx", "rsp", "rbp", "rsi", "rdi", "r8", "r9", "r10", "r11", "r12",
    "r13", "r14", "r15",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperandKind {
    Xmm,
    Ymm,
    Zmm,
    Gpr64,
    Mask,
    Immediate8,
    Memory,
}

impl OperandKind {
    pub fn is_vector(self) -> bool {
        matches!(self, OperandKind::Xmm | OperandKind::Ymm | OperandKind::Zmm)
    }

    /// Number of legal values an operand of this kind may take.
    pub fn domain_size(self) -> usize {
        match self {
            OperandKind::Mask => 8,
            OperandKind::Immediate8 => IMMEDIATE_VALUES.len(),
            _ => 16,
        }
    }

    /// Bits this kind occupies in a position code.
    pub fn field_bits(self) -> u32 {
        match self {
            OperandKind::Immediate8 => 8,
            _ => 4,
        }
    }

    /// Two kinds are interchangeable in a code when they accept the same raw field values.
    pub fn same_domain(self, other: OperandKind) -> bool {
        use OperandKind::*;
        let class = |k| match k {
            Xmm | Ymm | Zmm | Gpr64 => 0,
            Mask => 1,
            Immediate8 => 2,
            Memory => 3,
        };
        class(self) == class(other)
    }

    pub fn register_name(self, index: u8) -> Option<String> {
        match self {
            OperandKind::Xmm => Some(format!("xmm{index}")),
            OperandKind::Ymm => Some(format!("ymm{index}")),
            OperandKind::Zmm => Some(format!("zmm{index}")),
            OperandKind::Mask => Some(format!("k{index}")),
            OperandKind::Gpr64 => GPR64_NAMES.get(index as usize).map(|s| s.to_string()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Access {
    Read,
    Write,
    ReadWrite,
}

impl Access {
    pub fn reads(self) -> bool {
        matches!(self, Access::Read | Access::ReadWrite)
    }
    pub fn writes(self) -> bool {
        matches!(self, Access::Write | Access::ReadWrite)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperandSlot {
    pub kind: OperandKind,
    pub width: u16,
    pub access: Access,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attributes {
    pub is_legacy_sse: bool,
    pub is_vex_or_evex: bool,
    pub is_single_precision_fp: bool,
    pub is_double_precision_fp: bool,
    pub is_precision_convert: bool,
    pub is_fma_family: bool,
    pub is_aes_family: bool,
    pub ring3_executable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstructionSpec {
    pub mnemonic: String,
    pub extension: String,
    pub iform: String,
    pub slots: Vec<OperandSlot>,
    pub opcode_index: u32,
    pub attributes: Attributes,
    /// Index of the slot acting as an AVX-512 writemask, rendered as `{kN}`.
    pub writemask: Option<usize>,
    pub zeroing: bool,
    pub rounding: Option<String>,
    /// Size keyword per memory slot, e.g. `xmmword ptr`.
    pub memory_prefix: Vec<Option<String>>,
}

impl InstructionSpec {
    /// Total operand-field width (the shift applied to the opcode in a code).
    pub fn operand_bits(&self) -> u32 {
        self.slots.iter().map(|s| s.kind.field_bits()).sum()
    }

    pub fn has_vector_slot(&self) -> bool {
        self.slots.iter().any(|s| s.kind.is_vector())
    }

    pub fn is_simd(&self) -> bool {
        self.attributes.is_legacy_sse || self.attributes.is_vex_or_evex
    }

    /// Slot layouts are compatible when every field accepts the other's values.
    pub fn layout_compatible(&self, other: &InstructionSpec) -> bool {
        self.slots.len() == other.slots.len()
            && self
                .slots
                .iter()
                .zip(&other.slots)
                .all(|(a, b)| a.kind.same_domain(b.kind))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Operand {
    Register(u8),
    Immediate(u8),
    Scratch(u8),
}

impl Operand {
    /// Raw field value stored in a position code.
    pub fn field_value(self) -> u64 {
        match self {
            Operand::Register(r) => r as u64,
            Operand::Immediate(v) => v as u64,
            Operand::Scratch(s) => s as u64,
        }
    }

    pub fn fits(self, slot: &OperandSlot) -> bool {
        match (self, slot.kind) {
            (Operand::Immediate(v), OperandKind::Immediate8) => IMMEDIATE_VALUES.contains(&v),
            (Operand::Scratch(s), OperandKind::Memory) => s < SCRATCH_SLOTS,
            (Operand::Register(r), k) if k != OperandKind::Immediate8 && k != OperandKind::Memory => {
                (r as usize) < k.domain_size()
            }
            _ => false,
        }
    }

    pub fn from_field(kind: OperandKind, raw: u64) -> Option<Operand> {
        let op = match kind {
            OperandKind::Immediate8 => Operand::Immediate(u8::try_from(raw).ok()?),
            OperandKind::Memory => Operand::Scratch(u8::try_from(raw).ok()?),
            _ => Operand::Register(u8::try_from(raw).ok()?),
        };
        let probe = OperandSlot { kind, width: 0, access: Access::Read };
        op.fits(&probe).then_some(op)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstructionInstance {
    pub opcode: u32,
    pub operands: Vec<Operand>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub entries: usize,
    pub loaded: usize,
    pub not_ring3: usize,
    pub unparseable: usize,
    pub skip_reasons: BTreeMap<String, usize>,
}

#[derive(Debug, PartialEq)]
pub struct Catalog {
    specs: Vec<InstructionSpec>,
    by_extension: BTreeMap<String, Vec<usize>>,
    summary: LoadSummary,
    digest: String,
}

impl Catalog {
    pub fn from_specs(raw: Vec<InstructionSpec>, summary: LoadSummary, digest: String) -> Result<Self, CatalogError> {
        if raw.is_empty() {
            return Err(CatalogError::Empty);
        }
        let mut specs = raw;
        let mut by_extension: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in specs.iter_mut().enumerate() {
            s.opcode_index = i as u32;
            by_extension.entry(s.extension.clone()).or_default().push(i);
        }
        Ok(Catalog { specs, by_extension, summary, digest })
    }

    pub fn specs(&self) -> &[InstructionSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn by_opcode(&self, opcode: u32) -> Option<&InstructionSpec> {
        self.specs.get(opcode as usize)
    }

    pub fn by_extension(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.by_extension
    }

    pub fn extensions(&self) -> impl Iterator<Item = &str> {
        self.by_extension.keys().map(|s| s.as_str())
    }

    pub fn summary(&self) -> &LoadSummary {
        &self.summary
    }

    /// SHA-256 of the source file bytes.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn find(&self, iform: &str) -> Option<&InstructionSpec> {
        self.specs.iter().find(|s| s.iform == iform)
    }

    pub fn find_mnemonic(&self, mnemonic: &str) -> impl Iterator<Item = &InstructionSpec> {
        let m = mnemonic.to_ascii_uppercase();
        self.specs.iter().filter(move |s| s.mnemonic == m)
    }

    pub fn spec_of(&self, inst: &InstructionInstance) -> &InstructionSpec {
        &self.specs[inst.opcode as usize]
    }

    /// Builds an instance after validating operands against the spec.
    pub fn instance(&self, opcode: u32, operands: Vec<Operand>) -> Result<InstructionInstance, CatalogError> {
        let spec = self.by_opcode(opcode).ok_or(CatalogError::UnknownOpcode(opcode))?;
        validate_operands(spec, &operands)?;
        Ok(InstructionInstance { opcode, operands })
    }

    /// Intel-syntax text for one instance.
    pub fn render(&self, inst: &InstructionInstance) -> String {
        render_instance(self.spec_of(inst), &inst.operands)
    }

    pub fn render_sequence(&self, seq: &[InstructionInstance]) -> String {
        let mut out = String::new();
        for inst in seq {
            out.push_str(&self.render(inst));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn validate_operands(spec: &InstructionSpec, ops: &[Operand]) -> Result<(), CatalogError> {
    if !spec.attributes.ring3_executable {
        return Err(CatalogError::NotRing3(spec.iform.clone()));
    }
    if ops.len() != spec.slots.len() {
        return Err(CatalogError::OperandMismatch {
            iform: spec.iform.clone(),
            detail: format!("expected {} operands, got {}", spec.slots.len(), ops.len()),
        });
    }
    for (i, (op, slot)) in ops.iter().zip(&spec.slots).enumerate() {
        if !op.fits(slot) {
            return Err(CatalogError::OperandMismatch {
                iform: spec.iform.clone(),
                detail: format!("operand {i} ({op:?}) illegal for {:?}", slot.kind),
            });
        }
    }
    Ok(())
}

fn memory_keyword(width: u16) -> &'static str {
    match width {
        8 => "byte ptr",
        64 => "qword ptr",
        128 => "xmmword ptr",
        256 => "ymmword ptr",
        _ => "zmmword ptr",
    }
}

pub(crate) fn render_instance(spec: &InstructionSpec, ops: &[Operand]) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(ops.len());
    let mut mem_i = 0;
    for (i, (op, slot)) in ops.iter().zip(&spec.slots).enumerate() {
        if Some(i) == spec.writemask {
            continue;
        }
        let text = match *op {
            Operand::Register(r) => slot.kind.register_name(r).unwrap_or_default(),
            Operand::Immediate(v) => format!("0x{v:02x}"),
            Operand::Scratch(s) => {
                let kw = spec
                    .memory_prefix
                    .get(mem_i)
                    .cloned()
                    .flatten()
                    .unwrap_or_else(|| memory_keyword(slot.width).to_string());
                mem_i += 1;
                let off = s as usize * 64;
                if off == 0 {
                    format!("{kw} [rip + specswarm_scratch]")
                } else {
                    format!("{kw} [rip + specswarm_scratch + {off}]")
                }
            }
        };
        parts.push(text);
    }
    if let Some(mi) = spec.writemask {
        // k0 as a writemask means "no masking" and cannot be spelled explicitly
        let k = ops.get(mi).map(|o| o.field_value()).unwrap_or(0);
        if let Some(first) = parts.first_mut() {
            if k != 0 {
                first.push_str(&format!(" {{k{k}}}"));
                if spec.zeroing {
                    first.push_str("{z}");
                }
            }
        }
    }
    if let Some(rc) = &spec.rounding {
        parts.push(format!("{{{rc}}}"));
    }
    let mut m = spec.mnemonic.to_ascii_lowercase();
    if spec.extension.starts_with("AVX512") && spec.mnemonic.starts_with('V') && spec.writemask.is_none() {
        m = format!("{{evex}} {m}");
    }
    if parts.is_empty() {
        m
    } else {
        format!("{m} {}", parts.join(", "))
    }
}

// ------------------------------------------------------------------ pools

#[derive(Clone, Debug)]
pub struct InstructionPool {
    catalog: Arc<Catalog>,
    members: Vec<u32>,
    extensions: Vec<String>,
}

impl InstructionPool {
    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn extensions(&self) -> &[String] {
        &self.extensions
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, opcode: u32) -> bool {
        self.members.binary_search(&opcode).is_ok()
    }

    /// Pool over an explicit opcode list (sorted, deduplicated).
    pub fn from_opcodes(catalog: Arc<Catalog>, opcodes: impl IntoIterator<Item = u32>) -> Result<Self, CatalogError> {
        let mut members: Vec<u32> = opcodes.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(CatalogError::EmptyPool);
        }
        if let Some(&bad) = members.iter().find(|&&o| catalog.by_opcode(o).is_none()) {
            return Err(CatalogError::UnknownOpcode(bad));
        }
        let mut extensions: Vec<String> =
            members.iter().map(|&o| catalog.specs[o as usize].extension.clone()).collect();
        extensions.sort();
        extensions.dedup();
        Ok(InstructionPool { catalog, members, extensions })
    }

    pub fn sample_spec<R: Rng + ?Sized>(&self, rng: &mut R) -> &InstructionSpec {
        let o = self.members[rng.random_range(0..self.members.len())];
        &self.catalog.specs[o as usize]
    }
}

pub fn build_pool<S: AsRef<str>>(catalog: &Arc<Catalog>, extensions: &[S]) -> Result<InstructionPool, CatalogError> {
    if extensions.is_empty() {
        return Err(CatalogError::NoExtensions);
    }
    let mut members = Vec::new();
    for tag in extensions {
        let tag = tag.as_ref();
        match catalog.by_extension.get(tag) {
            Some(idx) => members.extend(idx.iter().map(|&i| i as u32)),
            None => return Err(CatalogError::UnknownExtension(tag.to_string())),
        }
    }
    InstructionPool::from_opcodes(catalog.clone(), members)
}

pub fn sample_operand<R: Rng + ?Sized>(slot: &OperandSlot, rng: &mut R) -> Operand {
    match slot.kind {
        OperandKind::Immediate8 => Operand::Immediate(IMMEDIATE_VALUES[rng.random_range(0..IMMEDIATE_VALUES.len())]),
        OperandKind::Memory => Operand::Scratch(rng.random_range(0..SCRATCH_SLOTS)),
        k => Operand::Register(rng.random_range(0..k.domain_size() as u8)),
    }
}

pub fn sample_operands<R: Rng + ?Sized>(spec: &InstructionSpec, rng: &mut R) -> Vec<Operand> {
    spec.slots.iter().map(|s| sample_operand(s, rng)).collect()
}

pub fn sample_instance<R: Rng + ?Sized>(pool: &InstructionPool, rng: &mut R) -> InstructionInstance {
    let spec = pool.sample_spec(rng);
    InstructionInstance { opcode: spec.opcode_index, operands: sample_operands(spec, rng) }
}

// ------------------------------------------------------------------ loading

/// One `<instruction>` element before interpretation. Mirrors the JSON form.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RawEntry {
    pub asm: String,
    pub extension: String,
    pub iform: String,
    #[serde(default)]
    pub cpl: Option<String>,
    #[serde(default)]
    pub zeroing: bool,
    #[serde(default)]
    pub rounding: Option<String>,
    #[serde(default)]
    pub operands: Vec<RawOperand>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RawOperand {
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default)]
    pub width: Option<u16>,
    #[serde(default)]
    pub r: bool,
    #[serde(default)]
    pub w: bool,
    #[serde(default)]
    pub suppressed: bool,
    #[serde(default, rename = "memory-prefix", alias = "memory_prefix")]
    pub memory_prefix: Option<String>,
    #[serde(default, rename = "memory-suffix", alias = "memory_suffix")]
    pub memory_suffix: Option<String>,
    #[serde(default)]
    pub registers: Option<String>,
}

#[derive(Debug, Deserialize)]
struct JsonCatalog {
    instructions: Vec<RawEntry>,
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CatalogError::NotFound(path.display().to_string()),
        _ => CatalogError::Io(e.to_string()),
    })?;
    let is_json = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let text = std::str::from_utf8(&bytes).map_err(|e| CatalogError::Malformed(e.to_string()))?;
    let entries = if is_json { parse_json(text)? } else { parse_xml(text)? };
    let digest = hex::encode(Sha256::digest(&bytes));
    from_entries(entries, digest)
}

pub fn parse_json(text: &str) -> Result<Vec<RawEntry>, CatalogError> {
    let doc: JsonCatalog = serde_json::from_str(text).map_err(|e| CatalogError::Malformed(e.to_string()))?;
    Ok(doc.instructions)
}

fn flag(node: &roxmltree::Node, name: &str) -> bool {
    matches!(node.attribute(name), Some("1") | Some("true"))
}

pub fn parse_xml(text: &str) -> Result<Vec<RawEntry>, CatalogError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| CatalogError::Malformed(e.to_string()))?;
    let mut out = Vec::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("instruction")) {
        let attr = |n: &str| node.attribute(n).map(str::to_string);
        let (Some(asm), Some(extension)) = (attr("asm"), attr("extension")) else {
            return Err(CatalogError::Malformed(format!(
                "instruction element at byte {} lacks asm/extension",
                node.range().start
            )));
        };
        let iform = attr("iform").unwrap_or_else(|| asm.clone());
        let operands = node
            .children()
            .filter(|c| c.has_tag_name("operand"))
            .map(|c| RawOperand {
                ty: c.attribute("type").unwrap_or("").to_string(),
                width: c.attribute("width").and_then(|w| w.parse().ok()),
                r: flag(&c, "r"),
                w: flag(&c, "w"),
                suppressed: flag(&c, "suppressed"),
                memory_prefix: c.attribute("memory-prefix").map(str::to_string),
                memory_suffix: c.attribute("memory-suffix").map(str::to_string),
                registers: c.text().map(|t| t.trim().to_string()).filter(|t| !t.is_empty()),
            })
            .collect();
        out.push(RawEntry {
            asm,
            extension,
            iform,
            cpl: attr("cpl"),
            zeroing: flag(&node, "zeroing"),
            rounding: attr("rounding").filter(|r| r != "0"),
            operands,
        });
    }
    Ok(out)
}

pub fn from_entries(entries: Vec<RawEntry>, digest: String) -> Result<Catalog, CatalogError> {
    let mut summary = LoadSummary { entries: entries.len(), ..Default::default() };
    let mut specs = Vec::new();
    for e in &entries {
        if !e.cpl.as_deref().is_none_or(|c| c.split(',').any(|p| p.trim() == "3")) {
            summary.not_ring3 += 1;
            continue;
        }
        match interpret(e) {
            Ok(spec) => specs.push(spec),
            Err(reason) => {
                summary.unparseable += 1;
                *summary.skip_reasons.entry(reason.to_string()).or_default() += 1;
            }
        }
    }
    summary.loaded = specs.len();
    Catalog::from_specs(specs, summary, digest)
}

fn register_kind(width: u16, names: &str) -> Result<OperandKind, &'static str> {
    let first = names.split(',').next().unwrap_or("").trim().to_ascii_uppercase();
    let count = names.split(',').filter(|s| !s.trim().is_empty()).count();
    let kind = if first.starts_with("XMM") {
        OperandKind::Xmm
    } else if first.starts_with("YMM") {
        OperandKind::Ymm
    } else if first.starts_with("ZMM") {
        OperandKind::Zmm
    } else if first == "K0" {
        OperandKind::Mask
    } else if first == "RAX" {
        OperandKind::Gpr64
    } else if first.starts_with("MM") {
        return Err("mmx register");
    } else if first.starts_with("ST") {
        return Err("x87 register");
    } else if first.starts_with("CR") || first.starts_with("DR") {
        return Err("control register");
    } else {
        return Err("unsupported register class");
    };
    let expected_width = match kind {
        OperandKind::Xmm => 128,
        OperandKind::Ymm => 256,
        OperandKind::Zmm => 512,
        _ => 64,
    };
    if width != expected_width {
        return Err("register width mismatch");
    }
    if count != kind.domain_size() {
        return Err("register bank size");
    }
    Ok(kind)
}

fn interpret(e: &RawEntry) -> Result<InstructionSpec, &'static str> {
    let mut slots = Vec::new();
    let mut memory_prefix = Vec::new();
    for op in e.operands.iter().filter(|o| !o.suppressed) {
        let width = op.width.ok_or("missing width")?;
        if ![8, 64, 128, 256, 512].contains(&width) {
            return Err("operand width");
        }
        let access = match (op.r, op.w) {
            (true, true) => Access::ReadWrite,
            (false, true) => Access::Write,
            _ => Access::Read,
        };
        let kind = match op.ty.as_str() {
            "reg" => register_kind(width, op.registers.as_deref().ok_or("register list missing")?)?,
            "mem" => {
                if op.memory_suffix.is_some() {
                    return Err("embedded broadcast");
                }
                memory_prefix.push(op.memory_prefix.clone());
                OperandKind::Memory
            }
            "imm" => {
                if width != 8 {
                    return Err("immediate width");
                }
                OperandKind::Immediate8
            }
            "flags" => return Err("explicit flags operand"),
            "agen" => return Err("address generation operand"),
            _ => return Err("unknown operand type"),
        };
        slots.push(OperandSlot { kind, width, access });
    }
    if slots.len() > MAX_SLOTS {
        return Err("too many operands");
    }
    let mnemonic = e.asm.trim().to_ascii_uppercase();
    let writemask = (mnemonic.starts_with('V')
        && slots.len() > 1
        && slots[1].kind == OperandKind::Mask
        && slots[1].access == Access::Read
        && slots[0].access.writes())
    .then_some(1);
    let mut spec = InstructionSpec {
        mnemonic,
        extension: e.extension.clone(),
        iform: e.iform.clone(),
        slots,
        opcode_index: 0,
        attributes: Attributes::default(),
        writemask,
        zeroing: e.zeroing,
        rounding: e.rounding.clone(),
        memory_prefix,
    };
    spec.attributes = derive_attributes(&spec);
    Ok(spec)
}

// ------------------------------------------------------------------ attributes

const FMA_PREFIXES: [&str; 5] = ["VFMADD", "VFMSUB", "VFNMADD", "VFNMSUB", "VPMADD52"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Precision {
    Single,
    Double,
}

fn suffix_precision(m: &str) -> Option<Precision> {
    if m.ends_with("PS") || m.ends_with("SS") {
        Some(Precision::Single)
    } else if m.ends_with("PD") || m.ends_with("SD") {
        Some(Precision::Double)
    } else {
        None
    }
}

/// Precision of a mnemonic with the VEX `V` already removed.
fn precision_of(base: &str) -> (Option<Precision>, bool) {
    if let Some(rest) = base.strip_prefix("CVT") {
        let rest = rest.strip_prefix('T').unwrap_or(rest);
        if let Some((from, to)) = rest.split_once('2') {
            let fp = |s: &str| match s {
                "PS" | "SS" => Some(Precision::Single),
                "PD" | "SD" => Some(Precision::Double),
                _ => None,
            };
            return match (fp(from), fp(to)) {
                (Some(a), Some(b)) if a != b => (None, true),
                (Some(p), _) | (None, Some(p)) => (Some(p), false),
                _ => (None, false),
            };
        }
        return (None, false);
    }
    if base.starts_with('P') && !base.starts_with("PERM") {
        return (None, false);
    }
    (suffix_precision(base), false)
}

pub fn derive_attributes(spec: &InstructionSpec) -> Attributes {
    let m = spec.mnemonic.as_str();
    let has_vec = spec.has_vector_slot();
    let has_xmm = spec.slots.iter().any(|s| s.kind == OperandKind::Xmm);
    let is_vex = m.starts_with('V') && has_vec;
    let base = if is_vex { &m[1..] } else { m };
    let (precision, convert) = if has_vec { precision_of(base) } else { (None, false) };
    Attributes {
        is_legacy_sse: has_xmm && !is_vex,
        is_vex_or_evex: is_vex,
        is_single_precision_fp: precision == Some(Precision::Single),
        is_double_precision_fp: precision == Some(Precision::Double),
        is_precision_convert: convert,
        is_fma_family: FMA_PREFIXES.iter().any(|p| m.starts_with(p)),
        is_aes_family: base.starts_with("AES"),
        ring3_executable: true,
    }
}

impl fmt::Display for LoadSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} entries: {} loaded, {} not ring-3, {} unparseable",
            self.entries, self.loaded, self.not_ring3, self.unparseable
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: &str, kinds: &[(OperandKind, Access)]) -> InstructionSpec {
        let mut s = InstructionSpec {
            mnemonic: m.into(),
            extension: "X".into(),
            iform: m.into(),
            slots: kinds
                .iter()
                .map(|&(kind, access)| OperandSlot { kind, width: 128, access })
                .collect(),
            opcode_index: 0,
            attributes: Attributes::default(),
            writemask: None,
            zeroing: false,
            rounding: None,
            memory_prefix: vec![],
        };
        s.attributes = derive_attributes(&s);
        s
    }

    const X: OperandKind = OperandKind::Xmm;
    const W: Access = Access::Write;
    const R: Access = Access::Read;

    #[test]
    fn precision_classification() {
        let a = |m| spec(m, &[(X, W), (X, R)]).attributes;
        assert!(a("ADDPS").is_single_precision_fp);
        assert!(a("MULSD").is_double_precision_fp);
        assert!(a("VPERMILPD").is_double_precision_fp);
        assert!(!a("VPDPBSSD").is_double_precision_fp);
        assert!(!a("PXOR").is_single_precision_fp);
        let c = a("CVTPD2PS");
        assert!(c.is_precision_convert && !c.is_single_precision_fp && !c.is_double_precision_fp);
        assert!(a("CVTDQ2PS").is_single_precision_fp);
        assert!(a("CVTTPD2DQ").is_double_precision_fp);
        assert!(a("VCVTSS2SD").is_precision_convert);
        assert!(a("AESDECLAST").is_aes_family);
        assert!(a("VAESENC").is_aes_family);
        assert!(a("VFMADD213PD").is_fma_family && a("VFMADD213PD").is_double_precision_fp);
    }

    #[test]
    fn sse_vs_vex() {
        let sse = spec("XORPS", &[(X, W), (X, R)]).attributes;
        assert!(sse.is_legacy_sse && !sse.is_vex_or_evex);
        let vex = spec("VPADDD", &[(X, W), (X, R), (X, R)]).attributes;
        assert!(vex.is_vex_or_evex && !vex.is_legacy_sse);
        let gpr = spec("ADD", &[(OperandKind::Gpr64, W)]).attributes;
        assert!(!gpr.is_legacy_sse && !gpr.is_vex_or_evex);
    }

    #[test]
    fn operand_field_round_trip() {
        for k in [X, OperandKind::Mask, OperandKind::Memory, OperandKind::Immediate8] {
            let slot = OperandSlot { kind: k, width: 128, access: R };
            let mut rng = rand::rng();
            for _ in 0..64 {
                let op = sample_operand(&slot, &mut rng);
                assert_eq!(Operand::from_field(k, op.field_value()), Some(op));
            }
        }
        assert_eq!(Operand::from_field(OperandKind::Mask, 8), None);
        assert_eq!(Operand::from_field(OperandKind::Immediate8, 5), None);
    }

    #[test]
    fn render_masked_and_memory() {
        let mut s = spec("VADDPS", &[(X, W), (OperandKind::Mask, R), (X, R), (OperandKind::Memory, R)]);
        s.writemask = Some(1);
        s.zeroing = true;
        s.memory_prefix = vec![Some("xmmword ptr".into())];
        let ops = [Operand::Register(1), Operand::Register(2), Operand::Register(3), Operand::Scratch(2)];
        assert_eq!(
            render_instance(&s, &ops),
            "vaddps xmm1 {k2}{z}, xmm3, xmmword ptr [rip + specswarm_scratch + 128]"
        );
        let ops0 = [Operand::Register(1), Operand::Register(0), Operand::Register(3), Operand::Scratch(0)];
        assert_eq!(render_instance(&s, &ops0), "vaddps xmm1, xmm3, xmmword ptr [rip + specswarm_scratch]");
    }
}
