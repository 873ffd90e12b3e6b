//! Kernel emission: Intel-syntax assembly around a candidate sequence.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, InstructionInstance, OperandKind, SCRATCH_SLOTS};
use crate::error::BackendError;
use crate::oracle::DataEnvironment;

pub const ENTRY_SYMBOL: &str = "specswarm_kernel";
pub const BODY_BEGIN: &str = "# body begin";
pub const BODY_END: &str = "# body end";
/// Four 32-bit words of value 1: denormal both as f32 lanes and as f64 lanes.
pub const DENORMAL_WORD: u32 = 1;

const CALLEE_SAVED: [&str; 6] = ["rbx", "rbp", "r12", "r13", "r14", "r15"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroomingDescriptor {
    pub denormal_registers: Vec<u8>,
    pub scratch_bytes: usize,
    pub scratch_init: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelArtifact {
    pub assembly_text: String,
    pub entry_symbol: String,
    pub reps: u32,
    pub grooming: GroomingDescriptor,
}

impl KernelArtifact {
    /// Lines strictly between the body markers.
    pub fn body_lines(&self) -> Vec<&str> {
        let mut inside = false;
        let mut out = Vec::new();
        for l in self.assembly_text.lines() {
            let t = l.trim();
            if t == BODY_BEGIN {
                inside = true;
            } else if t == BODY_END {
                inside = false;
            } else if inside && !t.is_empty() {
                out.push(t);
            }
        }
        out
    }
}

/// Instruction-set features a sequence needs beyond SSE/AVX2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Requirements {
    pub avx512: bool,
}

pub fn requirements(catalog: &Catalog, seq: &[InstructionInstance]) -> Requirements {
    let avx512 = seq.iter().any(|i| {
        let s = catalog.spec_of(i);
        s.extension.starts_with("AVX512")
            || s.slots.iter().any(|sl| matches!(sl.kind, OperandKind::Zmm | OperandKind::Mask))
    });
    Requirements { avx512 }
}

pub fn emit_kernel(
    catalog: &Catalog,
    seq: &[InstructionInstance],
    reps: u32,
    env: &DataEnvironment,
) -> Result<KernelArtifact, BackendError> {
    env.validate().map_err(BackendError::UnsupportedOperand)?;
    let lines: Vec<String> = seq.iter().map(|i| catalog.render(i)).collect();
    Ok(emit_kernel_text(&lines, reps, env))
}

/// Emits a kernel around already-rendered body lines.
pub fn emit_kernel_text(lines: &[String], reps: u32, env: &DataEnvironment) -> KernelArtifact {
    let reps = reps.max(1);
    let mut s = String::new();
    let _ = writeln!(s, ".intel_syntax noprefix");
    let _ = writeln!(s, ".text");
    let _ = writeln!(s, ".globl {ENTRY_SYMBOL}");
    let _ = writeln!(s, ".type {ENTRY_SYMBOL}, @function");
    let _ = writeln!(s, ".p2align 6");
    let _ = writeln!(s, "{ENTRY_SYMBOL}:");
    for r in CALLEE_SAVED {
        let _ = writeln!(s, "    push {r}");
    }
    let _ = writeln!(s, "    mov qword ptr [rip + specswarm_saved_rsp], rsp");
    for &r in &env.denormal_registers {
        let _ = writeln!(s, "    movdqu xmm{r}, xmmword ptr [rip + specswarm_denormal]");
    }
    let _ = writeln!(s, "    mfence");
    let _ = writeln!(s, "    lfence");
    let _ = writeln!(s, "    {BODY_BEGIN}");
    for _ in 0..reps {
        for l in lines {
            let _ = writeln!(s, "    {l}");
        }
    }
    let _ = writeln!(s, "    {BODY_END}");
    let _ = writeln!(s, "    mfence");
    let _ = writeln!(s, "    lfence");
    let _ = writeln!(s, "    mov rsp, qword ptr [rip + specswarm_saved_rsp]");
    for r in CALLEE_SAVED.iter().rev() {
        let _ = writeln!(s, "    pop {r}");
    }
    let _ = writeln!(s, "    ret");
    let _ = writeln!(s, ".size {ENTRY_SYMBOL}, . - {ENTRY_SYMBOL}");
    let _ = writeln!(s, ".data");
    let _ = writeln!(s, ".p2align 6");
    let _ = writeln!(s, "specswarm_denormal:");
    let _ = writeln!(s, "    .long {0}, {0}, {0}, {0}", DENORMAL_WORD);
    let _ = writeln!(s, "specswarm_saved_rsp:");
    let _ = writeln!(s, "    .quad 0");
    let _ = writeln!(s, ".p2align 6");
    let _ = writeln!(s, "specswarm_scratch:");
    let scratch_bytes = SCRATCH_SLOTS as usize * 64;
    if env.scratch_init.is_empty() {
        let _ = writeln!(s, "    .zero {scratch_bytes}");
    } else {
        let bytes: Vec<u8> = env.scratch_init.iter().copied().cycle().take(scratch_bytes).collect();
        for chunk in bytes.chunks(16) {
            let list: Vec<String> = chunk.iter().map(|b| format!("0x{b:02x}")).collect();
            let _ = writeln!(s, "    .byte {}", list.join(", "));
        }
    }
    let _ = writeln!(s, ".section .note.GNU-stack,\"\",@progbits");
    KernelArtifact {
        assembly_text: s,
        entry_symbol: ENTRY_SYMBOL.to_string(),
        reps,
        grooming: GroomingDescriptor {
            denormal_registers: env.denormal_registers.iter().copied().collect(),
            scratch_bytes,
            scratch_init: env.scratch_init.clone(),
        },
    }
}
