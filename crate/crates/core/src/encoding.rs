//! Position codes: `(opcode << i) | operand_bits`, one per instruction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, InstructionInstance, Operand};
use crate::error::DecodeError;

/// One dimension of a position vector.
///
/// `width` is the operand-field width `i` of the spec the code was built
/// from. Different specs use different `i`, so the bare value alone does not
/// always identify the opcode; carrying `i` keeps decoding unambiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PositionCode {
    pub value: u64,
    pub width: u32,
}

impl PositionCode {
    pub fn opcode_bits(self) -> u64 {
        self.value >> self.width
    }

    pub fn operand_bits(self) -> u64 {
        self.value & ((1u64 << self.width) - 1)
    }

    /// The code as a real number. Exact: codes stay far below 2^53.
    pub fn as_real(self) -> f64 {
        debug_assert!(self.value < (1u64 << 53));
        self.value as f64
    }

    pub fn with_operand_bits(self, bits: u64) -> PositionCode {
        PositionCode { value: (self.opcode_bits() << self.width) | bits, width: self.width }
    }
}

impl fmt::Display for PositionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}/{}", self.value, self.width)
    }
}

pub type PositionVector = Vec<PositionCode>;

/// Packs operand fields in slot order, first slot most significant.
pub fn pack_operands(catalog: &Catalog, inst: &InstructionInstance) -> u64 {
    let spec = catalog.spec_of(inst);
    spec.slots
        .iter()
        .zip(&inst.operands)
        .fold(0u64, |acc, (slot, op)| (acc << slot.kind.field_bits()) | op.field_value())
}

pub fn encode_instance(catalog: &Catalog, inst: &InstructionInstance) -> PositionCode {
    let spec = catalog.spec_of(inst);
    let width = spec.operand_bits();
    PositionCode { value: ((spec.opcode_index as u64) << width) | pack_operands(catalog, inst), width }
}

pub fn decode_instance(catalog: &Catalog, code: PositionCode) -> Result<InstructionInstance, DecodeError> {
    let opcode = u32::try_from(code.opcode_bits()).map_err(|_| DecodeError::UnknownOpcode(u32::MAX))?;
    let spec = catalog.by_opcode(opcode).ok_or(DecodeError::UnknownOpcode(opcode))?;
    let expected = spec.operand_bits();
    if expected != code.width {
        return Err(DecodeError::LayoutMismatch { opcode, expected, found: code.width });
    }
    let mut bits = code.operand_bits();
    let mut operands = vec![Operand::Register(0); spec.slots.len()];
    for (i, slot) in spec.slots.iter().enumerate().rev() {
        let w = slot.kind.field_bits();
        let raw = bits & ((1u64 << w) - 1);
        bits >>= w;
        operands[i] = Operand::from_field(slot.kind, raw)
            .ok_or(DecodeError::IllegalOperand { opcode, slot: i, value: raw })?;
    }
    Ok(InstructionInstance { opcode, operands })
}

pub fn encode_sequence(catalog: &Catalog, seq: &[InstructionInstance]) -> PositionVector {
    seq.iter().map(|i| encode_instance(catalog, i)).collect()
}

pub fn decode_sequence(catalog: &Catalog, codes: &[PositionCode]) -> Result<Vec<InstructionInstance>, DecodeError> {
    codes.iter().map(|&c| decode_instance(catalog, c)).collect()
}
