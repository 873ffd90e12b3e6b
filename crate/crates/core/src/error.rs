use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("catalog file not found: {0}")]
    NotFound(String),
    #[error("catalog read failed: {0}")]
    Io(String),
    #[error("malformed catalog document: {0}")]
    Malformed(String),
    #[error("empty catalog")]
    Empty,
    #[error("no extensions selected")]
    NoExtensions,
    #[error("unknown extension tag: {0}")]
    UnknownExtension(String),
    #[error("empty instruction pool")]
    EmptyPool,
    #[error("unknown opcode {0}")]
    UnknownOpcode(u32),
    #[error("{0} is not ring-3 executable")]
    NotRing3(String),
    #[error("operands do not fit {iform}: {detail}")]
    OperandMismatch { iform: String, detail: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("unknown opcode {0}")]
    UnknownOpcode(u32),
    #[error("layout width {found} does not match opcode {opcode} (expects {expected})")]
    LayoutMismatch { opcode: u32, expected: u32, found: u32 },
    #[error("operand field {slot} of opcode {opcode} holds illegal value {value}")]
    IllegalOperand { opcode: u32, slot: usize, value: u64 },
    #[error("opcode {0} is not part of the campaign pool")]
    OutsidePool(u32),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("insufficient calibration samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("assembler failed: {0}")]
    Assembler(String),
    #[error("performance counters unavailable: {0}")]
    Counters(String),
    #[error("kernel load failed: {0}")]
    Load(String),
    #[error("unsupported operand for this platform: {0}")]
    UnsupportedOperand(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("sequence does not fire {0}")]
    DoesNotFire(String),
    #[error("output error at {path}: {reason}")]
    Output { path: String, reason: String },
}

impl CampaignError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        CampaignError::Config { field: field.to_string(), reason: reason.into() }
    }
}
