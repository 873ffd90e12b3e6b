//! Swarm-driven search for x86 instruction sequences that trigger bad speculation.

pub mod campaign;
pub mod catalog;
pub mod encoding;
pub mod error;
pub mod fitness;
pub mod hw;
pub mod oracle;
pub mod swarm;

pub use catalog::{build_pool, load_catalog, Catalog, InstructionInstance, InstructionPool, InstructionSpec};
pub use encoding::{decode_sequence, encode_sequence, PositionCode, PositionVector};
pub use error::{BackendError, CampaignError, CatalogError, DecodeError};
pub use fitness::{classify, EquivalenceClass, FitnessBackend, FitnessObservation};
pub use oracle::{DataEnvironment, MicroarchProfile, SimBackend};
