//! Statevector simulation, circuit templates, descriptors, synthetic datasets,
//! training and correlation analysis for parameterized quantum circuits.

pub mod analysis;
pub mod circuits;
pub mod datagen;
pub mod descriptors;
pub mod error;
pub mod sim;
pub mod trainer;

pub use circuits::{CircuitTemplate, EmbeddingSpec};
pub use datagen::{Dataset, DatasetId, LabeledPoint, Split};
pub use error::{Error, Result};
pub use sim::{Gate, GateKind, Statevector};
pub use trainer::{Loss, OptimizerKind, RunKey, RunRecord, TrainConfig};
