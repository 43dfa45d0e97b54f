//! Boolean functions under continuous-time bit rerandomization.

pub mod error;
pub mod functions;
pub mod perctree;

pub use error::{Error, Result};
pub use functions::{
    build_state, evaluate, make_instance, BitConfig, EvaluationState, FunctionInstance,
    FunctionSpec, TruthTable, UpdateOutcome,
};
pub use perctree::LevelProfile;
pub mod dynamics;
pub mod stats;
pub mod oracle;
pub mod analysis;
pub mod experiments;
