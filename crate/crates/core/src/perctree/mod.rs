//! Spherically symmetric trees: level profiles, weight sequences and
//! dynamical percolation experiments.

mod build;
mod profile;
mod regime;

pub use build::{build_profile, weight_sequence, LevelFit, ProfileBuild, Target, WeightSequence};
pub use profile::LevelProfile;
pub use regime::{regime_experiment, LevelRegime, RegimeParams, RegimeReport, DEFAULT_EDGE_CAP};
