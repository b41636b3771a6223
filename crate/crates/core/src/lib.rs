//! Computable online learning at desk scale: Littlestone dimension, exact
//! mistake-bound games, significant inputs, a toy register machine and the
//! hypothesis classes built on top of it.

pub mod batch;
pub mod classes;
pub mod encoding;
pub mod game;
pub mod learners;
pub mod littlestone;
pub mod machine;
pub mod paperclasses;
pub mod significance;
pub mod sample;

pub use classes::{FiniteClass, Hypothesis};
pub use sample::{Instance, Label, LabeledInstance, Sample};
