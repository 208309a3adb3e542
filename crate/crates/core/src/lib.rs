//! Trapped random walks on the integers and criticality of the dissipative
//! abelian sandpile, with exact rational arithmetic throughout.

pub mod classifier;
pub mod cli;
pub mod error;
pub mod exact;
pub mod recursion;
pub mod report;
pub mod sandpile;
pub mod sequence;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};
pub use exact::DigitBudget;
pub use sequence::{SequenceFamily, TrapSequence};
pub use solver::WalkDomain;
