//! Multidimensional Zeckendorf representations.
//!
//! A recurrence vector c = (c₁, …, c_k) with c_k = 1 generates a two-sided
//! sequence of lattice vectors X⃗_n ∈ Z^{k−1}. When c is weakly decreasing,
//! every integer vector has exactly one representation Σ aₙX⃗₋ₙ whose digit
//! string obeys the chunk grammar; this crate computes, checks and studies
//! those representations.

pub mod analytics;
pub mod bridge;
pub mod error;
pub mod export;
pub mod normalize;
pub mod recurrence;
pub mod representation;

pub use error::{Error, Result};
pub use recurrence::{LatticeVector, Mode, RecurrenceVector, ScalarSequence, VectorSequence};
pub use representation::CoefficientString;
