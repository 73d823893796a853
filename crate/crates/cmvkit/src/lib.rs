//! Block operator CMV matrices and the operator Schur algorithm at finite
//! matrix scale.
//!
//! - [`choice_seq`]: choice sequences with explicit defect-space bases.
//! - [`cmv`]: elementary rotations, the `ℒ₀ℳ₀` factorization, truncations.
//! - [`schur`]: Schur steps, parameter extraction, Möbius composition and
//!   the Carathéodory transform.
//! - [`systems`]: conservative systems, transfer and characteristic
//!   functions, the defect-kernel lattice.
//! - [`dilations`]: unitary and Naimark dilations as CMV matrices.

pub mod choice_seq;
pub mod cmv;
pub mod dilations;
pub mod error;
pub mod io;
pub mod linalg;
pub mod schur;
pub mod systems;

pub use choice_seq::{random_choice_sequence, ChoiceSequence, SequenceKind, Tail};
pub use cmv::{build_cmv, truncate, BlockCMV, Closure, ClosurePolicy, TruncatedCMV, Variant};
pub use error::{CmvError, Result};
pub use linalg::{CMatrix, ContractionKind, Subspace, C64};
pub use schur::{SchurFunction, TaylorSeries};
pub use systems::DiscreteSystem;
