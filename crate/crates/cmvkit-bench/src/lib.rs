//! Fixed inputs shared by the benchmarks and their smoke tests.

use cmvkit::choice_seq::{random_choice_sequence, ChoiceSequence, SequenceKind};
use cmvkit::dilations::MatrixMeasure;
use cmvkit::linalg::C64;

/// Square pure sequence with `depth` listed parameters.
pub fn sequence(dim: usize, depth: usize) -> ChoiceSequence {
    random_choice_sequence(dim, dim, depth, 0xC0FFEE + depth as u64, SequenceKind::Pure).expect("valid fixture")
}

/// Square sequence ending in a unitary parameter.
pub fn terminated(dim: usize, depth: usize) -> ChoiceSequence {
    random_choice_sequence(dim, dim, depth, 0xBEEF + depth as u64, SequenceKind::TerminateUnitary)
        .expect("valid fixture")
}

/// Scalar measure with `k` equally weighted, equally spaced atoms.
pub fn measure(k: usize) -> MatrixMeasure {
    let atoms: Vec<(C64, f64)> = (0..k)
        .map(|j| (C64::from_polar(1.0, 0.3 + std::f64::consts::TAU * j as f64 / k as f64), 1.0 / k as f64))
        .collect();
    MatrixMeasure::scalar(&atoms).expect("valid fixture")
}
