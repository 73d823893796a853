//! The `verify` subcommand: every module's invariants on generated inputs.
//!
//! Each case is derived from `(seed, index)` alone, so cases run on worker
//! threads and the report does not depend on scheduling.

use std::thread;

use cmvkit::choice_seq::{random_choice_sequence, ChoiceSequence, SequenceKind};
use cmvkit::cmv::{self, Variant};
use cmvkit::dilations::{self, MatrixMeasure};
use cmvkit::io::SequenceDoc;
use cmvkit::linalg::{self, TERMINATION_TOL};
use cmvkit::schur::{self, SchurFunction};
use cmvkit::Result;

use crate::docs::{Check, Report};
use crate::Tolerances;

/// Per-invariant maxima over one case.
type Residuals = Vec<(&'static str, f64)>;

fn block_error(a: &ChoiceSequence, b: &ChoiceSequence) -> f64 {
    if a.len() != b.len() || a.tail() != b.tail() {
        return f64::INFINITY;
    }
    a.params().iter().zip(b.params()).map(|(x, y)| linalg::diff_norm(x, y)).fold(0.0, f64::max)
}

fn run_case(seed: u64, index: usize) -> Result<Residuals> {
    let case_seed = seed.wrapping_mul(1_000_003).wrapping_add(index as u64);
    let dim = 1 + index % 3;
    let depth = index % 5;
    let kind = if index.is_multiple_of(2) { SequenceKind::Pure } else { SequenceKind::TerminateUnitary };
    let seq = random_choice_sequence(dim, dim, depth, case_seed, kind)?;

    let u = cmv::build_cmv(&seq, None, Variant::U0)?;
    let ut = cmv::build_cmv(&seq, None, Variant::U0Tilde)?;
    let unitarity = u.unitarity_residual().unwrap_or(f64::INFINITY).max(ut.unitarity_residual().unwrap_or(f64::INFINITY));

    let adj = cmv::build_cmv(&seq.adjoint(), None, Variant::U0Tilde)?;
    let adjoint = linalg::diff_norm(&u.matrix.adjoint(), &adj.matrix)
        .max(linalg::diff_norm(&cmv::truncate(&u).matrix.adjoint(), &cmv::truncate(&adj).matrix));

    let inter = cmv::intertwiner_check(&seq, None)?;
    let intertwining = inter.truncation_residual.max(inter.cmv_residual);

    let terminated = random_choice_sequence(dim, dim, depth, case_seed ^ 0x5eed, SequenceKind::TerminateUnitary)?;
    let sys = cmv::build_cmv(&terminated, None, Variant::U0)?.system();
    let back = schur::schur_parameters(&SchurFunction::Realization(sys), terminated.len() + 2)?;
    let round_trip = block_error(&terminated, &back);

    let t = &seq.params()[0];
    let dil = dilations::unitary_dilation(t, 5)?;
    let report = dilations::dilation_check(t, &dil, 5)?;
    let dilation = if report.is_minimal() { report.max_residual() } else { f64::INFINITY };

    // Moments of a known unitary with a cyclic first coordinate.
    let scalar = random_choice_sequence(1, 1, depth, case_seed ^ 0xcafe, SequenceKind::TerminateUnitary)?;
    let w = cmv::build_cmv(&scalar, None, Variant::U0)?.matrix;
    let mut pow = linalg::identity(w.nrows());
    let mut moments = Vec::new();
    for _ in 0..schur::working_depth(2 * depth + 4) + 1 {
        moments.push(linalg::block(&pow, 0, 0, 1, 1));
        pow = &pow * &w;
    }
    let mu = MatrixMeasure::from_moments(moments)?;
    let (_, nm) = dilations::naimark_dilation(&mu, depth + 1)?;
    let naimark = nm.max_residual();

    let json = serde_json::to_string(&SequenceDoc::from(&seq)).expect("sequence serializes");
    let doc: SequenceDoc = serde_json::from_str(&json).expect("sequence parses");
    let serialization = if doc.to_sequence(seq.tol())? == seq { 0.0 } else { f64::INFINITY };

    Ok(vec![
        ("unitarity", unitarity),
        ("adjoint_laws", adjoint),
        ("intertwining", intertwining),
        ("parameter_round_trip", round_trip),
        ("unitary_dilation", dilation),
        ("naimark_moments", naimark),
        ("serialization_round_trip", serialization),
    ])
}

fn threshold(name: &str, tol: &Tolerances) -> f64 {
    match name {
        "parameter_round_trip" => TERMINATION_TOL.max(tol.residual),
        "naimark_moments" => dilations::DILATION_TOL.max(tol.residual),
        _ => tol.residual,
    }
}

pub fn run(seed: u64, cases: usize, tol: &Tolerances) -> anyhow::Result<Report> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(cases.max(1));
    let results: Vec<Result<Residuals>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..cases).step_by(workers).map(|i| (i, run_case(seed, i))).collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<_> = handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, r)| r).collect()
    });

    let mut maxima: Vec<(&'static str, f64)> = Vec::new();
    for r in results {
        for (name, value) in r? {
            match maxima.iter_mut().find(|(n, _)| *n == name) {
                Some(entry) => entry.1 = entry.1.max(value),
                None => maxima.push((name, value)),
            }
        }
    }
    let checks = maxima.into_iter().map(|(name, value)| Check::new(name, value, threshold(name, tol))).collect();
    Ok(Report::new("verify", checks))
}
