//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on
//! any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use cmvkit::choice_seq::{random_choice_sequence, ChoiceSequence, SequenceKind, Tail};
use cmvkit::cmv::{build_cmv, truncate, Variant};
use cmvkit::dilations::{dilation_check, naimark_check, naimark_dilation, unitary_dilation, MatrixMeasure};
use cmvkit::linalg::{self, c, random, CMatrix, C64};
use cmvkit::schur::{schur_parameters, schur_parameters_from_realization, SchurFunction};
use cmvkit::systems::{self, defect_kernel_lattice, DiscreteSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// The shared case list for criteria 1 and 2: square blocks of size at
/// most 3, at most 6 listed pure parameters, half of them terminated by a
/// unitary block.
fn square_cases() -> Vec<ChoiceSequence> {
    (0..50u64)
        .map(|i| {
            let dim = 1 + (i % 3) as usize;
            let depth = (i % 7) as usize;
            let kind = if i % 2 == 0 { SequenceKind::Pure } else { SequenceKind::TerminateUnitary };
            random_choice_sequence(dim, dim, depth.min(if kind == SequenceKind::Pure { 6 } else { 5 }), 1000 + i, kind)
                .expect("generator")
        })
        .collect()
}

fn unitarity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seq in square_cases() {
        for variant in [Variant::U0, Variant::U0Tilde] {
            let u = build_cmv(&seq, None, variant).expect("build");
            worst = worst.max(linalg::unitarity_residual(&u.matrix).unwrap_or(f64::INFINITY));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-10 && secs < 10.0, format!("max residual {worst:.2e}, {secs:.2}s"))
}

fn adjoint_laws() -> Outcome {
    let (mut wu, mut wt): (f64, f64) = (0.0, 0.0);
    for seq in square_cases() {
        let adj = seq.adjoint();
        let u = build_cmv(&seq, None, Variant::U0).expect("build");
        let ut = build_cmv(&adj, None, Variant::U0Tilde).expect("build");
        wu = wu.max(linalg::diff_norm(&u.matrix.adjoint(), &ut.matrix));
        wt = wt.max(linalg::diff_norm(&truncate(&u).matrix.adjoint(), &truncate(&ut).matrix));
    }
    outcome(wu <= 1e-12 && wt <= 1e-12, format!("U0 {wu:.2e}, T0 {wt:.2e}"))
}

/// Textbook five-diagonal CMV matrix of Verblunsky coefficients `α`
/// (with `α_{-1} = -1`), written entrywise.
fn cmv_oracle(alpha: &[C64], size: usize) -> CMatrix {
    let a = |n: i64| -> C64 {
        if n < 0 {
            c(-1.0, 0.0)
        } else {
            alpha.get(n as usize).copied().unwrap_or(c(0.0, 0.0))
        }
    };
    let rho = |n: i64| -> f64 { if n < 0 { 0.0 } else { (1.0 - a(n).norm_sqr()).sqrt() } };
    let mut m = linalg::zeros(size, size);
    let mut put = |i: i64, j: i64, v: C64| {
        if i >= 0 && j >= 0 && (i as usize) < size && (j as usize) < size {
            m[(i as usize, j as usize)] = v;
        }
    };
    for k in 0..(size as i64 + 1) / 2 {
        let (r0, r1) = (2 * k, 2 * k + 1);
        put(r0, 2 * k - 1, a(2 * k).conj() * rho(2 * k - 1));
        put(r0, 2 * k, -a(2 * k).conj() * a(2 * k - 1));
        put(r0, 2 * k + 1, a(2 * k + 1).conj() * rho(2 * k));
        put(r0, 2 * k + 2, c(rho(2 * k + 1) * rho(2 * k), 0.0));
        put(r1, 2 * k - 1, c(rho(2 * k) * rho(2 * k - 1), 0.0));
        put(r1, 2 * k, -a(2 * k - 1) * rho(2 * k));
        put(r1, 2 * k + 1, -a(2 * k + 1).conj() * a(2 * k));
        put(r1, 2 * k + 2, -a(2 * k) * rho(2 * k + 1));
    }
    m
}

fn scalar_conformance() -> Outcome {
    let alpha = [c(0.3, 0.0), c(0.0, -0.5), c(0.2, 0.0), c(0.7, 0.0), c(-0.1, 0.0)];
    let gammas: Vec<C64> = alpha.iter().map(|a| a.conj()).collect();
    let seq = ChoiceSequence::scalar(&gammas, Tail::ZeroTail).expect("sequence");
    let u = build_cmv(&seq, Some(3), Variant::U0).expect("build");
    let window = linalg::block(&u.matrix, 0, 0, 6, 6);
    let oracle = linalg::block(&cmv_oracle(&alpha, 8), 0, 0, 6, 6);
    let mut worst: f64 = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            worst = worst.max((window[(i, j)] - oracle[(i, j)]).norm());
        }
    }
    outcome(worst <= 1e-12, format!("max entry deviation {worst:.2e}"))
}

fn max_block_error(a: &ChoiceSequence, b: &ChoiceSequence) -> f64 {
    if a.len() != b.len() || a.tail() != b.tail() {
        return f64::INFINITY;
    }
    a.params().iter().zip(b.params()).map(|(x, y)| linalg::diff_norm(x, y)).fold(0.0, f64::max)
}

fn round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..30u64 {
        let m = 1 + (i % 3) as usize;
        let (n, kind) = match i % 3 {
            0 => (m, SequenceKind::TerminateUnitary),
            1 => (m + 1, SequenceKind::TerminateIsometric),
            _ => (m.saturating_sub(1).max(1), SequenceKind::TerminateCoisometric),
        };
        let (m, n) = if kind == SequenceKind::TerminateCoisometric { (n + 1, n) } else { (m, n) };
        let seq = random_choice_sequence(m, n, (i % 5) as usize, 2000 + i, kind).expect("generator");
        let sys = build_cmv(&seq, None, Variant::U0).expect("build").system();
        let back = schur_parameters(&SchurFunction::Realization(sys), seq.len() + 2).expect("schur");
        worst = worst.max(max_block_error(&seq, &back));
    }
    outcome(worst <= 1e-8, format!("max block error {worst:.2e}"))
}

fn random_simple_conservative(rng: &mut ChaCha8Rng, m: usize, h: usize) -> DiscreteSystem {
    loop {
        let u = random::unitary(rng, m + h);
        let sys = DiscreteSystem::from_block(&u, m, m).expect("split");
        if systems::structural_tests(&sys).simple {
            return sys;
        }
    }
}

fn realization_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let m = 1 + i % 2;
        let h = 1 + i % 6;
        let sys = random_simple_conservative(&mut rng, m, h);
        let n = h + 2;
        let formula = schur_parameters_from_realization(&sys, n).expect("formula");
        let oracle = schur_parameters(&SchurFunction::Realization(sys), n).expect("oracle");
        worst = worst.max(max_block_error(&formula, &oracle));
    }
    outcome(worst <= 1e-8, format!("max block error {worst:.2e}"))
}

fn uniqueness_bound() -> Outcome {
    let r: f64 = 0.3;
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for n in 1..=3usize {
        let bound = 2.0 * r * (r / 0.49).powi(n as i32 + 1);
        for s in 0..5u64 {
            let dim = 1 + (s % 2) as usize;
            let a = random_choice_sequence(dim, dim, 7, 3000 + 10 * n as u64 + s, SequenceKind::Pure).expect("gen");
            let mut rng = ChaCha8Rng::seed_from_u64(4000 + 10 * n as u64 + s);
            let mut params: Vec<CMatrix> = a.params()[..=n].to_vec();
            for _ in n + 1..8 {
                let norm = rng.random_range(0.05..0.95);
                params.push(random::contraction(&mut rng, dim, dim, norm));
            }
            let b = ChoiceSequence::new(dim, dim, params, Tail::ZeroTail).expect("sequence");
            let (fa, fb) = (
                SchurFunction::Cmv { seq: a, depth: None },
                SchurFunction::Cmv { seq: b, depth: None },
            );
            for k in 0..16 {
                let lam = C64::from_polar(r, 2.0 * PI * k as f64 / 16.0);
                let d = linalg::diff_norm(&fa.value(lam).expect("value"), &fb.value(lam).expect("value"));
                worst_ratio = worst_ratio.max(d / bound);
                ok &= d <= bound;
            }
        }
    }
    outcome(ok, format!("max distance / bound {worst_ratio:.3}"))
}

fn unitary_dilations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut minimal = true;
    for i in 0..20 {
        let h = 1 + i % 4;
        let norm = rng.random_range(0.1..1.0);
        let t = random::contraction(&mut rng, h, h, norm);
        let u = unitary_dilation(&t, 5).expect("dilation");
        let report = dilation_check(&t, &u, 5).expect("check");
        worst = worst.max(report.max_residual());
        minimal &= report.is_minimal();
    }
    outcome(worst <= 1e-10 && minimal, format!("max power residual {worst:.2e}, minimal {minimal}"))
}

fn naimark() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut minimal = true;
    for k in 1..=5usize {
        for _ in 0..4 {
            let base = rng.random_range(0.0..2.0 * PI);
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let atoms: Vec<(C64, f64)> = raw
                .iter()
                .enumerate()
                .map(|(j, w)| {
                    let jitter = rng.random_range(-0.3..0.3) / k as f64;
                    (C64::from_polar(1.0, base + 2.0 * PI * j as f64 / k as f64 + jitter), w / total)
                })
                .collect();
            let mu = MatrixMeasure::scalar(&atoms).expect("measure");
            let (u, _) = naimark_dilation(&mu, 5).expect("dilation");
            let report = naimark_check(&mu, &u, 10).expect("check");
            worst = worst.max(report.max_residual());
            minimal &= report.is_minimal() && u.matrix.nrows() == k;
        }
    }
    let zeta = C64::from_polar(1.0, 1.1);
    let point = MatrixMeasure::scalar(&[(zeta, 1.0)]).expect("measure");
    let (u, _) = naimark_dilation(&point, 5).expect("dilation");
    let report = naimark_check(&point, &u, 10).expect("check");
    let exact = u.matrix.shape() == (1, 1) && (u.matrix[(0, 0)] - zeta.conj()).norm() <= 1e-15;
    let pass = worst <= 1e-9 && minimal && exact && report.max_residual() <= 1e-9;
    outcome(pass, format!("max moment residual {worst:.2e}, minimal {minimal}, point mass exact {exact}"))
}

fn lattice() -> Outcome {
    let n_dim = 5;
    let mut s = linalg::zeros(n_dim, n_dim);
    for i in 0..n_dim - 1 {
        s[(i + 1, i)] = c(1.0, 0.0);
    }
    let dims_ok = (0..=n_dim).all(|n| defect_kernel_lattice(&s, n, 0).expect("lattice").space.dim() == n_dim - n);
    let mut worst: f64 = 0.0;
    for n in 0..=n_dim {
        for m in 0..=n_dim - n {
            let outer = defect_kernel_lattice(&s, n, m).expect("lattice");
            let v = &outer.space.basis;
            for k in 0..=n_dim - n - m {
                for l in 0..=n_dim - n - m - k {
                    let inner = defect_kernel_lattice(&outer.operator, k, l).expect("lattice");
                    let embedded = v * inner.ambient() * v.adjoint();
                    let direct = defect_kernel_lattice(&s, n + k, m + l).expect("lattice").ambient();
                    worst = worst.max(linalg::diff_norm(&embedded, &direct));
                }
            }
        }
    }
    outcome(dims_ok && worst <= 1e-10, format!("dimensions {dims_ok}, max lattice deviation {worst:.2e}"))
}

fn characteristic_coincidence() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..10u64 {
        let seq = random_choice_sequence(1, 1, 1 + (i % 4) as usize, 5000 + i, SequenceKind::TerminateUnitary)
            .expect("generator");
        let u = build_cmv(&seq.adjoint(), None, Variant::U0).expect("build");
        let t0 = truncate(&u).matrix;
        let phi = systems::characteristic_function(&t0).expect("characteristic function");
        let params = schur_parameters(&phi, seq.len() + 2).expect("schur");
        if params.len() != seq.len() {
            worst = f64::INFINITY;
            continue;
        }
        for (a, b) in seq.params().iter().zip(params.params()) {
            worst = worst.max((a[(0, 0)].norm() - b[(0, 0)].norm()).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max modulus deviation {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("unitarity of U0 and its tilde variant", unitarity),
        ("adjoint laws for U0 and T0", adjoint_laws),
        ("scalar CMV conformance", scalar_conformance),
        ("parameter round trip through the CMV realization", round_trip),
        ("realization formula vs coefficient recursion", realization_oracle),
        ("uniqueness bound at |λ| = 0.3", uniqueness_bound),
        ("unitary dilation powers and minimality", unitary_dilations),
        ("Naimark dilation moments", naimark),
        ("defect-kernel lattice of the Jordan shift", lattice),
        ("characteristic function coincidence", characteristic_coincidence),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failures += 1;
        }
        println!("{tag} {:>2} {name}: {}", i + 1, result.detail);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
