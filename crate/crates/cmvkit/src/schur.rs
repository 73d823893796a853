//! The operator Schur algorithm.
//!
//! A Schur function `Θ` with `Θ(0) = Γ` is written as
//! `Θ(λ) = Γ + λ D_{Γ*}(I + λΘ₁(λ)Γ*)⁻¹Θ₁(λ)D_Γ` with `Θ₁` mapping `𝔇_Γ`
//! into `𝔇_{Γ*}`. In defect coordinates (`Q`, `Q_*` orthonormal bases of the
//! two defect spaces) put `R = Q^*D_Γ`, `R_* = D_{Γ*}Q_*`, `G = Q^*Γ*Q_*`;
//! then `Θ = Γ + λR_*ΦR` with `Φ = (I + λΘ₁G)⁻¹Θ₁`, equivalently
//! `Θ₁ = Φ(I - λGΦ)⁻¹`. Both directions are carried out on Taylor
//! coefficients, and the forward direction also on realizations.

use serde::Serialize;

use crate::choice_seq::{ChoiceSequence, DefectBases, Tail};
use crate::cmv::{self, ClosurePolicy, Variant};
use crate::error::{CmvError, Result};
use crate::linalg::{self, CMatrix, ContractionKind, Subspace, C64};
use crate::systems::{self, DiscreteSystem};

/// Truncated power series `c_0 + c_1λ + … + c_Kλ^K`. Coefficients past the
/// list are unknown, not zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    pub input_dim: usize,
    pub output_dim: usize,
    pub coefficients: Vec<CMatrix>,
}

impl TaylorSeries {
    pub fn new(input_dim: usize, output_dim: usize, coefficients: Vec<CMatrix>) -> Result<Self> {
        if let Some(bad) = coefficients.iter().position(|c| c.shape() != (output_dim, input_dim)) {
            return Err(CmvError::ShapeMismatch(format!(
                "coefficient {bad} is not {output_dim}x{input_dim}"
            )));
        }
        Ok(Self { input_dim, output_dim, coefficients })
    }

    /// Series of a polynomial, padded with zero coefficients to `len`.
    pub fn polynomial(input_dim: usize, output_dim: usize, mut coefficients: Vec<CMatrix>, len: usize) -> Result<Self> {
        while coefficients.len() < len {
            coefficients.push(linalg::zeros(output_dim, input_dim));
        }
        Self::new(input_dim, output_dim, coefficients)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Partial sum at `λ`.
    pub fn eval(&self, lambda: C64) -> CMatrix {
        let mut acc = linalg::zeros(self.output_dim, self.input_dim);
        for c in self.coefficients.iter().rev() {
            acc = acc * lambda + c;
        }
        acc
    }

    /// Bound on the omitted tail of a Schur function, `|λ|^{K+1}/(1-|λ|)`.
    pub fn tail_bound(&self, lambda: C64) -> f64 {
        let r = lambda.norm();
        r.powi(self.coefficients.len() as i32) / (1.0 - r)
    }
}

/// A contractive analytic matrix function on the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub enum SchurFunction {
    Constant(CMatrix),
    Realization(DiscreteSystem),
    /// Transfer function of the CMV realization of a choice sequence. With
    /// `depth = Some(d)` only `Γ_0..Γ_{2d+1}` are used.
    Cmv { seq: ChoiceSequence, depth: Option<usize> },
    Taylor(TaylorSeries),
}

impl SchurFunction {
    pub fn input_dim(&self) -> usize {
        match self {
            Self::Constant(g) => g.ncols(),
            Self::Realization(s) => s.input_dim(),
            Self::Cmv { seq, .. } => seq.input_dim(),
            Self::Taylor(t) => t.input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Constant(g) => g.nrows(),
            Self::Realization(s) => s.output_dim(),
            Self::Cmv { seq, .. } => seq.output_dim(),
            Self::Taylor(t) => t.output_dim,
        }
    }

    /// State-space realization, when the representation has one.
    pub fn realization(&self) -> Result<Option<DiscreteSystem>> {
        Ok(match self {
            Self::Constant(g) => Some(constant_system(g)),
            Self::Realization(s) => Some(s.clone()),
            Self::Cmv { seq, depth } => {
                Some(cmv::build_cmv_with(seq, *depth, Variant::U0, ClosurePolicy::Compressed)?.system())
            }
            Self::Taylor(_) => None,
        })
    }

    pub fn value(&self, lambda: C64) -> Result<CMatrix> {
        if lambda.norm() >= 1.0 {
            return Err(CmvError::OutsideDisk { re: lambda.re, im: lambda.im });
        }
        match self {
            Self::Taylor(t) => Ok(t.eval(lambda)),
            other => other.realization()?.expect("non-Taylor forms realize").transfer_value(lambda),
        }
    }

    /// First `count` Taylor coefficients.
    pub fn taylor(&self, count: usize) -> Result<Vec<CMatrix>> {
        match self {
            Self::Taylor(t) => {
                if t.len() < count {
                    return Err(CmvError::DepthExhausted { needed: count, available: t.len() });
                }
                Ok(t.coefficients[..count].to_vec())
            }
            other => Ok(other.realization()?.expect("non-Taylor forms realize").taylor(count)),
        }
    }

    fn series(&self, count: usize) -> Result<Vec<CMatrix>> {
        match self {
            Self::Taylor(t) => Ok(t.coefficients.clone()),
            other => other.taylor(count),
        }
    }
}

fn constant_system(g: &CMatrix) -> DiscreteSystem {
    DiscreteSystem::from_block(g, g.ncols(), g.nrows()).expect("constant system")
}

/// Coordinates of the Möbius representation around `Γ`.
struct Mobius {
    r_star: CMatrix,
    r: CMatrix,
    g: CMatrix,
}

impl Mobius {
    fn new(gamma: &CMatrix, bases: &DefectBases) -> Result<Self> {
        let q = &bases.dom.basis;
        let qs = &bases.codom.basis;
        Ok(Self {
            r_star: linalg::defect(&gamma.adjoint())? * qs,
            r: q.adjoint() * linalg::defect(gamma)?,
            g: q.adjoint() * gamma.adjoint() * qs,
        })
    }
}

/// Pseudoinverse cutoff for `R`, `R_*`: their nonzero singular values are at
/// least the square root of the rank tolerance.
const INVERT_TOL: f64 = 1e-12;

/// One step of the algorithm on a coefficient list.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurStep {
    /// `Γ = Θ(0)`, snapped to exact (co-)isometry when terminal.
    pub gamma: CMatrix,
    pub bases: DefectBases,
    pub kind: ContractionKind,
    /// The iterate `Θ₁` in defect coordinates.
    pub next: SchurFunction,
}

impl SchurStep {
    pub fn is_terminal(&self) -> bool {
        self.kind.is_terminal()
    }
}

fn step_coefficients(coeffs: &[CMatrix], tol: f64) -> Result<(CMatrix, DefectBases, ContractionKind, Vec<CMatrix>)> {
    let c0 = coeffs.first().ok_or(CmvError::DepthExhausted { needed: 1, available: 0 })?;
    let kind = linalg::classify_contraction(c0, tol);
    if kind == ContractionKind::NotContraction {
        return Err(CmvError::NotAContraction { norm: linalg::op_norm(c0), tol });
    }
    let gamma = if kind.is_terminal() { linalg::snap_singular_values(c0) } else { c0.clone() };
    let bases = DefectBases::canonical(&gamma, tol)?;
    let (p, q) = bases.dims();
    if kind.is_terminal() {
        let next = vec![linalg::zeros(q, p); coeffs.len() - 1];
        return Ok((gamma, bases, kind, next));
    }
    let mob = Mobius::new(&gamma, &bases)?;
    let left = linalg::pinv(&mob.r_star, INVERT_TOL);
    let right = linalg::pinv(&mob.r, INVERT_TOL);
    let phi: Vec<CMatrix> = coeffs[1..].iter().map(|c| &left * c * &right).collect();
    // Θ₁ = Φ + λΦGΘ₁.
    let mut t: Vec<CMatrix> = Vec::with_capacity(phi.len());
    for k in 0..phi.len() {
        let mut acc = phi[k].clone();
        for i in 0..k {
            acc += &phi[i] * &mob.g * &t[k - 1 - i];
        }
        t.push(acc);
    }
    Ok((gamma, bases, kind, t))
}

/// Default number of Taylor coefficients used when `n` parameters are
/// requested from a function with unlimited expansion.
pub fn working_depth(n: usize) -> usize {
    2 * n + 4
}

/// `Θ ↦ (Γ₀, Θ₁)`. The iterate is returned as a truncated series one
/// coefficient shorter than the input (`working_depth(1)` coefficients are
/// used for non-series inputs); a constant input gives a constant iterate.
pub fn schur_step(theta: &SchurFunction) -> Result<SchurStep> {
    let tol = linalg::TERMINATION_TOL;
    if let SchurFunction::Constant(g) = theta {
        let (gamma, bases, kind, _) = step_coefficients(std::slice::from_ref(g), tol)?;
        let (p, q) = bases.dims();
        return Ok(SchurStep { gamma, bases, kind, next: SchurFunction::Constant(linalg::zeros(q, p)) });
    }
    let coeffs = theta.series(working_depth(1))?;
    let (gamma, bases, kind, next) = step_coefficients(&coeffs, tol)?;
    let (p, q) = bases.dims();
    Ok(SchurStep {
        gamma,
        bases,
        kind,
        next: SchurFunction::Taylor(TaylorSeries { input_dim: p, output_dim: q, coefficients: next }),
    })
}

/// The first `n` Schur parameters, fewer if the algorithm terminates.
pub fn schur_parameters(theta: &SchurFunction, n: usize) -> Result<ChoiceSequence> {
    let n = n.max(1);
    let tol = linalg::TERMINATION_TOL;
    let mut coeffs = theta.series(working_depth(n))?;
    let mut params = Vec::with_capacity(n);
    let mut tail = Tail::ZeroTail;
    while params.len() < n {
        if coeffs.is_empty() {
            return Err(CmvError::DepthExhausted { needed: n, available: params.len() });
        }
        let (gamma, _, kind, next) = step_coefficients(&coeffs, tol)?;
        params.push(gamma);
        if kind.is_terminal() {
            tail = Tail::Terminated;
            break;
        }
        coeffs = next;
    }
    ChoiceSequence::with_tol(theta.input_dim(), theta.output_dim(), params, tail, tol)
}

/// Schur parameters read directly off a simple conservative realization:
/// `Γ_n = X_C X_B^*` where, with `K` a basis of `ker D_{A^{n-1}}`,
/// `X_B = (Q_{n-1}^*D_{Γ_{n-1}}^+)⋯(Q_0^*D_{Γ_0}^+)B^*K` and
/// `X_C = (Q_{*,n-1}^*D_{Γ*_{n-1}}^+)⋯(Q_{*,0}^*D_{Γ*_0}^+)CA^{n-1}K`.
pub fn schur_parameters_from_realization(sys: &DiscreteSystem, n: usize) -> Result<ChoiceSequence> {
    systems::require_simple_conservative(sys)?;
    let n = n.max(1);
    let tol = linalg::TERMINATION_TOL;
    let h = sys.state_dim();
    let mut params: Vec<CMatrix> = Vec::with_capacity(n);
    let mut bases: Vec<DefectBases> = Vec::with_capacity(n);
    let mut tail = Tail::ZeroTail;

    let push = |g: &CMatrix, params: &mut Vec<CMatrix>, bases: &mut Vec<DefectBases>| -> Result<bool> {
        let kind = linalg::classify_contraction(g, tol);
        if kind == ContractionKind::NotContraction {
            return Err(CmvError::NotAContraction { norm: linalg::op_norm(g), tol });
        }
        let g = if kind.is_terminal() { linalg::snap_singular_values(g) } else { g.clone() };
        bases.push(DefectBases::canonical(&g, tol)?);
        params.push(g);
        Ok(kind.is_terminal())
    };

    if push(&sys.d, &mut params, &mut bases)? {
        tail = Tail::Terminated;
    }
    let mut a_pow = linalg::identity(h);
    for _ in 1..n {
        if tail == Tail::Terminated {
            break;
        }
        let gram = linalg::identity(h) - a_pow.adjoint() * &a_pow;
        let k = linalg::psd_kernel(&linalg::hermitian_part(&gram), linalg::RANK_TOL).basis;
        let mut xb = sys.b.adjoint() * &k;
        let mut xc = &sys.c * &a_pow * &k;
        for (g, b) in params.iter().zip(&bases) {
            let dq = linalg::defect(g)? * &b.dom.basis;
            let dqs = linalg::defect(&g.adjoint())? * &b.codom.basis;
            xb = linalg::pinv(&dq, INVERT_TOL) * xb;
            xc = linalg::pinv(&dqs, INVERT_TOL) * xc;
        }
        let g = xc * xb.adjoint();
        if push(&g, &mut params, &mut bases)? {
            tail = Tail::Terminated;
        }
        a_pow = &sys.a * a_pow;
    }
    ChoiceSequence::with_tol(sys.input_dim(), sys.output_dim(), params, tail, tol)
}

fn compose_in(gamma: &CMatrix, bases: &DefectBases, next: &SchurFunction) -> Result<SchurFunction> {
    let (p, q) = bases.dims();
    if (next.output_dim(), next.input_dim()) != (q, p) {
        return Err(CmvError::ShapeMismatch(format!(
            "iterate is {}x{}, defect coordinates need {q}x{p}",
            next.output_dim(),
            next.input_dim()
        )));
    }
    let mob = Mobius::new(gamma, bases)?;
    match next.realization()? {
        Some(inner) => {
            // (J_Γ ⊕ I)(I ⊕ U₁): input C^a, output C^b, state C^p ⊕ H₁.
            let j = cmv::rotation_in_bases(gamma, bases)?;
            let h1 = inner.state_dim();
            let a = gamma.ncols();
            let left = linalg::direct_sum(&[j, linalg::identity(h1)]);
            let right = linalg::direct_sum(&[linalg::identity(a), inner.block_operator()]);
            let u = left * right;
            Ok(SchurFunction::Realization(DiscreteSystem::from_block(&u, a, gamma.nrows())?))
        }
        None => {
            let t = match next {
                SchurFunction::Taylor(t) => &t.coefficients,
                _ => unreachable!("only series lack realizations"),
            };
            // Φ = Θ₁ - λΘ₁GΦ.
            let mut phi: Vec<CMatrix> = Vec::with_capacity(t.len());
            for k in 0..t.len() {
                let mut acc = t[k].clone();
                for i in 0..k {
                    acc -= &t[i] * &mob.g * &phi[k - 1 - i];
                }
                phi.push(acc);
            }
            let mut coeffs = vec![gamma.clone()];
            coeffs.extend(phi.iter().map(|f| &mob.r_star * f * &mob.r));
            Ok(SchurFunction::Taylor(TaylorSeries {
                input_dim: gamma.ncols(),
                output_dim: gamma.nrows(),
                coefficients: coeffs,
            }))
        }
    }
}

/// Inverse of [`schur_step`]: the function with parameter `Γ` and first
/// iterate `Θ₁` (given in canonical defect coordinates of `Γ`).
pub fn compose_mobius(gamma: &CMatrix, next: &SchurFunction) -> Result<SchurFunction> {
    let bases = DefectBases::canonical(gamma, linalg::TERMINATION_TOL)?;
    compose_in(gamma, &bases, next)
}

/// Realization of the function with Schur parameters `seq`, built by
/// nesting Möbius compositions from the last listed parameter outwards.
pub fn compose_chain(seq: &ChoiceSequence) -> Result<SchurFunction> {
    let last = seq.len() - 1;
    let mut f = SchurFunction::Constant(seq.param(last));
    for k in (0..last).rev() {
        f = compose_in(&seq.param(k), &seq.bases(k), &f)?;
    }
    Ok(f)
}

/// Splitting of a Schur function into a part with pure value at the
/// origin and a unitary constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PurePart {
    pub pure: SchurFunction,
    /// `Θ(0)` restricted to `ker D_{Θ(0)} → ker D_{Θ(0)*}`.
    pub unitary: CMatrix,
    /// Domain split: `(𝔇_{Θ(0)}, ker D_{Θ(0)})`.
    pub domain: (Subspace, Subspace),
    /// Codomain split: `(𝔇_{Θ(0)*}, ker D_{Θ(0)*})`.
    pub codomain: (Subspace, Subspace),
}

pub fn pure_part(theta: &SchurFunction) -> Result<PurePart> {
    let tol = linalg::TERMINATION_TOL;
    let g = theta.taylor(1)?.remove(0);
    let dom = linalg::defect_subspace(&g, tol)?;
    let codom = linalg::defect_subspace(&g.adjoint(), tol)?;
    let dom_k = linalg::orthogonal_complement(&dom);
    let codom_k = linalg::orthogonal_complement(&codom);
    let (qd, qc) = (&dom.basis, &codom.basis);
    let pure = match theta {
        SchurFunction::Constant(c) => SchurFunction::Constant(qc.adjoint() * c * qd),
        SchurFunction::Taylor(t) => SchurFunction::Taylor(TaylorSeries {
            input_dim: qd.ncols(),
            output_dim: qc.ncols(),
            coefficients: t.coefficients.iter().map(|c| qc.adjoint() * c * qd).collect(),
        }),
        other => {
            let s = other.realization()?.expect("realizable");
            SchurFunction::Realization(DiscreteSystem::new(
                qc.adjoint() * &s.d * qd,
                qc.adjoint() * &s.c,
                &s.b * qd,
                s.a.clone(),
            )?)
        }
    };
    let unitary = codom_k.basis.adjoint() * &g * &dom_k.basis;
    Ok(PurePart { pure, unitary, domain: (dom, dom_k), codomain: (codom, codom_k) })
}

/// Reflection `Θ(λ) ↦ Θ*(λ̄)`.
pub fn reflect(theta: &SchurFunction) -> Result<SchurFunction> {
    Ok(match theta {
        SchurFunction::Constant(c) => SchurFunction::Constant(c.adjoint()),
        SchurFunction::Taylor(t) => SchurFunction::Taylor(TaylorSeries {
            input_dim: t.output_dim,
            output_dim: t.input_dim,
            coefficients: t.coefficients.iter().map(|c| c.adjoint()).collect(),
        }),
        other => SchurFunction::Realization(other.realization()?.expect("realizable").adjoint()),
    })
}

/// Carathéodory function `F = f_0 + f_1λ + …` with `f_0 = I`, as a
/// truncated series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaratheodoryFunction {
    pub dim: usize,
    #[serde(skip)]
    pub coefficients: Vec<CMatrix>,
}

impl CaratheodoryFunction {
    pub fn new(coefficients: Vec<CMatrix>) -> Result<Self> {
        let dim = coefficients.first().map_or(0, |c| c.nrows());
        if coefficients.iter().any(|c| c.shape() != (dim, dim)) {
            return Err(CmvError::ShapeMismatch("Carathéodory coefficients must be square".into()));
        }
        let f0 = coefficients.first().ok_or(CmvError::NotNormalized("no coefficients".into()))?;
        let dev = linalg::diff_norm(f0, &linalg::identity(dim));
        if dev > 1e-10 {
            return Err(CmvError::NotNormalized(format!("F(0) differs from I by {dev:e}")));
        }
        Ok(Self { dim, coefficients })
    }

    /// `F = I + 2Σ_{n≥1} S_nλⁿ` from moments `S_0 = I, S_1, …`.
    pub fn from_moments(moments: &[CMatrix]) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(moments.len());
        for (k, s) in moments.iter().enumerate() {
            coeffs.push(if k == 0 { s.clone() } else { s * C64::from(2.0) });
        }
        Self::new(coeffs)
    }

    /// `F_M(λ) = I + 2Σ λⁿ P_M U*ⁿ↾M` for the leading `m` coordinates.
    pub fn of_unitary(u: &CMatrix, m: usize, count: usize) -> Result<Self> {
        let us = u.adjoint();
        let mut pow = linalg::identity(u.nrows());
        let mut moments = Vec::with_capacity(count);
        for _ in 0..count {
            moments.push(linalg::block(&pow, 0, 0, m, m));
            pow = &pow * &us;
        }
        Self::from_moments(&moments)
    }

    pub fn eval(&self, lambda: C64) -> CMatrix {
        let mut acc = linalg::zeros(self.dim, self.dim);
        for c in self.coefficients.iter().rev() {
            acc = acc * lambda + c;
        }
        acc
    }

    /// Smallest eigenvalue of `F(λ) + F(λ)*` (of the partial sum).
    pub fn real_part_min(&self, lambda: C64) -> f64 {
        let f = self.eval(lambda);
        let h = &f + f.adjoint();
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `E(λ) = (1/λ)(F - I)(F + I)⁻¹`, the reflection `Θ*(λ̄)` of the Schur
/// function associated with `F`. One coefficient shorter than `F`.
pub fn cara_to_schur(f: &CaratheodoryFunction) -> Result<SchurFunction> {
    let dim = f.dim;
    let k = f.coefficients.len();
    let half: Vec<CMatrix> = f.coefficients.iter().map(|c| c * C64::from(0.5)).collect();
    // (I + G)⁻¹ with G = Σ_{j≥1} g_jλ^j.
    let mut h: Vec<CMatrix> = vec![linalg::identity(dim)];
    for n in 1..k {
        let mut acc = linalg::zeros(dim, dim);
        for j in 1..=n {
            acc -= &half[j] * &h[n - j];
        }
        h.push(acc);
    }
    let mut e = Vec::with_capacity(k.saturating_sub(1));
    for n in 0..k.saturating_sub(1) {
        let mut acc = linalg::zeros(dim, dim);
        for i in 0..=n {
            acc += &half[i + 1] * &h[n - i];
        }
        e.push(acc);
    }
    Ok(SchurFunction::Taylor(TaylorSeries { input_dim: dim, output_dim: dim, coefficients: e }))
}

/// `F = (I + λE)(I - λE)⁻¹`, inverse of [`cara_to_schur`]. Returns one more
/// coefficient than it is given.
pub fn schur_to_cara(e: &SchurFunction, count: usize) -> Result<CaratheodoryFunction> {
    if e.input_dim() != e.output_dim() {
        return Err(CmvError::NonSquare { rows: e.output_dim(), cols: e.input_dim() });
    }
    let dim = e.input_dim();
    let ec = e.series(count)?;
    let mut w: Vec<CMatrix> = vec![linalg::identity(dim)];
    for k in 1..=ec.len() {
        let mut acc = linalg::zeros(dim, dim);
        for j in 1..=k {
            acc += &ec[j - 1] * &w[k - j];
        }
        w.push(acc);
    }
    let coeffs = w
        .iter()
        .enumerate()
        .map(|(k, wk)| if k == 0 { wk.clone() } else { wk * C64::from(2.0) })
        .collect();
    CaratheodoryFunction::new(coeffs)
}
