//! Block CMV matrices.
//!
//! Every matrix here is assembled from the factorization `𝒰₀ = ℒ₀ℳ₀`,
//! `𝒰̃₀ = ℳ̃₀ℒ₀` with block-diagonal factors of elementary rotations.
//!
//! Coordinates. With `p_j = dim 𝔇_{Γ_j}` and `q_j = dim 𝔇_{Γ_j*}`, the
//! domain of `𝒰₀` is `M ⊕ 𝔇_{Γ₀} ⊕ 𝔇_{Γ₁*} ⊕ 𝔇_{Γ₂} ⊕ …` and its codomain
//! is the same chain with `M` replaced by `N`. `𝒰̃₀` acts on the chain
//! `M ⊕ 𝔇_{Γ₀*} ⊕ 𝔇_{Γ₁} ⊕ 𝔇_{Γ₂*} ⊕ …` (and `N ⊕ …` on the output side).
//!
//! Finite sections. A section uses full rotations `J_{Γ_0}, …, J_{Γ_{K-1}}`
//! and closes the chain with a corner block at index `K`:
//! - [`Closure::Exact`]: `K` is the terminal index of a terminated sequence
//!   and the corner is `Γ_K` itself. Nothing is lost.
//! - [`Closure::Unitary`]: the corner is the identity of `𝔇_{Γ_{K-1}}`,
//!   which needs `p_{K-1} = q_{K-1}`. The result is unitary and is the CMV
//!   matrix of the sequence `(Γ_0, …, Γ_{K-1}, I)`.
//! - [`Closure::Compressed`]: the corner is `Γ_K`. The result is a
//!   contraction whose transfer function is exact when `Γ_{K+1} = 0` and
//!   everything after it vanishes.

use serde::Serialize;

use crate::choice_seq::{ChoiceSequence, DefectBases};
use crate::error::{CmvError, Result};
use crate::linalg::{self, CMatrix, ContractionKind};
use crate::systems::DiscreteSystem;

/// Shape of an elementary rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationForm {
    /// `[[Γ, D_{Γ*}], [D_Γ, -Γ*]]`.
    Full,
    /// `[Γ, D_{Γ*}]`, for isometric `Γ`.
    Row,
    /// `[Γ; D_Γ]`, for co-isometric `Γ`.
    Column,
    /// `Γ` alone, for unitary `Γ`.
    Bare,
}

impl RotationForm {
    pub fn for_kind(kind: ContractionKind) -> Option<Self> {
        match kind {
            ContractionKind::NotContraction => None,
            ContractionKind::Generic | ContractionKind::Pure => Some(Self::Full),
            ContractionKind::Isometric => Some(Self::Row),
            ContractionKind::CoIsometric => Some(Self::Column),
            ContractionKind::Unitary => Some(Self::Bare),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Row => "row",
            Self::Column => "column",
            Self::Bare => "bare",
        }
    }
}

/// Elementary rotation of `Γ` in canonical defect bases. `form = None`
/// picks the form from [`linalg::classify_contraction`]; an explicit form
/// must agree with it.
pub fn elementary_rotation(gamma: &CMatrix, form: Option<RotationForm>) -> Result<CMatrix> {
    let kind = linalg::classify_contraction(gamma, linalg::RANK_TOL);
    let actual = RotationForm::for_kind(kind).ok_or(CmvError::NotAContraction {
        norm: linalg::op_norm(gamma),
        tol: linalg::CONTRACTION_TOL,
    })?;
    if let Some(f) = form {
        if f != actual {
            return Err(CmvError::TagMismatch { expected: f.name().into(), found: kind.to_string() });
        }
    }
    let bases = DefectBases::canonical(gamma, linalg::RANK_TOL)?;
    rotation_in_bases(gamma, &bases)
}

/// `J = [[Γ, D_{Γ*}Q_*], [Q^*D_Γ, -Q^*Γ*Q_*]]` where `Q`, `Q_*` are the
/// given defect bases. Rows or columns of zero width drop out, which yields
/// the row, column and bare forms automatically.
pub fn rotation_in_bases(gamma: &CMatrix, bases: &DefectBases) -> Result<CMatrix> {
    let (b, a) = gamma.shape();
    let q = &bases.dom.basis;
    let qs = &bases.codom.basis;
    let (p, qd) = (q.ncols(), qs.ncols());
    let d = linalg::defect(gamma)?;
    let ds = linalg::defect(&gamma.adjoint())?;
    let mut j = linalg::zeros(b + p, a + qd);
    linalg::set_block(&mut j, 0, 0, gamma);
    linalg::set_block(&mut j, 0, a, &(ds * qs));
    linalg::set_block(&mut j, b, 0, &(q.adjoint() * d));
    linalg::set_block(&mut j, b, a, &-(q.adjoint() * gamma.adjoint() * qs));
    Ok(j)
}

/// How a finite section ends; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Exact,
    Unitary,
    Compressed,
}

/// Requested closure policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosurePolicy {
    /// Exact if possible, then unitary, then compressed.
    #[default]
    Auto,
    Unitary,
    Compressed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    U0,
    U0Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TruncVariant {
    T0,
    T0Tilde,
}

/// Offsets and sizes of block groups: group 0 is the input (or output)
/// space, group `g >= 1` holds chain entries `2g-2` and `2g-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub blocks: Vec<(usize, usize)>,
}

impl BlockLayout {
    fn new(first: usize, entries: &[usize]) -> Self {
        let mut blocks = vec![(0, first)];
        let mut off = first;
        for pair in entries.chunks(2) {
            let size: usize = pair.iter().sum();
            blocks.push((off, size));
            off += size;
        }
        Self { blocks }
    }

    pub fn total(&self) -> usize {
        self.blocks.last().map_or(0, |&(o, s)| o + s)
    }

    /// Group index of a row or column index.
    pub fn group_of(&self, index: usize) -> Option<usize> {
        self.blocks.iter().position(|&(o, s)| index >= o && index < o + s)
    }
}

/// The four block-diagonal factors of a finite section.
#[derive(Debug, Clone, PartialEq)]
pub struct CmvFactors {
    /// `ℒ₀ = J_{Γ₀} ⊕ J_{Γ₂} ⊕ …`.
    pub l0: CMatrix,
    /// `ℳ₀ = I_M ⊕ 𝒱₀`.
    pub m0: CMatrix,
    /// `ℳ̃₀ = I_N ⊕ 𝒱₀`.
    pub m0_tilde: CMatrix,
    /// `𝒱₀ = J_{Γ₁} ⊕ J_{Γ₃} ⊕ …`.
    pub v0: CMatrix,
    /// Depth `d`; `None` when the section is exact with no depth limit.
    pub depth: Option<usize>,
    /// Index `K` of the corner block.
    pub corner_index: usize,
    pub closure: Closure,
    /// Chain entry sizes on the `𝒰₀` side (`p_0, q_1, p_2, …`).
    pub x_dims: Vec<usize>,
    /// Chain entry sizes on the `𝒰̃₀` side (`q_0, p_1, q_2, …`).
    pub y_dims: Vec<usize>,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl CmvFactors {
    /// The parameters whose CMV matrix this section is, as far as the
    /// section sees them: `Γ_0..Γ_{K-1}` followed by the corner.
    pub fn effective_parameters(&self, seq: &ChoiceSequence) -> Vec<CMatrix> {
        let k = self.corner_index;
        let mut out: Vec<CMatrix> = (0..k).map(|i| seq.param(i)).collect();
        out.push(match self.closure {
            Closure::Unitary => linalg::identity(self.x_dims[k - 1]),
            _ => seq.param(k),
        });
        out
    }

    /// `ℒ₀` with the input and output rows/columns removed.
    pub fn l0_inner(&self) -> CMatrix {
        let (r, c) = self.l0.shape();
        linalg::block(&self.l0, self.output_dim, self.input_dim, r - self.output_dim, c - self.input_dim)
    }
}

/// Resolves depth and closure into a corner index.
fn plan(seq: &ChoiceSequence, depth: Option<usize>, policy: ClosurePolicy) -> Result<(Option<usize>, usize, Closure)> {
    if let Some(n) = seq.terminal_index() {
        if depth.is_none_or(|d| n <= 2 * d + 1) {
            if policy == ClosurePolicy::Unitary
                && linalg::classify_contraction(&seq.params()[n], seq.tol()) != ContractionKind::Unitary
            {
                return Err(CmvError::InvalidSequence(
                    "terminal parameter is not unitary, no unitary section exists".into(),
                ));
            }
            return Ok((depth, n, Closure::Exact));
        }
    }
    let d = depth.unwrap_or_else(|| seq.len().saturating_sub(1).div_ceil(2));
    let k = 2 * d + 1;
    let (p, q) = seq.defect_dims(k - 1);
    let closure = match policy {
        ClosurePolicy::Compressed => Closure::Compressed,
        ClosurePolicy::Unitary if p != q => {
            return Err(CmvError::InvalidSequence(format!(
                "defect dimensions {p} and {q} differ, no unitary section exists"
            )))
        }
        ClosurePolicy::Auto if p != q => Closure::Compressed,
        _ => Closure::Unitary,
    };
    Ok((Some(d), k, closure))
}

/// Builds `ℒ₀`, `ℳ₀`, `ℳ̃₀` and `𝒱₀` for a finite section; see the module
/// docs for the meaning of `depth` and the closure policy.
pub fn build_factors(seq: &ChoiceSequence, depth: Option<usize>, policy: ClosurePolicy) -> Result<CmvFactors> {
    let (depth, k_max, closure) = plan(seq, depth, policy)?;
    let (m, n) = (seq.input_dim(), seq.output_dim());
    let mut x_dims = Vec::with_capacity(k_max);
    let mut y_dims = Vec::with_capacity(k_max);
    for j in 0..k_max {
        let (p, q) = seq.defect_dims(j);
        if j % 2 == 0 {
            x_dims.push(p);
            y_dims.push(q);
        } else {
            x_dims.push(q);
            y_dims.push(p);
        }
    }
    let offsets = |dims: &[usize]| -> Vec<usize> {
        let mut acc = 0;
        dims.iter()
            .map(|&d| {
                let o = acc;
                acc += d;
                o
            })
            .collect()
    };
    let xoff = offsets(&x_dims);
    let yoff = offsets(&y_dims);
    let sx: usize = x_dims.iter().sum();
    let sy: usize = y_dims.iter().sum();

    let mut l0 = linalg::zeros(n + sx, m + sy);
    let mut v0 = linalg::zeros(sy, sx);

    for k in 0..k_max {
        let j = rotation_in_bases(&seq.param(k), &seq.bases(k))?;
        if k == 0 {
            linalg::set_block(&mut l0, 0, 0, &j);
        } else if k % 2 == 0 {
            linalg::set_block(&mut l0, n + xoff[k - 1], m + yoff[k - 1], &j);
        } else {
            linalg::set_block(&mut v0, yoff[k - 1], xoff[k - 1], &j);
        }
    }

    let corner = match closure {
        Closure::Unitary => linalg::identity(x_dims[k_max - 1]),
        _ => seq.param(k_max),
    };
    if k_max == 0 {
        linalg::set_block(&mut l0, 0, 0, &corner);
    } else if k_max % 2 == 0 {
        linalg::set_block(&mut l0, n + xoff[k_max - 1], m + yoff[k_max - 1], &corner);
    } else {
        linalg::set_block(&mut v0, yoff[k_max - 1], xoff[k_max - 1], &corner);
    }

    let m0 = linalg::direct_sum(&[linalg::identity(m), v0.clone()]);
    let m0_tilde = linalg::direct_sum(&[linalg::identity(n), v0.clone()]);
    Ok(CmvFactors {
        l0,
        m0,
        m0_tilde,
        v0,
        depth,
        corner_index: k_max,
        closure,
        x_dims,
        y_dims,
        input_dim: m,
        output_dim: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCMV {
    pub matrix: CMatrix,
    pub variant: Variant,
    pub row_layout: BlockLayout,
    pub col_layout: BlockLayout,
    pub factors: CmvFactors,
    pub seq: ChoiceSequence,
}

impl BlockCMV {
    /// The factor pair whose product is `matrix`, left factor first.
    pub fn factor_pair(&self) -> (&CMatrix, &CMatrix) {
        match self.variant {
            Variant::U0 => (&self.factors.l0, &self.factors.m0),
            Variant::U0Tilde => (&self.factors.m0_tilde, &self.factors.l0),
        }
    }

    pub fn depth(&self) -> Option<usize> {
        self.factors.depth
    }

    pub fn closure(&self) -> Closure {
        self.factors.closure
    }

    pub fn input_dim(&self) -> usize {
        self.seq.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.seq.output_dim()
    }

    /// `max(‖U*U - I‖, ‖UU* - I‖)`, or `None` for a non-square section.
    pub fn unitarity_residual(&self) -> Option<f64> {
        linalg::unitarity_residual(&self.matrix).ok()
    }

    /// `[[D, C], [B, A]]` split with input `M` and output `N`.
    pub fn system(&self) -> DiscreteSystem {
        DiscreteSystem::from_block(&self.matrix, self.input_dim(), self.output_dim())
            .expect("CMV layout is consistent")
    }

    /// Largest entry outside the block tridiagonal band.
    pub fn off_band_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                let (gi, gj) = (self.row_layout.group_of(i), self.col_layout.group_of(j));
                if let (Some(gi), Some(gj)) = (gi, gj) {
                    if gi.abs_diff(gj) >= 2 {
                        worst = worst.max(self.matrix[(i, j)].norm());
                    }
                }
            }
        }
        worst
    }
}

/// Block CMV matrix with the default closure policy.
pub fn build_cmv(seq: &ChoiceSequence, depth: Option<usize>, variant: Variant) -> Result<BlockCMV> {
    build_cmv_with(seq, depth, variant, ClosurePolicy::Auto)
}

pub fn build_cmv_with(
    seq: &ChoiceSequence,
    depth: Option<usize>,
    variant: Variant,
    policy: ClosurePolicy,
) -> Result<BlockCMV> {
    let factors = build_factors(seq, depth, policy)?;
    let (m, n) = (seq.input_dim(), seq.output_dim());
    let (matrix, row_layout, col_layout) = match variant {
        Variant::U0 => (
            &factors.l0 * &factors.m0,
            BlockLayout::new(n, &factors.x_dims),
            BlockLayout::new(m, &factors.x_dims),
        ),
        Variant::U0Tilde => (
            &factors.m0_tilde * &factors.l0,
            BlockLayout::new(n, &factors.y_dims),
            BlockLayout::new(m, &factors.y_dims),
        ),
    };
    Ok(BlockCMV { matrix, variant, row_layout, col_layout, factors, seq: seq.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedCMV {
    pub matrix: CMatrix,
    pub variant: TruncVariant,
    /// Left and right factor.
    pub factors: (CMatrix, CMatrix),
    pub seq: ChoiceSequence,
}

/// Removes the input column group and output row group:
/// `𝒯₀ = ℒ₀' 𝒱₀` and `𝒯̃₀ = 𝒱₀ ℒ₀'` where `ℒ₀' = diag(-Γ₀*, J_{Γ₂}, …)`
/// in defect coordinates.
pub fn truncate(cmv: &BlockCMV) -> TruncatedCMV {
    let inner = cmv.factors.l0_inner();
    let v0 = cmv.factors.v0.clone();
    let (variant, factors) = match cmv.variant {
        Variant::U0 => (TruncVariant::T0, (inner, v0)),
        Variant::U0Tilde => (TruncVariant::T0Tilde, (v0, inner)),
    };
    TruncatedCMV { matrix: &factors.0 * &factors.1, variant, factors, seq: cmv.seq.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntertwinerReport {
    /// `‖𝒱₀𝒯₀ - 𝒯̃₀𝒱₀‖`.
    pub truncation_residual: f64,
    /// `‖ℳ̃₀𝒰₀ - 𝒰̃₀ℳ₀‖`.
    pub cmv_residual: f64,
}

impl IntertwinerReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.truncation_residual <= tol && self.cmv_residual <= tol
    }
}

pub fn intertwiner_check(seq: &ChoiceSequence, depth: Option<usize>) -> Result<IntertwinerReport> {
    let u = build_cmv(seq, depth, Variant::U0)?;
    let ut = build_cmv(seq, depth, Variant::U0Tilde)?;
    let t = truncate(&u);
    let tt = truncate(&ut);
    let v0 = &u.factors.v0;
    Ok(IntertwinerReport {
        truncation_residual: linalg::diff_norm(&(v0 * &t.matrix), &(&tt.matrix * v0)),
        cmv_residual: linalg::diff_norm(
            &(&u.factors.m0_tilde * &u.matrix),
            &(&ut.matrix * &u.factors.m0),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice_seq::{random_choice_sequence, SequenceKind, Tail};
    use crate::linalg::{c, C64};

    fn scalar(vals: &[f64], tail: Tail) -> ChoiceSequence {
        let v: Vec<C64> = vals.iter().map(|&x| c(x, 0.0)).collect();
        ChoiceSequence::scalar(&v, tail).unwrap()
    }

    #[test]
    fn rotation_examples() {
        let j = elementary_rotation(&linalg::zeros(1, 1), None).unwrap();
        assert!(linalg::diff_norm(&j, &linalg::from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0])) < 1e-15);

        let g = c(0.3, 0.4);
        let rho = (1.0 - g.norm_sqr()).sqrt();
        let j = elementary_rotation(&CMatrix::from_element(1, 1, g), Some(RotationForm::Full)).unwrap();
        let expect = CMatrix::from_row_slice(2, 2, &[g, c(rho, 0.0), c(rho, 0.0), -g.conj()]);
        assert!(linalg::diff_norm(&j, &expect) < 1e-15);

        let mut rng = rand::rng();
        let u = linalg::random::unitary(&mut rng, 2);
        let j = elementary_rotation(&u, None).unwrap();
        assert_eq!(j, u);
        assert!(matches!(
            elementary_rotation(&u, Some(RotationForm::Full)),
            Err(CmvError::TagMismatch { .. })
        ));
    }

    #[test]
    fn row_and_column_forms() {
        let mut rng = rand::rng();
        let v = linalg::random::isometry(&mut rng, 3, 2);
        let row = elementary_rotation(&v, Some(RotationForm::Row)).unwrap();
        assert_eq!(row.shape(), (3, 3));
        assert!(linalg::unitarity_residual(&row).unwrap() < 1e-12);
        let col = elementary_rotation(&v.adjoint(), Some(RotationForm::Column)).unwrap();
        assert_eq!(col.shape(), (3, 3));
        assert!(linalg::unitarity_residual(&col).unwrap() < 1e-12);
    }

    #[test]
    fn unitary_final_parameter_closes_exactly() {
        let s = ChoiceSequence::scalar(&[c(0.5, 0.0), c(0.0, 1.0)], Tail::Terminated).unwrap();
        let f = build_factors(&s, None, ClosurePolicy::Auto).unwrap();
        assert_eq!(f.closure, Closure::Exact);
        let expect = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
        assert!(linalg::diff_norm(&f.m0, &expect) < 1e-15);
    }

    #[test]
    fn zero_sequence_factors_are_swaps() {
        let s = scalar(&[0.0, 0.0, 0.0], Tail::ZeroTail);
        let f = build_factors(&s, Some(2), ClosurePolicy::Auto).unwrap();
        let swap = linalg::from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let expect = linalg::direct_sum(&[swap.clone(), swap.clone(), swap]);
        assert_eq!(f.l0, expect);
        let u = build_cmv(&s, Some(2), Variant::U0).unwrap();
        let t = truncate(&u);
        // A partial isometry of rank 4: the corner -Γ₀* vanishes.
        assert_eq!(linalg::rank(&t.matrix, 1e-9), 4);
        let tt = t.matrix.adjoint() * &t.matrix;
        assert!(linalg::diff_norm(&(&tt * &tt), &tt) < 1e-15);
        let r = intertwiner_check(&s, Some(2)).unwrap();
        assert_eq!((r.truncation_residual, r.cmv_residual), (0.0, 0.0));
    }

    #[test]
    fn unitary_gamma0_gives_bare_matrix() {
        let s = random_choice_sequence(2, 2, 0, 4, SequenceKind::TerminateUnitary).unwrap();
        let u = build_cmv(&s, None, Variant::U0).unwrap();
        assert_eq!(u.matrix, s.params()[0]);
        assert_eq!(u.system().state_dim(), 0);
    }

    #[test]
    fn second_chain_block_is_gamma2_times_defect() {
        let s = random_choice_sequence(2, 2, 4, 9, SequenceKind::Pure).unwrap();
        let u = build_cmv(&s, Some(2), Variant::U0).unwrap();
        let (p0, q1) = (u.factors.x_dims[0], u.factors.x_dims[1]);
        let p2 = u.factors.x_dims[2];
        let b1 = s.bases(1);
        let expect = s.param(2) * b1.dom.basis.adjoint() * linalg::defect(&s.param(1)).unwrap();
        // Row entry 1 (𝔇_{Γ₁*}), column entry 0 (𝔇_{Γ₀}).
        let got = linalg::block(&u.matrix, 2 + p0, 2, q1, p0);
        assert_eq!(p2, s.defect_dims(2).0);
        assert!(linalg::diff_norm(&got, &expect) < 1e-12);
    }

    #[test]
    fn scalar_rows_are_five_diagonal() {
        let s = scalar(&[0.3, -0.2, 0.5, 0.1, 0.4], Tail::ZeroTail);
        let u = build_cmv(&s, Some(3), Variant::U0).unwrap();
        for i in 0..u.matrix.nrows() {
            for j in 0..u.matrix.ncols() {
                if i.abs_diff(j) >= 3 {
                    assert_eq!(u.matrix[(i, j)], c(0.0, 0.0));
                }
            }
        }
        assert_eq!(u.off_band_norm(), 0.0);
    }

    #[test]
    fn nonsquare_pure_sequence_is_compressed() {
        let s = random_choice_sequence(1, 2, 3, 2, SequenceKind::Pure).unwrap();
        let u = build_cmv(&s, Some(2), Variant::U0).unwrap();
        assert_eq!(u.closure(), Closure::Compressed);
        assert!(linalg::op_norm(&u.matrix) <= 1.0 + 1e-12);
        assert!(build_cmv_with(&s, Some(2), Variant::U0, ClosurePolicy::Unitary).is_err());
    }

    #[test]
    fn truncation_drops_first_rows_and_columns() {
        let s = random_choice_sequence(2, 2, 5, 1, SequenceKind::Pure).unwrap();
        for variant in [Variant::U0, Variant::U0Tilde] {
            let u = build_cmv(&s, Some(2), variant).unwrap();
            let t = truncate(&u);
            let (r, cc) = u.matrix.shape();
            let sub = linalg::block(&u.matrix, 2, 2, r - 2, cc - 2);
            assert!(linalg::diff_norm(&sub, &t.matrix) < 1e-14);
        }
    }
}
