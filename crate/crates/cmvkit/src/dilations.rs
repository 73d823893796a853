//! Unitary and Naimark dilations realized as block CMV matrices.

use serde::Serialize;

use crate::choice_seq::{ChoiceSequence, Tail};
use crate::cmv::{self, BlockCMV, Closure, ClosurePolicy, Variant};
use crate::error::{CmvError, Result};
use crate::linalg::{self, CMatrix, Subspace, C64};
use crate::schur::{self, CaratheodoryFunction};
use crate::systems;

/// Tolerance used by dilation reports unless the caller supplies one.
pub const DILATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub zeta: C64,
    pub weight: CMatrix,
}

impl Atom {
    pub fn new(zeta: C64, weight: CMatrix) -> Self {
        Self { zeta, weight }
    }
}

/// A finitely supported probability measure on the unit circle with
/// positive semidefinite matrix weights, or a finite list of its moments
/// `S_0 = I, S_1, …, S_K`.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixMeasure {
    Atomic { dim: usize, atoms: Vec<Atom> },
    Moments(Vec<CMatrix>),
}

impl MatrixMeasure {
    pub fn atomic(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        let mut total = linalg::zeros(dim, dim);
        for (j, a) in atoms.iter().enumerate() {
            if (a.zeta.norm() - 1.0).abs() > 1e-12 {
                return Err(CmvError::NotNormalized(format!("atom {j} is not on the unit circle")));
            }
            if a.weight.shape() != (dim, dim) {
                return Err(CmvError::ShapeMismatch(format!("weight {j} is not {dim}x{dim}")));
            }
            if linalg::diff_norm(&a.weight, &a.weight.adjoint()) > 1e-12 {
                return Err(CmvError::NotNormalized(format!("weight {j} is not Hermitian")));
            }
            let min_eig = linalg::hermitian_part(&a.weight)
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if dim > 0 && min_eig < -1e-12 {
                return Err(CmvError::NotNormalized(format!("weight {j} is not positive semidefinite")));
            }
            total += &a.weight;
        }
        let dev = linalg::diff_norm(&total, &linalg::identity(dim));
        if dev > 1e-10 {
            return Err(CmvError::NotNormalized(format!("weights sum to I up to {dev:e}")));
        }
        Ok(Self::Atomic { dim, atoms })
    }

    pub fn from_moments(moments: Vec<CMatrix>) -> Result<Self> {
        let first = moments.first().ok_or(CmvError::NotNormalized("empty moment list".into()))?;
        let dim = first.nrows();
        if moments.iter().any(|s| s.shape() != (dim, dim)) {
            return Err(CmvError::ShapeMismatch("moments must be square of equal size".into()));
        }
        if linalg::diff_norm(first, &linalg::identity(dim)) > 1e-10 {
            return Err(CmvError::NotNormalized("S_0 differs from I".into()));
        }
        Ok(Self::Moments(moments))
    }

    /// Scalar measure from `(ζ, weight)` pairs.
    pub fn scalar(atoms: &[(C64, f64)]) -> Result<Self> {
        let atoms = atoms.iter().map(|&(z, w)| Atom::new(z, CMatrix::from_element(1, 1, C64::from(w)))).collect();
        Self::atomic(1, atoms)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Atomic { dim, .. } => *dim,
            Self::Moments(m) => m[0].nrows(),
        }
    }

    /// Number of moments available, `None` if unlimited.
    pub fn available(&self) -> Option<usize> {
        match self {
            Self::Atomic { .. } => None,
            Self::Moments(m) => Some(m.len()),
        }
    }

    /// `S_n = Σ_j ζ_j^{-n} w_j`; `S_{-n} = S_n*`.
    pub fn moment(&self, n: i64) -> Result<CMatrix> {
        match self {
            Self::Atomic { dim, atoms } => {
                let mut s = linalg::zeros(*dim, *dim);
                for a in atoms {
                    s += &a.weight * a.zeta.powi(-n as i32);
                }
                Ok(s)
            }
            Self::Moments(m) => {
                let k = n.unsigned_abs() as usize;
                let s = m.get(k).ok_or(CmvError::DepthExhausted { needed: k + 1, available: m.len() })?;
                Ok(if n >= 0 { s.clone() } else { s.adjoint() })
            }
        }
    }

    fn moment_list(&self, count: usize) -> Result<Vec<CMatrix>> {
        let count = self.available().map_or(count, |a| a.min(count));
        (0..count as i64).map(|n| self.moment(n)).collect()
    }
}

/// `S_n` for `μ`.
pub fn moments(mu: &MatrixMeasure, n: i64) -> Result<CMatrix> {
    mu.moment(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationReport {
    pub max_power_checked: usize,
    /// `(n, residual)` pairs.
    pub residuals: Vec<(i64, f64)>,
    /// Rank of the orbit of the embedded space.
    pub minimality_rank: usize,
    /// Dimension of the dilation space.
    pub dimension: usize,
    pub threshold: f64,
    pub pass: bool,
}

impl DilationReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn is_minimal(&self) -> bool {
        self.minimality_rank == self.dimension
    }

    fn finish(max_power: usize, residuals: Vec<(i64, f64)>, u: &CMatrix, m: usize, threshold: f64) -> Result<Self> {
        let (rank, dim) = systems::orbit_rank(u, m, u.nrows())?;
        let pass = residuals.iter().all(|r| r.1 <= threshold) && rank == dim;
        Ok(Self { max_power_checked: max_power, residuals, minimality_rank: rank, dimension: dim, threshold, pass })
    }
}

/// Unitary dilation of a square contraction: the CMV matrix of the choice
/// sequence `(T, 0, 0, …)`, closed unitarily after depth `depth`.
pub fn unitary_dilation(t: &CMatrix, depth: usize) -> Result<BlockCMV> {
    if t.nrows() != t.ncols() {
        return Err(CmvError::NonSquare { rows: t.nrows(), cols: t.ncols() });
    }
    let h = t.nrows();
    let seq = ChoiceSequence::new(h, h, vec![t.clone()], Tail::ZeroTail)?;
    cmv::build_cmv_with(&seq, Some(depth.max(1)), Variant::U0, ClosurePolicy::Unitary)
}

/// Powers a section certifies: unlimited when exact, else its depth.
fn power_budget(cmv: &BlockCMV) -> Option<usize> {
    match cmv.closure() {
        Closure::Exact => None,
        _ => cmv.depth(),
    }
}

/// `‖Tⁿ - P_H𝒰ⁿ↾H‖` for `n = 1..=n_max` plus the minimality rank.
pub fn dilation_check(t: &CMatrix, cmv: &BlockCMV, n_max: usize) -> Result<DilationReport> {
    if let Some(depth) = power_budget(cmv) {
        if n_max > depth {
            return Err(CmvError::PowerBudgetExceeded { requested: n_max, depth });
        }
    }
    let h = t.nrows();
    let u = &cmv.matrix;
    let mut residuals = Vec::with_capacity(n_max);
    let mut tp = linalg::identity(h);
    let mut up = linalg::identity(u.nrows());
    for n in 1..=n_max {
        tp = &tp * t;
        up = &up * u;
        residuals.push((n as i64, linalg::diff_norm(&tp, &linalg::block(&up, 0, 0, h, h))));
    }
    DilationReport::finish(n_max, residuals, u, h, 1e-10)
}

/// Schur parameters of the function `E = cara_to_schur(F_μ)`; these are the
/// Verblunsky coefficients of `μ`.
pub fn verblunsky_from_measure(mu: &MatrixMeasure, n: usize) -> Result<ChoiceSequence> {
    let moments = mu.moment_list(schur::working_depth(n.max(1)) + 1)?;
    verblunsky_from_moments(&moments, n)
}

pub fn verblunsky_from_moments(moments: &[CMatrix], n: usize) -> Result<ChoiceSequence> {
    let f = CaratheodoryFunction::from_moments(moments)?;
    let e = schur::cara_to_schur(&f)?;
    schur::schur_parameters(&e, n)
}

/// Naimark dilation of `μ` as a CMV matrix with `S_n = P_M𝒰ⁿ↾M`; the
/// report covers `|n| <= depth`.
pub fn naimark_dilation(mu: &MatrixMeasure, depth: usize) -> Result<(BlockCMV, DilationReport)> {
    let seq = verblunsky_from_measure(mu, 2 * depth + 2)?;
    let cmv = cmv::build_cmv(&seq, Some(depth), Variant::U0)?;
    let report = naimark_check(mu, &cmv, depth)?;
    Ok((cmv, report))
}

/// `‖S_n - P_M𝒰ⁿ↾M‖` for `|n| <= n_max`.
pub fn naimark_check(mu: &MatrixMeasure, cmv: &BlockCMV, n_max: usize) -> Result<DilationReport> {
    if let Some(depth) = power_budget(cmv) {
        if n_max > depth {
            return Err(CmvError::PowerBudgetExceeded { requested: n_max, depth });
        }
    }
    let m = mu.dim();
    let u = &cmv.matrix;
    if u.nrows() != u.ncols() {
        return Err(CmvError::NonSquare { rows: u.nrows(), cols: u.ncols() });
    }
    let mut residuals = Vec::with_capacity(2 * n_max + 1);
    let mut fwd = linalg::identity(u.nrows());
    let mut back = linalg::identity(u.nrows());
    let us = u.adjoint();
    residuals.push((0, linalg::diff_norm(&mu.moment(0)?, &linalg::identity(m))));
    for n in 1..=n_max as i64 {
        fwd = &fwd * u;
        back = &back * &us;
        residuals.push((n, linalg::diff_norm(&mu.moment(n)?, &linalg::block(&fwd, 0, 0, m, m))));
        residuals.push((-n, linalg::diff_norm(&mu.moment(-n)?, &linalg::block(&back, 0, 0, m, m))));
    }
    DilationReport::finish(n_max, residuals, u, m, DILATION_TOL)
}

/// CMV model of a unitary `U` with cyclic subspace `M`: the Naimark
/// dilation of `S_n = P_M Uⁿ↾M`.
pub fn cyclic_model(u: &CMatrix, m_basis: &Subspace, depth: usize) -> Result<(ChoiceSequence, BlockCMV)> {
    let residual = linalg::unitarity_residual(u)?;
    if residual > 1e-10 {
        return Err(CmvError::NotUnitary { residual });
    }
    let dim = u.nrows();
    if m_basis.ambient_dim != dim || m_basis.orthonormality_residual() > 1e-10 {
        return Err(CmvError::ShapeMismatch("M needs an orthonormal basis in the space of U".into()));
    }
    let m = m_basis.dim();
    let w = linalg::hstack(&[&m_basis.basis, &linalg::orthogonal_complement(m_basis).basis]);
    let uw = w.adjoint() * u * &w;
    let (rank, _) = systems::orbit_rank(&uw, m, dim)?;
    if rank < dim {
        return Err(CmvError::NotCyclic { rank, dim });
    }
    let n = (dim + 1).max(2 * depth + 2);
    let count = schur::working_depth(n) + 1;
    let mut moments = Vec::with_capacity(count);
    let mut pow = linalg::identity(dim);
    for _ in 0..count {
        moments.push(linalg::block(&pow, 0, 0, m, m));
        pow = &pow * &uw;
    }
    let seq = verblunsky_from_moments(&moments, n)?;
    let cmv = cmv::build_cmv(&seq, Some(depth), Variant::U0)?;
    Ok((seq, cmv))
}
