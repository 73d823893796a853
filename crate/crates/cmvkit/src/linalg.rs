//! Dense complex-matrix kernel.
//!
//! Defect operators `D_T = (I - T*T)^{1/2}`, defect subspaces with explicit
//! orthonormal bases, Moore-Penrose pseudoinverses, contraction tags and
//! residual norms. Every operator norm here is the largest singular value.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CmvError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default rank tolerance applied to the eigenvalues of `I - T*T`.
pub const RANK_TOL: f64 = 1e-9;
/// Slack allowed above norm one before a matrix stops being a contraction.
pub const CONTRACTION_TOL: f64 = 1e-9;
/// Threshold at which a Schur parameter is declared (co-)isometric.
pub const TERMINATION_TOL: f64 = 1e-8;

const EIGEN_CLAMP: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a matrix from row-major real entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Operator (spectral) norm; zero for empty matrices.
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn diff_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    op_norm(&(a - b))
}

pub fn hermitian_part(h: &CMatrix) -> CMatrix {
    (h + h.adjoint()).scale(0.5)
}

fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let e = SymmetricEigen::new(hermitian_part(h));
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// Square root of a Hermitian positive semidefinite matrix. Eigenvalues
/// below zero (rounding noise) are clamped before the root is taken.
pub fn psd_sqrt(h: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(h);
    sqrt_from_eigh(&vals, &vecs)
}

fn sqrt_from_eigh(vals: &[f64], vecs: &CMatrix) -> CMatrix {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &lam) in vals.iter().enumerate() {
        let r = if lam < EIGEN_CLAMP { lam.max(0.0) } else { lam }.sqrt();
        for i in 0..n {
            scaled[(i, j)] *= r;
        }
    }
    hermitian_part(&(scaled * vecs.adjoint()))
}

fn check_contraction(t: &CMatrix, tol: f64) -> Result<()> {
    let norm = op_norm(t);
    if norm > 1.0 + tol || !norm.is_finite() {
        return Err(CmvError::NotAContraction { norm, tol });
    }
    Ok(())
}

/// A subspace of `C^ambient_dim` given by an orthonormal basis (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    pub ambient_dim: usize,
    #[serde(with = "crate::io::matrix_serde")]
    pub basis: CMatrix,
}

impl Subspace {
    pub fn new(basis: CMatrix) -> Self {
        Self { ambient_dim: basis.nrows(), basis }
    }

    pub fn whole(n: usize) -> Self {
        Self::new(identity(n))
    }

    pub fn trivial(n: usize) -> Self {
        Self::new(zeros(n, 0))
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `‖basis* basis - I‖`.
    pub fn orthonormality_residual(&self) -> f64 {
        diff_norm(&(self.basis.adjoint() * &self.basis), &identity(self.dim()))
    }

    /// Distance between the orthogonal projectors of two subspaces.
    pub fn distance(&self, other: &Subspace) -> f64 {
        diff_norm(&self.projector(), &other.projector())
    }
}

/// Canonical orthonormal basis of the range of an orthogonal projector of
/// known rank: Gram-Schmidt over the projector's columns in natural order,
/// skipping columns whose residual is small. A full-rank projector yields
/// the identity, and the basis varies continuously with the projector.
fn canonical_basis(p: &CMatrix, rank: usize) -> CMatrix {
    let n = p.nrows();
    if rank == n {
        return identity(n);
    }
    let mut out = zeros(n, rank);
    if rank == 0 {
        return out;
    }
    let threshold = 0.5 / (n as f64).sqrt();
    let mut k = 0;
    for j in 0..n {
        if k == rank {
            break;
        }
        let mut v = p.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..k {
                let q = out.column(i);
                let coef = q.dotc(&v);
                v -= q * coef;
            }
        }
        let norm = v.norm();
        if norm > threshold {
            out.set_column(k, &(v / C64::from(norm)));
            k += 1;
        }
    }
    if k < rank {
        let (vals, vecs) = eigh(p);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        for (k, &j) in order.iter().take(rank).enumerate() {
            out.set_column(k, &vecs.column(j));
        }
    }
    out
}

fn range_from_eigh(vals: &[f64], vecs: &CMatrix, keep: impl Fn(f64) -> bool) -> Subspace {
    let n = vals.len();
    let idx: Vec<usize> = (0..n).filter(|&j| keep(vals[j])).collect();
    let mut v = zeros(n, idx.len());
    for (k, &j) in idx.iter().enumerate() {
        v.set_column(k, &vecs.column(j));
    }
    let p = &v * v.adjoint();
    Subspace::new(canonical_basis(&p, idx.len()))
}

/// Defect operator and an orthonormal basis of its range, from one
/// eigendecomposition of `I - T*T`. The rank counts eigenvalues of
/// `I - T*T` (the squared singular values of `D_T`) above `rank_tol`.
pub fn defect_parts(t: &CMatrix, rank_tol: f64) -> Result<(CMatrix, Subspace)> {
    check_contraction(t, CONTRACTION_TOL.max(rank_tol))?;
    let n = t.ncols();
    let h = identity(n) - t.adjoint() * t;
    let (vals, vecs) = eigh(&h);
    let d = sqrt_from_eigh(&vals, &vecs);
    let space = range_from_eigh(&vals, &vecs, |lam| lam > rank_tol);
    Ok((d, space))
}

/// `D_T = (I - T*T)^{1/2}`.
pub fn defect(t: &CMatrix) -> Result<CMatrix> {
    defect_parts(t, RANK_TOL).map(|(d, _)| d)
}

/// Orthonormal basis of `ran D_T`.
pub fn defect_subspace(t: &CMatrix, tol: f64) -> Result<Subspace> {
    defect_parts(t, tol).map(|(_, s)| s)
}

/// Null space of a Hermitian positive semidefinite matrix.
pub fn psd_kernel(h: &CMatrix, tol: f64) -> Subspace {
    let (vals, vecs) = eigh(h);
    range_from_eigh(&vals, &vecs, |lam| lam <= tol)
}

fn effective_tol(tol: f64, smax: f64) -> f64 {
    tol * smax.max(1.0)
}

/// Numerical rank: singular values above `tol * max(1, σ_max)`.
pub fn rank(m: &CMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    let cut = effective_tol(tol, s.first().copied().unwrap_or(0.0));
    s.iter().filter(|&&x| x > cut).count()
}

/// Moore-Penrose pseudoinverse; singular values at or below
/// `tol * max(1, σ_max)` are treated as zero.
pub fn pinv(m: &CMatrix, tol: f64) -> CMatrix {
    let (r, cdim) = m.shape();
    if r == 0 || cdim == 0 {
        return zeros(cdim, r);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = effective_tol(tol, smax);
    let k = svd.singular_values.len();
    let mut out = zeros(cdim, r);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > cut {
            let vi = vt.row(i).adjoint();
            let ui = u.column(i).adjoint();
            out += (vi * ui) * C64::from(1.0 / s);
        }
    }
    out
}

/// Orthonormal basis of the column span of `m`.
pub fn column_span(m: &CMatrix, tol: f64) -> Subspace {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Subspace::trivial(n);
    }
    let r = rank(m, tol);
    let p = m * pinv(m, tol);
    Subspace::new(canonical_basis(&hermitian_part(&p), r))
}

/// Orthonormal basis of the orthogonal complement of `basis`'s span.
pub fn orthogonal_complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim;
    let p = identity(n) - s.projector();
    Subspace::new(canonical_basis(&hermitian_part(&p), n - s.dim()))
}

/// Classification of a matrix as an operator between Euclidean spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionKind {
    NotContraction,
    Generic,
    Isometric,
    CoIsometric,
    Unitary,
    Pure,
}

impl ContractionKind {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Isometric | Self::CoIsometric | Self::Unitary)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NotContraction => "not_contraction",
            Self::Generic => "generic",
            Self::Isometric => "isometric",
            Self::CoIsometric => "co_isometric",
            Self::Unitary => "unitary",
            Self::Pure => "pure",
        }
    }
}

impl std::fmt::Display for ContractionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn isometry_residual(t: &CMatrix) -> f64 {
    diff_norm(&(t.adjoint() * t), &identity(t.ncols()))
}

pub fn coisometry_residual(t: &CMatrix) -> f64 {
    diff_norm(&(t * t.adjoint()), &identity(t.nrows()))
}

pub fn classify_contraction(t: &CMatrix, tol: f64) -> ContractionKind {
    let smax = op_norm(t);
    if smax > 1.0 + tol || !smax.is_finite() {
        return ContractionKind::NotContraction;
    }
    let iso = isometry_residual(t) <= tol;
    let coiso = coisometry_residual(t) <= tol;
    match (iso, coiso) {
        (true, true) => ContractionKind::Unitary,
        (true, false) => ContractionKind::Isometric,
        (false, true) => ContractionKind::CoIsometric,
        _ if smax < 1.0 - tol => ContractionKind::Pure,
        _ => ContractionKind::Generic,
    }
}

/// `max(‖U*U - I‖, ‖UU* - I‖)`.
pub fn unitarity_residual(u: &CMatrix) -> Result<f64> {
    if u.nrows() != u.ncols() {
        return Err(CmvError::NonSquare { rows: u.nrows(), cols: u.ncols() });
    }
    Ok(isometry_residual(u).max(coisometry_residual(u)))
}

/// Replaces every singular value by one: the nearest partial isometry with
/// the same singular vectors (an isometry, co-isometry or unitary when the
/// input is close to one).
pub fn snap_singular_values(t: &CMatrix) -> CMatrix {
    let (r, cdim) = t.shape();
    if r == 0 || cdim == 0 {
        return t.clone();
    }
    let svd = t.clone().svd(true, true);
    svd.u.expect("svd u") * svd.v_t.expect("svd v_t")
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut cc) = (0, 0);
    for b in blocks {
        set_block(&mut out, r, cc, b);
        r += b.nrows();
        cc += b.ncols();
    }
    out
}

pub fn set_block(target: &mut CMatrix, row: usize, col: usize, block: &CMatrix) {
    if block.nrows() == 0 || block.ncols() == 0 {
        return;
    }
    target.view_mut((row, col), block.shape()).copy_from(block);
}

pub fn block(m: &CMatrix, row: usize, col: usize, rows: usize, cols: usize) -> CMatrix {
    m.view((row, col), (rows, cols)).into_owned()
}

pub fn hstack(parts: &[&CMatrix]) -> CMatrix {
    let rows = parts.first().map_or(0, |p| p.nrows());
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut cc = 0;
    for p in parts {
        set_block(&mut out, 0, cc, p);
        cc += p.ncols();
    }
    out
}

pub fn vstack(parts: &[&CMatrix]) -> CMatrix {
    let cols = parts.first().map_or(0, |p| p.ncols());
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        set_block(&mut out, r, 0, p);
        r += p.nrows();
    }
    out
}

/// Integer power; `n = 0` gives the identity.
pub fn matrix_power(m: &CMatrix, n: usize) -> CMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..n {
        out = &out * m;
    }
    out
}

/// Solves `a x = b` by LU.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() == 0 {
        return Ok(zeros(0, b.ncols()));
    }
    a.clone()
        .lu()
        .solve(b)
        .filter(is_finite)
        .ok_or_else(|| CmvError::SolveFailure("singular system matrix".into()))
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &identity(a.nrows()))
}

/// Random matrices for tests and generators.
pub mod random {
    use super::*;

    pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
    }

    /// Haar-distributed isometry (`rows >= cols`).
    pub fn isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        assert!(rows >= cols, "isometry needs rows >= cols");
        if cols == 0 {
            return zeros(rows, 0);
        }
        let qr = ginibre(rng, rows, cols).qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..cols {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / C64::from(d.norm()) } else { C64::from(1.0) };
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
        q
    }

    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        isometry(rng, n, n)
    }

    /// Ginibre draw rescaled to operator norm `norm`.
    pub fn contraction<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, norm: f64) -> CMatrix {
        let g = ginibre(rng, rows, cols);
        let s = op_norm(&g);
        if s == 0.0 {
            return g;
        }
        g * C64::from(norm / s)
    }
}
