//! Discrete time-invariant systems `σ_k = C h_k + D ξ_k`,
//! `h_{k+1} = A h_k + B ξ_k`, stored as the block operator
//! `U = [[D, C], [B, A]]`.

use serde::Serialize;

use crate::error::{CmvError, Result};
use crate::linalg::{self, CMatrix, Subspace, C64};
use crate::schur::SchurFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemClass {
    Conservative,
    Isometric,
    CoIsometric,
    Passive,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    pub d: CMatrix,
    pub c: CMatrix,
    pub b: CMatrix,
    pub a: CMatrix,
}

impl DiscreteSystem {
    /// Checks that `D: n x m`, `C: n x h`, `B: h x m`, `A: h x h`.
    pub fn new(d: CMatrix, c: CMatrix, b: CMatrix, a: CMatrix) -> Result<Self> {
        let (n, m) = d.shape();
        let h = a.nrows();
        if a.ncols() != h || c.shape() != (n, h) || b.shape() != (h, m) {
            return Err(CmvError::ShapeMismatch(format!(
                "D {:?}, C {:?}, B {:?}, A {:?}",
                d.shape(),
                c.shape(),
                b.shape(),
                a.shape()
            )));
        }
        Ok(Self { d, c, b, a })
    }

    /// Splits a block operator with the given input and output dimensions.
    pub fn from_block(u: &CMatrix, input_dim: usize, output_dim: usize) -> Result<Self> {
        let (r, cc) = u.shape();
        if r < output_dim || cc < input_dim || r - output_dim != cc - input_dim {
            return Err(CmvError::ShapeMismatch(format!(
                "{r}x{cc} block operator cannot carry {output_dim}x{input_dim} feedthrough"
            )));
        }
        let h = r - output_dim;
        Ok(Self {
            d: linalg::block(u, 0, 0, output_dim, input_dim),
            c: linalg::block(u, 0, input_dim, output_dim, h),
            b: linalg::block(u, output_dim, 0, h, input_dim),
            a: linalg::block(u, output_dim, input_dim, h, h),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.d.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.d.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn block_operator(&self) -> CMatrix {
        let top = linalg::hstack(&[&self.d, &self.c]);
        let bottom = linalg::hstack(&[&self.b, &self.a]);
        let mut u = linalg::zeros(self.output_dim() + self.state_dim(), self.input_dim() + self.state_dim());
        linalg::set_block(&mut u, 0, 0, &top);
        linalg::set_block(&mut u, self.output_dim(), 0, &bottom);
        u
    }

    /// `Θ(λ) = D + λC(I - λA)⁻¹B`.
    pub fn transfer_value(&self, lambda: C64) -> Result<CMatrix> {
        if lambda.norm() >= 1.0 {
            return Err(CmvError::OutsideDisk { re: lambda.re, im: lambda.im });
        }
        let h = self.state_dim();
        let resolvent = linalg::identity(h) - &self.a * lambda;
        let x = linalg::solve(&resolvent, &self.b)?;
        Ok(&self.d + &self.c * x * lambda)
    }

    /// Taylor coefficients `D, CB, CAB, …` up to index `count - 1`.
    pub fn taylor(&self, count: usize) -> Vec<CMatrix> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d.clone());
        let mut ab = self.b.clone();
        for _ in 1..count {
            out.push(&self.c * &ab);
            ab = &self.a * ab;
        }
        out
    }

    /// Adjoint system `[[D*, B*], [C*, A*]]`.
    pub fn adjoint(&self) -> Self {
        Self { d: self.d.adjoint(), c: self.b.adjoint(), b: self.c.adjoint(), a: self.a.adjoint() }
    }
}

/// Runs the state equations; returns outputs `σ_k` and states
/// `h_0, …, h_K` (one more state than inputs).
pub fn simulate(
    sys: &DiscreteSystem,
    inputs: &[CMatrix],
    h0: &CMatrix,
) -> Result<(Vec<CMatrix>, Vec<CMatrix>)> {
    if h0.shape() != (sys.state_dim(), 1) {
        return Err(CmvError::ShapeMismatch("initial state has the wrong length".into()));
    }
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut states = vec![h0.clone()];
    for (k, xi) in inputs.iter().enumerate() {
        if xi.shape() != (sys.input_dim(), 1) {
            return Err(CmvError::ShapeMismatch(format!("input {k} has the wrong length")));
        }
        let h = states.last().unwrap();
        outputs.push(&sys.c * h + &sys.d * xi);
        let next = &sys.a * h + &sys.b * xi;
        states.push(next);
    }
    Ok((outputs, states))
}

pub fn classify_system(sys: &DiscreteSystem, tol: f64) -> SystemClass {
    let u = sys.block_operator();
    let iso = linalg::isometry_residual(&u) <= tol;
    let coiso = linalg::coisometry_residual(&u) <= tol;
    match (iso, coiso) {
        (true, true) => SystemClass::Conservative,
        (true, false) => SystemClass::Isometric,
        (false, true) => SystemClass::CoIsometric,
        _ if linalg::op_norm(&u) <= 1.0 + tol => SystemClass::Passive,
        _ => SystemClass::None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Structure {
    pub controllable: bool,
    pub observable: bool,
    pub simple: bool,
    pub minimal: bool,
}

fn krylov(a: &CMatrix, start: &CMatrix, steps: usize) -> CMatrix {
    let h = a.nrows();
    let mut cols = Vec::with_capacity(steps);
    let mut cur = start.clone();
    for _ in 0..steps {
        cols.push(cur.clone());
        cur = a * cur;
    }
    let refs: Vec<&CMatrix> = cols.iter().collect();
    if refs.is_empty() {
        return linalg::zeros(h, 0);
    }
    linalg::hstack(&refs)
}

/// `span{AⁿB}` (controllable part) and `span{A*ⁿC*}` (observable part).
fn krylov_pair(sys: &DiscreteSystem) -> (CMatrix, CMatrix) {
    let h = sys.state_dim();
    (krylov(&sys.a, &sys.b, h), krylov(&sys.a.adjoint(), &sys.c.adjoint(), h))
}

pub fn structural_tests(sys: &DiscreteSystem) -> Structure {
    let h = sys.state_dim();
    let (ctrl, obs) = krylov_pair(sys);
    let rc = linalg::rank(&ctrl, linalg::RANK_TOL);
    let ro = linalg::rank(&obs, linalg::RANK_TOL);
    let joint = linalg::rank(&linalg::hstack(&[&ctrl, &obs]), linalg::RANK_TOL);
    Structure {
        controllable: rc == h,
        observable: ro == h,
        simple: joint == h,
        minimal: rc == h && ro == h,
    }
}

/// Rank of `span{Uⁿ M : |n| <= steps}` for the block operator `U` of a
/// system with equal input and output spaces, projected to the state space
/// complement of `M`. Returns `(rank, dimension of U)`.
pub fn orbit_rank(u: &CMatrix, m: usize, steps: usize) -> Result<(usize, usize)> {
    let dim = u.nrows();
    if u.ncols() != dim {
        return Err(CmvError::NonSquare { rows: dim, cols: u.ncols() });
    }
    let e = linalg::block(&linalg::identity(dim), 0, 0, dim, m);
    let fwd = krylov(u, &e, steps + 1);
    let back = krylov(&u.adjoint(), &e, steps + 1);
    Ok((linalg::rank(&linalg::hstack(&[&fwd, &back]), linalg::RANK_TOL), dim))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CnuReport {
    pub completely_nonunitary: bool,
    /// Largest reducing subspace on which `A` is unitary.
    pub unitary_part: Subspace,
}

/// `A` is completely non-unitary iff `span{A*ⁿD_A, AᵐD_{A*}}` is the whole
/// space; its orthogonal complement is the unitary part.
pub fn is_completely_nonunitary(a: &CMatrix, tol: f64) -> Result<CnuReport> {
    let h = a.nrows();
    if a.ncols() != h {
        return Err(CmvError::NonSquare { rows: h, cols: a.ncols() });
    }
    let norm = linalg::op_norm(a);
    if norm > 1.0 + tol {
        return Err(CmvError::NotAContraction { norm, tol });
    }
    let da = linalg::defect(a)?;
    let das = linalg::defect(&a.adjoint())?;
    let span = linalg::hstack(&[&krylov(&a.adjoint(), &da, h.max(1)), &krylov(a, &das, h.max(1))]);
    let range = linalg::column_span(&span, linalg::RANK_TOL.max(tol));
    let unitary_part = linalg::orthogonal_complement(&range);
    Ok(CnuReport { completely_nonunitary: unitary_part.dim() == 0, unitary_part })
}

/// Realization of the characteristic function
/// `Φ_T(λ) = (-T + λD_{T*}(I - λT*)⁻¹D_T)↾𝔇_T` in canonical defect bases:
/// `D = Q_*^*(-T)Q`, `C = Q_*^*D_{T*}`, `B = D_T Q`, `A = T*`.
pub fn characteristic_system(t: &CMatrix) -> Result<DiscreteSystem> {
    if t.nrows() != t.ncols() {
        return Err(CmvError::NonSquare { rows: t.nrows(), cols: t.ncols() });
    }
    let (dt, q) = linalg::defect_parts(t, linalg::RANK_TOL)?;
    let (dts, qs) = linalg::defect_parts(&t.adjoint(), linalg::RANK_TOL)?;
    DiscreteSystem::new(
        -(qs.basis.adjoint() * t * &q.basis),
        qs.basis.adjoint() * dts,
        dt * &q.basis,
        t.adjoint(),
    )
}

pub fn characteristic_function(t: &CMatrix) -> Result<SchurFunction> {
    characteristic_system(t).map(SchurFunction::Realization)
}

/// `H_{n,m} = ker D_{Aⁿ} ∩ ker D_{A*ᵐ}` together with `A_{n,m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeEntry {
    pub space: Subspace,
    /// `A_{n,m}` in the basis of `space`.
    pub operator: CMatrix,
}

impl LatticeEntry {
    /// `P A P` in ambient coordinates; independent of the basis choice.
    pub fn ambient(&self) -> CMatrix {
        &self.space.basis * &self.operator * self.space.basis.adjoint()
    }
}

pub fn defect_kernel_lattice(a: &CMatrix, n: usize, m: usize) -> Result<LatticeEntry> {
    let h = a.nrows();
    if a.ncols() != h {
        return Err(CmvError::NonSquare { rows: h, cols: a.ncols() });
    }
    let norm = linalg::op_norm(a);
    if norm > 1.0 + linalg::CONTRACTION_TOL {
        return Err(CmvError::NotAContraction { norm, tol: linalg::CONTRACTION_TOL });
    }
    let an = linalg::matrix_power(a, n);
    let am = linalg::matrix_power(a, m);
    let id = linalg::identity(h);
    let stacked = (&id - an.adjoint() * &an) + (&id - &am * am.adjoint());
    let space = linalg::psd_kernel(&linalg::hermitian_part(&stacked), linalg::RANK_TOL);
    let operator = space.basis.adjoint() * a * &space.basis;
    Ok(LatticeEntry { space, operator })
}

/// Which defect kernel carries the state space of the first iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OmegaDirection {
    /// State space `ker D_{A*}`.
    ZeroOne,
    /// State space `ker D_A`.
    OneZero,
}

/// Conservative realization of the first Schur iterate `Θ₁` of the
/// transfer function, in the canonical defect coordinates of `Γ₀ = D`.
///
/// With `V = Q_*^* D_{Γ*}⁻¹ C` and `W = B D_Γ⁻¹ Q`, `ZeroOne` returns
/// `(VW, VK, K^*AW, K^*AK)` for `K` a basis of `ker D_{A*}`, and `OneZero`
/// returns `(VW, VAK, K^*W, K^*AK)` for `K` a basis of `ker D_A`.
pub fn omega_transform(sys: &DiscreteSystem, direction: OmegaDirection) -> Result<DiscreteSystem> {
    require_simple_conservative(sys)?;
    let tol = linalg::TERMINATION_TOL;
    let g = &sys.d;
    let (dg, q) = linalg::defect_parts(g, tol)?;
    let (dgs, qs) = linalg::defect_parts(&g.adjoint(), tol)?;
    let left = qs.basis.adjoint() * linalg::pinv(&dgs, tol);
    let right = linalg::pinv(&dg, tol) * &q.basis;
    let d1 = &left * &sys.c * &sys.b * &right;
    let a = &sys.a;
    let da = linalg::defect(a)?;
    let das = linalg::defect(&a.adjoint())?;
    let out = match direction {
        OmegaDirection::ZeroOne => {
            let k = linalg::psd_kernel(&(&das * &das), linalg::RANK_TOL).basis;
            DiscreteSystem::new(d1, &left * &sys.c * &k, k.adjoint() * a * &sys.b * &right, k.adjoint() * a * &k)?
        }
        OmegaDirection::OneZero => {
            let k = linalg::psd_kernel(&(&da * &da), linalg::RANK_TOL).basis;
            DiscreteSystem::new(d1, &left * &sys.c * a * &k, k.adjoint() * &sys.b * &right, k.adjoint() * a * &k)?
        }
    };
    Ok(out)
}

/// Errors unless the system is conservative and simple.
pub fn require_simple_conservative(sys: &DiscreteSystem) -> Result<()> {
    let u = sys.block_operator();
    let residual = if u.nrows() == u.ncols() {
        linalg::unitarity_residual(&u)?
    } else {
        f64::INFINITY
    };
    if residual > 1e-8 {
        return Err(CmvError::NotConservative { residual });
    }
    let (ctrl, obs) = krylov_pair(sys);
    let rank = linalg::rank(&linalg::hstack(&[&ctrl, &obs]), linalg::RANK_TOL);
    if rank < sys.state_dim() {
        return Err(CmvError::NotSimple { rank, dim: sys.state_dim() });
    }
    Ok(())
}

pub fn transfer(sys: &DiscreteSystem) -> SchurFunction {
    SchurFunction::Realization(sys.clone())
}
