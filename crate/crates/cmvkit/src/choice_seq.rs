//! Choice sequences `{Γ_n}` with explicit defect-space coordinates.
//!
//! `Γ_0` is an `n x m` matrix. For `k >= 1`, `Γ_k` maps the defect space of
//! `Γ_{k-1}` into the defect space of `Γ_{k-1}*`, written in the orthonormal
//! bases stored alongside the sequence: its shape is
//! `dim 𝔇_{Γ*_{k-1}} x dim 𝔇_{Γ_{k-1}}`.
//!
//! Bases default to the canonical choice of [`linalg::defect_subspace`];
//! any other orthonormal bases give unitarily equivalent CMV matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CmvError, Result};
use crate::linalg::{self, random, CMatrix, ContractionKind, Subspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Unlisted parameters are zero blocks of the stabilized shape.
    ZeroTail,
    /// The last parameter is isometric, co-isometric or unitary; every
    /// later parameter acts on a zero-dimensional space.
    Terminated,
}

/// Orthonormal bases of `𝔇_Γ` (in the domain coordinates of `Γ`) and of
/// `𝔇_{Γ*}` (in its codomain coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct DefectBases {
    pub dom: Subspace,
    pub codom: Subspace,
}

impl DefectBases {
    pub fn canonical(gamma: &CMatrix, tol: f64) -> Result<Self> {
        Ok(Self {
            dom: linalg::defect_subspace(gamma, tol)?,
            codom: linalg::defect_subspace(&gamma.adjoint(), tol)?,
        })
    }

    /// `(dim 𝔇_Γ, dim 𝔇_{Γ*})`.
    pub fn dims(&self) -> (usize, usize) {
        (self.dom.dim(), self.codom.dim())
    }

    fn swapped(&self) -> Self {
        Self { dom: self.codom.clone(), codom: self.dom.clone() }
    }
}

/// One diagnostic from [`validate_parameters`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, index: usize, message: String) {
        self.issues.push(Issue { index, message });
    }

    fn summary(&self) -> String {
        self.issues
            .iter()
            .map(|i| format!("Γ_{}: {}", i.index, i.message))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Checks shapes, contractivity and termination rules for raw parameters
/// written in canonical defect bases.
pub fn validate_parameters(
    input_dim: usize,
    output_dim: usize,
    params: &[CMatrix],
    tail: Tail,
    tol: f64,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    if params.is_empty() {
        report.push(0, "sequence has no parameters".into());
        return report;
    }
    let mut expected = (output_dim, input_dim);
    let last = params.len() - 1;
    for (k, g) in params.iter().enumerate() {
        if g.shape() != expected {
            report.push(
                k,
                format!("shape {}x{}, expected {}x{}", g.nrows(), g.ncols(), expected.0, expected.1),
            );
            return report;
        }
        if !linalg::is_finite(g) {
            report.push(k, "non-finite entries".into());
            return report;
        }
        let kind = linalg::classify_contraction(g, tol);
        if kind == ContractionKind::NotContraction {
            report.push(k, format!("operator norm {} exceeds 1", linalg::op_norm(g)));
            return report;
        }
        if k < last && kind.is_terminal() {
            report.push(k, format!("{kind} parameter before the end of the sequence"));
        }
        if k == last && tail == Tail::Terminated && !kind.is_terminal() {
            report.push(k, format!("terminated sequence ends with a {kind} parameter"));
        }
        match DefectBases::canonical(g, tol) {
            Ok(b) => {
                let (p, q) = b.dims();
                expected = (q, p);
            }
            Err(e) => {
                report.push(k, e.to_string());
                return report;
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceSequence {
    input_dim: usize,
    output_dim: usize,
    params: Vec<CMatrix>,
    bases: Vec<DefectBases>,
    tail: Tail,
    tol: f64,
}

impl ChoiceSequence {
    /// Validated sequence in canonical defect bases, rank tolerance
    /// [`linalg::RANK_TOL`].
    pub fn new(input_dim: usize, output_dim: usize, params: Vec<CMatrix>, tail: Tail) -> Result<Self> {
        Self::with_tol(input_dim, output_dim, params, tail, linalg::RANK_TOL)
    }

    pub fn with_tol(
        input_dim: usize,
        output_dim: usize,
        params: Vec<CMatrix>,
        tail: Tail,
        tol: f64,
    ) -> Result<Self> {
        let mut tail = tail;
        if let Some(last) = params.last() {
            if linalg::classify_contraction(last, tol).is_terminal() {
                tail = Tail::Terminated;
            }
        }
        let report = validate_parameters(input_dim, output_dim, &params, tail, tol);
        if !report.is_valid() {
            return Err(CmvError::InvalidSequence(report.summary()));
        }
        let bases = params
            .iter()
            .map(|g| DefectBases::canonical(g, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { input_dim, output_dim, params, bases, tail, tol })
    }

    /// Scalar sequence from complex numbers.
    pub fn scalar(values: &[linalg::C64], tail: Tail) -> Result<Self> {
        let params = values.iter().map(|&z| CMatrix::from_element(1, 1, z)).collect();
        Self::new(1, 1, params, tail)
    }

    /// Sequence with caller-supplied defect bases. Each basis must be
    /// orthonormal and span the range of the corresponding defect operator.
    pub fn from_parts(
        input_dim: usize,
        output_dim: usize,
        params: Vec<CMatrix>,
        bases: Vec<DefectBases>,
        tail: Tail,
        tol: f64,
    ) -> Result<Self> {
        if params.len() != bases.len() || params.is_empty() {
            return Err(CmvError::InvalidSequence("one basis pair per parameter required".into()));
        }
        let mut expected = (output_dim, input_dim);
        for (k, (g, b)) in params.iter().zip(&bases).enumerate() {
            if g.shape() != expected {
                return Err(CmvError::InvalidSequence(format!("Γ_{k}: wrong shape")));
            }
            let kind = linalg::classify_contraction(g, tol);
            if kind == ContractionKind::NotContraction {
                return Err(CmvError::InvalidSequence(format!("Γ_{k}: not a contraction")));
            }
            check_basis(g, &b.dom, tol).map_err(|m| CmvError::InvalidSequence(format!("Γ_{k}: {m}")))?;
            check_basis(&g.adjoint(), &b.codom, tol)
                .map_err(|m| CmvError::InvalidSequence(format!("Γ_{k}*: {m}")))?;
            expected = (b.codom.dim(), b.dom.dim());
        }
        let last_terminal = linalg::classify_contraction(params.last().unwrap(), tol).is_terminal();
        if tail == Tail::Terminated && !last_terminal {
            return Err(CmvError::InvalidSequence("terminated sequence must end in a (co-)isometry".into()));
        }
        let tail = if last_terminal { Tail::Terminated } else { tail };
        Ok(Self { input_dim, output_dim, params, bases, tail, tol })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Listed parameters.
    pub fn params(&self) -> &[CMatrix] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Index of the terminating parameter, if any.
    pub fn terminal_index(&self) -> Option<usize> {
        (self.tail == Tail::Terminated).then(|| self.params.len() - 1)
    }

    /// `Γ_k` for any `k`; beyond the listed range this is the zero block of
    /// the stabilized shape (zero-dimensional after a terminal parameter).
    pub fn param(&self, k: usize) -> CMatrix {
        match self.params.get(k) {
            Some(g) => g.clone(),
            None => {
                let (p, q) = self.bases.last().unwrap().dims();
                linalg::zeros(q, p)
            }
        }
    }

    /// Defect bases of `Γ_k` for any `k`.
    pub fn bases(&self, k: usize) -> DefectBases {
        match self.bases.get(k) {
            Some(b) => b.clone(),
            None => {
                let (p, q) = self.bases.last().unwrap().dims();
                DefectBases { dom: Subspace::whole(p), codom: Subspace::whole(q) }
            }
        }
    }

    /// `(dim 𝔇_{Γ_k}, dim 𝔇_{Γ_k*})`.
    pub fn defect_dims(&self, k: usize) -> (usize, usize) {
        let i = k.min(self.bases.len() - 1);
        self.bases[i].dims()
    }

    /// Re-runs the invariant checks with a given tolerance.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let mut report = validate_parameters(self.input_dim, self.output_dim, &[], self.tail, tol);
        report.issues.clear();
        let mut expected = (self.output_dim, self.input_dim);
        let last = self.params.len() - 1;
        for (k, (g, b)) in self.params.iter().zip(&self.bases).enumerate() {
            if g.shape() != expected {
                report.push(k, "shape does not match previous defect dimensions".into());
            }
            let kind = linalg::classify_contraction(g, tol);
            if kind == ContractionKind::NotContraction {
                report.push(k, "not a contraction".into());
            } else {
                if let Err(m) = check_basis(g, &b.dom, tol) {
                    report.push(k, m);
                }
                if let Err(m) = check_basis(&g.adjoint(), &b.codom, tol) {
                    report.push(k, m);
                }
            }
            if k < last && kind.is_terminal() {
                report.push(k, format!("{kind} parameter before the end"));
            }
            if k == last && self.tail == Tail::Terminated && !kind.is_terminal() {
                report.push(k, format!("terminated sequence ends with a {kind} parameter"));
            }
            expected = (b.codom.dim(), b.dom.dim());
        }
        report
    }

    /// `{Γ_n*}` with input and output roles swapped. Bases are swapped
    /// rather than recomputed, so the operation is an exact involution.
    pub fn adjoint(&self) -> Self {
        Self {
            input_dim: self.output_dim,
            output_dim: self.input_dim,
            params: self.params.iter().map(|g| g.adjoint()).collect(),
            bases: self.bases.iter().map(DefectBases::swapped).collect(),
            tail: self.tail,
            tol: self.tol,
        }
    }

    /// Same abstract sequence written in defect bases rotated by random
    /// unitaries.
    pub fn rotate_bases<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut a_prev = linalg::identity(self.input_dim);
        let mut b_prev = linalg::identity(self.output_dim);
        let mut params = Vec::with_capacity(self.params.len());
        let mut bases = Vec::with_capacity(self.bases.len());
        for (g, b) in self.params.iter().zip(&self.bases) {
            let (p, q) = b.dims();
            let a = random::unitary(rng, p);
            let bb = random::unitary(rng, q);
            params.push(b_prev.adjoint() * g * &a_prev);
            bases.push(DefectBases {
                dom: Subspace::new(a_prev.adjoint() * &b.dom.basis * &a),
                codom: Subspace::new(b_prev.adjoint() * &b.codom.basis * &bb),
            });
            a_prev = a;
            b_prev = bb;
        }
        Self { params, bases, ..self.clone() }
    }
}

fn check_basis(g: &CMatrix, s: &Subspace, tol: f64) -> std::result::Result<(), String> {
    let (d, canon) = linalg::defect_parts(g, tol).map_err(|e| e.to_string())?;
    if s.ambient_dim != g.ncols() {
        return Err("defect basis has the wrong ambient dimension".into());
    }
    if s.dim() != canon.dim() {
        return Err(format!("defect basis has dimension {}, rank is {}", s.dim(), canon.dim()));
    }
    let slack = 1e3 * tol.sqrt();
    if s.orthonormality_residual() > slack {
        return Err("defect basis is not orthonormal".into());
    }
    let outside = (linalg::identity(g.ncols()) - s.projector()) * d;
    if linalg::op_norm(&outside) > slack {
        return Err("defect basis does not span the defect range".into());
    }
    Ok(())
}

/// Tail behaviour requested from [`random_choice_sequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Pure,
    TerminateIsometric,
    TerminateCoisometric,
    TerminateUnitary,
}

/// Deterministic random sequence. `Pure` gives `max(depth, 1)` parameters
/// with norms in `[0.05, 0.95]`; the terminating kinds give `depth` such
/// parameters followed by one (co-)isometric or unitary block.
pub fn random_choice_sequence(
    input_dim: usize,
    output_dim: usize,
    depth: usize,
    seed: u64,
    kind: SequenceKind,
) -> Result<ChoiceSequence> {
    let (m, n) = (input_dim, output_dim);
    if m == 0 || n == 0 {
        return Err(CmvError::BadDims("input and output dimensions must be positive".into()));
    }
    let ok = match kind {
        SequenceKind::Pure => true,
        SequenceKind::TerminateIsometric => n >= m,
        SequenceKind::TerminateCoisometric => m >= n,
        SequenceKind::TerminateUnitary => m == n,
    };
    if !ok {
        return Err(CmvError::BadDims(format!("{kind:?} is impossible for a {n}x{m} sequence")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pure_count = if kind == SequenceKind::Pure { depth.max(1) } else { depth };
    let mut params = Vec::with_capacity(pure_count + 1);
    for _ in 0..pure_count {
        let norm = rng.random_range(0.05..0.95);
        params.push(random::contraction(&mut rng, n, m, norm));
    }
    let tail = match kind {
        SequenceKind::Pure => Tail::ZeroTail,
        SequenceKind::TerminateIsometric => {
            params.push(random::isometry(&mut rng, n, m));
            Tail::Terminated
        }
        SequenceKind::TerminateCoisometric => {
            params.push(random::isometry(&mut rng, m, n).adjoint());
            Tail::Terminated
        }
        SequenceKind::TerminateUnitary => {
            params.push(random::unitary(&mut rng, n));
            Tail::Terminated
        }
    };
    ChoiceSequence::new(m, n, params, tail)
}
