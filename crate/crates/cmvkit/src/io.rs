//! JSON documents for matrices, sequences, systems, measures and series.
//!
//! A complex matrix is `{"rows": r, "cols": c, "data": [[re, im], …]}` in
//! row-major order. Floats are written in shortest round-trip form, so a
//! write-then-read cycle reproduces every entry bit for bit.

use serde::{Deserialize, Serialize};

use crate::choice_seq::{ChoiceSequence, Tail};
use crate::dilations::{Atom, MatrixMeasure};
use crate::error::{CmvError, Result};
use crate::linalg::{c, CMatrix};
use crate::schur::TaylorSeries;
use crate::systems::DiscreteSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixDoc {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<&MatrixDoc> for CMatrix {
    type Error = CmvError;

    fn try_from(doc: &MatrixDoc) -> Result<Self> {
        if doc.rows * doc.cols != doc.data.len() {
            return Err(CmvError::ShapeMismatch(format!(
                "{}x{} matrix with {} entries",
                doc.rows,
                doc.cols,
                doc.data.len()
            )));
        }
        if doc.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(CmvError::ShapeMismatch("non-finite matrix entry".into()));
        }
        Ok(CMatrix::from_fn(doc.rows, doc.cols, |i, j| {
            let [re, im] = doc.data[i * doc.cols + j];
            c(re, im)
        }))
    }
}

/// `#[serde(with = "…")]` adapter storing a [`CMatrix`] as a [`MatrixDoc`].
pub mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let doc = MatrixDoc::deserialize(d)?;
        CMatrix::try_from(&doc).map_err(serde::de::Error::custom)
    }
}

fn matrices(docs: &[MatrixDoc]) -> Result<Vec<CMatrix>> {
    docs.iter().map(CMatrix::try_from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub input_dim: usize,
    pub output_dim: usize,
    pub tail: Tail,
    pub parameters: Vec<MatrixDoc>,
}

impl From<&ChoiceSequence> for SequenceDoc {
    fn from(s: &ChoiceSequence) -> Self {
        Self {
            input_dim: s.input_dim(),
            output_dim: s.output_dim(),
            tail: s.tail(),
            parameters: s.params().iter().map(MatrixDoc::from).collect(),
        }
    }
}

impl SequenceDoc {
    /// Validated sequence in canonical defect bases.
    pub fn to_sequence(&self, tol: f64) -> Result<ChoiceSequence> {
        ChoiceSequence::with_tol(self.input_dim, self.output_dim, matrices(&self.parameters)?, self.tail, tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SystemDoc {
    pub D: MatrixDoc,
    pub C: MatrixDoc,
    pub B: MatrixDoc,
    pub A: MatrixDoc,
}

impl From<&DiscreteSystem> for SystemDoc {
    fn from(s: &DiscreteSystem) -> Self {
        Self { D: (&s.d).into(), C: (&s.c).into(), B: (&s.b).into(), A: (&s.a).into() }
    }
}

impl SystemDoc {
    pub fn to_system(&self) -> Result<DiscreteSystem> {
        DiscreteSystem::new(
            (&self.D).try_into()?,
            (&self.C).try_into()?,
            (&self.B).try_into()?,
            (&self.A).try_into()?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDoc {
    pub zeta: [f64; 2],
    pub weight: MatrixDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomDoc>,
    /// Alternative to `atoms`: the moments `S_0, S_1, …`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<Vec<MatrixDoc>>,
}

impl From<&MatrixMeasure> for MeasureDoc {
    fn from(mu: &MatrixMeasure) -> Self {
        match mu {
            MatrixMeasure::Atomic { dim, atoms } => Self {
                dim: *dim,
                atoms: atoms
                    .iter()
                    .map(|a| AtomDoc { zeta: [a.zeta.re, a.zeta.im], weight: (&a.weight).into() })
                    .collect(),
                moments: None,
            },
            MatrixMeasure::Moments(m) => Self {
                dim: mu.dim(),
                atoms: Vec::new(),
                moments: Some(m.iter().map(MatrixDoc::from).collect()),
            },
        }
    }
}

impl MeasureDoc {
    pub fn to_measure(&self) -> Result<MatrixMeasure> {
        match &self.moments {
            Some(m) => MatrixMeasure::from_moments(matrices(m)?),
            None => {
                let atoms = self
                    .atoms
                    .iter()
                    .map(|a| Ok(Atom::new(c(a.zeta[0], a.zeta[1]), (&a.weight).try_into()?)))
                    .collect::<Result<Vec<_>>>()?;
                MatrixMeasure::atomic(self.dim, atoms)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorDoc {
    pub coefficients: Vec<MatrixDoc>,
}

impl From<&TaylorSeries> for TaylorDoc {
    fn from(t: &TaylorSeries) -> Self {
        Self { coefficients: t.coefficients.iter().map(MatrixDoc::from).collect() }
    }
}

impl TaylorDoc {
    pub fn to_series(&self) -> Result<TaylorSeries> {
        let coeffs = matrices(&self.coefficients)?;
        let first = coeffs.first().ok_or(CmvError::ShapeMismatch("empty coefficient list".into()))?;
        TaylorSeries::new(first.ncols(), first.nrows(), coeffs.clone())
    }
}
