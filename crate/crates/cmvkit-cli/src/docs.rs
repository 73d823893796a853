//! Output documents specific to the command line.

use cmvkit::cmv::{BlockCMV, Closure};
use cmvkit::io::{MatrixDoc, SequenceDoc, SystemDoc, TaylorDoc};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct CmvDoc {
    pub variant: &'static str,
    pub depth: Option<usize>,
    pub closure: Closure,
    pub input_dim: usize,
    pub output_dim: usize,
    pub matrix: MatrixDoc,
}

impl CmvDoc {
    pub fn new(cmv: &BlockCMV, variant: &'static str) -> Self {
        Self {
            variant,
            depth: cmv.depth(),
            closure: cmv.closure(),
            input_dim: cmv.input_dim(),
            output_dim: cmv.output_dim(),
            matrix: (&cmv.matrix).into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ValueDoc {
    pub lambda: [f64; 2],
    pub value: MatrixDoc,
}

#[derive(Debug, Serialize)]
pub struct ValuesDoc {
    pub values: Vec<ValueDoc>,
}

#[derive(Debug, Serialize)]
pub struct CharfnDoc {
    pub system: SystemDoc,
    pub values: Vec<ValueDoc>,
}

#[derive(Debug, Serialize)]
pub struct IterateDoc {
    pub parameters: SequenceDoc,
    pub iterate: TaylorDoc,
}

#[derive(Debug, Serialize)]
pub struct CyclicDoc {
    pub sequence: SequenceDoc,
    pub cmv: CmvDoc,
}

/// One checked quantity in a report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self { name: name.into(), residual, threshold, pass: residual <= threshold }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), residual: if ok { 0.0 } else { 1.0 }, threshold: 0.0, pass: ok }
    }

    /// A yes/no observation that never fails the report.
    pub fn info(name: impl Into<String>, yes: bool) -> Self {
        Self { name: name.into(), residual: if yes { 0.0 } else { 1.0 }, threshold: 1.0, pass: true }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &'static str, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { command, checks, pass }
    }
}
