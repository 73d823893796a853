//! `cmvkit`: build block CMV matrices, run the Schur algorithm, construct
//! dilations and verify the invariants from the command line.
//!
//! Exit codes: 0 on success, 1 when a numerical validation fails, 2 on
//! usage, I/O or parse errors.

mod docs;
mod verify;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cmvkit::choice_seq::ChoiceSequence;
use cmvkit::cmv::{self, ClosurePolicy, Variant};
use cmvkit::dilations;
use cmvkit::io::{MatrixDoc, MeasureDoc, SequenceDoc, SystemDoc, TaylorDoc};
use cmvkit::linalg::{self, CMatrix, C64};
use cmvkit::schur::{self, SchurFunction, TaylorSeries};
use cmvkit::systems;
use cmvkit::CmvError;
use serde::de::DeserializeOwned;
use serde::Serialize;

use docs::{Check, CharfnDoc, CmvDoc, CyclicDoc, IterateDoc, Report, ValueDoc, ValuesDoc};

#[derive(Debug, Parser)]
#[command(name = "cmvkit", version, about = "Block CMV matrices and the operator Schur algorithm")]
struct Cli {
    /// Tolerances as `RANK[,RESIDUAL]`; a single value sets both.
    #[arg(long, env = "CMVKIT_TOL", global = true, value_parser = parse_tolerances)]
    tol: Option<Tolerances>,

    /// Write the JSON report here instead of standard error.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Rank and contraction decisions.
    pub rank: f64,
    /// Thresholds for reported residuals.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: linalg::RANK_TOL, residual: 1e-10 }
    }
}

fn parse_tolerances(s: &str) -> Result<Tolerances, String> {
    let parse = |x: &str| -> Result<f64, String> {
        let v: f64 = x.trim().parse().map_err(|e| format!("{x:?}: {e}"))?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(format!("tolerance {v} must be positive"))
        }
    };
    match s.split_once(',') {
        Some((r, q)) => Ok(Tolerances { rank: parse(r)?, residual: parse(q)? }),
        None => {
            let v = parse(s)?;
            Ok(Tolerances { rank: v, residual: v })
        }
    }
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re: f64 = re.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let im: f64 = im.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok(C64::new(re, im))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    U0,
    U0Tilde,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TruncArg {
    T0,
    T0Tilde,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClosureArg {
    Auto,
    Unitary,
    Compressed,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct FunctionInput {
    /// Taylor coefficients `{"coefficients": [matrix, …]}`.
    #[arg(long)]
    taylor: Option<PathBuf>,
    /// State-space system `{"D", "C", "B", "A"}`.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Choice sequence, realized through its CMV matrix.
    #[arg(long)]
    seq: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Block CMV matrix of a choice sequence.
    BuildCmv {
        #[arg(long)]
        seq: PathBuf,
        /// Section depth; exact for terminated sequences when absent.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum, default_value = "u0")]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "auto")]
        closure: ClosureArg,
        #[command(flatten)]
        out: Output,
    },
    /// Truncated CMV matrix (first block row and column removed).
    Truncate {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum, default_value = "t0")]
        variant: TruncArg,
        #[command(flatten)]
        out: Output,
    },
    /// Schur parameters of a Schur-class function.
    SchurParams {
        #[command(flatten)]
        input: FunctionInput,
        /// Number of parameters.
        #[arg(short = 'N', default_value_t = 5)]
        n: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Parameters and the Schur iterate after a number of steps.
    SchurIterate {
        #[command(flatten)]
        input: FunctionInput,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Values of a transfer function.
    Transfer {
        #[command(flatten)]
        input: FunctionInput,
        /// Evaluation point `re[,im]`; repeatable.
        #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_complex)]
        lambda: Vec<C64>,
        #[command(flatten)]
        out: Output,
    },
    /// Characteristic function of a contraction.
    Charfn {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        lambda: Vec<C64>,
        #[command(flatten)]
        out: Output,
    },
    /// Unitary dilation of a square contraction.
    Dilate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Naimark dilation of a matrix measure on the circle.
    Naimark {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[command(flatten)]
        out: Output,
    },
    /// CMV model of a unitary matrix with a cyclic subspace.
    CyclicModel {
        #[arg(long)]
        unitary: PathBuf,
        /// Matrix whose columns span the cyclic subspace.
        #[arg(long)]
        subspace: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Run the invariant suite on generated inputs.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_matrix(path: &Path) -> anyhow::Result<CMatrix> {
    let doc: MatrixDoc = read_json(path)?;
    CMatrix::try_from(&doc).map_err(|e| anyhow!("matrix in {}: {e}", path.display()))
}

fn read_sequence(path: &Path, tol: &Tolerances) -> anyhow::Result<ChoiceSequence> {
    let doc: SequenceDoc = read_json(path)?;
    Ok(doc.to_sequence(tol.rank)?)
}

fn write_json<T: Serialize>(value: &T, out: &Output) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match &out.output {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => writeln!(std::io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn load_function(input: &FunctionInput, tol: &Tolerances, min_len: usize) -> anyhow::Result<SchurFunction> {
    if let Some(p) = &input.taylor {
        let doc: TaylorDoc = read_json(p)?;
        let series = doc.to_series()?;
        // A short series is a polynomial: pad with zeros.
        let len = series.len().max(min_len);
        let padded = TaylorSeries::polynomial(series.input_dim, series.output_dim, series.coefficients, len)?;
        return Ok(SchurFunction::Taylor(padded));
    }
    if let Some(p) = &input.system {
        let doc: SystemDoc = read_json(p)?;
        let sys = doc.to_system().map_err(|e| anyhow!("system in {}: {e}", p.display()))?;
        return Ok(SchurFunction::Realization(sys));
    }
    let p = input.seq.as_ref().ok_or_else(|| anyhow!("no input function"))?;
    Ok(SchurFunction::Cmv { seq: read_sequence(p, tol)?, depth: None })
}

fn variant_name(v: VariantArg) -> (&'static str, Variant) {
    match v {
        VariantArg::U0 => ("u0", Variant::U0),
        VariantArg::U0Tilde => ("u0-tilde", Variant::U0Tilde),
    }
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    let tol = cli.tol.unwrap_or_default();
    let report = match &cli.command {
        Command::BuildCmv { seq, depth, variant, closure, out } => {
            let seq = read_sequence(seq, &tol)?;
            let policy = match closure {
                ClosureArg::Auto => ClosurePolicy::Auto,
                ClosureArg::Unitary => ClosurePolicy::Unitary,
                ClosureArg::Compressed => ClosurePolicy::Compressed,
            };
            let (name, v) = variant_name(*variant);
            let u = cmv::build_cmv_with(&seq, *depth, v, policy)?;
            write_json(&CmvDoc::new(&u, name), out)?;
            let mut checks = Vec::new();
            if let Some(r) = u.unitarity_residual() {
                checks.push(Check::new("unitarity_residual", r, tol.residual));
            } else {
                let norm = linalg::op_norm(&u.matrix);
                checks.push(Check::new("contraction_excess", (norm - 1.0).max(0.0), tol.residual));
            }
            checks.push(Check::new("off_band_norm", u.off_band_norm(), tol.residual));
            Report::new("build-cmv", checks)
        }
        Command::Truncate { seq, depth, variant, out } => {
            let seq = read_sequence(seq, &tol)?;
            let v = match variant {
                TruncArg::T0 => Variant::U0,
                TruncArg::T0Tilde => Variant::U0Tilde,
            };
            let t = cmv::truncate(&cmv::build_cmv(&seq, *depth, v)?);
            write_json(&MatrixDoc::from(&t.matrix), out)?;
            let excess = (linalg::op_norm(&t.matrix) - 1.0).max(0.0);
            Report::new("truncate", vec![Check::new("contraction_excess", excess, tol.residual)])
        }
        Command::SchurParams { input, n, out } => {
            let theta = load_function(input, &tol, schur::working_depth((*n).max(1)))?;
            let params = schur::schur_parameters(&theta, *n)?;
            write_json(&SequenceDoc::from(&params), out)?;
            let report = params.validate(tol.rank);
            Report::new("schur-params", vec![Check::flag("valid_choice_sequence", report.is_valid())])
        }
        Command::SchurIterate { input, steps, out } => {
            let count = schur::working_depth((*steps).max(1));
            let theta = load_function(input, &tol, count)?;
            let mut current = SchurFunction::Taylor(TaylorSeries::new(
                theta.input_dim(),
                theta.output_dim(),
                theta.taylor(count)?,
            )?);
            let mut params = Vec::new();
            let mut terminated = false;
            for _ in 0..*steps {
                let step = schur::schur_step(&current)?;
                params.push(step.gamma.clone());
                terminated = step.is_terminal();
                current = step.next;
                if terminated {
                    break;
                }
            }
            let tail = if terminated { cmvkit::Tail::Terminated } else { cmvkit::Tail::ZeroTail };
            let seq = ChoiceSequence::with_tol(theta.input_dim(), theta.output_dim(), params, tail, tol.rank.max(linalg::TERMINATION_TOL))?;
            let iterate = match &current {
                SchurFunction::Taylor(t) => TaylorDoc::from(t),
                other => TaylorDoc::from(&TaylorSeries::new(other.input_dim(), other.output_dim(), other.taylor(1)?)?),
            };
            write_json(&IterateDoc { parameters: (&seq).into(), iterate }, out)?;
            Report::new("schur-iterate", vec![Check::info("terminated", terminated)])
        }
        Command::Transfer { input, lambda, out } => {
            let theta = load_function(input, &tol, 0)?;
            let mut values = Vec::with_capacity(lambda.len());
            let mut excess: f64 = 0.0;
            for &z in lambda {
                let v = theta.value(z)?;
                excess = excess.max(linalg::op_norm(&v) - 1.0);
                values.push(ValueDoc { lambda: [z.re, z.im], value: (&v).into() });
            }
            write_json(&ValuesDoc { values }, out)?;
            Report::new("transfer", vec![Check::new("contraction_excess", excess.max(0.0), tol.residual)])
        }
        Command::Charfn { matrix, lambda, out } => {
            let t = read_matrix(matrix)?;
            let sys = systems::characteristic_system(&t)?;
            let values = lambda
                .iter()
                .map(|&z| Ok(ValueDoc { lambda: [z.re, z.im], value: (&sys.transfer_value(z)?).into() }))
                .collect::<anyhow::Result<Vec<_>>>()?;
            write_json(&CharfnDoc { system: (&sys).into(), values }, out)?;
            let residual = linalg::unitarity_residual(&sys.block_operator()).unwrap_or(f64::INFINITY);
            let cnu = systems::is_completely_nonunitary(&t, tol.rank)?;
            Report::new(
                "charfn",
                vec![
                    Check::new("conservative_residual", residual, tol.residual),
                    Check::info("completely_nonunitary", cnu.completely_nonunitary),
                ],
            )
        }
        Command::Dilate { matrix, depth, out } => {
            let t = read_matrix(matrix)?;
            let u = dilations::unitary_dilation(&t, *depth)?;
            write_json(&CmvDoc::new(&u, "u0"), out)?;
            let r = dilations::dilation_check(&t, &u, *depth)?;
            Report::new(
                "dilate",
                vec![
                    Check::new("unitarity_residual", u.unitarity_residual().unwrap_or(f64::INFINITY), tol.residual),
                    Check::new("power_residual", r.max_residual(), tol.residual),
                    Check::flag("minimal", r.is_minimal()),
                ],
            )
        }
        Command::Naimark { measure, depth, out } => {
            let doc: MeasureDoc = read_json(measure)?;
            let mu = doc.to_measure()?;
            let (u, r) = dilations::naimark_dilation(&mu, *depth)?;
            write_json(&CmvDoc::new(&u, "u0"), out)?;
            Report::new(
                "naimark",
                vec![
                    Check::new("moment_residual", r.max_residual(), dilations::DILATION_TOL.max(tol.residual)),
                    Check::flag("minimal", r.is_minimal()),
                ],
            )
        }
        Command::CyclicModel { unitary, subspace, depth, out } => {
            let u = read_matrix(unitary)?;
            let span = read_matrix(subspace)?;
            if span.nrows() != u.nrows() {
                bail!("subspace vectors have length {}, expected {}", span.nrows(), u.nrows());
            }
            let m = linalg::column_span(&span, tol.rank);
            let (seq, model) = dilations::cyclic_model(&u, &m, *depth)?;
            write_json(&CyclicDoc { sequence: (&seq).into(), cmv: CmvDoc::new(&model, "u0") }, out)?;
            let r = model.unitarity_residual().unwrap_or(f64::INFINITY);
            Report::new("cyclic-model", vec![Check::new("unitarity_residual", r, tol.residual)])
        }
        Command::Verify { seed, cases } => {
            let report = verify::run(*seed, *cases, &tol)?;
            writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&report)?)?;
            return Ok(report);
        }
    };
    Ok(report)
}

fn emit_report(report: &Report, path: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string(report)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            let verify = matches!(cli.command, Command::Verify { .. });
            if !verify || cli.report.is_some() {
                if let Err(e) = emit_report(&report, cli.report.as_deref()) {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.downcast_ref::<CmvError>().is_some()) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
