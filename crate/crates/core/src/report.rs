//! Run reports (JSON) and plain-text witness files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cascade::{
    totals, CascadeConfig, CascadeOutput, LevelStats, SolveOutput, WitnessPoint, WitnessSuperset,
};
use crate::embedding::{Hyperplane, ParameterSample};
use crate::numeric::C64;
use crate::poly::PolynomialSystem;

/// Serializes non-finite floats as `null` and reads `null` back as `+∞`.
/// Condition numbers of singular points are the only non-finite values
/// that reach a report.
pub mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Solve,
    Cascade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub kind: RunKind,
    /// SHA-256 of `system`.
    pub input_digest: String,
    /// The solved system in input-file syntax.
    pub system: String,
    pub seed: u64,
    pub config: CascadeConfig,
    pub parameters: ParameterSample,
    pub stats: Vec<LevelStats>,
    pub totals: LevelStats,
    pub top_dimension: Option<usize>,
    pub supersets: Vec<WitnessSuperset>,
    pub isolated_solutions: Vec<WitnessPoint>,
    pub singular_solutions: Vec<WitnessPoint>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported report version {0}")]
    Version(u32),
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl RunReport {
    pub fn from_cascade(out: &CascadeOutput, cfg: &CascadeConfig) -> Self {
        let system = out.system.to_file_string();
        RunReport {
            version: REPORT_VERSION,
            kind: RunKind::Cascade,
            input_digest: digest(&system),
            system,
            seed: cfg.seed,
            config: cfg.clone(),
            parameters: out.parameters.clone(),
            totals: totals(&out.stats),
            stats: out.stats.clone(),
            top_dimension: out.top_dimension,
            supersets: out.supersets.clone(),
            isolated_solutions: out.isolated_solutions.clone(),
            singular_solutions: out.singular_solutions.clone(),
        }
    }

    pub fn from_solve(f: &PolynomialSystem, out: &SolveOutput, cfg: &CascadeConfig) -> Self {
        let system = f.to_file_string();
        let stats = vec![out.stats.clone()];
        let finite = !(out.isolated_solutions.is_empty() && out.singular_solutions.is_empty());
        RunReport {
            version: REPORT_VERSION,
            kind: RunKind::Solve,
            input_digest: digest(&system),
            system,
            seed: cfg.seed,
            config: cfg.clone(),
            parameters: out.parameters.clone(),
            totals: totals(&stats),
            stats,
            top_dimension: finite.then_some(0),
            supersets: Vec::new(),
            isolated_solutions: out.isolated_solutions.clone(),
            singular_solutions: out.singular_solutions.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let report: RunReport = serde_json::from_str(text)?;
        if report.version != REPORT_VERSION {
            return Err(ReportError::Version(report.version));
        }
        Ok(report)
    }
}

fn push_complex(out: &mut String, v: &C64) {
    write!(out, " ({:?},{:?})", v.re, v.im).unwrap();
}

/// Witness file text. One block per superset:
///
/// ```text
/// dim 1
/// slice 1: (a0) (a1) (a2)
/// point (x1) (x2) multiplicity 2 residual 1e-13 condition inf
/// ```
///
/// Complex numbers are written `(re,im)` with round-trip float formatting.
pub fn write_witness_file(supersets: &[WitnessSuperset]) -> String {
    let mut out = String::new();
    for w in supersets {
        writeln!(out, "dim {}", w.level).unwrap();
        for (j, h) in w.slice.iter().enumerate() {
            write!(out, "slice {}:", j + 1).unwrap();
            push_complex(&mut out, &h.constant);
            h.coefficients
                .iter()
                .for_each(|a| push_complex(&mut out, a));
            out.push('\n');
        }
        for p in &w.points {
            out.push_str("point");
            p.point.iter().for_each(|x| push_complex(&mut out, x));
            writeln!(
                out,
                " multiplicity {} residual {:?} condition {:?}",
                p.multiplicity, p.residual, p.condition
            )
            .unwrap();
        }
    }
    out
}

#[derive(Debug, Error, PartialEq)]
#[error("witness file line {line}: {message}")]
pub struct WitnessFileError {
    pub line: usize,
    pub message: String,
}

fn parse_complex(tok: &str) -> Option<C64> {
    let inner = tok.strip_prefix('(')?.strip_suffix(')')?;
    let (re, im) = inner.split_once(',')?;
    Some(C64::new(re.parse().ok()?, im.parse().ok()?))
}

pub fn parse_witness_file(text: &str) -> Result<Vec<WitnessSuperset>, WitnessFileError> {
    let mut sets: Vec<WitnessSuperset> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: &str| WitnessFileError {
            line,
            message: message.to_string(),
        };
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("dim") => {
                let level = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("expected a dimension"))?;
                sets.push(WitnessSuperset {
                    level,
                    points: Vec::new(),
                    slice: Vec::new(),
                });
            }
            Some("slice") => {
                let set = sets.last_mut().ok_or_else(|| err("slice before dim"))?;
                toks.next().ok_or_else(|| err("expected slice index"))?;
                let vals = toks
                    .map(parse_complex)
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| err("malformed complex number"))?;
                let (constant, coefficients) =
                    vals.split_first().ok_or_else(|| err("empty slice"))?;
                set.slice.push(Hyperplane {
                    constant: *constant,
                    coefficients: coefficients.to_vec(),
                });
            }
            Some("point") => {
                let set = sets.last_mut().ok_or_else(|| err("point before dim"))?;
                let rest: Vec<&str> = toks.collect();
                let tail = rest
                    .iter()
                    .position(|t| *t == "multiplicity")
                    .ok_or_else(|| err("missing multiplicity"))?;
                let point = rest[..tail]
                    .iter()
                    .map(|t| parse_complex(t))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| err("malformed complex number"))?;
                let field = |name: &str| -> Option<&str> {
                    let at = rest.iter().position(|t| *t == name)?;
                    rest.get(at + 1).copied()
                };
                let multiplicity = field("multiplicity")
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("malformed multiplicity"))?;
                let residual = field("residual")
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("malformed residual"))?;
                let condition = field("condition")
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("malformed condition"))?;
                set.points.push(WitnessPoint {
                    point,
                    multiplicity,
                    residual,
                    condition,
                });
            }
            Some(other) => return Err(err(&format!("unknown record '{other}'"))),
            None => unreachable!(),
        }
    }
    Ok(sets)
}
